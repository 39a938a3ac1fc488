//! Greedy sets, the thresholding projection and the restricted truncation
//! operator `U(f, B)`.

pub mod estimate;

use itertools::Itertools;

use crate::bases::Basis;
use crate::error::{input, Error, Result};
use crate::seqcore::{project, IndexSet, SparseVec};

pub use estimate::{
    bidem_quotient, dual_phi_u, e_lower, g_lower, k_lower, k_lower_sweep, lambda_u_lower, phi_l,
    phi_u, running_max, Exactness, ParamEstimate, Quantity, SearchBudget,
};

/// Enumeration bound for tie classes in [`GreedyMode::All`].
pub const MAX_TIE_SETS: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreedyMode {
    /// Ties broken toward the smaller index.
    Canonical,
    /// Every greedy set, in lexicographic order.
    All,
}

/// Support entries ordered by decreasing modulus, smaller index first on ties.
fn by_modulus(f: &SparseVec) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = f.iter().map(|(n, x)| (n, x.abs())).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

pub fn greedy_sets(f: &SparseVec, m: usize, mode: GreedyMode) -> Result<Vec<IndexSet>> {
    if m > f.len() {
        return input(format!(
            "greedy set of size {m} requested from a support of size {}",
            f.len()
        ));
    }
    if m == 0 {
        return Ok(vec![IndexSet::empty()]);
    }
    let order = by_modulus(f);
    if mode == GreedyMode::Canonical {
        return IndexSet::new(order[..m].iter().map(|e| e.0).collect()).map(|s| vec![s]);
    }
    let t = order[m - 1].1;
    let above: Vec<usize> = order.iter().take_while(|e| e.1 > t).map(|e| e.0).collect();
    let ties: Vec<usize> = order.iter().filter(|e| e.1 == t).map(|e| e.0).collect();
    let need = m - above.len();
    if binomial_exceeds(ties.len(), need, MAX_TIE_SETS) {
        return Err(Error::Resource {
            what: format!(
                "tie class of {} indices choosing {need} exceeds the enumeration bound",
                ties.len()
            ),
            reached: MAX_TIE_SETS,
        });
    }
    let mut out: Vec<IndexSet> = ties
        .into_iter()
        .combinations(need)
        .map(|pick| IndexSet::new(above.iter().copied().chain(pick).collect()))
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
    Ok(out)
}

fn binomial_exceeds(n: usize, k: usize, cap: usize) -> bool {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > cap as u128 {
            return true;
        }
    }
    false
}

/// `A ⊆ supp f` and `min_A |f_n| ≥ max_{supp f \ A} |f_n|`.
pub fn is_greedy_set(f: &SparseVec, a: &IndexSet) -> bool {
    if !a.is_subset(&f.support()) {
        return false;
    }
    let mut inside = f64::INFINITY;
    let mut outside = 0.0f64;
    for (n, v) in f.iter() {
        if a.contains(n) {
            inside = inside.min(v.abs());
        } else {
            outside = outside.max(v.abs());
        }
    }
    a.is_empty() || inside >= outside
}

/// `U(f, B) = min_{n∈B} |f_n| · Σ_{n∈B} sgn(f_n) e_n`.
pub fn truncation(f: &SparseVec, b: &IndexSet) -> Result<SparseVec> {
    if b.is_empty() {
        return input("truncation needs a nonempty set");
    }
    let part = project(f, b);
    if part.len() != b.len() {
        return input("truncation set is not inside the support");
    }
    let t = part
        .iter()
        .map(|(_, v)| v.abs())
        .fold(f64::INFINITY, f64::min);
    Ok(part.map_values(|_, v| t * v.signum()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyRecord {
    pub m: usize,
    pub set: IndexSet,
    pub f: SparseVec,
    pub projected_norm: f64,
    pub norm: f64,
    pub ratio: f64,
}

/// The canonical greedy projection of `f` of size `m` evaluated on `basis`.
pub fn greedy_record(basis: &dyn Basis, f: &SparseVec, m: usize) -> Result<GreedyRecord> {
    let set = greedy_sets(f, m, GreedyMode::Canonical)?.remove(0);
    let projected_norm = basis.norm(&project(f, &set))?;
    let norm = basis.norm(f)?;
    Ok(GreedyRecord {
        m,
        set,
        f: f.clone(),
        projected_norm,
        norm,
        ratio: projected_norm / norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(pairs: &[(usize, f64)]) -> SparseVec {
        SparseVec::from_pairs(pairs.iter().copied()).unwrap()
    }

    fn set(v: &[usize]) -> IndexSet {
        IndexSet::new(v.to_vec()).unwrap()
    }

    /// Filters every `m`-subset of the support by the definition.
    fn oracle(f: &SparseVec, m: usize) -> Vec<IndexSet> {
        let supp: Vec<(usize, f64)> = f.iter().collect();
        let n = supp.len();
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            let mut idx = Vec::new();
            for (i, &(k, v)) in supp.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    lo = lo.min(v.abs());
                    idx.push(k);
                } else {
                    hi = hi.max(v.abs());
                }
            }
            if m == 0 || lo >= hi {
                out.push(set(&idx));
            }
        }
        out.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
        out
    }

    #[test]
    fn examples() {
        let f = sv(&[(1, 0.5), (2, -2.0), (3, 2.0)]);
        assert_eq!(
            greedy_sets(&f, 1, GreedyMode::All).unwrap(),
            vec![set(&[2]), set(&[3])]
        );
        let f = sv(&[(1, 3.0), (2, 1.0), (3, 2.0)]);
        assert_eq!(
            greedy_sets(&f, 2, GreedyMode::Canonical).unwrap(),
            vec![set(&[1, 3])]
        );
        assert!(greedy_sets(&f, 4, GreedyMode::Canonical).is_err());
    }

    #[test]
    fn truncation_examples() {
        let f = sv(&[(1, 3.0), (2, -2.0), (3, 1.0)]);
        assert_eq!(
            truncation(&f, &set(&[1, 2])).unwrap(),
            sv(&[(1, 2.0), (2, -2.0)])
        );
        let flat = sv(&[(1, 2.0), (4, -2.0), (5, 2.0)]);
        assert_eq!(
            truncation(&flat, &set(&[1, 4])).unwrap(),
            project(&flat, &set(&[1, 4]))
        );
        assert!(truncation(&f, &set(&[1, 7])).is_err());
        assert!(truncation(&f, &IndexSet::empty()).is_err());
    }

    #[test]
    fn oversized_tie_class_is_refused() {
        let f = SparseVec::from_pairs((1..=40).map(|n| (n, 1.0))).unwrap();
        assert!(matches!(
            greedy_sets(&f, 20, GreedyMode::All),
            Err(Error::Resource { .. })
        ));
        assert_eq!(
            greedy_sets(&f, 20, GreedyMode::Canonical).unwrap()[0],
            IndexSet::interval(1, 20)
        );
    }

    fn small_vec() -> impl Strategy<Value = SparseVec> {
        // few distinct moduli so that ties are common
        prop::collection::btree_map(
            1usize..30,
            (-3i32..=3).prop_filter("nonzero", |v| *v != 0),
            0..=10,
        )
        .prop_map(|m| SparseVec::from_pairs(m.into_iter().map(|(k, v)| (k, v as f64))).unwrap())
    }

    proptest! {
        #[test]
        fn all_mode_matches_oracle(f in small_vec()) {
            for m in 0..=f.len() {
                prop_assert_eq!(greedy_sets(&f, m, GreedyMode::All).unwrap(), oracle(&f, m));
            }
        }

        #[test]
        fn canonical_is_greedy(f in small_vec()) {
            for m in 0..=f.len() {
                let a = greedy_sets(&f, m, GreedyMode::Canonical).unwrap().remove(0);
                prop_assert_eq!(a.len(), m);
                prop_assert!(is_greedy_set(&f, &a));
            }
        }

        #[test]
        fn truncation_is_flat(f in small_vec(), k in 1usize..10) {
            prop_assume!(!f.is_empty());
            let m = k.min(f.len());
            let a = greedy_sets(&f, m, GreedyMode::Canonical).unwrap().remove(0);
            let u = truncation(&f, &a).unwrap();
            let t = project(&f, &a).iter().map(|(_, v)| v.abs()).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(u.support(), a);
            for (n, v) in u.iter() {
                prop_assert_eq!(v.abs(), t);
                prop_assert_eq!(v.signum(), f.get(n).signum());
            }
        }
    }
}
