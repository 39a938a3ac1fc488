//! A bidemocratic total basis of a subspace of `ℓ_p` that is neither
//! quasi-greedy nor Schauder in any order.
//!
//! `y_j = e_{2j} + (s_j / j) e_{2k-1}` for `t_{k-1} < j ≤ t_k`. The
//! coordinate functionals `e*_{2j}` are biorthogonal to `(y_j)` and the
//! annihilators `z*_k = e*_{2k-1} - Σ_{j ∈ D_k} (s_j/j) e*_{2j}` vanish on
//! every `y_j`.

use std::sync::Arc;

use super::{
    check_coefficients, holder_bracket, Basis, DualBound, Element, WitnessKind, WitnessRecord,
};
use crate::error::{input, resource, Error, Result};
use crate::seqcore::{pair, IndexSet, SparseVec};
use crate::spaces::lp_norm;
use crate::weights::Weight;

/// `t_0 = 0` and `t_k` the smallest `t` with `H_t - H_{t_{k-1}} ≥ target(k)`.
pub fn blockwise_t(target: impl Fn(usize) -> f64, blocks: usize) -> Result<Vec<usize>> {
    let mut t = Vec::with_capacity(blocks + 1);
    t.push(0usize);
    for k in 1..=blocks {
        let goal = target(k);
        if !(goal > 0.0 && goal.is_finite()) {
            return input(format!(
                "block target must be positive and finite, got {goal} at k={k}"
            ));
        }
        let mut j = t[k - 1];
        let mut sum = 0.0;
        while sum < goal {
            j += 1;
            sum += 1.0 / j as f64;
        }
        t.push(j);
    }
    Ok(t)
}

/// The default block targets `Λ_k ≥ ln(1+k)/2`.
pub fn default_block_target(k: usize) -> f64 {
    ((1 + k) as f64).ln() / 2.0
}

#[derive(Debug)]
pub struct BlockwiseBasis {
    p: f64,
    q: f64,
    weight: Arc<Weight>,
    t: Vec<usize>,
    window: usize,
}

/// Order in which a block is scanned when choosing `A_k`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum BlockOrder {
    #[default]
    Identity,
    /// The indices of `D_k` in the order the rearranged basis visits them.
    Permutation(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct BlockwiseCertificate {
    pub k: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub theta: f64,
    pub g: WitnessRecord,
    pub f: WitnessRecord,
    /// `‖g_k‖ / ‖f_k‖`.
    pub ratio: f64,
}

/// `Y` over coefficients `1..=window`, ambient `ℓ_p` on coordinates
/// `1..=2·window`.
pub fn build_blockwise(
    p: f64,
    q: f64,
    weight: Arc<Weight>,
    t: Vec<usize>,
    window: usize,
) -> Result<BlockwiseBasis> {
    if !(p > 1.0 && p.is_finite() && q > 1.0 && q.is_finite()) {
        return input(format!(
            "blockwise basis needs 1 < p, q < ∞, got p={p}, q={q}"
        ));
    }
    if t.len() < 2 || t[0] != 0 || t.windows(2).any(|w| w[0] >= w[1]) {
        return input("block ends must start at t_0 = 0 and increase strictly");
    }
    if window == 0 {
        return input("blockwise basis needs a positive window");
    }
    let last = *t.last().unwrap();
    if window > last {
        return resource(
            format!("window {window} runs past the last block end"),
            last,
        );
    }
    if weight.horizon() < last {
        return resource(
            "weight horizon shorter than the last block end",
            weight.horizon(),
        );
    }
    let horizon = weight.horizon();
    if horizon >= 4 {
        let rep = weight.regularity(horizon)?;
        if rep.lrp_b.is_none() {
            return input(format!(
                "primitive weight {} lacks the LRP on 1..={horizon}",
                weight.rule()
            ));
        }
    }
    let s = weight.primitives();
    for n in 1..last {
        // s_{n+1}/(n+1) ≤ s_n/n
        if s[n] * n as f64 > s[n - 1] * (n + 1) as f64 * (1.0 + 1e-12) {
            return input(format!("s_m/m increases at m={n}"));
        }
    }
    Ok(BlockwiseBasis {
        p,
        q,
        weight,
        t,
        window,
    })
}

impl BlockwiseBasis {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn t(&self) -> &[usize] {
        &self.t
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    /// Blocks fully inside the window.
    pub fn blocks(&self) -> usize {
        self.t.partition_point(|&x| x <= self.window) - 1
    }

    /// `k` with `t_{k-1} < j ≤ t_k`.
    pub fn block_of(&self, j: usize) -> usize {
        self.t.partition_point(|&x| x < j)
    }

    fn check_block(&self, k: usize) -> Result<()> {
        if k == 0 {
            return input("blocks are numbered from 1");
        }
        if k > self.blocks() {
            return resource(format!("block {k} not inside the window"), self.blocks());
        }
        Ok(())
    }

    /// `D_k = (t_{k-1}, t_k]`.
    pub fn block(&self, k: usize) -> Result<IndexSet> {
        self.check_block(k)?;
        Ok(IndexSet::interval(self.t[k - 1] + 1, self.t[k]))
    }

    /// `Λ_k = H_{t_k} - H_{t_{k-1}}`.
    pub fn lambda(&self, k: usize) -> Result<f64> {
        self.check_block(k)?;
        Ok(((self.t[k - 1] + 1)..=self.t[k])
            .map(|j| 1.0 / j as f64)
            .sum())
    }

    fn z_coef(&self, j: usize) -> f64 {
        self.weight.primitives()[j - 1] / j as f64
    }

    /// `z*_k` as a vector of ambient coordinates.
    pub fn annihilator(&self, k: usize) -> Result<SparseVec> {
        self.check_block(k)?;
        let mut v = Vec::with_capacity(self.t[k] - self.t[k - 1] + 1);
        let odd = 2 * k - 1;
        let mut pushed = false;
        for j in (self.t[k - 1] + 1)..=self.t[k] {
            if !pushed && odd < 2 * j {
                v.push((odd, 1.0));
                pushed = true;
            }
            v.push((2 * j, -self.z_coef(j)));
        }
        if !pushed {
            v.push((odd, 1.0));
        }
        Ok(SparseVec::from_sorted_unchecked(v))
    }

    /// Rank of the functionals `{e*_{2j} : j ≤ N} ∪ {z*_k : k ≤ K}` on the
    /// coordinates they touch, by dense elimination. Full column rank means
    /// the only vector killed by all of them is 0.
    pub fn totality_rank(&self) -> Result<(usize, usize)> {
        const MAX_DIM: usize = 1500;
        let n = self.window;
        let kmax = self.block_of(n);
        let cols = n + kmax;
        if cols > MAX_DIM {
            return input(format!(
                "totality rank check limited to {MAX_DIM} columns, window needs {cols}"
            ));
        }
        // columns: 0..n for e_{2j}, n..n+kmax for e_{2k-1}
        let col = |c: usize| {
            if c % 2 == 0 {
                c / 2 - 1
            } else {
                n + (c + 1) / 2 - 1
            }
        };
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(cols);
        for j in 1..=n {
            let mut r = vec![0.0; cols];
            r[j - 1] = 1.0;
            rows.push(r);
        }
        for k in 1..=kmax {
            let mut r = vec![0.0; cols];
            r[col(2 * k - 1)] = 1.0;
            for j in (self.t[k - 1] + 1)..=self.t[k].min(n) {
                r[col(2 * j)] = -self.z_coef(j);
            }
            rows.push(r);
        }
        Ok((gauss_rank(&mut rows, 1e-12), cols))
    }
}

fn gauss_rank(rows: &mut [Vec<f64>], tol: f64) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..ncols {
        let Some(piv) =
            (rank..rows.len()).max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs()))
        else {
            break;
        };
        if rows[piv][c].abs() <= tol {
            continue;
        }
        rows.swap(rank, piv);
        let pivot = rows[rank].clone();
        for r in rows.iter_mut().skip(rank + 1) {
            let f = r[c] / pivot[c];
            if f != 0.0 {
                for (x, y) in r.iter_mut().zip(&pivot).skip(c) {
                    *x -= f * y;
                }
            }
        }
        rank += 1;
    }
    rank
}

impl Basis for BlockwiseBasis {
    fn label(&self) -> String {
        format!(
            "blockwise[p={}, q={}, w={}, K={}, N={}]",
            self.p,
            self.q,
            self.weight.rule(),
            self.blocks(),
            self.window
        )
    }

    fn coefficient_range(&self) -> (usize, usize) {
        (1, self.window)
    }

    fn synth(&self, c: &SparseVec) -> Result<Element> {
        check_coefficients(self, c)?;
        let mut even = Vec::with_capacity(c.len());
        let mut odd: Vec<(usize, f64)> = Vec::new();
        for (j, a) in c.iter() {
            even.push((2 * j, a));
            let k = self.block_of(j);
            let z = a * self.z_coef(j);
            match odd.last_mut() {
                Some((kk, v)) if *kk == 2 * k - 1 => *v += z,
                _ => odd.push((2 * k - 1, z)),
            }
        }
        let mut all = even;
        all.extend(odd);
        all.sort_by_key(|e| e.0);
        Ok(Element::Single(SparseVec::from_sorted_unchecked(all)))
    }

    fn dual_eval(&self, x: &Element) -> Result<SparseVec> {
        let f = x.single()?;
        if let Some(n) = f.max_index() {
            if n > 2 * self.window {
                return resource(
                    format!("coordinate {n} beyond the blockwise window"),
                    2 * self.window,
                );
            }
        }
        Ok(SparseVec::from_sorted_unchecked(
            f.iter()
                .filter(|&(n, _)| n % 2 == 0)
                .map(|(n, v)| (n / 2, v))
                .collect(),
        ))
    }

    fn ambient_norm(&self, x: &Element) -> Result<f64> {
        Ok(lp_norm(x.single()?, self.p))
    }

    /// The even coordinates of `Σ c_j y_j` are `c`, so `‖Σ c_j y_j‖_p ≥ ‖c‖_p`.
    fn dual_norm(&self, c: &SparseVec) -> Result<DualBound> {
        check_coefficients(self, c)?;
        holder_bracket(self, c, self.p)
    }

    fn witnesses(&self, m: usize) -> Result<Vec<WitnessRecord>> {
        let mut out = Vec::new();
        for k in 1..=self.blocks() {
            let cert = blockwise_witness(self, k, &BlockOrder::Identity)?;
            if cert.f.set.len() == m {
                out.push(cert.f);
            }
        }
        Ok(out)
    }

    fn structured_sets(&self, m: usize) -> Vec<IndexSet> {
        let mut sets = Vec::new();
        if m >= 1 && m <= self.window {
            sets.push(IndexSet::interval(1, m));
        }
        for k in 1..=self.blocks() {
            let (lo, hi) = (self.t[k - 1] + 1, self.t[k]);
            if hi - lo + 1 >= m && m >= 1 {
                let s = IndexSet::interval(lo, lo + m - 1);
                if !sets.contains(&s) {
                    sets.push(s);
                }
            }
        }
        sets
    }
}

/// `A_k`, `g_k = Σ_{A_k} s_j^{-1} y_j` and `f_k = g_k - h_k` for block `k`
/// scanned in `order`.
pub fn blockwise_witness(
    b: &BlockwiseBasis,
    k: usize,
    order: &BlockOrder,
) -> Result<BlockwiseCertificate> {
    let d = b.block(k)?;
    let seq: Vec<usize> = match order {
        BlockOrder::Identity => d.iter().collect(),
        BlockOrder::Permutation(v) => {
            let mut sorted = v.clone();
            sorted.sort_unstable();
            if sorted != d.as_slice() {
                return input(format!("order for block {k} is not a permutation of D_{k}"));
            }
            v.clone()
        }
    };
    let lambda = b.lambda(k)?;
    let mut gamma = 0.0;
    let mut taken = 0;
    for &j in &seq {
        gamma += 1.0 / j as f64;
        taken += 1;
        if gamma > lambda / 2.0 {
            break;
        }
    }
    if !(gamma > lambda / 2.0) {
        return input(format!("Λ_{k}/2 not reached inside block {k}"));
    }
    let a = IndexSet::new(seq[..taken].to_vec())?;
    let theta = lambda - gamma;
    let gap = gamma - theta;
    if !(gap > 0.0 && gap <= 2.0) {
        return Err(Error::Invariant(format!(
            "Γ_{k} - Θ_{k} = {gap} outside (0, 2]"
        )));
    }
    let s = b.weight.primitives();
    let g = SparseVec::from_pairs(a.iter().map(|j| (j, 1.0 / s[j - 1])))?;
    let f = SparseVec::from_pairs(
        d.iter()
            .map(|j| (j, if a.contains(j) { 1.0 } else { -1.0 } / s[j - 1])),
    )?;
    let ratio = b.norm(&g)? / b.norm(&f)?;
    let g_rec = WitnessRecord::new(
        format!("blockwise g_{k}"),
        WitnessKind::Norm,
        g,
        IndexSet::empty(),
    )?
    .with_bound(gamma)
    .with_note(format!("x*_psi(k)(g_k) = Gamma_k = {gamma}"));
    let f_rec = WitnessRecord::new(format!("blockwise f_{k}"), WitnessKind::Projection, f, a)?
        .with_note(format!(
            "Lambda_k={lambda}, Gamma_k={gamma}, Theta_k={theta}"
        ));
    Ok(BlockwiseCertificate {
        k,
        lambda,
        gamma,
        theta,
        g: g_rec,
        f: f_rec,
        ratio,
    })
}

/// `x*_{ψ(k)}(Σ c_j y_j)`.
pub fn psi_pairing(b: &BlockwiseBasis, k: usize, c: &SparseVec) -> Result<f64> {
    let x = b.synth(c)?;
    Ok(pair(x.single()?, &SparseVec::unit(2 * k - 1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const EXPECTED_T: [usize; 13] = [
        0, 1, 3, 7, 17, 43, 115, 327, 983, 3110, 10316, 35737, 128853,
    ];

    fn basis(blocks: usize) -> BlockwiseBasis {
        let t = blockwise_t(default_block_target, blocks).unwrap();
        let last = *t.last().unwrap();
        let w = Arc::new(Weight::power(2.0, last.max(4)).unwrap());
        build_blockwise(2.0, 2.0, w, t, last).unwrap()
    }

    #[test]
    fn block_ends_match_recomputed_harmonic_gaps() {
        let t = blockwise_t(default_block_target, 12).unwrap();
        assert_eq!(t, EXPECTED_T);
        // independent check: each t_k is the first index clearing the target
        for k in 1..t.len() {
            let gap = |end: usize| ((t[k - 1] + 1)..=end).map(|j| 1.0 / j as f64).sum::<f64>();
            assert!(gap(t[k]) >= default_block_target(k));
            assert!(t[k] == t[k - 1] + 1 || gap(t[k] - 1) < default_block_target(k));
        }
    }

    #[test]
    fn first_vector() {
        let b = basis(4);
        let y1 = b.synth(&SparseVec::unit(1).unwrap()).unwrap();
        assert_eq!(
            y1.single().unwrap(),
            &SparseVec::from_pairs([(1, 1.0), (2, 1.0)]).unwrap()
        );
        assert_relative_eq!(b.norm(&SparseVec::unit(1).unwrap()).unwrap(), 2f64.sqrt());
    }

    #[test]
    fn biorthogonal_and_annihilated() {
        let b = basis(6);
        for j in 1..=b.window {
            let e = SparseVec::unit(j).unwrap();
            let y = b.synth(&e).unwrap();
            assert_eq!(b.dual_eval(&y).unwrap(), e);
            for k in 1..=b.blocks() {
                assert_eq!(pair(&b.annihilator(k).unwrap(), y.single().unwrap()), 0.0);
            }
        }
    }

    #[test]
    fn totality_rank_is_full() {
        let b = basis(6);
        let (rank, cols) = b.totality_rank().unwrap();
        assert_eq!(rank, cols);
    }

    #[test]
    fn certificates() {
        let b = basis(8);
        for k in 1..=8 {
            let c = blockwise_witness(&b, k, &BlockOrder::Identity).unwrap();
            assert!(c.gamma - c.theta > 0.0 && c.gamma - c.theta <= 2.0);
            assert_relative_eq!(
                psi_pairing(&b, k, &c.g.coefficients).unwrap(),
                c.gamma,
                max_relative = 1e-12
            );
            // g_k is a greedy projection of f_k
            assert!(crate::greedy::is_greedy_set(&c.f.coefficients, &c.f.set));
            assert_relative_eq!(c.f.evaluate(&b).unwrap(), c.ratio, max_relative = 1e-12);
        }
    }

    #[test]
    fn permuted_order() {
        let b = basis(5);
        let mut order: Vec<usize> = b.block(5).unwrap().iter().collect();
        order.reverse();
        let c = blockwise_witness(&b, 5, &BlockOrder::Permutation(order)).unwrap();
        assert!(c.gamma > c.lambda / 2.0);
        assert!(blockwise_witness(&b, 5, &BlockOrder::Permutation(vec![1, 2])).is_err());
    }

    #[test]
    fn rejects_bad_weights_and_windows() {
        let t = blockwise_t(default_block_target, 4).unwrap();
        // w_n = n: s_m/m increases
        let rule = crate::weights::WeightRule::Table((1..=100).map(|n| n as f64).collect());
        let grow = Arc::new(Weight::new(rule, 100).unwrap());
        assert!(build_blockwise(2.0, 2.0, grow, t.clone(), 17).is_err());
        let w = Arc::new(Weight::power(2.0, 100).unwrap());
        assert!(matches!(
            build_blockwise(2.0, 2.0, w.clone(), t.clone(), 18),
            Err(Error::Resource { .. })
        ));
        let short = Arc::new(Weight::power(2.0, 10).unwrap());
        assert!(matches!(
            build_blockwise(2.0, 2.0, short, t, 17),
            Err(Error::Resource { .. })
        ));
    }
}
