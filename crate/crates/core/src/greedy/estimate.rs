//! Certified estimates of the sup-type parameters of a basis.
//!
//! Every non-exact value is attained by a stored witness, so re-evaluating
//! the witness reproduces it. Random search runs one independently seeded
//! generator per `(quantity, m, trial)` cell, which makes results
//! independent of thread scheduling.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{greedy_sets, is_greedy_set, truncation, GreedyMode};
use crate::bases::diamond::{diamond_conditionality_witness, diamond_profiles};
use crate::bases::{Basis, WitnessKind, WitnessRecord};
use crate::error::{input, Error, Result};
use crate::seqcore::{project, IndexSet, SparseVec};

#[derive(Clone, Debug, PartialEq)]
pub struct SearchBudget {
    pub seed: u64,
    /// Random trials per `(basis, m)`.
    pub trials: usize,
    /// Sets up to this size get every sign pattern tried.
    pub exhaustive_signs_max: usize,
    /// Random sign patterns per larger candidate set.
    pub random_signs: usize,
    /// Structured candidate sets probed per `m`.
    pub structured_max: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            seed: 0,
            trials: 10_000,
            exhaustive_signs_max: 20,
            random_signs: 64,
            structured_max: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantity {
    PhiU,
    PhiL,
    DualPhiU,
    BidemQuotient,
    GLower,
    KLower,
    LambdaULower,
    ELower,
}

impl Quantity {
    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::PhiU => "phi_u",
            Quantity::PhiL => "phi_l",
            Quantity::DualPhiU => "dual_phi_u",
            Quantity::BidemQuotient => "bidem_quotient",
            Quantity::GLower => "g_lower",
            Quantity::KLower => "k_lower",
            Quantity::LambdaULower => "lambda_u_lower",
            Quantity::ELower => "E_lower",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exactness {
    Exact,
    /// Lower and upper bounds agree on every probed candidate.
    Bracketed,
    CertifiedLowerBound,
    /// Upper bound on an infimum.
    CertifiedUpperBound,
}

impl Exactness {
    fn weakest(self, other: Exactness) -> Exactness {
        use Exactness::*;
        match (self, other) {
            (Exact, x) | (x, Exact) => x,
            (Bracketed, x) | (x, Bracketed) => x,
            (x, _) => x,
        }
    }
}

impl fmt::Display for Exactness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exactness::Exact => "exact",
            Exactness::Bracketed => "bracketed",
            Exactness::CertifiedLowerBound => "certified-lower-bound",
            Exactness::CertifiedUpperBound => "certified-upper-bound",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamEstimate {
    pub quantity: Quantity,
    pub m: usize,
    pub value: f64,
    pub witness: Option<WitnessRecord>,
    pub exactness: Exactness,
}

impl ParamEstimate {
    /// Re-evaluates the stored witness; `None` when there is none.
    pub fn recheck(&self, basis: &dyn Basis) -> Result<Option<f64>> {
        self.witness.as_ref().map(|w| w.evaluate(basis)).transpose()
    }

    /// Re-evaluates a cross-ratio witness on explicit components.
    pub fn recheck_pair(&self, bx: &dyn Basis, by: &dyn Basis) -> Result<Option<f64>> {
        self.witness
            .as_ref()
            .map(|w| w.evaluate_pair(bx, by))
            .transpose()
    }

    /// Whether the witness reproduces `value` to relative `1e-9`.
    pub fn certified(&self, basis: &dyn Basis) -> Result<bool> {
        Ok(match self.recheck(basis)? {
            Some(v) => (v - self.value).abs() <= 1e-9 * self.value.abs().max(1e-300),
            None => true,
        })
    }
}

/// `g_m = max_{k ≤ m} ḡ_k` from per-`m` values.
pub fn running_max(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(f64::NEG_INFINITY, |acc, &v| {
            *acc = acc.max(v);
            Some(*acc)
        })
        .collect()
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator owned by one search cell.
pub fn cell_rng(seed: u64, tag: u64, m: usize, trial: usize) -> ChaCha8Rng {
    let h = splitmix(splitmix(splitmix(seed) ^ tag) ^ m as u64);
    ChaCha8Rng::seed_from_u64(splitmix(h ^ trial as u64))
}

/// `±10^{U[-2,0]}`.
fn heavy(rng: &mut ChaCha8Rng) -> f64 {
    let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    s * 10f64.powf(rng.gen_range(-2.0..=0.0))
}

#[derive(Clone, Debug)]
struct Cand {
    value: f64,
    order: usize,
    coeffs: SparseVec,
    set: IndexSet,
}

fn better(a: Option<Cand>, b: Option<Cand>) -> Option<Cand> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if b.value > a.value || (b.value == a.value && b.order < a.order) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

fn search<F>(n: usize, eval: F) -> Result<Option<Cand>>
where
    F: Fn(usize) -> Result<Option<Cand>> + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(eval)
        .try_reduce(|| None, |a, b| Ok(better(a, b)))
}

fn window_len(b: &dyn Basis) -> (usize, usize) {
    let (lo, hi) = b.coefficient_range();
    (lo, hi + 1 - lo)
}

fn check_m(b: &dyn Basis, m: usize) -> Result<()> {
    let (_, len) = window_len(b);
    if m == 0 || m > len {
        return input(format!("m = {m} outside 1..={len} for {}", b.label()));
    }
    Ok(())
}

fn signed(set: &IndexSet, bits: u64) -> SparseVec {
    SparseVec::from_sorted_unchecked(
        set.iter()
            .enumerate()
            .map(|(j, n)| {
                (
                    n,
                    if j < 64 && bits >> j & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    },
                )
            })
            .collect(),
    )
}

fn random_signed(set: &IndexSet, rng: &mut ChaCha8Rng) -> SparseVec {
    SparseVec::from_sorted_unchecked(
        set.iter()
            .map(|n| (n, if rng.gen::<bool>() { 1.0 } else { -1.0 }))
            .collect(),
    )
}

/// A random `m`-set of the window: uniform, or a structured set with a few
/// indices swapped out.
fn random_set(b: &dyn Basis, m: usize, pool: &[IndexSet], rng: &mut ChaCha8Rng) -> IndexSet {
    let (lo, len) = window_len(b);
    if !pool.is_empty() && rng.gen::<bool>() {
        let base = &pool[rng.gen_range(0..pool.len())];
        let mut s: BTreeSet<usize> = base.iter().collect();
        let swaps = rng.gen_range(0..=m / 4);
        for _ in 0..swaps {
            let out = *s.iter().nth(rng.gen_range(0..s.len())).unwrap();
            let fresh = lo + rng.gen_range(0..len);
            if !s.contains(&fresh) {
                s.remove(&out);
                s.insert(fresh);
            }
        }
        return IndexSet::from_sorted_unchecked(s.into_iter().collect());
    }
    let mut v: Vec<usize> = sample(rng, len, m).into_iter().map(|i| lo + i).collect();
    v.sort_unstable();
    IndexSet::from_sorted_unchecked(v)
}

/// A heavy-tailed random vector whose support contains `a`.
fn random_vector(b: &dyn Basis, a: &IndexSet, rng: &mut ChaCha8Rng) -> SparseVec {
    let (lo, len) = window_len(b);
    let m = a.len();
    let extra = rng.gen_range(0..=m.min(len - m));
    let mut idx: BTreeSet<usize> = a.iter().collect();
    while idx.len() < m + extra {
        idx.insert(lo + rng.gen_range(0..len));
    }
    SparseVec::from_sorted_unchecked(idx.into_iter().map(|n| (n, heavy(rng))).collect())
}

/// Structured sets of size `m`, then sets read off the witnesses.
fn candidate_sets(b: &dyn Basis, m: usize, budget: &SearchBudget) -> Result<Vec<IndexSet>> {
    let (lo, len) = window_len(b);
    let mut sets: Vec<IndexSet> = Vec::new();
    let mut push = |s: IndexSet| {
        if s.len() == m && s.iter().all(|n| n >= lo && n < lo + len) && !sets.contains(&s) {
            sets.push(s);
        }
    };
    for s in b.structured_sets(m) {
        push(s);
    }
    for w in b.witnesses(m)? {
        push(w.set.clone());
        if w.coefficients.len() >= m {
            push(greedy_sets(&w.coefficients, m, GreedyMode::Canonical)?.remove(0));
        }
    }
    sets.truncate(budget.structured_max.max(1));
    Ok(sets)
}

/// Max (or min, with `sign = -1`) of `eval` over signed indicators of the
/// candidate sets and of random sets.
fn indicator_search<F>(
    b: &dyn Basis,
    m: usize,
    budget: &SearchBudget,
    quantity: Quantity,
    sign: f64,
    eval: F,
) -> Result<Option<Cand>>
where
    F: Fn(&SparseVec) -> Result<f64> + Sync + Send,
{
    let sets = candidate_sets(b, m, budget)?;
    let tag = quantity.tag();
    let mut best = None;
    let mut order = 0usize;
    for (si, set) in sets.iter().enumerate() {
        let exhaustive = m <= budget.exhaustive_signs_max.min(30);
        let n = if exhaustive {
            1usize << (m - 1)
        } else {
            budget.random_signs + 1
        };
        let base = order;
        let cand = search(n, |i| {
            let c = if exhaustive || i == 0 {
                signed(set, i as u64)
            } else {
                random_signed(
                    set,
                    &mut cell_rng(budget.seed, tag ^ 0x51, m, si * (n + 1) + i),
                )
            };
            let v = eval(&c)?;
            Ok(v.is_finite().then(|| Cand {
                value: sign * v,
                order: base + i,
                set: set.clone(),
                coeffs: c,
            }))
        })?;
        best = better(best, cand);
        order += n;
    }
    let base = order;
    let cand = search(budget.trials, |t| {
        let mut rng = cell_rng(budget.seed, tag, m, t);
        let set = random_set(b, m, &sets, &mut rng);
        let c = random_signed(&set, &mut rng);
        let v = eval(&c)?;
        Ok(v.is_finite().then(|| Cand {
            value: sign * v,
            order: base + t,
            set,
            coeffs: c,
        }))
    })?;
    Ok(better(best, cand))
}

fn prefix_indicator(b: &dyn Basis, m: usize) -> SparseVec {
    let (lo, _) = b.coefficient_range();
    SparseVec::from_sorted_unchecked((lo..lo + m).map(|n| (n, 1.0)).collect())
}

fn no_candidate(q: Quantity, m: usize) -> Error {
    Error::Invariant(format!("{q} at m={m}: no finite candidate"))
}

/// `φ_u(m) = sup ‖1_{ε,A}‖` over `|A| ≤ m`.
pub fn phi_u(b: &dyn Basis, m: usize, budget: &SearchBudget) -> Result<ParamEstimate> {
    check_m(b, m)?;
    let q = Quantity::PhiU;
    if b.democracy_exact() {
        let c = prefix_indicator(b, m);
        let value = b.norm(&c)?;
        return Ok(ParamEstimate {
            quantity: q,
            m,
            value,
            witness: Some(WitnessRecord::new(
                "1_{1..m}",
                WitnessKind::Norm,
                c,
                IndexSet::empty(),
            )?),
            exactness: Exactness::Exact,
        });
    }
    let best =
        indicator_search(b, m, budget, q, 1.0, |c| b.norm(c))?.ok_or_else(|| no_candidate(q, m))?;
    Ok(ParamEstimate {
        quantity: q,
        m,
        value: best.value,
        witness: Some(WitnessRecord::new(
            format!("signed indicator, |A|={m}"),
            WitnessKind::Norm,
            best.coeffs,
            best.set,
        )?),
        exactness: Exactness::CertifiedLowerBound,
    })
}

/// `φ_l(m) = inf ‖1_{ε,A}‖` over `|A| ≥ m`; off the exact cases the
/// smallest probed value bounds the infimum from above.
pub fn phi_l(b: &dyn Basis, m: usize, budget: &SearchBudget) -> Result<ParamEstimate> {
    check_m(b, m)?;
    let q = Quantity::PhiL;
    if b.democracy_exact() {
        let mut e = phi_u(b, m, budget)?;
        e.quantity = q;
        return Ok(e);
    }
    let best = indicator_search(b, m, budget, q, -1.0, |c| b.norm(c))?
        .ok_or_else(|| no_candidate(q, m))?;
    Ok(ParamEstimate {
        quantity: q,
        m,
        value: -best.value,
        witness: Some(WitnessRecord::new(
            format!("signed indicator, |A|={m}"),
            WitnessKind::Norm,
            best.coeffs,
            best.set,
        )?),
        exactness: Exactness::CertifiedUpperBound,
    })
}

/// `φ*_u(m) = sup ‖1*_{ε,A}‖`.
pub fn dual_phi_u(b: &dyn Basis, m: usize, budget: &SearchBudget) -> Result<ParamEstimate> {
    check_m(b, m)?;
    let q = Quantity::DualPhiU;
    if b.dual_democracy_exact() {
        let c = prefix_indicator(b, m);
        let d = b.dual_norm(&c)?;
        return Ok(ParamEstimate {
            quantity: q,
            m,
            value: d.lower,
            witness: Some(WitnessRecord::new(
                "1*_{1..m}",
                WitnessKind::DualNorm,
                c,
                IndexSet::empty(),
            )?),
            exactness: if d.is_pinned() {
                Exactness::Exact
            } else {
                Exactness::CertifiedLowerBound
            },
        });
    }
    let pinned = std::sync::atomic::AtomicBool::new(true);
    let best = indicator_search(b, m, budget, q, 1.0, |c| {
        let d = b.dual_norm(c)?;
        if !d.is_pinned() {
            pinned.store(false, std::sync::atomic::Ordering::Relaxed);
        }
        Ok(d.lower)
    })?
    .ok_or_else(|| no_candidate(q, m))?;
    Ok(ParamEstimate {
        quantity: q,
        m,
        value: best.value,
        witness: Some(WitnessRecord::new(
            format!("dual signed indicator, |A|={m}"),
            WitnessKind::DualNorm,
            best.coeffs,
            best.set,
        )?),
        exactness: if pinned.into_inner() {
            Exactness::Bracketed
        } else {
            Exactness::CertifiedLowerBound
        },
    })
}

/// `φ_u(m) φ*_u(m) / m`, never below 1 since `m ≤ φ(m) φ*(m)`.
pub fn bidem_quotient(b: &dyn Basis, m: usize, budget: &SearchBudget) -> Result<ParamEstimate> {
    let u = phi_u(b, m, budget)?;
    let d = dual_phi_u(b, m, budget)?;
    let raw = u.value * d.value / m as f64;
    let exactness = u.exactness.weakest(d.exactness);
    let value = if exactness == Exactness::CertifiedLowerBound {
        raw.max(1.0)
    } else if raw < 1.0 - 1e-9 {
        return Err(Error::Invariant(format!(
            "bidemocracy quotient {raw} < 1 at m={m} with {exactness} inputs"
        )));
    } else {
        raw
    };
    Ok(ParamEstimate {
        quantity: Quantity::BidemQuotient,
        m,
        value,
        witness: None,
        exactness,
    })
}

/// Witness projections of size `m`; with `greedy_only`, only those whose
/// set is a greedy set of the coefficients.
fn projection_pool(b: &dyn Basis, m: usize, greedy_only: bool) -> Result<Vec<WitnessRecord>> {
    let mut pool: Vec<WitnessRecord> = b
        .witnesses(m)?
        .into_iter()
        .filter(|w| w.kind == WitnessKind::Projection && w.set.len() == m)
        .filter(|w| !greedy_only || is_greedy_set(&w.coefficients, &w.set))
        .collect();
    // component witnesses of a diamond: (c, ±c) interleaved keeps greedy sets
    if let Some((x, y)) = b.components() {
        if m % 2 == 0 {
            for (comp, s) in [(x, 1.0), (y, -1.0)] {
                for w in comp.witnesses(m / 2)? {
                    if w.kind != WitnessKind::Projection || w.set.len() != m / 2 {
                        continue;
                    }
                    if greedy_only && !is_greedy_set(&w.coefficients, &w.set) {
                        continue;
                    }
                    let c = SparseVec::from_sorted_unchecked(
                        w.coefficients
                            .iter()
                            .flat_map(|(n, v)| [(2 * n - 1, v), (2 * n, s * v)])
                            .collect(),
                    );
                    let set = IndexSet::from_sorted_unchecked(
                        w.set.iter().flat_map(|n| [2 * n - 1, 2 * n]).collect(),
                    );
                    if c.max_index()
                        .map_or(false, |n| n <= b.coefficient_range().1)
                    {
                        pool.push(WitnessRecord::new(
                            format!("diamond lift of {}", w.label),
                            WitnessKind::Projection,
                            c,
                            set,
                        )?);
                    }
                }
            }
        }
    }
    Ok(pool)
}

fn pool_best(b: &dyn Basis, pool: Vec<WitnessRecord>) -> Result<Option<(f64, WitnessRecord)>> {
    let mut best: Option<(f64, WitnessRecord)> = None;
    for w in pool {
        let v = w.evaluate(b)?;
        if v.is_finite() && best.as_ref().map_or(true, |(bv, _)| v > *bv) {
            best = Some((v, w));
        }
    }
    Ok(best)
}

fn finish(
    q: Quantity,
    m: usize,
    kind: WitnessKind,
    pool: Option<(f64, WitnessRecord)>,
    random: Option<Cand>,
) -> Result<ParamEstimate> {
    let witness = match (pool, random) {
        (Some((pv, pw)), Some(c)) if c.value <= pv => (pv, pw),
        (_, Some(c)) => (
            c.value,
            WitnessRecord::new(
                format!("{q} random trial {}", c.order),
                kind,
                c.coeffs,
                c.set,
            )?,
        ),
        (Some(p), None) => p,
        (None, None) => return Err(no_candidate(q, m)),
    };
    Ok(ParamEstimate {
        quantity: q,
        m,
        value: witness.0,
        witness: Some(witness.1),
        exactness: Exactness::CertifiedLowerBound,
    })
}

/// Lower bound on `ḡ_m = sup ‖S_A f‖/‖f‖` over greedy sets `A` of size `m`.
pub fn g_lower(b: &dyn Basis, m: usize, budget: &SearchBudget) -> Result<ParamEstimate> {
    check_m(b, m)?;
    let q = Quantity::GLower;
    let pool = pool_best(b, projection_pool(b, m, true)?)?;
    let sets = candidate_sets(b, m, budget)?;
    let random = search(budget.trials, |t| {
        let mut rng = cell_rng(budget.seed, q.tag(), m, t);
        let a = random_set(b, m, &sets, &mut rng);
        let f = random_vector(b, &a, &mut rng);
        let g = greedy_sets(&f, m, GreedyMode::Canonical)?.remove(0);
        let v = b.norm(&project(&f, &g))? / b.norm(&f)?;
        Ok(v.is_finite().then(|| Cand {
            value: v,
            order: t,
            coeffs: f,
            set: g,
        }))
    })?;
    finish(q, m, WitnessKind::Projection, pool, random)
}

/// Lower bound on `k_m = sup_{|A| = m} ‖S_A‖`.
///
/// For a diamond basis the pool also holds the conditionality witnesses
/// built from the best cross ratios found in both directions.
pub fn k_lower(b: &dyn Basis, m: usize, budget: &SearchBudget) -> Result<ParamEstimate> {
    check_m(b, m)?;
    let q = Quantity::KLower;
    let mut pool = projection_pool(b, m, false)?;
    let base = prefix_indicator(b, m);
    pool.push(WitnessRecord::new(
        "1_{1..m}",
        WitnessKind::Projection,
        base.clone(),
        base.support(),
    )?);
    if let Some((x, y)) = b.components() {
        let n = b.coefficient_range().1 / 2;
        if m <= n {
            for (bx, by) in [(&x, &y), (&y, &x)] {
                let e = e_lower(bx.as_ref(), by.as_ref(), m, budget)?;
                if let Some(w) = e.witness {
                    let dw =
                        diamond_conditionality_witness(x.as_ref(), y.as_ref(), &w.coefficients)?;
                    pool.push(dw.plus);
                    pool.push(dw.minus);
                }
            }
        }
    }
    let pool = pool_best(b, pool)?;
    let sets = candidate_sets(b, m, budget)?;
    let random = search(budget.trials, |t| {
        let mut rng = cell_rng(budget.seed, q.tag(), m, t);
        let a = random_set(b, m, &sets, &mut rng);
        let f = random_vector(b, &a, &mut rng);
        let v = b.norm(&project(&f, &a))? / b.norm(&f)?;
        Ok(v.is_finite().then(|| Cand {
            value: v,
            order: t,
            coeffs: f,
            set: a,
        }))
    })?;
    finish(q, m, WitnessKind::Projection, pool, random)
}

/// [`k_lower`] over increasing `ms`, also offering each previous best
/// witness padded with the smallest free indices off `supp f ∪ A`. Padding
/// leaves `S_A f` unchanged, so the bounds are nondecreasing in `m`.
pub fn k_lower_sweep(
    b: &dyn Basis,
    ms: &[usize],
    budget: &SearchBudget,
) -> Result<Vec<ParamEstimate>> {
    let (lo, hi) = b.coefficient_range();
    let mut out: Vec<ParamEstimate> = Vec::with_capacity(ms.len());
    for &m in ms {
        let mut est = k_lower(b, m, budget)?;
        if let Some(prev) = out.last() {
            if prev.value > est.value && prev.m <= m {
                if let Some(w) = &prev.witness {
                    let taken: BTreeSet<usize> = w
                        .coefficients
                        .iter()
                        .map(|(n, _)| n)
                        .chain(w.set.iter())
                        .collect();
                    let extra: Vec<usize> = (lo..=hi)
                        .filter(|n| !taken.contains(n))
                        .take(m - w.set.len())
                        .collect();
                    if extra.len() == m - w.set.len() {
                        let set = IndexSet::new(w.set.iter().chain(extra).collect())?;
                        let carried = WitnessRecord::new(
                            format!("{} padded to |A|={m}", w.label),
                            WitnessKind::Projection,
                            w.coefficients.clone(),
                            set,
                        )?;
                        let v = carried.evaluate(b)?;
                        if v > est.value {
                            est.value = v;
                            est.witness = Some(carried);
                        }
                    }
                }
            }
        }
        out.push(est);
    }
    Ok(out)
}

/// Lower bound on `sup ‖U(f, A)‖/‖f‖` over greedy sets `A` of size `m`;
/// `Λ_u` is the running maximum over `m`.
pub fn lambda_u_lower(b: &dyn Basis, m: usize, budget: &SearchBudget) -> Result<ParamEstimate> {
    check_m(b, m)?;
    let q = Quantity::LambdaULower;
    let mut pool: Vec<WitnessRecord> = projection_pool(b, m, true)?
        .into_iter()
        .map(|w| {
            WitnessRecord::new(
                format!("truncation of {}", w.label),
                WitnessKind::Truncation,
                w.coefficients,
                w.set,
            )
        })
        .collect::<Result<_>>()?;
    let base = prefix_indicator(b, m);
    pool.push(WitnessRecord::new(
        "1_{1..m}",
        WitnessKind::Truncation,
        base.clone(),
        base.support(),
    )?);
    let pool = pool_best(b, pool)?;
    let sets = candidate_sets(b, m, budget)?;
    let random = search(budget.trials, |t| {
        let mut rng = cell_rng(budget.seed, q.tag(), m, t);
        let a = random_set(b, m, &sets, &mut rng);
        let f = random_vector(b, &a, &mut rng);
        let g = greedy_sets(&f, m, GreedyMode::Canonical)?.remove(0);
        let v = b.norm(&truncation(&f, &g)?)? / b.norm(&f)?;
        Ok(v.is_finite().then(|| Cand {
            value: v,
            order: t,
            coeffs: f,
            set: g,
        }))
    })?;
    finish(q, m, WitnessKind::Truncation, pool, random)
}

/// Lower bound on `E_m[X, Y] = sup ‖Σ a_n x_n‖/‖Σ a_n y_n‖` over `a`
/// supported on at most `m` indices.
pub fn e_lower(
    bx: &dyn Basis,
    by: &dyn Basis,
    m: usize,
    budget: &SearchBudget,
) -> Result<ParamEstimate> {
    let q = Quantity::ELower;
    let ((xlo, xhi), (ylo, yhi)) = (bx.coefficient_range(), by.coefficient_range());
    let (lo, hi) = (xlo.max(ylo), xhi.min(yhi));
    if m == 0 || hi < lo || m > hi + 1 - lo {
        return input(format!("m = {m} outside the common window {lo}..={hi}"));
    }
    let ratio = |a: &SparseVec| -> Result<f64> { Ok(bx.norm(a)? / by.norm(a)?) };
    let mut pool = Vec::new();
    if lo == 1 {
        for a in diamond_profiles(bx, by, m)? {
            let set = a.support();
            pool.push(WitnessRecord::new(
                format!("profile, m={m}"),
                WitnessKind::CrossRatio,
                a,
                set,
            )?);
        }
    }
    let mut pool_best: Option<(f64, WitnessRecord)> = None;
    for w in pool {
        let v = ratio(&w.coefficients)?;
        if v.is_finite() && pool_best.as_ref().map_or(true, |(bv, _)| v > *bv) {
            pool_best = Some((v, w));
        }
    }
    let len = hi + 1 - lo;
    let random = search(budget.trials, |t| {
        let mut rng = cell_rng(budget.seed, q.tag(), m, t);
        let k = rng.gen_range(1..=m);
        let mut idx: Vec<usize> = if rng.gen::<bool>() {
            sample(&mut rng, len, k)
                .into_iter()
                .map(|i| lo + i)
                .collect()
        } else {
            sample(&mut rng, m.min(len), k)
                .into_iter()
                .map(|i| lo + i)
                .collect()
        };
        idx.sort_unstable();
        let a = SparseVec::from_sorted_unchecked(
            idx.into_iter().map(|n| (n, heavy(&mut rng))).collect(),
        );
        let v = ratio(&a)?;
        let set = a.support();
        Ok(v.is_finite().then(|| Cand {
            value: v,
            order: t,
            coeffs: a,
            set,
        }))
    })?;
    finish(q, m, WitnessKind::CrossRatio, pool_best, random)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{build_diamond, build_kt, UnitBasis};
    use crate::spaces::Space;
    use crate::weights::{harmonic, Weight};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn small() -> SearchBudget {
        SearchBudget {
            trials: 200,
            exhaustive_signs_max: 8,
            ..SearchBudget::default()
        }
    }

    fn unit(space: Space, n: usize) -> UnitBasis {
        UnitBasis::new(space, n).unwrap()
    }

    #[test]
    fn symmetric_cases_are_exact() {
        let l2 = unit(Space::lp(2.0).unwrap(), 50);
        let e = phi_u(&l2, 9, &small()).unwrap();
        assert_eq!((e.value, e.exactness), (3.0, Exactness::Exact));
        assert_eq!(phi_l(&l2, 4, &small()).unwrap().value, 2.0);
        assert_relative_eq!(dual_phi_u(&l2, 16, &small()).unwrap().value, 4.0);
        for m in 1..=20 {
            assert_relative_eq!(
                bidem_quotient(&l2, m, &small()).unwrap().value,
                1.0,
                max_relative = 1e-12
            );
        }
        let w = Arc::new(Weight::power(2.0, 200).unwrap());
        let d11 = unit(Space::lorentz(w.clone(), 1.0).unwrap(), 200);
        for m in [1, 5, 40] {
            assert_relative_eq!(
                phi_u(&d11, m, &small()).unwrap().value,
                w.primitive(m).unwrap(),
                max_relative = 1e-12
            );
            let expect = (1..=m)
                .map(|k| k as f64 / w.primitive(k).unwrap())
                .fold(0.0, f64::max);
            assert_relative_eq!(
                dual_phi_u(&d11, m, &small()).unwrap().value,
                expect,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn kt_is_one_bidemocratic() {
        let (_, _, b) = build_kt(2.0, 6).unwrap();
        for m in [1, 3, 10] {
            let u = phi_u(&b, m, &small()).unwrap();
            assert_relative_eq!(u.value, (m as f64).sqrt(), max_relative = 1e-9);
            let d = dual_phi_u(&b, m, &small()).unwrap();
            assert_eq!(d.exactness, Exactness::Bracketed);
            assert_relative_eq!(d.value, (m as f64).sqrt(), max_relative = 1e-9);
            assert_relative_eq!(
                bidem_quotient(&b, m, &small()).unwrap().value,
                1.0,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn kt_growth_and_ceiling() {
        let (_, _, b) = build_kt(2.0, 8).unwrap();
        for m in 2..=8 {
            let g = g_lower(&b, m, &small()).unwrap();
            assert!(g.value >= harmonic(m).sqrt() / (2.0 * 2f64.sqrt()));
            assert!(g.certified(&b).unwrap());
            let k = k_lower(&b, m, &small()).unwrap();
            assert!(k.value >= g.value * (1.0 - 1e-12) || k.value >= 1.0);
            assert!(k.value <= (harmonic(m).sqrt() / 2.0).max(1.0) * (1.0 + 1e-9));
            assert!(k.certified(&b).unwrap());
        }
    }

    #[test]
    fn unconditional_ratios_stay_below_one() {
        let l2 = unit(Space::lp(2.0).unwrap(), 40);
        for m in [1, 4, 12] {
            assert!(g_lower(&l2, m, &small()).unwrap().value <= 1.0 + 1e-12);
            assert!(k_lower(&l2, m, &small()).unwrap().value <= 1.0 + 1e-12);
            let l = lambda_u_lower(&l2, m, &small()).unwrap();
            assert!(l.value <= 1.0 + 1e-9 && l.value >= 1.0 - 1e-12);
            assert!(l.certified(&l2).unwrap());
        }
    }

    #[test]
    fn cross_ratios() {
        let l1 = unit(Space::lp(1.0).unwrap(), 30);
        let l2 = unit(Space::lp(2.0).unwrap(), 30);
        let e = e_lower(&l1, &l2, 4, &small()).unwrap();
        assert_relative_eq!(e.value, 2.0, max_relative = 1e-12);
        assert_relative_eq!(e.recheck_pair(&l1, &l2).unwrap().unwrap(), e.value);
        assert_relative_eq!(
            e_lower(&l2, &l2, 6, &small()).unwrap().value,
            1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn diamond_conditionality_dominates_half_cross_ratio() {
        let n = 64;
        let w = Arc::new(Weight::power(2.0, n).unwrap());
        let x: Arc<dyn Basis> = Arc::new(unit(Space::lorentz(w.clone(), 1.0).unwrap(), n));
        let y: Arc<dyn Basis> = Arc::new(unit(
            Space::marcinkiewicz(Arc::new(w.dual().unwrap()), true).unwrap(),
            n,
        ));
        let d = build_diamond(x.clone(), y.clone()).unwrap();
        for m in [2, 8, 32] {
            let k = k_lower(&d, m, &small()).unwrap();
            let e1 = e_lower(x.as_ref(), y.as_ref(), m, &small()).unwrap();
            let e2 = e_lower(y.as_ref(), x.as_ref(), m, &small()).unwrap();
            assert!(k.value >= 0.5 * e1.value.max(e2.value) * (1.0 - 1e-12));
            assert!(k.certified(&d).unwrap());
        }
    }

    #[test]
    fn sweep_is_nondecreasing_and_certified() {
        let w = Arc::new(Weight::power(2.0, 40).unwrap());
        let b = unit(Space::lorentz(w, 2.0).unwrap(), 40);
        let ms: Vec<usize> = (1..=20).collect();
        let ks = k_lower_sweep(
            &b,
            &ms,
            &SearchBudget {
                trials: 20,
                ..small()
            },
        )
        .unwrap();
        for (m, k) in ms.iter().zip(&ks) {
            assert_eq!(k.witness.as_ref().unwrap().set.len(), *m);
            assert!(k.certified(&b).unwrap());
        }
        assert!(ks.windows(2).all(|p| p[1].value >= p[0].value));
    }

    #[test]
    fn reproducible() {
        let w = Arc::new(Weight::power(2.0, 60).unwrap());
        let b = unit(Space::lorentz(w, 2.0).unwrap(), 60);
        let a = k_lower(&b, 5, &small()).unwrap();
        let c = k_lower(&b, 5, &small()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn running_max_is_monotone() {
        assert_eq!(running_max(&[1.0, 0.5, 2.0, 1.5]), vec![1.0, 1.0, 2.0, 2.0]);
    }
}
