//! The bidemocratic, non-quasi-greedy unit vector basis of the space normed
//! by `max(‖·‖_p, ‖·‖_♣)`.
//!
//! Blocks `A_1, A_2, ...` are consecutive integer intervals starting at 1.
//! Inside `A_m`, sub-block `k` starts at `i_{m,k}` with a single entry of
//! "denominator" `d = k` and sign `+`, followed by the denominators
//! `r_{m,k}, ..., s_{m,k}` with sign `-`. The harmonic sums
//! `T_{m,k} = Σ_{j=r}^{s} 1/j` sit in `[1/k - 1/m, 1/k)`.

use std::sync::Arc;

use super::unit::UnitBasis;
use super::{WitnessKind, WitnessRecord};
use crate::error::{input, resource, Error, Result};
use crate::seqcore::{IndexSet, SparseVec};
use crate::spaces::{conjugate, lp_norm, Space};
use crate::weights::{harmonic, select_interval_min_terms};

/// Index bound for the interval search behind each `(r_{m,k}, s_{m,k})`.
const SELECTION_LIMIT: usize = 1 << 40;

#[derive(Debug)]
pub struct KtTables {
    p: f64,
    max_block: usize,
    // [m-1][k-1]
    r: Vec<Vec<usize>>,
    s: Vec<Vec<usize>>,
    t: Vec<Vec<f64>>,
    i: Vec<Vec<usize>>,
    // [m-1]
    block_start: Vec<usize>,
    block_len: Vec<usize>,
    // [n-1]
    block_of: Vec<u32>,
    d: Vec<u64>,
    eps: Vec<i8>,
    b: Vec<f64>,
}

impl KtTables {
    /// Runs the recursive selection for all `(m, k)` with `1 ≤ k ≤ m ≤ max_block`.
    pub fn build(p: f64, max_block: usize) -> Result<KtTables> {
        if !(p > 1.0 && p.is_finite()) {
            return input(format!("KT construction needs 1 < p < ∞, got {p}"));
        }
        if max_block < 1 {
            return input("KT construction needs at least one block");
        }
        let c = |j: usize| 1.0 / j as f64;
        let mut r = Vec::with_capacity(max_block);
        let mut s = Vec::with_capacity(max_block);
        let mut t = Vec::with_capacity(max_block);
        for m in 1..=max_block {
            let (mut rm, mut sm, mut tm) = (Vec::new(), Vec::new(), Vec::new());
            let mut floor = m + 1;
            for k in 1..=m {
                let (a, b) = (1.0 / k as f64 - 1.0 / m as f64, 1.0 / k as f64);
                // at least two terms so that r < s strictly
                let (r0, s_mk) =
                    select_interval_min_terms(c, floor, a.max(0.0), b, 2, SELECTION_LIMIT)
                        .map_err(|e| match e {
                            Error::Resource { reached, .. } => Error::Resource {
                                what: format!("KT interval selection at (m,k)=({m},{k})"),
                                reached,
                            },
                            other => other,
                        })?;
                let r_mk = r0 + 1;
                rm.push(r_mk);
                sm.push(s_mk);
                tm.push((r_mk..=s_mk).map(c).sum::<f64>());
                floor = s_mk;
            }
            r.push(rm);
            s.push(sm);
            t.push(tm);
        }

        let mut block_start = Vec::with_capacity(max_block);
        let mut block_len = Vec::with_capacity(max_block);
        let mut i = Vec::with_capacity(max_block);
        let mut next = 1usize;
        for m in 1..=max_block {
            let len = 2 * m + (0..m).map(|k| s[m - 1][k] - r[m - 1][k]).sum::<usize>();
            block_start.push(next);
            block_len.push(len);
            let mut im = Vec::with_capacity(m);
            let mut at = next;
            for k in 0..m {
                im.push(at);
                at += s[m - 1][k] - r[m - 1][k] + 2;
            }
            debug_assert_eq!(at, next + len);
            i.push(im);
            next += len;
        }
        let window = next - 1;
        if window > u32::MAX as usize {
            return resource("KT window too large to index", window);
        }

        let mut block_of = Vec::with_capacity(window);
        let mut d = Vec::with_capacity(window);
        let mut eps = Vec::with_capacity(window);
        let pp = conjugate(p);
        for m in 1..=max_block {
            for k in 1..=m {
                let (rk, sk) = (r[m - 1][k - 1], s[m - 1][k - 1]);
                block_of.push(m as u32);
                d.push(k as u64);
                eps.push(1i8);
                for den in rk..=sk {
                    block_of.push(m as u32);
                    d.push(den as u64);
                    eps.push(-1i8);
                }
            }
        }
        let b = d.iter().map(|&d| (d as f64).powf(-1.0 / pp)).collect();
        Ok(KtTables {
            p,
            max_block,
            r,
            s,
            t,
            i,
            block_start,
            block_len,
            block_of,
            d,
            eps,
            b,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn max_block(&self) -> usize {
        self.max_block
    }

    /// Number of materialized coordinates `|A_1| + ... + |A_M|`.
    pub fn window(&self) -> usize {
        self.d.len()
    }

    pub fn r(&self, m: usize, k: usize) -> usize {
        self.r[m - 1][k - 1]
    }

    pub fn s(&self, m: usize, k: usize) -> usize {
        self.s[m - 1][k - 1]
    }

    /// `T_{m,k} = Σ_{j=r_{m,k}}^{s_{m,k}} 1/j`.
    pub fn t(&self, m: usize, k: usize) -> f64 {
        self.t[m - 1][k - 1]
    }

    pub fn i(&self, m: usize, k: usize) -> usize {
        self.i[m - 1][k - 1]
    }

    /// `A_m` as an index set.
    pub fn block(&self, m: usize) -> IndexSet {
        let lo = self.block_start[m - 1];
        IndexSet::interval(lo, lo + self.block_len[m - 1] - 1)
    }

    pub fn block_range(&self, m: usize) -> (usize, usize) {
        let lo = self.block_start[m - 1];
        (lo, lo + self.block_len[m - 1] - 1)
    }

    /// `B_m = {i_{m,1}, ..., i_{m,m}}`.
    pub fn greedy_set(&self, m: usize) -> IndexSet {
        IndexSet::from_sorted_unchecked(self.i[m - 1].clone())
    }

    pub fn block_of(&self, n: usize) -> usize {
        self.block_of[n - 1] as usize
    }

    pub fn d(&self, n: usize) -> u64 {
        self.d[n - 1]
    }

    pub fn eps(&self, n: usize) -> i8 {
        self.eps[n - 1]
    }

    pub fn b(&self, n: usize) -> f64 {
        self.b[n - 1]
    }

    /// `(1/p) sup_{m, l ∈ A_m} |Σ_{n ∈ A_m, n ≤ l} a_n b_{m,n}|`.
    pub fn club_norm(&self, f: &SparseVec) -> Result<f64> {
        if let Some(n) = f.max_index() {
            if n > self.window() {
                return resource(format!("index {n} beyond the KT window"), self.window());
            }
        }
        let mut best = 0.0f64;
        let mut acc = 0.0;
        let mut current = 0u32;
        for (n, v) in f.iter() {
            let m = self.block_of[n - 1];
            if m != current {
                current = m;
                acc = 0.0;
            }
            acc += v * self.b[n - 1];
            best = best.max(acc.abs());
        }
        Ok(best / self.p)
    }

    /// Re-checks every structural property of the tables.
    pub fn verify(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        for m in 1..=self.max_block {
            for k in 1..=m {
                let (r, s, t) = (self.r(m, k), self.s(m, k), self.t(m, k));
                if !(m + 1 < r && r < s) {
                    return fail(format!(
                        "(m,k)=({m},{k}): need m+1 < r < s, got r={r}, s={s}"
                    ));
                }
                if k < m && s >= self.r(m, k + 1) {
                    return fail(format!("(m,k)=({m},{k}): s={s} not below next r"));
                }
                let resum: f64 = (r..=s).map(|j| 1.0 / j as f64).sum();
                let (lo, hi) = (1.0 / k as f64 - 1.0 / m as f64, 1.0 / k as f64);
                if resum != t || !(lo <= t && t < hi) {
                    return fail(format!("(m,k)=({m},{k}): T={t} outside [{lo}, {hi})"));
                }
            }
            let expect = 2 * m + (1..=m).map(|k| self.s(m, k) - self.r(m, k)).sum::<usize>();
            if self.block_len[m - 1] != expect {
                return fail(format!("|A_{m}| = {} != {expect}", self.block_len[m - 1]));
            }
            if m < self.max_block {
                let (_, hi) = self.block_range(m);
                if hi >= self.block_start[m] {
                    return fail(format!("A_{m} overlaps A_{}", m + 1));
                }
            }
            let (lo, hi) = self.block_range(m);
            let mut ds: Vec<u64> = (lo..=hi).map(|n| self.d(n)).collect();
            ds.sort_unstable();
            if ds.windows(2).any(|w| w[0] == w[1]) || ds[0] == 0 {
                return fail(format!(
                    "denominators in A_{m} not distinct positive integers"
                ));
            }
            let pp = conjugate(self.p);
            for n in lo..=hi {
                if self.b(n) != (self.d(n) as f64).powf(-1.0 / pp) {
                    return fail(format!("b at n={n} is not d^(-1/p')"));
                }
            }
            for k in 1..=m {
                let n = self.i(m, k);
                if self.d(n) != k as u64 || self.eps(n) != 1 {
                    return fail(format!("i_(m,k)=({m},{k}) does not carry (k,+1)"));
                }
            }
        }
        Ok(())
    }
}

/// Builds the tables, the space `max(ℓ_p, ♣)` and its unit vector basis.
pub fn build_kt(p: f64, max_block: usize) -> Result<(Arc<KtTables>, Space, UnitBasis)> {
    if max_block < 2 {
        return input(format!("KT construction needs M >= 2, got {max_block}"));
    }
    let tables = Arc::new(KtTables::build(p, max_block)?);
    let space = Space::kt(tables.clone());
    let basis = UnitBasis::new(space.clone(), tables.window())?;
    Ok((tables, space, basis))
}

fn check_block(t: &KtTables, m: usize) -> Result<()> {
    if m == 0 || m > t.max_block() {
        return input(format!("block {m} not in 1..={}", t.max_block()));
    }
    Ok(())
}

/// `f_m = Σ_{n ∈ A_m} ε_{m,n} d_{m,n}^{-1/p} x_n` with greedy set `B_m`.
pub fn kt_witness(t: &KtTables, m: usize) -> Result<WitnessRecord> {
    check_block(t, m)?;
    let p = t.p();
    let (lo, hi) = t.block_range(m);
    let coeffs = SparseVec::from_sorted_unchecked(
        (lo..=hi)
            .map(|n| (n, t.eps(n) as f64 * (t.d(n) as f64).powf(-1.0 / p)))
            .collect(),
    );
    let bound = harmonic(m).powf(1.0 / conjugate(p)) / (p * 2f64.powf(1.0 / p));
    Ok(WitnessRecord::new(
        format!("kt f_{m}"),
        WitnessKind::Projection,
        coeffs,
        t.greedy_set(m),
    )?
    .with_bound(bound)
    .with_note(format!("p={p}; ratio >= H_m^(1/p')/(p 2^(1/p))")))
}

/// `g_m = S_{B_m}(f_m)`.
pub fn kt_projected_witness(t: &KtTables, m: usize) -> Result<SparseVec> {
    let w = kt_witness(t, m)?;
    Ok(crate::seqcore::project(&w.coefficients, &w.set))
}

/// Normalized blocks `h_{m_k} = g_{m_k} / ‖g_{m_k}‖_♣` with
/// `‖g_{m_k}‖_p ≤ ε_k ‖g_{m_k}‖_♣` and `m_1 < m_2 < ...`.
pub fn kt_c0_blocks(t: &KtTables, eps: &[f64]) -> Result<Vec<WitnessRecord>> {
    let p = t.p();
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
        return input("c0 blocks need a nonempty list of positive scalars");
    }
    let total: f64 = eps.iter().map(|e| e.powf(p)).sum();
    if (total - 1.0).abs() > 1e-9 {
        return input(format!("c0 blocks need Σ ε_k^p = 1, got {total}"));
    }
    let mut out = Vec::with_capacity(eps.len());
    let mut m = 0;
    for (k, &e) in eps.iter().enumerate() {
        let found = loop {
            m += 1;
            if m > t.max_block() {
                break None;
            }
            let g = kt_projected_witness(t, m)?;
            let (lp, club) = (lp_norm(&g, p), t.club_norm(&g)?);
            if lp <= e * club {
                break Some((g, club));
            }
        };
        let Some((g, club)) = found else {
            return Err(Error::Resource {
                what: format!(
                    "no block m <= {} with ‖g_m‖_p <= ε_{} ‖g_m‖_♣ (ε = {e})",
                    t.max_block(),
                    k + 1
                ),
                reached: k,
            });
        };
        out.push(
            WitnessRecord::new(
                format!("kt h_{m}"),
                WitnessKind::Norm,
                g.scale(1.0 / club),
                t.greedy_set(m),
            )?
            .with_bound(1.0)
            .with_note(format!("block {} of the c0 sequence, eps={e}", k + 1)),
        );
    }
    Ok(out)
}

/// Smallest `H_m` at which `‖g_m‖_p ≤ ε ‖g_m‖_♣` can hold, from
/// `‖g_m‖_p = H_m^{1/p}` and `‖g_m‖_♣ = H_m / p`.
pub fn kt_c0_harmonic_threshold(p: f64, eps: f64) -> f64 {
    (p / eps).powf(conjugate(p))
}
