//! A bidemocratic basis of `ℓ_p` that is not total.
//!
//! `y_n = e_n + z_n` for `n ≥ 2`, where `z_{η(k)} = w_k e_1` and `z_n = 0`
//! off the range of `η`. The functionals are the coordinates `e*_n`,
//! `n ≥ 2`, so every one of them kills `e_1`, which nevertheless lies in
//! the closed span of the `y_n`.

use std::sync::Arc;

use super::{check_coefficients, Basis, DualBound, Element, WitnessKind, WitnessRecord};
use crate::error::{input, resource, Error, Result};
use crate::seqcore::{IndexSet, SparseVec};
use crate::spaces::{conjugate, lp_norm};
use crate::weights::{select_interval, Weight, WeightRule};

/// The increasing map `η` selecting which `y_n` carry a perturbation.
#[derive(Clone, Debug, PartialEq)]
pub enum EtaMap {
    /// `η(k) = k + offset`, `offset ≥ 1`.
    Shift(usize),
    /// Explicit strictly increasing values `η(1), η(2), ...` with `η(1) ≥ 2`.
    Explicit(Vec<usize>),
}

impl Default for EtaMap {
    fn default() -> Self {
        EtaMap::Shift(1)
    }
}

impl EtaMap {
    fn validate(&self) -> Result<()> {
        match self {
            EtaMap::Shift(0) => input("η(k) = k + offset needs offset >= 1"),
            EtaMap::Shift(_) => Ok(()),
            EtaMap::Explicit(v) => {
                if v.is_empty() || v[0] < 2 || v.windows(2).any(|w| w[0] >= w[1]) {
                    input("η must be strictly increasing with η(1) >= 2")
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn eta(&self, k: usize) -> Result<usize> {
        match self {
            EtaMap::Shift(o) => Ok(k + o),
            EtaMap::Explicit(v) => v.get(k - 1).copied().ok_or_else(|| Error::Resource {
                what: format!("η({k}) not tabulated"),
                reached: v.len(),
            }),
        }
    }

    /// `k` with `η(k) = n`.
    pub fn inverse(&self, n: usize) -> Option<usize> {
        match self {
            EtaMap::Shift(o) => (n > *o).then(|| n - o),
            EtaMap::Explicit(v) => v.binary_search(&n).ok().map(|i| i + 1),
        }
    }

    /// Number of `k` with `η(k) ≤ n`.
    pub fn count_upto(&self, n: usize) -> usize {
        match self {
            EtaMap::Shift(o) => n.saturating_sub(*o),
            EtaMap::Explicit(v) => v.partition_point(|&x| x <= n),
        }
    }
}

#[derive(Debug)]
pub struct PerturbedBasis {
    p: f64,
    q: f64,
    weight: Arc<Weight>,
    eta: EtaMap,
    window: usize,
}

/// `y_n = e_n + z_n` on `ℓ_p` over coordinates `1..=window`, coefficients
/// `2..=window`.
pub fn build_perturbed(
    p: f64,
    q: f64,
    weight: Arc<Weight>,
    eta: EtaMap,
    window: usize,
) -> Result<PerturbedBasis> {
    if !(p > 1.0 && p.is_finite() && q > 1.0 && q.is_finite()) {
        return input(format!(
            "perturbed basis needs 1 < p, q < ∞, got p={p}, q={q}"
        ));
    }
    if window < 2 {
        return input("perturbed basis needs window >= 2");
    }
    eta.validate()?;
    let needed = eta.count_upto(window);
    if needed > weight.horizon() {
        return resource(
            "weight horizon shorter than the perturbed window",
            weight.horizon(),
        );
    }
    Ok(PerturbedBasis {
        p,
        q,
        weight,
        eta,
        window,
    })
}

impl PerturbedBasis {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn eta(&self) -> &EtaMap {
        &self.eta
    }

    /// `A_m = {η(1), ..., η(m)}`.
    pub fn greedy_set(&self, m: usize) -> Result<IndexSet> {
        let v = (1..=m)
            .map(|k| self.eta.eta(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(IndexSet::from_sorted_unchecked(v))
    }
}

impl Basis for PerturbedBasis {
    fn label(&self) -> String {
        format!(
            "perturbed[p={}, q={}, w={}, N={}]",
            self.p,
            self.q,
            self.weight.rule(),
            self.window
        )
    }

    fn coefficient_range(&self) -> (usize, usize) {
        (2, self.window)
    }

    fn synth(&self, c: &SparseVec) -> Result<Element> {
        check_coefficients(self, c)?;
        let mut first = 0.0;
        for (n, v) in c.iter() {
            if let Some(k) = self.eta.inverse(n) {
                first += v * self.weight.w(k)?;
            }
        }
        let e1 = SparseVec::from_sorted_unchecked(vec![(1, first)]);
        Ok(Element::Single(c.add(&e1)))
    }

    fn dual_eval(&self, x: &Element) -> Result<SparseVec> {
        let f = x.single()?;
        if let Some(n) = f.max_index() {
            if n > self.window {
                return resource(
                    format!("coordinate {n} beyond the perturbed window"),
                    self.window,
                );
            }
        }
        Ok(SparseVec::from_sorted_unchecked(
            f.iter().filter(|&(n, _)| n >= 2).collect(),
        ))
    }

    fn ambient_norm(&self, x: &Element) -> Result<f64> {
        Ok(lp_norm(x.single()?, self.p))
    }

    /// The functionals are coordinates of `ℓ_p`, so the dual norm is `ℓ_{p'}`.
    fn dual_norm(&self, c: &SparseVec) -> Result<DualBound> {
        check_coefficients(self, c)?;
        Ok(DualBound::exact(lp_norm(c, conjugate(self.p))))
    }

    fn dual_democracy_exact(&self) -> bool {
        true
    }

    fn witnesses(&self, m: usize) -> Result<Vec<WitnessRecord>> {
        match perturbed_witness(self, m) {
            Ok((f, u)) => Ok(vec![u, f]),
            Err(Error::Resource { .. }) => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    }

    fn structured_sets(&self, m: usize) -> Vec<IndexSet> {
        let mut sets = Vec::new();
        if m >= 1 && m + 1 <= self.window {
            sets.push(IndexSet::interval(2, m + 1));
        }
        if let Ok(a) = self.greedy_set(m) {
            if a.max().map_or(false, |n| n <= self.window) && !sets.contains(&a) {
                sets.push(a);
            }
        }
        sets
    }
}

/// The pair `(f_m, u_m)`: `f_m = H_m[w]^{-1} Σ_{k≤m} s_k^{-1} y_{η(k)}`
/// converges to `e_1`, and `u_m = f_m - H_m[w]^{-1} Σ_{k=r+1}^{s} s_k^{-1} y_{η(k)}`
/// has `A_m = {η(1..m)}` as a greedy set with `S_{A_m} u_m = f_m`.
pub fn perturbed_witness(b: &PerturbedBasis, m: usize) -> Result<(WitnessRecord, WitnessRecord)> {
    if m == 0 {
        return input("perturbed witness needs m >= 1");
    }
    let w = &b.weight;
    let h = w.hw_sum(m)?;
    let limit = b.eta.count_upto(b.window).min(w.horizon());
    let (r, s) = select_interval(
        |n| {
            if n <= w.horizon() {
                w.values()[n - 1] / w.primitives()[n - 1]
            } else {
                0.0
            }
        },
        m,
        h,
        h + h.powf(1.0 / b.q).min(1.0),
        limit,
    )?;
    let term =
        |k: usize| -> Result<(usize, f64)> { Ok((b.eta.eta(k)?, 1.0 / (h * w.primitive(k)?))) };
    let f = SparseVec::from_pairs((1..=m).map(term).collect::<Result<Vec<_>>>()?)?;
    let tail = SparseVec::from_pairs(((r + 1)..=s).map(term).collect::<Result<Vec<_>>>()?)?;
    let u = f.sub(&tail);
    let a = b.greedy_set(m)?;
    let qq = conjugate(b.q);
    let f_rec = WitnessRecord::new(
        format!("perturbed f_{m}"),
        WitnessKind::Norm,
        f,
        IndexSet::empty(),
    )?
    .with_bound(h.powf(-1.0 / qq))
    .with_note(format!("‖synth(f_m) - e_1‖ vs H_m[w]^(-1/q'); H_m[w]={h}"));
    let u_rec = WitnessRecord::new(format!("perturbed u_{m}"), WitnessKind::Projection, u, a)?
        .with_note(format!("r={r}, s={s}, H_m[w]={h}"));
    Ok((f_rec, u_rec))
}

/// One grid point of the perturbed-basis growth sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbedGrowthRow {
    pub m: usize,
    pub r: usize,
    pub s: usize,
    /// `H_m[w]`.
    pub h: f64,
    /// `‖synth(f_m)‖`.
    pub f_norm: f64,
    /// `‖synth(f_m) - e_1‖`.
    pub f_minus_e1: f64,
    /// `‖synth(u_m)‖`.
    pub u_norm: f64,
    /// `‖S_{A_m} u_m‖ / ‖u_m‖`.
    pub ratio: f64,
}

/// Evaluates the `(f_m, u_m)` norms for every `m` in `ms` without
/// materializing the vectors.
///
/// The ambient `ℓ_p` norm only sees the multiset of coefficients, so with
/// `Q_n = Σ_{k≤n} s_k^{-p}` and `δ = H_m - (H_s - H_r)`:
/// `‖f_m‖^p = 1 + Q_m/H^p`, `‖f_m - e_1‖^p = Q_m/H^p` and
/// `‖u_m‖^p = (|δ|^p + Q_m + Q_s - Q_r)/H^p`, whatever `η` is.
/// One pass over the weight stream serves the whole grid; `ms` must be
/// increasing.
pub fn perturbed_growth(
    p: f64,
    q: f64,
    rule: &WeightRule,
    ms: &[usize],
) -> Result<Vec<PerturbedGrowthRow>> {
    if !(p > 1.0 && p.is_finite() && q > 1.0 && q.is_finite()) {
        return input(format!(
            "perturbed growth needs 1 < p, q < ∞, got p={p}, q={q}"
        ));
    }
    if ms.is_empty() || ms[0] == 0 || ms.windows(2).any(|w| w[0] >= w[1]) {
        return input("m grid must be positive and strictly increasing");
    }
    // prefix values are kept for indices up to the largest m plus a margin
    // for r advancing past m
    let keep = ms[ms.len() - 1] + 4096;
    let mut cur = PrefixCursor {
        stream: rule.stream(),
        p,
        keep,
        n: 0,
        h: 0.0,
        q: 0.0,
        h_prev: 0.0,
        hs: vec![0.0; keep + 1],
        qs: vec![0.0; keep + 1],
    };

    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        while cur.n < m {
            cur.advance()?;
        }
        let (h, qm) = (cur.hs[m], cur.qs[m]);
        let b_hi = h + h.powf(1.0 / q).min(1.0);
        let mut r = m;
        let (s, h_s, q_s) = loop {
            if r > keep {
                return resource("interval start ran past the retained prefix", keep);
            }
            let (h_r, target) = (cur.hs[r], cur.hs[r] + h);
            if cur.n > r + 1 && cur.h_prev - h_r >= h {
                return Err(Error::Invariant(format!(
                    "growth sweep at m={m}: interval search would need to step backwards"
                )));
            }
            while cur.n < r + 1 || cur.h < target {
                cur.advance()?;
            }
            if cur.h - h_r < b_hi {
                break (cur.n, cur.h, cur.q);
            }
            r += 1;
        };
        let (h_r, q_r) = (cur.hs[r], cur.qs[r]);
        let delta = h - (h_s - h_r);
        let hp = h.powf(p);
        let f_norm = (1.0 + qm / hp).powf(1.0 / p);
        let f_minus_e1 = qm.powf(1.0 / p) / h;
        let u_norm = (delta.abs().powf(p) + qm + q_s - q_r).powf(1.0 / p) / h;
        rows.push(PerturbedGrowthRow {
            m,
            r,
            s,
            h,
            f_norm,
            f_minus_e1,
            u_norm,
            ratio: f_norm / u_norm,
        });
    }
    Ok(rows)
}

/// Running `H_n[w]` and `Q_n` over a weight stream.
struct PrefixCursor {
    stream: crate::weights::WeightStream,
    p: f64,
    keep: usize,
    n: usize,
    h: f64,
    q: f64,
    h_prev: f64,
    hs: Vec<f64>,
    qs: Vec<f64>,
}

impl PrefixCursor {
    fn advance(&mut self) -> Result<()> {
        let (w, s) = self.stream.next().ok_or_else(|| Error::Resource {
            what: "weight stream exhausted".into(),
            reached: self.n,
        })?;
        self.n += 1;
        self.h_prev = self.h;
        self.h += w / s;
        self.q += if self.p == 2.0 {
            1.0 / (s * s)
        } else {
            s.powf(-self.p)
        };
        if self.n <= self.keep {
            self.hs[self.n] = self.h;
            self.qs[self.n] = self.q;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::is_greedy_set;
    use crate::seqcore::project;
    use approx::assert_relative_eq;

    fn basis(window: usize) -> PerturbedBasis {
        let w = Arc::new(Weight::power(2.0, window).unwrap());
        build_perturbed(2.0, 2.0, w, EtaMap::default(), window).unwrap()
    }

    #[test]
    fn synthesis_examples() {
        let b = basis(50);
        let y2 = b.synth(&SparseVec::unit(2).unwrap()).unwrap();
        assert_eq!(
            y2,
            Element::Single(SparseVec::from_pairs([(1, 1.0), (2, 1.0)]).unwrap())
        );
        assert_relative_eq!(b.ambient_norm(&y2).unwrap(), 2f64.sqrt());
        let e1 = Element::Single(SparseVec::unit(1).unwrap());
        assert!(b.dual_eval(&e1).unwrap().is_empty());
        for j in 2..=50 {
            let e = SparseVec::unit(j).unwrap();
            assert_eq!(b.dual_eval(&b.synth(&e).unwrap()).unwrap(), e);
        }
    }

    #[test]
    fn off_range_coefficients_are_untouched() {
        let w = Arc::new(Weight::power(2.0, 50).unwrap());
        let b = build_perturbed(2.0, 2.0, w, EtaMap::Explicit(vec![3, 5, 7]), 20).unwrap();
        let a = SparseVec::from_pairs([(2, 1.5), (4, -2.0), (20, 1.0)]).unwrap();
        assert_eq!(b.synth(&a).unwrap(), Element::Single(a.clone()));
        assert_relative_eq!(b.norm(&a).unwrap(), lp_norm(&a, 2.0));
    }

    #[test]
    fn witness_properties() {
        let b = basis(5000);
        for m in [2, 5, 20] {
            let (f, u) = perturbed_witness(&b, m).unwrap();
            let h = b.weight().hw_sum(m).unwrap();
            let x = b.synth(&f.coefficients).unwrap();
            let diff = x.single().unwrap().sub(&SparseVec::unit(1).unwrap());
            let dist = lp_norm(&diff, 2.0);
            // T is an isometry here, so the distance is exactly ‖Σ s_k^{-1} e_k‖_2 / H
            assert!(
                dist <= f.bound.unwrap() * 1.5,
                "{dist} vs {}",
                f.bound.unwrap()
            );
            assert!(is_greedy_set(&u.coefficients, &u.set));
            let proj = project(&u.coefficients, &u.set);
            assert_eq!(proj, f.coefficients);
            assert!(b.norm(&proj).unwrap() >= 1.0 && b.norm(&proj).unwrap() < 2.0);
            assert!(u.evaluate(&b).unwrap() > 1.0, "m={m} h={h}");
        }
    }

    #[test]
    fn streaming_matches_materialized() {
        let b = basis(20_000);
        let ms: Vec<usize> = (2..=40).collect();
        let rows = perturbed_growth(2.0, 2.0, &WeightRule::power(2.0), &ms).unwrap();
        for row in rows {
            let (f, u) = perturbed_witness(&b, row.m).unwrap();
            let fx = b.synth(&f.coefficients).unwrap();
            let diff = fx.single().unwrap().sub(&SparseVec::unit(1).unwrap());
            assert_relative_eq!(
                row.f_norm,
                b.norm(&f.coefficients).unwrap(),
                max_relative = 1e-9
            );
            assert_relative_eq!(row.f_minus_e1, lp_norm(&diff, 2.0), max_relative = 1e-9);
            assert_relative_eq!(
                row.u_norm,
                b.norm(&u.coefficients).unwrap(),
                max_relative = 1e-9
            );
            assert_relative_eq!(row.ratio, u.evaluate(&b).unwrap(), max_relative = 1e-9);
            assert!(u.note.contains(&format!("r={}, s={}", row.r, row.s)));
        }
    }

    #[test]
    fn window_too_small_is_resource_error() {
        let b = basis(30);
        assert!(matches!(
            perturbed_witness(&b, 10),
            Err(Error::Resource { .. })
        ));
        let w = Arc::new(Weight::power(2.0, 5).unwrap());
        assert!(build_perturbed(2.0, 2.0, w, EtaMap::default(), 30).is_err());
        assert!(build_perturbed(
            2.0,
            2.0,
            Arc::new(Weight::power(2.0, 50).unwrap()),
            EtaMap::Explicit(vec![1, 2]),
            30
        )
        .is_err());
    }
}
