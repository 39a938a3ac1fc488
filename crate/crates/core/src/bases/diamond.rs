//! The rotated basis `X ◇ Y` on `X ⊕ Y` with the max norm:
//! `z_{2n-1} = (x_n, y_n)/√2`, `z_{2n} = (x_n, -y_n)/√2`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use super::{check_coefficients, Basis, DualBound, Element, WitnessKind, WitnessRecord};
use crate::error::{input, Result};
use crate::seqcore::{IndexSet, SparseVec};

#[derive(Clone, Debug)]
pub struct DiamondBasis {
    x: Arc<dyn Basis>,
    y: Arc<dyn Basis>,
    n: usize,
}

/// Both components must index coefficients from 1; the diamond uses the
/// shorter of the two windows.
pub fn build_diamond(x: Arc<dyn Basis>, y: Arc<dyn Basis>) -> Result<DiamondBasis> {
    let ((xlo, xhi), (ylo, yhi)) = (x.coefficient_range(), y.coefficient_range());
    if xlo != 1 || ylo != 1 {
        return input("diamond components must index coefficients from 1");
    }
    Ok(DiamondBasis {
        x,
        y,
        n: xhi.min(yhi),
    })
}

impl DiamondBasis {
    pub fn x(&self) -> &Arc<dyn Basis> {
        &self.x
    }

    pub fn y(&self) -> &Arc<dyn Basis> {
        &self.y
    }

    /// Number of component indices `n`; coefficients run over `1..=2n`.
    pub fn component_window(&self) -> usize {
        self.n
    }

    /// `(a, b)` with `a_n = (c_{2n-1} + c_{2n})/√2`, `b_n = (c_{2n-1} - c_{2n})/√2`.
    pub fn split(&self, c: &SparseVec) -> (SparseVec, SparseVec) {
        let mut a: Vec<(usize, f64)> = Vec::with_capacity(c.len());
        let mut b: Vec<(usize, f64)> = Vec::with_capacity(c.len());
        let entries = c.entries();
        let mut i = 0;
        while i < entries.len() {
            let (k, v) = entries[i];
            let n = (k + 1) / 2;
            let (odd, even) = if k % 2 == 1 {
                match entries.get(i + 1) {
                    Some(&(k2, v2)) if k2 == k + 1 => {
                        i += 1;
                        (v, v2)
                    }
                    _ => (v, 0.0),
                }
            } else {
                (0.0, v)
            };
            a.push((n, FRAC_1_SQRT_2 * (odd + even)));
            b.push((n, FRAC_1_SQRT_2 * (odd - even)));
            i += 1;
        }
        (
            SparseVec::from_sorted_unchecked(a),
            SparseVec::from_sorted_unchecked(b),
        )
    }

    /// Inverse of [`DiamondBasis::split`].
    pub fn merge(&self, a: &SparseVec, b: &SparseVec) -> SparseVec {
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(2 * (a.len() + b.len()));
        let (ea, eb) = (a.entries(), b.entries());
        let (mut i, mut j) = (0, 0);
        while i < ea.len() || j < eb.len() {
            let na = ea.get(i).map_or(usize::MAX, |e| e.0);
            let nb = eb.get(j).map_or(usize::MAX, |e| e.0);
            let n = na.min(nb);
            let u = if na == n {
                i += 1;
                ea[i - 1].1
            } else {
                0.0
            };
            let v = if nb == n {
                j += 1;
                eb[j - 1].1
            } else {
                0.0
            };
            out.push((2 * n - 1, FRAC_1_SQRT_2 * (u + v)));
            out.push((2 * n, FRAC_1_SQRT_2 * (u - v)));
        }
        SparseVec::from_sorted_unchecked(out)
    }
}

impl Basis for DiamondBasis {
    fn label(&self) -> String {
        format!("diamond[{} , {}]", self.x.label(), self.y.label())
    }

    fn coefficient_range(&self) -> (usize, usize) {
        (1, 2 * self.n)
    }

    fn synth(&self, c: &SparseVec) -> Result<Element> {
        check_coefficients(self, c)?;
        let (a, b) = self.split(c);
        let f = self.x.synth(&a)?.single()?.clone();
        let g = self.y.synth(&b)?.single()?.clone();
        Ok(Element::Pair(f, g))
    }

    fn dual_eval(&self, x: &Element) -> Result<SparseVec> {
        let (f, g) = x.pair()?;
        let a = self.x.dual_eval(&Element::Single(f.clone()))?;
        let b = self.y.dual_eval(&Element::Single(g.clone()))?;
        Ok(self.merge(&a, &b))
    }

    fn ambient_norm(&self, x: &Element) -> Result<f64> {
        let (f, g) = x.pair()?;
        let nf = self.x.ambient_norm(&Element::Single(f.clone()))?;
        let ng = self.y.ambient_norm(&Element::Single(g.clone()))?;
        Ok(nf.max(ng))
    }

    /// The span is all of `X ⊕ Y`, whose dual carries the sum norm.
    fn dual_norm(&self, c: &SparseVec) -> Result<DualBound> {
        check_coefficients(self, c)?;
        let (a, b) = self.split(c);
        let (da, db) = (self.x.dual_norm(&a)?, self.y.dual_norm(&b)?);
        Ok(DualBound {
            lower: da.lower + db.lower,
            upper: da.upper.zip(db.upper).map(|(u, v)| u + v),
        })
    }

    fn witnesses(&self, m: usize) -> Result<Vec<WitnessRecord>> {
        if m == 0 || m > self.n {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for a in diamond_profiles(self.x.as_ref(), self.y.as_ref(), m)? {
            let w = diamond_conditionality_witness(self.x.as_ref(), self.y.as_ref(), &a)?;
            out.push(w.plus);
            out.push(w.minus);
        }
        Ok(out)
    }

    /// `D^o = {1, 3, ..., 2m-1}` first: projecting onto it splits
    /// `(a, ±a)` vectors.
    fn structured_sets(&self, m: usize) -> Vec<IndexSet> {
        let mut sets = Vec::new();
        if m >= 1 && m <= self.n {
            sets.push(IndexSet::from_sorted_unchecked(
                (1..=m).map(|n| 2 * n - 1).collect(),
            ));
            sets.push(IndexSet::from_sorted_unchecked(
                (1..=m).map(|n| 2 * n).collect(),
            ));
        }
        if m >= 1 && m <= 2 * self.n {
            sets.push(IndexSet::interval(1, m));
        }
        sets
    }

    fn components(&self) -> Option<(Arc<dyn Basis>, Arc<dyn Basis>)> {
        Some((self.x.clone(), self.y.clone()))
    }
}

/// Coefficient profiles on `{1..m}` probed for cross ratios: the
/// indicator, `1/s_n` for each component weight, and the geometric
/// profile `2^{-n}`.
pub fn diamond_profiles(bx: &dyn Basis, by: &dyn Basis, m: usize) -> Result<Vec<SparseVec>> {
    let ind = SparseVec::from_sorted_unchecked((1..=m).map(|n| (n, 1.0)).collect());
    let mut out = vec![ind];
    for w in [bx.primitive_weight(), by.primitive_weight()]
        .into_iter()
        .flatten()
    {
        if w.horizon() >= m {
            let v = SparseVec::from_sorted_unchecked(
                (1..=m).map(|n| (n, 1.0 / w.primitives()[n - 1])).collect(),
            );
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out.push(SparseVec::from_sorted_unchecked(
        (1..=m).map(|n| (n, 0.5f64.powi(n as i32))).collect(),
    ));
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct DiamondWitness {
    /// `Σ a_n z_{2n-1}` as diamond coefficients.
    pub f_o: SparseVec,
    /// `Σ a_n z_{2n}` as diamond coefficients.
    pub f_e: SparseVec,
    /// `f_o + f_e` with set `D^o`; bound `½‖Σ a y‖/‖Σ a x‖`.
    pub plus: WitnessRecord,
    /// `f_o - f_e` with set `D^o`; bound `½‖Σ a x‖/‖Σ a y‖`.
    pub minus: WitnessRecord,
    /// `‖Σ a x‖_X / ‖Σ a y‖_Y`.
    pub cross: WitnessRecord,
}

pub fn diamond_conditionality_witness(
    bx: &dyn Basis,
    by: &dyn Basis,
    a: &SparseVec,
) -> Result<DiamondWitness> {
    if a.is_empty() {
        return input("conditionality witness needs a nonzero coefficient vector");
    }
    let f_o = SparseVec::from_sorted_unchecked(a.iter().map(|(n, v)| (2 * n - 1, v)).collect());
    let f_e = SparseVec::from_sorted_unchecked(a.iter().map(|(n, v)| (2 * n, v)).collect());
    let d_o = f_o.support();
    let (nx, ny) = (bx.norm(a)?, by.norm(a)?);
    let m = a.len();
    let plus = WitnessRecord::new(
        format!("diamond f_o+f_e (m={m})"),
        WitnessKind::Projection,
        f_o.add(&f_e),
        d_o.clone(),
    )?
    .with_bound(0.5 * ny / nx)
    .with_note(format!("‖Σax‖={nx}, ‖Σay‖={ny}"));
    let minus = WitnessRecord::new(
        format!("diamond f_o-f_e (m={m})"),
        WitnessKind::Projection,
        f_o.sub(&f_e),
        d_o,
    )?
    .with_bound(0.5 * nx / ny)
    .with_note(format!("‖Σax‖={nx}, ‖Σay‖={ny}"));
    let cross = WitnessRecord::new(
        format!("cross ratio (m={m})"),
        WitnessKind::CrossRatio,
        a.clone(),
        a.support(),
    )?
    .with_bound(nx / ny);
    Ok(DiamondWitness {
        f_o,
        f_e,
        plus,
        minus,
        cross,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::UnitBasis;
    use crate::seqcore::project;
    use crate::spaces::Space;
    use crate::weights::Weight;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lorentz_marcinkiewicz(n: usize) -> (Arc<dyn Basis>, Arc<dyn Basis>) {
        let w = Arc::new(Weight::power(2.0, n).unwrap());
        let ws = Arc::new(w.dual().unwrap());
        let x: Arc<dyn Basis> =
            Arc::new(UnitBasis::new(Space::lorentz(w, 1.0).unwrap(), n).unwrap());
        let y: Arc<dyn Basis> =
            Arc::new(UnitBasis::new(Space::marcinkiewicz(ws, true).unwrap(), n).unwrap());
        (x, y)
    }

    fn random(rng: &mut ChaCha8Rng, hi: usize, k: usize) -> SparseVec {
        SparseVec::from_pairs(
            rand::seq::index::sample(rng, hi, k)
                .into_iter()
                .map(|i| (i + 1, rng.gen_range(-3.0..3.0))),
        )
        .unwrap()
    }

    #[test]
    fn first_vector_and_pair_sum() {
        let (x, y) = lorentz_marcinkiewicz(64);
        let d = build_diamond(x, y).unwrap();
        let e1 = SparseVec::unit(1).unwrap();
        let z1 = d.synth(&e1).unwrap();
        let h = SparseVec::from_pairs([(1, FRAC_1_SQRT_2)]).unwrap();
        assert_eq!(z1, Element::Pair(h.clone(), h));
        assert_relative_eq!(d.norm(&e1).unwrap(), FRAC_1_SQRT_2);
        let s = d
            .synth(&SparseVec::from_pairs([(1, 1.0), (2, 1.0)]).unwrap())
            .unwrap();
        let (f, g) = s.pair().unwrap();
        assert_relative_eq!(f.get(1), 2f64.sqrt(), max_relative = 1e-15);
        assert!(g.is_empty() || g.iter().all(|(_, v)| v.abs() < 1e-15));
    }

    #[test]
    fn biorthogonal() {
        let (x, y) = lorentz_marcinkiewicz(40);
        let d = build_diamond(x, y).unwrap();
        for j in 1..=80 {
            let e = SparseVec::unit(j).unwrap();
            let back = d.dual_eval(&d.synth(&e).unwrap()).unwrap();
            assert!((back.get(j) - 1.0).abs() < 1e-12);
            assert!(back
                .iter()
                .filter(|&(n, _)| n != j)
                .all(|(_, v)| v.abs() < 1e-12));
        }
    }

    #[test]
    fn projection_matches_direct_sum_projection() {
        let (x, y) = lorentz_marcinkiewicz(50);
        let d = build_diamond(x, y).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let c = random(&mut rng, 100, 30);
            let comp: Vec<usize> = rand::seq::index::sample(&mut rng, 50, 10)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            let dset =
                IndexSet::new(comp.iter().flat_map(|&n| [2 * n - 1, 2 * n]).collect()).unwrap();
            let cset = IndexSet::new(comp).unwrap();
            let (f, g) = match d.synth(&project(&c, &dset)).unwrap() {
                Element::Pair(f, g) => (f, g),
                _ => unreachable!(),
            };
            let (f0, g0) = match d.synth(&c).unwrap() {
                Element::Pair(f, g) => (f, g),
                _ => unreachable!(),
            };
            assert_eq!(f, project(&f0, &cset));
            assert_eq!(g, project(&g0, &cset));
        }
    }

    #[test]
    fn claim_identities() {
        let (x, y) = lorentz_marcinkiewicz(30);
        let d = build_diamond(x.clone(), y.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random(&mut rng, 30, 12);
            let w = diamond_conditionality_witness(x.as_ref(), y.as_ref(), &a).unwrap();
            let (f, g) = match d.synth(&w.f_o.add(&w.f_e)).unwrap() {
                Element::Pair(f, g) => (f, g),
                _ => unreachable!(),
            };
            assert_eq!(f, a.scale(2f64.sqrt()));
            assert!(g.is_empty());
            let (f, g) = match d.synth(&w.f_o.sub(&w.f_e)).unwrap() {
                Element::Pair(f, g) => (f, g),
                _ => unreachable!(),
            };
            assert!(f.is_empty());
            assert_eq!(g, a.scale(2f64.sqrt()));
            assert!(w.plus.evaluate(&d).unwrap() >= w.plus.bound.unwrap() * (1.0 - 1e-12));
            assert!(w.minus.evaluate(&d).unwrap() >= w.minus.bound.unwrap() * (1.0 - 1e-12));
            assert_relative_eq!(
                w.cross.evaluate(&d).unwrap(),
                w.cross.bound.unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn single_index_ratios() {
        let (x, y) = lorentz_marcinkiewicz(10);
        let w =
            diamond_conditionality_witness(x.as_ref(), y.as_ref(), &SparseVec::unit(1).unwrap())
                .unwrap();
        assert_relative_eq!(w.plus.bound.unwrap(), 0.5);
        assert_relative_eq!(w.minus.bound.unwrap(), 0.5);
    }

    #[test]
    fn dual_norm_of_first_functional() {
        let (x, y) = lorentz_marcinkiewicz(10);
        let d = build_diamond(x, y).unwrap();
        let b = d.dual_norm(&SparseVec::unit(1).unwrap()).unwrap();
        assert!(b.is_pinned());
        assert_relative_eq!(b.lower, 2f64.sqrt(), max_relative = 1e-12);
    }
}
