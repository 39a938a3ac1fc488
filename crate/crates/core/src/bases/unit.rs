//! The unit vector system `(e_n)` of a sequence space.

use std::sync::Arc;

use super::{check_coefficients, Basis, DualBound, Element, WitnessRecord};
use crate::bases::kt::{self, KtTables};
use crate::error::{input, Result};
use crate::seqcore::{IndexSet, SparseVec};
use crate::spaces::Space;
use crate::weights::Weight;

#[derive(Clone, Debug)]
pub struct UnitBasis {
    space: Space,
    window: usize,
}

impl UnitBasis {
    pub fn new(space: Space, window: usize) -> Result<Self> {
        if window == 0 {
            return input("unit basis needs a positive window");
        }
        if let Some(cap) = space.capacity() {
            if let Space::Kt(_) = space {
                if window > cap {
                    return input(format!(
                        "window {window} exceeds the {cap} materialized KT indices"
                    ));
                }
            }
        }
        Ok(UnitBasis { space, window })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn window(&self) -> usize {
        self.window
    }

    fn kt_tables(&self) -> Option<&Arc<KtTables>> {
        match &self.space {
            Space::Kt(t) => Some(t),
            _ => None,
        }
    }
}

impl Basis for UnitBasis {
    fn label(&self) -> String {
        format!("unit[{}]", self.space)
    }

    fn coefficient_range(&self) -> (usize, usize) {
        (1, self.window)
    }

    fn synth(&self, c: &SparseVec) -> Result<Element> {
        check_coefficients(self, c)?;
        Ok(Element::Single(c.clone()))
    }

    fn dual_eval(&self, x: &Element) -> Result<SparseVec> {
        let f = x.single()?;
        check_coefficients(self, f)?;
        Ok(f.clone())
    }

    fn ambient_norm(&self, x: &Element) -> Result<f64> {
        self.space.norm(x.single()?)
    }

    fn norm(&self, c: &SparseVec) -> Result<f64> {
        check_coefficients(self, c)?;
        self.space.norm(c)
    }

    fn dual_norm(&self, c: &SparseVec) -> Result<DualBound> {
        check_coefficients(self, c)?;
        if let Some(d) = self.space.dual() {
            return Ok(DualBound::exact(d.norm(c)?));
        }
        if let Space::Kt(t) = &self.space {
            return super::holder_bracket(self, c, t.p());
        }
        Ok(DualBound {
            lower: super::pairing_lower_bound(self, c)?,
            upper: None,
        })
    }

    fn democracy_exact(&self) -> bool {
        // symmetric spaces: every signed indicator of size m is a rearrangement
        // of 1_{1..m}; KT: both parts of the norm are determined by |A|
        self.space.symmetric() || self.kt_tables().is_some()
    }

    fn dual_democracy_exact(&self) -> bool {
        self.space.symmetric() && self.space.dual().is_some()
    }

    fn witnesses(&self, m: usize) -> Result<Vec<WitnessRecord>> {
        match self.kt_tables() {
            Some(t) if m >= 1 && m <= t.max_block() => Ok(vec![kt::kt_witness(t, m)?]),
            _ => Ok(Vec::new()),
        }
    }

    fn primitive_weight(&self) -> Option<Arc<Weight>> {
        match &self.space {
            Space::Lorentz { weight, .. } | Space::Marcinkiewicz { weight, .. } => {
                Some(weight.clone())
            }
            _ => None,
        }
    }

    fn structured_sets(&self, m: usize) -> Vec<IndexSet> {
        if m == 0 || m > self.window {
            return Vec::new();
        }
        let mut sets = vec![IndexSet::interval(1, m)];
        if let Some(t) = self.kt_tables() {
            for mb in 1..=t.max_block() {
                let a = t.block(mb);
                if a.len() >= m && a.max().unwrap() <= self.window {
                    let start = a.as_slice()[0];
                    sets.push(IndexSet::interval(start, start + m - 1));
                }
                if mb == m {
                    sets.push(t.greedy_set(mb));
                }
            }
        }
        sets
    }
}
