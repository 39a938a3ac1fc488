//! Norm evaluators: `ℓ_p`, weighted Lorentz `d_{1,q}(w)`, Marcinkiewicz
//! `m(w)` / `m_0(w)`, the block space used by the KT construction, and the
//! max-norm direct sum of two spaces.

use std::fmt;
use std::sync::Arc;

use crate::bases::kt::KtTables;
use crate::error::{input, resource, Result};
use crate::seqcore::{rearrange, SparseVec};
use crate::weights::Weight;

/// Largest windowed doubling ratio accepted for a primitive weight.
pub const MAX_DOUBLING_RATIO: f64 = 1e6;

#[derive(Clone, Debug)]
pub enum Space {
    /// `ℓ_p`, `0 < p ≤ ∞`.
    Lp { p: f64 },
    /// `d_{1,q}(w)`; `q = ∞` is the weak space.
    Lorentz { weight: Arc<Weight>, q: f64 },
    /// `m(w)`, or its separable part `m_0(w)` (same norm, label only).
    Marcinkiewicz {
        weight: Arc<Weight>,
        separable: bool,
    },
    /// `max(ℓ_p, ♣)` over the KT blocks.
    Kt(Arc<KtTables>),
}

impl Space {
    pub fn lp(p: f64) -> Result<Space> {
        if !(p > 0.0) {
            return input(format!("lp needs p > 0, got {p}"));
        }
        Ok(Space::Lp { p })
    }

    pub fn lorentz(weight: Arc<Weight>, q: f64) -> Result<Space> {
        if !(q > 0.0) {
            return input(format!("lorentz needs q > 0, got {q}"));
        }
        check_doubling(&weight)?;
        Ok(Space::Lorentz { weight, q })
    }

    pub fn marcinkiewicz(weight: Arc<Weight>, separable: bool) -> Result<Space> {
        check_doubling(&weight)?;
        Ok(Space::Marcinkiewicz { weight, separable })
    }

    pub fn kt(tables: Arc<KtTables>) -> Space {
        Space::Kt(tables)
    }

    pub fn norm(&self, f: &SparseVec) -> Result<f64> {
        match self {
            Space::Lp { p } => Ok(lp_norm(f, *p)),
            Space::Lorentz { weight, q } => lorentz_norm(f, weight, *q),
            Space::Marcinkiewicz { weight, .. } => marcinkiewicz_norm(f, weight),
            Space::Kt(t) => Ok(lp_norm(f, t.p()).max(t.club_norm(f)?)),
        }
    }

    /// Rearrangement invariance.
    pub fn symmetric(&self) -> bool {
        !matches!(self, Space::Kt(_))
    }

    /// `Some(p)` when `‖f + g‖^p ≤ ‖f‖^p + ‖g‖^p` is known to hold.
    ///
    /// `None` for the quasi-normed cases whose exponent is not tracked.
    pub fn convexity(&self) -> Option<f64> {
        match self {
            Space::Lp { p } => Some(p.min(1.0)),
            Space::Lorentz { weight, q } => {
                if q.is_infinite() || *q < 1.0 {
                    return None;
                }
                // d_{1,q}(w) is normed when s_n^{q-1} w_n is non-increasing
                let v: Vec<f64> = weight
                    .values()
                    .iter()
                    .zip(weight.primitives())
                    .map(|(w, s)| s.powf(q - 1.0) * w)
                    .collect();
                v.windows(2)
                    .all(|p| p[1] <= p[0] * (1.0 + 1e-12))
                    .then_some(1.0)
            }
            Space::Marcinkiewicz { .. } | Space::Kt(_) => Some(1.0),
        }
    }

    /// The known dual space, when there is one.
    pub fn dual(&self) -> Option<Space> {
        match self {
            Space::Lp { p } if *p >= 1.0 => Some(Space::Lp { p: conjugate(*p) }),
            Space::Lorentz { weight, q } if *q == 1.0 => Some(Space::Marcinkiewicz {
                weight: weight.clone(),
                separable: false,
            }),
            Space::Marcinkiewicz { weight, .. } => Some(Space::Lorentz {
                weight: weight.clone(),
                q: 1.0,
            }),
            _ => None,
        }
    }

    /// The largest support size the evaluator can handle, if bounded.
    pub fn capacity(&self) -> Option<usize> {
        match self {
            Space::Lp { .. } => None,
            Space::Lorentz { weight, .. } | Space::Marcinkiewicz { weight, .. } => {
                Some(weight.horizon())
            }
            Space::Kt(t) => Some(t.window()),
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Lp { p } => write!(f, "l_{p}"),
            Space::Lorentz { weight, q } => write!(f, "d_1,{q}({})", weight.rule()),
            Space::Marcinkiewicz { weight, separable } => {
                let name = if *separable { "m_0" } else { "m" };
                write!(f, "{name}({})", weight.rule())
            }
            Space::Kt(t) => write!(f, "kt(p={}, M={})", t.p(), t.max_block()),
        }
    }
}

fn check_doubling(weight: &Weight) -> Result<()> {
    let s = weight.primitives();
    let ratio = (1..=s.len() / 2)
        .map(|m| s[2 * m - 1] / s[m - 1])
        .fold(0.0, f64::max);
    if ratio > MAX_DOUBLING_RATIO {
        return input(format!(
            "primitive weight {} has doubling ratio {ratio} on its horizon",
            weight.rule()
        ));
    }
    Ok(())
}

/// `p' = p/(p-1)` with `1' = ∞` and `∞' = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub fn lp_norm(f: &SparseVec, p: f64) -> f64 {
    let abs = f.iter().map(|(_, v)| v.abs());
    if p.is_infinite() {
        abs.fold(0.0, f64::max)
    } else if p == 1.0 {
        abs.sum()
    } else if p == 2.0 {
        abs.map(|x| x * x).sum::<f64>().sqrt()
    } else {
        abs.map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn need(weight: &Weight, len: usize) -> Result<()> {
    if len > weight.horizon() {
        return resource(
            format!("support of size {len} exceeds weight horizon"),
            weight.horizon(),
        );
    }
    Ok(())
}

/// `(Σ a_n^q s_n^{q-1} w_n)^{1/q}` over the non-increasing rearrangement;
/// `sup_n a_n s_n` for `q = ∞`.
pub fn lorentz_norm(f: &SparseVec, weight: &Weight, q: f64) -> Result<f64> {
    let a = rearrange(f);
    need(weight, a.len())?;
    let (w, s) = (weight.values(), weight.primitives());
    let terms = a.iter().zip(w).zip(s);
    Ok(if q.is_infinite() {
        terms.map(|((a, _), s)| a * s).fold(0.0, f64::max)
    } else if q == 1.0 {
        terms.map(|((a, w), _)| a * w).sum()
    } else {
        terms
            .map(|((a, w), s)| a.powf(q) * s.powf(q - 1.0) * w)
            .sum::<f64>()
            .powf(1.0 / q)
    })
}

/// `max_m (Σ_{n≤m} a_n) / s_m`; the max is attained within the support size.
pub fn marcinkiewicz_norm(f: &SparseVec, weight: &Weight) -> Result<f64> {
    let a = rearrange(f);
    need(weight, a.len())?;
    let mut acc = 0.0;
    let mut best = 0.0f64;
    for (a, s) in a.iter().zip(weight.primitives()) {
        acc += a;
        best = best.max(acc / s);
    }
    Ok(best)
}

/// Direct sum `X ⊕ Y` with `‖(f, g)‖ = max(‖f‖_X, ‖g‖_Y)`.
#[derive(Clone, Debug)]
pub struct PairSpace {
    pub left: Space,
    pub right: Space,
}

impl PairSpace {
    pub fn new(left: Space, right: Space) -> Self {
        PairSpace { left, right }
    }

    pub fn norm(&self, f: &SparseVec, g: &SparseVec) -> Result<f64> {
        summax_norm(f, g, self)
    }

    /// Dual of a max-sum is the ℓ_1-sum of the duals.
    pub fn dual_norm(&self, f: &SparseVec, g: &SparseVec) -> Option<Result<f64>> {
        let (l, r) = (self.left.dual()?, self.right.dual()?);
        Some(l.norm(f).and_then(|a| r.norm(g).map(|b| a + b)))
    }
}

pub fn summax_norm(f: &SparseVec, g: &SparseVec, xy: &PairSpace) -> Result<f64> {
    Ok(xy.left.norm(f)?.max(xy.right.norm(g)?))
}
