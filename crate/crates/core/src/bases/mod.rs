//! Bases as executable objects: synthesis from coefficients, evaluation of
//! the biorthogonal functionals, norms, and the witness vectors each
//! construction comes with.

pub mod blockwise;
pub mod diamond;
pub mod kt;
pub mod perturbed;
pub mod unit;

use std::fmt;
use std::sync::Arc;

use crate::error::{input, resource, Error, Result};
use crate::greedy::truncation;
#[cfg(test)]
use crate::seqcore::indicator;
use crate::seqcore::{pair, project, IndexSet, SparseVec};
use crate::spaces::{conjugate, lp_norm};
use crate::weights::Weight;

pub use blockwise::{
    blockwise_t, blockwise_witness, build_blockwise, BlockOrder, BlockwiseBasis,
    BlockwiseCertificate,
};
pub use diamond::{build_diamond, diamond_conditionality_witness, DiamondBasis, DiamondWitness};
pub use kt::{build_kt, kt_c0_blocks, kt_witness, KtTables};
pub use perturbed::{
    build_perturbed, perturbed_growth, perturbed_witness, EtaMap, PerturbedBasis,
    PerturbedGrowthRow,
};
pub use unit::UnitBasis;

/// A point of the ambient space: one sequence, or a pair in a direct sum.
#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    Single(SparseVec),
    Pair(SparseVec, SparseVec),
}

impl Element {
    pub fn single(&self) -> Result<&SparseVec> {
        match self {
            Element::Single(f) => Ok(f),
            Element::Pair(..) => input("expected a single sequence, got a pair"),
        }
    }

    pub fn pair(&self) -> Result<(&SparseVec, &SparseVec)> {
        match self {
            Element::Pair(f, g) => Ok((f, g)),
            Element::Single(_) => input("expected a pair, got a single sequence"),
        }
    }
}

/// Two-sided information on the norm of a dual functional `Σ c_n x*_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualBound {
    pub lower: f64,
    pub upper: Option<f64>,
}

impl DualBound {
    pub fn exact(v: f64) -> Self {
        DualBound {
            lower: v,
            upper: Some(v),
        }
    }

    /// Lower and upper bound agree to relative `1e-9`.
    pub fn is_pinned(&self) -> bool {
        self.upper.map_or(false, |u| {
            (u - self.lower).abs() <= 1e-9 * u.abs().max(1e-300)
        })
    }
}

/// A basis of (a subspace of) a sequence space, truncated to a finite window
/// of coefficient indices.
pub trait Basis: Send + Sync + fmt::Debug {
    fn label(&self) -> String;

    /// Inclusive range `(lo, hi)` of admissible coefficient indices.
    fn coefficient_range(&self) -> (usize, usize);

    /// `Σ c_n x_n`.
    fn synth(&self, c: &SparseVec) -> Result<Element>;

    /// `(x*_n(x))_n` over the window.
    fn dual_eval(&self, x: &Element) -> Result<SparseVec>;

    fn ambient_norm(&self, x: &Element) -> Result<f64>;

    /// `‖Σ c_n x_n‖`.
    fn norm(&self, c: &SparseVec) -> Result<f64> {
        self.ambient_norm(&self.synth(c)?)
    }

    /// Bounds on `‖Σ c_n x*_n‖` in the dual of the closed span.
    ///
    /// The default pairs the functional with `Σ c_n x_n` and `Σ sgn(c_n) x_n`,
    /// which by biorthogonality gives a lower bound and nothing else.
    fn dual_norm(&self, c: &SparseVec) -> Result<DualBound> {
        Ok(DualBound {
            lower: pairing_lower_bound(self, c)?,
            upper: None,
        })
    }

    /// Whether every signed indicator of size `m` has norm `‖1_{1..m}‖`, so
    /// that the super-democracy functions are evaluated exactly.
    fn democracy_exact(&self) -> bool {
        false
    }

    /// Whether the same holds for the dual functionals and [`Basis::dual_norm`]
    /// is exact on them.
    fn dual_democracy_exact(&self) -> bool {
        false
    }

    /// Witness vectors the construction provides for size `m`.
    fn witnesses(&self, _m: usize) -> Result<Vec<WitnessRecord>> {
        Ok(Vec::new())
    }

    /// Index sets of size `m` worth probing first.
    fn structured_sets(&self, m: usize) -> Vec<IndexSet> {
        let (lo, hi) = self.coefficient_range();
        if lo + m - 1 <= hi && m > 0 {
            vec![IndexSet::interval(lo, lo + m - 1)]
        } else {
            Vec::new()
        }
    }

    /// The component bases of a direct-sum construction.
    fn components(&self) -> Option<(Arc<dyn Basis>, Arc<dyn Basis>)> {
        None
    }

    /// The weight whose primitive is the basis' fundamental function, when
    /// the construction is built from one.
    fn primitive_weight(&self) -> Option<Arc<Weight>> {
        None
    }
}

/// Rejects coefficients outside the basis window.
pub fn check_coefficients(b: &(impl Basis + ?Sized), c: &SparseVec) -> Result<()> {
    let (lo, hi) = b.coefficient_range();
    if let Some(n) = c.min_index() {
        if n < lo {
            return input(format!(
                "coefficient index {n} below basis range start {lo}"
            ));
        }
    }
    if let Some(n) = c.max_index() {
        if n > hi {
            return resource(format!("coefficient index {n} beyond basis window"), hi);
        }
    }
    Ok(())
}

fn pairing_lower_bound(b: &(impl Basis + ?Sized), c: &SparseVec) -> Result<f64> {
    if c.is_empty() {
        return Ok(0.0);
    }
    let signs = c.map_values(|_, v| v.signum());
    let mut best = 0.0f64;
    for probe in [c, &signs] {
        let n = b.norm(probe)?;
        if n > 0.0 {
            best = best.max(pair(c, probe).abs() / n);
        }
    }
    Ok(best)
}

/// Bracket for a basis dominating the unit vector basis of `ℓ_p` with
/// constant 1 on the coefficient side (`‖Σ c_n x_n‖ ≥ ‖c‖_p`): the upper
/// bound is `‖c‖_{p'}` and the Hölder-extremal vector gives the lower one.
pub(crate) fn holder_bracket(
    b: &(impl Basis + ?Sized),
    c: &SparseVec,
    p: f64,
) -> Result<DualBound> {
    let pp = conjugate(p);
    let upper = lp_norm(c, pp);
    if c.is_empty() {
        return Ok(DualBound::exact(0.0));
    }
    let probe = c.map_values(|_, v| v.signum() * v.abs().powf(pp - 1.0));
    let pairing = pair(c, &probe);
    let lower = (pairing / b.norm(&probe)?).max(pairing_lower_bound(b, c)?);
    Ok(DualBound {
        lower: lower.min(upper),
        upper: Some(upper),
    })
}

/// What a witness certifies when re-evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WitnessKind {
    /// `‖Σ c_n x_n‖`.
    Norm,
    /// Certified lower bound on `‖Σ c_n x*_n‖`.
    DualNorm,
    /// `‖S_A f‖ / ‖f‖`.
    Projection,
    /// `‖U(f, A)‖ / ‖f‖`.
    Truncation,
    /// `‖Σ c_n x_n‖_X / ‖Σ c_n y_n‖_Y` for the two components of a pair.
    CrossRatio,
}

impl fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WitnessKind::Norm => "norm",
            WitnessKind::DualNorm => "dual-norm",
            WitnessKind::Projection => "projection",
            WitnessKind::Truncation => "truncation",
            WitnessKind::CrossRatio => "cross-ratio",
        };
        f.write_str(s)
    }
}

/// An explicit vector (and distinguished set) whose evaluation certifies a
/// value.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessRecord {
    pub label: String,
    pub kind: WitnessKind,
    pub coefficients: SparseVec,
    pub set: IndexSet,
    /// The bound the construction promises for this witness, if any.
    pub bound: Option<f64>,
    pub note: String,
}

impl WitnessRecord {
    pub fn new(
        label: impl Into<String>,
        kind: WitnessKind,
        coefficients: SparseVec,
        set: IndexSet,
    ) -> Result<Self> {
        // `S_A f` is defined for any `A`; the other kinds need `A ⊆ supp f`
        if kind != WitnessKind::Projection && !set.is_subset(&coefficients.support()) {
            return Err(Error::Invariant(
                "witness set is not inside the support".into(),
            ));
        }
        Ok(WitnessRecord {
            label: label.into(),
            kind,
            coefficients,
            set,
            bound: None,
            note: String::new(),
        })
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Recomputes the certified value on `basis`.
    pub fn evaluate(&self, basis: &dyn Basis) -> Result<f64> {
        let c = &self.coefficients;
        match self.kind {
            WitnessKind::Norm => basis.norm(c),
            WitnessKind::DualNorm => Ok(basis.dual_norm(c)?.lower),
            WitnessKind::Projection => Ok(basis.norm(&project(c, &self.set))? / basis.norm(c)?),
            WitnessKind::Truncation => Ok(basis.norm(&truncation(c, &self.set)?)? / basis.norm(c)?),
            WitnessKind::CrossRatio => {
                let (x, y) = basis.components().ok_or_else(|| {
                    Error::Input("cross ratio needs a basis with two components".into())
                })?;
                self.evaluate_pair(x.as_ref(), y.as_ref())
            }
        }
    }

    /// `‖Σ c_n x_n‖ / ‖Σ c_n y_n‖`.
    pub fn evaluate_pair(&self, bx: &dyn Basis, by: &dyn Basis) -> Result<f64> {
        Ok(bx.norm(&self.coefficients)? / by.norm(&self.coefficients)?)
    }
}

/// Signed indicator of `set` as coefficients (all plus).
#[cfg(test)]
pub(crate) fn ones(set: &IndexSet) -> SparseVec {
    indicator(set, None).expect("all-plus indicator")
}
