//! Finite-window laboratory for greedy approximation: sequence spaces,
//! weights, explicit basis constructions and certified estimates of their
//! democracy and conditionality parameters.

pub mod bases;
pub mod error;
pub mod fit;
pub mod greedy;
pub mod seqcore;
pub mod spaces;
pub mod weights;

pub use bases::{
    blockwise_t, blockwise_witness, build_blockwise, build_diamond, build_kt, build_perturbed,
    diamond_conditionality_witness, kt_c0_blocks, kt_witness, perturbed_growth, perturbed_witness,
    Basis, BlockOrder, BlockwiseBasis, BlockwiseCertificate, DiamondBasis, DiamondWitness,
    DualBound, Element, EtaMap, KtTables, PerturbedBasis, PerturbedGrowthRow, UnitBasis,
    WitnessKind, WitnessRecord,
};
pub use error::{Error, Result};
pub use fit::{fit_loglog, FitResult};
pub use greedy::{
    bidem_quotient, dual_phi_u, e_lower, g_lower, greedy_record, greedy_sets, is_greedy_set,
    k_lower, k_lower_sweep, lambda_u_lower, phi_l, phi_u, running_max, truncation, Exactness,
    GreedyMode, GreedyRecord, ParamEstimate, Quantity, SearchBudget,
};
pub use seqcore::{indicator, pair, project, rearrange, IndexSet, Sign, SignPattern, SparseVec};
pub use spaces::{conjugate, lorentz_norm, lp_norm, marcinkiewicz_norm, PairSpace, Space};
pub use weights::{harmonic, select_interval, Weight, WeightRule};
