//! Numeric checks of the structure behind the squared surrogates: Taylor
//! order, PSD dominance, Bregman form, DCG regret transfer, and the
//! generalization bound calculator.

mod bound;
mod bregman;
mod psd;
mod regret;
mod taylor;

pub use bound::{
    epsilon_direct, epsilon_log_space, generalization_bound, lipschitz_floor, pseudo_dimension, Bound,
    BoundInputs,
};
pub use bregman::{bregman_divergence, bregman_equivalence_check, BregmanReport};
pub use psd::{hessian_dominance_check, psd_condition, Dominance, PsdCondition};
pub use regret::{
    bayes_grid_family, dcg_regret, dcg_regret_bound_check, discounts, expected_dcg, isotonic_non_increasing,
    rg2_excess_risk, rg2_minimizer, rg2_regret_transfer_check, transfer_supremum, RegretCheck, TransferReport,
};
pub use taylor::{
    default_scales, sm_taylor_terms, taylor_residual, taylor_residual_sweep, Expansion, SweepPoint, TaylorTerms,
};
