//! Constants, estimate audits, differentiability probes and verification oracles.

mod constants;
mod continuation;
mod fields;
mod manufactured;
mod probes;
mod report;

pub use constants::{
    check_smallness, curl_norm, estimate_constants, l4_embedding_lower_bound, poincare_constant,
    smallness_verdict, ConstantsReport, KappaSource, SmallnessVerdict,
};
pub use continuation::{continuation_alpha, ContinuationStudy, ControlProblem};
pub use fields::{random_control, RandomStream};
pub use manufactured::{manufactured_case, ManufacturedCase};
pub use probes::{
    gateaux_probe, lipschitz_probe, navier_stokes_adjoint_residual, verify_identities,
    verify_state_estimates,
};
pub use report::{log_slope, Audit, ProbeReport};
