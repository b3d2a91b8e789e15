//! Exact p-adic Hilbert spaces over `(ℚ, |·|_p)` and machine verification of
//! the p-adic Heisenberg-Robertson-Schrödinger and Maccone-Pati uncertainty
//! inequalities.
//!
//! No floating point is involved anywhere: scalars are exact rationals and
//! magnitudes are half-integer exponents of `p`.

pub mod campaign;
pub mod field;
pub mod operator;
pub mod space;
pub mod uncertainty;

pub use campaign::{
    emit_report, generate_instance, run_campaign, CampaignConfig, CampaignReport, Cell, ConfigError,
    OperatorClass, ReportFormat, Suite,
};
pub use field::{abs_exp, valuation, Exponent, FieldError, Prime, Rational};
pub use operator::{Domain, GeometricRule, Matrix, OperatorError, POperator};
pub use space::{
    orthogonal_witness, project_witness, sample_normalized, sample_normalized_c0, Dim, PVector, SpaceError,
};
pub use uncertainty::{
    check_hrs_i, check_hrs_ii, check_hrs_iii, check_hrs_iv, check_hrs_v, check_hrs_vi, check_identity_ii,
    check_mp, check_notes, delta, CheckError, CheckId, Instance, Sign, Verdict,
};
