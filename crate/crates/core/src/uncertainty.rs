//! The uncertainty functional `Δ_x(A) = ‖Ax − ⟨Ax, x⟩x‖` and exact checkers
//! for the p-adic uncertainty inequalities and identities.
//!
//! Every inequality is decided in exponent space: both sides are magnitudes
//! `p^e` with `e ∈ ½ℤ ∪ {−∞}`, so comparisons never round. A checker only
//! errors when its hypotheses fail; a verdict with `holds = false` is always
//! a genuine violation.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::field::{Exponent, Prime, Rational};
use crate::operator::{OperatorError, POperator};
use crate::space::{PVector, SpaceError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("precondition violated: {check} requires self-adjoint operators, but {operator} is not")]
    NotSelfAdjoint { check: CheckId, operator: &'static str },
    #[error("witness violates ⟨x,y⟩ = 0 (got {0})")]
    WitnessNotOrthogonal(Rational),
    #[error("witness violates ‖y‖ ≤ 1 (norm exponent {0})")]
    WitnessTooLarge(Exponent),
    #[error("instance prime {expected} does not match the prime {found} of {what}")]
    PrimeMismatch { expected: Prime, found: Prime, what: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckId {
    #[serde(rename = "HRS_i")]
    HrsI,
    #[serde(rename = "HRS_ii")]
    HrsII,
    #[serde(rename = "HRS_iii")]
    HrsIII,
    #[serde(rename = "HRS_iv")]
    HrsIV,
    #[serde(rename = "HRS_v")]
    HrsV,
    #[serde(rename = "HRS_vi")]
    HrsVI,
    #[serde(rename = "MP_plus")]
    MpPlus,
    #[serde(rename = "MP_minus")]
    MpMinus,
    #[serde(rename = "IDENT_ii")]
    IdentII,
    #[serde(rename = "NOTE_comm_zero")]
    NoteCommZero,
    #[serde(rename = "NOTE_anticomm_double")]
    NoteAnticommDouble,
}

impl CheckId {
    pub const ALL: [CheckId; 11] = [
        CheckId::HrsI,
        CheckId::HrsII,
        CheckId::HrsIII,
        CheckId::HrsIV,
        CheckId::HrsV,
        CheckId::HrsVI,
        CheckId::MpPlus,
        CheckId::MpMinus,
        CheckId::IdentII,
        CheckId::NoteCommZero,
        CheckId::NoteAnticommDouble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckId::HrsI => "HRS_i",
            CheckId::HrsII => "HRS_ii",
            CheckId::HrsIII => "HRS_iii",
            CheckId::HrsIV => "HRS_iv",
            CheckId::HrsV => "HRS_v",
            CheckId::HrsVI => "HRS_vi",
            CheckId::MpPlus => "MP_plus",
            CheckId::MpMinus => "MP_minus",
            CheckId::IdentII => "IDENT_ii",
            CheckId::NoteCommZero => "NOTE_comm_zero",
            CheckId::NoteAnticommDouble => "NOTE_anticomm_double",
        }
    }

    /// Identities are decided by exact rational equality, not by magnitudes.
    pub fn is_equality(self) -> bool {
        matches!(self, CheckId::IdentII | CheckId::NoteCommZero | CheckId::NoteAnticommDouble)
    }

    pub fn requires_selfadjoint(self) -> bool {
        matches!(self, CheckId::HrsII | CheckId::NoteCommZero | CheckId::NoteAnticommDouble)
    }

    pub fn needs_witness(self) -> bool {
        matches!(self, CheckId::MpPlus | CheckId::MpMinus)
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CheckId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckId::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown check {s:?}"))
    }
}

/// Outcome of one check on one instance.
///
/// For inequalities `holds` means `rhs ≤ lhs`. For identities `lhs`/`rhs`
/// are the magnitudes of the two sides and `holds` is exact equality of
/// the underlying rationals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: CheckId,
    pub holds: bool,
    pub tight: bool,
    pub degenerate: bool,
    pub lhs: Exponent,
    pub rhs: Exponent,
    #[serde(default)]
    pub seed: String,
}

impl Verdict {
    fn inequality(check: CheckId, lhs: Exponent, rhs: Exponent) -> Verdict {
        Verdict {
            check,
            holds: rhs <= lhs,
            tight: lhs == rhs,
            degenerate: lhs.is_zero_magnitude() && rhs.is_zero_magnitude(),
            lhs,
            rhs,
            seed: String::new(),
        }
    }

    fn equality(check: CheckId, p: Prime, left: &Rational, right: &Rational) -> Verdict {
        let (lhs, rhs) = (left.abs_exp(p), right.abs_exp(p));
        let holds = left == right;
        Verdict {
            check,
            holds,
            tight: holds && lhs == rhs,
            degenerate: left.is_zero() && right.is_zero(),
            lhs,
            rhs,
            seed: String::new(),
        }
    }

    /// The same verdict judged with the comparison turned around: `lhs ≤ rhs`
    /// for inequalities, `≠` for identities. Only used to prove that the
    /// harness notices violations.
    pub fn reversed(&self) -> Verdict {
        let holds = if self.check.is_equality() { !self.holds } else { self.lhs <= self.rhs };
        Verdict { holds, tight: holds && self.tight, ..self.clone() }
    }

    pub fn with_seed(mut self, seed: impl Into<String>) -> Verdict {
        self.seed = seed.into();
        self
    }
}

fn same_prime(x: &PVector, a: &POperator, b: &POperator) -> Result<(), CheckError> {
    for (found, what) in [(a.prime(), "A"), (b.prime(), "B")] {
        if found != x.prime() {
            return Err(CheckError::PrimeMismatch { expected: x.prime(), found, what });
        }
    }
    Ok(())
}

fn require_selfadjoint(check: CheckId, a: &POperator, b: &POperator) -> Result<(), CheckError> {
    if !a.is_selfadjoint() {
        return Err(CheckError::NotSelfAdjoint { check, operator: "A" });
    }
    if !b.is_selfadjoint() {
        return Err(CheckError::NotSelfAdjoint { check, operator: "B" });
    }
    Ok(())
}

/// `⟨Tx, x⟩`
fn expectation(t: &POperator, x: &PVector) -> Result<Rational, CheckError> {
    Ok(t.apply(x)?.inner(x)?)
}

/// `Ax − ⟨Ax, x⟩x`
fn residual(a: &POperator, x: &PVector) -> Result<PVector, CheckError> {
    let ax = a.apply(x)?;
    let c = ax.inner(x)?;
    Ok(ax.sub(&x.scale(&c))?)
}

/// `Δ_x(A) = ‖Ax − ⟨Ax, x⟩x‖`; requires `⟨x, x⟩ = 1`.
pub fn delta(a: &POperator, x: &PVector) -> Result<Exponent, CheckError> {
    x.require_normalized()?;
    Ok(residual(a, x)?.norm())
}

/// `Δ_x(A)`, `Δ_x(B)` and whether `Δ_x(A) + Δ_x(B) ≥ max{Δ_x(A), Δ_x(B)}`,
/// the latter decided on the exact rational magnitudes.
struct Spread {
    max: Exponent,
    sum_dominates: bool,
}

fn spread(a: &POperator, b: &POperator, x: &PVector) -> Result<Spread, CheckError> {
    same_prime(x, a, b)?;
    let (da, db) = (delta(a, x)?, delta(b, x)?);
    let p = x.prime();
    let max = da.max(db);
    // norms of rational vectors have integer exponents
    let ra = da.to_rational(p).expect("integer exponent");
    let rb = db.to_rational(p).expect("integer exponent");
    let rmax = max.to_rational(p).expect("integer exponent");
    let sum_dominates = (ra + rb).real_cmp(&rmax) != Ordering::Less;
    Ok(Spread { max, sum_dominates })
}

fn max_chain(check: CheckId, s: &Spread, rhs: Exponent) -> Verdict {
    let mut v = Verdict::inequality(check, s.max, rhs);
    v.holds &= s.sum_dominates;
    v
}

/// `Δ_x(A)Δ_x(B) ≥ |⟨Ax, Bx⟩ − ⟨Ax, x⟩⟨Bx, x⟩|`
pub fn check_hrs_i(a: &POperator, b: &POperator, x: &PVector) -> Result<Verdict, CheckError> {
    same_prime(x, a, b)?;
    let lhs = delta(a, x)?.add(delta(b, x)?);
    let (ax, bx) = (a.apply(x)?, b.apply(x)?);
    let value = ax.inner(&bx)? - ax.inner(x)? * bx.inner(x)?;
    Ok(Verdict::inequality(CheckId::HrsI, lhs, value.abs_exp(x.prime())))
}

/// `Q = ⟨[A,B]x, x⟩² + (⟨{A,B}x, x⟩ − 2⟨Ax, x⟩⟨Bx, x⟩)²`
fn hrs_ii_quantity(a: &POperator, b: &POperator, x: &PVector) -> Result<Rational, CheckError> {
    let comm = expectation(&a.commutator(b)?, x)?;
    let anti = expectation(&a.anticommutator(b)?, x)?;
    let mean_a = expectation(a, x)?;
    let mean_b = expectation(b, x)?;
    let two = Rational::from(2);
    Ok(comm.square() + (anti - two * mean_a * mean_b).square())
}

/// For self-adjoint `A`, `B`: `max{Δ_x(A), Δ_x(B)} ≥ √|Q| / √|2|`.
pub fn check_hrs_ii(a: &POperator, b: &POperator, x: &PVector) -> Result<Verdict, CheckError> {
    require_selfadjoint(CheckId::HrsII, a, b)?;
    let s = spread(a, b, x)?;
    let p = x.prime();
    let q = hrs_ii_quantity(a, b, x)?;
    let rhs = q.abs_exp(p).half().sub(Rational::from(2).abs_exp(p).half());
    Ok(max_chain(CheckId::HrsII, &s, rhs))
}

/// The expansion behind part (ii):
/// `Q = 2(⟨ABx,x⟩ − ⟨Ax,x⟩⟨Bx,x⟩)² + 2(⟨BAx,x⟩ − ⟨Ax,x⟩⟨Bx,x⟩)²`.
/// Purely algebraic, so neither self-adjointness nor `⟨x, x⟩ = 1` is needed.
pub fn check_identity_ii(a: &POperator, b: &POperator, x: &PVector) -> Result<Verdict, CheckError> {
    same_prime(x, a, b)?;
    let left = hrs_ii_quantity(a, b, x)?;
    let mean = expectation(a, x)? * expectation(b, x)?;
    let ab = expectation(&a.compose(b)?, x)?;
    let ba = expectation(&b.compose(a)?, x)?;
    let two = Rational::from(2);
    let right = &two * &(ab - &mean).square() + &two * &(ba - &mean).square();
    Ok(Verdict::equality(CheckId::IdentII, x.prime(), &left, &right))
}

/// `max{Δ_x(A), Δ_x(B)} ≥ √|⟨(A*A + B*B)x, x⟩ − (⟨(A+B)x, x⟩² + ⟨(A−B)x, x⟩²)/2|`
pub fn check_hrs_iii(a: &POperator, b: &POperator, x: &PVector) -> Result<Verdict, CheckError> {
    let s = spread(a, b, x)?;
    let gram = a.adjoint().compose(a)?.add(&b.adjoint().compose(b)?)?;
    let plus = expectation(&a.add(b)?, x)?;
    let minus = expectation(&a.sub(b)?, x)?;
    let half_sum =
        (plus.square() + minus.square()).checked_div(&Rational::from(2)).expect("2 is invertible in ℚ");
    let value = expectation(&gram, x)? - half_sum;
    Ok(max_chain(CheckId::HrsIII, &s, value.abs_exp(x.prime()).half()))
}

/// `max{Δ_x(A), Δ_x(B)} ≥ √|⟨(A*A − B*B)x, x⟩ − ⟨(A+B)x, x⟩⟨(A−B)x, x⟩|`
pub fn check_hrs_iv(a: &POperator, b: &POperator, x: &PVector) -> Result<Verdict, CheckError> {
    let s = spread(a, b, x)?;
    let gram = a.adjoint().compose(a)?.sub(&b.adjoint().compose(b)?)?;
    let plus = expectation(&a.add(b)?, x)?;
    let minus = expectation(&a.sub(b)?, x)?;
    let value = expectation(&gram, x)? - plus * minus;
    Ok(max_chain(CheckId::HrsIV, &s, value.abs_exp(x.prime()).half()))
}

/// `√|⟨Tx, Tx⟩ − ⟨Tx, x⟩²|` for `T = A ± B`.
fn combined_spread(t: &POperator, x: &PVector) -> Result<Exponent, CheckError> {
    let tx = t.apply(x)?;
    let value = tx.inner(&tx)? - tx.inner(x)?.square();
    Ok(value.abs_exp(x.prime()).half())
}

/// `max{Δ_x(A), Δ_x(B)} ≥ √|⟨(A+B)x, (A+B)x⟩ − ⟨(A+B)x, x⟩²|`
pub fn check_hrs_v(a: &POperator, b: &POperator, x: &PVector) -> Result<Verdict, CheckError> {
    let s = spread(a, b, x)?;
    Ok(max_chain(CheckId::HrsV, &s, combined_spread(&a.add(b)?, x)?))
}

/// `max{Δ_x(A), Δ_x(B)} ≥ √|⟨(A−B)x, (A−B)x⟩ − ⟨(A−B)x, x⟩²|`
pub fn check_hrs_vi(a: &POperator, b: &POperator, x: &PVector) -> Result<Verdict, CheckError> {
    let s = spread(a, b, x)?;
    Ok(max_chain(CheckId::HrsVI, &s, combined_spread(&a.sub(b)?, x)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// `max{Δ_x(A), Δ_x(B)} ≥ |⟨(A ± B)x, y⟩|` for `‖y‖ ≤ 1`, `⟨x, y⟩ = 0`.
///
/// A witness breaking its own constraints is an error, not a failed verdict.
pub fn check_mp(
    a: &POperator,
    b: &POperator,
    x: &PVector,
    y: &PVector,
    sign: Sign,
) -> Result<Verdict, CheckError> {
    let s = spread(a, b, x)?;
    let overlap = x.inner(y)?;
    if !overlap.is_zero() {
        return Err(CheckError::WitnessNotOrthogonal(overlap));
    }
    if y.norm() > Exponent::ONE {
        return Err(CheckError::WitnessTooLarge(y.norm()));
    }
    let (check, t) = match sign {
        Sign::Plus => (CheckId::MpPlus, a.add(b)?),
        Sign::Minus => (CheckId::MpMinus, a.sub(b)?),
    };
    let rhs = t.apply(x)?.inner(y)?.abs_exp(x.prime());
    let mut v = max_chain(check, &s, rhs);
    v.degenerate |= y.is_zero();
    Ok(v)
}

/// The two identities that hold for self-adjoint `A`, `B`:
/// `⟨ABx, x⟩ = ⟨BAx, x⟩` (so `⟨[A,B]x, x⟩ = 0`) and `⟨{A,B}x, x⟩ = 2⟨ABx, x⟩`.
pub fn check_notes(a: &POperator, b: &POperator, x: &PVector) -> Result<(Verdict, Verdict), CheckError> {
    require_selfadjoint(CheckId::NoteCommZero, a, b)?;
    same_prime(x, a, b)?;
    let p = x.prime();
    let ab = expectation(&a.compose(b)?, x)?;
    let ba = expectation(&b.compose(a)?, x)?;
    let comm = expectation(&a.commutator(b)?, x)?;
    let anti = expectation(&a.anticommutator(b)?, x)?;
    // ⟨[A,B]x,x⟩ = ⟨ABx,x⟩ − ⟨BAx,x⟩ must vanish; compare the two terms and
    // the materialized commutator together.
    let mut vanish = Verdict::equality(CheckId::NoteCommZero, p, &ab, &ba);
    vanish.holds &= comm.is_zero();
    vanish.tight &= vanish.holds;
    let double = Verdict::equality(CheckId::NoteAnticommDouble, p, &anti, &(Rational::from(2) * ab));
    Ok((vanish, double))
}

/// A single serialized instance: vector `x`, operators `A`, `B` and optional
/// Maccone-Pati witnesses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub p: Prime,
    pub x: PVector,
    #[serde(rename = "A")]
    pub a: POperator,
    #[serde(rename = "B")]
    pub b: POperator,
    #[serde(rename = "y", default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<PVector>,
    /// Restricts evaluation to these checks; every applicable check otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckId>>,
}

impl Instance {
    pub fn validate(&self) -> Result<(), CheckError> {
        same_prime(&self.x, &self.a, &self.b)?;
        for y in &self.witnesses {
            if y.prime() != self.p {
                return Err(CheckError::PrimeMismatch { expected: self.p, found: y.prime(), what: "y" });
            }
        }
        if self.x.prime() != self.p {
            return Err(CheckError::PrimeMismatch { expected: self.p, found: self.x.prime(), what: "x" });
        }
        Ok(())
    }

    fn selfadjoint(&self) -> bool {
        self.a.is_selfadjoint() && self.b.is_selfadjoint()
    }

    /// The checks evaluated by [`Instance::evaluate`]: the requested list, or
    /// everything whose hypotheses the operators meet.
    pub fn selected_checks(&self) -> Vec<CheckId> {
        match &self.checks {
            Some(list) => list.clone(),
            None => {
                CheckId::ALL.into_iter().filter(|c| self.selfadjoint() || !c.requires_selfadjoint()).collect()
            }
        }
    }

    /// Runs one check; MP checks produce one verdict per witness.
    pub fn run(&self, check: CheckId) -> Result<Vec<Verdict>, CheckError> {
        let (a, b, x) = (&self.a, &self.b, &self.x);
        let one = |v: Verdict| Ok(vec![v]);
        match check {
            CheckId::HrsI => one(check_hrs_i(a, b, x)?),
            CheckId::HrsII => one(check_hrs_ii(a, b, x)?),
            CheckId::HrsIII => one(check_hrs_iii(a, b, x)?),
            CheckId::HrsIV => one(check_hrs_iv(a, b, x)?),
            CheckId::HrsV => one(check_hrs_v(a, b, x)?),
            CheckId::HrsVI => one(check_hrs_vi(a, b, x)?),
            CheckId::MpPlus | CheckId::MpMinus => {
                let sign = if check == CheckId::MpPlus { Sign::Plus } else { Sign::Minus };
                self.witnesses.iter().map(|y| check_mp(a, b, x, y, sign)).collect()
            }
            CheckId::IdentII => one(check_identity_ii(a, b, x)?),
            CheckId::NoteCommZero => one(check_notes(a, b, x)?.0),
            CheckId::NoteAnticommDouble => one(check_notes(a, b, x)?.1),
        }
    }

    pub fn evaluate(&self) -> Result<Vec<Verdict>, CheckError> {
        self.validate()?;
        let mut out = Vec::new();
        for check in self.selected_checks() {
            out.extend(self.run(check)?);
        }
        Ok(out)
    }
}
