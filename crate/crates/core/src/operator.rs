//! Linear operators: dense matrices on `ℚ^d` and diagonal maps on the
//! finitely supported part of `c0`.
//!
//! Diagonal entries not stored explicitly follow a [`GeometricRule`],
//! `a_n = Σ_k c_k p^(k·n)`. Any term with `k < 0` makes `|a_n|_p` grow
//! without bound, which is how unbounded operators enter: their domain is
//! exactly the finitely supported vectors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::field::{Prime, Rational};
use crate::space::{Dim, PVector, SpaceError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OperatorError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("operator prime {0} does not match {1}")]
    PrimeMismatch(Prime, Prime),
    #[error("operator acts on {0} but was given an element of {1}")]
    SpaceMismatch(Dim, Dim),
    #[error("matrix is not square: row {row} has {len} entries, expected {d}")]
    NotSquare { row: usize, len: usize, d: usize },
    #[error("matrix must have at least one row")]
    Empty,
    #[error("diagonal entry index {0:?} is not a non-negative integer")]
    BadIndex(String),
    #[error("cannot parse entry rule {0:?}")]
    BadRule(String),
}

/// `a_n = Σ_k c_k p^(k·n)`, stored as `k → c_k` with no zero coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GeometricRule {
    terms: BTreeMap<i64, Rational>,
}

impl GeometricRule {
    pub fn zero() -> Self {
        GeometricRule::default()
    }

    pub fn constant(c: Rational) -> Self {
        GeometricRule::term(c, 0)
    }

    /// `c·p^(k·n)`
    pub fn term(c: Rational, k: i64) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(k, c);
        }
        GeometricRule { terms }
    }

    pub fn eval(&self, p: Prime, n: usize) -> Rational {
        self.terms.iter().map(|(k, c)| c * &p.pow(k * n as i64)).sum()
    }

    /// True if the entries are unbounded in `|·|_p`.
    pub fn is_unbounded(&self) -> bool {
        self.terms.keys().any(|k| *k < 0)
    }

    fn insert_add(terms: &mut BTreeMap<i64, Rational>, k: i64, c: Rational) {
        let entry = terms.entry(k).or_insert_with(Rational::zero);
        *entry = &*entry + &c;
        if entry.is_zero() {
            terms.remove(&k);
        }
    }

    pub fn add(&self, other: &GeometricRule) -> GeometricRule {
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            Self::insert_add(&mut terms, *k, c.clone());
        }
        GeometricRule { terms }
    }

    pub fn scale(&self, alpha: &Rational) -> GeometricRule {
        if alpha.is_zero() {
            return GeometricRule::zero();
        }
        GeometricRule { terms: self.terms.iter().map(|(k, c)| (*k, alpha * c)).collect() }
    }

    pub fn mul(&self, other: &GeometricRule) -> GeometricRule {
        let mut terms = BTreeMap::new();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                Self::insert_add(&mut terms, k1 + k2, c1 * c2);
            }
        }
        GeometricRule { terms }
    }
}

impl fmt::Display for GeometricRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("zero");
        }
        for (idx, (k, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                f.write_str(" + ")?;
            }
            if !c.is_one() {
                write!(f, "{c}*")?;
            }
            match k {
                1 => f.write_str("pow_p:n")?,
                -1 => f.write_str("pow_p:-n")?,
                k => write!(f, "pow_p:{k}n")?,
            }
        }
        Ok(())
    }
}

impl FromStr for GeometricRule {
    type Err = OperatorError;

    /// Grammar: `zero`, or terms joined by `+`, each `[coef*]pow_p:<k>n`
    /// where `<k>n` is `n`, `-n` or an integer followed by `n`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || OperatorError::BadRule(s.to_string());
        let s = s.trim();
        if s == "zero" {
            return Ok(GeometricRule::zero());
        }
        let mut rule = GeometricRule::zero();
        for term in s.split('+') {
            let term = term.trim();
            let (coef, pow) = match term.split_once('*') {
                Some((c, rest)) => (c.trim().parse::<Rational>().map_err(|_| bad())?, rest.trim()),
                None => (Rational::one(), term),
            };
            let k = pow.strip_prefix("pow_p:").and_then(|r| r.strip_suffix('n')).ok_or_else(bad)?;
            let k = match k {
                "" => 1,
                "-" => -1,
                k => k.parse::<i64>().map_err(|_| bad())?,
            };
            rule = rule.add(&GeometricRule::term(coef, k));
        }
        Ok(rule)
    }
}

impl Serialize for GeometricRule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GeometricRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Square matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    d: usize,
    entries: Vec<Rational>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, OperatorError> {
        let d = rows.len();
        if d == 0 {
            return Err(OperatorError::Empty);
        }
        let mut entries = Vec::with_capacity(d * d);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != d {
                return Err(OperatorError::NotSquare { row, len: r.len(), d });
            }
            entries.extend(r);
        }
        Ok(Matrix { d, entries })
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push(f(i, j));
            }
        }
        Matrix { d, entries }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.d + j]
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.entries.chunks(self.d).map(<[Rational]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.d, |i, j| self.get(j, i).clone())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.d).all(|i| (i + 1..self.d).all(|j| self.get(i, j) == self.get(j, i)))
    }

    fn mul(&self, other: &Matrix) -> Matrix {
        Matrix::from_fn(self.d, |i, j| {
            (0..self.d).filter(|&k| !self.get(i, k).is_zero()).map(|k| self.get(i, k) * other.get(k, j)).sum()
        })
    }

    fn zip(&self, other: &Matrix, f: impl Fn(&Rational, &Rational) -> Rational) -> Matrix {
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect();
        Matrix { d: self.d, entries }
    }
}

/// Diagonal operator on `c0`: explicit entries override the rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagonal {
    entries: BTreeMap<usize, Rational>,
    rule: GeometricRule,
}

impl Diagonal {
    pub fn new(p: Prime, entries: BTreeMap<usize, Rational>, rule: GeometricRule) -> Self {
        // Overrides that agree with the rule are dropped so equal operators compare equal.
        let entries = entries.into_iter().filter(|(n, v)| *v != rule.eval(p, *n)).collect();
        Diagonal { entries, rule }
    }

    pub fn entry(&self, p: Prime, n: usize) -> Rational {
        match self.entries.get(&n) {
            Some(v) => v.clone(),
            None => self.rule.eval(p, n),
        }
    }

    pub fn entries(&self) -> &BTreeMap<usize, Rational> {
        &self.entries
    }

    pub fn rule(&self) -> &GeometricRule {
        &self.rule
    }

    fn combine(
        &self,
        other: &Diagonal,
        p: Prime,
        entry: impl Fn(&Rational, &Rational) -> Rational,
        rule: impl Fn(&GeometricRule, &GeometricRule) -> GeometricRule,
    ) -> Diagonal {
        let rule = rule(&self.rule, &other.rule);
        let entries = self
            .entries
            .keys()
            .chain(other.entries.keys())
            .map(|&n| (n, entry(&self.entry(p, n), &other.entry(p, n))))
            .collect();
        Diagonal::new(p, entries, rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Dense(Matrix),
    Diagonal(Diagonal),
}

/// Domain of an operator; membership is decidable for every vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    AllOfKd(usize),
    FinitelySupported,
}

impl Domain {
    pub fn contains(&self, x: &PVector) -> bool {
        match self {
            Domain::AllOfKd(d) => x.dim() == Dim::Finite(*d),
            // every stored c0 vector is finitely supported
            Domain::FinitelySupported => x.dim() == Dim::C0,
        }
    }
}

/// A linear operator over `ℚ ⊂ Q_p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "RawOperator", try_from = "RawOperator")]
pub struct POperator {
    p: Prime,
    kind: OperatorKind,
    selfadjoint: bool,
}

#[derive(Serialize, Deserialize)]
struct RawOperator {
    p: Prime,
    #[serde(flatten)]
    body: RawBody,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawBody {
    Dense {
        rows: Vec<Vec<Rational>>,
    },
    Diagonal {
        // string keys: integer keys do not survive `flatten`
        #[serde(default)]
        entries: BTreeMap<String, Rational>,
        #[serde(default)]
        rule: GeometricRule,
    },
}

impl From<POperator> for RawOperator {
    fn from(op: POperator) -> Self {
        let body = match op.kind {
            OperatorKind::Dense(m) => RawBody::Dense { rows: m.rows() },
            OperatorKind::Diagonal(d) => RawBody::Diagonal {
                entries: d.entries.into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
                rule: d.rule,
            },
        };
        RawOperator { p: op.p, body }
    }
}

impl TryFrom<RawOperator> for POperator {
    type Error = OperatorError;

    fn try_from(raw: RawOperator) -> Result<Self, OperatorError> {
        match raw.body {
            RawBody::Dense { rows } => Ok(POperator::dense(raw.p, Matrix::from_rows(rows)?)),
            RawBody::Diagonal { entries, rule } => {
                let entries = entries
                    .into_iter()
                    .map(|(k, v)| k.parse::<usize>().map(|n| (n, v)).map_err(|_| OperatorError::BadIndex(k)))
                    .collect::<Result<_, _>>()?;
                Ok(POperator::diagonal(raw.p, entries, rule))
            }
        }
    }
}

impl POperator {
    fn from_kind(p: Prime, kind: OperatorKind) -> Self {
        let selfadjoint = match &kind {
            OperatorKind::Dense(m) => m.is_symmetric(),
            OperatorKind::Diagonal(_) => true,
        };
        POperator { p, kind, selfadjoint }
    }

    pub fn dense(p: Prime, m: Matrix) -> Self {
        POperator::from_kind(p, OperatorKind::Dense(m))
    }

    pub fn from_rows(p: Prime, rows: Vec<Vec<Rational>>) -> Result<Self, OperatorError> {
        Ok(POperator::dense(p, Matrix::from_rows(rows)?))
    }

    /// Dense diagonal matrix `diag(a_0, …, a_{d−1})` on `ℚ^d`.
    pub fn dense_diag(p: Prime, diag: &[Rational]) -> Self {
        let m = Matrix::from_fn(diag.len(), |i, j| if i == j { diag[i].clone() } else { Rational::zero() });
        POperator::dense(p, m)
    }

    pub fn diagonal(p: Prime, entries: BTreeMap<usize, Rational>, rule: GeometricRule) -> Self {
        POperator::from_kind(p, OperatorKind::Diagonal(Diagonal::new(p, entries, rule)))
    }

    /// `c·I` on the given space.
    pub fn scalar(p: Prime, dim: Dim, c: Rational) -> Self {
        match dim {
            Dim::Finite(d) => POperator::dense_diag(p, &vec![c; d]),
            Dim::C0 => POperator::diagonal(p, BTreeMap::new(), GeometricRule::constant(c)),
        }
    }

    pub fn identity(p: Prime, dim: Dim) -> Self {
        POperator::scalar(p, dim, Rational::one())
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    /// The space the operator acts on.
    pub fn space(&self) -> Dim {
        match &self.kind {
            OperatorKind::Dense(m) => Dim::Finite(m.dim()),
            OperatorKind::Diagonal(_) => Dim::C0,
        }
    }

    pub fn domain(&self) -> Domain {
        match &self.kind {
            OperatorKind::Dense(m) => Domain::AllOfKd(m.dim()),
            OperatorKind::Diagonal(_) => Domain::FinitelySupported,
        }
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.selfadjoint
    }

    fn check_vector(&self, x: &PVector) -> Result<(), OperatorError> {
        if x.prime() != self.p {
            return Err(OperatorError::PrimeMismatch(self.p, x.prime()));
        }
        if !self.domain().contains(x) {
            return Err(OperatorError::SpaceMismatch(self.space(), x.dim()));
        }
        Ok(())
    }

    fn check_operator(&self, other: &POperator) -> Result<(), OperatorError> {
        if other.p != self.p {
            return Err(OperatorError::PrimeMismatch(self.p, other.p));
        }
        if other.space() != self.space() {
            return Err(OperatorError::SpaceMismatch(self.space(), other.space()));
        }
        Ok(())
    }

    pub fn apply(&self, x: &PVector) -> Result<PVector, OperatorError> {
        self.check_vector(x)?;
        match &self.kind {
            OperatorKind::Dense(m) => {
                let coords = (0..m.dim())
                    .map(|i| {
                        let v = x.coords().iter().map(|(j, xj)| m.get(i, *j) * xj).sum();
                        (i, v)
                    })
                    .collect();
                Ok(PVector::from_sorted_unchecked(self.p, x.dim(), coords))
            }
            OperatorKind::Diagonal(diag) => {
                let coords = x.coords().iter().map(|(n, v)| (*n, &diag.entry(self.p, *n) * v)).collect();
                Ok(PVector::from_sorted_unchecked(self.p, x.dim(), coords))
            }
        }
    }

    /// The unique `T*` with `⟨Tx, y⟩ = ⟨x, T*y⟩`: the transpose, since the
    /// form is symmetric and bilinear.
    pub fn adjoint(&self) -> POperator {
        match &self.kind {
            OperatorKind::Dense(m) => POperator::dense(self.p, m.transpose()),
            OperatorKind::Diagonal(_) => self.clone(),
        }
    }

    /// `self ∘ other`, i.e. `(AB)x = A(Bx)`.
    pub fn compose(&self, other: &POperator) -> Result<POperator, OperatorError> {
        self.check_operator(other)?;
        let kind = match (&self.kind, &other.kind) {
            (OperatorKind::Dense(a), OperatorKind::Dense(b)) => OperatorKind::Dense(a.mul(b)),
            (OperatorKind::Diagonal(a), OperatorKind::Diagonal(b)) => {
                OperatorKind::Diagonal(a.combine(b, self.p, |x, y| x * y, GeometricRule::mul))
            }
            _ => unreachable!("operators on the same space have the same kind"),
        };
        Ok(POperator::from_kind(self.p, kind))
    }

    pub fn add(&self, other: &POperator) -> Result<POperator, OperatorError> {
        self.check_operator(other)?;
        let kind = match (&self.kind, &other.kind) {
            (OperatorKind::Dense(a), OperatorKind::Dense(b)) => OperatorKind::Dense(a.zip(b, |x, y| x + y)),
            (OperatorKind::Diagonal(a), OperatorKind::Diagonal(b)) => {
                OperatorKind::Diagonal(a.combine(b, self.p, |x, y| x + y, GeometricRule::add))
            }
            _ => unreachable!("operators on the same space have the same kind"),
        };
        Ok(POperator::from_kind(self.p, kind))
    }

    pub fn scale(&self, alpha: &Rational) -> POperator {
        let kind = match &self.kind {
            OperatorKind::Dense(m) => {
                OperatorKind::Dense(Matrix { d: m.d, entries: m.entries.iter().map(|v| alpha * v).collect() })
            }
            OperatorKind::Diagonal(diag) => OperatorKind::Diagonal(Diagonal::new(
                self.p,
                diag.entries.iter().map(|(n, v)| (*n, alpha * v)).collect(),
                diag.rule.scale(alpha),
            )),
        };
        POperator::from_kind(self.p, kind)
    }

    pub fn neg(&self) -> POperator {
        self.scale(&Rational::from(-1))
    }

    pub fn sub(&self, other: &POperator) -> Result<POperator, OperatorError> {
        self.add(&other.neg())
    }

    /// `[A, B] = AB − BA`
    pub fn commutator(&self, other: &POperator) -> Result<POperator, OperatorError> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    /// `{A, B} = AB + BA`
    pub fn anticommutator(&self, other: &POperator) -> Result<POperator, OperatorError> {
        self.compose(other)?.add(&other.compose(self)?)
    }
}

pub fn commutator(a: &POperator, b: &POperator) -> Result<POperator, OperatorError> {
    a.commutator(b)
}

pub fn anticommutator(a: &POperator, b: &POperator) -> Result<POperator, OperatorError> {
    a.anticommutator(b)
}
