//! The two concrete p-adic Hilbert spaces: `ℚ^d` with the max norm, and
//! finitely supported null sequences (`c0`). Both carry the symmetric
//! bilinear form `⟨x, y⟩ = Σ x_j y_j`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::field::{Exponent, Prime, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpaceError {
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(Prime, Prime),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(Dim, Dim),
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("duplicate coordinate index {0}")]
    DuplicateIndex(usize),
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("normalized sampling needs at least two coordinates, got {0}")]
    TooFewCoordinates(usize),
    #[error("hypothesis violated: ⟨x,x⟩ ≠ 1 (got {0})")]
    NotNormalized(Rational),
}

/// Ambient space of a vector: `ℚ^d`, or the finitely supported part of `c0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    Finite(usize),
    C0,
}

impl Dim {
    fn join(self, other: Dim) -> Result<Dim, SpaceError> {
        if self == other {
            Ok(self)
        } else {
            Err(SpaceError::DimMismatch(self, other))
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Finite(d) => write!(f, "{d}"),
            Dim::C0 => f.write_str("c0"),
        }
    }
}

impl Serialize for Dim {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Dim::Finite(d) => s.serialize_u64(*d as u64),
            Dim::C0 => s.serialize_str("c0"),
        }
    }
}

impl<'de> Deserialize<'de> for Dim {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(0) => Err(serde::de::Error::custom(SpaceError::ZeroDimension)),
            Raw::N(n) => Ok(Dim::Finite(n)),
            Raw::S(s) if s == "c0" => Ok(Dim::C0),
            Raw::S(s) => {
                Err(serde::de::Error::custom(format!("dim must be a positive integer or \"c0\", got {s:?}")))
            }
        }
    }
}

/// A vector stored sparsely: strictly increasing indices, nonzero values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawVector")]
pub struct PVector {
    p: Prime,
    dim: Dim,
    coords: Vec<(usize, Rational)>,
}

#[derive(Deserialize)]
struct RawVector {
    p: Prime,
    dim: Dim,
    coords: Vec<(usize, Rational)>,
}

impl TryFrom<RawVector> for PVector {
    type Error = SpaceError;

    fn try_from(raw: RawVector) -> Result<Self, SpaceError> {
        PVector::from_coords(raw.p, raw.dim, raw.coords)
    }
}

impl PVector {
    pub fn zero(p: Prime, dim: Dim) -> Self {
        PVector { p, dim, coords: Vec::new() }
    }

    /// The standard basis vector `e_j` (0-based index).
    pub fn basis(p: Prime, dim: Dim, j: usize) -> Result<Self, SpaceError> {
        PVector::from_coords(p, dim, vec![(j, Rational::one())])
    }

    /// Builds a vector from `(index, value)` pairs in any order; zero values are dropped.
    pub fn from_coords(p: Prime, dim: Dim, mut coords: Vec<(usize, Rational)>) -> Result<Self, SpaceError> {
        if dim == Dim::Finite(0) {
            return Err(SpaceError::ZeroDimension);
        }
        coords.sort_by_key(|(i, _)| *i);
        for w in coords.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SpaceError::DuplicateIndex(w[0].0));
            }
        }
        if let (Dim::Finite(d), Some((last, _))) = (dim, coords.last()) {
            if *last >= d {
                return Err(SpaceError::IndexOutOfRange { index: *last, dim: d });
            }
        }
        coords.retain(|(_, v)| !v.is_zero());
        Ok(PVector { p, dim, coords })
    }

    /// A vector of `ℚ^d` from all of its coordinates.
    pub fn from_dense(p: Prime, values: Vec<Rational>) -> Result<Self, SpaceError> {
        let dim = Dim::Finite(values.len());
        PVector::from_coords(p, dim, values.into_iter().enumerate().collect())
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// Nonzero coordinates in increasing index order.
    pub fn coords(&self) -> &[(usize, Rational)] {
        &self.coords
    }

    pub fn get(&self, index: usize) -> Rational {
        match self.coords.binary_search_by_key(&index, |(i, _)| *i) {
            Ok(pos) => self.coords[pos].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    /// Largest stored index plus one (0 for the zero vector).
    pub fn support_end(&self) -> usize {
        self.coords.last().map_or(0, |(i, _)| i + 1)
    }

    /// All coordinates `0..d` of a `ℚ^d` vector, or `0..support_end` in `c0`.
    pub fn to_dense(&self) -> Vec<Rational> {
        let len = match self.dim {
            Dim::Finite(d) => d,
            Dim::C0 => self.support_end(),
        };
        let mut out = vec![Rational::zero(); len];
        for (i, v) in &self.coords {
            out[*i] = v.clone();
        }
        out
    }

    /// `‖x‖ = max_j |x_j|`, as an exponent.
    pub fn norm(&self) -> Exponent {
        self.coords.iter().map(|(_, v)| v.abs_exp(self.p)).max().unwrap_or(Exponent::NegInfinity)
    }

    fn compatible(&self, other: &PVector) -> Result<(), SpaceError> {
        if self.p != other.p {
            return Err(SpaceError::PrimeMismatch(self.p, other.p));
        }
        self.dim.join(other.dim).map(|_| ())
    }

    /// `⟨x, y⟩ = Σ x_j y_j` over the common support.
    pub fn inner(&self, other: &PVector) -> Result<Rational, SpaceError> {
        self.compatible(other)?;
        let mut acc = Rational::zero();
        let (mut i, mut j) = (0, 0);
        while i < self.coords.len() && j < other.coords.len() {
            let (a, x) = &self.coords[i];
            let (b, y) = &other.coords[j];
            match a.cmp(b) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += &(x * y);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(acc)
    }

    fn merge(
        &self,
        other: &PVector,
        f: impl Fn(Option<&Rational>, Option<&Rational>) -> Rational,
    ) -> Result<PVector, SpaceError> {
        self.compatible(other)?;
        let mut out = Vec::with_capacity(self.coords.len() + other.coords.len());
        let (mut i, mut j) = (0, 0);
        loop {
            let (index, value) = match (self.coords.get(i), other.coords.get(j)) {
                (None, None) => break,
                (Some((a, x)), None) => {
                    i += 1;
                    (*a, f(Some(x), None))
                }
                (None, Some((b, y))) => {
                    j += 1;
                    (*b, f(None, Some(y)))
                }
                (Some((a, x)), Some((b, y))) => match a.cmp(b) {
                    std::cmp::Ordering::Less => {
                        i += 1;
                        (*a, f(Some(x), None))
                    }
                    std::cmp::Ordering::Greater => {
                        j += 1;
                        (*b, f(None, Some(y)))
                    }
                    std::cmp::Ordering::Equal => {
                        i += 1;
                        j += 1;
                        (*a, f(Some(x), Some(y)))
                    }
                },
            };
            if !value.is_zero() {
                out.push((index, value));
            }
        }
        Ok(PVector { p: self.p, dim: self.dim, coords: out })
    }

    pub fn add(&self, other: &PVector) -> Result<PVector, SpaceError> {
        self.merge(other, |x, y| match (x, y) {
            (Some(x), Some(y)) => x + y,
            (Some(v), None) | (None, Some(v)) => v.clone(),
            (None, None) => Rational::zero(),
        })
    }

    pub fn sub(&self, other: &PVector) -> Result<PVector, SpaceError> {
        self.merge(other, |x, y| match (x, y) {
            (Some(x), Some(y)) => x - y,
            (Some(x), None) => x.clone(),
            (None, Some(y)) => -y,
            (None, None) => Rational::zero(),
        })
    }

    pub fn scale(&self, alpha: &Rational) -> PVector {
        if alpha.is_zero() {
            return PVector::zero(self.p, self.dim);
        }
        let coords = self.coords.iter().map(|(i, v)| (*i, alpha * v)).collect();
        PVector { p: self.p, dim: self.dim, coords }
    }

    /// Rebuilds the vector with new values on the same index set.
    pub(crate) fn from_sorted_unchecked(p: Prime, dim: Dim, coords: Vec<(usize, Rational)>) -> Self {
        let coords = coords.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        PVector { p, dim, coords }
    }

    /// Fails unless `⟨x, x⟩ = 1`.
    pub fn require_normalized(&self) -> Result<(), SpaceError> {
        let q = self.inner(self)?;
        if q.is_one() {
            Ok(())
        } else {
            Err(SpaceError::NotNormalized(q))
        }
    }
}

/// Random rational with numerator in `[-bound, bound]` and denominator in
/// `[1, bound]`. Half of the draws are multiplied by `p^k`, `k ∈ [-2, 2]`,
/// so that valuations spread beyond what small integers give.
pub fn random_rational<R: Rng + ?Sized>(rng: &mut R, p: Prime, bound: u64) -> Rational {
    let b = bound.max(1) as i64;
    let num = rng.random_range(-b..=b);
    let den = rng.random_range(1..=b);
    let base = Rational::new(num, den).expect("denominator is positive");
    if rng.random_bool(0.5) {
        base * p.pow(rng.random_range(-2..=2))
    } else {
        base
    }
}

/// Point of the unit quadric `Σ x_j² = 1` from stereographic coordinates `u`:
/// with `s = Σ u_k²`, `x_0 = (1 − s)/(1 + s)` and `x_{k+1} = 2u_k/(1 + s)`.
pub fn stereographic(u: &[Rational]) -> Vec<Rational> {
    let s: Rational = u.iter().map(Rational::square).sum();
    let denom = Rational::one() + &s;
    let inv = denom.recip().expect("1 + s > 0 over the rationals");
    let mut out = Vec::with_capacity(u.len() + 1);
    out.push((Rational::one() - s) * &inv);
    let two_inv = &inv + &inv;
    out.extend(u.iter().map(|uk| uk * &two_inv));
    out
}

/// A vector of `ℚ^d` with `⟨x, x⟩ = 1` exactly, built on the rational unit
/// quadric rather than by normalizing (which is impossible in general since
/// `⟨x, x⟩` need not be a square in `Q_p`).
pub fn sample_normalized<R: Rng + ?Sized>(
    p: Prime,
    d: usize,
    rng: &mut R,
    size_bound: u64,
) -> Result<PVector, SpaceError> {
    if d < 2 {
        return Err(SpaceError::TooFewCoordinates(d));
    }
    let u: Vec<Rational> = (0..d - 1).map(|_| random_rational(rng, p, size_bound)).collect();
    PVector::from_dense(p, stereographic(&u))
}

/// Normalized `c0` vector supported on the given indices.
pub fn sample_normalized_c0<R: Rng + ?Sized>(
    p: Prime,
    support: &[usize],
    rng: &mut R,
    size_bound: u64,
) -> Result<PVector, SpaceError> {
    if support.len() < 2 {
        return Err(SpaceError::TooFewCoordinates(support.len()));
    }
    let u: Vec<Rational> = (0..support.len() - 1).map(|_| random_rational(rng, p, size_bound)).collect();
    let coords = support.iter().copied().zip(stereographic(&u)).collect();
    PVector::from_coords(p, Dim::C0, coords)
}

/// Projects `z` onto the orthogonal complement of a normalized `x` and
/// rescales by a power of `p` so the result has norm at most 1.
///
/// `w = z − ⟨z, x⟩x` satisfies `⟨x, w⟩ = ⟨z, x⟩ − ⟨z, x⟩⟨x, x⟩ = 0`. If
/// `‖w‖ = p^m` with `m > 0` the witness is `p^m·w`, which has norm exactly 1.
pub fn project_witness(x: &PVector, z: &PVector) -> Result<PVector, SpaceError> {
    x.require_normalized()?;
    let w = z.sub(&x.scale(&z.inner(x)?))?;
    Ok(rescale_into_unit_ball(&w))
}

pub fn rescale_into_unit_ball(w: &PVector) -> PVector {
    match w.norm() {
        Exponent::Finite { twice } if twice > 0 => w.scale(&w.p.pow(twice / 2)),
        _ => w.clone(),
    }
}

/// Random orthogonal witness `y` for the normalized vector `x`: `⟨x, y⟩ = 0`
/// and `‖y‖ ≤ 1`. May be the zero vector.
///
/// For `c0` vectors `z` is drawn on the support of `x` plus one fresh index.
pub fn orthogonal_witness<R: Rng + ?Sized>(
    x: &PVector,
    rng: &mut R,
    size_bound: u64,
) -> Result<PVector, SpaceError> {
    let p = x.prime();
    let z = match x.dim() {
        Dim::Finite(d) => {
            PVector::from_dense(p, (0..d).map(|_| random_rational(rng, p, size_bound)).collect())?
        }
        Dim::C0 => {
            let mut coords: Vec<(usize, Rational)> =
                x.coords().iter().map(|(i, _)| (*i, random_rational(rng, p, size_bound))).collect();
            coords.push((x.support_end(), random_rational(rng, p, size_bound)));
            PVector::from_coords(p, Dim::C0, coords)?
        }
    };
    project_witness(x, &z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn vec_of(prime: u64, vals: &[&str]) -> PVector {
        PVector::from_dense(p(prime), vals.iter().map(|s| q(s)).collect()).unwrap()
    }

    #[test]
    fn norm_examples() {
        assert_eq!(vec_of(5, &["3/5", "4/5"]).norm(), Exponent::from_int(1));
        assert_eq!(PVector::zero(p(5), Dim::Finite(3)).norm(), Exponent::NegInfinity);
        assert_eq!(vec_of(3, &["1", "9"]).norm(), Exponent::ONE);
    }

    #[test]
    fn inner_examples() {
        let x = vec_of(5, &["3/5", "4/5"]);
        assert_eq!(x.inner(&x).unwrap(), Rational::one());
        let e1 = PVector::basis(p(5), Dim::Finite(2), 0).unwrap();
        let e2 = PVector::basis(p(5), Dim::Finite(2), 1).unwrap();
        assert_eq!(e1.inner(&e2).unwrap(), Rational::zero());
        assert_eq!(x.inner(&PVector::zero(p(5), Dim::Finite(2))).unwrap(), Rational::zero());
    }

    #[test]
    fn inner_rejects_mismatch() {
        let x = vec_of(5, &["1", "2"]);
        let y = vec_of(3, &["1", "2"]);
        let z = vec_of(5, &["1", "2", "3"]);
        assert!(matches!(x.inner(&y), Err(SpaceError::PrimeMismatch(..))));
        assert!(matches!(x.inner(&z), Err(SpaceError::DimMismatch(..))));
        assert!(matches!(x.add(&z), Err(SpaceError::DimMismatch(..))));
    }

    #[test]
    fn stereographic_examples() {
        assert_eq!(stereographic(&[q("2")]), vec![q("-3/5"), q("4/5")]);
        assert_eq!(stereographic(&[q("0")]), vec![q("1"), q("0")]);
    }

    #[test]
    fn sampled_vectors_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for prime in [2, 3, 5, 97] {
            for d in 2..=6 {
                let x = sample_normalized(p(prime), d, &mut rng, 16).unwrap();
                assert_eq!(x.inner(&x).unwrap(), Rational::one());
                assert!(x.norm() >= Exponent::ONE);
            }
        }
        assert!(sample_normalized(p(3), 1, &mut rng, 16).is_err());
    }

    #[test]
    fn witness_examples() {
        let prime = p(5);
        let e1 = PVector::basis(prime, Dim::Finite(2), 0).unwrap();
        let e2 = PVector::basis(prime, Dim::Finite(2), 1).unwrap();
        assert_eq!(project_witness(&e1, &e2).unwrap(), e2);
        assert!(project_witness(&e1, &e1).unwrap().is_zero());

        // w = e1 + (3/5)x = (16/25, 12/25), ‖w‖ = 5², so y = 25·w = (16, 12).
        let x = vec_of(5, &["-3/5", "4/5"]);
        let y = project_witness(&x, &e1).unwrap();
        assert_eq!(y, vec_of(5, &["16", "12"]));
        assert_eq!(x.inner(&y).unwrap(), Rational::zero());
        assert_eq!(y.norm(), Exponent::ONE);
    }

    #[test]
    fn witness_requires_normalized_x() {
        let x = vec_of(5, &["1", "1"]);
        let z = vec_of(5, &["1", "0"]);
        assert!(matches!(project_witness(&x, &z), Err(SpaceError::NotNormalized(_))));
    }

    #[test]
    fn vector_arithmetic() {
        let x = vec_of(3, &["1/3", "2"]);
        assert!(x.sub(&x).unwrap().is_zero());
        let e1 = PVector::basis(p(3), Dim::Finite(2), 0).unwrap();
        let s = e1.scale(&q("3"));
        assert_eq!(s.to_dense(), vec![q("3"), q("0")]);
        assert_eq!(s.norm(), Exponent::from_int(-1));

        let a = PVector::from_coords(p(3), Dim::C0, vec![(0, q("1"))]).unwrap();
        let b = PVector::from_coords(p(3), Dim::C0, vec![(4, q("2"))]).unwrap();
        let sum = a.add(&b).unwrap();
        assert_eq!(sum.coords(), &[(0, q("1")), (4, q("2"))]);
    }

    #[test]
    fn construction_validates_indices() {
        assert!(PVector::from_coords(p(3), Dim::Finite(2), vec![(2, q("1"))]).is_err());
        assert!(PVector::from_coords(p(3), Dim::C0, vec![(2, q("1")), (2, q("1"))]).is_err());
        let v = PVector::from_coords(p(3), Dim::C0, vec![(5, q("1")), (1, q("0"))]).unwrap();
        assert_eq!(v.coords(), &[(5, q("1"))]);
    }

    #[test]
    fn vector_json() {
        let x = vec_of(5, &["-3/5", "4/5"]);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"p":5,"dim":2,"coords":[[0,"-3/5"],[1,"4/5"]]}"#);
        let back: PVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        let c0: PVector = serde_json::from_str(r#"{"p":3,"dim":"c0","coords":[[7,"1"]]}"#).unwrap();
        assert_eq!(c0.dim(), Dim::C0);
        assert!(serde_json::from_str::<PVector>(r#"{"p":4,"dim":2,"coords":[]}"#).is_err());
        assert!(serde_json::from_str::<PVector>(r#"{"p":3,"dim":2,"coords":[[2,"1"]]}"#).is_err());
    }
}
