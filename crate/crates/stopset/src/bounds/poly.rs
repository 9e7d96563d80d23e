//! Truncated power series in the erasure probability with exact rational
//! coefficients. Bound curves, exact small-n curves, and the
//! inclusion-exclusion lower bound are all carried in this form; floats are
//! produced only at evaluation/emission time.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize};

/// A polynomial (possibly truncated) in the erasure probability.
/// `coeffs[d]` is the coefficient of degree d; `truncation_degree` is the
/// highest degree the representation is faithful to. Untruncated polynomials
/// use `truncation_degree = usize::MAX` semantics via `is_exact`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErasurePolynomial {
    coeffs: Vec<BigRational>,
    truncation_degree: Option<usize>,
}

impl ErasurePolynomial {
    pub fn zero() -> Self {
        ErasurePolynomial {
            coeffs: Vec::new(),
            truncation_degree: None,
        }
    }

    pub fn one() -> Self {
        ErasurePolynomial::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        ErasurePolynomial {
            coeffs: vec![c],
            truncation_degree: None,
        }
    }

    /// The monomial eps^d.
    pub fn eps_pow(d: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); d + 1];
        coeffs[d] = BigRational::one();
        ErasurePolynomial {
            coeffs,
            truncation_degree: None,
        }
    }

    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        let mut p = ErasurePolynomial {
            coeffs,
            truncation_degree: None,
        };
        p.normalize();
        p
    }

    fn normalize(&mut self) {
        while self.coeffs.last().map_or(false, Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    /// True when no coefficient was discarded by truncation.
    pub fn is_exact(&self) -> bool {
        self.truncation_degree.is_none()
    }

    pub fn truncation_degree(&self) -> Option<usize> {
        self.truncation_degree
    }

    /// Drops terms above degree `d` and records the truncation.
    pub fn truncated(mut self, d: usize) -> Self {
        if self.coeffs.len() > d + 1 {
            self.coeffs.truncate(d + 1);
            self.normalize();
        }
        self.truncation_degree = Some(match self.truncation_degree {
            Some(t) => t.min(d),
            None => d,
        });
        self
    }

    pub fn coeff(&self, d: usize) -> BigRational {
        self.coeffs.get(d).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Smallest degree with a nonzero coefficient, if any.
    pub fn order(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Coefficient at the order (the asymptotic multiplicity).
    pub fn multiplicity(&self) -> Option<BigRational> {
        self.order().map(|d| self.coeffs[d].clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        let trunc = combine_trunc(self.truncation_degree, other.truncation_degree);
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(len);
        for d in 0..len {
            coeffs.push(self.coeff(d) + other.coeff(d));
        }
        let mut p = ErasurePolynomial {
            coeffs,
            truncation_degree: None,
        };
        p.normalize();
        match trunc {
            Some(t) => p.truncated(t),
            None => p,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&BigRational::from_integer(BigInt::from(-1))))
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut p = ErasurePolynomial {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            truncation_degree: self.truncation_degree,
        };
        p.normalize();
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let trunc = combine_trunc(self.truncation_degree, other.truncation_degree);
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            let mut p = ErasurePolynomial::zero();
            p.truncation_degree = trunc;
            return p;
        }
        let cap = trunc.map(|t| t + 1).unwrap_or(usize::MAX);
        let full = self.coeffs.len() + other.coeffs.len() - 1;
        let len = full.min(cap);
        let mut coeffs = vec![BigRational::zero(); len];
        for (a, ca) in self.coeffs.iter().enumerate() {
            if a >= len || ca.is_zero() {
                continue;
            }
            for (b, cb) in other.coeffs.iter().enumerate() {
                if a + b >= len {
                    break;
                }
                if cb.is_zero() {
                    continue;
                }
                coeffs[a + b] += ca * cb;
            }
        }
        let mut p = ErasurePolynomial {
            coeffs,
            truncation_degree: trunc,
        };
        p.normalize();
        p
    }

    /// 1 - self, the complement used by check-node arithmetic.
    pub fn one_minus(&self) -> Self {
        ErasurePolynomial::one().sub(self)
    }

    /// Exact evaluation at a rational point.
    pub fn eval_rational(&self, eps: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * eps + c;
        }
        acc
    }

    /// Floating-point evaluation (Horner).
    pub fn eval_f64(&self, eps: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * eps + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    /// Nonzero terms as (degree, coefficient) pairs.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &BigRational)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
    }
}

fn combine_trunc(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) => Some(x),
        (None, Some(y)) => Some(y),
        (None, None) => None,
    }
}

impl std::fmt::Display for ErasurePolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (d, c) in self.terms() {
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let a = c.abs();
            match d {
                0 => write!(f, "{a}")?,
                _ => {
                    if !a.is_one() {
                        write!(f, "{a}*")?;
                    }
                    if d == 1 {
                        write!(f, "eps")?;
                    } else {
                        write!(f, "eps^{d}")?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

// JSON form: an array of [degree, "numerator", "denominator"] triples for the
// nonzero terms, ascending by degree. Numerator and denominator are decimal
// strings so arbitrary precision survives the round trip.
impl Serialize for ErasurePolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let terms: Vec<(usize, String, String)> = self
            .terms()
            .map(|(d, c)| (d, c.numer().to_string(), c.denom().to_string()))
            .collect();
        let mut seq = s.serialize_seq(Some(terms.len()))?;
        for t in terms {
            seq.serialize_element(&t)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for ErasurePolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let terms: Vec<(usize, String, String)> = Vec::deserialize(d)?;
        let mut coeffs = Vec::new();
        for (deg, num, den) in terms {
            if coeffs.len() <= deg {
                coeffs.resize(deg + 1, BigRational::zero());
            }
            let n: BigInt = num.parse().map_err(serde::de::Error::custom)?;
            let m: BigInt = den.parse().map_err(serde::de::Error::custom)?;
            coeffs[deg] = BigRational::new(n, m);
        }
        Ok(ErasurePolynomial::from_coeffs(coeffs))
    }
}

/// Convenience constructor from integer coefficients, index = degree.
pub fn poly_from_ints(ints: &[i64]) -> ErasurePolynomial {
    ErasurePolynomial::from_coeffs(
        ints.iter()
            .map(|&x| BigRational::from_integer(BigInt::from(x)))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_basics() {
        let p = poly_from_ints(&[0, 0, 0, 2, 2, -5, 2]); // 2e^3+2e^4-5e^5+2e^6
        assert_eq!(p.order(), Some(3));
        assert_eq!(
            p.multiplicity().unwrap(),
            BigRational::from_integer(BigInt::from(2))
        );
        let tenth = BigRational::new(BigInt::from(1), BigInt::from(10));
        let v = p.eval_rational(&tenth);
        assert_eq!(v, BigRational::new(BigInt::from(2152), BigInt::from(1_000_000)));
        assert!((p.eval_f64(0.1) - 2.152e-3).abs() < 1e-15);
    }

    #[test]
    fn truncation_tracks() {
        let e = ErasurePolynomial::eps_pow(1);
        let p = e.mul(&e).truncated(3);
        assert!(!p.is_exact());
        let q = p.mul(&e.mul(&e)); // degree 4 > 3 dropped
        assert_eq!(q.coeff(4), BigRational::zero());
        assert_eq!(q.truncation_degree(), Some(3));
    }

    #[test]
    fn serde_round_trip() {
        let p = poly_from_ints(&[0, 0, 3, -1]);
        let json = serde_json::to_string(&p).unwrap();
        let back: ErasurePolynomial = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn display_form() {
        let p = poly_from_ints(&[0, 0, 0, 2, 0, -1]);
        assert_eq!(p.to_string(), "2*eps^3 - eps^5");
    }
}
