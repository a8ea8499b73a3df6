use crate::C64;
use serde::{Deserialize, Serialize};

/// A trigonometric polynomial on the circle, stored as banded Fourier
/// coefficients: `coeffs[K + k]` is the coefficient of `z^k` for
/// `k in [-K, K]`. Coefficients outside the band are implicitly zero.
#[derive(Debug, Clone)]
pub struct LoopScalar {
    band: usize,
    coeffs: Vec<C64>,
}

/// Wire form `{"band": K, "coeffs": [[re, im], ...]}` with coefficients
/// ordered `k = -K..K`.
#[derive(Serialize, Deserialize)]
struct LoopScalarWire {
    band: usize,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for LoopScalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LoopScalarWire {
            band: self.band,
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LoopScalar {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = LoopScalarWire::deserialize(deserializer)?;
        if wire.coeffs.len() != 2 * wire.band + 1 {
            return Err(serde::de::Error::custom(format!(
                "loop scalar with band {} must carry {} coefficients, got {}",
                wire.band,
                2 * wire.band + 1,
                wire.coeffs.len()
            )));
        }
        Ok(LoopScalar {
            band: wire.band,
            coeffs: wire
                .coeffs
                .iter()
                .map(|[re, im]| C64::new(*re, *im))
                .collect(),
        })
    }
}

impl LoopScalar {
    pub fn new(band: usize, coeffs: Vec<C64>) -> Self {
        assert_eq!(coeffs.len(), 2 * band + 1, "coeffs must span k = -K..K");
        LoopScalar { band, coeffs }
    }

    pub fn zero() -> Self {
        LoopScalar {
            band: 0,
            coeffs: vec![C64::new(0.0, 0.0)],
        }
    }

    pub fn one() -> Self {
        Self::constant(C64::new(1.0, 0.0))
    }

    pub fn constant(c: C64) -> Self {
        LoopScalar {
            band: 0,
            coeffs: vec![c],
        }
    }

    pub fn real(x: f64) -> Self {
        Self::constant(C64::new(x, 0.0))
    }

    /// The monomial `c * z^k`.
    pub fn monomial(c: C64, k: i64) -> Self {
        let band = k.unsigned_abs() as usize;
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * band + 1];
        coeffs[(k + band as i64) as usize] = c;
        LoopScalar { band, coeffs }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// Coefficient of `z^k`, zero outside the band.
    pub fn coeff(&self, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.band {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.band as i64) as usize]
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let band = self.band.max(other.band);
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * band + 1];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let k = i as i64 - band as i64;
            *c = self.coeff(k) + other.coeff(k);
        }
        LoopScalar { band, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Cauchy product of coefficient sequences; the result band is the sum
    /// of the operand bands.
    pub fn mul(&self, other: &Self) -> Self {
        let band = self.band + other.band;
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * band + 1];
        for i in 0..self.coeffs.len() {
            let ki = i as i64 - self.band as i64;
            if self.coeffs[i].norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..other.coeffs.len() {
                let kj = j as i64 - other.band as i64;
                coeffs[(ki + kj + band as i64) as usize] += self.coeffs[i] * other.coeffs[j];
            }
        }
        LoopScalar { band, coeffs }
    }

    pub fn scale(&self, c: C64) -> Self {
        LoopScalar {
            band: self.band,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// The *-operation: `(a*)_k = conj(a_{-k})`, i.e. reverse and conjugate.
    pub fn adjoint(&self) -> Self {
        let coeffs = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        LoopScalar {
            band: self.band,
            coeffs,
        }
    }

    /// Fourier sum at `z = e^{i theta}`.
    pub fn evaluate(&self, theta: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = i as i64 - self.band as i64;
            acc += c * C64::from_polar(1.0, theta * k as f64);
        }
        acc
    }

    /// Largest coefficient magnitude; the coefficientwise norm used by
    /// exactness checks.
    pub fn max_coeff_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_coeff_abs_diff(&self, other: &Self) -> f64 {
        let band = self.band.max(other.band) as i64;
        (-band..=band)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, c)| i as i64 == self.band as i64 || c.norm() == 0.0)
    }

    /// Drop zero outer coefficients. Internal housekeeping; the arithmetic
    /// contracts above never shrink bands on their own.
    pub fn trimmed(&self) -> Self {
        let mut band = self.band;
        while band > 0 {
            let lo = self.coeffs[self.band - band];
            let hi = self.coeffs[self.band + band];
            if lo.norm() == 0.0 && hi.norm() == 0.0 {
                band -= 1;
            } else {
                break;
            }
        }
        let off = self.band - band;
        LoopScalar {
            band,
            coeffs: self.coeffs[off..self.coeffs.len() - off].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> LoopScalar {
        LoopScalar::monomial(C64::new(1.0, 0.0), 1)
    }

    #[test]
    fn unit_law() {
        let p = LoopScalar::one().mul(&z());
        assert_eq!(p.max_coeff_abs_diff(&z()), 0.0);
    }

    #[test]
    fn annihilator() {
        let p = LoopScalar::zero().mul(&z());
        assert_eq!(p.max_coeff_abs(), 0.0);
        assert_eq!(p.band(), 1);
    }

    #[test]
    fn z_minus_one_squared_norm() {
        // (z - 1)(z^-1 - 1) = 2 - z - z^-1, cross-checked at 64 sample points.
        let a = z().sub(&LoopScalar::one());
        let b = a.adjoint();
        let p = a.mul(&b);
        let expected = LoopScalar::new(
            1,
            vec![C64::new(-1.0, 0.0), C64::new(2.0, 0.0), C64::new(-1.0, 0.0)],
        );
        assert!(p.max_coeff_abs_diff(&expected) < 1e-15);
        for j in 0..64 {
            let t = 2.0 * std::f64::consts::PI * j as f64 / 64.0;
            assert!((p.evaluate(t) - a.evaluate(t) * b.evaluate(t)).norm() < 1e-13);
        }
    }

    #[test]
    fn adjoint_is_involution() {
        let a = LoopScalar::new(
            2,
            vec![
                C64::new(0.5, -0.25),
                C64::new(1.0, 2.0),
                C64::new(0.0, 1.0),
                C64::new(-3.0, 0.0),
                C64::new(0.25, 0.125),
            ],
        );
        assert_eq!(a.adjoint().adjoint().max_coeff_abs_diff(&a), 0.0);
        // evaluation intertwines * with complex conjugation on |z| = 1
        for j in 0..16 {
            let t = 2.0 * std::f64::consts::PI * j as f64 / 16.0;
            assert!((a.adjoint().evaluate(t) - a.evaluate(t).conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn band_contract_on_mul() {
        let a = z();
        let b = z();
        assert_eq!(a.mul(&b).band(), 2);
        assert!((a.mul(&b).coeff(2) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn trim_drops_zero_edges() {
        let p = LoopScalar::monomial(C64::new(1.0, 0.0), 1).mul(&LoopScalar::zero());
        assert_eq!(p.band(), 1);
        assert_eq!(p.trimmed().band(), 0);
    }
}
