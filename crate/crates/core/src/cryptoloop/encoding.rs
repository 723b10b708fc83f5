//! Fixed-point encoding of reals into (ℤ/pℤ)*.
//!
//! x ↦ round(x/Δ), with negatives stored as p − |v|. Two encoded values
//! multiply correctly as long as each magnitude stays below √p/2, because
//! the product then stays inside (−p/2, p/2) and decodes unambiguously.
//! Zero has no representative in the multiplicative group and is rejected.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

use super::CryptoError;

/// Quantization step Δ, a power of two.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFactor(f64);

impl ScalingFactor {
    pub fn new(delta: f64) -> Result<Self, CryptoError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(CryptoError::InvalidScale(delta));
        }
        // normal with an all-zero mantissa field
        if !delta.is_normal() || delta.to_bits() & ((1u64 << 52) - 1) != 0 {
            return Err(CryptoError::InvalidScale(delta));
        }
        Ok(Self(delta))
    }

    /// Δ = 2^e.
    pub fn from_log2(e: i32) -> Result<Self, CryptoError> {
        Self::new(2f64.powi(e))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Decoding factor for the product of two encoded values, Δ².
    pub fn product(&self) -> f64 {
        self.0 * self.0
    }
}

/// Largest admissible encoded magnitude: |round(x/Δ)| must stay below
/// ⌊√p⌋/2.
pub fn magnitude_bound(p: &BigUint) -> f64 {
    p.sqrt().to_f64().unwrap_or(f64::INFINITY) / 2.0
}

/// Signed integer code round(x/Δ), range-checked but not yet reduced.
pub fn quantize(x: f64, scale: ScalingFactor, p: &BigUint) -> Result<BigInt, CryptoError> {
    let v = (x / scale.value()).round();
    let bound = magnitude_bound(p);
    if !v.is_finite() || v.abs() >= bound {
        return Err(CryptoError::EncodingOverflow {
            value: x,
            bound: bound * scale.value(),
        });
    }
    Ok(BigInt::from_f64(v).expect("finite"))
}

/// Ecd(x; Δ).
pub fn ecd(x: f64, scale: ScalingFactor, p: &BigUint) -> Result<BigUint, CryptoError> {
    let v = quantize(x, scale, p)?;
    to_residue(&v, p)
}

/// Like [`ecd`], but a value that rounds to zero is replaced by ±Δ with the
/// sign of x (+Δ for an exact zero).
pub fn ecd_nonzero(x: f64, scale: ScalingFactor, p: &BigUint) -> Result<BigUint, CryptoError> {
    let mut v = quantize(x, scale, p)?;
    if v.is_zero() {
        v = BigInt::from(if x.is_sign_negative() && x != 0.0 {
            -1
        } else {
            1
        });
    }
    to_residue(&v, p)
}

fn to_residue(v: &BigInt, p: &BigUint) -> Result<BigUint, CryptoError> {
    if v.is_zero() {
        return Err(CryptoError::InvalidPlaintext);
    }
    let mag = v.abs().to_biguint().expect("nonnegative");
    Ok(match v.sign() {
        Sign::Minus => p - mag,
        _ => mag,
    })
}

/// Dcd(m; factor): residues above p/2 are negative, then scaled by the
/// effective factor (Δ for single values, Δ² for products).
pub fn dcd(m: &BigUint, factor: f64, p: &BigUint) -> f64 {
    let half = p >> 1u32;
    let signed = if *m > half {
        -(p - m).to_f64().unwrap_or(f64::INFINITY)
    } else {
        m.to_f64().unwrap_or(f64::INFINITY)
    };
    signed * factor
}
