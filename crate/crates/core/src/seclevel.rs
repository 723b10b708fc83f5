//! Security sizing: how many samples the attacker needs, how long it takes
//! to decipher them, and the smallest security parameter and key length
//! that push that time past the defense period.
//!
//! - sample identifying complexity γ(N, F) = n / ((N − 1) tr Ψ(F)), a lower
//!   bound on the expected least-squares estimation error from N samples;
//! - sample deciphering time τ(N, λ) = 2^λ N / Υ for an attacker running
//!   Υ FLOPS against a scheme with λ-bit security and one key per sample;
//! - N* = ⌊n / (γ_c tr Ψ*)⌋ + 2, the first N with γ(N) < γ_c;
//! - λ* = ⌊log₂(Υ τ_c / N*)⌋ + 1, the first λ with τ(N*, λ) > τ_c;
//! - k*, the smallest key length whose break cost reaches 2^λ.
//!
//! Every floor formula is followed by an explicit check of its defining
//! inequality pair, and nudged by one if rounding put it on the wrong side.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::h2syn::{self, SynthesisError, SynthesisResult};
use crate::plantsim::{FeedbackGain, PlantModel};

const LAMBDA_MAX: u32 = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SecurityError {
    #[error("sample size must be at least 2, got {0}")]
    InvalidSampleSize(u64),
    #[error("invalid security specification: {0}")]
    InvalidSpec(String),
    #[error("minimum sample size {0:e} exceeds the representable count range")]
    Overflow(f64),
    #[error("upsilon * tau_c / N = {0:e} is not above 1; no positive security parameter")]
    NonPositiveLog(f64),
    #[error("security parameter must lie in [2, {LAMBDA_MAX}], got {0}")]
    InvalidLambda(u32),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

type Result<T> = std::result::Result<T, SecurityError>;

/// Defender targets and attacker capability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct SecuritySpec {
    /// Acceptable estimation error γ_c.
    pub gamma_c: f64,
    /// Defense period τ_c in seconds.
    pub tau_c: f64,
    /// Attacker throughput Υ in FLOPS.
    pub upsilon: f64,
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    gamma_c: f64,
    tau_c_seconds: f64,
    upsilon_flops: f64,
}

impl TryFrom<SpecJson> for SecuritySpec {
    type Error = SecurityError;
    fn try_from(j: SpecJson) -> Result<Self> {
        SecuritySpec::new(j.gamma_c, j.tau_c_seconds, j.upsilon_flops)
    }
}

impl From<SecuritySpec> for SpecJson {
    fn from(s: SecuritySpec) -> Self {
        SpecJson {
            gamma_c: s.gamma_c,
            tau_c_seconds: s.tau_c,
            upsilon_flops: s.upsilon,
        }
    }
}

impl SecuritySpec {
    pub fn new(gamma_c: f64, tau_c: f64, upsilon: f64) -> Result<Self> {
        for (name, v) in [("gamma_c", gamma_c), ("tau_c", tau_c), ("upsilon", upsilon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SecurityError::InvalidSpec(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            gamma_c,
            tau_c,
            upsilon,
        })
    }
}

/// Outcome of the design procedure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub n_star: u64,
    pub lambda_star: u32,
    /// λ for a scheme without key updates (τ(1, λ) > τ_c).
    pub lambda_star_static: u32,
    pub k_star: u64,
    pub k_star_static: u64,
    pub gramian_trace: f64,
    pub secure: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Secure,
    /// Some N gives γ(N) < γ_c with τ(N, λ) ≤ τ_c; `witness` is the
    /// smallest such N.
    Unsecure {
        witness: u64,
    },
}

impl Verdict {
    pub fn is_secure(&self) -> bool {
        matches!(self, Verdict::Secure)
    }
}

/// γ(N) from the state dimension and tr Ψ.
pub fn sic_from_trace(n: usize, n_samples: u64, gramian_trace: f64) -> f64 {
    n as f64 / ((n_samples as f64 - 1.0) * gramian_trace)
}

/// Sample identifying complexity γ(N, F).
pub fn sic(n_samples: u64, plant: &PlantModel, gain: &FeedbackGain) -> Result<f64> {
    if n_samples < 2 {
        return Err(SecurityError::InvalidSampleSize(n_samples));
    }
    let tr = h2syn::gramian_trace(plant, gain)?;
    Ok(sic_from_trace(plant.n(), n_samples, tr))
}

/// Sample deciphering time τ(N, λ) = 2^λ N / Υ in seconds.
///
/// Computed as (N / Υ) scaled by 2^λ, which is exact scaling, so the
/// result equals the correctly ordered product up to one rounding and
/// saturates to +∞ instead of wrapping.
pub fn sdt(n_samples: u64, lambda: u32, upsilon: f64) -> f64 {
    let mut v = n_samples as f64 / upsilon;
    let mut e = lambda;
    while e > 0 && v.is_finite() {
        let chunk = e.min(1000);
        v *= 2f64.powi(chunk as i32);
        e -= chunk;
    }
    v
}

/// N* = ⌊n / (γ_c tr)⌋ + 2.
pub fn min_sample_size(gamma_c: f64, gramian_trace: f64, n: usize) -> Result<u64> {
    if !(gamma_c > 0.0 && gramian_trace > 0.0 && n > 0) {
        return Err(SecurityError::InvalidSpec(
            "gamma_c, trace and n must be positive".into(),
        ));
    }
    let q = n as f64 / (gamma_c * gramian_trace);
    // counts must fit in i64 after the +2 and adjustments
    if !q.is_finite() || q >= (i64::MAX as f64) - 4.0 {
        return Err(SecurityError::Overflow(q));
    }
    let gamma = |samples: u64| sic_from_trace(n, samples, gramian_trace);
    let mut n_star = q.floor() as u64 + 2;
    while gamma(n_star) >= gamma_c {
        n_star += 1;
    }
    while n_star > 2 && gamma(n_star - 1) < gamma_c {
        n_star -= 1;
    }
    Ok(n_star)
}

/// λ* = ⌊log₂(Υ τ_c / N)⌋ + 1, with the logarithm taken in pieces so Υτ_c
/// never has to be formed.
pub fn opt_security_param(tau_c: f64, upsilon: f64, n_samples: u64) -> Result<u32> {
    if !(tau_c > 0.0 && upsilon > 0.0 && n_samples > 0) {
        return Err(SecurityError::InvalidSpec(
            "tau_c, upsilon and N must be positive".into(),
        ));
    }
    let log2 = (upsilon.ln() + tau_c.ln() - (n_samples as f64).ln()) / std::f64::consts::LN_2;
    if log2 <= 0.0 {
        return Err(SecurityError::NonPositiveLog(log2.exp2()));
    }
    if log2 >= u32::MAX as f64 - 2.0 {
        return Err(SecurityError::Overflow(log2));
    }
    let mut lambda = log2.floor() as u32 + 1;
    while sdt(n_samples, lambda, upsilon) <= tau_c {
        lambda += 1;
    }
    while lambda > 1 && sdt(n_samples, lambda - 1, upsilon) > tau_c {
        lambda -= 1;
    }
    Ok(lambda)
}

/// Secure iff no N has both γ(N) < γ_c and τ(N, λ) ≤ τ_c. Since γ falls
/// and τ rises with N, it is enough to test the smallest N with γ(N) < γ_c.
pub fn is_secure(
    spec: &SecuritySpec,
    lambda: u32,
    plant: &PlantModel,
    gain: &FeedbackGain,
) -> Result<Verdict> {
    let tr = h2syn::gramian_trace(plant, gain)?;
    verdict_from_trace(spec, lambda, plant.n(), tr)
}

pub fn verdict_from_trace(
    spec: &SecuritySpec,
    lambda: u32,
    n: usize,
    gramian_trace: f64,
) -> Result<Verdict> {
    let witness = min_sample_size(spec.gamma_c, gramian_trace, n)?;
    if sdt(witness, lambda, spec.upsilon) > spec.tau_c {
        Ok(Verdict::Secure)
    } else {
        Ok(Verdict::Unsecure { witness })
    }
}

/// Without disturbances n + 1 samples identify A exactly, so the loop is
/// secure iff τ(n + 1, λ) > τ_c.
pub fn noiseless_secure(n: usize, lambda: u32, spec: &SecuritySpec) -> bool {
    sdt(n as u64 + 1, lambda, spec.upsilon) > spec.tau_c
}

/// Cost model of the best known attack on a k-bit key, in natural-log units.
pub trait BreakCost {
    fn ln_cost(&self, key_bits: u64) -> f64;
}

/// General number field sieve:
/// ln Ω(k) = (64/9)^{1/3} (ln 2^k)^{1/3} (ln ln 2^k)^{2/3}.
#[derive(Clone, Copy, Debug, Default)]
pub struct Gnfs;

impl BreakCost for Gnfs {
    fn ln_cost(&self, key_bits: u64) -> f64 {
        let ln_n = key_bits as f64 * std::f64::consts::LN_2;
        (64.0_f64 / 9.0).cbrt() * ln_n.cbrt() * ln_n.ln().powf(2.0 / 3.0)
    }
}

/// Smallest k ≥ 2 with ln Ω(k) ≥ λ ln 2 under the GNFS cost.
pub fn opt_key_length(lambda: u32) -> Result<u64> {
    opt_key_length_with(&Gnfs, lambda)
}

/// Smallest k ≥ 2 with `cost.ln_cost(k) ≥ λ ln 2`, by doubling then
/// bisection (the cost must be nondecreasing in k).
pub fn opt_key_length_with<C: BreakCost>(cost: &C, lambda: u32) -> Result<u64> {
    if !(2..=LAMBDA_MAX).contains(&lambda) {
        return Err(SecurityError::InvalidLambda(lambda));
    }
    let target = lambda as f64 * std::f64::consts::LN_2;
    let meets = |k: u64| cost.ln_cost(k) >= target;
    let mut lo = 2u64;
    if meets(lo) {
        return Ok(lo);
    }
    let mut hi = 4u64;
    while !meets(hi) {
        lo = hi;
        hi *= 2;
    }
    // invariant: !meets(lo), meets(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if meets(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Result of the full design procedure: the optimal gain and its sizing.
#[derive(Clone, Debug)]
pub struct Design {
    pub synthesis: SynthesisResult,
    pub report: SecurityReport,
}

/// Synthesizes F*, then sizes N*, λ*, λ*₀ and the key lengths for them.
pub fn design_pipeline(plant: &PlantModel, spec: &SecuritySpec) -> Result<Design> {
    let synthesis = h2syn::synthesize(plant)?;
    let report = size_for_trace(plant.n(), synthesis.gramian_trace, spec)?;
    Ok(Design { synthesis, report })
}

/// Sizing steps alone, for a known Gramian trace.
pub fn size_for_trace(n: usize, gramian_trace: f64, spec: &SecuritySpec) -> Result<SecurityReport> {
    let n_star = min_sample_size(spec.gamma_c, gramian_trace, n)?;
    let lambda_star = opt_security_param(spec.tau_c, spec.upsilon, n_star)?;
    let lambda_star_static = opt_security_param(spec.tau_c, spec.upsilon, 1)?;
    let k_star = opt_key_length(lambda_star.max(2))?;
    let k_star_static = opt_key_length(lambda_star_static.max(2))?;
    let secure = verdict_from_trace(spec, lambda_star, n, gramian_trace)?.is_secure();
    Ok(SecurityReport {
        n_star,
        lambda_star,
        lambda_star_static,
        k_star,
        k_star_static,
        gramian_trace,
        secure,
    })
}
