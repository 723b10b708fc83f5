//! Encrypted controller u = Fx and the encrypted closed loop.
//!
//! The controller holds Enc(Ecd(F)) and never sees plaintexts. Each entry
//! (i, j) of its output is the homomorphic product of F_ij and x_j; the
//! plant side decrypts every entry, decodes it at scale Δ², and sums each
//! row. Every step the key pair is rotated and the encrypted gain is
//! carried to the new epoch with the update token.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::elgamal::{self, Ciphertext, GroupParams, PublicKey, SecretKey};
use super::encoding::{self, ScalingFactor};
use super::CryptoError;
use crate::plantsim::{self, FeedbackGain, GaussianStream, PlantModel};

// stream selector that separates crypto randomness from the noise seed
const CRYPTO_STREAM: u64 = 0x0045_4e43_4445_4d4f;

/// Row-major matrix of ciphertexts sharing one epoch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiphertextMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Ciphertext>,
}

impl CiphertextMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Ciphertext>) -> Result<Self, CryptoError> {
        if entries.len() != rows * cols {
            return Err(CryptoError::DimensionMismatch(format!(
                "{} ciphertexts for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Ciphertext {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[Ciphertext] {
        &self.entries
    }

    /// Encrypts a real matrix entrywise (zero-rounding entries become ±Δ).
    pub fn encrypt<R: Rng + ?Sized>(
        pk: &PublicKey,
        m: &crate::matkit::RealMatrix,
        scale: ScalingFactor,
        rng: &mut R,
    ) -> Result<Self, CryptoError> {
        let p = &pk.params.p;
        let entries = m
            .as_slice()
            .iter()
            .map(|&v| elgamal::enc(pk, &encoding::ecd_nonzero(v, scale, p)?, rng))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(m.rows(), m.cols(), entries)
    }

    /// Applies an update token to every entry.
    pub fn update<R: Rng + ?Sized>(
        &self,
        token: &elgamal::UpdateToken,
        rng: &mut R,
    ) -> Result<Self, CryptoError> {
        let entries = self
            .entries
            .iter()
            .map(|c| elgamal::ct_update(c, token, rng))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(self.rows, self.cols, entries)
    }
}

/// Entry (i, j) of the output is Eval(pk, ct_F[i][j], ct_x[j]).
pub fn encrypted_controller(
    pk: &PublicKey,
    ct_f: &CiphertextMatrix,
    ct_x: &[Ciphertext],
) -> Result<CiphertextMatrix, CryptoError> {
    if ct_x.len() != ct_f.cols {
        return Err(CryptoError::DimensionMismatch(format!(
            "gain has {} columns but the state has {} entries",
            ct_f.cols,
            ct_x.len()
        )));
    }
    let mut entries = Vec::with_capacity(ct_f.entries.len());
    for i in 0..ct_f.rows {
        for (j, cx) in ct_x.iter().enumerate() {
            entries.push(elgamal::eval(pk, ct_f.get(i, j), cx)?);
        }
    }
    CiphertextMatrix::new(ct_f.rows, ct_f.cols, entries)
}

/// Decrypts every entry, decodes with `factor` (Δ² for controller output)
/// and sums each row.
pub fn dec_sum(
    sk: &SecretKey,
    params: &GroupParams,
    ct_u: &CiphertextMatrix,
    factor: f64,
) -> Result<Vec<f64>, CryptoError> {
    (0..ct_u.rows)
        .map(|i| {
            (0..ct_u.cols).try_fold(0.0, |acc, j| {
                let m = elgamal::dec(sk, params, ct_u.get(i, j))?;
                Ok(acc + encoding::dcd(&m, factor, &params.p))
            })
        })
        .collect()
}

/// Settings of one encrypted-loop run.
#[derive(Clone, Debug)]
pub struct LoopConfig {
    pub horizon: usize,
    pub key_bits: u64,
    pub scale: ScalingFactor,
    pub seed: u64,
    /// Overrides the random initial state.
    pub initial_state: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopReport {
    pub encrypted_states: Vec<Vec<f64>>,
    pub plaintext_states: Vec<Vec<f64>>,
    /// max_t ‖x_t^enc − x_t^plain‖_∞
    pub max_deviation: f64,
    pub epochs_rotated: u64,
    pub key_length: u64,
    pub horizon: usize,
}

fn encrypt_state<R: Rng + ?Sized>(
    pk: &PublicKey,
    x: &[f64],
    scale: ScalingFactor,
    step: usize,
    rng: &mut R,
) -> Result<Vec<Ciphertext>, CryptoError> {
    let p: &BigUint = &pk.params.p;
    x.iter()
        .map(|&v| {
            let m = encoding::ecd_nonzero(v, scale, p).map_err(|e| match e {
                CryptoError::EncodingOverflow { value, bound } => {
                    CryptoError::EncodingOverflowAt { step, value, bound }
                }
                other => other,
            })?;
            elgamal::enc(pk, &m, rng)
        })
        .collect()
}

/// Runs the encrypted loop and a plaintext twin driven by the same
/// disturbances, rotating keys once per step.
///
/// Step t: encrypt x_t under pk_t, evaluate the controller on ct_F,t,
/// decrypt-and-sum to u_t, advance the plant, then rotate
/// (pk_t, sk_t) → (pk_{t+1}, sk_{t+1}) and update ct_F with the token.
pub fn run_encrypted_loop(
    plant: &PlantModel,
    gain: &FeedbackGain,
    cfg: &LoopConfig,
) -> Result<LoopReport, CryptoError> {
    let a_cl = plantsim::stable_closed_loop(plant, gain)?;
    let n = plant.n();
    let mut crypto_rng = ChaCha20Rng::seed_from_u64(plantsim::sub_seed(cfg.seed, CRYPTO_STREAM, 0));
    let mut noise = GaussianStream::new(cfg.seed);
    let sigma = plant.sigma2().sqrt();
    let drawn_x0 = noise.next_vector(n, sigma);
    let x0 = match &cfg.initial_state {
        Some(x0) if x0.len() != n => {
            return Err(CryptoError::DimensionMismatch(format!(
                "initial state has length {}, expected {n}",
                x0.len()
            )))
        }
        Some(x0) => x0.clone(),
        None => drawn_x0,
    };

    let mut pair = elgamal::keygen(cfg.key_bits, &mut crypto_rng)?;
    let mut ct_f = CiphertextMatrix::encrypt(&pair.pk, gain.matrix(), cfg.scale, &mut crypto_rng)?;
    let product_factor = cfg.scale.product();

    let mut enc_states = vec![x0.clone()];
    let mut plain_states = vec![x0];
    let mut max_deviation: f64 = 0.0;
    let mut epochs_rotated = 0;
    for t in 0..cfg.horizon {
        let w = noise.next_vector(n, sigma);
        let x = &enc_states[t];
        let ct_x = encrypt_state(&pair.pk, x, cfg.scale, t, &mut crypto_rng)?;
        let ct_u = encrypted_controller(&pair.pk, &ct_f, &ct_x)?;
        let u = dec_sum(&pair.sk, pair.params(), &ct_u, product_factor)?;
        let bu = plant.b_p().mul_vec(&u);
        let x_enc: Vec<f64> = plant
            .a_p()
            .mul_vec(x)
            .iter()
            .zip(&bu)
            .zip(&w)
            .map(|((ax, b), wi)| ax + b + wi)
            .collect();
        let x_plain: Vec<f64> = a_cl
            .mul_vec(&plain_states[t])
            .iter()
            .zip(&w)
            .map(|(ax, wi)| ax + wi)
            .collect();
        let dev = x_enc
            .iter()
            .zip(&x_plain)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        max_deviation = max_deviation.max(dev);
        enc_states.push(x_enc);
        plain_states.push(x_plain);

        let (next, token) = elgamal::key_update(&pair, &mut crypto_rng);
        ct_f = ct_f.update(&token, &mut crypto_rng)?;
        debug_assert_eq!(next.epoch(), pair.epoch() + 1);
        pair = next;
        epochs_rotated += 1;
    }
    Ok(LoopReport {
        encrypted_states: enc_states,
        plaintext_states: plain_states,
        max_deviation,
        epochs_rotated,
        key_length: cfg.key_bits,
        horizon: cfg.horizon,
    })
}
