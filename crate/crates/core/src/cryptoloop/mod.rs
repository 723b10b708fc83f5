//! Desk-scale updatable ElGamal and the encrypted control loop it protects.
//!
//! This is a demonstration of the encrypted pipeline, not production
//! cryptography: arithmetic is not constant time, and the update token
//! reveals the key difference to whoever holds it together with an old key.

pub mod controller;
pub mod elgamal;
pub mod encoding;
pub mod prime;

use thiserror::Error;

use crate::plantsim::SimError;

pub use controller::{
    dec_sum, encrypted_controller, run_encrypted_loop, CiphertextMatrix, LoopConfig, LoopReport,
};
pub use elgamal::{
    ct_update, dec, enc, eval, key_update, keygen, Ciphertext, GroupParams, KeyPair, PublicKey,
    SecretKey, UpdateToken,
};
pub use encoding::{dcd, ecd, ScalingFactor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CryptoError {
    #[error("plaintext must lie in [1, p - 1]")]
    InvalidPlaintext,
    #[error("ciphertext component outside [1, p - 1]")]
    MalformedCiphertext,
    #[error("epoch mismatch: expected {expected}, got {got}")]
    EpochMismatch { expected: u64, got: u64 },
    #[error("value {value} exceeds the encodable range ±{bound:e}")]
    EncodingOverflow { value: f64, bound: f64 },
    #[error("state left the encodable range at step {step}: value {value}, bound ±{bound:e}")]
    EncodingOverflowAt { step: usize, value: f64, bound: f64 },
    #[error("no {0}-bit prime found within the attempt budget")]
    PrimeSearchFailure(u64),
    #[error("key length {0} is below the 16-bit minimum")]
    KeyLengthTooShort(u64),
    #[error("scaling factor must be a positive power of two, got {0}")]
    InvalidScale(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}
