//! Plant, feedback gain and noisy closed-loop simulation.
//!
//! The plant is x_{t+1} = A_p x_t + B_p u_t + w_t driven by the static
//! state feedback u_t = F x_t, so the closed loop is x_{t+1} = A x_t + w_t
//! with A = A_p + B_p F. Initial state and disturbances are i.i.d.
//! N(0, σ²I).
//!
//! Randomness comes from ChaCha20 seeded with a `u64`, turned into normal
//! deviates by the Box–Muller transform. Both algorithms are fixed, so a
//! seed pins a trajectory bit-for-bit on every platform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matkit::{self, MatError, RealMatrix};

const CONTROLLABILITY_RTOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid plant: {0}")]
    InvalidPlant(String),
    #[error("closed loop is unstable (spectral radius {0})")]
    UnstableClosedLoop(f64),
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Open-loop plant (A_p, B_p) with disturbance variance σ².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlantJson", into = "PlantJson")]
pub struct PlantModel {
    a_p: RealMatrix,
    b_p: RealMatrix,
    sigma2: f64,
}

/// Wire form of a plant: row-major arrays with explicit dimensions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlantJson {
    pub a_p: Vec<f64>,
    pub b_p: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub sigma2: f64,
}

impl TryFrom<PlantJson> for PlantModel {
    type Error = SimError;
    fn try_from(j: PlantJson) -> Result<Self, SimError> {
        if j.n == 0 || j.m == 0 {
            return Err(SimError::InvalidPlant("n and m must be positive".into()));
        }
        let a_p = RealMatrix::new(j.n, j.n, j.a_p)
            .map_err(|e| SimError::InvalidPlant(format!("a_p: {e}")))?;
        let b_p = RealMatrix::new(j.n, j.m, j.b_p)
            .map_err(|e| SimError::InvalidPlant(format!("b_p: {e}")))?;
        PlantModel::new(a_p, b_p, j.sigma2)
    }
}

impl From<PlantModel> for PlantJson {
    fn from(p: PlantModel) -> Self {
        PlantJson {
            n: p.n(),
            m: p.m(),
            a_p: p.a_p.as_slice().to_vec(),
            b_p: p.b_p.as_slice().to_vec(),
            sigma2: p.sigma2,
        }
    }
}

impl PlantModel {
    /// Checks shapes and σ² > 0. Controllability is not enforced here; the
    /// synthesis step reports an uncontrollable pair.
    pub fn new(a_p: RealMatrix, b_p: RealMatrix, sigma2: f64) -> Result<Self, SimError> {
        if !a_p.is_square() {
            return Err(SimError::InvalidPlant("A_p must be square".into()));
        }
        if b_p.rows() != a_p.rows() {
            return Err(SimError::DimensionMismatch(format!(
                "A_p is {:?} but B_p is {:?}",
                a_p.shape(),
                b_p.shape()
            )));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(SimError::InvalidPlant(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        Ok(Self { a_p, b_p, sigma2 })
    }

    pub fn a_p(&self) -> &RealMatrix {
        &self.a_p
    }

    pub fn b_p(&self) -> &RealMatrix {
        &self.b_p
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// State dimension n.
    pub fn n(&self) -> usize {
        self.a_p.rows()
    }

    /// Input dimension m.
    pub fn m(&self) -> usize {
        self.b_p.cols()
    }

    /// [B  AB  …  A^{n−1}B], n × nm.
    pub fn controllability_matrix(&self) -> RealMatrix {
        let (n, m) = (self.n(), self.m());
        let mut out = RealMatrix::zeros(n, n * m);
        let mut block = self.b_p.clone();
        for k in 0..n {
            out.set_block(0, k * m, &block);
            block = &self.a_p * &block;
        }
        out
    }

    pub fn is_controllable(&self) -> bool {
        matkit::rank(&self.controllability_matrix(), CONTROLLABILITY_RTOL) == self.n()
    }

    /// Same plant with a different disturbance variance.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self, SimError> {
        Self::new(self.a_p.clone(), self.b_p.clone(), sigma2)
    }
}

/// Static state-feedback gain F (m × n).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackGain {
    f: RealMatrix,
}

impl FeedbackGain {
    pub fn new(f: RealMatrix) -> Self {
        Self { f }
    }

    /// The zero gain for a plant.
    pub fn zero(plant: &PlantModel) -> Self {
        Self::new(RealMatrix::zeros(plant.m(), plant.n()))
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.f
    }

    pub fn into_matrix(self) -> RealMatrix {
        self.f
    }
}

/// A = A_p + B_p F. Stability is the caller's concern.
pub fn closed_loop(plant: &PlantModel, gain: &FeedbackGain) -> Result<RealMatrix, SimError> {
    let f = gain.matrix();
    if f.shape() != (plant.m(), plant.n()) {
        return Err(SimError::DimensionMismatch(format!(
            "gain is {:?}, expected {}x{}",
            f.shape(),
            plant.m(),
            plant.n()
        )));
    }
    Ok(plant.a_p() + &(plant.b_p() * f))
}

/// Closed-loop matrix after checking its spectral radius is below one.
pub fn stable_closed_loop(plant: &PlantModel, gain: &FeedbackGain) -> Result<RealMatrix, SimError> {
    let a = closed_loop(plant, gain)?;
    let rho = matkit::spectral_radius(&a);
    if rho >= 1.0 {
        return Err(SimError::UnstableClosedLoop(rho));
    }
    Ok(a)
}

/// Recorded closed-loop run: states x_0…x_T and disturbances w_0…w_{T−1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub noises: Vec<Vec<f64>>,
    pub seed: u64,
}

impl Trajectory {
    /// Number of transitions T.
    pub fn horizon(&self) -> usize {
        self.noises.len()
    }

    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }
}

/// Standard normal deviates from ChaCha20 via Box–Muller, both outputs of
/// each pair used in order.
pub struct GaussianStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    // uniform on (0, 1], 53-bit resolution
    fn open_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.open_uniform();
        let u2 = self.open_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// A vector of i.i.d. N(0, σ²) entries.
    pub fn next_vector(&mut self, dim: usize, sigma: f64) -> Vec<f64> {
        (0..dim).map(|_| sigma * self.next_standard()).collect()
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for cell (a, b) of a sweep:
/// splitmix64(splitmix64(master ⊕ splitmix64(a)) ⊕ b).
pub fn sub_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(a)) ^ b)
}

/// Simulates T steps of the closed loop with x_0 ~ N(0, σ²I).
pub fn simulate(
    plant: &PlantModel,
    gain: &FeedbackGain,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory, SimError> {
    let mut gauss = GaussianStream::new(seed);
    let x0 = gauss.next_vector(plant.n(), plant.sigma2().sqrt());
    run(plant, gain, x0, horizon, seed, gauss)
}

/// Simulates T steps from a given initial state; disturbances still come
/// from `seed` (the same stream that [`simulate`] uses after drawing x_0).
pub fn simulate_from(
    plant: &PlantModel,
    gain: &FeedbackGain,
    x0: &[f64],
    horizon: usize,
    seed: u64,
) -> Result<Trajectory, SimError> {
    if x0.len() != plant.n() {
        return Err(SimError::DimensionMismatch(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            plant.n()
        )));
    }
    let mut gauss = GaussianStream::new(seed);
    // keep the disturbance stream aligned with `simulate`
    let _ = gauss.next_vector(plant.n(), 1.0);
    run(plant, gain, x0.to_vec(), horizon, seed, gauss)
}

fn run(
    plant: &PlantModel,
    gain: &FeedbackGain,
    x0: Vec<f64>,
    horizon: usize,
    seed: u64,
    mut gauss: GaussianStream,
) -> Result<Trajectory, SimError> {
    if horizon == 0 {
        return Err(SimError::InvalidHorizon);
    }
    let a = stable_closed_loop(plant, gain)?;
    let sigma = plant.sigma2().sqrt();
    let n = plant.n();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut noises = Vec::with_capacity(horizon);
    states.push(x0);
    for t in 0..horizon {
        let w = gauss.next_vector(n, sigma);
        let next: Vec<f64> = a
            .mul_vec(&states[t])
            .iter()
            .zip(&w)
            .map(|(ax, wi)| ax + wi)
            .collect();
        noises.push(w);
        states.push(next);
    }
    Ok(Trajectory {
        states,
        noises,
        seed,
    })
}
