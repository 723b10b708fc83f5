//! Least-squares identification attack on the closed loop.
//!
//! An eavesdropper who deciphers the states x_{t_s}, …, x_{t_f} stacks
//! them into X_p = [x_{t_s} … x_{t_f−1}] and X_f = [x_{t_s+1} … x_{t_f}] and
//! estimates the closed-loop matrix as Â = X_f X_p⁺. Deciphering itself is
//! not modeled here: the attacker is handed plaintext states, and the cost
//! of obtaining them is accounted for in [`crate::seclevel`].

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::matkit::{self, MatError, RealMatrix};
use crate::plantsim::{self, FeedbackGain, PlantModel, SimError, Trajectory};
use crate::seclevel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("invalid attack window: {0}")]
    InvalidWindow(String),
    #[error("window [{t_s}, {t_f}] exceeds the trajectory horizon {horizon}")]
    WindowOutOfRange {
        t_s: usize,
        t_f: usize,
        horizon: usize,
    },
    #[error("state data matrix is rank deficient (reciprocal condition {0:e})")]
    RankDeficient(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

type Result<T> = std::result::Result<T, AttackError>;

/// Eavesdropping interval [t_s, t_f] with 0 < t_s < t_f.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttackWindow {
    t_s: usize,
    t_f: usize,
}

impl AttackWindow {
    pub fn new(t_s: usize, t_f: usize) -> Result<Self> {
        if t_s == 0 || t_f <= t_s {
            return Err(AttackError::InvalidWindow(format!(
                "need 0 < t_s < t_f, got t_s = {t_s}, t_f = {t_f}"
            )));
        }
        Ok(Self { t_s, t_f })
    }

    /// Window starting at t_s = 1 that yields N samples.
    pub fn from_sample_size(n_samples: usize) -> Result<Self> {
        Self::new(1, n_samples)
    }

    pub fn t_s(&self) -> usize {
        self.t_s
    }

    pub fn t_f(&self) -> usize {
        self.t_f
    }

    /// N = t_f − t_s + 1.
    pub fn sample_size(&self) -> usize {
        self.t_f - self.t_s + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackDataset {
    pub x_p: RealMatrix,
    pub x_f: RealMatrix,
    /// Disturbances w_{t_s} … w_{t_f−1}, when the trajectory recorded them.
    pub w_p: Option<RealMatrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackResult {
    pub a_hat: RealMatrix,
    pub epsilon: f64,
}

/// Slices X_p, X_f (and W_p) from a recorded trajectory.
pub fn assemble(traj: &Trajectory, window: AttackWindow) -> Result<AttackDataset> {
    if window.t_f > traj.horizon() {
        return Err(AttackError::WindowOutOfRange {
            t_s: window.t_s,
            t_f: window.t_f,
            horizon: traj.horizon(),
        });
    }
    let (s, f) = (window.t_s, window.t_f);
    let x_p = RealMatrix::from_columns(&traj.states[s..f])?;
    let x_f = RealMatrix::from_columns(&traj.states[s + 1..=f])?;
    let w_p = if traj.noises.len() >= f {
        Some(RealMatrix::from_columns(&traj.noises[s..f])?)
    } else {
        None
    };
    Ok(AttackDataset { x_p, x_f, w_p })
}

/// Â = X_f X_p⁺.
pub fn least_squares_estimate(data: &AttackDataset) -> Result<RealMatrix> {
    if data.x_p.shape() != data.x_f.shape() {
        return Err(AttackError::DimensionMismatch(format!(
            "X_p is {:?}, X_f is {:?}",
            data.x_p.shape(),
            data.x_f.shape()
        )));
    }
    let pinv = matkit::pseudo_inverse_full_row_rank(&data.x_p).map_err(|e| match e {
        MatError::RankDeficient(r) => AttackError::RankDeficient(r),
        other => other.into(),
    })?;
    Ok(&data.x_f * &pinv)
}

/// ε = ‖A − Â‖²_F / n².
pub fn estimation_error(a_true: &RealMatrix, a_hat: &RealMatrix) -> Result<f64> {
    if a_true.shape() != a_hat.shape() || !a_true.is_square() {
        return Err(AttackError::DimensionMismatch(format!(
            "A is {:?}, Â is {:?}",
            a_true.shape(),
            a_hat.shape()
        )));
    }
    let n = a_true.rows() as f64;
    Ok(matkit::frobenius_norm(&(a_true - a_hat)).powi(2) / (n * n))
}

/// Runs the full attack against a trajectory of the loop `a_true`.
pub fn attack(
    traj: &Trajectory,
    window: AttackWindow,
    a_true: &RealMatrix,
) -> Result<AttackResult> {
    let data = assemble(traj, window)?;
    let a_hat = least_squares_estimate(&data)?;
    let epsilon = estimation_error(a_true, &a_hat)?;
    Ok(AttackResult { a_hat, epsilon })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub n_samples: usize,
    pub trial: usize,
    /// `Err` holds the failure message of a trial that could not run.
    pub epsilon: std::result::Result<f64, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeSummary {
    pub n_samples: usize,
    /// Mean over successful trials; NaN when every trial failed.
    pub mean_epsilon: f64,
    pub gamma: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloTable {
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<SizeSummary>,
}

impl MonteCarloTable {
    /// Least-squares slope of ln(mean ε) against ln N.
    pub fn log_log_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .summary
            .iter()
            .filter(|s| s.mean_epsilon.is_finite() && s.mean_epsilon > 0.0)
            .map(|s| ((s.n_samples as f64).ln(), s.mean_epsilon.ln()))
            .collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
}

/// Repeats the attack `trials` times for every sample size. Each trial
/// simulates a fresh trajectory with seed `sub_seed(seed, N, trial)` and
/// attacks the window [1, N]. Rows are ordered by (N, trial) regardless of
/// how the trials were scheduled.
pub fn monte_carlo(
    plant: &PlantModel,
    gain: &FeedbackGain,
    sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<MonteCarloTable> {
    if trials == 0 {
        return Err(AttackError::InvalidSweep(
            "trials must be at least 1".into(),
        ));
    }
    if let Some(bad) = sizes.iter().find(|&&n| n < plant.n() + 2) {
        return Err(AttackError::InvalidSweep(format!(
            "sample size {bad} is below n + 2 = {}",
            plant.n() + 2
        )));
    }
    let a_true = plantsim::stable_closed_loop(plant, gain)?;
    let cells: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&n| (0..trials).map(move |k| (n, k)))
        .collect();
    let records: Vec<TrialRecord> = cells
        .par_iter()
        .map(|&(n_samples, trial)| {
            let s = plantsim::sub_seed(seed, n_samples as u64, trial as u64);
            let epsilon = run_trial(plant, gain, &a_true, n_samples, s).map_err(|e| e.to_string());
            TrialRecord {
                n_samples,
                trial,
                epsilon,
            }
        })
        .collect();
    let mut summary = Vec::with_capacity(sizes.len());
    for &n_samples in sizes {
        let ok: Vec<f64> = records
            .iter()
            .filter(|r| r.n_samples == n_samples)
            .filter_map(|r| r.epsilon.as_ref().ok().copied())
            .collect();
        let failures = trials - ok.len();
        let mean_epsilon = if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().sum::<f64>() / ok.len() as f64
        };
        let gamma = seclevel::sic(n_samples as u64, plant, gain)
            .map_err(|e| AttackError::InvalidSweep(e.to_string()))?;
        summary.push(SizeSummary {
            n_samples,
            mean_epsilon,
            gamma,
            failures,
        });
    }
    Ok(MonteCarloTable {
        trials: records,
        summary,
    })
}

fn run_trial(
    plant: &PlantModel,
    gain: &FeedbackGain,
    a_true: &RealMatrix,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let window = AttackWindow::from_sample_size(n_samples)?;
    let traj = plantsim::simulate(plant, gain, window.t_f(), seed)?;
    Ok(attack(&traj, window, a_true)?.epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_trajectory(noise: bool) -> (RealMatrix, Trajectory) {
        let a = RealMatrix::from_rows(&[[0.5, 0.2], [-0.3, 0.4]]).unwrap();
        let mut states = vec![vec![1.0, -0.5]];
        let mut noises = Vec::new();
        let mut g = plantsim::GaussianStream::new(5);
        for t in 0..40 {
            let w = if noise {
                g.next_vector(2, 0.1)
            } else {
                vec![0.0, 0.0]
            };
            let mut x = a.mul_vec(&states[t]);
            x.iter_mut().zip(&w).for_each(|(xi, wi)| *xi += wi);
            states.push(x);
            noises.push(w);
        }
        (
            a,
            Trajectory {
                states,
                noises,
                seed: 0,
            },
        )
    }

    #[test]
    fn window_validation() {
        assert!(AttackWindow::new(0, 5).is_err());
        assert!(AttackWindow::new(3, 3).is_err());
        let w = AttackWindow::new(2, 6).unwrap();
        assert_eq!(w.sample_size(), 5);
    }

    #[test]
    fn minimal_window() {
        let (_, traj) = toy_trajectory(true);
        let d = assemble(&traj, AttackWindow::new(1, 2).unwrap()).unwrap();
        assert_eq!(d.x_p.column(0), traj.states[1]);
        assert_eq!(d.x_f.column(0), traj.states[2]);
        assert_eq!(d.x_p.cols(), 1);
    }

    #[test]
    fn columns_are_shifted_by_one() {
        let (_, traj) = toy_trajectory(true);
        let d = assemble(&traj, AttackWindow::new(3, 20).unwrap()).unwrap();
        assert_eq!(d.x_p.cols(), 17);
        for j in 0..d.x_p.cols() - 1 {
            assert_eq!(d.x_f.column(j), d.x_p.column(j + 1));
        }
    }

    #[test]
    fn window_out_of_range() {
        let (_, traj) = toy_trajectory(true);
        assert!(matches!(
            assemble(&traj, AttackWindow::new(1, 41).unwrap()),
            Err(AttackError::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn shift_consistency_with_recorded_noise() {
        let (a, traj) = toy_trajectory(true);
        let d = assemble(&traj, AttackWindow::new(1, 30).unwrap()).unwrap();
        let recon = &(&a * &d.x_p) + d.w_p.as_ref().unwrap();
        assert!(recon.max_abs_diff(&d.x_f) < 1e-15);
    }

    #[test]
    fn noiseless_data_identifies_exactly() {
        let (a, traj) = toy_trajectory(false);
        let r = attack(&traj, AttackWindow::new(1, 12).unwrap(), &a).unwrap();
        assert!(r.a_hat.max_abs_diff(&a) < 1e-8);
        assert!(r.epsilon <= 1e-16 * matkit::frobenius_norm(&a).powi(2));
    }

    #[test]
    fn identity_data_returns_x_f() {
        let d = AttackDataset {
            x_p: RealMatrix::identity(3),
            x_f: RealMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]])
                .unwrap(),
            w_p: None,
        };
        assert!(least_squares_estimate(&d).unwrap().max_abs_diff(&d.x_f) < 1e-14);
    }

    #[test]
    fn rank_deficient_window() {
        let d = AttackDataset {
            x_p: RealMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap(),
            x_f: RealMatrix::identity(2),
            w_p: None,
        };
        assert!(matches!(
            least_squares_estimate(&d),
            Err(AttackError::RankDeficient(_))
        ));
    }

    #[test]
    fn estimation_error_examples() {
        let a = RealMatrix::from_rows(&[[0.3, 0.1], [0.0, 0.2]]).unwrap();
        assert_eq!(estimation_error(&a, &a).unwrap(), 0.0);
        let ones = RealMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(estimation_error(&(&a + &ones), &a).unwrap(), 1.0);
        assert!(estimation_error(&a, &RealMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn monte_carlo_validates_inputs() {
        let plant =
            PlantModel::new(RealMatrix::from_diag(&[0.5]), RealMatrix::identity(1), 1.0).unwrap();
        let g = FeedbackGain::zero(&plant);
        assert!(monte_carlo(&plant, &g, &[10], 0, 1).is_err());
        assert!(monte_carlo(&plant, &g, &[2], 1, 1).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let plant = PlantModel::new(
            RealMatrix::from_diag(&[0.5, 0.1]),
            RealMatrix::identity(2),
            1.0,
        )
        .unwrap();
        let g = FeedbackGain::zero(&plant);
        let a = monte_carlo(&plant, &g, &[20, 40], 1, 9).unwrap();
        let b = monte_carlo(&plant, &g, &[20, 40], 1, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials.len(), 2);
        assert_eq!(a.trials[0].n_samples, 20);
    }
}
