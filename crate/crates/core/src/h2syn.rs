//! Security-optimal gain synthesis.
//!
//! The gain that maximizes the attacker's identification error is the one
//! minimizing tr Ψ(F), where Ψ solves A Ψ Aᵀ − Ψ + I = 0 for
//! A = A_p + B_p F. It is found from the semidefinite program
//!
//! ```text
//! minimize tr(P)  subject to  P ≻ 0,  [ P   R   I ]
//!                                     [ Rᵀ  P   O ]  ≻ 0,   R = A_p P + B_p Q
//!                                     [ I   O   I ]
//! ```
//!
//! and F* = Q* (P*)⁻¹. The program is solved by a primal log-det barrier
//! method over (P, Q): for increasing weights t, damped Newton steps center
//! t·tr(P) − log det LMI(P, Q) − log det P. The barrier parameter is 4n
//! (3n for the block LMI, n for P), so the central point at weight t is
//! within 4n/t of the optimum.
//!
//! Newton systems are built from Cholesky-whitened directions and solved by
//! QR, and the step length comes from the exact one-dimensional barrier
//! restriction Σ ln(1 + sμᵢ). At large t the gradient is still limited by
//! cancellation in t·c − tr(M); a center that stops improving is accepted
//! when its Newton decrement λ ≤ 1/4, and the reported gap then carries
//! the inexact-centering term.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::matkit::{self, MatError, RealMatrix, SpdMatrix};
use crate::plantsim::{self, FeedbackGain, PlantModel, SimError};
use crate::riccati;

/// Required optimality gap of the final central point.
pub const GAP_TOL: f64 = 1e-8;

const T_INIT: f64 = 1.0;
const T_GROWTH: f64 = 10.0;
const INIT_MARGIN: f64 = 0.1;
const MAX_RESTARTS: usize = 4;
const NEWTON_TOL: f64 = 1e-10;
// a center that stalls at working precision is accepted while the Newton
// decrement λ stays below this; the reported gap then includes the
// inexact-centering term
const STALL_DECREMENT: f64 = 0.25;
const T_MAX: f64 = 1e14;
const MAX_NEWTON_PER_CENTER: usize = 2000;
// iterations without a new smallest decrement before a center counts as stalled
const NO_PROGRESS_LIMIT: usize = 50;
const BACKTRACK: f64 = 0.5;
const LINE_ITERS: usize = 60;
const LINE_STEP_CAP: f64 = 1e3;
const MIN_STEP: f64 = 1e-14;
// control weight of the Riccati gain used only to build the interior start
const INIT_RHO: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("(A_p, B_p) is not controllable")]
    NotControllable,
    #[error("no strictly feasible starting point: {0}")]
    BarrierInitFailure(String),
    #[error("barrier method did not converge after {restarts} restarts (gap {gap:e})")]
    NonConvergence { restarts: usize, gap: f64 },
    #[error("extracted gain does not stabilize the plant (spectral radius {0})")]
    UnstableResult(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

type Result<T> = std::result::Result<T, SynthesisError>;

/// Converged point of the barrier method.
#[derive(Clone, Debug, Serialize)]
pub struct SdpSolution {
    /// Epigraph value, reported as tr(P*) + barrier_gap.
    pub eta: f64,
    pub p_star: SpdMatrix,
    pub q_star: RealMatrix,
    pub barrier_gap: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthesisResult {
    pub gain: FeedbackGain,
    pub gramian: SpdMatrix,
    pub gramian_trace: f64,
}

/// The symmetric 3n × 3n block matrix of the synthesis LMI.
pub fn lmi_value(plant: &PlantModel, p: &SpdMatrix, q: &RealMatrix) -> Result<RealMatrix> {
    if p.dim() != plant.n() || q.shape() != (plant.m(), plant.n()) {
        return Err(SynthesisError::DimensionMismatch(format!(
            "P is {}x{}, Q is {:?}, plant has n = {}, m = {}",
            p.dim(),
            p.dim(),
            q.shape(),
            plant.n(),
            plant.m()
        )));
    }
    Ok(assemble_lmi(plant, p.as_matrix(), q))
}

fn assemble_lmi(plant: &PlantModel, p: &RealMatrix, q: &RealMatrix) -> RealMatrix {
    let n = plant.n();
    let r = &(plant.a_p() * p) + &(plant.b_p() * q);
    let eye = RealMatrix::identity(n);
    let mut l = RealMatrix::zeros(3 * n, 3 * n);
    l.set_block(0, 0, p);
    l.set_block(0, n, &r);
    l.set_block(0, 2 * n, &eye);
    l.set_block(n, 0, &r.transpose());
    l.set_block(n, n, p);
    l.set_block(2 * n, 0, &eye);
    l.set_block(2 * n, 2 * n, &eye);
    l
}

/// tr Ψ for the closed loop A_p + B_p F.
pub fn gramian_trace(plant: &PlantModel, gain: &FeedbackGain) -> Result<f64> {
    Ok(closed_loop_gramian(plant, gain)?.trace())
}

pub(crate) fn closed_loop_gramian(plant: &PlantModel, gain: &FeedbackGain) -> Result<SpdMatrix> {
    let a = plantsim::stable_closed_loop(plant, gain)?;
    Ok(matkit::solve_discrete_lyapunov(&a)?)
}

/// Coordinates: upper triangle of P (row by row), then Q row-major.
struct Layout {
    n: usize,
    m: usize,
    sym_index: Vec<(usize, usize)>,
}

impl Layout {
    fn new(n: usize, m: usize) -> Self {
        let sym_index = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        Self { n, m, sym_index }
    }

    fn len(&self) -> usize {
        self.sym_index.len() + self.n * self.m
    }

    fn unpack(&self, x: &[f64]) -> (RealMatrix, RealMatrix) {
        let (n, m) = (self.n, self.m);
        let mut p = RealMatrix::zeros(n, n);
        for (k, &(i, j)) in self.sym_index.iter().enumerate() {
            p[(i, j)] = x[k];
            p[(j, i)] = x[k];
        }
        let off = self.sym_index.len();
        let q = RealMatrix::new(m, n, x[off..].to_vec()).expect("layout length");
        (p, q)
    }

    fn pack(&self, p: &RealMatrix, q: &RealMatrix) -> Vec<f64> {
        let mut x: Vec<f64> = self.sym_index.iter().map(|&(i, j)| p[(i, j)]).collect();
        x.extend_from_slice(q.as_slice());
        x
    }

    // derivative of tr(P) with respect to each coordinate
    fn trace_weights(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self
            .sym_index
            .iter()
            .map(|&(i, j)| if i == j { 1.0 } else { 0.0 })
            .collect();
        c.resize(self.len(), 0.0);
        c
    }
}

/// Cholesky factors of both constrained matrices.
struct BarrierPoint {
    c_l: DMatrix<f64>,
    c_p: DMatrix<f64>,
}

fn factor(m: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let c = Cholesky::new(m)?.unpack();
    c.diagonal()
        .iter()
        .all(|d| *d > 0.0 && d.is_finite())
        .then_some(c)
}

/// C⁻¹ D C⁻ᵀ for lower-triangular C and symmetric D.
fn whiten(c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let y = c.solve_lower_triangular(d).expect("positive pivots");
    let m = c
        .solve_lower_triangular(&y.transpose())
        .expect("positive pivots");
    (&m + m.transpose()) * 0.5
}

struct Barrier<'a> {
    plant: &'a PlantModel,
    layout: Layout,
    trace_w: Vec<f64>,
    // LMI and P directions of every coordinate
    l_dirs: Vec<DMatrix<f64>>,
    p_dirs: Vec<DMatrix<f64>>,
}

/// Newton direction at one point, with the whitened step matrices needed
/// by the line search.
struct NewtonStep {
    dx: Vec<f64>,
    decrement_sq: f64,
    step_l: DMatrix<f64>,
    step_p: DMatrix<f64>,
}

impl<'a> Barrier<'a> {
    fn new(plant: &'a PlantModel) -> Self {
        let (n, m) = (plant.n(), plant.m());
        let layout = Layout::new(n, m);
        let mut l_dirs = Vec::with_capacity(layout.len());
        let mut p_dirs = Vec::with_capacity(layout.len());
        for k in 0..layout.len() {
            let mut e = vec![0.0; layout.len()];
            e[k] = 1.0;
            let (p, q) = layout.unpack(&e);
            let r = &(plant.a_p() * &p) + &(plant.b_p() * &q);
            let mut l = RealMatrix::zeros(3 * n, 3 * n);
            l.set_block(0, 0, &p);
            l.set_block(0, n, &r);
            l.set_block(n, 0, &r.transpose());
            l.set_block(n, n, &p);
            l_dirs.push(l.to_nalgebra());
            p_dirs.push(p.to_nalgebra());
        }
        let trace_w = layout.trace_weights();
        Self {
            plant,
            layout,
            trace_w,
            l_dirs,
            p_dirs,
        }
    }

    fn evaluate(&self, x: &[f64]) -> Option<BarrierPoint> {
        let (p, q) = self.layout.unpack(x);
        let c_p = factor(p.to_nalgebra())?;
        let c_l = factor(assemble_lmi(self.plant, &p, &q).to_nalgebra())?;
        Some(BarrierPoint { c_l, c_p })
    }

    /// Newton step for t·tr(P) − log det L − log det P. With whitened
    /// directions M_k = C⁻¹ L_k C⁻ᵀ the gradient is t c_k − tr M_k and the
    /// Hessian is the Gram matrix of the M_k, so the step is solved by QR
    /// of the stacked directions instead of forming the Hessian.
    fn newton_step(&self, t: f64, pt: &BarrierPoint) -> Option<NewtonStep> {
        let v = self.layout.len();
        let ml: Vec<DMatrix<f64>> = self.l_dirs.iter().map(|d| whiten(&pt.c_l, d)).collect();
        let mp: Vec<DMatrix<f64>> = self.p_dirs.iter().map(|d| whiten(&pt.c_p, d)).collect();
        let grad: Vec<f64> = (0..v)
            .map(|k| t * self.trace_w[k] - ml[k].trace() - mp[k].trace())
            .collect();
        let rows = ml[0].len() + mp[0].len();
        let mut g = DMatrix::<f64>::zeros(rows, v);
        let mut scale = vec![1.0; v];
        for k in 0..v {
            let col: Vec<f64> = ml[k].iter().chain(mp[k].iter()).copied().collect();
            let norm = col.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 0.0 {
                scale[k] = 1.0 / norm;
            }
            for (i, c) in col.iter().enumerate() {
                g[(i, k)] = c * scale[k];
            }
        }
        let rhs = DVector::from_iterator(v, (0..v).map(|k| -grad[k] * scale[k]));
        let y = solve_gram(&g, &rhs)?;
        let dx: Vec<f64> = (0..v).map(|k| y.0[k] * scale[k]).collect();
        if dx.iter().any(|d| !d.is_finite()) {
            return None;
        }
        let combine = |ms: &[DMatrix<f64>]| {
            ms.iter().zip(&dx).fold(
                DMatrix::zeros(ms[0].nrows(), ms[0].ncols()),
                |acc, (m, d)| acc + m * *d,
            )
        };
        Some(NewtonStep {
            step_l: combine(&ml),
            step_p: combine(&mp),
            decrement_sq: y.1,
            dx,
        })
    }
}

/// Solves GᵀG y = b through a thin QR of G, adding a small ridge when G is
/// column-rank deficient (B_p without full column rank). Also returns
/// yᵀGᵀG y, the squared Newton decrement.
fn solve_gram(g: &DMatrix<f64>, b: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let v = g.ncols();
    for ridge in [0.0_f64, 1e-12, 1e-10, 1e-8] {
        let r = if ridge == 0.0 {
            g.clone().qr().r()
        } else {
            let mut aug = DMatrix::<f64>::zeros(g.nrows() + v, v);
            aug.view_mut((0, 0), (g.nrows(), v)).copy_from(g);
            for i in 0..v {
                aug[(g.nrows() + i, i)] = ridge.sqrt();
            }
            aug.qr().r()
        };
        let rmax = r.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        if r.diagonal().iter().any(|d| d.abs() <= 1e-14 * rmax) {
            continue;
        }
        // Rᵀ z = b, R y = z
        let Some(z) = r.transpose().solve_lower_triangular(b) else {
            continue;
        };
        let Some(y) = r.solve_upper_triangular(&z) else {
            continue;
        };
        if y.iter().all(|c| c.is_finite()) {
            return Some((y, z.norm_squared()));
        }
    }
    None
}

/// Exact restriction of the barrier objective to a line:
/// φ(s) − φ(0) = s·a − Σ ln(1 + s μ_i), with μ the eigenvalues of the
/// whitened step matrices.
struct LineModel {
    a: f64,
    mu: Vec<f64>,
    s_max: f64,
}

impl LineModel {
    fn new(a: f64, step: &NewtonStep) -> Self {
        let mut mu: Vec<f64> = SymmetricEigen::new(step.step_l.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        mu.extend(SymmetricEigen::new(step.step_p.clone()).eigenvalues.iter());
        let s_max = mu
            .iter()
            .filter(|m| **m < 0.0)
            .map(|m| -1.0 / m)
            .fold(f64::INFINITY, f64::min);
        Self { a, mu, s_max }
    }

    fn derivative(&self, s: f64) -> f64 {
        self.a - self.mu.iter().map(|m| m / (1.0 + s * m)).sum::<f64>()
    }

    fn second_derivative(&self, s: f64) -> f64 {
        self.mu.iter().map(|m| (m / (1.0 + s * m)).powi(2)).sum()
    }

    /// Minimizer of the convex line function by safeguarded Newton on φ′.
    fn minimize(&self) -> f64 {
        let mut lo = 0.0;
        let mut hi = if self.s_max.is_finite() {
            self.s_max
        } else {
            LINE_STEP_CAP
        };
        let mut s = (0.5 * hi).min(1.0);
        for _ in 0..LINE_ITERS {
            let d = self.derivative(s);
            if d > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let next = s - d / self.second_derivative(s);
            s = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        s.min(LINE_STEP_CAP)
    }
}

enum CenterOutcome {
    /// Newton decrement λ at the accepted point.
    Centered(f64),
    Stalled,
}

/// Suboptimality bound at a point with Newton decrement λ < 1 for a barrier
/// with parameter θ: (θ + (λ + √θ) λ / (1 − λ)) / t.
fn certified_gap(theta: f64, t: f64, lambda: f64) -> f64 {
    (theta + (lambda + theta.sqrt()) * lambda / (1.0 - lambda)) / t
}

impl Barrier<'_> {
    /// Damped Newton centering at weight t; updates x in place.
    fn center(&self, t: f64, x: &mut Vec<f64>, iterations: &mut usize) -> CenterOutcome {
        let Some(mut pt) = self.evaluate(x) else {
            return CenterOutcome::Stalled;
        };
        let mut decrement = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut since_best = 0;
        for _ in 0..MAX_NEWTON_PER_CENTER {
            let Some(step) = self.newton_step(t, &pt) else {
                return CenterOutcome::Stalled;
            };
            decrement = step.decrement_sq;
            if decrement / 2.0 <= NEWTON_TOL {
                return CenterOutcome::Centered(decrement.sqrt());
            }
            if decrement < best {
                best = decrement;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > NO_PROGRESS_LIMIT && decrement.sqrt() <= STALL_DECREMENT {
                    break;
                }
            }
            let lin: f64 = self.trace_w.iter().zip(&step.dx).map(|(c, d)| c * d).sum();
            let line = LineModel::new(t * lin, &step);
            if line.derivative(0.0) >= 0.0 {
                // no descent left at working precision
                break;
            }
            *iterations += 1;
            let mut s = line.minimize();
            let mut moved = false;
            while s >= MIN_STEP {
                let trial: Vec<f64> = x.iter().zip(&step.dx).map(|(xi, di)| xi + s * di).collect();
                if let Some(tp) = self.evaluate(&trial) {
                    *x = trial;
                    pt = tp;
                    moved = true;
                    break;
                }
                s *= BACKTRACK;
            }
            if !moved {
                break;
            }
        }
        if decrement.sqrt() <= STALL_DECREMENT {
            CenterOutcome::Centered(decrement.sqrt())
        } else {
            CenterOutcome::Stalled
        }
    }
}

/// Interior start P₀ = (1 + ε)Ψ₀, Q₀ = F₀P₀ from a stabilizing Riccati gain
/// F₀; at this point A P₀ Aᵀ − P₀ + I = −εI.
fn initial_point(
    plant: &PlantModel,
    f0: &FeedbackGain,
    margin: f64,
) -> Result<(RealMatrix, RealMatrix)> {
    let psi0 = closed_loop_gramian(plant, f0)
        .map_err(|e| SynthesisError::BarrierInitFailure(e.to_string()))?;
    let p0 = psi0.as_matrix().scale(1.0 + margin);
    let q0 = f0.matrix() * &p0;
    Ok((p0, q0))
}

/// Solves the gain-synthesis SDP to a barrier gap below 1e-8.
pub fn solve_h2_sdp(plant: &PlantModel) -> Result<SdpSolution> {
    if !plant.is_controllable() {
        return Err(SynthesisError::NotControllable);
    }
    let f0 = riccati::lqr_gain(plant, INIT_RHO)
        .map_err(|e| SynthesisError::BarrierInitFailure(format!("Riccati initializer: {e}")))?;
    let barrier = Barrier::new(plant);
    let theta = 4.0 * plant.n() as f64;
    let mut margin = INIT_MARGIN;
    let mut last_gap = f64::INFINITY;
    for _attempt in 0..=MAX_RESTARTS {
        let (p0, q0) = initial_point(plant, &f0, margin)?;
        let mut x = barrier.layout.pack(&p0, &q0);
        if barrier.evaluate(&x).is_none() {
            return Err(SynthesisError::BarrierInitFailure(
                "initial point is not strictly feasible".into(),
            ));
        }
        let mut t = T_INIT;
        let mut iterations = 0;
        let converged = loop {
            let CenterOutcome::Centered(lambda) = barrier.center(t, &mut x, &mut iterations) else {
                break false;
            };
            last_gap = certified_gap(theta, t, lambda);
            if last_gap < GAP_TOL {
                break true;
            }
            if t >= T_MAX {
                break false;
            }
            t *= T_GROWTH;
        };
        if converged {
            let (p, q) = barrier.layout.unpack(&x);
            let p_star = SpdMatrix::new(p)?;
            return Ok(SdpSolution {
                eta: p_star.trace() + last_gap,
                p_star,
                q_star: q,
                barrier_gap: last_gap,
                iterations,
            });
        }
        margin *= 2.0;
    }
    Err(SynthesisError::NonConvergence {
        restarts: MAX_RESTARTS,
        gap: last_gap,
    })
}

/// F* = Q*(P*)⁻¹ together with its Gramian.
pub fn extract_gain(plant: &PlantModel, sol: &SdpSolution) -> Result<SynthesisResult> {
    if sol.q_star.shape() != (plant.m(), plant.n()) || sol.p_star.dim() != plant.n() {
        return Err(SynthesisError::DimensionMismatch(
            "solution does not match the plant".into(),
        ));
    }
    // F Pᵀ = Q with P symmetric → P Fᵀ = Qᵀ
    let ft = matkit::solve_spd(&sol.p_star, &sol.q_star.transpose())?;
    let gain = FeedbackGain::new(ft.transpose());
    let a = plantsim::closed_loop(plant, &gain)?;
    let rho = matkit::spectral_radius(&a);
    if rho >= 1.0 {
        return Err(SynthesisError::UnstableResult(rho));
    }
    let gramian = matkit::solve_discrete_lyapunov(&a).map_err(|e| match e {
        MatError::UnstableMatrix(r) => SynthesisError::UnstableResult(r),
        other => other.into(),
    })?;
    let gramian_trace = gramian.trace();
    Ok(SynthesisResult {
        gain,
        gramian,
        gramian_trace,
    })
}

/// Solves the SDP and extracts the gain in one call.
pub fn synthesize(plant: &PlantModel) -> Result<SynthesisResult> {
    let sol = solve_h2_sdp(plant)?;
    extract_gain(plant, &sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(m: RealMatrix) -> SpdMatrix {
        SpdMatrix::new(m).unwrap()
    }

    fn null_plant(n: usize) -> PlantModel {
        PlantModel::new(RealMatrix::zeros(n, n), RealMatrix::zeros(n, 1), 1.0).unwrap()
    }

    #[test]
    fn lmi_blocks_identity_case() {
        let l = lmi_value(
            &null_plant(2),
            &spd(RealMatrix::identity(2)),
            &RealMatrix::zeros(1, 2),
        )
        .unwrap();
        let mut expect = RealMatrix::identity(6);
        expect[(0, 4)] = 1.0;
        expect[(1, 5)] = 1.0;
        expect[(4, 0)] = 1.0;
        expect[(5, 1)] = 1.0;
        assert_eq!(l, expect);
        assert!(matkit::min_symmetric_eigenvalue(&l).abs() < 1e-12);
    }

    #[test]
    fn lmi_blocks_scaled_case_is_positive_definite() {
        let l = lmi_value(
            &null_plant(2),
            &spd(RealMatrix::identity(2).scale(2.0)),
            &RealMatrix::zeros(1, 2),
        )
        .unwrap();
        assert_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(2, 2)], 2.0);
        assert_eq!(l[(0, 4)], 1.0);
        assert!(matkit::cholesky(&l).is_ok());
    }

    #[test]
    fn lmi_rejects_bad_shapes() {
        let r = lmi_value(
            &null_plant(2),
            &spd(RealMatrix::identity(3)),
            &RealMatrix::zeros(1, 2),
        );
        assert!(matches!(r, Err(SynthesisError::DimensionMismatch(_))));
    }

    #[test]
    fn scalar_plant_deadbeat() {
        let plant = PlantModel::new(RealMatrix::zeros(1, 1), RealMatrix::identity(1), 1.0).unwrap();
        let sol = solve_h2_sdp(&plant).unwrap();
        assert!(sol.barrier_gap <= GAP_TOL);
        assert!((sol.p_star.trace() - 1.0).abs() < 1e-6);
        let res = extract_gain(&plant, &sol).unwrap();
        assert!(res.gain.matrix()[(0, 0)].abs() < 1e-4);
        assert!((res.gramian_trace - 1.0).abs() < 1e-6);
    }

    #[test]
    fn uncontrollable_plant_is_rejected() {
        let plant = PlantModel::new(
            RealMatrix::from_diag(&[0.5, 0.2]),
            RealMatrix::from_rows(&[[1.0], [0.0]]).unwrap(),
            1.0,
        )
        .unwrap();
        assert!(matches!(
            solve_h2_sdp(&plant),
            Err(SynthesisError::NotControllable)
        ));
    }

    #[test]
    fn gramian_trace_examples() {
        let plant =
            PlantModel::new(RealMatrix::from_diag(&[0.5]), RealMatrix::identity(1), 1.0).unwrap();
        let tr = gramian_trace(&plant, &FeedbackGain::zero(&plant)).unwrap();
        assert!((tr - 1.0 / 0.75).abs() < 1e-14);
        let deadbeat = FeedbackGain::new(RealMatrix::from_diag(&[-0.5]));
        assert!((gramian_trace(&plant, &deadbeat).unwrap() - 1.0).abs() < 1e-14);
        let unstable = FeedbackGain::new(RealMatrix::from_diag(&[0.6]));
        assert!(matches!(
            gramian_trace(&plant, &unstable),
            Err(SynthesisError::Sim(SimError::UnstableClosedLoop(_)))
        ));
    }

    #[test]
    fn solution_satisfies_invariants() {
        let plant = PlantModel::new(
            RealMatrix::from_rows(&[[1.1, 0.3], [0.0, 0.9]]).unwrap(),
            RealMatrix::from_rows(&[[0.0], [1.0]]).unwrap(),
            1.0,
        )
        .unwrap();
        let sol = solve_h2_sdp(&plant).unwrap();
        assert!(sol.p_star.trace() < sol.eta);
        let l = lmi_value(&plant, &sol.p_star, &sol.q_star).unwrap();
        assert!(matkit::cholesky(&l).is_ok());
        let res = extract_gain(&plant, &sol).unwrap();
        assert!(res.gramian_trace <= sol.p_star.trace() + 1e-6);
        assert!(res.gramian_trace >= 2.0);
    }
}
