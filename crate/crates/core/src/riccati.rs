//! Discrete algebraic Riccati equation and the regularized LQR gain.
//!
//! Solves X = AᵀXA − AᵀXB(R + BᵀXB)⁻¹BᵀXA + Q with the structure-preserving
//! doubling algorithm. With Q = I and R = ρI the LQR gain approaches the
//! minimum-trace Gramian gain as ρ → 0, which gives a second route to the
//! H₂ optimum that shares no code with the barrier solver.

use crate::matkit::{self, MatError, RealMatrix, SpdMatrix};
use crate::plantsim::{FeedbackGain, PlantModel};

const MAX_DOUBLINGS: usize = 100;
const TOL: f64 = 1e-14;

/// Stabilizing solution of the DARE for (A, B, Q, R), Q ⪰ 0 and R ≻ 0.
pub fn solve_dare(
    a: &RealMatrix,
    b: &RealMatrix,
    q: &RealMatrix,
    r: &SpdMatrix,
) -> Result<SpdMatrix, MatError> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n || q.shape() != (n, n) || r.dim() != b.cols() {
        return Err(MatError::DimensionMismatch(
            "solve_dare: inconsistent A, B, Q, R".into(),
        ));
    }
    let eye = RealMatrix::identity(n);
    let mut ak = a.clone();
    let mut gk = b * &matkit::solve_spd(r, &b.transpose())?;
    let mut hk = q.clone();
    for _ in 0..MAX_DOUBLINGS {
        // W = (I + G H)⁻¹
        let w = matkit::solve(&(&eye + &(&gk * &hk)), &eye)?;
        let aw = &ak * &w;
        let a_next = &aw * &ak;
        let g_next = (&gk + &(&(&aw * &gk) * &ak.transpose())).symmetrized();
        let h_next = (&hk + &(&(&(&ak.transpose() * &hk) * &w) * &ak)).symmetrized();
        let step = matkit::frobenius_norm(&(&h_next - &hk));
        let done = step <= TOL * matkit::frobenius_norm(&h_next);
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if !hk.as_slice().iter().all(|v| v.is_finite()) {
            return Err(MatError::NonConvergence(MAX_DOUBLINGS));
        }
        if done {
            return SpdMatrix::new(hk);
        }
    }
    Err(MatError::NonConvergence(MAX_DOUBLINGS))
}

/// LQR gain for state weight I and control weight ρI:
/// F = −(ρI + BᵀXB)⁻¹BᵀXA.
pub fn lqr_gain(plant: &PlantModel, rho: f64) -> Result<FeedbackGain, MatError> {
    let (a, b) = (plant.a_p(), plant.b_p());
    let r = SpdMatrix::new(RealMatrix::identity(plant.m()).scale(rho))?;
    let x = solve_dare(a, b, &RealMatrix::identity(plant.n()), &r)?;
    let btx = &b.transpose() * x.as_matrix();
    let lhs = r.as_matrix() + &(&btx * b);
    let f = matkit::solve_spd_raw(&lhs.symmetrized(), &(&btx * a))?;
    Ok(FeedbackGain::new(-&f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_dare_matches_closed_form() {
        // x = a²x − a²b²x²/(r + b²x) + q; with a = 2, b = 1, q = r = 1:
        // x² − 4x − 1 = 0 → x = 2 + √5
        let a = RealMatrix::from_diag(&[2.0]);
        let b = RealMatrix::identity(1);
        let r = SpdMatrix::new(RealMatrix::identity(1)).unwrap();
        let x = solve_dare(&a, &b, &RealMatrix::identity(1), &r).unwrap();
        assert!((x.as_matrix()[(0, 0)] - (2.0 + 5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn dare_residual_small() {
        let a = RealMatrix::from_rows(&[[1.1, 0.4], [0.0, 0.7]]).unwrap();
        let b = RealMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let q = RealMatrix::identity(2);
        let r = SpdMatrix::new(RealMatrix::identity(1).scale(0.5)).unwrap();
        let x = solve_dare(&a, &b, &q, &r).unwrap();
        let x = x.as_matrix();
        let atx = &a.transpose() * x;
        let btxb = &(&b.transpose() * x) * &b;
        let k =
            matkit::solve_spd_raw(&(r.as_matrix() + &btxb), &(&(&b.transpose() * x) * &a)).unwrap();
        let res = &(&(&(&atx * &a) - &(&(&atx * &b) * &k)) + &q) - x;
        assert!(matkit::frobenius_norm(&res) < 1e-10 * matkit::frobenius_norm(x));
    }

    #[test]
    fn lqr_gain_stabilizes_unstable_plant() {
        let plant = PlantModel::new(
            RealMatrix::from_rows(&[[1.2, 1.0], [0.0, 1.1]]).unwrap(),
            RealMatrix::from_rows(&[[0.0], [1.0]]).unwrap(),
            1.0,
        )
        .unwrap();
        for rho in [1.0, 1e-4, 1e-8] {
            let f = lqr_gain(&plant, rho).unwrap();
            let acl = crate::plantsim::closed_loop(&plant, &f).unwrap();
            assert!(matkit::spectral_radius(&acl) < 1.0, "rho = {rho}");
        }
    }
}
