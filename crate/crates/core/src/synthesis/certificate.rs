//! Numerical certificates: positive realness of the loop transfer matrix on
//! the imaginary axis, and nonsingularity of `I + M₁M₂` for matrices with
//! positive semidefinite / definite Hermitian parts.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{FeedbackGain, Plant};
use crate::error::{Error, Result};
use crate::linalg;

/// Lowest accepted eigenvalue of `T(jω) + T(jω)*`.
pub const POSITIVE_REAL_TOL: f64 = -1e-10;
/// Smallest accepted `|det(I + M₁M₂)|`.
pub const DET_TOL: f64 = 1e-12;

/// `ω = 0` followed by 200 log-spaced points over `[1e−4, 1e4]`.
pub fn frequency_grid() -> Vec<f64> {
    const POINTS: usize = 200;
    std::iter::once(0.0)
        .chain((0..POINTS).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / (POINTS - 1) as f64)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositiveRealCertificate {
    pub passed: bool,
    /// Smallest eigenvalue of `T(jω) + T(jω)*` over the grid.
    pub min_hermitian_eigenvalue: f64,
    pub worst_frequency: f64,
    pub frequencies_checked: usize,
    /// Spectrum of `A − kBF`.
    pub closed_loop_spectrum: Vec<Complex64>,
}

/// Samples `T(s) = F (sI − A + kBF)⁻¹ kB` along the imaginary axis.
///
/// Fails with [`Error::NotHurwitz`] when `A − kBF` has an eigenvalue in the
/// closed right half plane, since boundary sampling says nothing about an
/// unstable transfer matrix.
pub fn check_positive_real(plant: &Plant, gain: &FeedbackGain, k: f64) -> Result<PositiveRealCertificate> {
    let n = plant.n();
    let f = &gain.f;
    if f.shape() != (plant.m(), n) {
        return Err(Error::dimension(
            "F",
            format!("{}x{}", plant.m(), n),
            format!("{}x{}", f.nrows(), f.ncols()),
        ));
    }
    let a_cl = plant.closed_loop(f, k);
    let closed_loop_spectrum = linalg::eigenvalues(&a_cl)?;
    if let Some(eigenvalue) = linalg::hurwitz_violation(&closed_loop_spectrum) {
        return Err(Error::NotHurwitz { eigenvalue });
    }

    let a_cl = linalg::to_complex(&a_cl);
    let input = linalg::to_complex(&(plant.b() * k));
    let output = linalg::to_complex(f);
    let grid = frequency_grid();
    let mut min_eig = f64::INFINITY;
    let mut worst_frequency = 0.0;
    for &omega in &grid {
        let mut pencil = -a_cl.clone();
        for i in 0..n {
            pencil[(i, i)] += Complex64::new(0.0, omega);
        }
        let resolvent_b = pencil
            .lu()
            .solve(&input)
            .ok_or_else(|| Error::Synthesis(format!("resolvent is singular at ω = {omega}")))?;
        let t = &output * resolvent_b;
        let lambda = linalg::hermitian_min_eigenvalue(&linalg::hermitian_part(&t));
        if lambda < min_eig {
            min_eig = lambda;
            worst_frequency = omega;
        }
    }
    Ok(PositiveRealCertificate {
        passed: min_eig >= POSITIVE_REAL_TOL,
        min_hermitian_eigenvalue: min_eig,
        worst_frequency,
        frequencies_checked: grid.len(),
        closed_loop_spectrum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetCertificate {
    pub determinant: Complex64,
    pub nonzero: bool,
}

/// Evaluates `det(I + M₁M₂)` after checking `M₁ + M₁* ⪰ 0` and
/// `M₂ + M₂* ≻ 0`.
pub fn det_certificate(m1: &DMatrix<Complex64>, m2: &DMatrix<Complex64>) -> Result<DetCertificate> {
    let n = m1.nrows();
    if !m1.is_square() || m2.shape() != (n, n) {
        return Err(Error::dimension(
            "M1, M2",
            "square matrices of equal size",
            format!("{:?} and {:?}", m1.shape(), m2.shape()),
        ));
    }
    let m1_floor = -1e-12 * linalg::max_abs_complex(m1).max(1.0);
    let m1_min = linalg::hermitian_min_eigenvalue(&linalg::hermitian_part(m1));
    if m1_min < m1_floor {
        return Err(Error::Precondition(format!(
            "M1 + M1* is not positive semidefinite (λ_min = {m1_min:.3e})"
        )));
    }
    let m2_min = linalg::hermitian_min_eigenvalue(&linalg::hermitian_part(m2));
    if !(m2_min > 0.0) {
        return Err(Error::Precondition(format!(
            "M2 + M2* is not positive definite (λ_min = {m2_min:.3e})"
        )));
    }
    let determinant = (DMatrix::<Complex64>::identity(n, n) + m1 * m2).determinant();
    Ok(DetCertificate {
        determinant,
        nonzero: determinant.norm() > DET_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_plant() -> Plant {
        Plant::new(DMatrix::zeros(1, 1), DMatrix::identity(1, 1)).unwrap()
    }

    #[test]
    fn grid_shape() {
        let g = frequency_grid();
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 1e-4).abs() < 1e-18);
        assert!((g[200] - 1e4).abs() < 1e-8);
    }

    #[test]
    fn first_order_lag_is_positive_real() {
        // T(jω) = 1/(1 + jω)
        let cert = check_positive_real(&scalar_plant(), &FeedbackGain::explicit(DMatrix::identity(1, 1)), 1.0)
            .unwrap();
        assert!(cert.passed);
        // Re T = 1/(1+ω²), so T + T* = 2/(1+ω²) is smallest at the top of the grid
        assert!((cert.min_hermitian_eigenvalue - 2.0 / (1.0 + 1e8)).abs() < 1e-15);
        assert_eq!(cert.worst_frequency, *frequency_grid().last().unwrap());
    }

    #[test]
    fn flipped_gain_is_not_hurwitz() {
        let err = check_positive_real(&scalar_plant(), &FeedbackGain::explicit(-DMatrix::identity(1, 1)), 1.0)
            .unwrap_err();
        match err {
            Error::NotHurwitz { eigenvalue } => assert!((eigenvalue.re - 1.0).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn cm(rows: &[[f64; 2]; 2]) -> DMatrix<Complex64> {
        DMatrix::from_fn(2, 2, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    #[test]
    fn det_identity_and_skew() {
        let eye = DMatrix::<Complex64>::identity(2, 2);
        let cert = det_certificate(&DMatrix::zeros(2, 2), &eye).unwrap();
        assert_eq!(cert.determinant, Complex64::new(1.0, 0.0));
        assert!(cert.nonzero);

        let skew = cm(&[[0.0, 1.0], [-1.0, 0.0]]);
        let cert = det_certificate(&skew, &eye).unwrap();
        assert!((cert.determinant - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn det_preconditions() {
        let eye = DMatrix::<Complex64>::identity(2, 2);
        let err = det_certificate(&(-eye.clone()), &eye).unwrap_err();
        assert!(err.to_string().contains("M1"), "{err}");
        let err = det_certificate(&eye, &DMatrix::zeros(2, 2)).unwrap_err();
        assert!(err.to_string().contains("M2"), "{err}");
    }
}
