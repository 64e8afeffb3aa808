//! Feedback gain synthesis for the coupled regulator `u_i = −d_i F η_i + …`.
//!
//! Two routes produce `F`:
//!
//! - [`positive_real_gain`]: `F = k Bᵀ X` with `X` the stabilizing solution of
//!   `AᵀX + XA − k² X B Bᵀ X + Q = 0`, where `k` comes from the coupling
//!   matrix decomposition `M = k(Z + I)`. The loop transfer
//!   `F (sI − A + kBF)⁻¹ kB` is then positive real, which makes every
//!   coupled closed loop `I ⊗ A − M ⊗ BF` Hurwitz whenever `M + Mᵀ > 0`.
//! - [`assign_gain`]: for plants in the block form `B = [0; B₂]`,
//!   `F = B₂⁻¹ V⁻¹ Σ V [K I]` places `n − m` slow poles at the eigenvalues of
//!   `A₁₁ − A₁₂K` while the remaining `m` poles of `A − dBF` travel to
//!   `−d σ_j` as the gain `d` grows.
//!
//! The sign convention throughout is that `A − d B F` is the closed loop, so
//! the Riccati gain is `+k BᵀX`. Writing the loop as `A + kBF` instead flips
//! the sign of `F` to `−k BᵀX`.
//!
//! The cost weights of the underlying inverse-optimal LQR problem are not
//! needed by any of the operations here; only the pole distribution they imply
//! is computed and checked.

mod care;
mod certificate;
mod placement;
mod spectrum;

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

pub use care::{solve_care, RiccatiSolution};
pub use certificate::{
    check_positive_real, det_certificate, frequency_grid, DetCertificate, PositiveRealCertificate,
};
pub use placement::place_reduced;
pub use spectrum::{predict_spectrum, verify_convergence, ConvergenceReport, ConvergenceStep};

/// Relative tolerance for numerical rank decisions (stabilizability,
/// controllability).
pub(crate) const RANK_TOL: f64 = 1e-10;

/// State-space pair `(A, B)` with `B = [0; B₂]` and `B₂` invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl Plant {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::dimension(
                "A",
                "nonempty square matrix",
                format!("{}x{}", a.nrows(), a.ncols()),
            ));
        }
        if b.nrows() != n || b.ncols() == 0 || b.ncols() > n {
            return Err(Error::dimension(
                "B",
                format!("{n}xm with 1 <= m <= {n}"),
                format!("{}x{}", b.nrows(), b.ncols()),
            ));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::validation("plant", "entries must be finite"));
        }
        let m = b.ncols();
        let slow = n - m;
        for i in 0..slow {
            for j in 0..m {
                if b[(i, j)] != 0.0 {
                    return Err(Error::validation(
                        format!("B[{i}][{j}]"),
                        format!("the top {slow} rows of B must be zero"),
                    ));
                }
            }
        }
        let b2 = b.view((slow, 0), (m, m)).into_owned();
        let det = b2.determinant();
        if !(det.abs() > 0.0) {
            return Err(Error::validation("B", "the lower m x m block B2 is singular"));
        }
        let plant = Self { a, b };
        if let Some(mode) = plant.unstabilizable_mode() {
            return Err(Error::validation(
                "plant",
                format!("(A, B) is not stabilizable: mode {mode} is uncontrollable"),
            ));
        }
        Ok(plant)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// State dimension `n`.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension `m`.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    fn slow(&self) -> usize {
        self.n() - self.m()
    }

    pub fn a11(&self) -> DMatrix<f64> {
        self.a.view((0, 0), (self.slow(), self.slow())).into_owned()
    }

    pub fn a12(&self) -> DMatrix<f64> {
        self.a.view((0, self.slow()), (self.slow(), self.m())).into_owned()
    }

    pub fn a21(&self) -> DMatrix<f64> {
        self.a.view((self.slow(), 0), (self.m(), self.slow())).into_owned()
    }

    pub fn a22(&self) -> DMatrix<f64> {
        self.a.view((self.slow(), self.slow()), (self.m(), self.m())).into_owned()
    }

    pub fn b2(&self) -> DMatrix<f64> {
        self.b.view((self.slow(), 0), (self.m(), self.m())).into_owned()
    }

    /// `A − d B F`.
    pub fn closed_loop(&self, f: &DMatrix<f64>, d: f64) -> DMatrix<f64> {
        &self.a - &self.b * f * d
    }

    /// First eigenvalue in the closed right half plane that fails the
    /// Popov–Belevitch–Hautus rank test, if any.
    pub fn unstabilizable_mode(&self) -> Option<Complex64> {
        let spectrum = linalg::eigenvalues(&self.a).ok()?;
        spectrum
            .into_iter()
            .filter(|z| z.re >= 0.0)
            .find(|&z| !pbh_full_rank(&self.a, &self.b, z))
    }

    pub fn is_stabilizable(&self) -> bool {
        self.unstabilizable_mode().is_none()
    }
}

/// Rank test `rank [A − λI, B] = n`.
pub(crate) fn pbh_full_rank(a: &DMatrix<f64>, b: &DMatrix<f64>, lambda: Complex64) -> bool {
    let n = a.nrows();
    let m = b.ncols();
    let mut stacked = DMatrix::<Complex64>::zeros(n, n + m);
    for i in 0..n {
        for j in 0..n {
            stacked[(i, j)] = Complex64::new(a[(i, j)], 0.0);
        }
        stacked[(i, i)] -= lambda;
        for j in 0..m {
            stacked[(i, n + j)] = Complex64::new(b[(i, j)], 0.0);
        }
    }
    let scale = linalg::max_abs_complex(&stacked).max(1.0);
    let sv = SVD::new(stacked, false, false).singular_values;
    let smallest = sv.iter().fold(f64::INFINITY, |acc, &v| acc.min(v));
    smallest > RANK_TOL * scale
}

/// Targets for [`assign_gain`]: `n − m` dominant poles, `m` fast-mode rates
/// and the mixing matrix `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSpec {
    pub dominant_poles: Vec<Complex64>,
    pub sigmas: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl GainSpec {
    /// Builds a spec with `V = I`.
    pub fn new(dominant_poles: Vec<Complex64>, sigmas: Vec<f64>) -> Result<Self> {
        let m = sigmas.len();
        Self::with_mixing(dominant_poles, sigmas, DMatrix::identity(m, m))
    }

    pub fn with_mixing(dominant_poles: Vec<Complex64>, sigmas: Vec<f64>, v: DMatrix<f64>) -> Result<Self> {
        let spec = Self {
            dominant_poles,
            sigmas,
            v,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (j, s) in self.dominant_poles.iter().enumerate() {
            if !(s.re < 0.0) || !s.im.is_finite() {
                return Err(Error::validation(
                    format!("dominant_poles[{j}]"),
                    format!("must have negative real part, got {s}"),
                ));
            }
        }
        if !linalg::conjugate_closed(&self.dominant_poles, 1e-12) {
            return Err(Error::validation(
                "dominant_poles",
                "must be closed under complex conjugation",
            ));
        }
        if self.sigmas.is_empty() {
            return Err(Error::validation("sigmas", "at least one rate is required"));
        }
        for (j, &s) in self.sigmas.iter().enumerate() {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::validation(
                    format!("sigmas[{j}]"),
                    format!("must be positive, got {s}"),
                ));
            }
        }
        let m = self.sigmas.len();
        if self.v.shape() != (m, m) {
            return Err(Error::dimension(
                "V",
                format!("{m}x{m}"),
                format!("{}x{}", self.v.nrows(), self.v.ncols()),
            ));
        }
        Ok(())
    }

    /// `Σ = diag(σ₁, …, σ_m)`.
    pub fn sigma_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.sigmas))
    }
}

/// How a [`FeedbackGain`] was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum GainProvenance {
    /// Supplied directly by the user.
    Explicit,
    /// `F = B₂⁻¹V⁻¹ΣV[K I]` from [`assign_gain`].
    PoleAssignment,
    /// `F = k BᵀX` from [`positive_real_gain`]. The opposite-sign form
    /// `−k BᵀX` belongs to the `A + kBF` loop convention.
    Riccati(RiccatiSolution),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackGain {
    pub f: DMatrix<f64>,
    pub k_reduced: Option<DMatrix<f64>>,
    pub provenance: GainProvenance,
}

impl FeedbackGain {
    pub fn explicit(f: DMatrix<f64>) -> Self {
        Self {
            f,
            k_reduced: None,
            provenance: GainProvenance::Explicit,
        }
    }
}

/// Riccati-based gain for which every `A − dBF`, `d ≥ k`, is Hurwitz.
pub fn positive_real_gain(
    plant: &Plant,
    kz: &crate::coupling::KzDecomposition,
    q: &DMatrix<f64>,
) -> Result<FeedbackGain> {
    let k = kz.k;
    let sol = solve_care(plant, k, q)?;
    let f = plant.b().transpose() * &sol.x * k;
    for d in [k, 2.0 * k, 10.0 * k] {
        let spectrum = linalg::eigenvalues(&plant.closed_loop(&f, d))?;
        if let Some(z) = linalg::hurwitz_violation(&spectrum) {
            return Err(Error::Synthesis(format!(
                "A - dBF is not Hurwitz at d = {d}: eigenvalue {z}"
            )));
        }
    }
    Ok(FeedbackGain {
        f,
        k_reduced: None,
        provenance: GainProvenance::Riccati(sol),
    })
}

/// Pole-assigning gain `F = B₂⁻¹ V⁻¹ Σ V [K I]`.
pub fn assign_gain(plant: &Plant, spec: &GainSpec) -> Result<FeedbackGain> {
    spec.validate()?;
    let m = plant.m();
    if spec.sigmas.len() != m {
        return Err(Error::dimension("sigmas", m, spec.sigmas.len()));
    }
    if spec.dominant_poles.len() != plant.n() - m {
        return Err(Error::dimension(
            "dominant_poles",
            plant.n() - m,
            spec.dominant_poles.len(),
        ));
    }
    let v_inv = spec
        .v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Precondition("mixing matrix V is singular".into()))?;
    let b2_inv = plant
        .b2()
        .try_inverse()
        .ok_or_else(|| Error::Precondition("B2 is singular".into()))?;
    let k = place_reduced(&plant.a11(), &plant.a12(), &spec.dominant_poles)?;

    let mut k_i = DMatrix::<f64>::zeros(m, plant.n());
    k_i.view_mut((0, 0), (m, plant.n() - m)).copy_from(&k);
    k_i.view_mut((0, plant.n() - m), (m, m)).fill_with_identity();
    let f = b2_inv * v_inv * spec.sigma_matrix() * &spec.v * k_i;
    Ok(FeedbackGain {
        f,
        k_reduced: Some(k),
        provenance: GainProvenance::PoleAssignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn reference_plant() -> Plant {
        Plant::new(
            DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn plant_blocks() {
        let p = reference_plant();
        assert_eq!(p.a11()[(0, 0)], 0.0);
        assert_eq!(p.a12()[(0, 0)], -0.5);
        assert_eq!(p.b2()[(0, 0)], 1.0);
        assert!(p.is_stabilizable());
    }

    #[test]
    fn plant_rejects_bad_structure() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let err = Plant::new(a.clone(), DMatrix::from_row_slice(2, 1, &[1.0, 1.0])).unwrap_err();
        assert!(err.is_input_error());
        let err = Plant::new(a.clone(), DMatrix::from_row_slice(2, 1, &[0.0, 0.0])).unwrap_err();
        assert!(err.to_string().contains("singular"), "{err}");
        // unstable mode at +1 on the first state cannot be reached
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let err = Plant::new(a, DMatrix::from_row_slice(2, 1, &[0.0, 1.0])).unwrap_err();
        assert!(err.to_string().contains("stabilizable"), "{err}");
    }

    #[test]
    fn gain_spec_validation() {
        assert!(GainSpec::new(vec![Complex64::new(0.0, 0.0)], vec![1.0]).is_err());
        assert!(GainSpec::new(vec![Complex64::new(-1.0, 1.0)], vec![1.0]).is_err());
        assert!(GainSpec::new(vec![Complex64::new(-1.0, 0.0)], vec![0.0]).is_err());
        assert!(GainSpec::new(
            vec![Complex64::new(-1.0, 1.0), Complex64::new(-1.0, -1.0)],
            vec![1.0]
        )
        .is_ok());
    }

    #[test]
    fn reproduces_reference_gains() {
        let plant = reference_plant();
        let spec = GainSpec::new(vec![Complex64::new(-0.19665, 0.0)], vec![0.9306]).unwrap();
        let gain = assign_gain(&plant, &spec).unwrap();
        assert!((gain.k_reduced.as_ref().unwrap()[(0, 0)] + 0.3933).abs() < 1e-12);
        assert!((gain.f[(0, 0)] + 0.3660).abs() < 1e-3);
        assert!((gain.f[(0, 1)] - 0.9306).abs() < 1e-12);

        let spec = GainSpec::new(vec![Complex64::new(-0.1, 0.0)], vec![1.0]).unwrap();
        let gain = assign_gain(&plant, &spec).unwrap();
        assert!((gain.f[(0, 0)] + 0.2).abs() < 1e-12);
        assert!((gain.f[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_reduction_without_slow_block() {
        // n = m: F = B2⁻¹ Σ
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 1.0]);
        let plant = Plant::new(DMatrix::zeros(2, 2), b.clone()).unwrap();
        let spec = GainSpec::new(vec![], vec![1.0, 1.0]).unwrap();
        let gain = assign_gain(&plant, &spec).unwrap();
        let expected = b.try_inverse().unwrap();
        assert!(linalg::max_abs(&(gain.f - expected)) < 1e-15);
    }

    #[test]
    fn singular_mixing_matrix() {
        let plant = Plant::new(
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        let spec = GainSpec::with_mixing(
            vec![Complex64::new(-1.0, 0.0)],
            vec![1.0, 2.0],
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
        )
        .unwrap();
        assert!(matches!(assign_gain(&plant, &spec), Err(Error::Precondition(_))));
    }

    #[test]
    fn assign_gain_block_identity() {
        let plant = Plant::new(
            DMatrix::from_row_slice(
                4,
                4,
                &[0.0, 1.0, 0.3, 0.0, -1.0, 0.2, 0.0, 1.0, 0.5, 0.0, 0.1, 0.0, 0.0, 0.4, 0.0, -0.3],
            ),
            DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, 1.5, 0.2, -0.3, 0.8]),
        )
        .unwrap();
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.2, 2.0]);
        let spec = GainSpec::with_mixing(
            vec![Complex64::new(-0.5, 0.3), Complex64::new(-0.5, -0.3)],
            vec![1.0, 3.0],
            v.clone(),
        )
        .unwrap();
        let gain = assign_gain(&plant, &spec).unwrap();
        let lhs = &v * plant.b2() * &gain.f;
        let sv = spec.sigma_matrix() * &v;
        let svk = &sv * gain.k_reduced.as_ref().unwrap();
        assert!(linalg::max_abs(&(lhs.columns(2, 2) - &sv)) < 1e-12);
        assert!(linalg::max_abs(&(lhs.columns(0, 2) - svk)) < 1e-12);
    }
}
