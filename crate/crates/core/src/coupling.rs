//! Physical-layer coupling: the matrix `M = D − A` built from the self-gains
//! `d_i` and the inter-agent weights `a_ij`, together with the disc-based
//! sufficient conditions for `M + Mᵀ > 0` and for diagonalizability.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Absolute tolerance of the row-sum test in [`is_laplacian`].
pub const LAPLACIAN_TOL: f64 = 1e-12;

/// Fraction of `λ_min(M + Mᵀ)/2` used for the scalar `k` of [`compute_kz`].
pub const KZ_MARGIN: f64 = 0.99;

/// Largest accepted condition number of the eigenvector matrix in [`diagonalize`].
pub const MAX_EIGENVECTOR_CONDITION: f64 = 1e12;

/// Weights `a_ij` and self-gains `d_i` of the physical coupling layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingNetwork {
    pub adjacency: DMatrix<f64>,
    pub self_gains: DVector<f64>,
}

impl CouplingNetwork {
    pub fn new(adjacency: DMatrix<f64>, self_gains: DVector<f64>) -> Result<Self> {
        let net = Self {
            adjacency,
            self_gains,
        };
        net.validate()?;
        Ok(net)
    }

    /// Network with no inter-agent coupling.
    pub fn uncoupled(self_gains: DVector<f64>) -> Result<Self> {
        let n = self_gains.len();
        Self::new(DMatrix::zeros(n, n), self_gains)
    }

    pub fn n_agents(&self) -> usize {
        self.self_gains.len()
    }

    /// Scales the self-gains by `rho` and the weights by `epsilon`.
    pub fn scaled(&self, rho: f64, epsilon: f64) -> Result<Self> {
        Self::new(&self.adjacency * epsilon, &self.self_gains * rho)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.self_gains.len();
        if n == 0 {
            return Err(Error::validation("self_gains", "at least one agent is required"));
        }
        if self.adjacency.shape() != (n, n) {
            return Err(Error::dimension(
                "adjacency",
                format!("{n}x{n}"),
                format!("{}x{}", self.adjacency.nrows(), self.adjacency.ncols()),
            ));
        }
        for (i, &d) in self.self_gains.iter().enumerate() {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::validation(
                    format!("self_gains[{i}]"),
                    format!("must be positive and finite, got {d}"),
                ));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let a = self.adjacency[(i, j)];
                if i == j && a != 0.0 {
                    return Err(Error::validation(
                        format!("adjacency[{i}][{j}]"),
                        format!("diagonal weight must be zero, got {a}"),
                    ));
                }
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(Error::validation(
                        format!("adjacency[{i}][{j}]"),
                        format!("must be nonnegative and finite, got {a}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `M = D − A` with the disc radii used by the stability and
/// diagonalizability conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub m: DMatrix<f64>,
    /// `r_i = Σ_j a_ij`
    pub row_radii: DVector<f64>,
    /// `Σ_j (a_ij + a_ji)`
    pub symmetric_radii: DVector<f64>,
}

impl CouplingMatrix {
    pub fn n_agents(&self) -> usize {
        self.m.nrows()
    }

    pub fn self_gains(&self) -> DVector<f64> {
        self.m.diagonal()
    }

    /// Largest absolute entry of `M`.
    pub fn scale(&self) -> f64 {
        linalg::max_abs(&self.m)
    }

    /// `M + Mᵀ`.
    pub fn symmetric_part(&self) -> DMatrix<f64> {
        &self.m + self.m.transpose()
    }

    /// `λ_min(M + Mᵀ)`.
    pub fn symmetric_min_eigenvalue(&self) -> f64 {
        linalg::symmetric_min_eigenvalue(&self.symmetric_part())
    }
}

pub fn build_coupling(net: &CouplingNetwork) -> Result<CouplingMatrix> {
    net.validate()?;
    let n = net.n_agents();
    let a = &net.adjacency;
    let m = DMatrix::from_diagonal(&net.self_gains) - a;
    let row_radii = DVector::from_iterator(n, a.row_iter().map(|r| r.sum()));
    let col_sums = DVector::from_iterator(n, a.column_iter().map(|c| c.sum()));
    let symmetric_radii = &row_radii + col_sums;
    Ok(CouplingMatrix {
        m,
        row_radii,
        symmetric_radii,
    })
}

/// True when every self-gain equals the row sum of the weights, i.e. `M` is a
/// graph Laplacian.
pub fn is_laplacian(cm: &CouplingMatrix) -> bool {
    cm.self_gains()
        .iter()
        .zip(cm.row_radii.iter())
        .all(|(d, r)| (d - r).abs() <= LAPLACIAN_TOL)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMargins {
    /// `d_i − Σ_j (a_ij + a_ji)/2`
    pub margins: DVector<f64>,
    /// All margins strictly positive. Sufficient for `M + Mᵀ > 0`.
    pub stable: bool,
}

pub fn stability_margins(cm: &CouplingMatrix) -> StabilityMargins {
    let margins = cm.self_gains() - &cm.symmetric_radii * 0.5;
    let stable = margins.iter().all(|&v| v > 0.0);
    StabilityMargins { margins, stable }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizabilityCheck {
    /// Agents (0-based) in ascending order of self-gain, ties by index.
    pub ordering: Vec<usize>,
    /// The separated-disc condition holds. `false` only means the sufficient
    /// condition is not met; `M` may still be diagonalizable.
    pub sufficient: bool,
}

/// Checks that the discs `D(d_i, r_i)` are pairwise disjoint when laid out in
/// ascending order of `d_i`, with the first disc in the open right half plane.
pub fn diagonalizability_check(cm: &CouplingMatrix) -> DiagonalizabilityCheck {
    let d = cm.self_gains();
    let r = &cm.row_radii;
    let mut ordering: Vec<usize> = (0..d.len()).collect();
    ordering.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));

    let sufficient = match ordering.first() {
        None => false,
        Some(&first) => {
            d[first] > r[first]
                && ordering
                    .windows(2)
                    .all(|w| d[w[1]] - d[w[0]] > r[w[1]] + r[w[0]])
        }
    };
    DiagonalizabilityCheck {
        ordering,
        sufficient,
    }
}

/// `M = k (Z + I)` with `Z + Zᵀ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct KzDecomposition {
    pub k: f64,
    pub z: DMatrix<f64>,
}

pub fn compute_kz(cm: &CouplingMatrix) -> Result<KzDecomposition> {
    let lambda_min = cm.symmetric_min_eigenvalue();
    if !(lambda_min > 0.0) {
        return Err(Error::Precondition(format!(
            "M + Mᵀ is not positive definite (λ_min = {lambda_min:.6e})"
        )));
    }
    let k = KZ_MARGIN * lambda_min / 2.0;
    let n = cm.n_agents();
    let z = (&cm.m - DMatrix::<f64>::identity(n, n) * k) / k;
    Ok(KzDecomposition { k, z })
}

/// `T M T⁻¹ = diag(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonalization {
    pub t: DMatrix<f64>,
    /// `T⁻¹`: unit-norm eigenvectors of `M` as columns.
    pub t_inv: DMatrix<f64>,
    /// Ascending eigenvalues of `M`.
    pub p: DVector<f64>,
}

impl Diagonalization {
    /// `‖T M T⁻¹ − diag(p)‖_max`.
    pub fn residual(&self, m: &DMatrix<f64>) -> f64 {
        linalg::max_abs(&(&self.t * m * &self.t_inv - DMatrix::from_diagonal(&self.p)))
    }
}

/// Modal decomposition of `M` over the reals.
///
/// Eigenvalues closer than a relative `1e−9` are treated as one cluster and
/// receive a basis of the corresponding null space; the result is accepted
/// only if the eigenvector matrix is well conditioned and reproduces `M`.
pub fn diagonalize(cm: &CouplingMatrix) -> Result<Diagonalization> {
    let m = &cm.m;
    let n = cm.n_agents();
    let scale = cm.scale().max(f64::MIN_POSITIVE);
    let spectrum = linalg::eigenvalues(m)?;

    let imag_tol = 1e-10 * scale;
    if let Some(z) = spectrum.iter().find(|z| z.im.abs() > imag_tol) {
        return Err(Error::Degenerate(format!(
            "coupling matrix has a complex eigenvalue {z}"
        )));
    }
    let mut p: Vec<f64> = spectrum.iter().map(|z: &Complex64| z.re).collect();
    p.sort_by(f64::total_cmp);

    let cluster_tol = 1e-9 * scale;
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    let mut col = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && p[end] - p[end - 1] <= cluster_tol {
            end += 1;
        }
        let size = end - start;
        let centre = p[start..end].iter().sum::<f64>() / size as f64;
        let shifted = m - DMatrix::<f64>::identity(n, n) * centre;
        let (basis, _) = linalg::null_space(&shifted, size);
        for c in 0..size {
            let mut v = basis.column(c).into_owned();
            let norm = v.norm();
            if norm > 0.0 {
                v /= norm;
            }
            // deterministic sign: largest-magnitude component positive
            let pivot = v.iamax();
            if v[pivot] < 0.0 {
                v = -v;
            }
            vectors.set_column(col, &v);
            col += 1;
        }
        start = end;
    }

    let cond = linalg::condition_number(&vectors);
    if !(cond <= MAX_EIGENVECTOR_CONDITION) {
        return Err(Error::Degenerate(format!(
            "eigenvector matrix condition number {cond:.3e} exceeds {MAX_EIGENVECTOR_CONDITION:e}"
        )));
    }
    let t = vectors
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("eigenvector matrix is singular".into()))?;
    let diag = Diagonalization {
        t,
        t_inv: vectors,
        p: DVector::from_vec(p),
    };
    let residual = diag.residual(m);
    if residual > 1e-10 * scale {
        return Err(Error::Degenerate(format!(
            "modal reconstruction residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(diag)
}
