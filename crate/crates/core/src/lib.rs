//! Coupling analysis, gain synthesis and simulation for leader-following
//! regulation of homogeneous linear multi-agent systems with deliberate
//! physical-layer coupling.
//!
//! Each follower `ẋ_i = A x_i + B u_i` tracks its own estimate `x̂_0i` of the
//! leader `ẋ_0 = A x_0`, and the regulator
//! `u_i = F (Σ_j a_ij η_j − d_i η_i)` with `η_i = x_i − x̂_0i` couples the
//! followers' regulation errors. The modules cover:
//!
//! - [`coupling`]: the matrix `M = D − A`, its stability margins, the
//!   disc-separation diagonalizability test and the modal transform;
//! - [`synthesis`]: Riccati-based gains with a positive-real certificate and
//!   pole-assigning gains with predicted spectra;
//! - [`network`]: the observer graph and its consensus correction;
//! - [`sim`]: the stacked closed loop, its spectrum, and time-domain
//!   simulation with regulation metrics.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod error;
pub mod linalg;
pub mod network;
pub mod sim;
pub mod synthesis;

pub use coupling::{
    build_coupling, compute_kz, diagonalizability_check, diagonalize, is_laplacian,
    stability_margins, CouplingMatrix, CouplingNetwork, Diagonalization, DiagonalizabilityCheck,
    KzDecomposition, StabilityMargins,
};
pub use error::{Error, Result};
pub use network::{gamma, leader_reachable, observer_rhs, ObserverGraph};
pub use sim::{
    block_spectrum, closed_loop_matrix, crossing_time, decoupled_compare, metrics, simulate,
    DecoupledComparison, Metrics, Scenario, TrajectoryRecord,
};
pub use synthesis::{
    assign_gain, check_positive_real, det_certificate, place_reduced, positive_real_gain,
    predict_spectrum, solve_care, verify_convergence, ConvergenceReport, DetCertificate,
    FeedbackGain, GainProvenance, GainSpec, Plant, PositiveRealCertificate, RiccatiSolution,
};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
