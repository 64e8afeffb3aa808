//! Stacked closed loop `ξ̇ = (I_N ⊗ A − M ⊗ BF) ξ`, its spectrum and modal
//! comparison, and fixed-step simulation of the full leader / observer /
//! agent system.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::coupling::{self, CouplingMatrix, CouplingNetwork};
use crate::error::{Error, Result};
use crate::linalg;
use crate::network::{self, ObserverGraph};
use crate::synthesis::{FeedbackGain, Plant};

/// State norm beyond which a simulation is declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e9;

fn check_gain(plant: &Plant, gain: &FeedbackGain) -> Result<()> {
    if gain.f.shape() != (plant.m(), plant.n()) {
        return Err(Error::dimension(
            "F",
            format!("{}x{}", plant.m(), plant.n()),
            format!("{}x{}", gain.f.nrows(), gain.f.ncols()),
        ));
    }
    Ok(())
}

/// `I_N ⊗ A − M ⊗ BF`, assembled block by block.
pub fn closed_loop_matrix(plant: &Plant, cm: &CouplingMatrix, gain: &FeedbackGain) -> Result<DMatrix<f64>> {
    check_gain(plant, gain)?;
    let n = plant.n();
    let agents = cm.n_agents();
    let bf = plant.b() * &gain.f;
    let mut out = DMatrix::<f64>::zeros(n * agents, n * agents);
    for i in 0..agents {
        for j in 0..agents {
            let mut block = &bf * -cm.m[(i, j)];
            if i == j {
                block += plant.a();
            }
            out.view_mut((i * n, j * n), (n, n)).copy_from(&block);
        }
    }
    Ok(out)
}

/// Eigenvalues of [`closed_loop_matrix`], sorted by real then imaginary part.
pub fn block_spectrum(plant: &Plant, cm: &CouplingMatrix, gain: &FeedbackGain) -> Result<Vec<Complex64>> {
    linalg::eigenvalues(&closed_loop_matrix(plant, cm, gain)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    /// Eigenvalue `p_i` of the coupling matrix.
    pub p: f64,
    /// `eig(A − p_i BF)`.
    pub spectrum: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledComparison {
    pub modes: Vec<ModeSpectrum>,
    pub block_spectrum: Vec<Complex64>,
    /// Multiset distance between the union of mode spectra and the block spectrum.
    pub distance: f64,
    /// `1e−6 (1 + max|λ|)`.
    pub tolerance: f64,
}

impl DecoupledComparison {
    pub fn agrees(&self) -> bool {
        self.distance <= self.tolerance
    }
}

/// Compares the coupled spectrum with the per-mode spectra obtained after
/// diagonalizing `M`.
pub fn decoupled_compare(plant: &Plant, cm: &CouplingMatrix, gain: &FeedbackGain) -> Result<DecoupledComparison> {
    let diag = coupling::diagonalize(cm)?;
    let block = block_spectrum(plant, cm, gain)?;
    let modes = diag
        .p
        .iter()
        .map(|&p| {
            Ok(ModeSpectrum {
                p,
                spectrum: linalg::eigenvalues(&plant.closed_loop(&gain.f, p))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let union: Vec<Complex64> = modes.iter().flat_map(|m| m.spectrum.iter().copied()).collect();
    let distance = linalg::multiset_distance(&union, &block);
    let max_mag = block.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    Ok(DecoupledComparison {
        modes,
        block_spectrum: block,
        distance,
        tolerance: 1e-6 * (1.0 + max_mag),
    })
}

/// Everything needed to integrate the leader / observer / agent stack.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub plant: Plant,
    pub coupling: CouplingNetwork,
    pub observers: ObserverGraph,
    pub gain: FeedbackGain,
    pub leader_init: DVector<f64>,
    pub agent_inits: Vec<DVector<f64>>,
    pub observer_inits: Vec<DVector<f64>>,
    pub t_final: f64,
    pub step: f64,
}

impl Scenario {
    pub fn n_agents(&self) -> usize {
        self.coupling.n_agents()
    }

    /// Number of integration steps, `⌊t_final / step⌋`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.step * (1.0 + 1e-12)).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.plant.n();
        let agents = self.n_agents();
        self.coupling.validate()?;
        self.observers.validate()?;
        check_gain(&self.plant, &self.gain)?;
        if self.observers.n_agents() != agents {
            return Err(Error::dimension("observer graph agents", agents, self.observers.n_agents()));
        }
        if self.leader_init.len() != n {
            return Err(Error::dimension("leader initial state", n, self.leader_init.len()));
        }
        for (what, inits) in [("agent", &self.agent_inits), ("observer", &self.observer_inits)] {
            if inits.len() != agents {
                return Err(Error::dimension(format!("{what} initial states"), agents, inits.len()));
            }
            if let Some((i, x)) = inits.iter().enumerate().find(|(_, x)| x.len() != n) {
                return Err(Error::dimension(format!("{what} {i} initial state"), n, x.len()));
            }
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::validation("step", format!("must be positive, got {}", self.step)));
        }
        if !(self.t_final >= self.step) || !self.t_final.is_finite() {
            return Err(Error::validation(
                "t_final",
                format!("must be at least one step, got {}", self.t_final),
            ));
        }
        Ok(())
    }
}

/// Sampled trajectories, one row per sample. Agent-indexed quantities stack
/// agent `i` in columns `i·n .. (i+1)·n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub n_states: usize,
    pub n_agents: usize,
    /// `x_0`
    pub leader: DMatrix<f64>,
    /// `x_i`
    pub agents: DMatrix<f64>,
    /// `x̂_0i`
    pub observers: DMatrix<f64>,
    /// `η_i = x_i − x̂_0i`
    pub eta: DMatrix<f64>,
    /// `ξ_i = x_i − x_0`
    pub xi: DMatrix<f64>,
    /// `e_i = x̂_0i − x_0`
    pub e: DMatrix<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn from_states(times: Vec<f64>, n: usize, agents: usize, states: &[DVector<f64>]) -> Self {
        let rows = states.len();
        let width = n * agents;
        let leader = DMatrix::from_fn(rows, n, |r, c| states[r][c]);
        let observers = DMatrix::from_fn(rows, width, |r, c| states[r][n + c]);
        let agent_states = DMatrix::from_fn(rows, width, |r, c| states[r][n + width + c]);
        let leader_tiled = DMatrix::from_fn(rows, width, |r, c| leader[(r, c % n)]);
        let eta = &agent_states - &observers;
        let xi = &agent_states - &leader_tiled;
        let e = &observers - &leader_tiled;
        Self {
            times,
            n_states: n,
            n_agents: agents,
            leader,
            agents: agent_states,
            observers,
            eta,
            xi,
            e,
        }
    }

    /// `ξ_i(t_k)` for one agent and sample.
    pub fn xi_at(&self, sample: usize, agent: usize) -> DVector<f64> {
        self.xi
            .row(sample)
            .columns(agent * self.n_states, self.n_states)
            .transpose()
    }
}

struct StackedSystem<'a> {
    scenario: &'a Scenario,
    cm: CouplingMatrix,
    bf: DMatrix<f64>,
}

impl StackedSystem<'_> {
    fn split(&self, z: &DVector<f64>) -> (DVector<f64>, Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let n = self.scenario.plant.n();
        let agents = self.scenario.n_agents();
        let leader = z.rows(0, n).into_owned();
        let observers = (0..agents).map(|i| z.rows(n + i * n, n).into_owned()).collect();
        let states = (0..agents)
            .map(|i| z.rows(n + (agents + i) * n, n).into_owned())
            .collect();
        (leader, observers, states)
    }

    fn rhs(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let sc = self.scenario;
        let n = sc.plant.n();
        let agents = sc.n_agents();
        let a = sc.plant.a();
        let (leader, observers, states) = self.split(z);
        let mut dz = DVector::<f64>::zeros(z.len());
        dz.rows_mut(0, n).copy_from(&(a * &leader));
        let obs_dot = network::observer_rhs(a, &sc.observers, &observers, &leader)?;
        for (i, v) in obs_dot.iter().enumerate() {
            dz.rows_mut(n + i * n, n).copy_from(v);
        }
        let eta: Vec<DVector<f64>> = states.iter().zip(&observers).map(|(x, o)| x - o).collect();
        for (i, x_i) in states.iter().enumerate() {
            // B u_i = BF (Σ_j a_ij η_j − d_i η_i) = −BF Σ_j m_ij η_j
            let mut mixed = DVector::<f64>::zeros(n);
            for (j, eta_j) in eta.iter().enumerate() {
                let w = self.cm.m[(i, j)];
                if w != 0.0 {
                    mixed -= eta_j * w;
                }
            }
            let xdot = a * x_i + &self.bf * mixed;
            dz.rows_mut(n + (agents + i) * n, n).copy_from(&xdot);
        }
        Ok(dz)
    }
}

/// Integrates the leader, the observers and the coupled agents with the
/// classical fixed-step fourth-order Runge–Kutta scheme, recording every step.
pub fn simulate(scenario: &Scenario) -> Result<TrajectoryRecord> {
    scenario.validate()?;
    let n = scenario.plant.n();
    let agents = scenario.n_agents();
    let system = StackedSystem {
        scenario,
        cm: coupling::build_coupling(&scenario.coupling)?,
        bf: scenario.plant.b() * &scenario.gain.f,
    };

    let mut z = DVector::<f64>::zeros(n * (1 + 2 * agents));
    z.rows_mut(0, n).copy_from(&scenario.leader_init);
    for i in 0..agents {
        z.rows_mut(n + i * n, n).copy_from(&scenario.observer_inits[i]);
        z.rows_mut(n + (agents + i) * n, n).copy_from(&scenario.agent_inits[i]);
    }

    let h = scenario.step;
    let steps = scenario.n_steps();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(z.clone());
    for k in 1..=steps {
        let k1 = system.rhs(&z)?;
        let k2 = system.rhs(&(&z + &k1 * (h / 2.0)))?;
        let k3 = system.rhs(&(&z + &k2 * (h / 2.0)))?;
        let k4 = system.rhs(&(&z + &k3 * h))?;
        z += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        let t = k as f64 * h;
        if z.iter().any(|v| !v.is_finite()) || z.norm() > DIVERGENCE_BOUND {
            let partial = TrajectoryRecord::from_states(times, n, agents, &states);
            return Err(Error::Divergence {
                time: t,
                partial: Box::new(partial),
            });
        }
        times.push(t);
        states.push(z.clone());
    }
    Ok(TrajectoryRecord::from_states(times, n, agents, &states))
}

/// Per-sample regulation metrics on the first state component.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// `θ = [x_11, …, x_N1]`, one row per sample.
    pub theta: DMatrix<f64>,
    /// `φ = max_i |ξ_i1|`
    pub phi: Vec<f64>,
    /// `ψ = max_i ξ_i1 − min_i ξ_i1`
    pub psi: Vec<f64>,
}

pub fn metrics(record: &TrajectoryRecord) -> Metrics {
    let n = record.n_states;
    let agents = record.n_agents;
    let rows = record.len();
    let theta = DMatrix::from_fn(rows, agents, |r, i| record.agents[(r, i * n)]);
    let mut phi = Vec::with_capacity(rows);
    let mut psi = Vec::with_capacity(rows);
    for r in 0..rows {
        let first = (0..agents).map(|i| record.xi[(r, i * n)]);
        let (lo, hi, mag) = first.fold((f64::INFINITY, f64::NEG_INFINITY, 0.0_f64), |(lo, hi, mag), v| {
            (lo.min(v), hi.max(v), mag.max(v.abs()))
        });
        phi.push(mag);
        psi.push(if agents == 0 { 0.0 } else { hi - lo });
    }
    Metrics { theta, phi, psi }
}

/// First sample time from which the series stays at or below `threshold`.
pub fn crossing_time(times: &[f64], values: &[f64], threshold: f64) -> Option<f64> {
    debug_assert_eq!(times.len(), values.len());
    let last_above = values.iter().rposition(|&v| !(v <= threshold));
    match last_above {
        None => times.first().copied(),
        Some(k) => times.get(k + 1).copied(),
    }
}
