//! Built-in five-agent reference scenarios: a double-integrator-like plant
//! following a ramping leader, coupled through a directed ring.

use crate::scenario::{
    default_thresholds, CouplingSection, GainSection, InitialSection, ObserverSection, PlantSection, ScenarioFile,
};

/// Unscaled self-gains; the scenario multiplies them by `rho`.
pub const BASE_SELF_GAINS: [f64; 5] = [2.0, 1.95, 2.5, 2.9, 3.4];
/// Initial offsets of the agents' first state component from the leader.
pub const INITIAL_SPREAD: [f64; 5] = [3.0, 1.5, 0.0, -1.5, -3.0];
/// Gain placing the dominant pole at −0.19665 with fast rate 0.9306.
pub const GAIN_ASSIGNED: [f64; 2] = [-0.3660, 0.9306];
/// Gain placing the dominant pole at −0.1 with unit fast rate.
pub const GAIN_SIMPLE: [f64; 2] = [-0.2, 1.0];
/// Parameters `(rho, epsilon)` of the uncoupled case.
pub const UNCOUPLED: (f64, f64) = (0.12, 0.0);
/// Parameters `(rho, epsilon)` of the coupled case.
pub const COUPLED: (f64, f64) = (0.2, 0.2);
/// Long enough that the slowest oscillatory mode has made its last excursion
/// above the default threshold, so settling times are final.
pub const T_FINAL: f64 = 30.0;
/// Time at which the regulation-error ratio is reported.
pub const REPORT_TIME: f64 = 15.0;
pub const STEP: f64 = 1e-3;
pub const MU: f64 = 10.0;

const N_AGENTS: usize = 5;

/// Directed ring `1 → 2 → … → 5 → 1` (entry `(i, i+1)` set to `weight`).
pub fn ring(weight: f64) -> Vec<Vec<f64>> {
    (0..N_AGENTS)
        .map(|i| {
            (0..N_AGENTS)
                .map(|j| if j == (i + 1) % N_AGENTS { weight } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Reference scenario for the given coupling parameters and gain.
///
/// The leader starts at `[0, 1]`, so its first component ramps down at
/// rate 0.5; each agent starts at the leader offset by `INITIAL_SPREAD` in
/// the first component; observers start at the leader.
pub fn scenario(rho: f64, epsilon: f64, gain: [f64; 2]) -> ScenarioFile {
    let leader = vec![0.0, 1.0];
    let mut pinning = vec![0.0; N_AGENTS];
    pinning[0] = 1.0;
    ScenarioFile {
        plant: PlantSection {
            n: 2,
            m: 1,
            a: vec![vec![0.0, -0.5], vec![0.0, 0.0]],
            b: vec![vec![0.0], vec![1.0]],
        },
        coupling: CouplingSection {
            n_agents: N_AGENTS,
            adjacency: ring(1.0),
            self_gains: BASE_SELF_GAINS.to_vec(),
            rho: Some(rho),
            epsilon: Some(epsilon),
        },
        observers: ObserverSection {
            alpha: ring(1.0),
            pinning,
            mu: MU,
        },
        gain: GainSection::Explicit {
            f: vec![gain.to_vec()],
        },
        initial: InitialSection {
            agents: INITIAL_SPREAD.iter().map(|v| vec![leader[0] + v, leader[1]]).collect(),
            observers: vec![leader.clone(); N_AGENTS],
            leader,
        },
        t_final: T_FINAL,
        step: STEP,
        thresholds: default_thresholds(),
    }
}

/// Figures and the gain each one uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Trajectories under the assigned gain.
    Fig4,
    /// Metrics under the assigned gain.
    Fig5,
    /// Trajectories under the simple gain.
    Fig6,
    /// Metrics under the simple gain.
    Fig7,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig4, Figure::Fig5, Figure::Fig6, Figure::Fig7];

    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
        }
    }

    pub fn parse(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.id() == id)
    }

    pub fn gain(self) -> [f64; 2] {
        match self {
            Figure::Fig4 | Figure::Fig5 => GAIN_ASSIGNED,
            Figure::Fig6 | Figure::Fig7 => GAIN_SIMPLE,
        }
    }

    /// `(uncoupled, coupled)` scenarios.
    pub fn scenarios(self) -> (ScenarioFile, ScenarioFile) {
        (
            scenario(UNCOUPLED.0, UNCOUPLED.1, self.gain()),
            scenario(COUPLED.0, COUPLED.1, self.gain()),
        )
    }
}
