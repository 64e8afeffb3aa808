//! Fixtures shared by the benchmarks.

use coupled_consensus::{CouplingNetwork, DMatrix, DVector, FeedbackGain, ObserverGraph, Plant, Scenario};

pub fn reference_plant() -> Plant {
    Plant::new(
        DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.0, 0.0]),
        DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
    )
    .expect("reference plant is valid")
}

/// Directed ring of `n` agents with weights `epsilon` and self-gains
/// spread linearly over `[rho, 2 rho]`.
pub fn ring_network(n: usize, rho: f64, epsilon: f64) -> CouplingNetwork {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, (i + 1) % n)] = epsilon;
    }
    let d = DVector::from_fn(n, |i, _| rho * (1.0 + i as f64 / n as f64));
    CouplingNetwork::new(a, d).expect("ring network is valid")
}

/// Ring scenario under `gain`: observers on the same ring pinned at agent 1,
/// agents spread around a ramping leader.
pub fn ring_scenario(n: usize, gain: [f64; 2], t_final: f64, step: f64) -> Scenario {
    let mut alpha = DMatrix::zeros(n, n);
    for i in 0..n {
        alpha[(i, (i + 1) % n)] = 1.0;
    }
    let mut pinning = DVector::zeros(n);
    pinning[0] = 1.0;
    let leader = DVector::from_row_slice(&[0.0, 1.0]);
    Scenario {
        plant: reference_plant(),
        coupling: ring_network(n, 0.4, 0.2),
        observers: ObserverGraph::new(alpha, pinning, 10.0).expect("observer ring is valid"),
        gain: FeedbackGain::explicit(DMatrix::from_row_slice(1, 2, &gain)),
        agent_inits: (0..n)
            .map(|i| DVector::from_row_slice(&[3.0 - 6.0 * i as f64 / n as f64, 1.0]))
            .collect(),
        observer_inits: vec![leader.clone(); n],
        leader_init: leader,
        t_final,
        step,
    }
}
