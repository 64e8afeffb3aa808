//! Cyber layer: each agent runs an observer `x̂_0i` of the leader state,
//! corrected through the observer graph and, for pinned agents, directly
//! from the leader.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default observer coupling strength.
pub const DEFAULT_MU: f64 = 10.0;

/// Observer graph. `alpha[(i, j)] > 0` means agent `i` uses agent `j`'s
/// estimate; `pinning[i] > 0` means agent `i` sees the leader.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGraph {
    pub alpha: DMatrix<f64>,
    pub pinning: DVector<f64>,
    pub mu: f64,
}

impl ObserverGraph {
    pub fn new(alpha: DMatrix<f64>, pinning: DVector<f64>, mu: f64) -> Result<Self> {
        let graph = Self { alpha, pinning, mu };
        graph.validate()?;
        Ok(graph)
    }

    pub fn n_agents(&self) -> usize {
        self.pinning.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.pinning.len();
        if n == 0 {
            return Err(Error::validation("pinning", "at least one agent is required"));
        }
        if self.alpha.shape() != (n, n) {
            return Err(Error::dimension(
                "alpha",
                format!("{n}x{n}"),
                format!("{}x{}", self.alpha.nrows(), self.alpha.ncols()),
            ));
        }
        for ((i, j), &w) in self.alpha.iter().enumerate().map(|(k, w)| ((k % n, k / n), w)) {
            if !(w >= 0.0) || !w.is_finite() || (i == j && w != 0.0) {
                return Err(Error::validation(
                    format!("alpha[{i}][{j}]"),
                    format!("must be nonnegative with a zero diagonal, got {w}"),
                ));
            }
        }
        for (i, &g) in self.pinning.iter().enumerate() {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(Error::validation(
                    format!("pinning[{i}]"),
                    format!("must be nonnegative, got {g}"),
                ));
            }
        }
        if self.pinning.iter().all(|&g| g == 0.0) {
            return Err(Error::validation("pinning", "at least one agent must be pinned to the leader"));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::validation("mu", format!("must be positive, got {}", self.mu)));
        }
        Ok(())
    }
}

/// Every agent can be reached from the leader, entering through the pinned
/// agents and following `j → i` whenever `alpha[(i, j)] > 0`.
pub fn leader_reachable(graph: &ObserverGraph) -> bool {
    let n = graph.n_agents();
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| graph.pinning[i] > 0.0).collect();
    for &i in &queue {
        seen[i] = true;
    }
    while let Some(j) = queue.pop_front() {
        for (i, seen_i) in seen.iter_mut().enumerate() {
            if !*seen_i && graph.alpha[(i, j)] > 0.0 {
                *seen_i = true;
                queue.push_back(i);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn check_states(graph: &ObserverGraph, observers: &[DVector<f64>], leader: &DVector<f64>) -> Result<()> {
    if observers.len() != graph.n_agents() {
        return Err(Error::dimension("observer states", graph.n_agents(), observers.len()));
    }
    if let Some((i, x)) = observers.iter().enumerate().find(|(_, x)| x.len() != leader.len()) {
        return Err(Error::dimension(format!("observer state {i}"), leader.len(), x.len()));
    }
    Ok(())
}

/// Consensus correction
/// `γ_i = μ (Σ_j α_ij (x̂_0j − x̂_0i) + g_i (x_0 − x̂_0i))`.
pub fn gamma(graph: &ObserverGraph, observers: &[DVector<f64>], leader: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    check_states(graph, observers, leader)?;
    let n = graph.n_agents();
    Ok((0..n)
        .map(|i| {
            let xi = &observers[i];
            let mut acc = (leader - xi) * graph.pinning[i];
            for (j, xj) in observers.iter().enumerate() {
                let w = graph.alpha[(i, j)];
                if w != 0.0 {
                    acc += (xj - xi) * w;
                }
            }
            acc * graph.mu
        })
        .collect())
}

/// `d/dt x̂_0i = A x̂_0i + γ_i`.
pub fn observer_rhs(
    a: &DMatrix<f64>,
    graph: &ObserverGraph,
    observers: &[DVector<f64>],
    leader: &DVector<f64>,
) -> Result<Vec<DVector<f64>>> {
    if a.shape() != (leader.len(), leader.len()) {
        return Err(Error::dimension(
            "A",
            format!("{0}x{0}", leader.len()),
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    let corrections = gamma(graph, observers, leader)?;
    Ok(observers
        .iter()
        .zip(corrections)
        .map(|(x, g)| a * x + g)
        .collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn ring(n: usize, pinned: &[usize]) -> ObserverGraph {
        let mut alpha = DMatrix::zeros(n, n);
        for i in 0..n {
            alpha[(i, (i + 1) % n)] = 1.0;
        }
        let mut g = DVector::zeros(n);
        for &i in pinned {
            g[i] = 1.0;
        }
        ObserverGraph::new(alpha, g, 1.0).unwrap()
    }

    #[test]
    fn ring_is_reachable_from_one_pin() {
        assert!(leader_reachable(&ring(5, &[0])));
    }

    #[test]
    fn isolated_agent_is_unreachable() {
        let g = ObserverGraph::new(DMatrix::zeros(2, 2), DVector::from_vec(vec![1.0, 0.0]), 1.0).unwrap();
        assert!(!leader_reachable(&g));
    }

    #[test]
    fn all_pinned_is_reachable() {
        let g = ObserverGraph::new(DMatrix::zeros(3, 3), DVector::from_element(3, 1.0), 1.0).unwrap();
        assert!(leader_reachable(&g));
    }

    #[test]
    fn edge_direction_matters() {
        // 0 listens to 1, and only 1 is pinned: reachable. Flip the edge and 0 is cut off.
        let mut alpha = DMatrix::zeros(2, 2);
        alpha[(0, 1)] = 1.0;
        let pins = DVector::from_vec(vec![0.0, 1.0]);
        assert!(leader_reachable(&ObserverGraph::new(alpha.clone(), pins.clone(), 1.0).unwrap()));
        assert!(!leader_reachable(&ObserverGraph::new(alpha.transpose(), pins, 1.0).unwrap()));
    }

    #[test]
    fn validation() {
        assert!(ObserverGraph::new(DMatrix::zeros(2, 2), DVector::zeros(2), 1.0).is_err());
        assert!(ObserverGraph::new(DMatrix::zeros(2, 2), DVector::from_element(2, 1.0), 0.0).is_err());
        let mut alpha = DMatrix::zeros(2, 2);
        alpha[(1, 1)] = 1.0;
        assert!(ObserverGraph::new(alpha, DVector::from_element(2, 1.0), 1.0).is_err());
    }

    #[test]
    fn zero_at_consensus() {
        let g = ring(3, &[0]);
        let x0 = DVector::from_vec(vec![0.3, -1.0]);
        let obs = vec![x0.clone(); 3];
        for gi in gamma(&g, &obs, &x0).unwrap() {
            assert_eq!(gi, DVector::zeros(2));
        }
    }

    #[test]
    fn two_agent_substitution() {
        let mut alpha = DMatrix::zeros(2, 2);
        alpha[(0, 1)] = 1.0;
        let g = ObserverGraph::new(alpha, DVector::from_vec(vec![1.0, 0.0]), 1.0).unwrap();
        let x0 = DVector::from_vec(vec![1.0]);
        let (e1, e2) = (0.7, -0.4);
        let obs = vec![DVector::from_vec(vec![1.0 + e1]), DVector::from_vec(vec![1.0 + e2])];
        let out = gamma(&g, &obs, &x0).unwrap();
        assert!((out[0][0] - (e2 - 2.0 * e1)).abs() < 1e-15);
        assert_eq!(out[1][0], 0.0);
    }

    #[test]
    fn observer_derivative() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.0, 0.0]);
        let g = ring(2, &[0, 1]);
        let x = DVector::from_vec(vec![0.0, 1.0]);
        let out = observer_rhs(&a, &g, &[x.clone(), x.clone()], &x).unwrap();
        assert_eq!(out[0], DVector::from_vec(vec![-0.5, 0.0]));
    }

    #[test]
    fn dimension_mismatch() {
        let g = ring(2, &[0]);
        let x = DVector::zeros(2);
        assert!(gamma(&g, std::slice::from_ref(&x), &x).is_err());
        assert!(gamma(&g, &[x.clone(), DVector::zeros(3)], &x).is_err());
    }

    fn states(n: usize, dim: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
        (
            prop::collection::vec(prop::collection::vec(-10.0..10.0f64, dim), n),
            prop::collection::vec(-10.0..10.0f64, dim),
        )
    }

    proptest! {
        #[test]
        fn linear_in_error((obs, leader) in states(4, 2), c in -3.0..3.0f64) {
            let mut graph = ring(4, &[0, 2]);
            graph.alpha[(3, 1)] = 0.5;
            let x0 = DVector::from_vec(leader);
            let obs: Vec<DVector<f64>> = obs.into_iter().map(DVector::from_vec).collect();
            let scaled: Vec<DVector<f64>> = obs.iter().map(|x| &x0 + (x - &x0) * c).collect();
            let base = gamma(&graph, &obs, &x0).unwrap();
            let out = gamma(&graph, &scaled, &x0).unwrap();
            for (b, o) in base.iter().zip(out) {
                prop_assert!((b * c - o).amax() <= 1e-9);
            }
        }

        #[test]
        fn shift_invariant((obs, leader) in states(4, 2), shift in prop::collection::vec(-5.0..5.0f64, 2)) {
            let graph = ring(4, &[1]);
            let shift = DVector::from_vec(shift);
            let x0 = DVector::from_vec(leader);
            let obs: Vec<DVector<f64>> = obs.into_iter().map(DVector::from_vec).collect();
            let moved: Vec<DVector<f64>> = obs.iter().map(|x| x + &shift).collect();
            let base = gamma(&graph, &obs, &x0).unwrap();
            let out = gamma(&graph, &moved, &(&x0 + &shift)).unwrap();
            for (b, o) in base.iter().zip(out) {
                prop_assert!((b - o).amax() <= 1e-9);
            }
        }

        #[test]
        fn doubling_mu_doubles((obs, leader) in states(3, 2)) {
            let mut graph = ring(3, &[0]);
            let x0 = DVector::from_vec(leader);
            let obs: Vec<DVector<f64>> = obs.into_iter().map(DVector::from_vec).collect();
            let base = gamma(&graph, &obs, &x0).unwrap();
            graph.mu *= 2.0;
            for (b, o) in base.iter().zip(gamma(&graph, &obs, &x0).unwrap()) {
                prop_assert_eq!(b * 2.0, o);
            }
        }
    }
}
