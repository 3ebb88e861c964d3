use nalgebra::{DMatrix, DVector};

use super::PrimaryUser;
use crate::{Error, Result};

const DIRECT_SOLVE_MAX: usize = 1024;
const PI_TOL: f64 = 1e-12;
const PI_MAX_ITERS: usize = 1_000_000;
const PI_CHECK_TOL: f64 = 1e-10;

/// Product Markov chain over the joint PU channel state.
///
/// States are enumerated in mixed radix with the first PU most significant,
/// which is the row order of the Kronecker product `P_1 ⊗ P_2 ⊗ ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateModel {
    /// Number of channel states per PU.
    pub dims: Vec<usize>,
    /// Index of the occupied label per PU.
    pub occupied: Vec<usize>,
    pub labels: Vec<Vec<String>>,
    pub transition: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
}

impl StateModel {
    pub fn num_states(&self) -> usize {
        self.transition.len()
    }

    /// Per-PU channel state indices of joint state `s`.
    pub fn decode(&self, mut s: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = s % self.dims[k];
            s /= self.dims[k];
        }
        out
    }

    pub fn encode(&self, local: &[usize]) -> usize {
        local
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub fn is_occupied(&self, s: usize, pu: usize) -> bool {
        self.decode(s)[pu] == self.occupied[pu]
    }

    /// Human readable label, e.g. `occupied|unoccupied`.
    pub fn state_label(&self, s: usize) -> String {
        self.decode(s)
            .iter()
            .enumerate()
            .map(|(k, &x)| self.labels[k][x].as_str())
            .collect::<Vec<_>>()
            .join("|")
    }

    /// State in which every PU is idle.
    pub fn all_unoccupied(&self) -> usize {
        let local: Vec<usize> = self
            .labels
            .iter()
            .map(|l| l.iter().position(|x| x == super::UNOCCUPIED).unwrap_or(0))
            .collect();
        self.encode(&local)
    }

    /// `‖πP − π‖∞`.
    pub fn stationarity_residual(&self) -> f64 {
        let n = self.num_states();
        (0..n)
            .map(|j| {
                let pj: f64 = (0..n).map(|i| self.stationary[i] * self.transition[i][j]).sum();
                (pj - self.stationary[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn kronecker(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (na, nb) = (a.len(), b.len());
    let mut out = vec![vec![0.0; na * nb]; na * nb];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn reachable(adj: &[Vec<f64>], start: usize, forward: bool) -> Vec<bool> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            let w = if forward { adj[u][v] } else { adj[v][u] };
            if w > 0.0 && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn irreducible(p: &[Vec<f64>]) -> bool {
    reachable(p, 0, true).iter().all(|&b| b) && reachable(p, 0, false).iter().all(|&b| b)
}

/// Builds the joint chain of independent PU channels and its stationary law.
///
/// The stationary distribution solves `π(P − I) = 0, Σπ = 1` by LU
/// factorization up to 1024 states. Larger chains use power iteration on the
/// lazy chain `(I + P) / 2` (same fixed point, aperiodic) from the uniform
/// vector, to a max-norm step below 1e-12.
pub fn build_state_model(pus: &[PrimaryUser]) -> Result<StateModel> {
    if pus.is_empty() {
        return Err(Error::Validation("state model needs at least one PU".into()));
    }
    let mut transition = vec![vec![1.0]];
    for pu in pus {
        transition = kronecker(&transition, &pu.transition);
    }
    if !irreducible(&transition) {
        return Err(Error::ReducibleChain);
    }

    let n = transition.len();
    let (pi, converged) = if n <= DIRECT_SOLVE_MAX {
        match direct_stationary(&transition) {
            Some(pi) => (pi, true),
            None => power_stationary(&transition),
        }
    } else {
        power_stationary(&transition)
    };

    let model = StateModel {
        dims: pus.iter().map(|p| p.channel_states.len()).collect(),
        occupied: pus
            .iter()
            .map(|p| p.occupied_index().unwrap_or(p.channel_states.len() - 1))
            .collect(),
        labels: pus.iter().map(|p| p.channel_states.clone()).collect(),
        transition,
        stationary: pi,
    };
    if !converged || model.stationarity_residual() >= PI_CHECK_TOL {
        return Err(Error::NotConverged {
            what: "stationary distribution",
            iterations: PI_MAX_ITERS,
        });
    }
    Ok(model)
}

/// Replaces the last balance equation with the normalization constraint.
fn direct_stationary(p: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = p.len();
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == n - 1 {
            1.0
        } else {
            p[j][i] - if i == j { 1.0 } else { 0.0 }
        }
    });
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b)?;
    let mut pi: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    pi.iter_mut().for_each(|v| *v /= total);
    Some(pi)
}

fn power_stationary(p: &[Vec<f64>]) -> (Vec<f64>, bool) {
    let n = p.len();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..PI_MAX_ITERS {
        for j in 0..n {
            let pj: f64 = (0..n).map(|i| pi[i] * p[i][j]).sum();
            next[j] = 0.5 * (pi[j] + pj);
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let step = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if step < PI_TOL {
            return (pi, true);
        }
    }
    (pi, false)
}
