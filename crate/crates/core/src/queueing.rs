//! M/G/1 delay and the congestion coupling between choosers at one level.
//!
//! A node's expected sojourn time follows the Pollaczek-Khinchin formula
//! `λ·E[X²] / (2(1−ρ)) + E[X]` with `ρ = λ·E[X]`. At the game layer a
//! saturated queue (`ρ ≥ 1`) costs a fixed cap instead of failing, so the
//! stage games stay finite while congested nodes become dominated.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, NodeId, Result};

/// Queue parameters of one node. In scenario documents `arrival_rate` is the
/// node's own external (Poisson) arrival rate in packets/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    pub arrival_rate: f64,
    /// E[X] in seconds.
    pub mean_service: f64,
    /// E[X²] in s².
    pub second_moment_service: f64,
}

impl QueueParams {
    pub fn new(arrival_rate: f64, mean_service: f64, second_moment_service: f64) -> Self {
        QueueParams {
            arrival_rate,
            mean_service,
            second_moment_service,
        }
    }

    /// Exponential service: E[X²] = 2·E[X]².
    pub fn exponential(arrival_rate: f64, mean_service: f64) -> Self {
        Self::new(arrival_rate, mean_service, 2.0 * mean_service * mean_service)
    }

    /// Deterministic service: E[X²] = E[X]².
    pub fn deterministic(arrival_rate: f64, mean_service: f64) -> Self {
        Self::new(arrival_rate, mean_service, mean_service * mean_service)
    }

    pub fn with_arrival(&self, arrival_rate: f64) -> Self {
        QueueParams {
            arrival_rate,
            ..self.clone()
        }
    }

    pub fn utilization(&self) -> f64 {
        self.arrival_rate * self.mean_service
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if !(self.arrival_rate >= 0.0 && self.arrival_rate.is_finite()) {
            return Err(Error::Validation(format!("{what}: arrival_rate must be >= 0")));
        }
        if !(self.mean_service > 0.0 && self.mean_service.is_finite()) {
            return Err(Error::Validation(format!("{what}: mean_service must be > 0")));
        }
        let floor = self.mean_service * self.mean_service;
        if !(self.second_moment_service >= floor * (1.0 - 1e-12)) {
            return Err(Error::Validation(format!(
                "{what}: second_moment_service must be >= mean_service^2"
            )));
        }
        Ok(())
    }
}

/// Pollaczek-Khinchin mean sojourn time.
pub fn pk_delay(q: &QueueParams) -> Result<f64> {
    let rho = q.utilization();
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    Ok(q.arrival_rate * q.second_moment_service / (2.0 * (1.0 - rho)) + q.mean_service)
}

/// [`pk_delay`] saturated at `cap` for unstable queues.
pub fn pk_delay_capped(q: &QueueParams, cap: f64) -> f64 {
    match pk_delay(q) {
        Ok(d) => d.min(cap),
        Err(_) => cap,
    }
}

/// One node choosing its next hop at a level.
#[derive(Clone, Copy, Debug)]
pub struct Chooser<'a> {
    pub node: NodeId,
    /// Rate the node forwards (packets/s).
    pub rate: f64,
    pub candidates: &'a [NodeId],
}

/// Total arrival rate at each candidate node of a level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelLoadProfile {
    pub rates: BTreeMap<NodeId, f64>,
}

impl LevelLoadProfile {
    pub fn rate(&self, node: NodeId) -> f64 {
        self.rates.get(&node).copied().unwrap_or(0.0)
    }
}

/// Superposes the choosers' forwarded rates onto their chosen nodes on top of
/// each candidate's external rate. `actions[i]` is the choice of
/// `choosers[i]`.
pub fn aggregate_loads(
    choosers: &[Chooser<'_>],
    actions: &[NodeId],
    external: impl Fn(NodeId) -> f64,
) -> Result<LevelLoadProfile> {
    if actions.len() != choosers.len() {
        return Err(Error::DimensionMismatch {
            expected: choosers.len(),
            got: actions.len(),
        });
    }
    let mut rates = BTreeMap::new();
    for c in choosers {
        for &cand in c.candidates {
            rates.entry(cand).or_insert_with(|| external(cand));
        }
    }
    for (c, &a) in choosers.iter().zip(actions) {
        if !c.candidates.contains(&a) {
            return Err(Error::InvalidAction {
                node: c.node,
                action: a,
            });
        }
        *rates.get_mut(&a).expect("candidate inserted above") += c.rate;
    }
    Ok(LevelLoadProfile { rates })
}

/// Delay seen by `choosers[who]` at its chosen node under the joint choice.
/// `queue(c)` gives node `c`'s service law with its external arrival rate.
pub fn stage_payoff<'q>(
    choosers: &[Chooser<'_>],
    actions: &[NodeId],
    who: usize,
    queue: impl Fn(NodeId) -> &'q QueueParams,
    delay_cap: f64,
) -> Result<f64> {
    let loads = aggregate_loads(choosers, actions, |c| queue(c).arrival_rate)?;
    let chosen = actions[who];
    let q = queue(chosen).with_arrival(loads.rate(chosen));
    Ok(pk_delay_capped(&q, delay_cap))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_queue_delay_is_service_time() {
        assert_eq!(pk_delay(&QueueParams::new(0.0, 1.0, 2.0)).unwrap(), 1.0);
    }

    #[test]
    fn exponential_service_matches_mm1() {
        // M/M/1 with mu = 1, lambda = 0.5: 1/(mu - lambda) = 2.
        let d = pk_delay(&QueueParams::exponential(0.5, 1.0)).unwrap();
        assert!((d - 2.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_service_matches_md1() {
        // M/D/1: E[X] + rho E[X] / (2(1 - rho)) = 1 + 0.5/1 = 1.5.
        let d = pk_delay(&QueueParams::deterministic(0.5, 1.0)).unwrap();
        assert!((d - 1.5).abs() < 1e-15);
    }

    #[test]
    fn unstable_queue_errors_and_caps() {
        let q = QueueParams::exponential(1.0, 1.0);
        assert!(matches!(pk_delay(&q), Err(Error::Unstable { .. })));
        assert_eq!(pk_delay_capped(&q, 1e4), 1e4);
    }

    #[test]
    fn loads_sum_on_shared_node() {
        let (a, b) = (NodeId(10), NodeId(11));
        let cands = [a, b];
        let choosers = [
            Chooser { node: NodeId(1), rate: 0.2, candidates: &cands },
            Chooser { node: NodeId(2), rate: 0.3, candidates: &cands },
        ];
        let both = aggregate_loads(&choosers, &[a, a], |_| 0.1).unwrap();
        assert!((both.rate(a) - 0.6).abs() < 1e-15);
        assert!((both.rate(b) - 0.1).abs() < 1e-15);
        let split = aggregate_loads(&choosers, &[a, b], |_| 0.1).unwrap();
        assert!((split.rate(a) - 0.3).abs() < 1e-15);
        assert!((split.rate(b) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn invalid_action_rejected() {
        let cands = [NodeId(10)];
        let choosers = [Chooser { node: NodeId(1), rate: 0.2, candidates: &cands }];
        let err = aggregate_loads(&choosers, &[NodeId(99)], |_| 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidAction { .. }));
    }

    #[test]
    fn saturation_applies_to_every_chooser() {
        let a = NodeId(10);
        let cands = [a];
        let choosers: Vec<_> = (0..4)
            .map(|i| Chooser { node: NodeId(i), rate: 0.5, candidates: &cands })
            .collect();
        let q = QueueParams::exponential(0.0, 1.0);
        for who in 0..4 {
            let u = stage_payoff(&choosers, &[a; 4], who, |_| &q, 1e4).unwrap();
            assert_eq!(u, 1e4);
        }
    }
}
