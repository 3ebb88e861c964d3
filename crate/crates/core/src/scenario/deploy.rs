use serde::{Deserialize, Serialize};

use super::{Node, Point, Region, Scenario};
use crate::queueing::QueueParams;
use crate::rng::{self, uniform};
use crate::{Error, NodeId, Result};

/// Draws `n_relays` points i.i.d. uniform over `region`, with ids starting at
/// `first_id`. Deterministic in `seed`.
pub fn generate_deployment(region: &Region, n_relays: usize, seed: u64, first_id: u32) -> Vec<Node> {
    let mut rng = rng::rng(seed);
    (0..n_relays)
        .map(|i| {
            let x = region.x_min + uniform(&mut rng) * region.width();
            let y = region.y_min + uniform(&mut rng) * region.height();
            Node {
                id: NodeId(first_id + i as u32),
                pos: Point::new(x, y),
                queue: None,
            }
        })
        .collect()
}

/// Random deployment recipe used by [`Scenario::realize`].
///
/// Ranges are closed intervals `[lo, hi]` sampled uniformly. Service times
/// have second moment `(1 + service_scv) * mean^2`; `service_scv = 1` is
/// exponential service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeploymentConfig {
    pub n_relays: usize,
    pub relay_arrival: [f64; 2],
    pub relay_service: [f64; 2],
    #[serde(default)]
    pub n_sources: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_zone: Option<Region>,
    #[serde(default = "default_source_arrival")]
    pub source_arrival: [f64; 2],
    #[serde(default = "default_scv")]
    pub service_scv: f64,
}

fn default_source_arrival() -> [f64; 2] {
    [0.1, 0.1]
}

fn default_scv() -> f64 {
    1.0
}

fn check_range(name: &str, r: [f64; 2], strictly_positive: bool) -> Result<()> {
    let ok = r[0].is_finite()
        && r[1].is_finite()
        && r[0] <= r[1]
        && if strictly_positive { r[0] > 0.0 } else { r[0] >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(format!("deployment.{name}: invalid range {r:?}")))
    }
}

impl DeploymentConfig {
    pub(super) fn validate(&self, region: &Region) -> Result<()> {
        check_range("relay_arrival", self.relay_arrival, false)?;
        check_range("relay_service", self.relay_service, true)?;
        check_range("source_arrival", self.source_arrival, false)?;
        if !(self.service_scv >= 0.0) {
            return Err(Error::Validation("deployment.service_scv must be >= 0".into()));
        }
        if let Some(zone) = &self.source_zone {
            zone.validate("deployment.source_zone")?;
            let inside = region.contains(&Point::new(zone.x_min, zone.y_min))
                && region.contains(&Point::new(zone.x_max, zone.y_max));
            if !inside {
                return Err(Error::Validation(
                    "deployment.source_zone must lie inside the region".into(),
                ));
            }
        }
        if self.n_sources > 0 && self.source_zone.is_none() {
            return Err(Error::Validation(
                "deployment.n_sources > 0 requires deployment.source_zone".into(),
            ));
        }
        Ok(())
    }

    fn draw(rng: &mut crate::rng::SimRng, r: [f64; 2]) -> f64 {
        r[0] + uniform(rng) * (r[1] - r[0])
    }

    fn queue(&self, rng: &mut crate::rng::SimRng, arrival: [f64; 2]) -> QueueParams {
        let lambda = Self::draw(rng, arrival);
        let mean = Self::draw(rng, self.relay_service);
        QueueParams::new(lambda, mean, (1.0 + self.service_scv) * mean * mean)
    }

    pub(super) fn realize(&self, base: &Scenario, seed: u64) -> Result<Scenario> {
        let mut out = base.clone();
        out.deployment = None;
        let mut next_id = base.nodes.cpc_stations.iter().map(|n| n.id.0).max().unwrap_or(0) + 1;

        if self.n_sources > 0 {
            let zone = self.source_zone.expect("validated");
            let mut sources =
                generate_deployment(&zone, self.n_sources, rng::derive(seed, "sources", 0), next_id);
            let mut qrng = rng::rng(rng::derive(seed, "source-queues", 0));
            for s in &mut sources {
                s.queue = Some(self.queue(&mut qrng, self.source_arrival));
            }
            next_id += self.n_sources as u32;
            out.nodes.sources = sources;
        } else {
            next_id = next_id.max(base.nodes.max_id().unwrap_or(0) + 1);
        }

        let mut relays = generate_deployment(
            &base.region,
            self.n_relays,
            rng::derive(seed, "relays", 0),
            next_id,
        );
        let mut qrng = rng::rng(rng::derive(seed, "relay-queues", 0));
        for r in &mut relays {
            r.queue = Some(self.queue(&mut qrng, self.relay_arrival));
        }
        out.nodes.relays = relays;
        out.validate()?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region() -> Region {
        Region {
            x_min: -0.8,
            x_max: 0.8,
            y_min: -1.0,
            y_max: 1.0,
        }
    }

    #[test]
    fn zero_relays_is_empty() {
        assert!(generate_deployment(&region(), 0, 1, 10).is_empty());
    }

    #[test]
    fn deterministic_and_in_region() {
        let a = generate_deployment(&region(), 500, 99, 10);
        let b = generate_deployment(&region(), 500, 99, 10);
        assert_eq!(a, b);
        assert!(a.iter().all(|n| region().contains(&n.pos)));
        assert_eq!(a[0].id, NodeId(10));
        assert_eq!(a[499].id, NodeId(509));
        let c = generate_deployment(&region(), 500, 100, 10);
        assert_ne!(a, c);
    }
}
