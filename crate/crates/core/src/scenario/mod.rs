//! Experiment description: region, primary users, SU nodes, queueing and radio
//! parameters, game settings and seeds.
//!
//! Scenarios are stored as TOML. [`Scenario::to_canonical_string`] re-emits a
//! parsed scenario with a fixed field order and shortest round-trip float
//! formatting, so a canonical document reloads and re-serializes byte-exactly.
//! Units are fixed: kilometres, seconds, watts.

mod deploy;
mod markov;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::queueing::QueueParams;
use crate::{Error, Result};

pub use deploy::{generate_deployment, DeploymentConfig};
pub use markov::{build_state_model, StateModel};

/// Label of the channel state in which a PU is transmitting.
pub const OCCUPIED: &str = "occupied";
/// Label of the idle channel state.
pub const UNOCCUPIED: &str = "unoccupied";

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle in km.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Distance from an interior point to the nearest edge.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        (p.x - self.x_min)
            .min(self.x_max - p.x)
            .min(p.y - self.y_min)
            .min(self.y_max - p.y)
    }

    fn validate(&self, what: &str) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::Validation(format!(
                "{what}: x_min < x_max and y_min < y_max required"
            )));
        }
        Ok(())
    }
}

/// A licensed transmitter with a circular footprint and a Markov channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimaryUser {
    pub id: u32,
    pub center: Point,
    pub footprint_radius: f64,
    pub tx_power: f64,
    pub channel_states: Vec<String>,
    /// Row-stochastic transition matrix over `channel_states`.
    pub transition: Vec<Vec<f64>>,
}

impl PrimaryUser {
    /// Two-state PU with `P(unoccupied -> occupied) = p_on` and
    /// `P(occupied -> unoccupied) = p_off`.
    pub fn two_state(id: u32, center: Point, footprint_radius: f64, p_on: f64, p_off: f64) -> Self {
        PrimaryUser {
            id,
            center,
            footprint_radius,
            tx_power: 1.0,
            channel_states: vec![UNOCCUPIED.to_string(), OCCUPIED.to_string()],
            transition: vec![vec![1.0 - p_on, p_on], vec![p_off, 1.0 - p_off]],
        }
    }

    pub fn occupied_index(&self) -> Option<usize> {
        self.channel_states.iter().position(|s| s == OCCUPIED)
    }

    pub fn in_footprint(&self, p: &Point) -> bool {
        self.center.dist(p) < self.footprint_radius
    }

    fn validate(&self) -> Result<()> {
        let id = self.id;
        if !(self.footprint_radius > 0.0 && self.footprint_radius.is_finite()) {
            return Err(Error::Validation(format!("PU {id}: footprint_radius must be > 0")));
        }
        if !(self.tx_power > 0.0 && self.tx_power.is_finite()) {
            return Err(Error::Validation(format!("PU {id}: tx_power must be > 0")));
        }
        let labels: BTreeSet<&str> = self.channel_states.iter().map(String::as_str).collect();
        if labels.len() != self.channel_states.len() {
            return Err(Error::Validation(format!("PU {id}: duplicate channel state labels")));
        }
        if !labels.contains(OCCUPIED) || !labels.contains(UNOCCUPIED) {
            return Err(Error::Validation(format!(
                "PU {id}: channel_states must include \"{OCCUPIED}\" and \"{UNOCCUPIED}\""
            )));
        }
        let n = self.channel_states.len();
        if self.transition.len() != n || self.transition.iter().any(|row| row.len() != n) {
            return Err(Error::Validation(format!(
                "PU {id}: transition must be {n}x{n}"
            )));
        }
        for (r, row) in self.transition.iter().enumerate() {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Validation(format!(
                    "PU {id}: transition entries must lie in [0,1] (row {r})"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::Validation(format!(
                    "PU {id}: row-stochastic violated: row {r} sums to {sum}"
                )));
            }
        }
        Ok(())
    }
}

/// An SU source, relay or CPC station. `queue` overrides the role default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub pos: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue: Option<QueueParams>,
}

impl Node {
    pub fn new(id: u32, x: f64, y: f64) -> Self {
        Node {
            id: NodeId(id),
            pos: Point::new(x, y),
            queue: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Source,
    Relay,
    Cpc,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeSet {
    #[serde(default)]
    pub sources: Vec<Node>,
    #[serde(default)]
    pub relays: Vec<Node>,
    #[serde(default)]
    pub cpc_stations: Vec<Node>,
}

impl NodeSet {
    pub fn iter(&self) -> impl Iterator<Item = (Role, &Node)> {
        self.sources
            .iter()
            .map(|n| (Role::Source, n))
            .chain(self.relays.iter().map(|n| (Role::Relay, n)))
            .chain(self.cpc_stations.iter().map(|n| (Role::Cpc, n)))
    }

    /// Sources and relays.
    pub fn su_nodes(&self) -> impl Iterator<Item = &Node> {
        self.sources.iter().chain(self.relays.iter())
    }

    pub fn max_id(&self) -> Option<u32> {
        self.iter().map(|(_, n)| n.id.0).max()
    }
}

/// Role defaults for per-node queueing parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueDefaults {
    pub source: QueueParams,
    pub relay: QueueParams,
    pub cpc: QueueParams,
}

impl Default for QueueDefaults {
    fn default() -> Self {
        QueueDefaults {
            source: QueueParams::exponential(0.1, 0.1),
            relay: QueueParams::exponential(0.02, 0.1),
            cpc: QueueParams::exponential(0.0, 0.02),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    /// SU transmit power in watts.
    pub tx_power: f64,
    pub path_loss_alpha: f64,
    /// Radio and interference range in km.
    pub interference_range: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            tx_power: 1.0,
            path_loss_alpha: 2.5,
            interference_range: 0.15,
        }
    }
}

fn default_grid() -> f64 {
    0.02
}
fn default_delay_cap() -> f64 {
    1e4
}
fn default_fp_max_iters() -> usize {
    100_000
}
fn default_fp_stop_tol() -> f64 {
    1e-5
}
fn default_fp_window() -> usize {
    20
}
fn default_rate_refinements() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Discount factor in (0, 1).
    pub beta: f64,
    /// Corridor relaxation factor in (0, 1].
    pub omega: f64,
    #[serde(default = "default_grid")]
    pub grid_resolution: f64,
    /// Fixed number of hierarchy levels; derived from the axis length if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default = "default_delay_cap")]
    pub delay_cap: f64,
    #[serde(default = "default_fp_max_iters")]
    pub fp_max_iters: usize,
    #[serde(default = "default_fp_stop_tol")]
    pub fp_stop_tol: f64,
    #[serde(default = "default_fp_window")]
    pub fp_window: usize,
    #[serde(default = "default_rate_refinements")]
    pub rate_refinements: usize,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            beta: 0.9,
            omega: 0.7,
            grid_resolution: default_grid(),
            levels: None,
            delay_cap: default_delay_cap(),
            fp_max_iters: default_fp_max_iters(),
            fp_stop_tol: default_fp_stop_tol(),
            fp_window: default_fp_window(),
            rate_refinements: default_rate_refinements(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Max distance (km) from the axis for a relay to count as an axis node in
    /// medial-axis routing. Defaults to half the radio range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ma_axis_tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub region: Region,
    pub pus: Vec<PrimaryUser>,
    pub nodes: NodeSet,
    #[serde(default)]
    pub queueing: QueueDefaults,
    #[serde(default)]
    pub radio: RadioConfig,
    pub game: GameConfig,
    #[serde(default)]
    pub baselines: BaselineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deployment: Option<DeploymentConfig>,
}

/// Parses and validates a scenario document.
pub fn load_scenario(config_document: &str) -> Result<Scenario> {
    let scenario: Scenario =
        toml::from_str(config_document).map_err(|e| Error::Parse(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        load_scenario(&text)
    }

    pub fn to_canonical_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_string().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        self.region.validate("region")?;
        if self.pus.is_empty() {
            return Err(Error::Validation("at least one PU required".into()));
        }
        let mut pu_ids = BTreeSet::new();
        for pu in &self.pus {
            if !pu_ids.insert(pu.id) {
                return Err(Error::Validation(format!("duplicate PU id {}", pu.id)));
            }
            pu.validate()?;
        }

        let generated_sources = self.deployment.as_ref().is_some_and(|d| d.n_sources > 0);
        if self.nodes.sources.is_empty() && !generated_sources {
            return Err(Error::Validation("at least one source required".into()));
        }
        if self.nodes.cpc_stations.is_empty() {
            return Err(Error::Validation("at least one CPC station required".into()));
        }
        let mut ids = BTreeSet::new();
        for (_, node) in self.nodes.iter() {
            if !ids.insert(node.id) {
                return Err(Error::Validation(format!("duplicate node id {}", node.id)));
            }
            if !self.region.contains(&node.pos) {
                return Err(Error::Validation(format!("node {} lies outside the region", node.id)));
            }
            if let Some(q) = &node.queue {
                q.validate(&format!("node {}", node.id))?;
            }
        }
        self.queueing.source.validate("queueing.source")?;
        self.queueing.relay.validate("queueing.relay")?;
        self.queueing.cpc.validate("queueing.cpc")?;

        let radio = &self.radio;
        if !(radio.path_loss_alpha > 0.0) {
            return Err(Error::Validation("radio.path_loss_alpha must be > 0".into()));
        }
        if !(radio.tx_power > 0.0) {
            return Err(Error::Validation("radio.tx_power must be > 0".into()));
        }
        if !(radio.interference_range > 0.0) {
            return Err(Error::Validation("radio.interference_range must be > 0".into()));
        }

        let g = &self.game;
        if !(g.beta > 0.0 && g.beta < 1.0) {
            return Err(Error::Validation("game.beta must lie in (0,1)".into()));
        }
        if !(g.omega > 0.0 && g.omega <= 1.0) {
            return Err(Error::Validation("game.omega must lie in (0,1]".into()));
        }
        if !(g.grid_resolution > 0.0) {
            return Err(Error::Validation("game.grid_resolution must be > 0".into()));
        }
        if g.levels == Some(0) {
            return Err(Error::Validation("game.levels must be >= 1".into()));
        }
        if !(g.delay_cap > 0.0) {
            return Err(Error::Validation("game.delay_cap must be > 0".into()));
        }
        if g.fp_max_iters == 0 || g.fp_window == 0 || !(g.fp_stop_tol > 0.0) {
            return Err(Error::Validation(
                "game.fp_max_iters, fp_window and fp_stop_tol must be positive".into(),
            ));
        }
        if let Some(tol) = self.baselines.ma_axis_tolerance {
            if !(tol > 0.0) {
                return Err(Error::Validation("baselines.ma_axis_tolerance must be > 0".into()));
            }
        }
        if let Some(d) = &self.deployment {
            d.validate(&self.region)?;
        }
        Ok(())
    }

    pub fn role_default(&self, role: Role) -> &QueueParams {
        match role {
            Role::Source => &self.queueing.source,
            Role::Relay => &self.queueing.relay,
            Role::Cpc => &self.queueing.cpc,
        }
    }

    /// Id-keyed view of every node with its resolved queue parameters.
    pub fn index(&self) -> NodeIndex {
        let mut nodes = BTreeMap::new();
        for (role, node) in self.nodes.iter() {
            let queue = node.queue.clone().unwrap_or_else(|| self.role_default(role).clone());
            nodes.insert(
                node.id,
                NodeInfo {
                    role,
                    pos: node.pos,
                    queue,
                },
            );
        }
        NodeIndex { nodes }
    }

    pub fn cpc_ids(&self) -> Vec<NodeId> {
        let mut ids: Vec<_> = self.nodes.cpc_stations.iter().map(|n| n.id).collect();
        ids.sort();
        ids
    }

    pub fn source_ids(&self) -> Vec<NodeId> {
        let mut ids: Vec<_> = self.nodes.sources.iter().map(|n| n.id).collect();
        ids.sort();
        ids
    }

    /// Concrete scenario for one deployment seed: relays (and sources, when
    /// configured) are drawn from the deployment section. Scenarios without
    /// a deployment section are returned unchanged.
    pub fn realize(&self, seed: u64) -> Result<Scenario> {
        match &self.deployment {
            None => Ok(self.clone()),
            Some(d) => d.realize(self, seed),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NodeInfo {
    pub role: Role,
    pub pos: Point,
    pub queue: QueueParams,
}

#[derive(Clone, Debug)]
pub struct NodeIndex {
    nodes: BTreeMap<NodeId, NodeInfo>,
}

impl NodeIndex {
    pub fn get(&self, id: NodeId) -> Option<&NodeInfo> {
        self.nodes.get(&id)
    }

    /// Panics on unknown ids; callers only pass ids taken from the scenario.
    pub fn info(&self, id: NodeId) -> &NodeInfo {
        self.nodes
            .get(&id)
            .unwrap_or_else(|| panic!("unknown node id {id}"))
    }

    pub fn pos(&self, id: NodeId) -> Point {
        self.info(id).pos
    }

    pub fn queue(&self, id: NodeId) -> &QueueParams {
        &self.info(id).queue
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &NodeInfo)> {
        self.nodes.iter()
    }
}
