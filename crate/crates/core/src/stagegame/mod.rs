//! Per-level stage games and their mixed equilibria.
//!
//! A stage game at level `l` and state `s` has the admitted level-`l` nodes
//! as players. Each player picks a next hop among its candidates and pays the
//! M/G/1 delay at that hop under the aggregate load, plus the stage value of
//! the chosen node one level up. Equilibria are found by [`fictitious_play`].

mod fp;

use std::collections::BTreeMap;

pub use fp::{fictitious_play, FictitiousPlayTrace, FpOptions};

use crate::geometry::StateHierarchy;
use crate::queueing::{pk_delay_capped, QueueParams};
use crate::scenario::NodeIndex;
use crate::{Error, NodeId, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// Probability vector over a player's actions.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedStrategy {
    pub probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Self {
        MixedStrategy { probs }
    }

    pub fn uniform(n: usize) -> Self {
        MixedStrategy {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn pure(n: usize, action: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[action] = 1.0;
        MixedStrategy { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the most likely action (lowest index on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (a, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = a;
            }
        }
        best
    }

    /// Checks nonnegativity and unit mass within `1e-9`.
    pub fn validate(&self, player: usize) -> Result<()> {
        if self.probs.is_empty() {
            return Err(Error::NonSimplex {
                player,
                reason: "empty strategy".into(),
            });
        }
        if let Some(p) = self.probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::NonSimplex {
                player,
                reason: format!("entry {p} is not a probability"),
            });
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NonSimplex {
                player,
                reason: format!("entries sum to {sum}"),
            });
        }
        Ok(())
    }
}

/// A finite game in which every player minimizes cost.
pub trait FiniteGame {
    fn num_players(&self) -> usize;
    fn num_actions(&self, player: usize) -> usize;
    /// Cost to `player` at a pure joint action.
    fn cost(&self, player: usize, joint: &[usize]) -> f64;

    /// Expected cost of each of `player`'s actions when the others play
    /// `profile`. `profile[player]` is ignored.
    fn expected_costs(&self, player: usize, profile: &[MixedStrategy]) -> Vec<f64> {
        let n = self.num_players();
        let mut out = vec![0.0; self.num_actions(player)];
        let others: Vec<usize> = (0..n).filter(|&j| j != player).collect();
        let mut joint = vec![0; n];
        let mut digits = vec![0usize; others.len()];
        loop {
            let mut prob = 1.0;
            for (d, &j) in digits.iter().zip(&others) {
                joint[j] = *d;
                prob *= profile[j].probs[*d];
            }
            if prob > 0.0 {
                for (a, slot) in out.iter_mut().enumerate() {
                    joint[player] = a;
                    *slot += prob * self.cost(player, &joint);
                }
            }
            // odometer over the others' actions
            let mut k = others.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < self.num_actions(others[k]) {
                    break;
                }
                digits[k] = 0;
            }
        }
    }
}

fn check_profile<G: FiniteGame + ?Sized>(game: &G, profile: &[MixedStrategy]) -> Result<()> {
    if profile.len() != game.num_players() {
        return Err(Error::DimensionMismatch {
            expected: game.num_players(),
            got: profile.len(),
        });
    }
    for (i, f) in profile.iter().enumerate() {
        if f.len() != game.num_actions(i) {
            return Err(Error::DimensionMismatch {
                expected: game.num_actions(i),
                got: f.len(),
            });
        }
        f.validate(i)?;
    }
    Ok(())
}

/// Expected cost of every player under a mixed profile.
pub fn equilibrium_value<G: FiniteGame + ?Sized>(
    game: &G,
    profile: &[MixedStrategy],
) -> Result<Vec<f64>> {
    check_profile(game, profile)?;
    Ok((0..game.num_players())
        .map(|i| dot(&profile[i].probs, &game.expected_costs(i, profile)))
        .collect())
}

/// Per-player gain from the best unilateral pure deviation.
pub fn nash_gaps<G: FiniteGame + ?Sized>(game: &G, profile: &[MixedStrategy]) -> Result<Vec<f64>> {
    check_profile(game, profile)?;
    Ok((0..game.num_players())
        .map(|i| {
            let costs = game.expected_costs(i, profile);
            (dot(&profile[i].probs, &costs) - min(&costs)).max(0.0)
        })
        .collect())
}

/// Magnitude used to make Nash gaps relative: the largest absolute value of
/// a player's expected cost or best-response cost under `profile`.
pub fn payoff_scale<G: FiniteGame + ?Sized>(game: &G, profile: &[MixedStrategy]) -> Result<f64> {
    check_profile(game, profile)?;
    Ok((0..game.num_players())
        .map(|i| {
            let costs = game.expected_costs(i, profile);
            dot(&profile[i].probs, &costs).abs().max(min(&costs).abs())
        })
        .fold(0.0, f64::max))
}

/// True when no player gains more than `rel_eps · payoff_scale` by deviating.
pub fn is_epsilon_nash<G: FiniteGame + ?Sized>(
    game: &G,
    profile: &[MixedStrategy],
    rel_eps: f64,
) -> Result<bool> {
    let scale = payoff_scale(game, profile)?;
    let gap = nash_gaps(game, profile)?.into_iter().fold(0.0, f64::max);
    Ok(gap <= rel_eps * scale)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Game given by an explicit cost table.
#[derive(Clone, Debug)]
pub struct TableGame {
    actions: Vec<usize>,
    /// `costs[joint index][player]`, joint index in mixed radix with player 0
    /// most significant.
    costs: Vec<Vec<f64>>,
}

impl TableGame {
    pub fn from_fn(actions: Vec<usize>, cost: impl Fn(usize, &[usize]) -> f64) -> Self {
        let total: usize = actions.iter().product();
        let n = actions.len();
        let mut costs = Vec::with_capacity(total);
        let mut joint = vec![0; n];
        for idx in 0..total {
            let mut rem = idx;
            for k in (0..n).rev() {
                joint[k] = rem % actions[k];
                rem /= actions[k];
            }
            costs.push((0..n).map(|i| cost(i, &joint)).collect());
        }
        TableGame { actions, costs }
    }

    /// Two-player game with row-player costs `a` and column-player costs `b`.
    pub fn bimatrix(a: &[Vec<f64>], b: &[Vec<f64>]) -> Self {
        let shape = vec![a.len(), a[0].len()];
        TableGame::from_fn(shape, |i, j| if i == 0 { a[j[0]][j[1]] } else { b[j[0]][j[1]] })
    }

    fn index(&self, joint: &[usize]) -> usize {
        joint
            .iter()
            .zip(&self.actions)
            .fold(0, |acc, (&a, &n)| acc * n + a)
    }
}

impl FiniteGame for TableGame {
    fn num_players(&self) -> usize {
        self.actions.len()
    }

    fn num_actions(&self, player: usize) -> usize {
        self.actions[player]
    }

    fn cost(&self, player: usize, joint: &[usize]) -> f64 {
        self.costs[self.index(joint)][player]
    }
}

#[derive(Clone, Debug)]
struct Resource {
    node: NodeId,
    queue: QueueParams,
    continuation: f64,
    /// `(player, action index)` pairs that select this resource.
    choosers: Vec<(usize, usize)>,
}

/// Level-`l` congestion game at one state.
#[derive(Clone, Debug)]
pub struct StageGame {
    pub state: usize,
    pub level: usize,
    pub players: Vec<NodeId>,
    /// Rate each player forwards (packets/s).
    pub rates: Vec<f64>,
    /// Candidate next hops of each player, sorted by id.
    pub actions: Vec<Vec<NodeId>>,
    resources: Vec<Resource>,
    action_resource: Vec<Vec<usize>>,
    delay_cap: f64,
}

impl StageGame {
    /// Builds a game from explicit parts. `queue(c)` gives candidate `c`'s
    /// service law with its external arrival rate and `continuation(c)` the
    /// value added for choosing it.
    pub fn new(
        state: usize,
        level: usize,
        players: Vec<NodeId>,
        rates: Vec<f64>,
        actions: Vec<Vec<NodeId>>,
        queue: impl Fn(NodeId) -> QueueParams,
        continuation: impl Fn(NodeId) -> Result<f64>,
        delay_cap: f64,
    ) -> Result<Self> {
        if rates.len() != players.len() || actions.len() != players.len() {
            return Err(Error::DimensionMismatch {
                expected: players.len(),
                got: rates.len().min(actions.len()),
            });
        }
        let mut slot: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut resources: Vec<Resource> = Vec::new();
        let mut action_resource = Vec::with_capacity(players.len());
        for (i, cands) in actions.iter().enumerate() {
            if cands.is_empty() {
                return Err(Error::DeadEnd(players[i]));
            }
            let mut row = Vec::with_capacity(cands.len());
            for (a, &c) in cands.iter().enumerate() {
                let r = match slot.get(&c) {
                    Some(&r) => r,
                    None => {
                        resources.push(Resource {
                            node: c,
                            queue: queue(c),
                            continuation: continuation(c)?,
                            choosers: Vec::new(),
                        });
                        slot.insert(c, resources.len() - 1);
                        resources.len() - 1
                    }
                };
                resources[r].choosers.push((i, a));
                row.push(r);
            }
            action_resource.push(row);
        }
        Ok(StageGame {
            state,
            level,
            players,
            rates,
            actions,
            resources,
            action_resource,
            delay_cap,
        })
    }

    pub fn player_index(&self, node: NodeId) -> Option<usize> {
        self.players.iter().position(|&p| p == node)
    }

    /// Continuation value attached to choosing `node`.
    pub fn continuation(&self, node: NodeId) -> Option<f64> {
        self.resources
            .iter()
            .find(|r| r.node == node)
            .map(|r| r.continuation)
    }

    fn delay_at(&self, r: usize, load: f64) -> f64 {
        pk_delay_capped(&self.resources[r].queue.with_arrival(load), self.delay_cap)
    }

    /// Queueing delay (without continuation) paid by `player` at a pure
    /// joint action.
    pub fn stage_delay(&self, player: usize, joint: &[usize]) -> f64 {
        let r = self.action_resource[player][joint[player]];
        let mut load = self.resources[r].queue.arrival_rate;
        for (j, &a) in joint.iter().enumerate() {
            if self.action_resource[j][a] == r {
                load += self.rates[j];
            }
        }
        self.delay_at(r, load)
    }

    /// Expected queueing delay of each of `player`'s actions against the
    /// others' mixed strategies.
    pub fn expected_stage_delays(&self, player: usize, profile: &[MixedStrategy]) -> Vec<f64> {
        self.action_resource[player]
            .iter()
            .map(|&r| {
                let res = &self.resources[r];
                let others = res
                    .choosers
                    .iter()
                    .filter(|(j, _)| *j != player)
                    .map(|&(j, a)| (self.rates[j], profile[j].probs[a]));
                let base = res.queue.arrival_rate + self.rates[player];
                load_distribution(others)
                    .iter()
                    .map(|&(extra, p)| p * self.delay_at(r, base + extra))
                    .sum()
            })
            .collect()
    }
}

impl FiniteGame for StageGame {
    fn num_players(&self) -> usize {
        self.players.len()
    }

    fn num_actions(&self, player: usize) -> usize {
        self.actions[player].len()
    }

    fn cost(&self, player: usize, joint: &[usize]) -> f64 {
        let r = self.action_resource[player][joint[player]];
        self.stage_delay(player, joint) + self.resources[r].continuation
    }

    fn expected_costs(&self, player: usize, profile: &[MixedStrategy]) -> Vec<f64> {
        let mut out = self.expected_stage_delays(player, profile);
        for (slot, &r) in out.iter_mut().zip(&self.action_resource[player]) {
            *slot += self.resources[r].continuation;
        }
        out
    }
}

const MAX_SUPPORT: usize = 512;
const PRUNE: f64 = 1e-15;

/// Distribution of `Σ rate_j · B_j` for independent Bernoulli(`p_j`) `B_j`, as
/// `(load, probability)` pairs sorted by load. Loads closer than `1e-12` are
/// merged; supports larger than a fixed bound are coarsened onto a uniform
/// grid, keeping each bin's mass and mean load.
fn load_distribution(items: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut dist = vec![(0.0, 1.0)];
    let mut next: Vec<(f64, f64)> = Vec::new();
    for (rate, p) in items {
        if p <= 0.0 {
            continue;
        }
        if p >= 1.0 {
            for d in dist.iter_mut() {
                d.0 += rate;
            }
            continue;
        }
        // merge the unshifted and shifted copies, both already sorted
        next.clear();
        let (mut i, mut j) = (0, 0);
        while i < dist.len() || j < dist.len() {
            let take_left = j == dist.len() || (i < dist.len() && dist[i].0 <= dist[j].0 + rate);
            let (l, q) = if take_left {
                i += 1;
                (dist[i - 1].0, dist[i - 1].1 * (1.0 - p))
            } else {
                j += 1;
                (dist[j - 1].0 + rate, dist[j - 1].1 * p)
            };
            if q < PRUNE {
                continue;
            }
            match next.last_mut() {
                Some(last) if l - last.0 <= 1e-12 => {
                    let m = last.1 + q;
                    last.0 = (last.0 * last.1 + l * q) / m;
                    last.1 = m;
                }
                _ => next.push((l, q)),
            }
        }
        std::mem::swap(&mut dist, &mut next);
        if dist.len() > MAX_SUPPORT {
            dist = coarsen(&dist);
        }
    }
    dist
}

fn coarsen(dist: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let lo = dist[0].0;
    let width = (dist[dist.len() - 1].0 - lo) / (MAX_SUPPORT / 2) as f64;
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for &(l, q) in dist {
        let bin = ((l - lo) / width) as usize;
        match out.last_mut() {
            Some(last) if last.2 == bin => {
                let m = last.1 + q;
                last.0 = (last.0 * last.1 + l * q) / m;
                last.1 = m;
            }
            _ => out.push((l, q, bin)),
        }
    }
    out.into_iter().map(|(l, q, _)| (l, q)).collect()
}

/// Stage game of `level` at the hierarchy's state.
///
/// Players are the admitted level-`level` nodes; `upstream_rate(n)` is the
/// rate node `n` forwards. Below the terminal level, `continuation` must hold
/// a value for every candidate; at the terminal level continuations are 0.
pub fn build_stage_game(
    index: &NodeIndex,
    hierarchy: &StateHierarchy,
    level: usize,
    continuation: &BTreeMap<NodeId, f64>,
    upstream_rate: impl Fn(NodeId) -> f64,
    delay_cap: f64,
) -> Result<StageGame> {
    let l_count = hierarchy.level_count();
    if level == 0 || level > l_count {
        return Err(Error::Validation(format!(
            "level {level} outside 1..={l_count}"
        )));
    }
    let players = hierarchy.levels[level - 1].clone();
    let rates = players.iter().map(|&p| upstream_rate(p)).collect();
    let actions = players
        .iter()
        .map(|&p| hierarchy.candidates_of(p).to_vec())
        .collect();
    let terminal = level == l_count;
    StageGame::new(
        hierarchy.state,
        level,
        players,
        rates,
        actions,
        |c| index.queue(c).clone(),
        |c| {
            if terminal {
                Ok(0.0)
            } else {
                continuation
                    .get(&c)
                    .copied()
                    .ok_or(Error::MissingContinuation(c))
            }
        },
        delay_cap,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_distribution(items: &[(f64, f64)]) -> Vec<(f64, f64)> {
        let n = items.len();
        let mut out = Vec::new();
        for mask in 0..(1u32 << n) {
            let mut load = 0.0;
            let mut p = 1.0;
            for (k, &(r, q)) in items.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    load += r;
                    p *= q;
                } else {
                    p *= 1.0 - q;
                }
            }
            out.push((load, p));
        }
        out
    }

    #[test]
    fn load_distribution_matches_enumeration() {
        let items = [(0.1, 0.3), (0.25, 0.5), (0.1, 0.9), (0.07, 1.0), (0.4, 0.0)];
        let dist = load_distribution(items.iter().copied());
        let brute = brute_distribution(&items);
        let f = |x: f64| x * x + 0.5 * x;
        let e1: f64 = dist.iter().map(|&(l, p)| p * f(l)).sum();
        let e2: f64 = brute.iter().map(|&(l, p)| p * f(l)).sum();
        assert!((e1 - e2).abs() < 1e-14);
        let mass: f64 = dist.iter().map(|d| d.1).sum();
        assert!((mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn equal_rates_collapse_to_counts() {
        let dist = load_distribution((0..40).map(|_| (0.1, 0.5)));
        assert!(dist.len() <= 41);
    }

    #[test]
    fn coarsening_keeps_mean() {
        let items: Vec<_> = (0..16).map(|k| (0.01 + 0.001 * k as f64 + 1e-7 * (k * k) as f64, 0.4)).collect();
        let dist = load_distribution(items.iter().copied());
        assert!(dist.len() <= MAX_SUPPORT);
        let mean: f64 = dist.iter().map(|&(l, p)| l * p).sum();
        let exact: f64 = items.iter().map(|&(r, p)| r * p).sum();
        assert!((mean - exact).abs() < 1e-12);
    }

    #[test]
    fn simplex_validation() {
        assert!(MixedStrategy::new(vec![0.5, 0.5]).validate(0).is_ok());
        assert!(MixedStrategy::new(vec![0.6, 0.5]).validate(0).is_err());
        assert!(MixedStrategy::new(vec![-0.1, 1.1]).validate(0).is_err());
    }

    #[test]
    fn uniform_value_is_mean_of_entries() {
        let g = TableGame::bimatrix(&[vec![1.0, 2.0], vec![3.0, 4.0]], &[vec![0.0; 2], vec![0.0; 2]]);
        let u = MixedStrategy::uniform(2);
        let v = equilibrium_value(&g, &[u.clone(), u]).unwrap();
        assert!((v[0] - 2.5).abs() < 1e-15);
    }
}
