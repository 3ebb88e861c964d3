use std::collections::VecDeque;

use super::{dot, min, FiniteGame, MixedStrategy};
use crate::scenario::GameConfig;

/// Fictitious play settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FpOptions {
    pub max_iters: usize,
    /// Stop once the frequencies stayed within this L∞ distance of every
    /// profile of the last `window` iterations.
    pub stop_tol: f64,
    pub window: usize,
    /// Keep per-iteration best responses and frequencies in the trace.
    pub record: bool,
}

impl Default for FpOptions {
    fn default() -> Self {
        FpOptions {
            max_iters: 100_000,
            stop_tol: 1e-5,
            window: 20,
            record: false,
        }
    }
}

impl FpOptions {
    pub fn from_config(game: &GameConfig) -> Self {
        FpOptions {
            max_iters: game.fp_max_iters,
            stop_tol: game.fp_stop_tol,
            window: game.fp_window,
            record: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FictitiousPlayTrace {
    pub iterations: usize,
    pub converged: bool,
    /// `(k, max_j ‖freq_k − freq_j‖∞)` over the `window` iterations before
    /// `k`, for every iteration past the first window.
    pub window_changes: Vec<(usize, f64)>,
    /// Best response of every player at each iteration (when recorded).
    pub best_responses: Vec<Vec<usize>>,
    /// Empirical frequencies after each iteration (when recorded).
    pub frequencies: Vec<Vec<MixedStrategy>>,
    /// Largest unilateral gain at the returned profile.
    pub nash_gap: f64,
    /// Magnitude the gap is measured against.
    pub payoff_scale: f64,
}

impl FictitiousPlayTrace {
    /// First iteration whose window change fell below `tol`.
    pub fn first_stable(&self, tol: f64) -> Option<usize> {
        self.window_changes
            .iter()
            .find(|(_, c)| *c < tol)
            .map(|(k, _)| *k)
    }

    pub fn relative_gap(&self) -> f64 {
        if self.payoff_scale > 0.0 {
            self.nash_gap / self.payoff_scale
        } else {
            self.nash_gap
        }
    }
}

struct Gap {
    abs: f64,
    scale: f64,
}

impl Gap {
    fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.abs / self.scale
        } else {
            self.abs
        }
    }
}

fn best_response(costs: &[f64]) -> usize {
    let mut best = 0;
    for (a, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = a;
        }
    }
    best
}

fn profile_gap<G: FiniteGame + ?Sized>(game: &G, profile: &[MixedStrategy]) -> Gap {
    let mut gap = Gap { abs: 0.0, scale: 0.0 };
    for i in 0..game.num_players() {
        let costs = game.expected_costs(i, profile);
        let value = dot(&profile[i].probs, &costs);
        let best = min(&costs);
        gap.abs = gap.abs.max(value - best);
        gap.scale = gap.scale.max(value.abs()).max(best.abs());
    }
    gap
}

/// Classical simultaneous fictitious play.
///
/// At iteration 1 every player best-responds to uniform beliefs; afterwards
/// to the others' empirical frequencies after the previous iteration. Ties go
/// to the lowest action index. Play stops when the frequencies moved less
/// than `stop_tol` over the last `window` iterations. The returned profile is
/// the one with the smallest relative Nash gap among the final empirical
/// profile, earlier empirical profiles and the last iteration's pure best
/// responses; `converged` reports whether the stopping rule fired before
/// `max_iters`.
pub fn fictitious_play<G: FiniteGame + ?Sized>(
    game: &G,
    opts: &FpOptions,
) -> (Vec<MixedStrategy>, FictitiousPlayTrace) {
    let n = game.num_players();
    let mut trace = FictitiousPlayTrace::default();
    if n == 0 {
        trace.converged = true;
        return (Vec::new(), trace);
    }
    let window = opts.window.max(1);
    let mut counts: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; game.num_actions(i)]).collect();
    let mut beliefs: Vec<MixedStrategy> =
        (0..n).map(|i| MixedStrategy::uniform(game.num_actions(i))).collect();
    let mut history: VecDeque<Vec<MixedStrategy>> = VecDeque::with_capacity(window + 1);
    let mut best: Option<(f64, Vec<MixedStrategy>)> = None;
    let mut responses = vec![0; n];

    for k in 1..=opts.max_iters.max(1) {
        let mut gap = Gap { abs: 0.0, scale: 0.0 };
        for (i, slot) in responses.iter_mut().enumerate() {
            let costs = game.expected_costs(i, &beliefs);
            *slot = best_response(&costs);
            let value = dot(&beliefs[i].probs, &costs);
            let low = costs[*slot];
            gap.abs = gap.abs.max(value - low);
            gap.scale = gap.scale.max(value.abs()).max(low.abs());
        }
        if k > 1 && best.as_ref().map_or(true, |(g, _)| gap.relative() < *g) {
            best = Some((gap.relative(), beliefs.clone()));
        }
        for (i, &a) in responses.iter().enumerate() {
            counts[i][a] += 1.0;
        }
        let kf = k as f64;
        for (b, c) in beliefs.iter_mut().zip(&counts) {
            for (p, &x) in b.probs.iter_mut().zip(c) {
                *p = x / kf;
            }
        }
        trace.iterations = k;
        if opts.record {
            trace.best_responses.push(responses.clone());
            trace.frequencies.push(beliefs.clone());
        }
        if history.len() == window {
            // largest move against any profile in the window, so cycles
            // whose period divides the window cannot pass as converged
            let change = history
                .iter()
                .flat_map(|old| old.iter().zip(&beliefs))
                .flat_map(|(o, b)| o.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max);
            history.pop_front();
            history.push_back(beliefs.clone());
            trace.window_changes.push((k, change));
            if change < opts.stop_tol {
                trace.converged = true;
                break;
            }
        } else {
            history.push_back(beliefs.clone());
        }
    }

    // pure play of the last iteration: FP frequencies approach a pure
    // equilibrium only at rate 1/k
    let pure: Vec<MixedStrategy> = responses
        .iter()
        .enumerate()
        .map(|(i, &a)| MixedStrategy::pure(game.num_actions(i), a))
        .collect();
    let mut profile = beliefs;
    let mut lowest = profile_gap(game, &profile).relative();
    for (g, p) in best.into_iter().chain([(profile_gap(game, &pure).relative(), pure)]) {
        if g < lowest {
            lowest = g;
            profile = p;
        }
    }
    let gap = profile_gap(game, &profile);
    trace.nash_gap = gap.abs;
    trace.payoff_scale = gap.scale;
    (profile, trace)
}

#[cfg(test)]
mod tests {
    use super::super::TableGame;
    use super::*;

    #[test]
    fn dominant_action_converges_fast() {
        // action 1 is strictly better for both players
        let g = TableGame::from_fn(vec![2, 2], |i, j| if j[i] == 1 { 1.0 } else { 2.0 });
        let (profile, trace) = fictitious_play(&g, &FpOptions::default());
        assert!(trace.converged);
        assert!(trace.iterations <= 21);
        assert_eq!(profile[0].probs, vec![0.0, 1.0]);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let g = TableGame::from_fn(vec![3], |_, _| 1.0);
        let (profile, _) = fictitious_play(&g, &FpOptions::default());
        assert_eq!(profile[0].probs, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn trace_is_recorded_on_request() {
        let g = TableGame::from_fn(vec![2, 2], |i, j| if j[0] == j[1] { i as f64 } else { 1.0 - i as f64 });
        let opts = FpOptions {
            max_iters: 50,
            stop_tol: 0.0,
            window: 20,
            record: true,
        };
        let (_, trace) = fictitious_play(&g, &opts);
        assert_eq!(trace.frequencies.len(), 50);
        assert_eq!(trace.best_responses.len(), 50);
        assert_eq!(trace.window_changes.len(), 30);
        assert!(!trace.converged);
    }
}
