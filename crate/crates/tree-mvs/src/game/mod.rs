//! Monte Carlo game reading of the coupled system.
//!
//! A token sits on one of N boards (component copies of the tree). Each turn
//! at level k on board i it jumps to board j with probability `p_ij(k)`,
//! steps to the predecessor with probability `(1 - P_i(k)) * beta_i(k)`, and
//! otherwise plays the board's own mechanism: a fair-coin tug-of-war on
//! midrange boards, a uniform step to a successor on mean boards. The game
//! stops on reaching level L, paying that board's boundary datum at `psi` of
//! the final node. Under optimal play the expected payoff solves the depth-L
//! system, which is what [`estimate_value`] cross-checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::averaging::OperatorKind;
use crate::error::{Error, Result};
use crate::solver::{
    solve_directed_exact, solve_fixed_point, BoundaryData, CompiledLevels, FixedPointOptions,
    SolutionField, SystemConfig,
};
use crate::tree::NodeId;

/// Default episode step cap; hitting it aborts the episode. Reachable only
/// with predecessor weights pathologically close to 1.
pub const STEP_CAP: u64 = 10_000_000;

/// How a board resolves its own move.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoardMechanism {
    /// Fair coin, winner moves the token to a successor of their choice.
    TugOfWar,
    /// Uniform random successor.
    UniformWalk,
}

impl BoardMechanism {
    pub fn for_operator(kind: OperatorKind) -> Result<Self> {
        match kind {
            OperatorKind::Midrange => Ok(BoardMechanism::TugOfWar),
            OperatorKind::Mean => Ok(BoardMechanism::UniformWalk),
            _ => Err(Error::Precondition(
                "boards must average by midrange (tug-of-war) or mean (uniform walk)".into(),
            )),
        }
    }
}

/// Token position: node, board in `1..=N`, and moves played so far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameState {
    pub node: NodeId,
    pub board: usize,
    pub step: u64,
}

impl GameState {
    pub fn start(node: NodeId, board: usize) -> Self {
        GameState { node, board, step: 0 }
    }
}

/// One possible resolution of a turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// Jump to the named board (1-based), same node.
    SwitchBoard(usize),
    ToPredecessor,
    /// Tug-of-war coin won by the maximizing player.
    MaxChooses,
    /// Tug-of-war coin won by the minimizing player.
    MinChooses,
    /// Uniform-walk move to the successor with this digit.
    ToSuccessor(u8),
}

/// A player's move rule on coin wins: pick a successor digit.
pub trait Strategy {
    fn choose(&mut self, node: &NodeId, board: usize, maximizing: bool) -> Result<u8>;
}

/// Plays toward the best successor of a solved field: argmax for the
/// maximizing player, argmin for the minimizing one, smallest digit on ties.
pub struct GreedyStrategy<'a> {
    field: &'a SolutionField,
}

pub fn greedy_strategy(field: &SolutionField) -> GreedyStrategy<'_> {
    GreedyStrategy { field }
}

impl Strategy for GreedyStrategy<'_> {
    fn choose(&mut self, node: &NodeId, board: usize, maximizing: bool) -> Result<u8> {
        let m = self.field.m();
        let level = node.level();
        if board == 0 || board > self.field.component_count() {
            return Err(Error::OutOfDomain(format!("board {board} out of range")));
        }
        if level + 1 > self.field.depth() {
            return Err(Error::OutOfDomain(format!(
                "node {node} has no successors inside the depth-{} field",
                self.field.depth()
            )));
        }
        let flat = node.flat_index(m as u32)? as usize;
        let mut best_digit = 0u8;
        let mut best = self.field.value_flat(board - 1, level + 1, m * flat);
        for d in 1..m {
            let v = self.field.value_flat(board - 1, level + 1, m * flat + d);
            if (maximizing && v > best) || (!maximizing && v < best) {
                best = v;
                best_digit = d as u8;
            }
        }
        Ok(best_digit)
    }
}

/// Finished episode: terminal payoff, length, final state, and the visited
/// states when tracing was requested (start state first).
#[derive(Clone, Debug)]
pub struct Episode {
    pub payoff: f64,
    pub steps: u64,
    pub terminal: GameState,
    pub trace: Vec<GameState>,
}

/// Monte Carlo summary against the solver value at the start state.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ValueEstimate {
    pub mean: f64,
    /// Sample standard deviation over sqrt(episodes); 0 for one episode.
    pub stderr: f64,
    pub episodes: u64,
    pub seed: u64,
    pub solver_value: f64,
    /// `(mean - solver_value) / stderr`, 0 when stderr vanishes.
    pub z_score: f64,
}

/// Transition tables of the depth-L game for one system.
pub struct GameDynamics<'a> {
    config: &'a SystemConfig,
    compiled: CompiledLevels,
    depth: usize,
    mechanisms: Vec<BoardMechanism>,
    /// Episode abort threshold, [`STEP_CAP`] unless lowered.
    pub step_cap: u64,
}

impl<'a> GameDynamics<'a> {
    pub fn new(config: &'a SystemConfig, depth: usize) -> Result<Self> {
        let compiled = CompiledLevels::compile(config, depth)?;
        let mechanisms = config
            .components
            .iter()
            .map(|c| BoardMechanism::for_operator(c.operator.kind()))
            .collect::<Result<Vec<_>>>()?;
        Ok(GameDynamics { config, compiled, depth, mechanisms, step_cap: STEP_CAP })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Mechanism of a 1-based board.
    pub fn mechanism(&self, board: usize) -> Result<BoardMechanism> {
        self.mechanisms
            .get(board.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::OutOfDomain(format!("board {board} out of range")))
    }

    fn check_state(&self, state: &GameState) -> Result<()> {
        if state.board == 0 || state.board > self.config.component_count() {
            return Err(Error::OutOfDomain(format!("board {} out of range", state.board)));
        }
        state.node.validate(self.config.m as u32)?;
        if state.node.level() > self.depth {
            return Err(Error::OutOfDomain(format!(
                "node {} lies below the truncation depth {}",
                state.node, self.depth
            )));
        }
        Ok(())
    }

    /// Exact outcome distribution of one turn. Zero-probability outcomes are
    /// omitted; the rest sum to 1 within rounding. Terminal states have no
    /// turn and are rejected.
    pub fn step_distribution(&self, state: &GameState) -> Result<Vec<(StepOutcome, f64)>> {
        self.check_state(state)?;
        let level = state.node.level();
        if level >= self.depth {
            return Err(Error::OutOfDomain(format!(
                "state at level {level} is terminal in the depth-{} game",
                self.depth
            )));
        }
        let i = state.board - 1;
        let mut outcomes = Vec::new();
        for j in 0..self.config.component_count() {
            let p = self.compiled.coupling[i][j][level];
            if p > 0.0 {
                outcomes.push((StepOutcome::SwitchBoard(j + 1), p));
            }
        }
        let remain = 1.0 - self.compiled.coupling_total[i][level];
        let beta = self.compiled.beta[i][level];
        let to_predecessor = remain * beta;
        if to_predecessor > 0.0 {
            outcomes.push((StepOutcome::ToPredecessor, to_predecessor));
        }
        let play = remain * (1.0 - beta);
        if play > 0.0 {
            match self.mechanisms[i] {
                BoardMechanism::TugOfWar => {
                    outcomes.push((StepOutcome::MaxChooses, play / 2.0));
                    outcomes.push((StepOutcome::MinChooses, play / 2.0));
                }
                BoardMechanism::UniformWalk => {
                    let share = play / self.config.m as f64;
                    for d in 0..self.config.m {
                        outcomes.push((StepOutcome::ToSuccessor(d as u8), share));
                    }
                }
            }
        }
        Ok(outcomes)
    }

    fn apply(
        &self,
        mut state: GameState,
        outcome: StepOutcome,
        strategy: &mut dyn Strategy,
    ) -> Result<GameState> {
        match outcome {
            StepOutcome::SwitchBoard(j) => state.board = j,
            StepOutcome::ToPredecessor => state.node = state.node.predecessor()?,
            StepOutcome::MaxChooses | StepOutcome::MinChooses => {
                let maximizing = outcome == StepOutcome::MaxChooses;
                let d = strategy.choose(&state.node, state.board, maximizing)?;
                if d as usize >= self.config.m {
                    return Err(Error::OutOfDomain(format!(
                        "strategy chose digit {d} on an arity-{} tree",
                        self.config.m
                    )));
                }
                state.node = state.node.child(d);
            }
            StepOutcome::ToSuccessor(d) => state.node = state.node.child(d),
        }
        state.step += 1;
        Ok(state)
    }

    /// Plays one episode to level L and returns the terminal payoff.
    pub fn run_episode(
        &self,
        boundary: &BoundaryData,
        start: &GameState,
        strategy: &mut dyn Strategy,
        rng: &mut ChaCha8Rng,
        want_trace: bool,
    ) -> Result<Episode> {
        self.check_state(start)?;
        if boundary.component_count() != self.config.component_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} boundary components for {} boards",
                boundary.component_count(),
                self.config.component_count()
            )));
        }
        let mut state = start.clone();
        let mut trace = if want_trace { vec![state.clone()] } else { Vec::new() };
        while state.node.level() < self.depth {
            if state.step >= self.step_cap {
                return Err(Error::RunawayEpisode(state.step));
            }
            let outcomes = self.step_distribution(&state)?;
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = outcomes[outcomes.len() - 1].0;
            for &(outcome, prob) in &outcomes {
                acc += prob;
                if u < acc {
                    chosen = outcome;
                    break;
                }
            }
            state = self.apply(state, chosen, strategy)?;
            if want_trace {
                trace.push(state.clone());
            }
        }
        let t = state.node.psi(self.config.m as u32)?;
        let payoff = boundary.eval(state.board - 1, t);
        Ok(Episode { payoff, steps: state.step, terminal: state, trace })
    }
}

/// One traced episode from a fresh seed, playing both coin roles greedily
/// against the solved depth-L field.
pub fn simulate_episode(
    config: &SystemConfig,
    boundary: &BoundaryData,
    start: &GameState,
    strategy: &mut dyn Strategy,
    depth: usize,
    seed: u64,
) -> Result<(f64, Vec<GameState>)> {
    let dynamics = GameDynamics::new(config, depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let episode = dynamics.run_episode(boundary, start, strategy, &mut rng, true)?;
    Ok((episode.payoff, episode.trace))
}

fn solve_for_game(
    config: &SystemConfig,
    boundary: &BoundaryData,
    depth: usize,
) -> Result<SolutionField> {
    if config.is_directed() {
        solve_directed_exact(config, boundary, depth)
    } else {
        solve_fixed_point(config, boundary, depth, &FixedPointOptions::default())
    }
}

/// Runs `episodes` greedy-vs-greedy episodes and compares their mean payoff
/// with the solver value at the start state.
///
/// Episode e draws from stream e of a ChaCha generator keyed by `seed`, and
/// payoffs accumulate in episode order, so the estimate is bitwise
/// reproducible for a fixed seed and episode count.
pub fn estimate_value(
    config: &SystemConfig,
    boundary: &BoundaryData,
    start: &GameState,
    depth: usize,
    episodes: u64,
    seed: u64,
) -> Result<ValueEstimate> {
    if episodes == 0 {
        return Err(Error::Precondition("at least one episode required".into()));
    }
    let dynamics = GameDynamics::new(config, depth)?;
    dynamics.check_state(start)?;
    let field = solve_for_game(config, boundary, depth)?;
    let solver_value = field.value(start.board - 1, &start.node)?;
    let mut payoffs = Vec::with_capacity(episodes as usize);
    for e in 0..episodes {
        let mut strategy = greedy_strategy(&field);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(e);
        let episode = dynamics.run_episode(boundary, start, &mut strategy, &mut rng, false)?;
        payoffs.push(episode.payoff);
    }
    let n = episodes as f64;
    let mean = payoffs.iter().sum::<f64>() / n;
    let stderr = if episodes > 1 {
        let var = payoffs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let z_score = if stderr > 0.0 { (mean - solver_value) / stderr } else { 0.0 };
    Ok(ValueEstimate { mean, stderr, episodes, seed, solver_value, z_score })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::AveragingOperator;
    use crate::coefficients::{CoefficientSchedule, ScheduleFamily};
    use crate::solver::{BoundarySpec, ComponentConfig};

    fn schedule(c: f64) -> CoefficientSchedule {
        CoefficientSchedule::constant(c).unwrap()
    }

    fn two_boards(
        kinds: [OperatorKind; 2],
        beta: f64,
        p: CoefficientSchedule,
        q: CoefficientSchedule,
    ) -> SystemConfig {
        SystemConfig::new(
            2,
            vec![
                ComponentConfig {
                    operator: AveragingOperator::new(kinds[0], 2).unwrap(),
                    beta: schedule(beta),
                },
                ComponentConfig {
                    operator: AveragingOperator::new(kinds[1], 2).unwrap(),
                    beta: schedule(beta),
                },
            ],
            vec![vec![schedule(0.0), p], vec![q, schedule(0.0)]],
        )
        .unwrap()
    }

    fn demo_game() -> SystemConfig {
        let p = CoefficientSchedule::new(ScheduleFamily::Geometric { c: 0.5, ratio: 0.5 }).unwrap();
        two_boards([OperatorKind::Midrange, OperatorKind::Mean], 0.0, p.clone(), p)
    }

    #[test]
    fn uniform_board_spreads_the_play_mass_evenly() {
        let config = two_boards([OperatorKind::Mean, OperatorKind::Mean], 0.0, schedule(0.0), schedule(0.0));
        let dynamics = GameDynamics::new(&config, 4).unwrap();
        let dist = dynamics
            .step_distribution(&GameState::start(NodeId::root(), 2))
            .unwrap();
        assert_eq!(
            dist,
            vec![
                (StepOutcome::ToSuccessor(0), 0.5),
                (StepOutcome::ToSuccessor(1), 0.5),
            ]
        );
    }

    #[test]
    fn full_coupling_forces_the_jump() {
        let config = two_boards(
            [OperatorKind::Mean, OperatorKind::Mean],
            0.5,
            schedule(1.0),
            schedule(0.25),
        );
        let dynamics = GameDynamics::new(&config, 4).unwrap();
        let node: NodeId = "0.1".parse().unwrap();
        let dist = dynamics.step_distribution(&GameState::start(node, 1)).unwrap();
        assert_eq!(dist, vec![(StepOutcome::SwitchBoard(2), 1.0)]);
    }

    #[test]
    fn root_has_no_predecessor_outcome() {
        let config = demo_game();
        let with_beta = two_boards(
            [OperatorKind::Midrange, OperatorKind::Mean],
            0.5,
            schedule(0.25),
            schedule(0.25),
        );
        for cfg in [&config, &with_beta] {
            let dynamics = GameDynamics::new(cfg, 4).unwrap();
            let dist = dynamics
                .step_distribution(&GameState::start(NodeId::root(), 1))
                .unwrap();
            assert!(dist.iter().all(|(o, _)| *o != StepOutcome::ToPredecessor));
        }
        // Away from the root the predecessor move carries (1-P) * beta.
        let dynamics = GameDynamics::new(&with_beta, 4).unwrap();
        let node: NodeId = "1".parse().unwrap();
        let dist = dynamics.step_distribution(&GameState::start(node, 1)).unwrap();
        let pred = dist
            .iter()
            .find(|(o, _)| *o == StepOutcome::ToPredecessor)
            .map(|(_, p)| *p)
            .unwrap();
        assert!((pred - 0.75 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn distributions_sum_to_one_everywhere() {
        let p = CoefficientSchedule::new(ScheduleFamily::Geometric { c: 0.4, ratio: 0.7 }).unwrap();
        let q = CoefficientSchedule::new(ScheduleFamily::PowerLaw { c: 0.3, s: 1.5 }).unwrap();
        let config = two_boards([OperatorKind::Midrange, OperatorKind::Mean], 0.35, p, q);
        let dynamics = GameDynamics::new(&config, 6).unwrap();
        for level in 0..6 {
            let node = NodeId::from_flat(level, 0, 2);
            for board in 1..=2 {
                let dist = dynamics.step_distribution(&GameState::start(node.clone(), board)).unwrap();
                let total: f64 = dist.iter().map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() <= 1e-15, "level {level} board {board}: {total}");
                assert!(dist.iter().all(|(_, p)| *p > 0.0));
            }
        }
        let terminal = NodeId::from_flat(6, 3, 2);
        assert!(dynamics.step_distribution(&GameState::start(terminal, 1)).is_err());
    }

    #[test]
    fn median_boards_have_no_game_reading() {
        let kind = OperatorKind::MedianMean { alpha: 0.5 };
        assert!(matches!(BoardMechanism::for_operator(kind), Err(Error::Precondition(_))));
    }

    #[test]
    fn constant_boundaries_pay_the_constant_every_time() {
        let config = demo_game();
        let boundary = BoundaryData::constant_all(2, 3.0).unwrap();
        let field = solve_for_game(&config, &boundary, 6).unwrap();
        for seed in 0..20 {
            let mut strategy = greedy_strategy(&field);
            let (payoff, trace) = simulate_episode(
                &config,
                &boundary,
                &GameState::start(NodeId::root(), 1),
                &mut strategy,
                6,
                seed,
            )
            .unwrap();
            assert_eq!(payoff, 3.0);
            assert_eq!(trace.last().unwrap().node.level(), 6);
            assert!(trace.iter().all(|s| s.node.level() <= 6));
            // Steps count every transition exactly once.
            for (idx, s) in trace.iter().enumerate() {
                assert_eq!(s.step, idx as u64);
            }
        }
    }

    #[test]
    fn pure_uniform_walk_matches_the_solver_mean() {
        // No coupling, no predecessor steps: board 2 is a plain random walk
        // down the tree, and the identity boundary makes the value the mean
        // of the leaf positions, 1/2 up to the leaf-grid offset.
        let config = two_boards([OperatorKind::Mean, OperatorKind::Mean], 0.0, schedule(0.0), schedule(0.0));
        let boundary = BoundaryData::new(vec![BoundarySpec::identity(), BoundarySpec::identity()]).unwrap();
        let start = GameState::start(NodeId::root(), 2);
        let est = estimate_value(&config, &boundary, &start, 10, 20_000, 7).unwrap();
        assert!((est.solver_value - 0.5).abs() < 1e-3);
        assert!(
            (est.mean - est.solver_value).abs() <= 4.0 * est.stderr,
            "mean {} vs solver {} (stderr {})",
            est.mean,
            est.solver_value,
            est.stderr
        );
        assert!(est.z_score.abs() <= 4.0);
    }

    #[test]
    fn single_step_game_lands_on_a_successor_value() {
        let config = two_boards(
            [OperatorKind::Midrange, OperatorKind::Mean],
            0.0,
            schedule(0.0),
            schedule(0.0),
        );
        let boundary = BoundaryData::new(vec![BoundarySpec::identity(), BoundarySpec::identity()]).unwrap();
        let field = solve_for_game(&config, &boundary, 1).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..50 {
            let mut strategy = greedy_strategy(&field);
            let (payoff, trace) = simulate_episode(
                &config,
                &boundary,
                &GameState::start(NodeId::root(), 1),
                &mut strategy,
                1,
                seed,
            )
            .unwrap();
            assert_eq!(trace.len(), 2);
            assert!(payoff == 0.0 || payoff == 0.5, "payoff {payoff}");
            seen.insert(payoff.to_bits());
        }
        // Both coin outcomes show up across 50 seeds.
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn estimates_are_bitwise_reproducible() {
        let config = demo_game();
        let boundary = BoundaryData::new(vec![
            BoundarySpec::Constant { c: 0.0 },
            BoundarySpec::Constant { c: 1.0 },
        ])
        .unwrap();
        let start = GameState::start(NodeId::root(), 1);
        let a = estimate_value(&config, &boundary, &start, 8, 2_000, 42).unwrap();
        let b = estimate_value(&config, &boundary, &start, 8, 2_000, 42).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let c = estimate_value(&config, &boundary, &start, 8, 2_000, 43).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());
    }

    #[test]
    fn bad_minimizer_cannot_depress_the_value() {
        // A "minimizer" that plays the maximizer's move hands value away, so
        // the episode mean must not fall below the solver value by more than
        // noise. One-sided statistical check.
        struct MaxBoth<'a>(GreedyStrategy<'a>);
        impl Strategy for MaxBoth<'_> {
            fn choose(&mut self, node: &NodeId, board: usize, _maximizing: bool) -> Result<u8> {
                self.0.choose(node, board, true)
            }
        }
        let config = demo_game();
        let boundary = BoundaryData::new(vec![
            BoundarySpec::identity(),
            BoundarySpec::Constant { c: 0.5 },
        ])
        .unwrap();
        let depth = 8;
        let dynamics = GameDynamics::new(&config, depth).unwrap();
        let field = solve_for_game(&config, &boundary, depth).unwrap();
        let start = GameState::start(NodeId::root(), 1);
        let episodes = 100_000u64;
        let mut payoffs = Vec::with_capacity(episodes as usize);
        for e in 0..episodes {
            let mut strategy = MaxBoth(greedy_strategy(&field));
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            rng.set_stream(e);
            let episode = dynamics
                .run_episode(&boundary, &start, &mut strategy, &mut rng, false)
                .unwrap();
            payoffs.push(episode.payoff);
        }
        let n = episodes as f64;
        let mean = payoffs.iter().sum::<f64>() / n;
        let var = payoffs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let stderr = (var / n).sqrt();
        let solver_value = field.root_value(0);
        assert!(
            mean >= solver_value - 4.0 * stderr,
            "mean {mean} fell below solver value {solver_value} (stderr {stderr})"
        );
    }

    #[test]
    fn step_cap_aborts_runaway_episodes() {
        // Mean boards never consult the strategy, so no solved field is
        // needed; depth 25 is unreachable within the lowered cap.
        struct NeverCalled;
        impl Strategy for NeverCalled {
            fn choose(&mut self, _: &NodeId, _: usize, _: bool) -> Result<u8> {
                unreachable!("uniform-walk boards resolve moves without a strategy")
            }
        }
        let config = two_boards(
            [OperatorKind::Mean, OperatorKind::Mean],
            0.9,
            schedule(0.0),
            schedule(0.0),
        );
        let boundary = BoundaryData::constant_all(2, 0.0).unwrap();
        let mut dynamics = GameDynamics::new(&config, 25).unwrap();
        dynamics.step_cap = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = dynamics
            .run_episode(&boundary, &GameState::start(NodeId::root(), 1), &mut NeverCalled, &mut rng, false)
            .unwrap_err();
        assert!(matches!(err, Error::RunawayEpisode(_)));
    }
}
