//! Head-to-head match harness: fixed-iteration agents, side swapping,
//! tree reuse on both sides, score ratio with a 95% Wald interval.
//!
//! Games are paired: game k and game k + n/2 share one seed pair with
//! the roles swapped, and each role's RNG stream is keyed by (pair,
//! role, that agent's own seed). Swapping the two agents therefore
//! reproduces the same set of games with colours reversed, which makes
//! the anti-symmetry p' = 1 - p exact.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::games::{GameId, GameState, Outcome, Player, TilePermutation};
use crate::mcts::{MctsAgent, SearchError, DEFAULT_EXPLORATION_C};
use crate::mix_seed;
use crate::neural::{io, NetEvaluator, NeuralError, ValueNet};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("game count must be even (half the games per side)")]
    OddGameCount,
    #[error("failed to load model: {0}")]
    ModelLoadFailure(NeuralError),
    #[error("model does not fit the game: {0}")]
    ModelMismatch(NeuralError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// What kind of player an evaluation agent is.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    /// Plain UCT with random-playout leaf evaluation.
    UctPlayout,
    /// UCT with value-network leaf evaluation; holds the model path.
    UctValue(PathBuf),
}

#[derive(Clone, Debug, Serialize)]
pub struct AgentSpec {
    pub kind: AgentKind,
    pub iterations: u32,
    pub exploration_c: f64,
    pub seed: u64,
}

impl AgentSpec {
    pub fn uct(iterations: u32) -> AgentSpec {
        AgentSpec {
            kind: AgentKind::UctPlayout,
            iterations,
            exploration_c: DEFAULT_EXPLORATION_C,
            seed: 0,
        }
    }

    pub fn value_net(model: impl Into<PathBuf>, iterations: u32) -> AgentSpec {
        AgentSpec {
            kind: AgentKind::UctValue(model.into()),
            iterations,
            exploration_c: DEFAULT_EXPLORATION_C,
            seed: 0,
        }
    }
}

/// Aggregate match outcome from agent A's perspective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatchResult {
    pub games_total: u64,
    pub wins: u64,
    pub draws: u64,
    pub losses: u64,
    /// Score ratio p = (wins + draws/2) / n.
    pub score: f64,
    /// Wald 95% half-width on p.
    pub ci95: f64,
}

impl MatchResult {
    pub fn from_counts(wins: u64, draws: u64, losses: u64) -> MatchResult {
        let n = wins + draws + losses;
        let score = if n == 0 {
            0.0
        } else {
            (wins as f64 + 0.5 * draws as f64) / n as f64
        };
        MatchResult {
            games_total: n,
            wins,
            draws,
            losses,
            score,
            ci95: ci95(score, n.max(1)),
        }
    }

    /// The same match seen from agent B's side.
    pub fn flipped(&self) -> MatchResult {
        MatchResult::from_counts(self.losses, self.draws, self.wins)
    }

    /// "74% ±4.3" style rendering: integer percent, interval to one
    /// decimal in percentage points.
    pub fn format_score(&self) -> String {
        format!("{:.0}% ±{:.1}", self.score * 100.0, self.ci95 * 100.0)
    }
}

/// Wald 95% half-width: 1.96 * sqrt(p (1 - p) / n).
pub fn ci95(p: f64, n: u64) -> f64 {
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

enum LoadedKind<'a> {
    Playout,
    Value(&'a ValueNet<f32>),
}

struct Prepared<'a> {
    kind: LoadedKind<'a>,
    iterations: u32,
    exploration_c: f64,
    seed: u64,
}

impl<'a> Prepared<'a> {
    fn agent(
        &self,
        game: GameId,
        stream: u64,
        permutation: Option<&TilePermutation>,
    ) -> Result<MctsAgent<'a>, EvalError> {
        let initial = GameState::initial(game);
        let stream = mix_seed(stream, self.seed);
        Ok(match self.kind {
            LoadedKind::Playout => {
                MctsAgent::playout(initial, self.iterations, self.exploration_c, stream)
            }
            LoadedKind::Value(net) => {
                let eval = NetEvaluator::new(net, &game.spec(), permutation.cloned())
                    .map_err(EvalError::ModelMismatch)?;
                MctsAgent::with_evaluator(
                    initial,
                    self.iterations,
                    self.exploration_c,
                    stream,
                    Box::new(eval),
                )
            }
        })
    }
}

/// Plays one game; `first` moves as P1. Returns the terminal outcome.
fn play_one<'a>(mut first: MctsAgent<'a>, mut second: MctsAgent<'a>) -> Result<Outcome, EvalError> {
    let mut state = GameState::initial(first.tree().root_state().id());
    while !state.is_terminal() {
        let agent = match state.to_move() {
            Player::P1 => &mut first,
            Player::P2 => &mut second,
        };
        agent.search()?;
        let mv = agent.best_move()?;
        first.observe(mv)?;
        second.observe(mv)?;
        state = state.apply_move(mv).map_err(|e| {
            SearchError::IllegalMove(match e {
                crate::games::GameError::IllegalMove(id) => id,
                _ => u32::MAX,
            })
        })?;
    }
    Ok(state.terminal_payoff().expect("terminal"))
}

/// Runs an n-game match, A playing first in the first half. Obfuscation
/// applies to value-network agents' encodings only. Deterministic for
/// fixed seeds, independent of the worker count.
pub fn play_match(
    game: GameId,
    agent_a: &AgentSpec,
    agent_b: &AgentSpec,
    n_games: u64,
    base_seed: u64,
    obfuscation_seed: Option<u64>,
    workers: usize,
) -> Result<MatchResult, EvalError> {
    if n_games == 0 || !n_games.is_multiple_of(2) {
        return Err(EvalError::OddGameCount);
    }
    let spec = game.spec();
    let permutation = obfuscation_seed.map(|s| TilePermutation::random(spec.tile_count, s));

    let net_a = load_net(agent_a)?;
    let net_b = load_net(agent_b)?;
    let prep_a = prepare(agent_a, net_a.as_ref());
    let prep_b = prepare(agent_b, net_b.as_ref());

    let half = n_games / 2;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("worker pool");
    let scores: Result<Vec<f64>, EvalError> = pool.install(|| {
        (0..n_games)
            .into_par_iter()
            .map(|g| {
                let pair = g % half;
                let a_first = g < half;
                let first_stream = mix_seed(base_seed.wrapping_add(pair), 0);
                let second_stream = mix_seed(base_seed.wrapping_add(pair), 1);
                let (first, second) = if a_first {
                    (&prep_a, &prep_b)
                } else {
                    (&prep_b, &prep_a)
                };
                let first_agent = first.agent(game, first_stream, permutation.as_ref())?;
                let second_agent = second.agent(game, second_stream, permutation.as_ref())?;
                let outcome = play_one(first_agent, second_agent)?;
                let a_side = if a_first { Player::P1 } else { Player::P2 };
                Ok(outcome.score_for(a_side))
            })
            .collect()
    });
    let scores = scores?;
    let (mut wins, mut draws, mut losses) = (0u64, 0u64, 0u64);
    for s in scores {
        if s > 0.0 {
            wins += 1;
        } else if s < 0.0 {
            losses += 1;
        } else {
            draws += 1;
        }
    }
    Ok(MatchResult::from_counts(wins, draws, losses))
}

fn load_net(spec: &AgentSpec) -> Result<Option<ValueNet<f32>>, EvalError> {
    match &spec.kind {
        AgentKind::UctPlayout => Ok(None),
        AgentKind::UctValue(path) => Ok(Some(
            io::load_model(path).map_err(EvalError::ModelLoadFailure)?,
        )),
    }
}

fn prepare<'a>(spec: &AgentSpec, net: Option<&'a ValueNet<f32>>) -> Prepared<'a> {
    Prepared {
        kind: match net {
            Some(n) => LoadedKind::Value(n),
            None => LoadedKind::Playout,
        },
        iterations: spec.iterations,
        exploration_c: spec.exploration_c,
        seed: spec.seed,
    }
}

/// One labelled pairing in a report.
#[derive(Clone, Debug, Serialize)]
pub struct ReportEntry {
    pub label: String,
    pub game: String,
    pub agent_a: AgentSpec,
    pub agent_b: AgentSpec,
    pub wins: u64,
    pub draws: u64,
    pub losses: u64,
    pub n: u64,
    pub p: f64,
    pub ci95: f64,
}

impl ReportEntry {
    pub fn new(
        label: impl Into<String>,
        game: GameId,
        agent_a: &AgentSpec,
        agent_b: &AgentSpec,
        result: &MatchResult,
    ) -> ReportEntry {
        ReportEntry {
            label: label.into(),
            game: game.to_string(),
            agent_a: agent_a.clone(),
            agent_b: agent_b.clone(),
            wins: result.wins,
            draws: result.draws,
            losses: result.losses,
            n: result.games_total,
            p: result.score,
            ci95: result.ci95,
        }
    }

    fn result(&self) -> MatchResult {
        MatchResult::from_counts(self.wins, self.draws, self.losses)
    }
}

/// Plain-text table plus line-delimited JSON records.
pub fn report(entries: &[ReportEntry]) -> (String, String) {
    let label_width = entries
        .iter()
        .map(|e| e.label.len())
        .chain([5])
        .max()
        .unwrap();
    let mut text = format!("{:<label_width$}  {:>12}  {:>6}\n", "label", "score", "n");
    for e in entries {
        text.push_str(&format!(
            "{:<label_width$}  {:>12}  {:>6}\n",
            e.label,
            e.result().format_score(),
            e.n
        ));
    }
    let jsonl = entries
        .iter()
        .map(|e| serde_json::to_string(e).expect("serializable"))
        .map(|line| line + "\n")
        .collect();
    (text, jsonl)
}
