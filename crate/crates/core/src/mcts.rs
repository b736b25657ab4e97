//! UCT Monte Carlo tree search with subtree reuse.
//!
//! Leaf evaluation runs in one of two modes: a uniformly random playout
//! (the baseline agent) or a single value-network forward pass. Values
//! are kept on a [0, 1] scale; a child edge stores statistics from the
//! perspective of the player to move at the edge's parent.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::games::{GameState, Move, Outcome, Player};
use crate::mix_seed;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("search requires a non-terminal root state")]
    NonTerminalRequired,
    #[error("eval_mode is value_net but no evaluator was supplied")]
    EvaluatorMissing,
    #[error("tree has no visited children")]
    EmptyTree,
    #[error("move {0} is not legal at the search root")]
    IllegalMove(u32),
}

/// Leaf evaluation mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// Uniformly random playout to a terminal state.
    Playout,
    /// One forward pass of a value network.
    ValueNet,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub iterations: u32,
    pub exploration_c: f64,
    pub eval_mode: EvalMode,
    pub rng_seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iterations: 600,
            exploration_c: DEFAULT_EXPLORATION_C,
            eval_mode: EvalMode::Playout,
            rng_seed: 0,
        }
    }
}

/// Exploration constant on the [0, 1] reward scale, shared by both
/// evaluation modes.
pub const DEFAULT_EXPLORATION_C: f64 = 1.414;

/// Per-node (equivalently per-incoming-edge) search statistics.
#[derive(Clone, Debug, Default)]
pub struct NodeStats {
    visits: u64,
    total_value: f64,
    evaluations: u64,
    children: Option<Box<[(Move, NodeStats)]>>,
}

impl NodeStats {
    #[inline]
    pub fn visits(&self) -> u64 {
        self.visits
    }

    #[inline]
    pub fn total_value(&self) -> f64 {
        self.total_value
    }

    /// Mean value Q = W / n; 0 when unvisited.
    #[inline]
    pub fn mean_value(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.total_value / self.visits as f64
        }
    }

    /// Number of leaf evaluations performed at this node.
    #[inline]
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn children(&self) -> &[(Move, NodeStats)] {
        self.children.as_deref().unwrap_or(&[])
    }

    /// Verifies visit conservation over the whole subtree: at every
    /// node, n equals the children's visit sum plus the evaluations
    /// performed at the node itself.
    pub fn visits_conserved(&self) -> bool {
        let child_sum: u64 = self.children().iter().map(|(_, c)| c.visits).sum();
        child_sum + self.evaluations == self.visits
            && self.children().iter().all(|(_, c)| c.visits_conserved())
    }

    /// All Q values in the subtree lie in [0, 1].
    pub fn values_in_range(&self) -> bool {
        let q = self.mean_value();
        (0.0..=1.0).contains(&q) && self.children().iter().all(|(_, c)| c.values_in_range())
    }
}

/// A search tree rooted at a concrete position.
#[derive(Clone, Debug)]
pub struct SearchTree {
    root: NodeStats,
    root_state: GameState,
}

impl SearchTree {
    pub fn new(root_state: GameState) -> SearchTree {
        SearchTree {
            root: NodeStats::default(),
            root_state,
        }
    }

    #[inline]
    pub fn root(&self) -> &NodeStats {
        &self.root
    }

    #[inline]
    pub fn root_state(&self) -> &GameState {
        &self.root_state
    }
}

/// Evaluates a position for the player to move there, returning a value
/// in (-1, 1). Implemented by the value networks; test doubles are a
/// few lines.
pub trait LeafEvaluator {
    fn evaluate(&mut self, state: &GameState) -> f64;
}

/// UCT selection score for one child edge: +inf while unvisited, else
/// Q + c * sqrt(ln N / n).
#[inline]
pub fn uct_score(parent_visits: u64, child: &NodeStats, c: f64) -> f64 {
    if child.visits == 0 {
        return f64::INFINITY;
    }
    let n = child.visits as f64;
    child.total_value / n + c * ((parent_visits as f64).ln() / n).sqrt()
}

/// Terminal payoff seen from `mover`, mapped onto [0, 1].
#[inline]
fn mover_value(outcome: Outcome, mover: Player) -> f64 {
    (outcome.score_for(mover) + 1.0) / 2.0
}

fn select_child(children: &[(Move, NodeStats)], parent_visits: u64, c: f64) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, (_, child)) in children.iter().enumerate() {
        let score = uct_score(parent_visits, child, c);
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    best
}

fn evaluate_leaf(
    state: &GameState,
    mode: EvalMode,
    rng: &mut ChaCha8Rng,
    evaluator: &mut Option<&mut (dyn LeafEvaluator + '_)>,
) -> f64 {
    if let Some(outcome) = state.status().outcome() {
        return mover_value(outcome, state.to_move());
    }
    match mode {
        EvalMode::Playout => mover_value(state.random_playout_with(rng), state.to_move()),
        EvalMode::ValueNet => {
            let v = evaluator
                .as_mut()
                .expect("checked by run_search")
                .evaluate(state);
            (v + 1.0) / 2.0
        }
    }
}

/// One select -> expand -> evaluate -> backpropagate pass below `node`.
/// Returns the backed-up value from the perspective of `state.to_move()`;
/// the caller adds it to `node`'s own statistics.
fn step(
    node: &mut NodeStats,
    state: &GameState,
    cfg: &SearchConfig,
    rng: &mut ChaCha8Rng,
    evaluator: &mut Option<&mut (dyn LeafEvaluator + '_)>,
    moves_buf: &mut Vec<Move>,
) -> f64 {
    if let Some(outcome) = state.status().outcome() {
        node.evaluations += 1;
        return mover_value(outcome, state.to_move());
    }
    if node.children.is_none() {
        state.legal_moves_into(moves_buf);
        node.children = Some(
            moves_buf
                .iter()
                .map(|&mv| (mv, NodeStats::default()))
                .collect::<Vec<_>>()
                .into(),
        );
    }
    let parent_mover = state.to_move();
    let parent_visits = node.visits.max(1);
    let children = node.children.as_mut().expect("materialized above");
    let idx = select_child(children, parent_visits, cfg.exploration_c);
    let (mv, child) = &mut children[idx];
    let next = state.apply_move(*mv).expect("tree edges hold legal moves");
    let x_child = if child.visits == 0 {
        child.evaluations += 1;
        evaluate_leaf(&next, cfg.eval_mode, rng, evaluator)
    } else {
        step(child, &next, cfg, rng, evaluator, moves_buf)
    };
    // Values flip to the parent's perspective when the mover changes.
    let x_parent = if next.to_move() == parent_mover {
        x_child
    } else {
        1.0 - x_child
    };
    child.visits += 1;
    child.total_value += x_parent;
    x_parent
}

/// Runs exactly `config.iterations` search iterations on `tree`.
/// Deterministic for a fixed seed and evaluator.
pub fn run_search(
    tree: &mut SearchTree,
    config: &SearchConfig,
    mut evaluator: Option<&mut (dyn LeafEvaluator + '_)>,
) -> Result<(), SearchError> {
    if tree.root_state.is_terminal() {
        return Err(SearchError::NonTerminalRequired);
    }
    if config.eval_mode == EvalMode::ValueNet && evaluator.is_none() {
        return Err(SearchError::EvaluatorMissing);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut moves_buf = Vec::with_capacity(64);
    let SearchTree { root, root_state } = tree;
    for _ in 0..config.iterations {
        let x = step(
            root,
            root_state,
            config,
            &mut rng,
            &mut evaluator,
            &mut moves_buf,
        );
        root.visits += 1;
        root.total_value += x;
    }
    Ok(())
}

/// Robust-child move selection: maximum visit count, ties broken by the
/// lowest move index.
pub fn best_move(tree: &SearchTree) -> Result<Move, SearchError> {
    let mut best: Option<(Move, u64)> = None;
    for (mv, child) in tree.root.children() {
        if child.visits == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((bm, bn)) => child.visits > bn || (child.visits == bn && *mv < bm),
        };
        if better {
            best = Some((*mv, child.visits));
        }
    }
    best.map(|(mv, _)| mv).ok_or(SearchError::EmptyTree)
}

/// Makes the subtree under `mv` the new root, keeping its statistics;
/// an unexplored move starts a fresh root.
pub fn advance_root(tree: &mut SearchTree, mv: Move) -> Result<(), SearchError> {
    let next_state = tree
        .root_state
        .apply_move(mv)
        .map_err(|_| SearchError::IllegalMove(mv.id()))?;
    let new_root = tree
        .root
        .children
        .as_mut()
        .and_then(|children| {
            children
                .iter_mut()
                .find(|(m, _)| *m == mv)
                .map(|(_, n)| std::mem::take(n))
        })
        .unwrap_or_default();
    tree.root = new_root;
    tree.root_state = next_state;
    Ok(())
}

/// A stateful player: a search tree plus a fixed per-move budget.
/// Survives across plies, reusing the subtree under each played move.
pub struct MctsAgent<'a> {
    tree: SearchTree,
    iterations: u32,
    exploration_c: f64,
    eval_mode: EvalMode,
    evaluator: Option<Box<dyn LeafEvaluator + 'a>>,
    stream_seed: u64,
}

impl<'a> MctsAgent<'a> {
    /// Playout-mode agent.
    pub fn playout(root: GameState, iterations: u32, exploration_c: f64, stream_seed: u64) -> Self {
        MctsAgent {
            tree: SearchTree::new(root),
            iterations,
            exploration_c,
            eval_mode: EvalMode::Playout,
            evaluator: None,
            stream_seed,
        }
    }

    /// Value-network agent.
    pub fn with_evaluator(
        root: GameState,
        iterations: u32,
        exploration_c: f64,
        stream_seed: u64,
        evaluator: Box<dyn LeafEvaluator + 'a>,
    ) -> Self {
        MctsAgent {
            tree: SearchTree::new(root),
            iterations,
            exploration_c,
            eval_mode: EvalMode::ValueNet,
            evaluator: Some(evaluator),
            stream_seed,
        }
    }

    pub fn tree(&self) -> &SearchTree {
        &self.tree
    }

    /// Searches the current root with a ply-keyed slice of this agent's
    /// seed stream.
    pub fn search(&mut self) -> Result<(), SearchError> {
        let config = SearchConfig {
            iterations: self.iterations,
            exploration_c: self.exploration_c,
            eval_mode: self.eval_mode,
            rng_seed: mix_seed(self.stream_seed, self.tree.root_state.ply() as u64),
        };
        run_search(&mut self.tree, &config, self.evaluator.as_deref_mut())
    }

    pub fn best_move(&self) -> Result<Move, SearchError> {
        best_move(&self.tree)
    }

    /// Samples a root move proportionally to visit counts; used for the
    /// opening temperature plies during data generation.
    pub fn sample_visit_proportional<R: Rng>(&self, rng: &mut R) -> Result<Move, SearchError> {
        let children = self.tree.root.children();
        let total: u64 = children.iter().map(|(_, c)| c.visits).sum();
        if total == 0 {
            return Err(SearchError::EmptyTree);
        }
        let mut ticket = rng.gen_range(0..total);
        for (mv, child) in children {
            if ticket < child.visits {
                return Ok(*mv);
            }
            ticket -= child.visits;
        }
        unreachable!("ticket < total")
    }

    /// Advances the root along `mv` (own move or opponent reply).
    pub fn observe(&mut self, mv: Move) -> Result<(), SearchError> {
        advance_root(&mut self.tree, mv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{tictactoe_position, GameId, Player};

    struct ConstEval(f64);
    impl LeafEvaluator for ConstEval {
        fn evaluate(&mut self, _state: &GameState) -> f64 {
            self.0
        }
    }

    fn searched_tree(state: GameState, iterations: u32, seed: u64) -> SearchTree {
        let mut tree = SearchTree::new(state);
        let config = SearchConfig {
            iterations,
            rng_seed: seed,
            ..SearchConfig::default()
        };
        run_search(&mut tree, &config, None).unwrap();
        tree
    }

    #[test]
    fn uct_score_matches_direct_arithmetic() {
        // Frozen oracle values: Q + c*sqrt(ln N / n) computed directly.
        let child = NodeStats {
            visits: 10,
            total_value: 5.0,
            ..NodeStats::default()
        };
        let got = uct_score(100, &child, 1.414);
        assert!((got - 1.4596).abs() < 1e-3, "got {got}");

        let strong = NodeStats {
            visits: 50,
            total_value: 45.0,
            ..NodeStats::default()
        };
        let weak = NodeStats {
            visits: 1,
            total_value: 0.2,
            ..NodeStats::default()
        };
        let s_strong = uct_score(51, &strong, 1.414);
        let s_weak = uct_score(51, &weak, 1.414);
        assert!((s_strong - 1.2965).abs() < 1e-3, "got {s_strong}");
        assert!((s_weak - 3.0038).abs() < 1e-3, "got {s_weak}");
        assert!(
            s_weak > s_strong,
            "selection must pick the rarely-tried child"
        );
    }

    #[test]
    fn best_move_prefers_visits_then_lowest_index() {
        let child = |n: u64| NodeStats { visits: n, total_value: 0.0, ..NodeStats::default() };
        let tree = SearchTree {
            root: NodeStats {
                visits: 600,
                total_value: 300.0,
                evaluations: 0,
                children: Some(Box::new([
                    (Move(0), child(10)),
                    (Move(1), child(300)),
                    (Move(2), child(290)),
                ])),
            },
            root_state: GameState::initial(GameId::TicTacToe),
        };
        assert_eq!(best_move(&tree).unwrap(), Move(1));

        let tie = SearchTree {
            root: NodeStats {
                visits: 300,
                total_value: 150.0,
                evaluations: 0,
                children: Some(Box::new([(Move(3), child(150)), (Move(7), child(150))])),
            },
            root_state: GameState::initial(GameId::TicTacToe),
        };
        assert_eq!(best_move(&tie).unwrap(), Move(3));

        let empty = SearchTree::new(GameState::initial(GameId::TicTacToe));
        assert_eq!(best_move(&empty), Err(SearchError::EmptyTree));
    }

    #[test]
    fn unvisited_child_scores_infinite() {
        let child = NodeStats::default();
        assert_eq!(uct_score(100, &child, 1.414), f64::INFINITY);
    }

    #[test]
    fn single_legal_move_absorbs_all_visits() {
        // X has played everywhere except one cell pair; craft a position
        // with exactly one empty cell.
        let state = tictactoe_position("XOXXOO.XO", Player::P1);
        let tree = searched_tree(state, 500, 7);
        let children = tree.root().children();
        assert_eq!(children.len(), 1);
        assert_eq!(children[0].1.visits(), 500);
        assert_eq!(best_move(&tree).unwrap(), children[0].0);
    }

    #[test]
    fn search_rejects_terminal_root_and_missing_evaluator() {
        let terminal = tictactoe_position("XXXOO....", Player::P2);
        let mut tree = SearchTree::new(terminal);
        assert_eq!(
            run_search(&mut tree, &SearchConfig::default(), None),
            Err(SearchError::NonTerminalRequired)
        );

        let mut tree = SearchTree::new(GameState::initial(GameId::TicTacToe));
        let config = SearchConfig {
            eval_mode: EvalMode::ValueNet,
            ..SearchConfig::default()
        };
        assert_eq!(
            run_search(&mut tree, &config, None),
            Err(SearchError::EvaluatorMissing)
        );
    }

    #[test]
    fn blocks_immediate_threat() {
        // X threatens a1-b1-c1; O to move must block at c1 (tile 2).
        let state = tictactoe_position("XX..O....", Player::P2);
        let tree = searched_tree(state, 20_000, 3);
        assert_eq!(best_move(&tree).unwrap(), Move(2));
        assert!(tree.root().visits_conserved());
        assert!(tree.root().values_in_range());
    }

    #[test]
    fn two_ply_forced_line_prefers_the_win() {
        // O to move with two open cells. Tile 4 completes O's diagonal;
        // tile 1 hands X the 2-4-6 diagonal on the reply. A perspective
        // bug makes the losing branch look winning, and the index
        // tie-break would then pick tile 1.
        let state = tictactoe_position("O.XX.OXXO", Player::P2);
        let tree = searched_tree(state, 400, 11);
        assert_eq!(best_move(&tree).unwrap(), Move(4));
        let q4 = tree
            .root()
            .children()
            .iter()
            .find(|(m, _)| *m == Move(4))
            .unwrap()
            .1
            .mean_value();
        let q1 = tree
            .root()
            .children()
            .iter()
            .find(|(m, _)| *m == Move(1))
            .unwrap()
            .1
            .mean_value();
        assert!(q4 > 0.95, "winning move Q, got {q4}");
        assert!(q1 < 0.2, "losing move Q, got {q1}");
    }

    #[test]
    fn constant_evaluator_spreads_visits_uniformly() {
        let mut tree = SearchTree::new(GameState::initial(GameId::TicTacToe));
        let config = SearchConfig {
            iterations: 9 * 40,
            eval_mode: EvalMode::ValueNet,
            ..SearchConfig::default()
        };
        let mut eval = ConstEval(0.0);
        run_search(&mut tree, &config, Some(&mut eval)).unwrap();
        let visits: Vec<u64> = tree
            .root()
            .children()
            .iter()
            .map(|(_, c)| c.visits())
            .collect();
        let (min, max) = (visits.iter().min().unwrap(), visits.iter().max().unwrap());
        assert!(max - min <= 1, "visit spread {visits:?}");
    }

    #[test]
    fn determinism_same_seed_same_tree() {
        let a = searched_tree(GameState::initial(GameId::Connect4), 800, 99);
        let b = searched_tree(GameState::initial(GameId::Connect4), 800, 99);
        let va: Vec<u64> = a
            .root()
            .children()
            .iter()
            .map(|(_, c)| c.visits())
            .collect();
        let vb: Vec<u64> = b
            .root()
            .children()
            .iter()
            .map(|(_, c)| c.visits())
            .collect();
        assert_eq!(va, vb);
        assert_eq!(best_move(&a).unwrap(), best_move(&b).unwrap());
    }

    #[test]
    fn advance_root_retains_statistics() {
        let mut tree = searched_tree(GameState::initial(GameId::TicTacToe), 1_000, 5);
        let mv = best_move(&tree).unwrap();
        let kept = tree
            .root()
            .children()
            .iter()
            .find(|(m, _)| *m == mv)
            .map(|(_, c)| c.visits())
            .unwrap();
        advance_root(&mut tree, mv).unwrap();
        assert_eq!(tree.root().visits(), kept);
        assert_eq!(tree.root_state().ply(), 1);

        // Advancing along a never-explored move yields a fresh root.
        let mut fresh = SearchTree::new(GameState::initial(GameId::TicTacToe));
        advance_root(&mut fresh, Move(0)).unwrap();
        assert_eq!(fresh.root().visits(), 0);
    }

    #[test]
    fn advance_root_rejects_illegal_move() {
        let mut tree = SearchTree::new(GameState::initial(GameId::TicTacToe));
        assert_eq!(
            advance_root(&mut tree, Move(42)),
            Err(SearchError::IllegalMove(42))
        );
    }

    #[test]
    fn advance_twice_matches_grandchild() {
        let mut tree = searched_tree(GameState::initial(GameId::TicTacToe), 2_000, 13);
        let m1 = best_move(&tree).unwrap();
        let child = tree
            .root()
            .children()
            .iter()
            .find(|(m, _)| *m == m1)
            .unwrap()
            .1
            .clone();
        let (m2, grand_visits) = child
            .children()
            .iter()
            .max_by_key(|(m, c)| (c.visits(), std::cmp::Reverse(*m)))
            .map(|(m, c)| (*m, c.visits()))
            .unwrap();
        advance_root(&mut tree, m1).unwrap();
        advance_root(&mut tree, m2).unwrap();
        assert_eq!(tree.root().visits(), grand_visits);
    }
}
