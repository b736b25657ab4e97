#![allow(dead_code)]

//! Shared test oracles, independent of the search code they label.

use std::collections::HashMap;

use zggp_core::games::{GameId, GameState, Move, Player};

/// Exhaustive negamax value of a tic-tac-toe position for the player to
/// move: +1 forced win, 0 draw, -1 forced loss.
pub fn ttt_minimax(state: &GameState, memo: &mut HashMap<String, i8>) -> i8 {
    if let Ok(outcome) = state.terminal_payoff() {
        return outcome.score_for(state.to_move()) as i8;
    }
    let key = render_key(state);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut best = -2i8;
    for mv in state.legal_moves() {
        let next = state.apply_move(mv).unwrap();
        let v = -ttt_minimax(&next, memo);
        if v > best {
            best = v;
        }
    }
    memo.insert(key, best);
    best
}

fn render_key(state: &GameState) -> String {
    format!("{}|{:?}", state.render(), state.to_move())
}

/// Minimax value of each legal move, from the mover's perspective.
pub fn ttt_move_values(state: &GameState, memo: &mut HashMap<String, i8>) -> Vec<(Move, i8)> {
    state
        .legal_moves()
        .into_iter()
        .map(|mv| {
            let next = state.apply_move(mv).unwrap();
            (mv, -ttt_minimax(&next, memo))
        })
        .collect()
}

/// Deterministic suite of tactical tic-tac-toe positions where exactly
/// one move avoids losing (a forced win or forced block), labelled by
/// exhaustive minimax. Breadth-first over reachable positions.
pub fn ttt_tactical_suite(limit: usize) -> Vec<(GameState, Move)> {
    let mut memo = HashMap::new();
    let mut suite = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut frontier = vec![GameState::initial(GameId::TicTacToe)];
    while !frontier.is_empty() && suite.len() < limit {
        let mut next_frontier = Vec::new();
        for state in frontier {
            if state.is_terminal() {
                continue;
            }
            let values = ttt_move_values(&state, &mut memo);
            if values.len() >= 2 {
                let best = values.iter().map(|&(_, v)| v).max().unwrap();
                let winners: Vec<Move> = values
                    .iter()
                    .filter(|&&(_, v)| v == best)
                    .map(|&(m, _)| m)
                    .collect();
                let rest_all_lose = values.iter().filter(|&&(_, v)| v != best).count()
                    == values.len() - 1
                    && values.iter().all(|&(_, v)| v == best || v == -1);
                if winners.len() == 1 && best >= 0 && rest_all_lose && suite.len() < limit {
                    suite.push((state.clone(), winners[0]));
                }
            }
            for mv in state.legal_moves() {
                let next = state.apply_move(mv).unwrap();
                let key = render_key(&next);
                if seen.insert(key) {
                    next_frontier.push(next);
                }
            }
        }
        frontier = next_frontier;
    }
    suite
}

/// Exact probability that P1 wins tic-tac-toe when both sides play
/// uniformly at random, by exhaustive expectation over the game tree.
pub fn ttt_uniform_random_p1_win_probability() -> f64 {
    fn recurse(state: &GameState, memo: &mut HashMap<String, f64>) -> f64 {
        if let Ok(outcome) = state.terminal_payoff() {
            return if outcome.score_p1() > 0.0 { 1.0 } else { 0.0 };
        }
        let key = render_key(state);
        if let Some(&p) = memo.get(&key) {
            return p;
        }
        let moves = state.legal_moves();
        let p = moves
            .iter()
            .map(|&mv| recurse(&state.apply_move(mv).unwrap(), memo))
            .sum::<f64>()
            / moves.len() as f64;
        memo.insert(key, p);
        p
    }
    recurse(&GameState::initial(GameId::TicTacToe), &mut HashMap::new())
}

/// Breakthrough's initial-position move count enumerated from first
/// principles (no calls into the game implementation).
pub fn breakthrough_initial_moves(n: usize) -> usize {
    // P1 pawns fill rows 0..2 and advance toward row n-1; rows n-2..n
    // hold the opponent. Straight steps need an empty target; diagonal
    // steps need a target not held by one's own pawn.
    let own = |r: usize| r < 2;
    let enemy = |r: usize| r >= n - 2;
    let mut count = 0;
    for row in 0..2usize {
        let to = row + 1;
        for col in 0..n {
            for dc in -1i64..=1 {
                let c2 = col as i64 + dc;
                if c2 < 0 || c2 >= n as i64 {
                    continue;
                }
                if dc == 0 {
                    if !own(to) && !enemy(to) {
                        count += 1;
                    }
                } else if !own(to) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// A uniformly random mover driven by a caller-owned RNG.
pub fn random_move<R: rand::Rng>(state: &GameState, rng: &mut R) -> Move {
    let moves = state.legal_moves();
    moves[rng.gen_range(0..moves.len())]
}

#[allow(dead_code)]
pub fn perfect_ttt_move(state: &GameState, memo: &mut HashMap<String, i8>) -> Move {
    let values = ttt_move_values(state, memo);
    values
        .iter()
        .max_by_key(|&&(m, v)| (v, std::cmp::Reverse(m)))
        .map(|&(m, _)| m)
        .unwrap()
}

#[allow(dead_code)]
pub fn player_of(state: &GameState) -> Player {
    state.to_move()
}
