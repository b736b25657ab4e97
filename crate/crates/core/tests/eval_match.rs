//! Match-harness behaviour at realistic game counts.

use zggp_core::eval::{play_match, AgentSpec};
use zggp_core::games::GameId;

#[test]
fn equal_uct_agents_score_near_one_half() {
    // Symmetric-agent null hypothesis: two 600-iteration playout agents
    // with different internal seeds land inside the binomial band.
    let a = AgentSpec { seed: 100, ..AgentSpec::uct(600) };
    let b = AgentSpec { seed: 200, ..AgentSpec::uct(600) };
    let result = play_match(GameId::TicTacToe, &a, &b, 400, 2024, None, 2).unwrap();
    assert_eq!(result.games_total, 400);
    assert_eq!(result.wins + result.draws + result.losses, 400);
    assert!(
        (0.40..=0.60).contains(&result.score),
        "score {} ({}-{}-{})",
        result.score,
        result.wins,
        result.draws,
        result.losses
    );
}
