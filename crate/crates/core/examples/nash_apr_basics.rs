//! NashApr, exploitability and the subgradient on a 2x2 coordination game.

use nashapr::game::fixtures::{coordination, perturbed};
use nashapr::game::{
    best_response, brute_force_nash_apr, max_distance, nash_apr, nash_apr_subgradient,
    nash_exploitability, GameShape, StrategyProfile,
};

fn main() -> nashapr::Result<()> {
    let game = coordination();
    let shape = GameShape::symmetric(2, 2)?;

    let profiles = [
        ("(L, D)", StrategyProfile::pure(&shape, &[0, 1])?),
        ("(R, U)", StrategyProfile::pure(&shape, &[1, 0])?),
        ("(L, U)", StrategyProfile::pure(&shape, &[0, 0])?),
        (
            "mixed",
            StrategyProfile::new(vec![vec![2.0 / 3.0, 1.0 / 3.0]; 2])?,
        ),
    ];
    for (name, p) in &profiles {
        println!(
            "{name:<7} NashApr {:.6}  oracle {:.6}  exploitability ({:.3}, {:.3})",
            nash_apr(p, &game)?,
            brute_force_nash_apr(p, &game)?,
            nash_exploitability(p, &game, 0)?,
            nash_exploitability(p, &game, 1)?,
        );
    }

    let (_, corner) = &profiles[2];
    let sub = nash_apr_subgradient(corner, &game)?;
    println!(
        "at (L, U): player {} gains most by switching to action {} (tie: {}), gradient {:?}",
        sub.argmax_player, sub.argmax_action, sub.tie_flag, sub.gradient
    );
    println!(
        "best response of player 0 to (L, U): {}",
        best_response(&game, 0, corner)?
    );

    // Two games 0.2 apart whose unique equilibria differ.
    let (a, b) = (perturbed(-0.1), perturbed(0.1));
    let lu = StrategyProfile::pure(&shape, &[0, 0])?;
    let ru = StrategyProfile::pure(&shape, &[1, 0])?;
    println!(
        "max distance {:.3}; (L, U) on a: {:.3}, on b: {:.3}; (R, U) on b: {:.3}",
        max_distance(&a, &b)?,
        nash_apr(&lu, &a)?,
        nash_apr(&lu, &b)?,
        nash_apr(&ru, &b)?
    );
    Ok(())
}
