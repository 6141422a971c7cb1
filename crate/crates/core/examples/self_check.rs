//! Runs the property suites, then again against a deliberately broken loss.

use nashapr::game::{nash_apr, Game, StrategyProfile};
use nashapr::harness::{selfcheck, selfcheck_with, SelfcheckConfig};

fn main() -> nashapr::Result<()> {
    let cfg = SelfcheckConfig::default();
    let report = selfcheck(&cfg);
    report.write_text(std::io::stdout())?;

    println!("\nwith NashApr scaled by 1.5:");
    let broken = |p: &StrategyProfile, g: &Game| nash_apr(p, g).map(|x| 1.5 * x);
    selfcheck_with(&cfg, &broken).write_text(std::io::stdout())?;
    Ok(())
}
