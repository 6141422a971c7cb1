//! Fictitious play, regret matching, replicator dynamics and regret descent
//! on one generated game, with their loss curves written as CSV.

use nashapr::game::GameShape;
use nashapr::gen::{GameClass, GeneratorSpec};
use nashapr::solvers::{write_traces_csv, SolverConfig, SolverKind};

fn main() -> nashapr::Result<()> {
    let class: GameClass = std::env::args()
        .nth(1)
        .as_deref()
        .unwrap_or("bertrand_oligopoly")
        .parse()?;
    let spec = GeneratorSpec::new(class, GameShape::symmetric(2, 8)?, 3)?;
    let game = spec.generate_one(0)?;
    let cfg = SolverConfig {
        max_iterations: 5000,
        target_nash_apr: 1e-3,
        record_every: 50,
        ..SolverConfig::default()
    };

    let kinds = [
        SolverKind::FictitiousPlay,
        SolverKind::RegretMatching,
        SolverKind::ReplicatorDynamics,
        SolverKind::RegretDescent,
    ];
    let mut traces = Vec::new();
    for kind in kinds {
        let trace = kind.run(&game, &cfg)?;
        println!(
            "{kind:<8} {:>5} iterations  NashApr {:.3e} -> {:.3e}  reached: {}",
            trace.iterations_used,
            trace.initial_nash_apr,
            trace.final_nash_apr,
            trace.reached_target
        );
        traces.push(trace);
    }
    let path = std::env::temp_dir().join("nashapr_solver_traces.csv");
    let mut out = Vec::new();
    write_traces_csv(&mut out, traces.iter().map(|t| (0, t)), false)?;
    std::fs::write(&path, out)?;
    println!("loss curves in {}", path.display());
    Ok(())
}
