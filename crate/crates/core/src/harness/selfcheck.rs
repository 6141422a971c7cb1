//! Executable property suites: Lipschitz inequalities, oracle agreement,
//! gradient checks, golden fixtures and simplex projection.
//!
//! The `NashApr` implementation under test is a parameter so mutation tests
//! can confirm the suites notice a broken loss.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::fixtures::{coordination, perturbed};
use crate::game::{
    brute_force_nash_apr, l1_distance, max_distance, nash_apr, nash_apr_extended,
    nash_apr_subgradient, Game, GameShape, StrategyProfile,
};
use crate::parallel;
use crate::rng;
use crate::solvers::{project_to_simplex, random_profile};

/// Slack allowed in the Lipschitz inequalities.
pub const LIPSCHITZ_SLACK: f64 = 1e-9;
pub const ORACLE_TOLERANCE: f64 = 1e-10;
pub const GRADIENT_TOLERANCE: f64 = 1e-4;
pub const GOLDEN_TOLERANCE: f64 = 1e-12;
/// Largest joint-action count used by the oracle suite.
pub const ORACLE_MAX_JOINT: usize = 10_000;

/// The loss implementation being checked.
pub type NashAprFn<'a> = &'a (dyn Fn(&StrategyProfile, &Game) -> Result<f64> + Sync);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfcheckConfig {
    /// Samples per Lipschitz suite.
    pub lipschitz_samples: usize,
    pub oracle_samples: usize,
    pub gradient_samples: usize,
    pub seed: u64,
}

impl Default for SelfcheckConfig {
    fn default() -> Self {
        Self {
            lipschitz_samples: 10_000,
            oracle_samples: 1_000,
            gradient_samples: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: usize,
    pub failures: usize,
    /// Smallest `tolerance - error` seen; negative on failure.
    pub worst_margin: f64,
    /// Largest observed `|change in loss| / distance`, for the Lipschitz suites.
    pub worst_ratio: Option<f64>,
    pub elapsed_s: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checks > 0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelfcheckReport {
    pub suites: Vec<SuiteReport>,
}

impl SelfcheckReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }

    /// One line per suite, then an overall verdict.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for s in &self.suites {
            write!(
                out,
                "{:<20} {:<4} checks={:<6} failures={:<4} worst_margin={:.6e}",
                s.name,
                if s.passed() { "PASS" } else { "FAIL" },
                s.checks,
                s.failures,
                s.worst_margin
            )?;
            if let Some(r) = s.worst_ratio {
                write!(out, " worst_ratio={r:.6}")?;
            }
            writeln!(out, " time={:.2}s", s.elapsed_s)?;
        }
        writeln!(
            out,
            "overall {}",
            if self.passed() { "PASS" } else { "FAIL" }
        )?;
        Ok(())
    }
}

/// Per-sample outcome: `(margin, ratio)`, or `None` when the sample was skipped.
type Sample = Option<(f64, Option<f64>)>;

fn run_suite(name: &str, samples: usize, f: impl Fn(usize) -> Sample + Sync + Send) -> SuiteReport {
    let start = Instant::now();
    let results = parallel::map_indexed(samples, f);
    let mut report = SuiteReport {
        name: name.to_string(),
        checks: 0,
        failures: 0,
        worst_margin: f64::INFINITY,
        worst_ratio: None,
        elapsed_s: 0.0,
    };
    for (margin, ratio) in results.into_iter().flatten() {
        report.checks += 1;
        // NaN margins count as failures.
        if !(margin >= 0.0) {
            report.failures += 1;
        }
        report.worst_margin = report.worst_margin.min(margin);
        if margin.is_nan() {
            report.worst_margin = f64::NAN;
        }
        if let Some(r) = ratio {
            report.worst_ratio = Some(report.worst_ratio.map_or(r, |w: f64| w.max(r)));
        }
    }
    report.elapsed_s = start.elapsed().as_secs_f64();
    report
}

/// `n` in {2, 3} and every `|A_i|` in `2..=8`.
fn lipschitz_shape<R: Rng>(rng: &mut R) -> GameShape {
    let n = rng.gen_range(2..=3);
    GameShape::new((0..n).map(|_| rng.gen_range(2..=8)).collect()).expect("small shape")
}

/// 2 to 4 players with at most `ORACLE_MAX_JOINT` joint actions.
fn oracle_shape<R: Rng>(rng: &mut R) -> GameShape {
    loop {
        let n = rng.gen_range(2..=4);
        let counts: Vec<usize> = (0..n)
            .map(|_| rng.gen_range(1..=[0, 0, 100, 21, 10][n]))
            .collect();
        if counts.iter().product::<usize>() <= ORACLE_MAX_JOINT {
            return GameShape::new(counts).expect("bounded shape");
        }
    }
}

fn random_game<R: Rng>(shape: &GameShape, rng: &mut R) -> Game {
    let utilities = (0..shape.utility_count())
        .map(|_| rng.gen::<f64>())
        .collect();
    Game::new(shape.clone(), utilities).expect("entries in [0, 1)")
}

/// Half the time a far-away profile, otherwise a small mixture step from `p`.
fn partner_profile<R: Rng>(p: &StrategyProfile, rng: &mut R) -> StrategyProfile {
    let other = random_profile(&player_shape(p), rng);
    if rng.gen_bool(0.5) {
        return other;
    }
    let t = rng.gen::<f64>() * 0.05;
    let mixed = p
        .strategies()
        .iter()
        .zip(other.strategies())
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (1.0 - t) * x + t * y)
                .collect()
        })
        .collect();
    StrategyProfile::normalized(mixed).expect("convex combination")
}

fn player_shape(p: &StrategyProfile) -> GameShape {
    GameShape::new(p.strategies().iter().map(Vec::len).collect()).expect("profile shape")
}

fn partner_game<R: Rng>(u: &Game, rng: &mut R) -> Game {
    if rng.gen_bool(0.5) {
        return random_game(u.shape(), rng);
    }
    let scale = rng.gen::<f64>() * 0.05;
    let utilities = u
        .utilities()
        .iter()
        .map(|&x| (x + scale * (2.0 * rng.gen::<f64>() - 1.0)).clamp(0.0, 1.0))
        .collect();
    Game::new(u.shape().clone(), utilities).expect("clamped entries")
}

fn stream(cfg: &SelfcheckConfig, suite: u64, i: usize) -> rand_chacha::ChaCha8Rng {
    rng::stream(rng::derive_seed(cfg.seed, suite), i as u64)
}

/// `|f(s, u) - f(s', u)| <= 2 ||s - s'||_1`.
pub fn strategy_lipschitz_suite(cfg: &SelfcheckConfig, f: NashAprFn) -> SuiteReport {
    run_suite("lipschitz_strategy", cfg.lipschitz_samples, |i| {
        let mut rng = stream(cfg, 1, i);
        let shape = lipschitz_shape(&mut rng);
        let u = random_game(&shape, &mut rng);
        let s = random_profile(&shape, &mut rng);
        let t = partner_profile(&s, &mut rng);
        let diff = (f(&s, &u).ok()? - f(&t, &u).ok()?).abs();
        let dist = l1_distance(&s, &t).ok()?;
        let ratio = (dist > 0.0).then(|| diff / dist);
        Some((2.0 * dist + LIPSCHITZ_SLACK - diff, ratio))
    })
}

/// `|f(s, u) - f(s, v)| <= 2 ||u - v||_max`.
pub fn utility_lipschitz_suite(cfg: &SelfcheckConfig, f: NashAprFn) -> SuiteReport {
    run_suite("lipschitz_utility", cfg.lipschitz_samples, |i| {
        let mut rng = stream(cfg, 2, i);
        let shape = lipschitz_shape(&mut rng);
        let u = random_game(&shape, &mut rng);
        let v = partner_game(&u, &mut rng);
        let s = random_profile(&shape, &mut rng);
        let diff = (f(&s, &u).ok()? - f(&s, &v).ok()?).abs();
        let dist = max_distance(&u, &v).ok()?;
        let ratio = (dist > 0.0).then(|| diff / dist);
        Some((2.0 * dist + LIPSCHITZ_SLACK - diff, ratio))
    })
}

/// Agreement with the enumeration oracle.
pub fn oracle_suite(cfg: &SelfcheckConfig, f: NashAprFn) -> SuiteReport {
    run_suite("oracle", cfg.oracle_samples, |i| {
        let mut rng = stream(cfg, 3, i);
        let shape = oracle_shape(&mut rng);
        let u = random_game(&shape, &mut rng);
        let s = if rng.gen_bool(0.2) {
            let actions: Vec<usize> = shape
                .action_counts()
                .iter()
                .map(|&k| rng.gen_range(0..k))
                .collect();
            StrategyProfile::pure(&shape, &actions).ok()?
        } else {
            random_profile(&shape, &mut rng)
        };
        let err = (f(&s, &u).ok()? - brute_force_nash_apr(&s, &u).ok()?).abs();
        Some((ORACLE_TOLERANCE - err, None))
    })
}

/// Subgradient against central differences (`h = 1e-5`) at tie-free
/// interior profiles with every entry at least `1e-3`.
pub fn gradient_suite(cfg: &SelfcheckConfig) -> SuiteReport {
    const H: f64 = 1e-5;
    run_suite("gradient", cfg.gradient_samples, |i| {
        let mut rng = stream(cfg, 4, i);
        let shape = lipschitz_shape(&mut rng);
        let u = random_game(&shape, &mut rng);
        let s = random_profile(&shape, &mut rng);
        if s.strategies().iter().flatten().any(|&x| x < 1e-3) {
            return None;
        }
        let report = nash_apr_subgradient(&s, &u).ok()?;
        if report.tie_flag || !clear_maximum(&s, &u, 1e-3) {
            return None;
        }
        let mut worst = f64::INFINITY;
        for (j, grad) in report.gradient.iter().enumerate() {
            for (a, &an) in grad.iter().enumerate() {
                let mut plus = s.strategies().to_vec();
                let mut minus = plus.clone();
                plus[j][a] += H;
                minus[j][a] -= H;
                let fd = (nash_apr_extended(&plus, &u).ok()?
                    - nash_apr_extended(&minus, &u).ok()?)
                    / (2.0 * H);
                let scale = fd.abs().max(an.abs()).max(1e-12);
                worst = worst.min(GRADIENT_TOLERANCE - (fd - an).abs() / scale);
            }
        }
        Some((worst, None))
    })
}

/// The best deviation gain beats the runner-up by at least `gap`, so the
/// finite-difference stencil stays on one linear piece.
fn clear_maximum(s: &StrategyProfile, u: &Game, gap: f64) -> bool {
    let mut gains: Vec<f64> = Vec::new();
    for p in 0..u.shape().num_players() {
        let dev = crate::game::deviation_payoffs(u, p, s).expect("matching shape");
        let eu: f64 = dev.iter().zip(s.player(p)).map(|(d, x)| d * x).sum();
        gains.extend(dev.iter().map(|d| d - eu));
    }
    gains.sort_by(|a, b| b.total_cmp(a));
    gains[0] - gains[1] >= gap
}

/// Known values on the coordination game and its two perturbations.
pub fn golden_suite(f: NashAprFn) -> SuiteReport {
    let pure = |a: &[usize]| {
        StrategyProfile::pure(&GameShape::symmetric(2, 2).expect("2x2"), a).expect("pure")
    };
    let thirds = StrategyProfile::new(vec![vec![2.0 / 3.0, 1.0 / 3.0]; 2]).expect("mixed");
    // (game, profile, expected); actions are (row, column) with row index 0 = L.
    let cases: Vec<(Game, StrategyProfile, f64)> = vec![
        (coordination(), pure(&[0, 1]), 0.0),
        (coordination(), pure(&[1, 0]), 0.0),
        (coordination(), thirds, 0.0),
        (coordination(), pure(&[0, 0]), 0.5),
        (perturbed(-0.1), pure(&[0, 0]), 0.0),
        (perturbed(0.1), pure(&[1, 0]), 0.0),
    ];
    run_suite("golden", cases.len(), |i| {
        let (g, p, want) = &cases[i];
        Some((GOLDEN_TOLERANCE - (f(p, g).ok()? - want).abs(), None))
    })
}

/// Closed forms plus optimality against random simplex points.
pub fn simplex_suite(cfg: &SelfcheckConfig) -> SuiteReport {
    run_suite("simplex", cfg.gradient_samples.max(1), |i| {
        if i == 0 {
            let p = project_to_simplex(&[0.8, 0.8]);
            return Some((1e-15 - ((p[0] - 0.5).abs() + (p[1] - 0.5).abs()), None));
        }
        let mut rng = stream(cfg, 5, i);
        let k = rng.gen_range(2..=8);
        let v: Vec<f64> = (0..k).map(|_| 4.0 * rng.gen::<f64>() - 2.0).collect();
        let p = project_to_simplex(&v);
        let sum_err = (p.iter().sum::<f64>() - 1.0).abs();
        let negative = p.iter().any(|&x| x < 0.0);
        let dist = |q: &[f64]| {
            q.iter()
                .zip(&v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let best = dist(&p);
        let shape = GameShape::new(vec![k, 1]).expect("shape");
        let mut margin = 1e-12 - sum_err;
        for _ in 0..32 {
            let q = random_profile(&shape, &mut rng);
            margin = margin.min(dist(q.player(0)) - best + 1e-12);
        }
        Some((if negative { -1.0 } else { margin }, None))
    })
}

pub fn selfcheck_with(cfg: &SelfcheckConfig, f: NashAprFn) -> SelfcheckReport {
    SelfcheckReport {
        suites: vec![
            strategy_lipschitz_suite(cfg, f),
            utility_lipschitz_suite(cfg, f),
            oracle_suite(cfg, f),
            gradient_suite(cfg),
            golden_suite(f),
            simplex_suite(cfg),
        ],
    }
}

/// Runs every suite against the library's `nash_apr`.
pub fn selfcheck(cfg: &SelfcheckConfig) -> SelfcheckReport {
    selfcheck_with(cfg, &nash_apr)
}
