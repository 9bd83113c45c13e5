//! Acceptance suite: every numbered criterion at its stated tolerance and
//! runtime budget, one line per criterion.

use std::time::{Duration, Instant};

use blockrg::checks::{run_criterion, Context, CRITERIA};
use blockrg::config::RunConfig;
use blockrg::report::Report;

/// Wall-clock budgets; criteria without one are unbounded.
fn budget(n: u8) -> Option<Duration> {
    match n {
        1 => Some(Duration::from_secs(10)),
        2 => Some(Duration::from_secs(60)),
        5 => Some(Duration::from_secs(300)),
        7 => Some(Duration::from_secs(600)),
        _ => None,
    }
}

struct Outcome {
    n: u8,
    passed: bool,
    detail: String,
}

fn evaluate(n: u8, cfg: &RunConfig) -> Outcome {
    let ctx = Context {
        config: cfg,
        tol: cfg.tolerances,
    };
    let mut report = Report::new("acceptance", cfg.seed, serde_json::Value::Null);
    let start = Instant::now();
    let result = run_criterion(n, &ctx, &mut report);
    let elapsed = start.elapsed();
    let mut detail = match &result {
        Ok(()) => report
            .checks
            .iter()
            .map(|c| format!("{}{}={:.3e}", if c.passed { "" } else { "!" }, c.name, c.value))
            .collect::<Vec<_>>()
            .join(" "),
        Err(e) => format!("error: {e}"),
    };
    let in_time = budget(n).is_none_or(|b| elapsed <= b);
    if !in_time {
        detail.push_str(" !over-budget");
    }
    detail.push_str(&format!(" ({:.1} s)", elapsed.as_secs_f64()));
    Outcome {
        n,
        passed: result.is_ok() && report.passed && in_time,
        detail,
    }
}

fn main() {
    let cfg = RunConfig::default();
    cfg.validate().expect("default configuration is valid");
    // criteria are independent; the heavy ones run side by side
    let outcomes: Vec<Outcome> = std::thread::scope(|s| {
        let cfg = &cfg;
        let handles: Vec<_> = CRITERIA.iter().map(|&(n, _)| s.spawn(move || evaluate(n, cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    let mut failed = 0;
    for (o, (_, name)) in outcomes.iter().zip(CRITERIA) {
        println!(
            "criterion {:>2} [{}] {name}: {}",
            o.n,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} of {} criteria pass", CRITERIA.len() - failed, CRITERIA.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
