//! Acceptance suite. One line per criterion; exits nonzero if any fails.

mod common;
mod conflict;
mod deduction;
mod geo;
mod service;

use std::process::ExitCode;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion { name: "threshold constants", budget: None, run: conflict::threshold_constants },
    Criterion { name: "warning-level golden set", budget: Some(Duration::from_secs(1)), run: conflict::golden_set },
    Criterion {
        name: "membership continuity and boundaries",
        budget: Some(Duration::from_secs(1)),
        run: conflict::membership_continuity,
    },
    Criterion { name: "ECEF conversion", budget: None, run: geo::ecef_conversion },
    Criterion {
        name: "deduction containment (synthetic)",
        budget: Some(Duration::from_secs(30)),
        run: deduction::containment,
    },
    Criterion { name: "interval-arithmetic properties", budget: None, run: deduction::interval_properties },
    Criterion {
        name: "conflict oracle equivalence",
        budget: Some(Duration::from_secs(60)),
        run: conflict::monte_carlo_oracle,
    },
    Criterion { name: "offset-sweep shape", budget: None, run: conflict::sweep_shape },
    Criterion { name: "service equivalence", budget: None, run: service::equivalence },
];

fn main() -> ExitCode {
    let mut failed = 0;
    for c in CRITERIA {
        let t0 = Instant::now();
        let res = std::panic::catch_unwind(c.run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let took = t0.elapsed();
        let res = match (res, c.budget) {
            (Ok(d), Some(b)) if took > b => Err(format!("{d}; took {took:.2?}, budget {b:?}")),
            (r, _) => r,
        };
        match res {
            Ok(detail) => println!("[PASS] {}: {detail} ({took:.2?})", c.name),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {}: {detail} ({took:.2?})", c.name);
            }
        }
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
