//! Full estimate battery at the contract resolution: spatial box
//! [−120, 120] with 4096 nodes, frequency band |k| ≤ 32 with 2048 nodes,
//! a two-track reflectionless reference configuration, and every
//! evolution-based section enabled. Prints one line per criterion and
//! fails if any measured check misses its threshold.

use ctm_core::grid::{Grid1D, KGrid};
use ctm_core::track::{ModelConfig, Profile, SolitonTrack};
use ctm_core::verify::{estimate_suite, SuiteOptions};

fn reference_config() -> ModelConfig {
    let track = |v: f64, y: f64| SolitonTrack {
        omega: 1.0,
        v,
        y,
        gamma: 0.0,
        profile_u: Profile::sech2(-2.0, 1.0),
        profile_w: Profile::zero(),
    };
    ModelConfig {
        tracks: vec![track(4.0, 15.0), track(-4.0, -15.0)],
        l_sep: 1.0,
        c_sep: 0.1,
        t_final: 2.0,
        dt: 1e-3,
    }
}

/// Every acceptance criterion holds at the contract resolution.
#[test]
fn acceptance_battery() {
    let grid = Grid1D::new(-120.0, 120.0, 4096).unwrap();
    let kgrid = KGrid::new(32.0, 2048).unwrap();
    let opts = SuiteOptions::new(grid, kgrid);
    let report = estimate_suite(&reference_config(), &opts).unwrap();

    // one verdict per criterion, aggregated over its checks
    println!("== acceptance criteria ==");
    for n in 1..=13 {
        let prefix = format!("{n:02}");
        let checks: Vec<_> =
            report.checks.iter().filter(|c| c.id.starts_with(&prefix)).collect();
        assert!(!checks.is_empty(), "criterion {n} produced no checks");
        let pass = checks.iter().all(|c| c.pass);
        let status = if pass { "PASS" } else { "FAIL" };
        println!("[{status}] criterion {n:2}: {}", checks[0].what);
    }
    println!("== check detail ==");
    print!("{}", report.summary());
    assert!(
        report.all_pass(),
        "first failing check: {}",
        report.first_failure().unwrap_or("?")
    );
}
