//! End-to-end acceptance run: one pass/fail line per criterion with its runtime.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use finitegap::verify::{self, Check};

struct Outcome {
    n: usize,
    title: &'static str,
    pass: bool,
    elapsed: Duration,
    detail: String,
}

fn from_checks(n: usize, title: &'static str, budget: Option<f64>, f: impl FnOnce() -> Vec<Check>) -> Outcome {
    let t = Instant::now();
    let checks = f();
    let elapsed = t.elapsed();
    let worst: Vec<String> = checks.iter().map(|c| format!("{} {:.1e}/{:.0e}", c.id, c.residual, c.tol)).collect();
    let mut pass = !checks.is_empty() && checks.iter().all(Check::pass);
    let mut detail = worst.join("; ");
    if let Some(b) = budget {
        if elapsed.as_secs_f64() >= b {
            pass = false;
            detail.push_str(&format!("; over the {b} s budget"));
        }
    }
    Outcome { n, title, pass, elapsed, detail }
}

fn full_run() -> Outcome {
    let t = Instant::now();
    let run = || Command::new(env!("CARGO_BIN_EXE_finitegap")).args(["verify", "--suite", "all"]).env_remove("FINITEGAP_TOL").output().unwrap();
    let a = run();
    let first = t.elapsed();
    let b = run();
    let rows = String::from_utf8_lossy(&a.stdout).lines().count().saturating_sub(1);
    let same = a.stdout == b.stdout;
    let ok = a.status.code() == Some(0) && b.status.code() == Some(0);
    let pass = ok && same && first.as_secs_f64() < 120.0 && rows > 0;
    let detail = format!("{rows} checks, exit {:?}, byte-identical {same}", a.status.code());
    Outcome { n: 10, title: "full verification run", pass, elapsed: first, detail }
}

#[test]
fn acceptance() {
    let outcomes = vec![
        from_checks(1, "two-gap Lamé suite, τ = 2i, 20×10 grid", Some(10.0), || {
            [verify::two_gap_lame_identity_checks(), verify::two_gap_lame_psi_checks()].concat()
        }),
        from_checks(2, "one-gap equivalence", Some(5.0), || {
            [verify::one_gap_equivalence_checks(), verify::one_gap_psi_checks()].concat()
        }),
        from_checks(3, "spectral/quadrature duality", None, verify::duality_checks),
        from_checks(4, "Dubrovin flow", Some(20.0), verify::dubrovin_checks),
        from_checks(5, "theta closedness", None, verify::theta_closedness_checks),
        from_checks(6, "factorizations", None, verify::factorization_checks),
        from_checks(7, "counterexamples", None, || {
            [verify::counterexample_checks(), verify::pencil_integral_checks()].concat()
        }),
        from_checks(8, "genus-two reduction", None, || {
            [verify::genus_two_reduction_checks(), verify::genus_two_reduction_potential_checks()].concat()
        }),
        from_checks(9, "theta reconstruction", None, verify::theta_reconstruction_checks),
        full_run(),
    ];
    // Written past the test harness capture so the lines always show.
    let mut err = std::io::stderr().lock();
    for o in &outcomes {
        let _ = writeln!(
            err,
            "criterion {:>2} {:<40} {} {:>9.3} s  {}",
            o.n,
            o.title,
            if o.pass { "PASS" } else { "FAIL" },
            o.elapsed.as_secs_f64(),
            o.detail
        );
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.pass).map(|o| o.n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
