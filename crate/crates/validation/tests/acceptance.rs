//! Acceptance gate. Every criterion runs at its stated tolerance and time
//! budget and prints one PASS/FAIL line; the test fails if any line fails.

use std::time::{Duration, Instant};

use polyharm_validation::criteria;

#[test]
fn acceptance_criteria() {
    println!();
    let mut failed = Vec::new();
    for c in criteria() {
        let start = Instant::now();
        let checks = (c.run)();
        let elapsed = start.elapsed();
        let in_time = c.budget.is_none_or(|s| elapsed <= Duration::from_secs(s));
        let pass = in_time && checks.iter().all(|k| k.pass);
        let budget = c.budget.map_or(String::new(), |s| format!(" / {s} s"));
        println!(
            "{} [{}] {} ({:.2} s{budget})",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
        for k in &checks {
            println!("    {} {}", if k.pass { "ok  " } else { "FAIL" }, k.detail);
        }
        if !pass {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
