//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Failing criteria are reported, not hidden: the test fails if any does.

use gridform::verify::{self, RunCache, DEFAULT_SEED};

#[test]
fn acceptance() {
    let mut cache = RunCache::default();
    let criteria = vec![
        verify::matching(),
        verify::frequency(&mut cache),
        verify::amplitude(&mut cache),
        verify::sharing(&mut cache),
        verify::lyapunov(&mut cache),
        verify::identities(DEFAULT_SEED),
        verify::numerics(DEFAULT_SEED),
        verify::determinism(&mut cache),
    ];
    let mut failed = Vec::new();
    for c in criteria {
        let c = c.expect("criterion ran");
        println!("{}", c.summary_line());
        for k in &c.checks {
            println!(
                "    {} {}: {:.6e} (bound {:.3e}){}",
                if k.passed { "ok  " } else { "FAIL" },
                k.name,
                k.value,
                k.bound,
                if k.note.is_empty() { String::new() } else { format!("  [{}]", k.note) }
            );
        }
        for i in &c.info {
            println!("    info: {i}");
        }
        if !c.passed {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
