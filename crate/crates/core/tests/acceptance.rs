//! Acceptance run: every verification suite with the published seed, one
//! pass/fail line each.

use kirchberg_core::suites;

#[test]
fn acceptance() {
    let reports = suites::run_all(suites::DEFAULT_SEED).expect("suites must run to completion");
    let mut failed = false;
    for r in &reports {
        println!("{}", r.verdict());
        if !r.passed() {
            failed = true;
            print!("{}", r.render());
        }
    }
    assert!(!failed, "at least one verification suite failed");
}
