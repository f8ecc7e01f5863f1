//! Runs every verification suite and prints one line per criterion.

use fanout::verify::{run_suite, Context, SUITES};

fn main() {
    let ctx = Context::new(2024, 26);
    let mut failed = vec![];
    for suite in SUITES {
        let report = run_suite(suite, &ctx);
        for check in report.checks.iter().filter(|c| !c.pass) {
            println!("    {check}");
        }
        let verdict = if report.passed() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {:<17} {verdict} ({:.1}s, {} checks)", suite.id, suite.name, report.elapsed.as_secs_f64(), report.checks.len());
        if !report.passed() {
            failed.push(suite.id);
        }
    }
    if failed.is_empty() {
        println!("all {} criteria passed", SUITES.len());
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
