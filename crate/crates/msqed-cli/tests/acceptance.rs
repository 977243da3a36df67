//! Acceptance criteria, one PASS/FAIL line each; exits nonzero on any failure.

use std::process::ExitCode;

use msqed_cli::suites;

fn main() -> ExitCode {
    let seed = std::env::var("MSQED_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0);
    let only: Option<Vec<u8>> =
        std::env::var("MSQED_CRITERIA").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut verdicts = Vec::new();
    for (id, _, _) in suites::CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let r = suites::run_criterion(id, seed);
        print!("{}", suites::render(&r));
        verdicts.push((id, r.pass));
    }
    println!();
    for (id, pass) in &verdicts {
        println!("{} criterion {id}", if *pass { "PASS" } else { "FAIL" });
    }
    let failed = verdicts.iter().filter(|(_, p)| !p).count();
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
