use std::process::ExitCode;

use pairing_ep::acceptance::run_all;

fn main() -> ExitCode {
    let results = run_all();
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
