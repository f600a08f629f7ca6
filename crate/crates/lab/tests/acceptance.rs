//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::thread;

use hartree_blowup::criteria::{evaluate, title, COUNT};

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids: Vec<usize> = (1..=COUNT).filter(|i| only.is_empty() || only.contains(i)).collect();
    if std::env::args().any(|a| a == "--list") {
        for id in &ids {
            println!("criterion_{id}: test");
        }
        return ExitCode::SUCCESS;
    }
    let results: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = ids.iter().map(|&id| (id, s.spawn(move || evaluate(id)))).collect();
        handles.into_iter().map(|(id, h)| (id, h.join())).collect()
    });
    let mut failed = 0;
    for (id, r) in results {
        match r {
            Ok(Ok(c)) => {
                if !c.passed() {
                    failed += 1;
                }
                println!("{}", c.line());
            }
            Ok(Err(e)) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {}: error: {e}", title(id));
            }
            Err(_) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {}: panicked", title(id));
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", ids.len() - failed, ids.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
