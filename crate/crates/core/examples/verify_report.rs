//! Runs the verification suite on a built-in system and prints the reports as CSV.

use ncdirac::report::{all_pass, write_csv};
use ncdirac::suite::{verify, Suite, VerifyConfig};
use ncdirac::system::System;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "heat:3".into());
    let sys = System::from_name(&name).unwrap_or_else(|e| panic!("{e}"));
    let cfg = VerifyConfig { q_grid: vec![-1.0, 0.0, 1.0], suite: Suite::All, samples: 3, ..VerifyConfig::default() };
    let reports = verify(&sys, &name, &cfg).expect("suite runs");
    write_csv(&reports, std::io::stdout().lock()).expect("stdout");
    eprintln!("{} checks, all pass: {}", reports.len(), all_pass(&reports));
}
