//! Sampled Kato and Khintchine ratios ‖∂x‖_p / ‖A^{1/2}x‖_p: exactly 1 at p = 2 and
//! bounded above and below for larger p.

use ncdirac::dirac::kato_ratio_report;
use ncdirac::system::System;

fn main() {
    for name in ["poisson:3", "Zn:5"] {
        let sys = System::from_name(name).expect("built-in");
        for q in [-1.0, 0.0, 1.0] {
            let gs = sys.gradient_system(&sys.default_fock(q).unwrap()).unwrap();
            let report = kato_ratio_report(&gs, &[2.0, 4.0, 8.0], 20, 7, 1e-10).expect("nonzero generator");
            println!("{name} q = {q:>4}: {}", report.line());
            if let Some(stats) = report.params.get("stats").and_then(|s| s.as_array()) {
                for s in stats {
                    println!(
                        "    p = {:<3} kato in [{:.4}, {:.4}]",
                        s["p"], s["kato_min"].as_f64().unwrap_or(f64::NAN), s["kato_max"].as_f64().unwrap_or(f64::NAN)
                    );
                }
            }
        }
    }
}
