//! The Hodge-Dirac operator D = [[0, ∂*], [∂, 0]]: its spectrum, square, resolvents and
//! Hodge decomposition, plus the second Dirac operator at q = −1.

use ncdirac::dirac::{self, assemble_hodge_dirac, build_dirac2_schur};
use ncdirac::schur::SchurSystem;
use ncdirac::system::System;

fn main() {
    let sys = System::from_name("heat:3").expect("built-in");
    let fock = sys.default_fock(-1.0).expect("fits");
    let gs = sys.gradient_system(&fock).expect("consistent");
    let d = assemble_hodge_dirac(&gs).expect("Hermitian");
    let spectrum = d.spectrum().expect("finite");
    println!("D has dimension {}; nonzero eigenvalues:", d.dim());
    for v in spectrum.iter().filter(|v| v.abs() > 1e-9) {
        print!(" {v:+.4}");
    }
    println!();

    println!("{}", dirac::verify_square(&gs, 1e-9).unwrap().line());
    for t in [-1.0, 0.5, 10.0] {
        println!("{}  (t = {t})", dirac::verify_resolvent(&gs, t, 1e-8).unwrap().line());
    }
    println!("{}", dirac::verify_hodge_decomposition(&gs, 1e-9).unwrap().line());

    let heat = SchurSystem::from_name("heat:3").unwrap();
    let d2 = build_dirac2_schur(&heat, &fock).expect("same Fock space");
    println!("{}", d2.square_check(1e-9).unwrap().line());
}
