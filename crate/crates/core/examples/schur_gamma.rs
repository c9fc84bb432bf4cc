//! Schur multiplier semigroups: the carré du champ computed three ways, the gradient
//! into q-Gaussians and the spectral gap.

use ncdirac::linalg::{random, residual};
use ncdirac::schur::{conditional_expectation, SchurSystem};
use ncdirac::system::System;

fn main() {
    let sys = SchurSystem::from_name("poisson:4").expect("built-in");
    let mut rng = random::rng(1);
    let x = random::gaussian(4, 4, &mut rng);
    let y = random::gaussian(4, 4, &mut rng);

    let gamma = sys.carre_du_champ(&x, &y).expect("4×4 inputs");
    let closed = sys.carre_du_champ_closed_form(&x, &y).expect("4×4 inputs");
    println!("closed form vs definition: {:.1e}", residual(&closed, &gamma));

    for q in [-1.0, 0.0, 1.0] {
        let fock = System::Schur(sys.clone()).default_fock(q).expect("fits");
        let z = sys.gradient(&fock, &x).unwrap().adjoint() * sys.gradient(&fock, &y).unwrap();
        let via_gradient = conditional_expectation(&fock, &z).expect("carrier shape");
        println!("q = {q:>4}: E(∂x* ∂y) vs Γ(x, y): {:.1e}", residual(&via_gradient, &gamma));
    }

    for name in ["heat:6", "poisson:6"] {
        let s = SchurSystem::from_name(name).unwrap();
        println!("{name}: gap = {}", s.gap().unwrap());
    }
}
