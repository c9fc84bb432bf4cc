//! Lipschitz seminorms built from the carré du champ, and sampled lower bounds for the
//! distance they induce between states.

use ncdirac::gradient::AlgebraElement;
use ncdirac::linalg::{c64, matrix_unit};
use ncdirac::metric::{LipSeminormSpec, MatrixState};
use ncdirac::system::System;

fn main() {
    let spec = LipSeminormSpec::new(System::from_name("heat:2").unwrap(), 2.0).expect("p ≥ 2");
    let x = AlgebraElement::Matrix(matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0));
    println!("‖e_01 + e_10‖_Γ,2 = {:.12} (√2 = {:.12})", spec.gamma_seminorm(&x).unwrap(), 2f64.sqrt());
    println!("{}", spec.kernel_check().unwrap().line());
    println!("{}", spec.leibniz_check(50, 3).unwrap().line());

    let h = 1.0 / 2f64.sqrt();
    let plus = MatrixState::pure(&[c64(h), c64(h)]).unwrap();
    let minus = MatrixState::pure(&[c64(h), c64(-h)]).unwrap();
    for samples in [10, 100, 1000] {
        let bound = spec.mk_lower_bound(&plus, &minus, samples, 1).unwrap();
        println!("d(|+>, |->) ≥ {bound:.6} from {samples} samples");
    }
}
