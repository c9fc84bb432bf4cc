//! Truncated q-Fock spaces: level dimensions, the q-commutation relation and the
//! fermionic square s(e)² = ‖e‖².

use ncdirac::fock::QFockSpace;
use ncdirac::linalg::{self, op_norm};

fn main() {
    for q in [-1.0, 0.0, 0.5, 1.0] {
        let fock = QFockSpace::new(q, 3, 3).expect("within budget");
        let e = [1.0, 2.0, -1.0];
        let g = [0.5, 0.0, 1.0];
        let residual = fock.q_relation_residual(&e, &g).expect("dimension 3");
        println!("q = {q:>4}: level dims {:?}, q-relation residual {residual:.1e}", fock.level_dims());
    }

    let fermions = QFockSpace::new(-1.0, 3, 3).expect("exterior algebra of R^3");
    let e = [0.6, 0.0, 0.8];
    let s = fermions.gaussian(&e).expect("dimension 3");
    let defect = op_norm(&(&s * &s - linalg::identity(fermions.total_dim())));
    println!("\nfermionic ‖s(e)² − 1‖ = {defect:.1e} on a space of dimension {}", fermions.total_dim());
}
