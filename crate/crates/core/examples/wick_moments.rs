//! q-Gaussian moments two ways: the Wick sum over pair partitions and the vacuum
//! expectation on a truncated Fock space.

use ncdirac::fock::QFockSpace;
use ncdirac::wick::{crossings, enumerate_pair_partitions, wick_trace};

fn main() {
    println!("pair partitions of 6 points:");
    for v in enumerate_pair_partitions(6).expect("6 is even") {
        println!("  {v}  crossings = {}", crossings(&v));
    }

    let e = vec![1.0, 0.0];
    let f = vec![0.0, 1.0];
    let word = vec![e.clone(), f.clone(), e.clone(), f.clone()];
    println!("\ntau(s(e) s(f) s(e) s(f)) = q for orthonormal e, f:");
    for q in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let fock = QFockSpace::new(q, 2, 2).expect("small Fock space");
        let via_fock = fock.word_vacuum_trace(&word).expect("matching dimensions").re;
        let via_wick = wick_trace(q, &word).expect("matching dimensions");
        println!("  q = {q:>4}: wick = {via_wick:+.6}, fock = {via_fock:+.6}");
    }
}
