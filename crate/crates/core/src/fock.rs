//! Truncated q-deformed Fock spaces over `H = ℝ^d`.
//!
//! Level `k` is `H^{⊗k}` with the q-inner product
//! `⟨h_1⊗…⊗h_k, g_1⊗…⊗g_k⟩_q = Σ_σ q^{inv(σ)} Π_i ⟨h_i, g_{σ(i)}⟩`,
//! orthonormalized after dividing out its null space (non-trivial only at `q = ±1`).
//! Levels above the cap are dropped, so creation operators kill the top level.
//! Operators are dense matrices on the concatenated orthonormal level bases, with the
//! vacuum at index 0.
//!
//! A word of `2k` q-Gaussians applied to the vacuum never leaves levels `0..=k`, so
//! vacuum moments of words of length `≤ 2·level_cap` are exact.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::linalg::{self, c64, ComplexMatrix, LinalgError, WeightedSpace, C64, EIGEN_CUTOFF};

/// Bound on the dimension of a raw tensor level `d^k` and on the total dimension.
pub const MAX_DIM: usize = 4096;
/// Bound on `Σ_k k!·d^k`, the work needed to assemble the level Gram matrices.
const MAX_GRAM_WORK: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FockError {
    #[error("q = {0} is outside [-1, 1]")]
    Deformation(f64),
    #[error("{0}")]
    Input(String),
    #[error("Fock space too large: {0}")]
    Budget(String),
    #[error("vector has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("matrix is not orthogonal (residual {0:e})")]
    NotOrthogonal(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone)]
struct Level {
    raw_dim: usize,
    gram: ComplexMatrix,
    /// `raw_dim × dim`; columns are an orthonormal basis of the quotient, `C* G C = Id`.
    basis: ComplexMatrix,
    offset: usize,
}

impl Level {
    fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct QFockSpace {
    q: f64,
    h_dim: usize,
    level_cap: usize,
    levels: Vec<Level>,
    total_dim: usize,
}

/// All permutations of `0..k` in one-line notation, paired with their inversion counts.
fn permutations_with_inversions(k: usize) -> Vec<(Vec<usize>, usize)> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; k];
    fn rec(k: usize, current: &mut Vec<usize>, used: &mut [bool], inv: usize, out: &mut Vec<(Vec<usize>, usize)>) {
        if current.len() == k {
            out.push((current.clone(), inv));
            return;
        }
        for v in 0..k {
            if used[v] {
                continue;
            }
            // New entry v sits after every placed entry; it forms an inversion with each larger one.
            let added = current.iter().filter(|&&c| c > v).count();
            used[v] = true;
            current.push(v);
            rec(k, current, used, inv + added, out);
            current.pop();
            used[v] = false;
        }
    }
    rec(k, &mut current, &mut used, 0, &mut out);
    out
}

fn digits(mut index: usize, d: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

fn undigits(ds: &[usize], d: usize) -> usize {
    ds.iter().fold(0, |acc, &x| acc * d + x)
}

/// Gram matrix of the q-inner product on the standard tensor basis of `(ℝ^d)^{⊗k}`.
fn level_gram(q: f64, d: usize, k: usize) -> ComplexMatrix {
    let n = d.pow(k as u32);
    let mut g = DMatrix::<f64>::zeros(n, n);
    for (sigma, inv) in permutations_with_inversions(k) {
        let weight = q.powi(inv as i32);
        if weight == 0.0 {
            continue;
        }
        let mut target = vec![0; k];
        for w in 0..n {
            let ws = digits(w, d, k);
            // ⟨e_w, e_w'⟩ picks up q^{inv σ} exactly when w'_{σ(i)} = w_i for all i.
            for i in 0..k {
                target[sigma[i]] = ws[i];
            }
            g[(w, undigits(&target, d))] += weight;
        }
    }
    linalg::from_real(&g)
}

impl QFockSpace {
    pub fn new(q: f64, h_dim: usize, level_cap: usize) -> Result<Self, FockError> {
        if !(-1.0..=1.0).contains(&q) {
            return Err(FockError::Deformation(q));
        }
        if h_dim == 0 || level_cap == 0 {
            return Err(FockError::Input("h_dim and level_cap must be at least 1".into()));
        }
        let mut work = 0usize;
        let mut fact = 1usize;
        for k in 0..=level_cap {
            if k > 0 {
                fact = fact.saturating_mul(k);
            }
            let raw = h_dim.checked_pow(k as u32).filter(|&r| r <= MAX_DIM).ok_or_else(|| {
                FockError::Budget(format!("level {k} has raw dimension {h_dim}^{k} > {MAX_DIM}"))
            })?;
            work = work.saturating_add(fact.saturating_mul(raw));
        }
        if work > MAX_GRAM_WORK {
            return Err(FockError::Budget(format!("Gram assembly needs {work} operations")));
        }

        let mut levels = Vec::with_capacity(level_cap + 1);
        let mut offset = 0;
        for k in 0..=level_cap {
            let raw_dim = h_dim.pow(k as u32);
            let (gram, basis) = if k <= 1 || q == 0.0 {
                // Levels 0 and 1 (and every level at q = 0) carry the standard inner product.
                (linalg::identity(raw_dim), linalg::identity(raw_dim))
            } else {
                let gram = level_gram(q, h_dim, k);
                let (basis, _) = WeightedSpace::new(gram.clone())?.orthonormalize(EIGEN_CUTOFF)?;
                (gram, basis)
            };
            let level = Level { raw_dim, gram, basis, offset };
            offset += level.dim();
            levels.push(level);
        }
        if offset > MAX_DIM {
            return Err(FockError::Budget(format!("total dimension {offset} > {MAX_DIM}")));
        }
        Ok(Self { q, h_dim, level_cap, levels, total_dim: offset })
    }

    /// Truncation at `max(h_dim, 4)`.
    pub fn with_default_cap(q: f64, h_dim: usize) -> Result<Self, FockError> {
        Self::new(q, h_dim, h_dim.max(4))
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    pub fn level_cap(&self) -> usize {
        self.level_cap
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn level_dims(&self) -> Vec<usize> {
        self.levels.iter().map(Level::dim).collect()
    }

    pub fn level_range(&self, k: usize) -> Range<usize> {
        let l = &self.levels[k];
        l.offset..l.offset + l.dim()
    }

    /// Longest word of q-Gaussians whose vacuum moment is unaffected by the truncation.
    pub fn exact_word_length(&self) -> usize {
        2 * self.level_cap
    }

    fn check_vector(&self, e: &[f64]) -> Result<(), FockError> {
        if e.len() != self.h_dim {
            return Err(FockError::Dimension { expected: self.h_dim, found: e.len() });
        }
        Ok(())
    }

    /// Orthonormal coordinates of a raw level-`k` tensor (given in the standard tensor basis).
    pub fn level_coordinates(&self, k: usize, raw: &[C64]) -> Vec<C64> {
        let l = &self.levels[k];
        assert_eq!(raw.len(), l.raw_dim);
        let v = nalgebra::DVector::from_column_slice(raw);
        let coords = l.basis.adjoint() * (&l.gram * v);
        coords.iter().copied().collect()
    }

    pub fn vacuum(&self) -> nalgebra::DVector<C64> {
        let mut v = nalgebra::DVector::zeros(self.total_dim);
        v[0] = c64(1.0);
        v
    }

    /// Matrix of a map `T_k: level k → level k+1` given on raw tensors, in orthonormal coordinates:
    /// `C_{k+1}* G_{k+1} T_k C_k`.
    fn raising_block(&self, k: usize, raw: &ComplexMatrix) -> ComplexMatrix {
        let (lo, hi) = (&self.levels[k], &self.levels[k + 1]);
        hi.basis.adjoint() * (&hi.gram * raw) * &lo.basis
    }

    /// Creation operator `ℓ(e)`: `h_1⊗…⊗h_k ↦ e⊗h_1⊗…⊗h_k`, zero on the top level.
    pub fn creation(&self, e: &[f64]) -> Result<ComplexMatrix, FockError> {
        self.check_vector(e)?;
        let d = self.h_dim;
        let mut out = ComplexMatrix::zeros(self.total_dim, self.total_dim);
        for k in 0..self.level_cap {
            let raw_lo = self.levels[k].raw_dim;
            let raw_hi = self.levels[k + 1].raw_dim;
            let mut t = ComplexMatrix::zeros(raw_hi, raw_lo);
            for w in 0..raw_lo {
                for (a, &ea) in e.iter().enumerate() {
                    t[(a * raw_lo + w, w)] = c64(ea);
                }
            }
            debug_assert_eq!(raw_hi, d * raw_lo);
            let block = self.raising_block(k, &t);
            let (r, c) = (self.level_range(k + 1), self.level_range(k));
            out.view_mut((r.start, c.start), (r.len(), c.len())).copy_from(&block);
        }
        Ok(out)
    }

    /// Annihilation operator `ℓ(e)*`, the adjoint of [`Self::creation`] in the orthonormal basis.
    pub fn annihilation(&self, e: &[f64]) -> Result<ComplexMatrix, FockError> {
        Ok(self.creation(e)?.adjoint())
    }

    /// The q-Gaussian `s_q(e) = ℓ(e) + ℓ(e)*`.
    pub fn gaussian(&self, e: &[f64]) -> Result<ComplexMatrix, FockError> {
        let l = self.creation(e)?;
        let s = &l + l.adjoint();
        Ok(s)
    }

    /// `‖ℓ(g)*ℓ(e) − q ℓ(e)ℓ(g)* − ⟨g, e⟩ Id‖` on the levels below the cap, where the truncation
    /// does not interfere, as a residual with the unit floor.
    pub fn q_relation_residual(&self, e: &[f64], g: &[f64]) -> Result<f64, FockError> {
        let (le, lg) = (self.creation(e)?, self.creation(g)?);
        let lhs = lg.adjoint() * &le - (&le * lg.adjoint()).scale(self.q);
        let n = self.level_range(self.level_cap).start;
        let inner: f64 = e.iter().zip(g).map(|(a, b)| a * b).sum();
        let target = linalg::identity(n).scale(inner);
        Ok(linalg::residual(&lhs.view((0, 0), (n, n)).into_owned(), &target))
    }

    /// `τ(x) = ⟨Ω, xΩ⟩`.
    pub fn vacuum_trace(&self, x: &ComplexMatrix) -> C64 {
        x[(0, 0)]
    }

    /// `τ(s_q(f_1)⋯s_q(f_m))` by applying the factors to the vacuum from the right.
    pub fn word_vacuum_trace(&self, word: &[Vec<f64>]) -> Result<C64, FockError> {
        let mut v = self.vacuum();
        for f in word.iter().rev() {
            v = self.gaussian(f)? * v;
        }
        Ok(v[0])
    }

    /// The unitary `ℱ_q(u)` acting on level `k` by `u^{⊗k}`.
    pub fn second_quantize(&self, u: &DMatrix<f64>) -> Result<ComplexMatrix, FockError> {
        if u.nrows() != self.h_dim || u.ncols() != self.h_dim {
            return Err(FockError::Dimension { expected: self.h_dim, found: u.nrows() });
        }
        let defect = (u.transpose() * u - DMatrix::<f64>::identity(self.h_dim, self.h_dim)).amax();
        if !(defect < 1e-10) {
            return Err(FockError::NotOrthogonal(defect));
        }
        let uc = linalg::from_real(u);
        let mut power = linalg::identity(1);
        let mut blocks = Vec::with_capacity(self.level_cap + 1);
        for k in 0..=self.level_cap {
            if k > 0 {
                power = linalg::kron(&uc, &power);
            }
            let l = &self.levels[k];
            blocks.push(l.basis.adjoint() * (&l.gram * &power) * &l.basis);
        }
        Ok(linalg::block_diag(&blocks))
    }

    /// `Γ_q(u)(x) = ℱ_q(u) x ℱ_q(u)*` for a unitary produced by [`Self::second_quantize`].
    pub fn automorphism(fu: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
        fu * x * fu.adjoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{op_norm, random, residual};
    use crate::wick::wick_trace;

    #[test]
    fn level_dimensions() {
        let f = QFockSpace::new(-1.0, 2, 2).unwrap();
        assert_eq!(f.level_dims(), vec![1, 2, 1]);
        assert_eq!(f.total_dim(), 4);
        let f = QFockSpace::new(0.0, 2, 2).unwrap();
        assert_eq!(f.level_dims(), vec![1, 2, 4]);
        assert_eq!(f.total_dim(), 7);
        let f = QFockSpace::new(1.0, 1, 3).unwrap();
        assert_eq!(f.level_dims(), vec![1, 1, 1, 1]);
        // Symmetric powers of ℝ² have dimension k + 1.
        assert_eq!(QFockSpace::new(1.0, 2, 3).unwrap().level_dims(), vec![1, 2, 3, 4]);
        for d in 1..=3 {
            let f = QFockSpace::new(-1.0, d, d + 1).unwrap();
            assert_eq!(f.total_dim(), 1 << d);
            assert_eq!(*f.level_dims().last().unwrap(), 0);
        }
        assert_eq!(QFockSpace::new(-1.0, 4, 4).unwrap().level_dims(), vec![1, 4, 6, 4, 1]);
        // Strictly positive Gram matrices for |q| < 1: nothing is discarded.
        let f = QFockSpace::new(0.7, 2, 3).unwrap();
        assert_eq!(f.level_dims(), vec![1, 2, 4, 8]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(QFockSpace::new(1.5, 2, 2).unwrap_err(), FockError::Deformation(1.5));
        assert!(matches!(QFockSpace::new(0.0, 0, 2), Err(FockError::Input(_))));
        assert!(matches!(QFockSpace::new(0.0, 5, 6), Err(FockError::Budget(_))));
        let f = QFockSpace::new(0.0, 2, 2).unwrap();
        assert!(matches!(f.creation(&[1.0]), Err(FockError::Dimension { .. })));
        let shear = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(f.second_quantize(&shear), Err(FockError::NotOrthogonal(_))));
    }

    #[test]
    fn creation_on_vacuum_and_level_one() {
        let f = QFockSpace::new(0.3, 3, 3).unwrap();
        let e = [0.2, -0.5, 0.9];
        let v = f.creation(&e).unwrap() * f.vacuum();
        for (k, &ek) in e.iter().enumerate() {
            assert!((v[1 + k] - c64(ek)).norm() < 1e-15);
        }
        // ℓ(e)* f = ⟨e, f⟩ Ω on level 1.
        let g = [1.0, 2.0, -1.0];
        let mut gv = nalgebra::DVector::zeros(f.total_dim());
        for k in 0..3 {
            gv[1 + k] = c64(g[k]);
        }
        let w = f.annihilation(&e).unwrap() * gv;
        let expected = 0.2 - 1.0 - 0.9;
        assert!((w[0] - c64(expected)).norm() < 1e-14);
        assert!(w.rows(1, f.total_dim() - 1).norm() < 1e-14);
        assert!((f.annihilation(&e).unwrap() * f.vacuum()).norm() < 1e-15);
        assert!(f.creation(&[0.0; 3]).unwrap().norm() == 0.0);
    }

    #[test]
    fn fermionic_creation_squares_to_zero() {
        let f = QFockSpace::new(-1.0, 2, 2).unwrap();
        let l = f.creation(&[1.0, 0.0]).unwrap();
        assert!((&l * &l).norm() < 1e-14);
        let mut rng = random::rng(1);
        for _ in 0..5 {
            let e = random::unit_vector(3, &mut rng);
            let f = QFockSpace::new(-1.0, 3, 3).unwrap();
            let s = f.gaussian(&e).unwrap();
            assert!(op_norm(&(&s * &s - linalg::identity(f.total_dim()))) < 1e-12);
        }
    }

    #[test]
    fn q_relation_below_cap() {
        for q in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let f = QFockSpace::new(q, 2, 3).unwrap();
            let (e, g) = ([0.6, -0.8], [0.3, 0.4]);
            let (le, lg) = (f.creation(&e).unwrap(), f.creation(&g).unwrap());
            let lhs = lg.adjoint() * &le - (&le * lg.adjoint()).scale(q);
            let n = f.level_range(f.level_cap()).start;
            let target = linalg::identity(n).scale(e[0] * g[0] + e[1] * g[1]);
            let d = (lhs.view((0, 0), (n, n)) - &target).camax();
            assert!(d < 1e-9, "q = {q}: {d}");
            assert!(f.q_relation_residual(&e, &g).unwrap() < 1e-12);
        }
    }

    #[test]
    fn annihilation_is_the_q_adjoint_on_raw_tensors() {
        // For |q| < 1 the Gram matrices are invertible, so the adjoint can be taken on raw tensors.
        let q = 0.4;
        let f = QFockSpace::new(q, 2, 3).unwrap();
        let e = [0.7, -0.2];
        let k = 1;
        let (lo, hi) = (&f.levels[k], &f.levels[k + 1]);
        let mut t = ComplexMatrix::zeros(hi.raw_dim, lo.raw_dim);
        for w in 0..lo.raw_dim {
            for a in 0..2 {
                t[(a * lo.raw_dim + w, w)] = c64(e[a]);
            }
        }
        let raw_adj = WeightedSpace::new(hi.gram.clone())
            .unwrap()
            .weighted_adjoint(&t, &WeightedSpace::new(lo.gram.clone()).unwrap())
            .unwrap();
        let via_gram = lo.basis.adjoint() * &lo.gram * raw_adj * &hi.basis;
        let ann = f.annihilation(&e).unwrap();
        let (r, c) = (f.level_range(k), f.level_range(k + 1));
        let block = ann.view((r.start, c.start), (r.len(), c.len())).into_owned();
        assert!(residual(&block, &via_gram) < 1e-10);
    }

    #[test]
    fn gaussian_moments_match_wick() {
        let mut rng = random::rng(9);
        for q in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let f = QFockSpace::new(q, 2, 3).unwrap();
            for len in 0..=6 {
                let word: Vec<Vec<f64>> = (0..len).map(|_| random::unit_vector(2, &mut rng)).collect();
                let fock = f.word_vacuum_trace(&word).unwrap();
                let wick = wick_trace(q, &word).unwrap();
                assert!((fock - c64(wick)).norm() < 1e-9, "q={q} len={len}");
            }
            let s = f.gaussian(&[1.0, 0.0]).unwrap();
            assert!(linalg::hermitian_residual(&s) < 1e-12);
            assert!(f.vacuum_trace(&s).norm() < 1e-15);
            let s4 = &s * &s * &s * &s;
            assert!((f.vacuum_trace(&s4) - c64(2.0 + q)).norm() < 1e-12);
            assert!((f.vacuum_trace(&linalg::identity(f.total_dim())) - c64(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn second_quantization_intertwines_gaussians() {
        let mut rng = random::rng(4);
        for q in [-1.0, 0.0, 0.6, 1.0] {
            let f = QFockSpace::new(q, 3, 3).unwrap();
            let u = random::orthogonal(3, &mut rng);
            let fu = f.second_quantize(&u).unwrap();
            assert!(residual(&(fu.adjoint() * &fu), &linalg::identity(f.total_dim())) < 1e-10);
            let h = vec![0.3, -1.0, 0.5];
            let uh: Vec<f64> = (0..3).map(|r| (0..3).map(|c| u[(r, c)] * h[c]).sum()).collect();
            let lhs = QFockSpace::automorphism(&fu, &f.gaussian(&h).unwrap());
            assert!(residual(&lhs, &f.gaussian(&uh).unwrap()) < 1e-10);
            let id = f.second_quantize(&DMatrix::identity(3, 3)).unwrap();
            assert!(residual(&id, &linalg::identity(f.total_dim())) < 1e-12);
            // Trace preservation on a word.
            let word = [vec![1.0, 0.0, 0.0], h.clone(), vec![0.0, 1.0, 1.0], h.clone()];
            let x = word.iter().fold(linalg::identity(f.total_dim()), |acc, v| acc * f.gaussian(v).unwrap());
            let y = QFockSpace::automorphism(&fu, &x);
            assert!((f.vacuum_trace(&x) - f.vacuum_trace(&y)).norm() < 1e-10);
        }
    }
}
