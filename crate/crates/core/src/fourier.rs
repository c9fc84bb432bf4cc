//! Finite groups with 1-cocycles, Fourier multiplier semigroups on the group algebra and
//! the crossed product `Γ_q(H) ⋊ G` realized on `ℓ²(G) ⊗ ℱ_q(H)`.
//!
//! Carrier index convention: `δ_r ⊗ ξ_f` sits at `r · dim ℱ + f` (group factor first).

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fock::{FockError, QFockSpace};
use crate::gradient::{GradientKind, GradientSystem};
use crate::linalg::{self, c64, ComplexMatrix, LinalgError, C64, EIGEN_CUTOFF};
use crate::report::CheckReport;
use crate::schur::{self, SchurError, SchurSystem, DISTINCT_TOL};

/// Largest group accepted by the table constructor.
pub const MAX_ORDER: usize = 256;
/// Largest group accepted by the Herz-Schur gap comparison.
pub const MAX_COMPARISON_ORDER: usize = 64;
/// Tolerance of the structural checks run on construction.
pub const STRUCTURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FourierError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Budget(String),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Schur(#[from] SchurError),
}

type Result<T> = std::result::Result<T, FourierError>;

/// A finite group given by its multiplication table.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
}

/// JSON form of a group: `{"order": n, "table": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupJson {
    pub order: usize,
    pub table: Vec<Vec<usize>>,
}

impl FiniteGroup {
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 || n > MAX_ORDER {
            return Err(FourierError::Input(format!("group order must be in 1..={MAX_ORDER}, got {n}")));
        }
        if table.iter().any(|row| row.len() != n || row.iter().any(|&v| v >= n)) {
            return Err(FourierError::Input("multiplication table must be n×n with entries < n".into()));
        }
        let mut seen = vec![false; n];
        for r in 0..n {
            seen.iter_mut().for_each(|s| *s = false);
            for c in 0..n {
                if std::mem::replace(&mut seen[table[r][c]], true) {
                    return Err(FourierError::Input(format!("row {r} repeats an element: not a Latin square")));
                }
            }
            seen.iter_mut().for_each(|s| *s = false);
            for row in &table {
                if std::mem::replace(&mut seen[row[r]], true) {
                    return Err(FourierError::Input(format!("column {r} repeats an element: not a Latin square")));
                }
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|s| table[e][s] == s && table[s][e] == s))
            .ok_or_else(|| FourierError::Input("the table has no identity element".into()))?;
        for a in 0..n {
            for b in 0..n {
                let ab = table[a][b];
                for c in 0..n {
                    if table[ab][c] != table[a][table[b][c]] {
                        return Err(FourierError::Input(format!("associativity fails on ({a}, {b}, {c})")));
                    }
                }
            }
        }
        let inverse = (0..n)
            .map(|s| (0..n).find(|&t| table[s][t] == identity).expect("Latin square"))
            .collect();
        Ok(Self { table, inverse, identity })
    }

    /// `ℤ_n` with elements `0..n`.
    pub fn cyclic(n: usize) -> Result<Self> {
        Self::from_table((0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect())
    }

    /// The dihedral group of order `2n`: `r^k s^e` sits at index `k + n·e`.
    pub fn dihedral(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FourierError::Input("dihedral groups need n >= 1".into()));
        }
        let mul = |x: usize, y: usize| {
            let (a, e) = (x % n, x / n);
            let (b, f) = (y % n, y / n);
            let k = if e == 0 { a + b } else { a + n - b };
            k % n + n * ((e + f) % 2)
        };
        Self::from_table((0..2 * n).map(|x| (0..2 * n).map(|y| mul(x, y)).collect()).collect())
    }

    pub fn from_json(json: &GroupJson) -> Result<Self> {
        if json.table.len() != json.order {
            return Err(FourierError::Input(format!("order {} does not match the table", json.order)));
        }
        Self::from_table(json.table.clone())
    }

    pub fn to_json(&self) -> GroupJson {
        GroupJson { order: self.order(), table: self.table.clone() }
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, s: usize, t: usize) -> usize {
        self.table[s][t]
    }

    pub fn inv(&self, s: usize) -> usize {
        self.inverse[s]
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.table[a][b] == self.table[b][a]))
    }

    /// The permutation matrix of `λ_s`: `δ_r ↦ δ_{sr}`.
    pub fn left_regular(&self, s: usize) -> DMatrix<f64> {
        let n = self.order();
        let mut m = DMatrix::zeros(n, n);
        for r in 0..n {
            m[(self.mul(s, r), r)] = 1.0;
        }
        m
    }
}

/// An element `Σ_s x_s λ_s` of the group algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAlgebraElement {
    coeffs: Vec<C64>,
}

impl GroupAlgebraElement {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); order])
    }

    /// `λ_s`.
    pub fn delta(order: usize, s: usize) -> Self {
        let mut x = Self::zero(order);
        x.coeffs[s] = c64(1.0);
        x
    }

    pub fn random<R: rand::Rng + ?Sized>(order: usize, rng: &mut R) -> Self {
        Self::new(linalg::random::gaussian(order, 1, rng).iter().copied().collect())
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn check(&self, g: &FiniteGroup) -> Result<()> {
        if self.len() != g.order() {
            return Err(FourierError::Input(format!(
                "element has {} coefficients, group has order {}",
                self.len(),
                g.order()
            )));
        }
        Ok(())
    }

    /// `(x*)_s = conj(x_{s^{-1}})`.
    pub fn adjoint(&self, g: &FiniteGroup) -> Result<Self> {
        self.check(g)?;
        Ok(Self::new((0..g.order()).map(|s| self.coeffs[g.inv(s)].conj()).collect()))
    }

    /// Convolution `(xy)_u = Σ_s x_s y_{s^{-1}u}`.
    pub fn mul(&self, y: &Self, g: &FiniteGroup) -> Result<Self> {
        self.check(g)?;
        y.check(g)?;
        let mut out = Self::zero(g.order());
        for (s, &xs) in self.coeffs.iter().enumerate() {
            for (t, &yt) in y.coeffs.iter().enumerate() {
                out.coeffs[g.mul(s, t)] += xs * yt;
            }
        }
        Ok(out)
    }

    /// `L_x[r, t] = x_{r t^{-1}}`, the left-regular image on `ℓ²(G)`.
    pub fn left_regular(&self, g: &FiniteGroup) -> Result<ComplexMatrix> {
        self.check(g)?;
        let n = g.order();
        Ok(ComplexMatrix::from_fn(n, n, |r, t| self.coeffs[g.mul(r, g.inv(t))]))
    }

    /// `τ_G(x) = x_e`.
    pub fn trace(&self, g: &FiniteGroup) -> C64 {
        self.coeffs[g.identity()]
    }

    pub fn scale(&self, k: C64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn add(&self, y: &Self) -> Self {
        Self::new(self.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, y: &Self) -> Self {
        Self::new(self.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a - b).collect())
    }

    /// Euclidean norm of the coefficients, i.e. the `L²(VN(G))` norm.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn as_vector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.coeffs)
    }
}

/// JSON form of a cocycle: `{"pi": [matrix per element], "b": [vector per element]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleJson {
    pub pi: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
}

/// `{"group": ..., "cocycle": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCocycleJson {
    pub group: GroupJson,
    pub cocycle: CocycleJson,
}

/// A finite group with an orthogonal representation `π` on `H = ℝ^d` and a 1-cocycle `b`.
#[derive(Debug, Clone)]
pub struct GroupCocycleSystem {
    group: FiniteGroup,
    pi: Vec<DMatrix<f64>>,
    b: Vec<DVector<f64>>,
    psi: Vec<f64>,
}

fn vec_norm2(v: &DVector<f64>) -> f64 {
    v.norm_squared()
}

impl GroupCocycleSystem {
    /// Validates the homomorphism, cocycle and conditional negativity invariants.
    pub fn new(group: FiniteGroup, pi: Vec<DMatrix<f64>>, b: Vec<Vec<f64>>) -> Result<Self> {
        let n = group.order();
        if pi.len() != n || b.len() != n {
            return Err(FourierError::Input(format!("need one π_s and one b(s) per element ({n})")));
        }
        let d = b[0].len();
        if d == 0 {
            return Err(FourierError::Input("H must have dimension at least 1".into()));
        }
        if b.iter().any(|v| v.len() != d) || pi.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(FourierError::Input(format!("π_s must be {d}×{d} and b(s) must lie in ℝ^{d}")));
        }
        if b.iter().flatten().chain(pi.iter().flat_map(|m| m.iter())).any(|v| !v.is_finite()) {
            return Err(FourierError::Input("cocycle data has non-finite entries".into()));
        }
        let b: Vec<DVector<f64>> = b.into_iter().map(DVector::from_vec).collect();
        let psi = b.iter().map(vec_norm2).collect();
        let sys = Self { group, pi, b, psi };
        let scale = sys.psi.iter().cloned().fold(1.0, f64::max);
        let (hom, orth) = sys.representation_residuals();
        if hom > STRUCTURE_TOL || orth > STRUCTURE_TOL {
            return Err(FourierError::Input(format!(
                "π is not an orthogonal representation (homomorphism {hom:.2e}, orthogonality {orth:.2e})"
            )));
        }
        let law = sys.cocycle_residual();
        if law > STRUCTURE_TOL * scale.sqrt() {
            return Err(FourierError::Input(format!("cocycle law fails with residual {law:.2e}")));
        }
        let e = sys.group.identity();
        if sys.psi[e] > STRUCTURE_TOL * scale {
            return Err(FourierError::Input("ψ(e) must vanish".into()));
        }
        if sys.symmetry_residual() > STRUCTURE_TOL * scale {
            return Err(FourierError::Input("ψ(s) ≠ ψ(s^{-1})".into()));
        }
        if !is_conditionally_negative(&sys.group, &sys.psi, STRUCTURE_TOL)? {
            return Err(FourierError::Input("ψ is not conditionally negative definite".into()));
        }
        Ok(sys)
    }

    /// Left-regular cocycle on `H = ℓ²(G)` with `b(s) = π_s ξ − ξ`.
    pub fn regular(group: FiniteGroup, xi: &[f64]) -> Result<Self> {
        let n = group.order();
        if xi.len() != n {
            return Err(FourierError::Input(format!("ξ must have {n} entries")));
        }
        let xi = DVector::from_column_slice(xi);
        let pi: Vec<DMatrix<f64>> = (0..n).map(|s| group.left_regular(s)).collect();
        let mut b = Vec::with_capacity(n);
        for s in 0..n {
            let bs = &pi[s] * &xi - &xi;
            if s != group.identity() && bs.norm() <= EIGEN_CUTOFF {
                return Err(FourierError::Input(format!("ξ is fixed by π_{s}")));
            }
            b.push(bs.as_slice().to_vec());
        }
        Self::new(group, pi, b)
    }

    /// Donut cocycle on `ℤ_N`: `b(k) = (e^{2πipk/N}, e^{2πiqk/N}) − (1, 1)` in `ℂ² ≅ ℝ⁴`,
    /// with `π_k` the diagonal multiplication by the same phases.
    pub fn donut(n: usize, p: i64, q: i64) -> Result<Self> {
        if n < 2 {
            return Err(FourierError::Input("the donut cocycle needs N >= 2".into()));
        }
        let group = FiniteGroup::cyclic(n)?;
        let mut pi = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for k in 0..n {
            let angles = [p, q].map(|m| 2.0 * PI * ((m * k as i64).rem_euclid(n as i64)) as f64 / n as f64);
            let mut rot = DMatrix::zeros(4, 4);
            let mut v = Vec::with_capacity(4);
            for (blk, &th) in angles.iter().enumerate() {
                let (s, c) = th.sin_cos();
                let o = 2 * blk;
                rot[(o, o)] = c;
                rot[(o, o + 1)] = -s;
                rot[(o + 1, o)] = s;
                rot[(o + 1, o + 1)] = c;
                v.extend([c - 1.0, s]);
            }
            pi.push(rot);
            b.push(v);
        }
        Self::new(group, pi, b)
    }

    /// Cocycle of a symmetric measure `μ` on the characters of `ℤ_n`: `weights[k] = μ(χ_k)`,
    /// `χ_k(s) = e^{2πiks/n}`, with `weights[0]` (the trivial character) required to vanish.
    /// `H = L²(Ĝ∖{0}, μ/2)` realified, `b(s)(χ) = 1 − χ(s)` and `π_s` multiplies by `χ(s)`.
    pub fn levy(n: usize, weights: &[f64]) -> Result<Self> {
        if n == 0 || weights.len() != n {
            return Err(FourierError::Input(format!("expected {n} character weights")));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(FourierError::Input("character weights must be finite and nonnegative".into()));
        }
        if weights[0] != 0.0 {
            return Err(FourierError::Input("the trivial character carries no mass".into()));
        }
        let wmax = weights.iter().cloned().fold(0.0, f64::max);
        if (1..n).any(|k| (weights[k] - weights[n - k]).abs() > 1e-12 * wmax.max(1.0)) {
            return Err(FourierError::Input("the measure must be symmetric under χ ↦ χ̄".into()));
        }
        let group = FiniteGroup::cyclic(n)?;
        let d = 2 * (n - 1).max(1);
        let mut pi = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for s in 0..n {
            let mut rot = DMatrix::identity(d, d);
            let mut v = vec![0.0; d];
            for k in 1..n {
                let th = 2.0 * PI * ((k * s) % n) as f64 / n as f64;
                let (sn, cs) = th.sin_cos();
                let o = 2 * (k - 1);
                let w = (weights[k] / 2.0).sqrt();
                v[o] = w * (1.0 - cs);
                v[o + 1] = -w * sn;
                rot[(o, o)] = cs;
                rot[(o, o + 1)] = -sn;
                rot[(o + 1, o)] = sn;
                rot[(o + 1, o + 1)] = cs;
            }
            pi.push(rot);
            b.push(v);
        }
        Self::new(group, pi, b)
    }

    /// The measure `μ(χ_1) = μ(χ_{n−1}) = n²/4π²` (total mass `n²/2π²`), whose length is
    /// `ψ_n(k) = (n²/2π²)(1 − cos 2πk/n)`.
    pub fn levy_cosine(n: usize) -> Result<Self> {
        let mut w = vec![0.0; n];
        if n >= 2 {
            let c = (n * n) as f64 / (4.0 * PI * PI);
            w[1] += c;
            w[n - 1] += c;
        }
        Self::levy(n, &w)
    }

    /// A cocycle realizing a conditionally negative length `ψ`, by the GNS construction on
    /// the kernel `K(s, t) = ½(ψ(s) + ψ(t) − ψ(s^{-1}t))`.
    pub fn from_length(group: FiniteGroup, psi: &[f64]) -> Result<Self> {
        let n = group.order();
        if psi.len() != n {
            return Err(FourierError::Input(format!("ψ must have {n} entries")));
        }
        if !is_conditionally_negative(&group, psi, STRUCTURE_TOL)? {
            return Err(FourierError::Input("ψ is not conditionally negative definite".into()));
        }
        let kernel = ComplexMatrix::from_fn(n, n, |s, t| c64(0.5 * (psi[s] + psi[t] - psi[group.mul(group.inv(s), t)])));
        let eig = linalg::HermitianEigen::new(&kernel)?;
        let cut = EIGEN_CUTOFF * eig.max_abs().max(1.0);
        let kept: Vec<usize> = (0..n).filter(|&k| eig.values[k] > cut).collect();
        let r = kept.len();
        // Row k of V is sqrt(λ_k) u_kᵀ, so that VᵀV = K and b(s) is column s.
        let v = DMatrix::from_fn(r.max(1), n, |row, s| {
            if r == 0 {
                0.0
            } else {
                let k = kept[row];
                eig.values[k].sqrt() * eig.vectors[(s, k)].re
            }
        });
        let b: Vec<Vec<f64>> = (0..n).map(|s| v.column(s).iter().copied().collect()).collect();
        let pi: Vec<DMatrix<f64>> = if r == 0 {
            vec![DMatrix::identity(1, 1); n]
        } else {
            let v_pinv = v.clone().pseudo_inverse(EIGEN_CUTOFF).map_err(|e| FourierError::Input(e.to_string()))?;
            (0..n)
                .map(|s| {
                    let shifted = DMatrix::from_fn(r, n, |row, t| v[(row, group.mul(s, t))] - v[(row, s)]);
                    shifted * &v_pinv
                })
                .collect()
        };
        Self::new(group, pi, b)
    }

    /// Word length `min(k, n − k)` on `ℤ_n`.
    pub fn cyclic_word_length(n: usize) -> Result<Self> {
        let psi: Vec<f64> = (0..n).map(|k| k.min(n - k) as f64).collect();
        Self::from_length(FiniteGroup::cyclic(n)?, &psi)
    }

    /// Built-in systems: `Zn:<n>` (word length), `donut:<N>:<p>:<q>`, `levy:<n>` (cosine length),
    /// `levy:<n>:<w1>,...,<w_{n-1}>`, `regular:<n>` and `dihedral:<n>` (regular cocycle, `ξ = δ_e`).
    pub fn from_name(name: &str) -> Result<Self> {
        let parts: Vec<&str> = name.split(':').collect();
        let bad = || FourierError::Input(format!("unknown group system '{name}'"));
        let int = |s: &str| s.parse::<i64>().map_err(|_| bad());
        let size = |s: &str| s.parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(bad);
        match parts.as_slice() {
            ["Zn", n] => Self::cyclic_word_length(size(n)?),
            ["donut", n, p, q] => Self::donut(size(n)?, int(p)?, int(q)?),
            ["levy", n] => Self::levy_cosine(size(n)?),
            ["levy", n, w] => {
                let n = size(n)?;
                let mut weights = vec![0.0];
                for x in w.split(',') {
                    weights.push(x.trim().parse::<f64>().map_err(|_| bad())?);
                }
                Self::levy(n, &weights)
            }
            ["regular", n] => {
                let g = FiniteGroup::cyclic(size(n)?)?;
                let xi = DVector::from_fn(g.order(), |s, _| if s == g.identity() { 1.0 } else { 0.0 });
                Self::regular(g, xi.as_slice())
            }
            ["dihedral", n] => {
                let g = FiniteGroup::dihedral(size(n)?)?;
                let xi = DVector::from_fn(g.order(), |s, _| if s == g.identity() { 1.0 } else { 0.0 });
                Self::regular(g, xi.as_slice())
            }
            _ => Err(bad()),
        }
    }

    pub fn from_json(json: &GroupCocycleJson) -> Result<Self> {
        let group = FiniteGroup::from_json(&json.group)?;
        let pi = json
            .cocycle
            .pi
            .iter()
            .map(|rows| {
                let r = rows.len();
                if rows.iter().any(|row| row.len() != r) {
                    return Err(FourierError::Input("each π_s must be a square matrix".into()));
                }
                Ok(DMatrix::from_fn(r, r, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(group, pi, json.cocycle.b.clone())
    }

    pub fn to_json(&self) -> GroupCocycleJson {
        GroupCocycleJson {
            group: self.group.to_json(),
            cocycle: CocycleJson {
                pi: self
                    .pi
                    .iter()
                    .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
                    .collect(),
                b: self.b.iter().map(|v| v.as_slice().to_vec()).collect(),
            },
        }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    pub fn h_dim(&self) -> usize {
        self.b[0].len()
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn pi(&self, s: usize) -> &DMatrix<f64> {
        &self.pi[s]
    }

    pub fn b(&self, s: usize) -> &[f64] {
        self.b[s].as_slice()
    }

    /// Worst `‖π_sπ_t − π_{st}‖_F` and `‖π_sᵀπ_s − 1‖_F`.
    pub fn representation_residuals(&self) -> (f64, f64) {
        let n = self.order();
        let d = self.h_dim();
        let mut hom = 0.0_f64;
        let mut orth = 0.0_f64;
        for s in 0..n {
            orth = orth.max((self.pi[s].transpose() * &self.pi[s] - DMatrix::identity(d, d)).norm());
            for t in 0..n {
                hom = hom.max((&self.pi[s] * &self.pi[t] - &self.pi[self.group.mul(s, t)]).norm());
            }
        }
        (hom, orth)
    }

    /// Worst `‖b(st) − b(s) − π_s b(t)‖`.
    pub fn cocycle_residual(&self) -> f64 {
        let n = self.order();
        let mut worst = 0.0_f64;
        for s in 0..n {
            for t in 0..n {
                let lhs = &self.b[self.group.mul(s, t)];
                worst = worst.max((lhs - &self.b[s] - &self.pi[s] * &self.b[t]).norm());
            }
        }
        worst
    }

    /// Worst `|ψ(s) − ψ(s^{-1})|`.
    pub fn symmetry_residual(&self) -> f64 {
        (0..self.order())
            .map(|s| (self.psi[s] - self.psi[self.group.inv(s)]).abs())
            .fold(0.0, f64::max)
    }

    /// Worst `|ψ(s) − target(s)|`.
    pub fn length_residual(&self, target: impl Fn(usize) -> f64) -> f64 {
        (0..self.order()).map(|s| (self.psi[s] - target(s)).abs()).fold(0.0, f64::max)
    }

    fn check(&self, x: &GroupAlgebraElement) -> Result<()> {
        x.check(&self.group)
    }

    fn multiplier(&self, x: &GroupAlgebraElement, f: impl Fn(f64) -> f64) -> Result<GroupAlgebraElement> {
        self.check(x)?;
        Ok(GroupAlgebraElement::new(x.coeffs.iter().zip(&self.psi).map(|(c, &p)| c * f(p)).collect()))
    }

    /// `λ_s ↦ e^{−tψ(s)} λ_s`.
    pub fn apply_group_semigroup(&self, t: f64, x: &GroupAlgebraElement) -> Result<GroupAlgebraElement> {
        if !(t >= 0.0) {
            return Err(FourierError::Input(format!("semigroup time must be nonnegative, got {t}")));
        }
        self.multiplier(x, |p| (-t * p).exp())
    }

    /// `λ_s ↦ ψ(s) λ_s`.
    pub fn apply_generator(&self, x: &GroupAlgebraElement) -> Result<GroupAlgebraElement> {
        self.multiplier(x, |p| p)
    }

    pub fn apply_sqrt_generator(&self, x: &GroupAlgebraElement) -> Result<GroupAlgebraElement> {
        self.multiplier(x, f64::sqrt)
    }

    /// The Herz-Schur witness `[e^{−tψ(s^{-1}r)}]_{s,r}`.
    pub fn herz_schur_witness(&self, t: f64) -> ComplexMatrix {
        let n = self.order();
        ComplexMatrix::from_fn(n, n, |s, r| c64((-t * self.psi[self.group.mul(self.group.inv(s), r)]).exp()))
    }

    /// `Γ(x, y) = ½[A(x*)y + x*A(y) − A(x*y)]` in the group algebra.
    pub fn group_carre_du_champ(&self, x: &GroupAlgebraElement, y: &GroupAlgebraElement) -> Result<GroupAlgebraElement> {
        let g = &self.group;
        let xs = x.adjoint(g)?;
        let a = self.apply_generator(&xs)?.mul(y, g)?;
        let b = xs.mul(&self.apply_generator(y)?, g)?;
        let c = self.apply_generator(&xs.mul(y, g)?)?;
        Ok(a.add(&b).sub(&c).scale(c64(0.5)))
    }

    /// `Γ(λ_s, λ_t) = ½[ψ(s^{-1}) + ψ(t) − ψ(s^{-1}t)] λ_{s^{-1}t}` as (coefficient, position).
    pub fn carre_du_champ_lambda(&self, s: usize, t: usize) -> (f64, usize) {
        let g = &self.group;
        let si = g.inv(s);
        let u = g.mul(si, t);
        (0.5 * (self.psi[si] + self.psi[t] - self.psi[u]), u)
    }

    /// The cocycle form `−⟨b(s^{-1}), π_{s^{-1}} b(t)⟩` of the same coefficient.
    pub fn carre_du_champ_cocycle(&self, s: usize, t: usize) -> (f64, usize) {
        let g = &self.group;
        let si = g.inv(s);
        (-self.b[si].dot(&(&self.pi[si] * &self.b[t])), g.mul(si, t))
    }

    /// `𝒢_ψ = inf{‖b(s) − b(t)‖² : b(s) ≠ b(t)}`.
    pub fn gap_psi(&self) -> f64 {
        let points: Vec<Vec<f64>> = self.b.iter().map(|v| v.as_slice().to_vec()).collect();
        let scale = 4.0 * self.psi.iter().cloned().fold(0.0, f64::max);
        schur::min_separation(&points, DISTINCT_TOL * scale.max(1.0))
    }

    /// The Herz-Schur family `α_s = b(s)` on the index set `G`.
    pub fn herz_schur_family(&self) -> Result<SchurSystem> {
        Ok(SchurSystem::new(self.b.iter().map(|v| v.as_slice().to_vec()).collect())?)
    }

    /// `(𝒢_α, 𝒢_ψ)` with a report asserting `𝒢_α ≤ 𝒢_ψ`.
    pub fn gap_comparison(&self, tolerance: f64) -> Result<(f64, f64, CheckReport)> {
        let start = Instant::now();
        if self.order() > MAX_COMPARISON_ORDER {
            return Err(FourierError::Budget(format!(
                "gap comparison is limited to groups of order {MAX_COMPARISON_ORDER}"
            )));
        }
        let g_alpha = self.herz_schur_family()?.gap()?;
        let g_psi = self.gap_psi();
        let excess = if g_alpha.is_finite() { (g_alpha - g_psi).max(0.0) } else { 0.0 };
        let pass = g_alpha <= g_psi + tolerance || (g_alpha.is_infinite() && g_psi.is_infinite());
        let report = CheckReport::verdict("gap_comparison", pass, excess, tolerance)
            .value(g_psi)
            .param("g_alpha", g_alpha)
            .param("g_psi", g_psi)
            .since(start);
        Ok((g_alpha, g_psi, report))
    }

    /// `∂(x) = Σ_s x_s s_q(b(s)) ⋊ λ_s` on `ℓ²(G) ⊗ ℱ_q(H)`.
    pub fn group_gradient(&self, fock: &QFockSpace, x: &GroupAlgebraElement) -> Result<ComplexMatrix> {
        CrossedProduct::new(self.clone(), fock.clone())?.gradient(x)
    }

    /// The L² gradient triple: source `ℓ²(G)`, target `ℓ²(G) ⊗ ℱ_q(H)` (index `s·dim ℱ + f`),
    /// where `z` is represented by the vector `z(δ_e ⊗ Ω)`.
    pub fn gradient_system(&self, fock: &QFockSpace) -> Result<GradientSystem> {
        let product = CrossedProduct::new(self.clone(), fock.clone())?;
        let n = self.order();
        let f = fock.total_dim();
        let level1 = fock.level_range(1);
        // ∂λ_s (δ_e ⊗ Ω) = δ_s ⊗ π_{s^{-1}} b(s) = δ_s ⊗ (−b(s^{-1})), a level-one vector.
        let mut grad = ComplexMatrix::zeros(n * f, n);
        let mut grad_adjoint = ComplexMatrix::zeros(n, n * f);
        for s in 0..n {
            let v = &self.b[self.group.inv(s)];
            for (k, a) in level1.clone().enumerate() {
                grad[(s * f + a, s)] = c64(-v[k]);
                grad_adjoint[(s, s * f + a)] = c64(-v[k]);
            }
        }
        let generator = ComplexMatrix::from_diagonal(&DVector::from_fn(n, |s, _| c64(self.psi[s])));
        let target_generator = ComplexMatrix::from_diagonal(&DVector::from_fn(n * f, |r, _| c64(self.psi[r / f])));
        GradientSystem::new(GradientKind::Fourier { product }, generator, grad, grad_adjoint, Some(target_generator))
            .map_err(|e| FourierError::Input(e.to_string()))
    }
}

/// `−[ψ(s_j^{-1}s_i)]` is PSD on the zero-sum subspace, tested on the basis `δ_s − δ_e`.
pub fn is_conditionally_negative(group: &FiniteGroup, psi: &[f64], tol: f64) -> Result<bool> {
    let n = group.order();
    if psi.len() != n {
        return Err(FourierError::Input(format!("ψ must have {n} entries")));
    }
    if n == 1 {
        return Ok(true);
    }
    let e = group.identity();
    let others: Vec<usize> = (0..n).filter(|&s| s != e).collect();
    let kernel = |i: usize, j: usize| psi[group.mul(group.inv(j), i)];
    let m = ComplexMatrix::from_fn(n - 1, n - 1, |a, b| {
        let (i, j) = (others[a], others[b]);
        c64(-(kernel(i, j) - kernel(i, e) - kernel(e, j) + kernel(e, e)))
    });
    let scale = psi.iter().cloned().fold(1.0, f64::max);
    let eig = linalg::HermitianEigen::new(&m)?;
    Ok(eig.values.iter().all(|&v| v >= -tol * scale))
}

/// `Γ_q(H) ⋊ G` acting on `ℓ²(G) ⊗ ℱ_q(H)`.
#[derive(Debug, Clone)]
pub struct CrossedProduct {
    system: GroupCocycleSystem,
    fock: QFockSpace,
    second_quantized: Vec<ComplexMatrix>,
}

impl CrossedProduct {
    pub fn new(system: GroupCocycleSystem, fock: QFockSpace) -> Result<Self> {
        if fock.h_dim() != system.h_dim() {
            return Err(FourierError::Input(format!(
                "Fock space is built over dimension {}, the cocycle lives in dimension {}",
                fock.h_dim(),
                system.h_dim()
            )));
        }
        let dim = system.order() * fock.total_dim();
        if dim > crate::fock::MAX_DIM {
            return Err(FourierError::Budget(format!(
                "crossed product carrier has dimension {dim} > {}",
                crate::fock::MAX_DIM
            )));
        }
        let second_quantized =
            (0..system.order()).map(|s| fock.second_quantize(system.pi(s))).collect::<std::result::Result<_, _>>()?;
        Ok(Self { system, fock, second_quantized })
    }

    pub fn system(&self) -> &GroupCocycleSystem {
        &self.system
    }

    pub fn fock(&self) -> &QFockSpace {
        &self.fock
    }

    pub fn dim(&self) -> usize {
        self.system.order() * self.fock.total_dim()
    }

    fn check_fock_operator(&self, x: &ComplexMatrix) -> Result<()> {
        let f = self.fock.total_dim();
        if x.nrows() != f || x.ncols() != f {
            return Err(FourierError::Input(format!("expected a {f}×{f} Fock operator")));
        }
        Ok(())
    }

    /// `α_s(x) = Γ_q(π_s) x Γ_q(π_s)*`.
    pub fn alpha(&self, s: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_fock_operator(x)?;
        Ok(QFockSpace::automorphism(&self.second_quantized[s], x))
    }

    /// `π(x)`: block `r` is `α_{r^{-1}}(x)`.
    pub fn pi(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let g = self.system.group();
        let blocks = (0..g.order()).map(|r| self.alpha(g.inv(r), x)).collect::<Result<Vec<_>>>()?;
        Ok(linalg::block_diag(&blocks))
    }

    /// `λ_s ⊗ Id`.
    pub fn lambda(&self, s: usize) -> ComplexMatrix {
        let g = self.system.group();
        linalg::kron(&linalg::from_real(&g.left_regular(s)), &linalg::identity(self.fock.total_dim()))
    }

    /// `x ⋊ λ_s = π(x)(λ_s ⊗ Id)`.
    pub fn embed(&self, x: &ComplexMatrix, s: usize) -> Result<ComplexMatrix> {
        // Block (st, t) is α_{(st)^{-1}}(x); every other block vanishes.
        let g = self.system.group();
        let f = self.fock.total_dim();
        let mut out = ComplexMatrix::zeros(self.dim(), self.dim());
        for t in 0..g.order() {
            let r = g.mul(s, t);
            out.view_mut((r * f, t * f), (f, f)).copy_from(&self.alpha(g.inv(r), x)?);
        }
        Ok(out)
    }

    /// `Σ_s x_s (1 ⋊ λ_s) = L_x ⊗ Id`.
    pub fn group_element(&self, x: &GroupAlgebraElement) -> Result<ComplexMatrix> {
        Ok(linalg::kron(&x.left_regular(self.system.group())?, &linalg::identity(self.fock.total_dim())))
    }

    fn check_carrier(&self, z: &ComplexMatrix) -> Result<()> {
        let d = self.dim();
        if z.nrows() != d || z.ncols() != d {
            return Err(FourierError::Input(format!("expected a {d}×{d} operator on ℓ²(G) ⊗ ℱ_q(H)")));
        }
        Ok(())
    }

    /// `τ_⋊(z) = |G|^{-1} Σ_r ⟨δ_r ⊗ Ω, z(δ_r ⊗ Ω)⟩`, so that `τ_⋊(x ⋊ λ_s) = τ(x) δ_{s=e}`.
    pub fn trace(&self, z: &ComplexMatrix) -> Result<C64> {
        self.check_carrier(z)?;
        let n = self.system.order();
        let f = self.fock.total_dim();
        Ok((0..n).map(|r| z[(r * f, r * f)]).sum::<C64>() / n as f64)
    }

    /// The trace-preserving conditional expectation onto `VN(G)`: coefficient `s` is
    /// `τ_⋊(z (1 ⋊ λ_s)*)`.
    pub fn expectation(&self, z: &ComplexMatrix) -> Result<GroupAlgebraElement> {
        self.check_carrier(z)?;
        let g = self.system.group();
        let (n, f) = (g.order(), self.fock.total_dim());
        // (z (λ_s ⊗ Id)*) at (rf, rf) is z at (rf, (s^{-1}r) f).
        let coeffs = (0..n)
            .map(|s| (0..n).map(|r| z[(r * f, g.mul(g.inv(s), r) * f)]).sum::<C64>() / n as f64)
            .collect();
        Ok(GroupAlgebraElement::new(coeffs))
    }

    /// `E(x* y)` without forming the product: only the columns at `δ_r ⊗ Ω` enter.
    pub fn expectation_of_product(&self, x: &ComplexMatrix, y: &ComplexMatrix) -> Result<GroupAlgebraElement> {
        self.check_carrier(x)?;
        self.check_carrier(y)?;
        let g = self.system.group();
        let (n, f) = (g.order(), self.fock.total_dim());
        let vacuum_columns = |m: &ComplexMatrix| ComplexMatrix::from_fn(m.nrows(), n, |k, r| m[(k, r * f)]);
        let gram = vacuum_columns(x).adjoint() * vacuum_columns(y);
        let coeffs = (0..n).map(|s| (0..n).map(|r| gram[(r, g.mul(g.inv(s), r))]).sum::<C64>() / n as f64).collect();
        Ok(GroupAlgebraElement::new(coeffs))
    }

    /// `∂(x) = Σ_s x_s s_q(b(s)) ⋊ λ_s`.
    pub fn gradient(&self, x: &GroupAlgebraElement) -> Result<ComplexMatrix> {
        x.check(self.system.group())?;
        let mut out = ComplexMatrix::zeros(self.dim(), self.dim());
        for (s, &c) in x.coeffs().iter().enumerate() {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let gauss = self.fock.gaussian(self.system.b(s))?;
            out += self.embed(&gauss, s)? * c;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random, residual};

    fn delta(n: usize, s: usize) -> GroupAlgebraElement {
        GroupAlgebraElement::delta(n, s)
    }

    #[test]
    fn group_tables() {
        let z5 = FiniteGroup::cyclic(5).unwrap();
        assert_eq!(z5.mul(3, 4), 2);
        assert_eq!(z5.inv(2), 3);
        assert!(z5.is_abelian());
        let d3 = FiniteGroup::dihedral(3).unwrap();
        assert_eq!(d3.order(), 6);
        assert!(!d3.is_abelian());
        assert_eq!(d3.mul(3, 3), d3.identity());
        assert!(FiniteGroup::from_table(vec![vec![0, 1], vec![0, 1]]).is_err());
        assert!(FiniteGroup::from_table(vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 2, 0]]).is_err());
        // A Latin square without associativity: the quasigroup x∘y = (2x − y) mod 3 shifted to have a unit.
        let loop5 = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(FiniteGroup::from_table(loop5).is_err());
        let json = z5.to_json();
        assert_eq!(FiniteGroup::from_json(&json).unwrap(), z5);
    }

    #[test]
    fn algebra_rules() {
        let g = FiniteGroup::dihedral(3).unwrap();
        let mut rng = random::rng(4);
        let x = GroupAlgebraElement::random(6, &mut rng);
        let y = GroupAlgebraElement::random(6, &mut rng);
        let lxy = x.mul(&y, &g).unwrap().left_regular(&g).unwrap();
        let prod = x.left_regular(&g).unwrap() * y.left_regular(&g).unwrap();
        assert!(residual(&lxy, &prod) < 1e-12);
        let la = x.adjoint(&g).unwrap().left_regular(&g).unwrap();
        assert!(residual(&la, &x.left_regular(&g).unwrap().adjoint()) < 1e-12);
        assert_eq!(delta(6, 1).mul(&delta(6, 3), &g).unwrap(), delta(6, g.mul(1, 3)));
    }

    #[test]
    fn regular_cocycles() {
        let z2 = GroupCocycleSystem::from_name("regular:2").unwrap();
        assert_eq!(z2.psi(), &[0.0, 2.0]);
        let z4 = GroupCocycleSystem::from_name("regular:4").unwrap();
        assert_eq!(z4.psi(), &[0.0, 2.0, 2.0, 2.0]);
        assert!(GroupCocycleSystem::regular(FiniteGroup::cyclic(3).unwrap(), &[0.0; 3]).is_err());
        let d4 = GroupCocycleSystem::from_name("dihedral:4").unwrap();
        assert!(d4.cocycle_residual() < 1e-12);
        assert_eq!(z2.gap_psi(), 2.0);
    }

    #[test]
    fn donut_values() {
        let d = GroupCocycleSystem::donut(8, 1, 1).unwrap();
        assert!((d.psi()[1] - (4.0 - 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(d.b(0), &[0.0; 4]);
        assert!(d.cocycle_residual() < 1e-12);
        let g_psi = d.gap_psi();
        assert!((g_psi - 4.0 * (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-12);
        let (g_alpha, _, report) = d.gap_comparison(1e-12).unwrap();
        assert!(report.pass);
        assert!(g_alpha < g_psi);
        assert!(g_alpha <= 8.0 * (1.0 - 1.0 / 2f64.sqrt()).powi(2) + 1e-12);
    }

    #[test]
    fn levy_cocycles() {
        for n in 3..=12 {
            let sys = GroupCocycleSystem::levy_cosine(n).unwrap();
            let c = (n * n) as f64 / (2.0 * PI * PI);
            let target = |k: usize| c * (1.0 - (2.0 * PI * k as f64 / n as f64).cos());
            assert!(sys.length_residual(target) < 1e-12, "n = {n}");
            assert!(sys.cocycle_residual() < 1e-12);
        }
        let zero = GroupCocycleSystem::levy(3, &[0.0; 3]).unwrap();
        assert!(zero.psi().iter().all(|&p| p == 0.0));
        let z2 = GroupCocycleSystem::levy(2, &[0.0, 1.0]).unwrap();
        assert!((z2.psi()[1] - 2.0).abs() < 1e-15);
        assert!(GroupCocycleSystem::levy(4, &[0.0, 1.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn word_lengths_are_negative_definite() {
        for n in 2..=12 {
            let psi: Vec<f64> = (0..n).map(|k| k.min(n - k) as f64).collect();
            let g = FiniteGroup::cyclic(n).unwrap();
            assert!(is_conditionally_negative(&g, &psi, 1e-9).unwrap(), "n = {n}");
            let sys = GroupCocycleSystem::cyclic_word_length(n).unwrap();
            assert!(sys.length_residual(|k| psi[k]) < 1e-9);
        }
        let g = FiniteGroup::cyclic(3).unwrap();
        assert!(!is_conditionally_negative(&g, &[0.0, -1.0, -1.0], 1e-9).unwrap());
        assert_eq!(GroupCocycleSystem::from_name("Zn:1").unwrap().psi(), &[0.0]);
    }

    #[test]
    fn semigroup_and_gamma() {
        let sys = GroupCocycleSystem::from_name("Zn:4").unwrap();
        let g = sys.group().clone();
        let mut rng = random::rng(9);
        let x = GroupAlgebraElement::random(4, &mut rng);
        assert_eq!(sys.apply_group_semigroup(0.0, &x).unwrap(), x);
        assert_eq!(sys.apply_group_semigroup(3.0, &delta(4, 0)).unwrap(), delta(4, 0));
        for t in [0.1, 1.0, 10.0] {
            assert!(linalg::is_psd(&sys.herz_schur_witness(t), 1e-9).unwrap());
        }
        let gamma = sys.group_carre_du_champ(&delta(4, 1), &delta(4, 1)).unwrap();
        assert!((gamma.sub(&delta(4, 0))).norm() < 1e-9);
        assert!(sys.group_carre_du_champ(&delta(4, 0), &delta(4, 0)).unwrap().norm() == 0.0);
        for sys in ["Zn:5", "donut:6:1:2", "dihedral:3"].map(|s| GroupCocycleSystem::from_name(s).unwrap()) {
            let n = sys.order();
            for s in 0..n {
                for t in 0..n {
                    let direct = sys.group_carre_du_champ(&delta(n, s), &delta(n, t)).unwrap();
                    let (c1, u1) = sys.carre_du_champ_lambda(s, t);
                    let (c2, u2) = sys.carre_du_champ_cocycle(s, t);
                    assert_eq!(u1, u2);
                    assert!((c1 - c2).abs() < 1e-9);
                    assert!(direct.sub(&delta(n, u1).scale(c64(c1))).norm() < 1e-9);
                }
            }
        }
        let _ = g;
    }

    #[test]
    fn crossed_product_rules() {
        let sys = GroupCocycleSystem::from_name("dihedral:3").unwrap();
        let fock = QFockSpace::new(0.4, sys.h_dim(), 2).unwrap();
        let cp = CrossedProduct::new(sys.clone(), fock.clone()).unwrap();
        let g = sys.group().clone();
        let f = fock.total_dim();
        let mut rng = random::rng(12);
        let x = random::gaussian(f, f, &mut rng);
        let y = random::gaussian(f, f, &mut rng);
        assert!(residual(&cp.embed(&linalg::identity(f), g.identity()).unwrap(), &linalg::identity(cp.dim())) < 1e-12);
        for (s, t) in [(1, 2), (3, 4), (5, 1)] {
            assert!(residual(&cp.embed(&x, s).unwrap(), &(cp.pi(&x).unwrap() * cp.lambda(s))) < 1e-12);
            let lhs = cp.embed(&x, s).unwrap() * cp.embed(&y, t).unwrap();
            let rhs = cp.embed(&(&x * cp.alpha(s, &y).unwrap()), g.mul(s, t)).unwrap();
            assert!(residual(&lhs, &rhs) < 1e-10);
            let adj = cp.embed(&x, s).unwrap().adjoint();
            let expected = cp.embed(&cp.alpha(g.inv(s), &x.adjoint()).unwrap(), g.inv(s)).unwrap();
            assert!(residual(&adj, &expected) < 1e-10);
            let comm = cp.lambda(s) * cp.pi(&x).unwrap() * cp.lambda(s).adjoint();
            assert!(residual(&comm, &cp.pi(&cp.alpha(s, &x).unwrap()).unwrap()) < 1e-10);
        }
        // Traciality holds on Γ_q(H) ⋊ G, so test it on Gaussian words short enough for the cap.
        let h: Vec<Vec<f64>> = (0..3).map(|_| random::unit_vector(sys.h_dim(), &mut rng)).collect();
        let s0 = fock.gaussian(&h[0]).unwrap();
        let s1 = fock.gaussian(&h[1]).unwrap();
        let s2 = fock.gaussian(&h[2]).unwrap();
        let u = cp.embed(&s0, 2).unwrap() + cp.embed(&(&s1 * &s2), 4).unwrap();
        let v = cp.embed(&s2, 1).unwrap() + cp.embed(&(&s0 * &s1), 0).unwrap();
        assert!((cp.trace(&(&u * &v)).unwrap() - cp.trace(&(&v * &u)).unwrap()).norm() < 1e-10);
        assert!((cp.trace(&cp.embed(&linalg::identity(f), 0).unwrap()).unwrap() - c64(1.0)).norm() < 1e-15);
        let gauss = fock.gaussian(&vec![0.3; sys.h_dim()]).unwrap();
        for s in 0..6 {
            assert!(cp.trace(&cp.embed(&gauss, s).unwrap()).unwrap().norm() < 1e-12);
        }
        assert!(cp.trace(&(&u * u.adjoint())).unwrap().re >= 0.0);
    }

    #[test]
    fn gradient_identities() {
        for name in ["Zn:4", "donut:4:1:1", "dihedral:2"] {
            let sys = GroupCocycleSystem::from_name(name).unwrap();
            let n = sys.order();
            for q in [-1.0, 0.0, 1.0] {
                let fock = QFockSpace::new(q, sys.h_dim(), 1).unwrap();
                let cp = CrossedProduct::new(sys.clone(), fock).unwrap();
                assert!(cp.gradient(&delta(n, 0)).unwrap().norm() == 0.0);
                let mut rng = random::rng(1);
                let x = GroupAlgebraElement::random(n, &mut rng);
                let y = GroupAlgebraElement::random(n, &mut rng);
                let lhs = cp.gradient(&x.mul(&y, sys.group()).unwrap()).unwrap();
                let rhs = cp.group_element(&x).unwrap() * cp.gradient(&y).unwrap()
                    + cp.gradient(&x).unwrap() * cp.group_element(&y).unwrap();
                assert!(residual(&lhs, &rhs) < 1e-10, "{name}");
                for s in 0..n {
                    for t in 0..n {
                        let (gs, gt) = (cp.gradient(&delta(n, s)).unwrap(), cp.gradient(&delta(n, t)).unwrap());
                        let e = cp.expectation(&(gs.adjoint() * &gt)).unwrap();
                        let gamma = sys.group_carre_du_champ(&delta(n, s), &delta(n, t)).unwrap();
                        assert!(e.sub(&gamma).norm() < 1e-10, "{name} s={s} t={t}");
                        assert!(cp.expectation_of_product(&gs, &gt).unwrap().sub(&e).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let sys = GroupCocycleSystem::from_name("donut:5:1:2").unwrap();
        let json = serde_json::to_string(&sys.to_json()).unwrap();
        let back = GroupCocycleSystem::from_json(&serde_json::from_str(&json).unwrap()).unwrap();
        assert!(back.psi().iter().zip(sys.psi()).all(|(a, b)| (a - b).abs() < 1e-12));
        let mut bad = sys.to_json();
        bad.cocycle.b[1][0] += 0.5;
        assert!(GroupCocycleSystem::from_json(&bad).is_err());
        assert!(GroupCocycleSystem::from_name("Zn:x").is_err());
        assert!(GroupCocycleSystem::from_name("torus:3").is_err());
    }
}
