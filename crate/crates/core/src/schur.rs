//! Markovian semigroups of Schur multipliers on `M_I`.
//!
//! A family `α: I → H = ℝ^d` determines the symbol `a_ij = ‖α_i − α_j‖²`, the generator
//! `A(x) = [a_ij x_ij]` and the semigroup `T_t(x) = [e^{−t a_ij} x_ij]`. The gradient takes
//! values in `Γ_q(H) ⊗ M_I`, realized on `ℱ_q(H) ⊗ ℓ²_I` with the Fock factor first.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fock::{FockError, QFockSpace};
use crate::gradient::{GradientKind, GradientSystem};
use crate::linalg::{self, c64, ComplexMatrix, LinalgError, C64};
use crate::report::CheckReport;

/// Largest index set accepted by the quartic gap enumeration.
pub const MAX_GAP_INDICES: usize = 64;
/// Two differences closer than this (squared, relative to the largest squared difference)
/// are treated as equal by the gap and counting routines.
pub const DISTINCT_TOL: f64 = 1e-10;
/// Times at which the Schoenberg witness `[e^{−t a_ij}] ≥ 0` is checked on construction.
pub const MARKOV_TIMES: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchurError {
    #[error("{0}")]
    Input(String),
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    Size { expected: usize, rows: usize, cols: usize },
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// JSON form of a family: `{"h_dim": n, "alpha": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaFamilyJson {
    pub h_dim: usize,
    pub alpha: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SchurSystem {
    alpha: Vec<Vec<f64>>,
    h_dim: usize,
    symbol: DMatrix<f64>,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SchurSystem {
    pub fn new(alpha: Vec<Vec<f64>>) -> Result<Self, SchurError> {
        let Some(first) = alpha.first() else {
            return Err(SchurError::Input("the family α must be nonempty".into()));
        };
        let h_dim = first.len();
        if h_dim == 0 {
            return Err(SchurError::Input("H must have dimension at least 1".into()));
        }
        if let Some((i, v)) = alpha.iter().enumerate().find(|(_, v)| v.len() != h_dim) {
            return Err(SchurError::Input(format!("α_{i} has dimension {}, expected {h_dim}", v.len())));
        }
        if alpha.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SchurError::Input("α has non-finite entries".into()));
        }
        let n = alpha.len();
        let symbol = DMatrix::from_fn(n, n, |i, j| norm2(&sub(&alpha[i], &alpha[j])));
        let sys = Self { alpha, h_dim, symbol };
        for t in MARKOV_TIMES {
            if !linalg::is_psd(&sys.schoenberg_witness(t), 1e-9)? {
                return Err(SchurError::Input(format!("[exp(-{t} a_ij)] is not positive semidefinite")));
            }
        }
        Ok(sys)
    }

    /// Heat family `α_i = i ∈ ℝ`, `i = 0..n`, with symbol `(i − j)²`.
    pub fn heat(n: usize) -> Result<Self, SchurError> {
        Self::new((0..n).map(|i| vec![i as f64]).collect())
    }

    /// Poisson family `α_i = e_1 + … + e_i ∈ ℝ^{max(n−1,1)}`, with symbol `|i − j|`.
    pub fn poisson(n: usize) -> Result<Self, SchurError> {
        let d = n.saturating_sub(1).max(1);
        Self::new((0..n).map(|i| (0..d).map(|k| if k < i { 1.0 } else { 0.0 }).collect()).collect())
    }

    /// Random family of `n` points with standard Gaussian coordinates in `ℝ^d`.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Self, SchurError> {
        Self::new((0..n).map(|_| (0..d).map(|_| linalg::random::normal(rng)).collect()).collect())
    }

    /// Built-in families `heat:N` and `poisson:N`.
    pub fn from_name(name: &str) -> Result<Self, SchurError> {
        let (kind, n) = name
            .split_once(':')
            .ok_or_else(|| SchurError::Input(format!("unknown Schur system '{name}'")))?;
        let n: usize = n
            .parse()
            .map_err(|_| SchurError::Input(format!("bad size in '{name}'")))?;
        if n == 0 {
            return Err(SchurError::Input("index set must be nonempty".into()));
        }
        match kind {
            "heat" => Self::heat(n),
            "poisson" => Self::poisson(n),
            _ => Err(SchurError::Input(format!("unknown Schur system '{name}'"))),
        }
    }

    pub fn from_json(json: &AlphaFamilyJson) -> Result<Self, SchurError> {
        if json.alpha.iter().any(|a| a.len() != json.h_dim) {
            return Err(SchurError::Input(format!("every α_i must have dimension h_dim = {}", json.h_dim)));
        }
        Self::new(json.alpha.clone())
    }

    pub fn to_json(&self) -> AlphaFamilyJson {
        AlphaFamilyJson { h_dim: self.h_dim, alpha: self.alpha.clone() }
    }

    /// `|I|`.
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn symbol(&self) -> &DMatrix<f64> {
        &self.symbol
    }

    pub fn difference(&self, i: usize, j: usize) -> Vec<f64> {
        sub(&self.alpha[i], &self.alpha[j])
    }

    fn max_symbol(&self) -> f64 {
        self.symbol.max().max(0.0)
    }

    /// True when `α_i = α_j` up to [`DISTINCT_TOL`]: the entry `(i, j)` lies in `ker A`.
    pub fn in_kernel(&self, i: usize, j: usize) -> bool {
        self.symbol[(i, j)] <= DISTINCT_TOL * self.max_symbol().max(1.0)
    }

    /// Class label per index for the relation `α_i = α_j`.
    pub fn kernel_classes(&self) -> Vec<usize> {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for i in 0..n {
            if label[i] != usize::MAX {
                continue;
            }
            for j in i..n {
                if label[j] == usize::MAX && self.in_kernel(i, j) {
                    label[j] = next;
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_injective(&self) -> bool {
        let classes = self.kernel_classes();
        classes.iter().enumerate().all(|(i, &c)| c == i) && classes.len() == self.len()
    }

    /// The Schoenberg witness `[e^{−t a_ij}]`.
    pub fn schoenberg_witness(&self, t: f64) -> ComplexMatrix {
        self.symbol.map(|a| c64((-t * a).exp()))
    }

    fn check_size(&self, x: &ComplexMatrix) -> Result<(), SchurError> {
        let n = self.len();
        if x.nrows() != n || x.ncols() != n {
            return Err(SchurError::Size { expected: n, rows: x.nrows(), cols: x.ncols() });
        }
        Ok(())
    }

    fn multiplier(&self, x: &ComplexMatrix, f: impl Fn(usize, usize, f64) -> f64) -> Result<ComplexMatrix, SchurError> {
        self.check_size(x)?;
        Ok(ComplexMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * f(i, j, self.symbol[(i, j)])))
    }

    /// `A(x) = [a_ij x_ij]`.
    pub fn apply_generator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix, SchurError> {
        self.multiplier(x, |_, _, a| a)
    }

    /// `T_t(x) = [e^{−t a_ij} x_ij]`.
    pub fn apply_semigroup(&self, t: f64, x: &ComplexMatrix) -> Result<ComplexMatrix, SchurError> {
        if !(t >= 0.0) {
            return Err(SchurError::Input(format!("semigroup time must be nonnegative, got {t}")));
        }
        self.multiplier(x, |_, _, a| (-t * a).exp())
    }

    pub fn apply_sqrt_generator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix, SchurError> {
        self.multiplier(x, |_, _, a| a.sqrt())
    }

    /// `A^{−1/2}`, with kernel entries (`α_i = α_j`) sent to 0.
    pub fn apply_inv_sqrt_generator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix, SchurError> {
        self.multiplier(x, |i, j, a| if self.in_kernel(i, j) { 0.0 } else { 1.0 / a.sqrt() })
    }

    /// Projection onto `ker A`, the block-diagonal algebra of the classes of `α`.
    pub fn kernel_projection(&self, x: &ComplexMatrix) -> Result<ComplexMatrix, SchurError> {
        self.multiplier(x, |i, j, _| if self.in_kernel(i, j) { 1.0 } else { 0.0 })
    }

    /// `Γ(x, y) = ½[A(x*)y + x*A(y) − A(x*y)]`.
    pub fn carre_du_champ(&self, x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix, SchurError> {
        self.check_size(x)?;
        self.check_size(y)?;
        let xs = x.adjoint();
        let out = self.apply_generator(&xs)? * y + &xs * self.apply_generator(y)? - self.apply_generator(&(&xs * y))?;
        Ok(out.scale(0.5))
    }

    /// `Γ(e_ij, e_kl) = δ_{i=k} ½[a_ji + a_kl − a_jl] e_jl`, returned as the coefficient
    /// and the position `(j, l)`.
    pub fn carre_du_champ_units(&self, i: usize, j: usize, k: usize, l: usize) -> (f64, (usize, usize)) {
        let a = &self.symbol;
        let coef = if i == k { 0.5 * (a[(j, i)] + a[(k, l)] - a[(j, l)]) } else { 0.0 };
        (coef, (j, l))
    }

    /// `Γ(x, y)` expanded sesquilinearly over matrix units with [`Self::carre_du_champ_units`].
    pub fn carre_du_champ_closed_form(&self, x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix, SchurError> {
        self.check_size(x)?;
        self.check_size(y)?;
        let n = self.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let xij = x[(i, j)].conj();
                if xij == C64::new(0.0, 0.0) {
                    continue;
                }
                for l in 0..n {
                    let (coef, (r, c)) = self.carre_du_champ_units(i, j, i, l);
                    out[(r, c)] += xij * y[(i, l)] * coef;
                }
            }
        }
        Ok(out)
    }

    /// `Γ(x, y)_{jl} = Σ_i x̄_ij y_il ⟨α_i − α_j, α_i − α_l⟩`, the polarized form.
    pub fn carre_du_champ_polarized(&self, x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix, SchurError> {
        self.check_size(x)?;
        self.check_size(y)?;
        let n = self.len();
        Ok(ComplexMatrix::from_fn(n, n, |j, l| {
            (0..n)
                .map(|i| x[(i, j)].conj() * y[(i, l)] * dot(&self.difference(i, j), &self.difference(i, l)))
                .sum()
        }))
    }

    /// Compares `Γ(x, y)` with the extrapolation to `t = 0` of
    /// `(2t)^{−1}(T_t(x*y) − T_t(x)*T_t(y))` over the given times (Neville–Richardson).
    pub fn gamma_limit_check(
        &self,
        x: &ComplexMatrix,
        y: &ComplexMatrix,
        t_list: &[f64],
        tolerance: f64,
    ) -> Result<CheckReport, SchurError> {
        let start = Instant::now();
        if t_list.is_empty() || t_list.iter().any(|t| !(*t > 0.0)) {
            return Err(SchurError::Input("t_list must contain positive times".into()));
        }
        let xs_y = x.adjoint() * y;
        let mut table: Vec<ComplexMatrix> = t_list
            .iter()
            .map(|&t| {
                let lhs = self.apply_semigroup(t, &xs_y)?;
                let rhs = self.apply_semigroup(t, x)?.adjoint() * self.apply_semigroup(t, y)?;
                Ok((lhs - rhs).scale(0.5 / t))
            })
            .collect::<Result<_, SchurError>>()?;
        // Neville's scheme evaluated at t = 0.
        for level in 1..t_list.len() {
            for k in (level..t_list.len()).rev() {
                let (tk, tkl) = (t_list[k], t_list[k - level]);
                let updated = (table[k].scale(tkl) - table[k - 1].scale(tk)).unscale(tkl - tk);
                table[k] = updated;
            }
        }
        let extrapolated = table.last().expect("nonempty");
        let gamma = self.carre_du_champ(x, y)?;
        Ok(CheckReport::residual("gamma_limit", linalg::residual(extrapolated, &gamma), tolerance)
            .param("t_list", t_list)
            .param("index_count", self.len())
            .since(start))
    }

    /// `s_q(α_i − α_j)` for every pair, indexed `i * n + j`.
    fn pair_gaussians(&self, fock: &QFockSpace) -> Result<Vec<ComplexMatrix>, SchurError> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(fock.gaussian(&self.difference(i, j))?);
            }
        }
        Ok(out)
    }

    fn check_fock(&self, fock: &QFockSpace) -> Result<(), SchurError> {
        if fock.h_dim() != self.h_dim {
            return Err(SchurError::Input(format!(
                "Fock space is built over dimension {}, the family lives in dimension {}",
                fock.h_dim(),
                self.h_dim
            )));
        }
        Ok(())
    }

    /// `∂(x) = Σ_ij x_ij s_q(α_i − α_j) ⊗ e_ij` as a matrix on `ℱ_q(H) ⊗ ℓ²_I`.
    pub fn gradient(&self, fock: &QFockSpace, x: &ComplexMatrix) -> Result<ComplexMatrix, SchurError> {
        self.check_fock(fock)?;
        self.check_size(x)?;
        let n = self.len();
        let f = fock.total_dim();
        let gauss = self.pair_gaussians(fock)?;
        let mut out = ComplexMatrix::zeros(f * n, f * n);
        for i in 0..n {
            for j in 0..n {
                let c = x[(i, j)];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let s = &gauss[i * n + j];
                for a in 0..f {
                    for b in 0..f {
                        out[(a * n + i, b * n + j)] += c * s[(a, b)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `R_h(x)_ij = ⟨α_i − α_j, h⟩ / ‖α_i − α_j‖ · x_ij`, zero on kernel entries.
    pub fn riesz_transform(&self, h: &[f64], x: &ComplexMatrix) -> Result<ComplexMatrix, SchurError> {
        if h.len() != self.h_dim {
            return Err(SchurError::Input(format!("direction has dimension {}, expected {}", h.len(), self.h_dim)));
        }
        self.multiplier(x, |i, j, a| {
            if self.in_kernel(i, j) {
                0.0
            } else {
                dot(&self.difference(i, j), h) / a.sqrt()
            }
        })
    }

    /// `max{‖(Σ_k |R_k x|²)^{1/2}‖_p, ‖(Σ_k |(R_k x)*|²)^{1/2}‖_p}` over the standard basis `e_k` of `H`.
    pub fn riesz_square_function(&self, x: &ComplexMatrix, p: f64) -> Result<f64, SchurError> {
        if !(p >= 2.0) {
            return Err(SchurError::Unsupported(format!("square functions need p >= 2, got {p}")));
        }
        self.check_size(x)?;
        if self.kernel_projection(x)?.norm() > 0.0 {
            return Err(SchurError::Domain("x must vanish on the kernel entries α_i = α_j".into()));
        }
        let n = self.len();
        let mut col = ComplexMatrix::zeros(n, n);
        let mut row = ComplexMatrix::zeros(n, n);
        for k in 0..self.h_dim {
            let mut e = vec![0.0; self.h_dim];
            e[k] = 1.0;
            let r = self.riesz_transform(&e, x)?;
            col += r.adjoint() * &r;
            row += &r * r.adjoint();
        }
        let c = linalg::schatten_norm(&linalg::mat_sqrt_psd(&col)?, p)?;
        let r = linalg::schatten_norm(&linalg::mat_sqrt_psd(&row)?, p)?;
        Ok(c.max(r))
    }

    fn differences(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.difference(i, j));
            }
        }
        out
    }

    fn distinct_cut(&self) -> f64 {
        DISTINCT_TOL * (4.0 * self.max_symbol()).max(1.0)
    }

    /// `𝒢_α = inf{‖(α_i − α_j) − (α_k − α_l)‖² : α_i − α_j ≠ α_k − α_l}`; `+∞` if no pair differs.
    pub fn gap(&self) -> Result<f64, SchurError> {
        if self.len() > MAX_GAP_INDICES {
            return Err(SchurError::Budget(format!(
                "gap enumeration is limited to {MAX_GAP_INDICES} indices, got {}",
                self.len()
            )));
        }
        Ok(min_separation(&self.differences(), self.distinct_cut()))
    }

    /// The distinct values among `α_i − α_j`.
    pub fn distinct_differences(&self) -> Vec<Vec<f64>> {
        let cut = self.distinct_cut();
        let mut reps: Vec<Vec<f64>> = Vec::new();
        for d in self.differences() {
            if !reps.iter().any(|r| norm2(&sub(r, &d)) <= cut) {
                reps.push(d);
            }
        }
        reps
    }

    /// For `k = 1..=k_max`, checks `card{α_i − α_j : k²𝒢 ≤ ‖α_i − α_j‖² ≤ (k+1)²𝒢} ≤ (5ⁿ − 1)k^{n−1}`.
    pub fn counting_bound_check(&self, k_max: usize) -> Result<CheckReport, SchurError> {
        let start = Instant::now();
        let gap = self.gap()?;
        if gap <= 0.0 {
            return Err(SchurError::Domain("the counting bound needs a positive gap".into()));
        }
        let n = self.h_dim as i32;
        let norms: Vec<f64> = self.distinct_differences().iter().map(|d| norm2(d)).collect();
        let mut counts = Vec::with_capacity(k_max);
        let mut bounds = Vec::with_capacity(k_max);
        let mut worst_excess = 0.0_f64;
        let mut worst_ratio = 0.0_f64;
        for k in 1..=k_max {
            let count = if gap.is_finite() {
                let (lo, hi) = ((k * k) as f64 * gap, ((k + 1) * (k + 1)) as f64 * gap);
                let slack = 1e-9 * hi;
                norms.iter().filter(|&&v| v >= lo - slack && v <= hi + slack).count()
            } else {
                0
            };
            let bound = (5f64.powi(n) - 1.0) * (k as f64).powi(n - 1);
            worst_excess = worst_excess.max(count as f64 - bound);
            worst_ratio = worst_ratio.max(count as f64 / bound);
            counts.push(count);
            bounds.push(bound);
        }
        Ok(CheckReport::verdict("counting_bound", worst_excess <= 0.0, worst_excess.max(0.0), 0.0)
            .value(worst_ratio)
            .param("gap", gap)
            .param("counts", counts)
            .param("bounds", bounds)
            .param("h_dim", self.h_dim)
            .since(start))
    }

    /// The L² gradient triple: source `S²_I ≅ ℂ^{n²}` (index `i·n + j`), target
    /// `ℱ_q(H) ⊗ S²_I` (index `(f·n + i)·n + j`), where the element `Σ z_ij ⊗ e_ij` is
    /// represented by the vectors `z_ij Ω`.
    pub fn gradient_system(&self, fock: &QFockSpace) -> Result<GradientSystem, SchurError> {
        self.check_fock(fock)?;
        let n = self.len();
        let f = fock.total_dim();
        let src = n * n;
        let tgt = f * src;
        // ∂(e_ij) as a column: the vector (s_q(α_i − α_j)Ω) ⊗ e_ij.
        let vacuum = fock.vacuum();
        let mut grad = ComplexMatrix::zeros(tgt, src);
        for i in 0..n {
            for j in 0..n {
                let v = fock.gaussian(&self.difference(i, j))? * &vacuum;
                for a in 0..f {
                    grad[((a * n + i) * n + j, i * n + j)] = v[a];
                }
            }
        }
        // ∂* only sees level 1: (∂*ξ)_ij = Σ_k (α_i − α_j)_k ξ_{(1+k, i, j)}.
        let level1 = fock.level_range(1);
        let mut grad_adjoint = ComplexMatrix::zeros(src, tgt);
        for i in 0..n {
            for j in 0..n {
                let d = self.difference(i, j);
                for (k, a) in level1.clone().enumerate() {
                    grad_adjoint[(i * n + j, (a * n + i) * n + j)] = c64(d[k]);
                }
            }
        }
        let generator = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_fn(src, |r, _| {
            c64(self.symbol[(r / n, r % n)])
        }));
        let target_generator = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_fn(tgt, |r, _| {
            let ij = r % src;
            c64(self.symbol[(ij / n, ij % n)])
        }));
        GradientSystem::new(
            GradientKind::Schur { system: self.clone(), fock: fock.clone() },
            generator,
            grad,
            grad_adjoint,
            Some(target_generator),
        )
        .map_err(|e| SchurError::Input(e.to_string()))
    }
}

/// Minimal squared distance between points at squared distance `> cut`.
pub(crate) fn min_separation(points: &[Vec<f64>], cut: f64) -> f64 {
    let mut best = f64::INFINITY;
    for (a, p) in points.iter().enumerate() {
        for r in &points[a + 1..] {
            let d = norm2(&sub(p, r));
            if d > cut && d < best {
                best = d;
            }
        }
    }
    best
}

/// `E = τ ⊗ id`: each `ℓ²_I` block of `z` on `ℱ_q(H) ⊗ ℓ²_I` is replaced by its vacuum entry.
pub fn conditional_expectation(fock: &QFockSpace, z: &ComplexMatrix) -> Result<ComplexMatrix, SchurError> {
    let f = fock.total_dim();
    if z.nrows() != z.ncols() || !z.nrows().is_multiple_of(f) {
        return Err(SchurError::Input(format!(
            "operator of size {}x{} does not act on ℱ_q(H) ⊗ ℓ²_I with dim ℱ = {f}",
            z.nrows(),
            z.ncols()
        )));
    }
    let n = z.nrows() / f;
    // With the Fock factor first and Ω at index 0, the vacuum block is the leading n×n corner.
    Ok(z.view((0, 0), (n, n)).into_owned())
}

/// `1 ⊗ x` on `ℱ_q(H) ⊗ ℓ²_I`.
pub fn ampliate(fock: &QFockSpace, x: &ComplexMatrix) -> ComplexMatrix {
    linalg::kron(&linalg::identity(fock.total_dim()), x)
}

/// Kernel of `A^{1/2}` restricted to null-diagonal matrices, as a dimension.
pub fn null_diagonal_kernel_dim(sys: &SchurSystem) -> usize {
    let n = sys.len();
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| i != j && sys.in_kernel(i, j)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matrix_unit, random, residual};

    fn unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
        matrix_unit(n, i, j)
    }

    #[test]
    fn builtin_symbols() {
        let heat = SchurSystem::heat(5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(heat.symbol()[(i, j)], ((i as f64) - (j as f64)).powi(2));
            }
        }
        let poisson = SchurSystem::poisson(6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(poisson.symbol()[(i, j)], (i as f64 - j as f64).abs());
            }
        }
        let single = SchurSystem::new(vec![vec![0.3, 0.1]]).unwrap();
        assert_eq!(single.symbol(), &DMatrix::zeros(1, 1));
        assert!(SchurSystem::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(SchurSystem::new(vec![]).is_err());
        assert!(SchurSystem::from_name("gauss:3").is_err());
        assert_eq!(SchurSystem::from_name("poisson:4").unwrap().len(), 4);
    }

    #[test]
    fn generator_and_semigroup() {
        let heat = SchurSystem::heat(2).unwrap();
        assert!(heat.apply_generator(&linalg::identity(2)).unwrap().norm() == 0.0);
        assert_eq!(heat.apply_generator(&unit(2, 0, 1)).unwrap(), unit(2, 0, 1));
        let poisson = SchurSystem::poisson(3).unwrap();
        assert_eq!(poisson.apply_generator(&unit(3, 0, 2)).unwrap(), unit(3, 0, 2).scale(2.0));
        let x = random::gaussian(2, 2, &mut random::rng(0));
        assert_eq!(heat.apply_semigroup(0.0, &x).unwrap(), x);
        let t1 = heat.apply_semigroup(1.0, &unit(2, 0, 1)).unwrap();
        assert!((t1[(0, 1)] - c64((-1.0f64).exp())).norm() < 1e-15);
        assert!(matches!(heat.apply_generator(&linalg::identity(3)), Err(SchurError::Size { .. })));
        for t in [0.01, 0.5, 3.0, 40.0] {
            let ones = ComplexMatrix::from_element(5, 5, c64(1.0));
            let tt = SchurSystem::heat(5).unwrap().apply_semigroup(t, &ones).unwrap();
            assert!(linalg::is_psd(&tt, 1e-9).unwrap());
        }
    }

    #[test]
    fn carre_du_champ_examples() {
        let heat = SchurSystem::heat(2).unwrap();
        assert!(heat.carre_du_champ(&linalg::identity(2), &linalg::identity(2)).unwrap().norm() < 1e-15);
        let x = unit(2, 0, 1) + unit(2, 1, 0);
        assert!(residual(&heat.carre_du_champ(&x, &x).unwrap(), &linalg::identity(2)) < 1e-15);
        let sys = SchurSystem::random(4, 2, &mut random::rng(5)).unwrap();
        for (i, j, k, l) in [(0, 1, 0, 2), (1, 3, 1, 1), (2, 0, 3, 1), (3, 3, 3, 0)] {
            let direct = sys.carre_du_champ(&unit(4, i, j), &unit(4, k, l)).unwrap();
            let (coef, (r, c)) = sys.carre_du_champ_units(i, j, k, l);
            assert!(residual(&direct, &unit(4, r, c).scale(coef)) < 1e-12);
        }
    }

    #[test]
    fn three_forms_of_gamma_agree() {
        let mut rng = random::rng(11);
        let sys = SchurSystem::random(5, 3, &mut rng).unwrap();
        for _ in 0..5 {
            let x = random::gaussian(5, 5, &mut rng);
            let y = random::gaussian(5, 5, &mut rng);
            let g = sys.carre_du_champ(&x, &y).unwrap();
            assert!(residual(&sys.carre_du_champ_closed_form(&x, &y).unwrap(), &g) < 1e-12);
            assert!(residual(&sys.carre_du_champ_polarized(&x, &y).unwrap(), &g) < 1e-12);
            assert!(residual(&sys.carre_du_champ(&y, &x).unwrap(), &g.adjoint()) < 1e-12);
            assert!(linalg::is_psd(&sys.carre_du_champ(&x, &x).unwrap(), 1e-9).unwrap());
        }
    }

    #[test]
    fn limit_formula() {
        let mut rng = random::rng(2);
        let heat4 = SchurSystem::heat(4).unwrap();
        let x = random::gaussian(4, 4, &mut rng);
        let y = random::gaussian(4, 4, &mut rng);
        // Two times leave an O(t₁t₂a³) remainder that is of order 1e-5 here; a third time removes it.
        let two = heat4.gamma_limit_check(&x, &y, &[1e-3, 5e-4], 1e-4).unwrap();
        assert!(two.pass, "{}", two.line());
        let three = heat4.gamma_limit_check(&x, &y, &[2e-3, 1e-3, 5e-4], 1e-6).unwrap();
        assert!(three.pass, "{}", three.line());
        assert!(three.residual < two.residual);
        let id = linalg::identity(4);
        assert_eq!(heat4.gamma_limit_check(&id, &id, &[1e-3, 5e-4], 1e-5).unwrap().residual, 0.0);
        let heat2 = SchurSystem::heat(2).unwrap();
        let e = unit(2, 0, 1);
        assert!(heat2.gamma_limit_check(&e, &e, &[1e-3, 5e-4], 1e-5).unwrap().pass);
    }

    #[test]
    fn gradient_examples() {
        let sys = SchurSystem::poisson(3).unwrap();
        let fock = QFockSpace::new(0.3, 2, 2).unwrap();
        assert!(sys.gradient(&fock, &linalg::identity(3)).unwrap().norm() < 1e-15);
        let g = sys.gradient(&fock, &unit(3, 0, 2)).unwrap();
        let expected = linalg::kron(&fock.gaussian(&sys.difference(0, 2)).unwrap(), &unit(3, 0, 2));
        assert!(residual(&g, &expected) < 1e-15);
        let bad = QFockSpace::new(0.3, 3, 2).unwrap();
        assert!(sys.gradient(&bad, &unit(3, 0, 1)).is_err());
    }

    #[test]
    fn leibniz_and_expectation() {
        let mut rng = random::rng(8);
        let sys = SchurSystem::random(3, 2, &mut rng).unwrap();
        for q in [-1.0, 0.0, 0.5, 1.0] {
            let fock = QFockSpace::new(q, 2, 2).unwrap();
            let x = random::gaussian(3, 3, &mut rng);
            let y = random::gaussian(3, 3, &mut rng);
            let lhs = sys.gradient(&fock, &(&x * &y)).unwrap();
            let rhs = ampliate(&fock, &x) * sys.gradient(&fock, &y).unwrap()
                + sys.gradient(&fock, &x).unwrap() * ampliate(&fock, &y);
            assert!(residual(&lhs, &rhs) < 1e-12);
            let (dx, dy) = (sys.gradient(&fock, &x).unwrap(), sys.gradient(&fock, &y).unwrap());
            let e = conditional_expectation(&fock, &(dx.adjoint() * dy)).unwrap();
            assert!(residual(&e, &sys.carre_du_champ(&x, &y).unwrap()) < 1e-12);
            assert!(residual(&conditional_expectation(&fock, &ampliate(&fock, &x)).unwrap(), &x) < 1e-15);
            let odd = linalg::kron(&fock.gaussian(&[1.0, 0.0]).unwrap(), &unit(3, 0, 1));
            assert!(conditional_expectation(&fock, &odd).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn riesz_examples() {
        let heat = SchurSystem::heat(4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let r = heat.riesz_transform(&[1.0], &unit(4, i, j)).unwrap();
                let sign = (i as f64 - j as f64).signum() * if i == j { 0.0 } else { 1.0 };
                assert_eq!(r, unit(4, i, j).scale(sign));
            }
        }
        assert!(heat.riesz_transform(&[0.7], &linalg::identity(4)).unwrap().norm() == 0.0);
        let mut rng = random::rng(3);
        let sys = SchurSystem::random(4, 3, &mut rng).unwrap();
        let mut x = random::gaussian(4, 4, &mut rng);
        for i in 0..4 {
            x[(i, i)] = c64(0.0);
        }
        let sf = sys.riesz_square_function(&x, 2.0).unwrap();
        assert!((sf - x.norm()).abs() < 1e-10 * x.norm());
        assert_eq!(sys.riesz_square_function(&ComplexMatrix::zeros(4, 4), 4.0).unwrap(), 0.0);
        assert!(sys.riesz_square_function(&x, 4.0).unwrap().is_finite());
        assert!(matches!(sys.riesz_square_function(&x, 1.5), Err(SchurError::Unsupported(_))));
        assert!(matches!(sys.riesz_square_function(&linalg::identity(4), 2.0), Err(SchurError::Domain(_))));
    }

    #[test]
    fn gaps() {
        for n in [2, 3, 5, 9] {
            assert_eq!(SchurSystem::heat(n).unwrap().gap().unwrap(), 1.0);
            assert_eq!(SchurSystem::poisson(n).unwrap().gap().unwrap(), 1.0);
        }
        assert_eq!(SchurSystem::new(vec![vec![2.0]]).unwrap().gap().unwrap(), f64::INFINITY);
        let big = SchurSystem::heat(65).unwrap();
        assert!(matches!(big.gap(), Err(SchurError::Budget(_))));
        // Invariance under a common rotation of the family.
        let mut rng = random::rng(21);
        let sys = SchurSystem::random(6, 3, &mut rng).unwrap();
        let u = random::orthogonal(3, &mut rng);
        let rotated = SchurSystem::new(
            sys.alpha()
                .iter()
                .map(|a| (0..3).map(|r| (0..3).map(|c| u[(r, c)] * a[c]).sum()).collect())
                .collect(),
        )
        .unwrap();
        assert!((sys.gap().unwrap() - rotated.gap().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn counting_bound() {
        let r = SchurSystem::heat(10).unwrap().counting_bound_check(12).unwrap();
        assert!(r.pass);
        let counts: Vec<usize> = serde_json::from_value(r.params["counts"].clone()).unwrap();
        assert!(counts.iter().all(|&c| c <= 4));
        assert_eq!(counts[0], 4);
        assert!(SchurSystem::poisson(10).unwrap().counting_bound_check(12).unwrap().pass);
        let r = SchurSystem::heat(2).unwrap().counting_bound_check(5).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn kernel_structure() {
        let sys = SchurSystem::new(vec![vec![0.0], vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(sys.kernel_classes(), vec![0, 1, 0]);
        assert!(!sys.is_injective());
        assert_eq!(null_diagonal_kernel_dim(&sys), 2);
        let x = ComplexMatrix::from_element(3, 3, c64(1.0));
        let p = sys.kernel_projection(&x).unwrap();
        assert_eq!(p[(0, 2)], c64(1.0));
        assert_eq!(p[(0, 1)], c64(0.0));
        let inv = sys.apply_inv_sqrt_generator(&x).unwrap();
        assert_eq!(inv[(0, 2)], c64(0.0));
        assert_eq!(inv[(0, 1)], c64(1.0));
        assert!(SchurSystem::heat(3).unwrap().is_injective());
    }

    #[test]
    fn json_family() {
        let json: AlphaFamilyJson = serde_json::from_str(r#"{"h_dim": 2, "alpha": [[0,0],[1,0],[0,2]]}"#).unwrap();
        let sys = SchurSystem::from_json(&json).unwrap();
        assert_eq!(sys.symbol()[(1, 2)], 5.0);
        assert_eq!(sys.to_json(), json);
        let bad: AlphaFamilyJson = serde_json::from_str(r#"{"h_dim": 3, "alpha": [[0,0]]}"#).unwrap();
        assert!(SchurSystem::from_json(&bad).is_err());
    }
}
