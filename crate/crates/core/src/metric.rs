//! Lipschitz seminorms `‖x‖_{Γ,p} = max{‖Γ(x,x)^{1/2}‖_p, ‖Γ(x*,x*)^{1/2}‖_p}` and what can be
//! checked about them on finite systems: the kernel, the Leibniz inequality and sampled lower
//! bounds for the Monge-Kantorovich distance between states.
//!
//! Elements follow the unitization convention `x = x₀ + c·1` with `x₀` null-diagonal
//! (`x₀_ii = 0` for Schur, `τ(x₀) = 0` for Fourier). Seminorms are defined on the whole
//! algebra, but kernels and distances are taken inside that subalgebra.

use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fourier::{FourierError, GroupAlgebraElement, GroupCocycleSystem};
use crate::gradient::AlgebraElement;
use crate::linalg::{self, ComplexMatrix, LinalgError, C64};
use crate::report::CheckReport;
use crate::schur::{SchurError, SchurSystem, DISTINCT_TOL};
use crate::system::System;

/// Slack allowed in the Leibniz, triangle and symmetry inequalities.
pub const INEQUALITY_SLACK: f64 = 1e-9;
/// Trace and Hermitian tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Schur(#[from] SchurError),
    #[error(transparent)]
    Fourier(#[from] FourierError),
}

type Result<T> = std::result::Result<T, MetricError>;

/// A system together with the exponent `p ∈ [2, ∞]` of its seminorm.
#[derive(Debug, Clone)]
pub struct LipSeminormSpec {
    system: System,
    p: f64,
}

impl LipSeminormSpec {
    pub fn new(system: System, p: f64) -> Result<Self> {
        if p.is_nan() || p < 2.0 {
            return Err(MetricError::Unsupported(format!("only p ≥ 2 is supported, got {p}")));
        }
        Ok(Self { system, p })
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `|I|` or `|G|`: the size of the matrices representing elements.
    pub fn size(&self) -> usize {
        self.system.size()
    }

    pub fn one(&self) -> AlgebraElement {
        match &self.system {
            System::Schur(s) => AlgebraElement::Matrix(linalg::identity(s.len())),
            System::Fourier(g) => group_elem(GroupAlgebraElement::delta(g.order(), g.group().identity())),
        }
    }

    /// Matrix units `e_ij` or group unitaries `λ_s`, indexed as `i·n + j` or `s`.
    pub fn basis_element(&self, k: usize) -> AlgebraElement {
        match &self.system {
            System::Schur(s) => {
                let n = s.len();
                AlgebraElement::Matrix(linalg::matrix_unit(n, k / n, k % n))
            }
            System::Fourier(g) => group_elem(GroupAlgebraElement::delta(g.order(), k)),
        }
    }

    /// Indices of the basis elements spanning the null-diagonal part.
    pub fn null_diagonal_basis(&self) -> Vec<usize> {
        match &self.system {
            System::Schur(s) => {
                let n = s.len();
                (0..n * n).filter(|k| k / n != k % n).collect()
            }
            System::Fourier(g) => {
                let e = g.group().identity();
                (0..g.order()).filter(|&s| s != e).collect()
            }
        }
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        match &self.system {
            System::Schur(s) => AlgebraElement::Matrix(linalg::random::gaussian(s.len(), s.len(), rng)),
            System::Fourier(g) => group_elem(GroupAlgebraElement::random(g.order(), rng)),
        }
    }

    /// A random self-adjoint element of the null-diagonal part.
    pub fn random_null_diagonal_selfadjoint<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<AlgebraElement> {
        let x = self.random_element(rng);
        let h = self.add(&x, &self.adjoint(&x)?)?;
        Ok(self.remove_diagonal(&h))
    }

    fn remove_diagonal(&self, x: &AlgebraElement) -> AlgebraElement {
        match x {
            AlgebraElement::Matrix(m) => {
                let mut m = m.clone();
                m.fill_diagonal(C64::new(0.0, 0.0));
                AlgebraElement::Matrix(m)
            }
            AlgebraElement::Group(g) => {
                let mut c = g.coeffs().to_vec();
                if let System::Fourier(sys) = &self.system {
                    c[sys.group().identity()] = C64::new(0.0, 0.0);
                }
                group_elem(GroupAlgebraElement::new(c))
            }
        }
    }

    pub fn adjoint(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        match (x, &self.system) {
            (AlgebraElement::Matrix(m), System::Schur(_)) => Ok(AlgebraElement::Matrix(m.adjoint())),
            (AlgebraElement::Group(g), System::Fourier(sys)) => Ok(group_elem(g.adjoint(sys.group())?)),
            _ => Err(mismatch()),
        }
    }

    pub fn multiply(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        match (x, y, &self.system) {
            (AlgebraElement::Matrix(a), AlgebraElement::Matrix(b), System::Schur(_)) => {
                Ok(AlgebraElement::Matrix(a * b))
            }
            (AlgebraElement::Group(a), AlgebraElement::Group(b), System::Fourier(sys)) => {
                Ok(group_elem(a.mul(b, sys.group())?))
            }
            _ => Err(mismatch()),
        }
    }

    pub fn add(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        match (x, y) {
            (AlgebraElement::Matrix(a), AlgebraElement::Matrix(b)) => Ok(AlgebraElement::Matrix(a + b)),
            (AlgebraElement::Group(a), AlgebraElement::Group(b)) => Ok(group_elem(a.add(b))),
            _ => Err(mismatch()),
        }
    }

    pub fn scale(&self, x: &AlgebraElement, k: C64) -> AlgebraElement {
        match x {
            AlgebraElement::Matrix(m) => AlgebraElement::Matrix(m * k),
            AlgebraElement::Group(g) => group_elem(g.scale(k)),
        }
    }

    /// The matrix through which the element acts: itself (Schur) or `L_x` on `ℓ²(G)` (Fourier).
    pub fn operator(&self, x: &AlgebraElement) -> Result<ComplexMatrix> {
        let op = match (x, &self.system) {
            (AlgebraElement::Matrix(m), System::Schur(s)) => {
                if m.nrows() != s.len() || m.ncols() != s.len() {
                    return Err(MetricError::Input(format!("expected a {0}x{0} matrix", s.len())));
                }
                m.clone()
            }
            (AlgebraElement::Group(g), System::Fourier(sys)) => g.left_regular(sys.group())?,
            _ => return Err(mismatch()),
        };
        Ok(op)
    }

    /// The normalized trace of the source algebra: `tr` on `M_I`, `τ(λ_s) = δ_{s,e}` on `L(G)`.
    fn trace_of_operator(&self, op: &ComplexMatrix) -> f64 {
        match &self.system {
            System::Schur(_) => op.trace().re,
            System::Fourier(g) => {
                let e = g.group().identity();
                op[(e, e)].re
            }
        }
    }

    /// `‖x‖_∞`.
    pub fn op_norm(&self, x: &AlgebraElement) -> Result<f64> {
        Ok(linalg::op_norm(&self.operator(x)?))
    }

    /// `‖x‖_p` in the source algebra.
    pub fn lp_norm(&self, x: &AlgebraElement) -> Result<f64> {
        let op = self.operator(x)?;
        self.abs_power_norm(&(op.adjoint() * &op), 0.5)
    }

    /// `‖g^{s}‖_p` for a positive `g`, with negative roundoff clipped.
    fn abs_power_norm(&self, g: &ComplexMatrix, s: f64) -> Result<f64> {
        let eig = linalg::HermitianEigen::new(g)?;
        if self.p.is_infinite() {
            return Ok(eig.values.iter().fold(0.0f64, |m, &v| m.max(v.max(0.0).powf(s))));
        }
        let pw = eig.apply(|v| v.max(0.0).powf(s * self.p));
        Ok(self.trace_of_operator(&pw).max(0.0).powf(1.0 / self.p))
    }

    /// `Γ(x, y)` in the source algebra.
    pub fn carre_du_champ(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        match (x, y, &self.system) {
            (AlgebraElement::Matrix(a), AlgebraElement::Matrix(b), System::Schur(s)) => {
                Ok(AlgebraElement::Matrix(s.carre_du_champ(a, b)?))
            }
            (AlgebraElement::Group(a), AlgebraElement::Group(b), System::Fourier(g)) => {
                Ok(group_elem(g.group_carre_du_champ(a, b)?))
            }
            _ => Err(mismatch()),
        }
    }

    /// `‖Γ(x, x)^{1/2}‖_p`.
    pub fn half_seminorm(&self, x: &AlgebraElement) -> Result<f64> {
        let gamma = self.operator(&self.carre_du_champ(x, x)?)?;
        self.abs_power_norm(&gamma, 0.5)
    }

    /// `‖x‖_{Γ,p}`.
    pub fn gamma_seminorm(&self, x: &AlgebraElement) -> Result<f64> {
        Ok(self.half_seminorm(x)?.max(self.half_seminorm(&self.adjoint(x)?)?))
    }

    /// `‖A^{1/2} x‖_2`.
    pub fn sqrt_generator_l2(&self, x: &AlgebraElement) -> Result<f64> {
        match (x, &self.system) {
            (AlgebraElement::Matrix(m), System::Schur(s)) => Ok(s.apply_sqrt_generator(m)?.norm()),
            (AlgebraElement::Group(g), System::Fourier(sys)) => Ok(sys.apply_sqrt_generator(g)?.norm()),
            _ => Err(mismatch()),
        }
    }

    fn is_injective(&self) -> bool {
        match &self.system {
            System::Schur(s) => s.is_injective(),
            System::Fourier(g) => {
                let e = g.group().identity();
                g.psi().iter().enumerate().all(|(s, &v)| s == e || v > DISTINCT_TOL)
            }
        }
    }

    /// Which null-diagonal basis elements the generator annihilates, read off the symbol.
    fn symbolic_kernel(&self) -> Vec<usize> {
        match &self.system {
            System::Schur(s) => {
                let n = s.len();
                self.null_diagonal_basis().into_iter().filter(|&k| s.in_kernel(k / n, k % n)).collect()
            }
            System::Fourier(g) => {
                self.null_diagonal_basis().into_iter().filter(|&s| g.psi()[s] <= DISTINCT_TOL).collect()
            }
        }
    }

    /// Kernel of the seminorm in the unitized null-diagonal algebra.
    ///
    /// The generator is diagonal in the basis of matrix units (resp. group unitaries), so its
    /// kernel there is spanned by basis elements. Each one is tested numerically through the
    /// seminorm itself and compared with the symbol. `value` is the kernel dimension, counting
    /// `ℂ·1`. A non-injective system passes with `degenerate = true` and its kernel listed.
    pub fn kernel_check(&self) -> Result<CheckReport> {
        let start = Instant::now();
        let cut = DISTINCT_TOL.sqrt();
        let mut numeric = Vec::new();
        for k in self.null_diagonal_basis() {
            if self.gamma_seminorm(&self.basis_element(k))? <= cut {
                numeric.push(k);
            }
        }
        let unit = self.gamma_seminorm(&self.one())?;
        let symbolic = self.symbolic_kernel();
        let injective = self.is_injective();
        let agree = numeric == symbolic && unit <= cut;
        let residual = unit + numeric.len().abs_diff(symbolic.len()) as f64;
        let pass = agree && (numeric.is_empty() || !injective);
        let mut report = CheckReport::verdict("lip_kernel", pass, residual, 0.0)
            .param("flavor", self.system.flavor())
            .param("p", self.p)
            .param("degenerate", !numeric.is_empty())
            .param("kernel_basis", &numeric)
            .value(1.0 + numeric.len() as f64);
        if let System::Schur(s) = &self.system {
            if !injective {
                report = report.param("kernel_classes", s.kernel_classes());
            }
        }
        Ok(report.since(start))
    }

    /// On `samples` random pairs: `‖xy‖_Γ ≤ ‖x‖_∞‖y‖_Γ + ‖x‖_Γ‖y‖_∞`, `‖x + y‖_Γ ≤ ‖x‖_Γ + ‖y‖_Γ`,
    /// `‖x*‖_Γ = ‖x‖_Γ` and `‖kx‖_Γ = |k|‖x‖_Γ`. The residual is the largest violation.
    pub fn leibniz_check(&self, samples: usize, seed: u64) -> Result<CheckReport> {
        let start = Instant::now();
        let mut rng = linalg::random::rng(seed);
        let mut worst = [0.0f64; 4];
        for _ in 0..samples {
            let x = self.random_element(&mut rng);
            let y = self.random_element(&mut rng);
            let k = C64::new(linalg::random::normal(&mut rng), linalg::random::normal(&mut rng));
            let (nx, ny) = (self.gamma_seminorm(&x)?, self.gamma_seminorm(&y)?);
            let (ix, iy) = (self.op_norm(&x)?, self.op_norm(&y)?);
            let nxy = self.gamma_seminorm(&self.multiply(&x, &y)?)?;
            let nsum = self.gamma_seminorm(&self.add(&x, &y)?)?;
            let nstar = self.gamma_seminorm(&self.adjoint(&x)?)?;
            let nk = self.gamma_seminorm(&self.scale(&x, k))?;
            worst[0] = worst[0].max(nxy - (ix * ny + nx * iy));
            worst[1] = worst[1].max(nsum - (nx + ny));
            worst[2] = worst[2].max((nstar - nx).abs());
            worst[3] = worst[3].max((nk - k.norm() * nx).abs() / nx.max(1.0));
        }
        let residual = worst.iter().fold(0.0f64, |m, &v| m.max(v));
        Ok(CheckReport::residual("leibniz", residual, INEQUALITY_SLACK)
            .param("flavor", self.system.flavor())
            .param("p", self.p)
            .param("samples", samples)
            .param("leibniz", worst[0])
            .param("triangle", worst[1])
            .param("symmetry", worst[2])
            .param("homogeneity", worst[3])
            .seed(seed)
            .since(start))
    }

    /// A lower bound for `sup{|φ(a) − ψ(a)| : a = a*, ‖a‖_Γ ≤ 1}`: the best of `samples`
    /// random null-diagonal self-adjoint directions, each rescaled to seminorm one. The
    /// constant part of `a` never separates states, so it is dropped. Sampling a longer
    /// prefix of the same seeded stream can only raise the bound.
    pub fn mk_lower_bound(&self, phi: &MatrixState, psi: &MatrixState, samples: usize, seed: u64) -> Result<f64> {
        for st in [phi, psi] {
            if st.dim() != self.size() {
                return Err(MetricError::Input(format!(
                    "state of dimension {} on an algebra acting on dimension {}",
                    st.dim(),
                    self.size()
                )));
            }
        }
        if !self.symbolic_kernel().is_empty() {
            return Err(MetricError::Domain(
                "the seminorm vanishes beyond the scalars, so the distance is not finite".into(),
            ));
        }
        let mut rng = linalg::random::rng(seed);
        let mut best = 0.0f64;
        for _ in 0..samples {
            let a = self.random_null_diagonal_selfadjoint(&mut rng)?;
            let s = self.gamma_seminorm(&a)?;
            if s <= DISTINCT_TOL {
                continue;
            }
            let op = self.operator(&a)?;
            best = best.max((phi.expectation(&op) - psi.expectation(&op)).norm() / s);
        }
        Ok(best)
    }
}

fn group_elem(g: GroupAlgebraElement) -> AlgebraElement {
    AlgebraElement::Group(g)
}

fn mismatch() -> MetricError {
    MetricError::Input("element does not belong to the algebra of this system".into())
}

/// A state `a ↦ tr(ρ a)` given by a density matrix on the space the algebra acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixState {
    density: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixStateJson {
    pub density: serde_json::Value,
}

impl MatrixState {
    pub fn new(density: ComplexMatrix) -> Result<Self> {
        linalg::ensure_square(&density)?;
        linalg::ensure_finite(&density)?;
        if density.nrows() == 0 {
            return Err(MetricError::Input("a state needs a nonzero dimension".into()));
        }
        let tr = density.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(MetricError::Input(format!("density has trace {tr}, expected 1")));
        }
        if !linalg::is_psd(&density, STATE_TOL)? {
            return Err(MetricError::Input("density is not positive semidefinite".into()));
        }
        Ok(Self { density })
    }

    /// Diagonal density `diag(w)`; the weights must already sum to one.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(weights.len(), weights.iter().map(|&w| linalg::c64(w)));
        Self::new(ComplexMatrix::from_diagonal(&d))
    }

    /// The vector state of `v / ‖v‖`.
    pub fn pure(v: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(v);
        let n = v.norm();
        if !(n > 0.0) {
            return Err(MetricError::Input("a vector state needs a nonzero vector".into()));
        }
        let u = v / linalg::c64(n);
        Self::new(&u * u.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.density.nrows()
    }

    pub fn density(&self) -> &ComplexMatrix {
        &self.density
    }

    /// `tr(ρ a)`.
    pub fn expectation(&self, a: &ComplexMatrix) -> C64 {
        (&self.density * a).trace()
    }

    pub fn to_json(&self) -> MatrixStateJson {
        MatrixStateJson { density: linalg::matrix_to_json(&self.density) }
    }

    pub fn from_json(json: &MatrixStateJson) -> Result<Self> {
        Self::new(linalg::matrix_from_json(&json.density)?)
    }
}

/// Convenience constructors for the two flavors.
impl LipSeminormSpec {
    pub fn schur(system: SchurSystem, p: f64) -> Result<Self> {
        Self::new(System::Schur(system), p)
    }

    pub fn fourier(system: GroupCocycleSystem, p: f64) -> Result<Self> {
        Self::new(System::Fourier(system), p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str, p: f64) -> LipSeminormSpec {
        LipSeminormSpec::new(System::from_name(name).unwrap(), p).unwrap()
    }

    fn mat(m: ComplexMatrix) -> AlgebraElement {
        AlgebraElement::Matrix(m)
    }

    #[test]
    fn rejects_small_p() {
        let sys = System::from_name("heat:2").unwrap();
        assert!(matches!(LipSeminormSpec::new(sys.clone(), 1.5), Err(MetricError::Unsupported(_))));
        assert!(LipSeminormSpec::new(sys, f64::INFINITY).is_ok());
    }

    #[test]
    fn golden_heat_two() {
        let s = spec("heat:2", 2.0);
        let x = mat(linalg::matrix_unit(2, 0, 1) + linalg::matrix_unit(2, 1, 0));
        // Γ(x, x) = 1 on ℂ², whose square root has Hilbert-Schmidt norm √2.
        assert!((s.gamma_seminorm(&x).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!(s.gamma_seminorm(&s.one()).unwrap() < 1e-14);
    }

    #[test]
    fn p_two_matches_generator_norm() {
        let mut rng = linalg::random::rng(5);
        for name in ["heat:3", "poisson:4", "donut:8:1:1", "dihedral:3"] {
            let s = spec(name, 2.0);
            for _ in 0..5 {
                let x = s.random_null_diagonal_selfadjoint(&mut rng).unwrap();
                let lhs = s.gamma_seminorm(&x).unwrap();
                let rhs = s.sqrt_generator_l2(&x).unwrap();
                assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0), "{name}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn symmetric_and_homogeneous() {
        let mut rng = linalg::random::rng(8);
        for p in [2.0, 3.0, f64::INFINITY] {
            let s = spec("poisson:3", p);
            let x = s.random_element(&mut rng);
            let n = s.gamma_seminorm(&x).unwrap();
            assert!((s.gamma_seminorm(&s.adjoint(&x).unwrap()).unwrap() - n).abs() < 1e-10 * n);
            let k = C64::new(-2.0, 1.5);
            assert!((s.gamma_seminorm(&s.scale(&x, k)).unwrap() - k.norm() * n).abs() < 1e-10 * n);
        }
    }

    #[test]
    fn kernels() {
        let r = spec("heat:3", 2.0).kernel_check().unwrap();
        assert!(r.pass, "{}", r.line());
        assert_eq!(r.value, Some(1.0));
        let r = spec("donut:8:1:1", 2.0).kernel_check().unwrap();
        assert!(r.pass && r.value == Some(1.0), "{}", r.line());
        let constant = SchurSystem::new(vec![vec![1.0]; 3]).unwrap();
        let r = LipSeminormSpec::schur(constant, 2.0).unwrap().kernel_check().unwrap();
        assert!(r.pass);
        assert_eq!(r.value, Some(7.0));
        assert_eq!(r.params["degenerate"], true);
    }

    #[test]
    fn leibniz_holds() {
        assert!(spec("heat:3", 2.0).leibniz_check(100, 0).unwrap().pass);
        assert!(spec("Zn:4", 2.0).leibniz_check(100, 0).unwrap().pass);
        assert!(spec("poisson:3", 4.0).leibniz_check(20, 1).unwrap().pass);
        let s = spec("heat:3", 2.0);
        let one = s.one();
        let prod = s.multiply(&one, &one).unwrap();
        assert_eq!(s.gamma_seminorm(&prod).unwrap(), 0.0);
    }

    #[test]
    fn states_validate() {
        assert!(MatrixState::diagonal(&[0.5, 0.5]).is_ok());
        assert!(MatrixState::diagonal(&[0.7, 0.5]).is_err());
        assert!(MatrixState::diagonal(&[1.5, -0.5]).is_err());
        let st = MatrixState::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap();
        assert_eq!(MatrixState::from_json(&st.to_json()).unwrap(), st);
    }

    #[test]
    fn mk_bounds() {
        let s = spec("heat:2", 2.0);
        let phi = MatrixState::diagonal(&[1.0, 0.0]).unwrap();
        let psi = MatrixState::diagonal(&[0.0, 1.0]).unwrap();
        assert_eq!(s.mk_lower_bound(&phi, &phi, 50, 0).unwrap(), 0.0);
        // Diagonal states agree on every null-diagonal element.
        assert!(s.mk_lower_bound(&phi, &psi, 50, 0).unwrap() < 1e-12);
        let plus = MatrixState::pure(&[linalg::c64(1.0), linalg::c64(1.0)]).unwrap();
        let minus = MatrixState::pure(&[linalg::c64(1.0), linalg::c64(-1.0)]).unwrap();
        let b10 = s.mk_lower_bound(&plus, &minus, 10, 3).unwrap();
        let b40 = s.mk_lower_bound(&plus, &minus, 40, 3).unwrap();
        assert!(b10 > 0.0 && b40 >= b10);
        assert_eq!(b40, s.mk_lower_bound(&minus, &plus, 40, 3).unwrap());
        // a = [[0, z], [z̄, 0]] has seminorm √2|z| and separates ± by 2 Re z, so the distance is √2.
        assert!(b40 <= 2f64.sqrt() * (1.0 + 1e-12));
        assert!(b40 > 0.9 * 2f64.sqrt());
        let degenerate = LipSeminormSpec::schur(SchurSystem::new(vec![vec![0.0]; 2]).unwrap(), 2.0).unwrap();
        assert!(matches!(degenerate.mk_lower_bound(&plus, &minus, 5, 0), Err(MetricError::Domain(_))));
    }
}
