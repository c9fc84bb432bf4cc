//! The L² gradient triple `(A, ∂, ∂*)` shared by the Schur and Fourier flavors.
//!
//! Source and target are finite-dimensional Hilbert spaces in orthonormal coordinates, so the
//! trace pairings are the standard inner products. A Schur source vector is `vec(x)` with index
//! `i·n + j`; a Fourier source vector is the coefficient list of `Σ x_s λ_s`.

use nalgebra::DVector;

use crate::fock::QFockSpace;
use crate::fourier::{CrossedProduct, FourierError, GroupAlgebraElement};
use crate::linalg::{self, ComplexMatrix, LinalgError, C64, DEFAULT_TOL};
use crate::schur::{SchurError, SchurSystem};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GradientError {
    #[error("{0}")]
    Input(String),
    #[error("∂* is not the adjoint of ∂ (residual {0:.3e})")]
    NotAdjoint(f64),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Schur(#[from] SchurError),
    #[error(transparent)]
    Fourier(#[from] FourierError),
}

type Result<T> = std::result::Result<T, GradientError>;

/// Where a gradient triple comes from; drives the operator-level (non-L²) structure.
#[derive(Debug, Clone)]
pub enum GradientKind {
    Schur { system: SchurSystem, fock: QFockSpace },
    Fourier { product: CrossedProduct },
    /// A bare triple with no algebra attached.
    Abstract,
}

/// An element of the source algebra.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgebraElement {
    Matrix(ComplexMatrix),
    Group(GroupAlgebraElement),
}

#[derive(Debug, Clone)]
pub struct GradientSystem {
    kind: GradientKind,
    generator: ComplexMatrix,
    sqrt_generator: ComplexMatrix,
    grad: ComplexMatrix,
    grad_adjoint: ComplexMatrix,
    target_generator: Option<ComplexMatrix>,
}

impl GradientSystem {
    /// Checks shapes and `⟨∂x, y⟩ = ⟨x, ∂*y⟩` on basis pairs.
    pub fn new(
        kind: GradientKind,
        generator: ComplexMatrix,
        grad: ComplexMatrix,
        grad_adjoint: ComplexMatrix,
        target_generator: Option<ComplexMatrix>,
    ) -> Result<Self> {
        let (tgt, src) = grad.shape();
        if generator.shape() != (src, src) || grad_adjoint.shape() != (src, tgt) {
            return Err(GradientError::Input(format!(
                "inconsistent shapes: A {:?}, ∂ {:?}, ∂* {:?}",
                generator.shape(),
                grad.shape(),
                grad_adjoint.shape()
            )));
        }
        if let Some(b) = &target_generator {
            if b.shape() != (tgt, tgt) {
                return Err(GradientError::Input("target generator has the wrong shape".into()));
            }
        }
        let res = adjointness_residual(&grad, &grad_adjoint);
        if !(res <= DEFAULT_TOL) {
            return Err(GradientError::NotAdjoint(res));
        }
        let sqrt_generator = linalg::hermitian_function(&generator, |v| v.max(0.0).sqrt())?;
        Ok(Self { kind, generator, sqrt_generator, grad, grad_adjoint, target_generator })
    }

    /// A bare triple; `A` defaults to `∂*∂`.
    pub fn from_matrices(grad: ComplexMatrix, grad_adjoint: ComplexMatrix, generator: Option<ComplexMatrix>) -> Result<Self> {
        let generator = generator.unwrap_or_else(|| &grad_adjoint * &grad);
        Self::new(GradientKind::Abstract, generator, grad, grad_adjoint, None)
    }

    pub fn kind(&self) -> &GradientKind {
        &self.kind
    }

    pub fn source_dim(&self) -> usize {
        self.grad.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.grad.nrows()
    }

    pub fn generator(&self) -> &ComplexMatrix {
        &self.generator
    }

    pub fn sqrt_generator(&self) -> &ComplexMatrix {
        &self.sqrt_generator
    }

    pub fn grad(&self) -> &ComplexMatrix {
        &self.grad
    }

    pub fn grad_adjoint(&self) -> &ComplexMatrix {
        &self.grad_adjoint
    }

    /// `Id ⊗ A` on the target, when the flavor knows it.
    pub fn target_generator(&self) -> Option<&ComplexMatrix> {
        self.target_generator.as_ref()
    }

    pub fn adjointness_residual(&self) -> f64 {
        adjointness_residual(&self.grad, &self.grad_adjoint)
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            GradientKind::Schur { .. } => "schur",
            GradientKind::Fourier { .. } => "fourier",
            GradientKind::Abstract => "abstract",
        }
    }

    pub fn q(&self) -> Option<f64> {
        match &self.kind {
            GradientKind::Schur { fock, .. } => Some(fock.q()),
            GradientKind::Fourier { product } => Some(product.fock().q()),
            GradientKind::Abstract => None,
        }
    }

    fn unsupported<T>(&self, what: &str) -> Result<T> {
        Err(GradientError::Unsupported(format!("{what} needs a Schur or Fourier gradient system")))
    }

    fn matrix<'a>(&self, a: &'a AlgebraElement) -> Result<&'a ComplexMatrix> {
        match a {
            AlgebraElement::Matrix(m) => Ok(m),
            AlgebraElement::Group(_) => Err(GradientError::Input("expected a matrix element".into())),
        }
    }

    fn group<'a>(&self, a: &'a AlgebraElement) -> Result<&'a GroupAlgebraElement> {
        match a {
            AlgebraElement::Group(x) => Ok(x),
            AlgebraElement::Matrix(_) => Err(GradientError::Input("expected a group algebra element".into())),
        }
    }

    /// The unit of the source algebra.
    pub fn one(&self) -> Result<AlgebraElement> {
        match &self.kind {
            GradientKind::Schur { system, .. } => Ok(AlgebraElement::Matrix(linalg::identity(system.len()))),
            GradientKind::Fourier { product } => {
                let g = product.system().group();
                Ok(AlgebraElement::Group(GroupAlgebraElement::delta(g.order(), g.identity())))
            }
            GradientKind::Abstract => self.unsupported("the unit"),
        }
    }

    /// A Gaussian random element of the source algebra.
    pub fn random_element<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<AlgebraElement> {
        match &self.kind {
            GradientKind::Schur { system, .. } => {
                Ok(AlgebraElement::Matrix(linalg::random::gaussian(system.len(), system.len(), rng)))
            }
            GradientKind::Fourier { product } => {
                Ok(AlgebraElement::Group(GroupAlgebraElement::random(product.system().order(), rng)))
            }
            GradientKind::Abstract => self.unsupported("random elements"),
        }
    }

    pub fn multiply(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
        match &self.kind {
            GradientKind::Schur { .. } => Ok(AlgebraElement::Matrix(self.matrix(a)? * self.matrix(b)?)),
            GradientKind::Fourier { product } => {
                Ok(AlgebraElement::Group(self.group(a)?.mul(self.group(b)?, product.system().group())?))
            }
            GradientKind::Abstract => self.unsupported("products"),
        }
    }

    pub fn adjoint(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        match &self.kind {
            GradientKind::Schur { .. } => Ok(AlgebraElement::Matrix(self.matrix(a)?.adjoint())),
            GradientKind::Fourier { product } => {
                Ok(AlgebraElement::Group(self.group(a)?.adjoint(product.system().group())?))
            }
            GradientKind::Abstract => self.unsupported("adjoints"),
        }
    }

    pub fn scale(&self, a: &AlgebraElement, k: C64) -> AlgebraElement {
        match a {
            AlgebraElement::Matrix(m) => AlgebraElement::Matrix(m * k),
            AlgebraElement::Group(x) => AlgebraElement::Group(x.scale(k)),
        }
    }

    pub fn add(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
        match (a, b) {
            (AlgebraElement::Matrix(x), AlgebraElement::Matrix(y)) => Ok(AlgebraElement::Matrix(x + y)),
            (AlgebraElement::Group(x), AlgebraElement::Group(y)) => Ok(AlgebraElement::Group(x.add(y))),
            _ => Err(GradientError::Input("cannot add elements of different algebras".into())),
        }
    }

    /// The L² coordinates of a source element.
    pub fn source_vector(&self, a: &AlgebraElement) -> Result<DVector<C64>> {
        let v = match a {
            AlgebraElement::Matrix(m) => DVector::from_iterator(m.len(), m.transpose().iter().copied()),
            AlgebraElement::Group(x) => x.as_vector(),
        };
        if v.len() != self.source_dim() {
            return Err(GradientError::Input(format!("element has {} coordinates, expected {}", v.len(), self.source_dim())));
        }
        Ok(v)
    }

    /// Inverse of [`Self::source_vector`].
    pub fn element_from_vector(&self, v: &DVector<C64>) -> Result<AlgebraElement> {
        match &self.kind {
            GradientKind::Schur { system, .. } => {
                let n = system.len();
                Ok(AlgebraElement::Matrix(ComplexMatrix::from_fn(n, n, |i, j| v[i * n + j])))
            }
            GradientKind::Fourier { .. } => Ok(AlgebraElement::Group(GroupAlgebraElement::new(v.iter().copied().collect()))),
            GradientKind::Abstract => self.unsupported("algebra elements"),
        }
    }

    /// `L_a` on the source.
    pub fn source_left(&self, a: &AlgebraElement) -> Result<ComplexMatrix> {
        match &self.kind {
            GradientKind::Schur { system, .. } => Ok(linalg::kron(self.matrix(a)?, &linalg::identity(system.len()))),
            GradientKind::Fourier { product } => Ok(self.group(a)?.left_regular(product.system().group())?),
            GradientKind::Abstract => self.unsupported("left actions"),
        }
    }

    /// The operator `1 ⊗ a` (Schur) or `a` as an element of the crossed product (Fourier).
    pub fn ampliate(&self, a: &AlgebraElement) -> Result<ComplexMatrix> {
        match &self.kind {
            GradientKind::Schur { fock, .. } => Ok(linalg::kron(&linalg::identity(fock.total_dim()), self.matrix(a)?)),
            GradientKind::Fourier { product } => Ok(product.group_element(self.group(a)?)?),
            GradientKind::Abstract => self.unsupported("ampliation"),
        }
    }

    /// `L_Z` on the target for an operator `Z` on the carrier.
    pub fn target_left(&self, z: &ComplexMatrix) -> Result<ComplexMatrix> {
        match &self.kind {
            GradientKind::Schur { system, .. } => Ok(linalg::kron(z, &linalg::identity(system.len()))),
            GradientKind::Fourier { .. } => Ok(z.clone()),
            GradientKind::Abstract => self.unsupported("left actions"),
        }
    }

    /// `∂a` as an operator on the carrier.
    pub fn operator_gradient(&self, a: &AlgebraElement) -> Result<ComplexMatrix> {
        match &self.kind {
            GradientKind::Schur { system, fock } => Ok(system.gradient(fock, self.matrix(a)?)?),
            GradientKind::Fourier { product } => Ok(product.gradient(self.group(a)?)?),
            GradientKind::Abstract => self.unsupported("operator gradients"),
        }
    }

    /// The isometry `J: x ↦ 1 ⊗ x` from source to target; `E = J*`.
    pub fn embedding(&self) -> Result<ComplexMatrix> {
        let mut j = ComplexMatrix::zeros(self.target_dim(), self.source_dim());
        match &self.kind {
            GradientKind::Schur { .. } => {
                for r in 0..self.source_dim() {
                    j[(r, r)] = C64::new(1.0, 0.0);
                }
            }
            GradientKind::Fourier { product } => {
                let f = product.fock().total_dim();
                for s in 0..self.source_dim() {
                    j[(s * f, s)] = C64::new(1.0, 0.0);
                }
            }
            GradientKind::Abstract => return self.unsupported("the embedding J"),
        }
        Ok(j)
    }

    /// `Γ(a, b)` in the source algebra.
    pub fn carre_du_champ(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
        match &self.kind {
            GradientKind::Schur { system, .. } => {
                Ok(AlgebraElement::Matrix(system.carre_du_champ(self.matrix(a)?, self.matrix(b)?)?))
            }
            GradientKind::Fourier { product } => {
                Ok(AlgebraElement::Group(product.system().group_carre_du_champ(self.group(a)?, self.group(b)?)?))
            }
            GradientKind::Abstract => self.unsupported("the carré du champ"),
        }
    }

    /// The operator on `ℓ²` (Schur: `a` itself; Fourier: `L_a`) whose functional calculus
    /// computes norms in the source algebra.
    fn source_operator(&self, a: &AlgebraElement) -> Result<ComplexMatrix> {
        match &self.kind {
            GradientKind::Schur { .. } => Ok(self.matrix(a)?.clone()),
            GradientKind::Fourier { product } => Ok(self.group(a)?.left_regular(product.system().group())?),
            GradientKind::Abstract => self.unsupported("norms"),
        }
    }

    /// `‖a‖_p` in the source (Schatten with `tr` for Schur, `τ_G` for Fourier).
    pub fn source_norm(&self, a: &AlgebraElement, p: f64) -> Result<f64> {
        let op = self.source_operator(a)?;
        match &self.kind {
            GradientKind::Schur { .. } => Ok(linalg::schatten_norm(&op, p)?),
            _ => {
                if p.is_infinite() {
                    return Ok(linalg::op_norm(&op));
                }
                let g = product_group_identity(&self.kind);
                let pw = linalg::hermitian_function(&(op.adjoint() * &op), |v| v.max(0.0).powf(p / 2.0))?;
                Ok(pw[(g, g)].re.max(0.0).powf(1.0 / p))
            }
        }
    }

    /// `‖Z‖_p` for an operator on the carrier, with trace `τ ⊗ tr` (Schur) or `τ_⋊` (Fourier).
    /// Exact at `p = 2`; for other `p` the Fock truncation makes it an approximation.
    pub fn target_norm(&self, z: &ComplexMatrix, p: f64) -> Result<f64> {
        if p.is_infinite() {
            return Ok(linalg::op_norm(z));
        }
        if !(p > 0.0) {
            return Err(LinalgError::BadExponent(p).into());
        }
        let pw = linalg::hermitian_function(&(z.adjoint() * z), |v| v.max(0.0).powf(p / 2.0))?;
        let t = match &self.kind {
            GradientKind::Schur { system, .. } => (0..system.len()).map(|i| pw[(i, i)].re).sum::<f64>(),
            GradientKind::Fourier { product } => product.trace(&pw)?.re,
            GradientKind::Abstract => return self.unsupported("norms"),
        };
        Ok(t.max(0.0).powf(1.0 / p))
    }

    /// `‖a‖_p` for a positive source element raised to the power `1/2`, i.e. `‖a^{1/2}‖_p`.
    pub fn source_sqrt_norm(&self, a: &AlgebraElement, p: f64) -> Result<f64> {
        let op = self.source_operator(a)?;
        let herm = (&op + op.adjoint()).scale(0.5);
        let root = linalg::hermitian_function(&herm, |v| v.max(0.0).sqrt())?;
        match &self.kind {
            GradientKind::Schur { .. } => Ok(linalg::schatten_norm(&root, p)?),
            _ => {
                if p.is_infinite() {
                    return Ok(linalg::op_norm(&root));
                }
                let g = product_group_identity(&self.kind);
                let pw = linalg::hermitian_function(&herm, |v| v.max(0.0).powf(p / 2.0))?;
                Ok(pw[(g, g)].re.max(0.0).powf(1.0 / p))
            }
        }
    }

    /// `A^{1/2} a` in the source algebra.
    pub fn apply_sqrt_generator(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        let v = self.source_vector(a)?;
        self.element_from_vector(&(&self.sqrt_generator * v))
    }
}

fn product_group_identity(kind: &GradientKind) -> usize {
    match kind {
        GradientKind::Fourier { product } => product.system().group().identity(),
        _ => 0,
    }
}

/// `‖∂* − ∂^H‖_F / max(1, ‖∂‖_F)`: the pairing defect over all basis pairs at once.
pub fn adjointness_residual(grad: &ComplexMatrix, grad_adjoint: &ComplexMatrix) -> f64 {
    linalg::residual(grad_adjoint, &grad.adjoint())
}
