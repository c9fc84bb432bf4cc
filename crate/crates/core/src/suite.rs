//! Verification suites: every identity the crate knows how to check, run over a grid of
//! deformation parameters and collected as [`CheckReport`]s.

use std::str::FromStr;
use std::time::Instant;

use crate::dirac::{self, DiracError};
use crate::fock::QFockSpace;
use crate::fourier::{FourierError, GroupAlgebraElement, GroupCocycleSystem};
use crate::gradient::{AlgebraElement, GradientError, GradientSystem};
use crate::linalg::{self, random, DEFAULT_TOL};
use crate::metric::{LipSeminormSpec, MetricError};
use crate::report::CheckReport;
use crate::schur::{self, SchurError};
use crate::system::{System, SystemError};

pub const DEFAULT_Q_GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
/// Resolvent parameters `t`.
pub const RESOLVENT_TIMES: [f64; 6] = [-10.0, -1.0, -0.1, 0.1, 1.0, 10.0];
/// Times for the extrapolated limit `Γ = lim (2t)^{-1}(T_t(x*y) − T_t(x)*T_t(y))`.
pub const LIMIT_TIMES: [f64; 3] = [2e-3, 1e-3, 5e-4];

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("unknown suite '{0}' (expected all, gamma, dirac, metric or gap)")]
    UnknownSuite(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Schur(#[from] SchurError),
    #[error(transparent)]
    Fourier(#[from] FourierError),
    #[error(transparent)]
    Gradient(#[from] GradientError),
    #[error(transparent)]
    Dirac(#[from] DiracError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

type Result<T> = std::result::Result<T, SuiteError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Gamma,
    Dirac,
    Metric,
    Gap,
}

impl FromStr for Suite {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "gamma" => Ok(Self::Gamma),
            "dirac" => Ok(Self::Dirac),
            "metric" => Ok(Self::Metric),
            "gap" => Ok(Self::Gap),
            _ => Err(SuiteError::UnknownSuite(s.to_owned())),
        }
    }
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub q_grid: Vec<f64>,
    pub suite: Suite,
    pub seed: u64,
    /// Base tolerance. Every check scales its own pinned tolerance by `tol / 1e-9`.
    pub tol: f64,
    /// Random samples per sampled check.
    pub samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { q_grid: DEFAULT_Q_GRID.to_vec(), suite: Suite::All, seed: 0, tol: DEFAULT_TOL, samples: 10 }
    }
}

impl VerifyConfig {
    fn scaled(&self, pinned: f64) -> f64 {
        pinned * self.tol / DEFAULT_TOL
    }
}

/// Runs the selected suites on `system`, tagging every report with `label`.
pub fn verify(system: &System, label: &str, cfg: &VerifyConfig) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    if cfg.suite.includes(Suite::Gamma) {
        out.extend(gamma_algebraic(system, cfg)?);
    }
    if cfg.suite.includes(Suite::Gap) {
        out.extend(gap_checks(system, cfg)?);
    }
    if cfg.suite.includes(Suite::Metric) {
        out.extend(metric_checks(system, cfg)?);
    }
    if cfg.suite.includes(Suite::Gamma) || cfg.suite.includes(Suite::Dirac) {
        for &q in &cfg.q_grid {
            let fock = system.default_fock(q)?;
            let gs = system.gradient_system(&fock)?;
            let tagged = |r: CheckReport| r.param("q", q).param("fock_cap", fock.level_cap());
            if cfg.suite.includes(Suite::Gamma) {
                out.extend(gamma_fock(system, &fock, &gs, cfg)?.into_iter().map(tagged));
            }
            if cfg.suite.includes(Suite::Dirac) {
                out.extend(dirac_checks(system, &fock, &gs, cfg)?.into_iter().map(tagged));
            }
        }
    }
    Ok(out.into_iter().map(|r| r.param("system", label)).collect())
}

fn sample_pairs<T>(n: usize, mut make: impl FnMut() -> T) -> Vec<(T, T)> {
    (0..n).map(|_| (make(), make())).collect()
}

/// The q-independent identities for `Γ`.
fn gamma_algebraic(system: &System, cfg: &VerifyConfig) -> Result<Vec<CheckReport>> {
    let mut rng = random::rng(cfg.seed);
    let mut out = Vec::new();
    match system {
        System::Schur(s) => {
            let start = Instant::now();
            let n = s.len();
            let mut worst = 0.0f64;
            for (x, y) in sample_pairs(cfg.samples, || random::gaussian(n, n, &mut rng)) {
                let g = s.carre_du_champ(&x, &y)?;
                worst = worst
                    .max(linalg::residual(&s.carre_du_champ_closed_form(&x, &y)?, &g))
                    .max(linalg::residual(&s.carre_du_champ_polarized(&x, &y)?, &g));
            }
            out.push(CheckReport::residual("gamma_forms", worst, cfg.scaled(1e-9)).seed(cfg.seed).since(start));

            let start = Instant::now();
            let mut worst = 0.0f64;
            for (x, y) in sample_pairs(cfg.samples, || random::gaussian(n, n, &mut rng)) {
                worst = worst.max(s.gamma_limit_check(&x, &y, &LIMIT_TIMES, 0.0)?.residual);
            }
            out.push(
                CheckReport::residual("gamma_limit", worst, cfg.scaled(1e-5))
                    .param("t_list", LIMIT_TIMES)
                    .seed(cfg.seed)
                    .since(start),
            );

            let start = Instant::now();
            let mut worst = 0.0f64;
            for _ in 0..cfg.samples {
                let mut x = random::gaussian(n, n, &mut rng);
                x -= s.kernel_projection(&x)?;
                let total: f64 = (0..s.h_dim())
                    .map(|k| {
                        let mut e = vec![0.0; s.h_dim()];
                        e[k] = 1.0;
                        s.riesz_transform(&e, &x).map(|r| r.norm_squared())
                    })
                    .sum::<std::result::Result<f64, _>>()?;
                let via_square = s.riesz_square_function(&x, 2.0)?.powi(2);
                let norm = x.norm_squared().max(f64::MIN_POSITIVE);
                worst = worst.max((total - x.norm_squared()).abs() / norm).max((via_square - total).abs() / norm);
            }
            out.push(CheckReport::residual("riesz_parseval", worst, cfg.scaled(1e-10)).seed(cfg.seed).since(start));
        }
        System::Fourier(g) => {
            let start = Instant::now();
            let n = g.order();
            let mut worst = 0.0f64;
            for s in 0..n {
                for t in 0..n {
                    let direct = g.group_carre_du_champ(&delta(n, s), &delta(n, t))?;
                    for (c, u) in [g.carre_du_champ_lambda(s, t), g.carre_du_champ_cocycle(s, t)] {
                        let formula = delta(n, u).scale(linalg::c64(c));
                        worst = worst.max(direct.sub(&formula).norm() / direct.norm().max(1.0));
                    }
                }
            }
            out.push(CheckReport::residual("gamma_forms", worst, cfg.scaled(1e-9)).since(start));

            let start = Instant::now();
            let cocycle = g.cocycle_residual();
            let (hom, orth) = g.representation_residuals();
            let length = g.length_residual(|s| g.psi()[s]);
            out.push(
                CheckReport::residual("cocycle_law", cocycle.max(hom).max(orth).max(length), cfg.scaled(1e-9))
                    .param("cocycle_residual", cocycle)
                    .since(start),
            );
        }
    }
    Ok(out)
}

fn delta(n: usize, s: usize) -> GroupAlgebraElement {
    GroupAlgebraElement::delta(n, s)
}

/// `Γ(x, y) = E(∂x* ∂y)` and the exact Kato equality at `p = 2` on one Fock space.
fn gamma_fock(system: &System, fock: &QFockSpace, gs: &GradientSystem, cfg: &VerifyConfig) -> Result<Vec<CheckReport>> {
    let mut rng = random::rng(cfg.seed);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..cfg.samples {
        let (x, y) = (gs.random_element(&mut rng)?, gs.random_element(&mut rng)?);
        let r = match (system, &x, &y) {
            (System::Schur(s), AlgebraElement::Matrix(a), AlgebraElement::Matrix(b)) => {
                let z = s.gradient(fock, a)?.adjoint() * s.gradient(fock, b)?;
                linalg::residual(&schur::conditional_expectation(fock, &z)?, &s.carre_du_champ(a, b)?)
            }
            (System::Fourier(g), AlgebraElement::Group(a), AlgebraElement::Group(b)) => fourier_expectation(g, fock, a, b)?,
            _ => unreachable!("the gradient system matches the system flavor"),
        };
        worst = worst.max(r);
    }
    let expectation = CheckReport::residual("gamma_expectation", worst, cfg.scaled(1e-9)).seed(cfg.seed).since(start);
    let kato = dirac::kato_equality_check(gs, cfg.samples, &mut rng, cfg.scaled(1e-10))?.seed(cfg.seed);
    Ok(vec![expectation, kato])
}

fn fourier_expectation(
    g: &GroupCocycleSystem,
    fock: &QFockSpace,
    x: &GroupAlgebraElement,
    y: &GroupAlgebraElement,
) -> Result<f64> {
    let cp = crate::fourier::CrossedProduct::new(g.clone(), fock.clone())?;
    let e = cp.expectation_of_product(&cp.gradient(x)?, &cp.gradient(y)?)?;
    let gamma = g.group_carre_du_champ(x, y)?;
    Ok(e.sub(&gamma).norm() / gamma.norm().max(1.0))
}

fn dirac_checks(system: &System, fock: &QFockSpace, gs: &GradientSystem, cfg: &VerifyConfig) -> Result<Vec<CheckReport>> {
    let mut rng = random::rng(cfg.seed);
    let tol = cfg.scaled(1e-9);
    let mut out = vec![dirac::verify_square(gs, tol)?];
    for t in RESOLVENT_TIMES {
        out.push(dirac::verify_resolvent(gs, t, cfg.scaled(1e-8))?);
    }
    out.push(dirac::verify_hodge_decomposition(gs, tol)?);
    out.push(dirac::verify_full_restricted_consistency(gs, tol)?);
    out.push(dirac::spectral_symmetry_check(gs, tol)?);
    let samples: Vec<AlgebraElement> = (0..cfg.samples.min(4))
        .map(|_| gs.random_element(&mut rng))
        .collect::<std::result::Result<_, _>>()?;
    let mut worst: Option<CheckReport> = None;
    for a in &samples {
        let (_, _, r) = dirac::commutator_hodge(gs, a, tol)?;
        if worst.as_ref().is_none_or(|w| r.residual > w.residual) {
            worst = Some(r);
        }
    }
    out.extend(worst);
    if let [a, b, ..] = samples.as_slice() {
        out.push(dirac::commutator_leibniz(gs, a, b, tol)?);
    }
    out.push(dirac::even_structure_check(gs, &samples, tol)?);
    if matches!(system, System::Schur(_)) {
        out.push(dirac::commutator_unit_bound(gs, tol)?);
    }
    let d2 = match system {
        System::Schur(s) => dirac::build_dirac2_schur(s, fock)?,
        System::Fourier(g) => dirac::build_dirac2_fourier(g, fock)?,
    };
    out.push(d2.commutator_check(&samples, tol)?);
    if system.is_exact_fermionic(fock) {
        out.push(d2.square_check(tol)?);
    }
    Ok(out.into_iter().map(|r| r.seed(cfg.seed)).collect())
}

fn metric_checks(system: &System, cfg: &VerifyConfig) -> Result<Vec<CheckReport>> {
    let spec = LipSeminormSpec::new(system.clone(), 2.0)?;
    let mut out = vec![spec.kernel_check()?, spec.leibniz_check(cfg.samples.max(1) * 10, cfg.seed)?];
    let start = Instant::now();
    let mut rng = random::rng(cfg.seed);
    let mut worst = 0.0f64;
    for _ in 0..cfg.samples {
        let x = spec.random_null_diagonal_selfadjoint(&mut rng)?;
        let (a, b) = (spec.gamma_seminorm(&x)?, spec.sqrt_generator_l2(&x)?);
        worst = worst.max((a - b).abs() / b.max(1.0));
    }
    out.push(CheckReport::residual("seminorm_p2", worst, cfg.scaled(1e-10)).seed(cfg.seed).since(start));
    Ok(out)
}

fn gap_checks(system: &System, cfg: &VerifyConfig) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    match system {
        System::Schur(s) => {
            let start = Instant::now();
            let gap = s.gap()?;
            out.push(
                CheckReport::verdict("gap_alpha", gap > 0.0, 0.0, 0.0)
                    .value(gap)
                    .param("distinct_differences", s.distinct_differences().len())
                    .since(start),
            );
            if gap.is_finite() {
                out.push(s.counting_bound_check(20)?);
            }
        }
        System::Fourier(g) => {
            let (g_alpha, g_psi, report) = g.gap_comparison(cfg.scaled(1e-12))?;
            out.push(report.param("strict", g_alpha < g_psi));
        }
    }
    Ok(out)
}

/// A matrix dump of the Hodge-Dirac spectrum, for reports.
pub fn dirac_spectrum(system: &System, q: f64) -> Result<Vec<f64>> {
    let fock = system.default_fock(q)?;
    let gs = system.gradient_system(&fock)?;
    Ok(dirac::assemble_hodge_dirac(&gs)?.spectrum()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_parse() {
        assert_eq!("gap".parse::<Suite>().unwrap(), Suite::Gap);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn heat_three_passes() {
        let sys = System::from_name("heat:3").unwrap();
        let cfg = VerifyConfig { q_grid: vec![-1.0, 0.0, 1.0], samples: 3, ..Default::default() };
        let reports = verify(&sys, "heat:3", &cfg).unwrap();
        for r in &reports {
            assert!(r.pass, "{}", r.line());
        }
        assert!(reports.iter().any(|r| r.name == "dirac2_square"));
        assert!(reports.iter().all(|r| r.params["system"] == "heat:3"));
    }

    #[test]
    fn donut_gap_is_strict() {
        let sys = System::from_name("donut:8:1:1").unwrap();
        let cfg = VerifyConfig { suite: Suite::Gap, ..Default::default() };
        let reports = verify(&sys, "donut", &cfg).unwrap();
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert!(r.pass);
        assert!((r.value.unwrap() - 4.0 * (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
        assert_eq!(r.params["strict"], true);
    }

    #[test]
    fn trivial_group_passes() {
        let sys = System::from_name("Zn:1").unwrap();
        let cfg = VerifyConfig { samples: 2, ..Default::default() };
        for r in verify(&sys, "Zn:1", &cfg).unwrap() {
            assert!(r.pass, "{}", r.line());
        }
    }
}
