//! Coefficient families `(lambda, t) -> A_lambda(t)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dichotomy::matrix_sign_projector;
use crate::error::{Error, Result};
use crate::linalg::{canonicalize_columns, spectral_norm, sym_eig, Frame, Matrix, Vector};

/// A point of the parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Param {
    Scalar(f64),
    /// Point `e^{i theta}` of the circle, stored as the angle.
    Angle(f64),
    Point(f64, f64),
}

impl Param {
    pub fn coords(&self) -> Vec<f64> {
        match *self {
            Param::Scalar(x) | Param::Angle(x) => vec![x],
            Param::Point(x, y) => vec![x, y],
        }
    }

    fn describe(&self) -> String {
        match *self {
            Param::Scalar(x) => format!("lambda = {x}"),
            Param::Angle(x) => format!("theta = {x}"),
            Param::Point(x, y) => format!("(x, y) = ({x}, {y})"),
        }
    }
}

/// Scalar profile `a(t) = -a_minus * tanh^2(kappa t)`, with `kappa` chosen so
/// that `a(+-t0) = -a_plus`. Then `a(0) = 0`, `a <= 0` and
/// `-a_minus <= a(t) <= -a_plus` whenever `|t| >= t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarProfile {
    pub a_plus: f64,
    pub a_minus: f64,
    pub t0: f64,
}

impl Default for ScalarProfile {
    fn default() -> Self {
        ScalarProfile {
            a_plus: 0.5,
            a_minus: 1.0,
            t0: 1.0,
        }
    }
}

impl ScalarProfile {
    pub fn new(a_plus: f64, a_minus: f64, t0: f64) -> Result<Self> {
        let p = ScalarProfile {
            a_plus,
            a_minus,
            t0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_plus > 0.0 && self.a_plus.is_finite()) {
            return Err(Error::validation(
                "family.profile.a_plus",
                "must be positive",
            ));
        }
        if !(self.a_minus > self.a_plus && self.a_minus.is_finite()) {
            return Err(Error::validation(
                "family.profile.a_minus",
                "must be finite and strictly larger than a_plus",
            ));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::validation("family.profile.t0", "must be positive"));
        }
        Ok(())
    }

    fn kappa(&self) -> f64 {
        (self.a_plus / self.a_minus).sqrt().atanh() / self.t0
    }

    pub fn value(&self, t: f64) -> f64 {
        let th = (self.kappa() * t).tanh();
        -self.a_minus * th * th
    }

    fn antiderivative(&self, t: f64) -> f64 {
        let k = self.kappa();
        -self.a_minus * (t - (k * t).tanh() / k)
    }

    /// `int_s^t a(r) dr` in closed form.
    pub fn integral(&self, s: f64, t: f64) -> f64 {
        self.antiderivative(t) - self.antiderivative(s)
    }
}

/// Angle map `theta(lambda)` feeding the reflection matrix maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleMap {
    /// `theta = offset + scale * lambda` for scalar or circle parameters.
    Linear { offset: f64, scale: f64 },
    /// `theta(x, y) = pi (1 - x^2 - y^2)` on the unit disc.
    RadialBump,
    /// `theta(x, y) = theta1(x) theta2(y)` with `theta1(x) = pi (x + 1) / 2`
    /// and `theta2(y) = 1 - y^2 / 2` on the unit disc.
    Product,
}

impl AngleMap {
    pub fn identity() -> Self {
        AngleMap::Linear {
            offset: 0.0,
            scale: 1.0,
        }
    }

    pub fn theta(&self, p: &Param) -> Result<f64> {
        const DISC_SLACK: f64 = 1e-9;
        match (*self, *p) {
            (AngleMap::Linear { offset, scale }, Param::Scalar(x) | Param::Angle(x)) => {
                Ok(offset + scale * x)
            }
            (AngleMap::RadialBump, Param::Point(x, y)) if x * x + y * y <= 1.0 + DISC_SLACK => {
                Ok(PI * (1.0 - x * x - y * y))
            }
            (AngleMap::Product, Param::Point(x, y)) if x * x + y * y <= 1.0 + DISC_SLACK => {
                Ok(PI * (x + 1.0) / 2.0 * (1.0 - y * y / 2.0))
            }
            _ => Err(Error::OutOfDomain(p.describe())),
        }
    }

    pub(crate) fn accepts_points(&self) -> bool {
        !matches!(self, AngleMap::Linear { .. })
    }
}

/// Closed-form matrix maps `theta -> B` (or `C`).
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixMap {
    Constant(Matrix),
    /// `((cos, sin), (sin, -cos))`.
    Reflection,
    /// `((cos, -sin), (-sin, -cos))`.
    ConjugateReflection,
}

impl MatrixMap {
    pub fn dim(&self) -> usize {
        match self {
            MatrixMap::Constant(m) => m.nrows(),
            _ => 2,
        }
    }

    pub fn at(&self, theta: f64) -> Matrix {
        let (s, c) = theta.sin_cos();
        match self {
            MatrixMap::Constant(m) => m.clone(),
            MatrixMap::Reflection => Matrix::from_row_slice(2, 2, &[c, s, s, -c]),
            MatrixMap::ConjugateReflection => Matrix::from_row_slice(2, 2, &[c, -s, -s, -c]),
        }
    }
}

/// Second-order scalar equations `u'' + p u' + q u = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecondOrderCoefficients {
    /// `p = 0`, `q(lambda, t) = strength * sech^2(t) - lambda^2`.
    PoschlTeller { strength: f64 },
}

impl SecondOrderCoefficients {
    fn lambda(p: &Param) -> Result<f64> {
        match *p {
            Param::Scalar(l) if l.is_finite() => Ok(l),
            _ => Err(Error::OutOfDomain(p.describe())),
        }
    }

    pub fn p(&self, _lambda: f64, _t: f64) -> f64 {
        match self {
            SecondOrderCoefficients::PoschlTeller { .. } => 0.0,
        }
    }

    pub fn q(&self, lambda: f64, t: f64) -> f64 {
        match *self {
            SecondOrderCoefficients::PoschlTeller { strength } => {
                let sech = 1.0 / t.cosh();
                strength * sech * sech - lambda * lambda
            }
        }
    }

    /// `(p^-, q^-, p^+, q^+)`.
    pub fn limits(&self, lambda: f64) -> (f64, f64, f64, f64) {
        match self {
            SecondOrderCoefficients::PoschlTeller { .. } => {
                (0.0, -lambda * lambda, 0.0, -lambda * lambda)
            }
        }
    }

    fn companion(p: f64, q: f64) -> Matrix {
        Matrix::from_row_slice(2, 2, &[0.0, 1.0, -q, -p])
    }
}

/// Compactly supported perturbation `Q(t) = w(t) M` with a smooth bump
/// `w` of height one on `(center - half_width, center + half_width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub matrix: Matrix,
    pub center: f64,
    pub half_width: f64,
}

impl Perturbation {
    pub fn weight(&self, t: f64) -> f64 {
        let u = (t - self.center) / self.half_width;
        if u.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - u * u)).exp()
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    /// `sup_t |Q(t)|` in the spectral norm.
    pub fn sup_norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }

    /// Random perturbation with sup-norm exactly `amplitude` and support
    /// inside `[-reach, reach]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, amplitude: f64, reach: f64) -> Self {
        let mut m = Matrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        let n = spectral_norm(&m);
        if n > 0.0 {
            m *= amplitude / n;
        }
        let half_width = rng.random_range(0.2 * reach..0.5 * reach);
        let center = rng.random_range(-(reach - half_width)..(reach - half_width));
        Perturbation {
            matrix: m,
            center,
            half_width,
        }
    }
}

type MatrixFn = dyn Fn(&Param, f64) -> Matrix + Send + Sync;
type LimitFn = dyn Fn(&Param) -> (Matrix, Matrix) + Send + Sync;

/// Family given by callables, for programmatic use.
#[derive(Clone)]
pub struct TabulatedFamily {
    pub dim: usize,
    pub matrix: Arc<MatrixFn>,
    /// `(A^-, A^+)`.
    pub limits: Arc<LimitFn>,
    /// Time after which `A(t)` is treated as asymptotic for constant estimates.
    pub onset: f64,
}

impl fmt::Debug for TabulatedFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TabulatedFamily")
            .field("dim", &self.dim)
            .field("onset", &self.onset)
            .finish_non_exhaustive()
    }
}

impl TabulatedFamily {
    /// Autonomous family `A_lambda(t) = A` for all `lambda`.
    pub fn constant(a: Matrix) -> Self {
        let dim = a.nrows();
        let a2 = a.clone();
        TabulatedFamily {
            dim,
            matrix: Arc::new(move |_, _| a.clone()),
            limits: Arc::new(move |_| (a2.clone(), a2.clone())),
            onset: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum CoefficientFamily {
    /// `A(t) = a(t) B_lambda` for `t <= 0` and `a(t) C_lambda` for `t >= 0`.
    PiecewiseScalar {
        profile: ScalarProfile,
        b: MatrixMap,
        c: MatrixMap,
        angle: AngleMap,
    },
    /// Companion system of `u'' + p u' + q u = 0`.
    SecondOrder {
        coefficients: SecondOrderCoefficients,
        onset: f64,
    },
    AsymptoticallyHyperbolic(TabulatedFamily),
    Perturbed {
        base: Box<CoefficientFamily>,
        perturbation: Perturbation,
    },
}

/// Seeds for the shooting: the stable subspace at `+infinity` and the
/// unstable subspace at `-infinity`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticSeeds {
    pub stable_plus: Frame,
    pub unstable_minus: Frame,
}

/// `t -> A(t)` for one fixed parameter.
pub trait LinearSystem: Sync {
    fn dim(&self) -> usize;
    fn matrix_into(&self, t: f64, out: &mut Matrix);
    /// Times where `A` may fail to be smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn matrix(&self, t: f64) -> Matrix {
        let d = self.dim();
        let mut m = Matrix::zeros(d, d);
        self.matrix_into(t, &mut m);
        m
    }
}

/// A coefficient family frozen at one parameter value.
#[derive(Clone)]
pub enum FrozenSystem {
    Piecewise {
        profile: ScalarProfile,
        b: Matrix,
        c: Matrix,
    },
    SecondOrder {
        coefficients: SecondOrderCoefficients,
        lambda: f64,
    },
    Tabulated {
        dim: usize,
        matrix: Arc<MatrixFn>,
        param: Param,
    },
    Perturbed {
        base: Box<FrozenSystem>,
        perturbation: Perturbation,
    },
}

impl LinearSystem for FrozenSystem {
    fn dim(&self) -> usize {
        match self {
            FrozenSystem::Piecewise { b, .. } => b.nrows(),
            FrozenSystem::SecondOrder { .. } => 2,
            FrozenSystem::Tabulated { dim, .. } => *dim,
            FrozenSystem::Perturbed { base, .. } => base.dim(),
        }
    }

    fn matrix_into(&self, t: f64, out: &mut Matrix) {
        match self {
            FrozenSystem::Piecewise { profile, b, c } => {
                let a = profile.value(t);
                let m = if t <= 0.0 { b } else { c };
                out.zip_apply(m, |o, x| *o = a * x);
            }
            FrozenSystem::SecondOrder {
                coefficients,
                lambda,
            } => {
                out.copy_from(&SecondOrderCoefficients::companion(
                    coefficients.p(*lambda, t),
                    coefficients.q(*lambda, t),
                ));
            }
            FrozenSystem::Tabulated { matrix, param, .. } => out.copy_from(&matrix(param, t)),
            FrozenSystem::Perturbed { base, perturbation } => {
                base.matrix_into(t, out);
                let w = perturbation.weight(t);
                if w != 0.0 {
                    *out += &perturbation.matrix * w;
                }
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            FrozenSystem::Piecewise { .. } => vec![0.0],
            FrozenSystem::Perturbed { base, perturbation } => {
                let mut b = base.breakpoints();
                let (lo, hi) = perturbation.support();
                b.extend([lo, hi]);
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            }
            _ => Vec::new(),
        }
    }
}

/// Default hyperbolicity tolerance for the asymptotic splittings.
pub const HYPERBOLICITY_TOL: f64 = 1e-8;

impl CoefficientFamily {
    pub fn dim(&self) -> usize {
        match self {
            CoefficientFamily::PiecewiseScalar { b, .. } => b.dim(),
            CoefficientFamily::SecondOrder { .. } => 2,
            CoefficientFamily::AsymptoticallyHyperbolic(t) => t.dim,
            CoefficientFamily::Perturbed { base, .. } => base.dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CoefficientFamily::PiecewiseScalar { .. } => "piecewise_scalar",
            CoefficientFamily::SecondOrder { .. } => "second_order",
            CoefficientFamily::AsymptoticallyHyperbolic(_) => "asymptotically_hyperbolic_tabulated",
            CoefficientFamily::Perturbed { .. } => "perturbed",
        }
    }

    /// Freeze the family at `p`, checking that `p` lies in its domain.
    pub fn system(&self, p: &Param) -> Result<FrozenSystem> {
        match self {
            CoefficientFamily::PiecewiseScalar {
                profile,
                b,
                c,
                angle,
            } => {
                let theta = angle.theta(p)?;
                Ok(FrozenSystem::Piecewise {
                    profile: *profile,
                    b: b.at(theta),
                    c: c.at(theta),
                })
            }
            CoefficientFamily::SecondOrder { coefficients, .. } => Ok(FrozenSystem::SecondOrder {
                coefficients: *coefficients,
                lambda: SecondOrderCoefficients::lambda(p)?,
            }),
            CoefficientFamily::AsymptoticallyHyperbolic(t) => Ok(FrozenSystem::Tabulated {
                dim: t.dim,
                matrix: t.matrix.clone(),
                param: *p,
            }),
            CoefficientFamily::Perturbed { base, perturbation } => Ok(FrozenSystem::Perturbed {
                base: Box::new(base.system(p)?),
                perturbation: perturbation.clone(),
            }),
        }
    }

    pub fn eval_coefficient(&self, p: &Param, t: f64) -> Result<Matrix> {
        Ok(self.system(p)?.matrix(t))
    }

    /// `(B_lambda, C_lambda)` of a piecewise family.
    pub fn piecewise_matrices(&self, p: &Param) -> Option<Result<(Matrix, Matrix)>> {
        match self {
            CoefficientFamily::PiecewiseScalar { b, c, angle, .. } => {
                Some(angle.theta(p).map(|theta| (b.at(theta), c.at(theta))))
            }
            _ => None,
        }
    }

    /// Limit matrices `(A^-, A^+)` for the kinds that have them.
    pub fn limit_matrices(&self, p: &Param) -> Option<Result<(Matrix, Matrix)>> {
        match self {
            CoefficientFamily::SecondOrder { coefficients, .. } => {
                Some(SecondOrderCoefficients::lambda(p).map(|l| {
                    let (pm, qm, pp, qp) = coefficients.limits(l);
                    (
                        SecondOrderCoefficients::companion(pm, qm),
                        SecondOrderCoefficients::companion(pp, qp),
                    )
                }))
            }
            CoefficientFamily::AsymptoticallyHyperbolic(t) => Some(Ok((t.limits)(p))),
            CoefficientFamily::Perturbed { base, .. } => base.limit_matrices(p),
            CoefficientFamily::PiecewiseScalar { .. } => None,
        }
    }

    /// Time after which the coefficients are asymptotic (piecewise: `t0`).
    pub fn onset(&self) -> f64 {
        match self {
            CoefficientFamily::PiecewiseScalar { profile, .. } => profile.t0,
            CoefficientFamily::SecondOrder { onset, .. } => *onset,
            CoefficientFamily::AsymptoticallyHyperbolic(t) => t.onset,
            CoefficientFamily::Perturbed { base, perturbation } => {
                let (lo, hi) = perturbation.support();
                base.onset().max(lo.abs()).max(hi.abs())
            }
        }
    }

    /// Largest `|t|` where a perturbation is active (zero if none).
    pub fn perturbation_reach(&self) -> f64 {
        match self {
            CoefficientFamily::Perturbed { base, perturbation } => {
                let (lo, hi) = perturbation.support();
                base.perturbation_reach().max(lo.abs()).max(hi.abs())
            }
            _ => 0.0,
        }
    }

    /// Stable subspace at `+infinity` and unstable subspace at `-infinity`.
    ///
    /// Piecewise families have `a < 0` asymptotically, so the stable seed is
    /// the positive eigenspace of `C_lambda` and the unstable seed the negative
    /// eigenspace of `B_lambda`.
    pub fn asymptotic_splitting_data(&self, p: &Param) -> Result<AsymptoticSeeds> {
        self.asymptotic_splitting_data_with(p, HYPERBOLICITY_TOL)
    }

    pub fn asymptotic_splitting_data_with(
        &self,
        p: &Param,
        hyperbolicity_tol: f64,
    ) -> Result<AsymptoticSeeds> {
        match self {
            CoefficientFamily::PiecewiseScalar { .. } => {
                let (b, c) = self.piecewise_matrices(p).expect("piecewise")?;
                let eb = symmetric_hyperbolic(&b, hyperbolicity_tol)?;
                let ec = symmetric_hyperbolic(&c, hyperbolicity_tol)?;
                Ok(AsymptoticSeeds {
                    stable_plus: ec.positive_frame(),
                    unstable_minus: eb.negative_frame(),
                })
            }
            CoefficientFamily::Perturbed { base, .. } => {
                base.asymptotic_splitting_data_with(p, hyperbolicity_tol)
            }
            _ => {
                let (minus, plus) = self.limit_matrices(p).expect("limit kind")?;
                let sp = matrix_sign_projector(&plus, hyperbolicity_tol)?;
                let sm = matrix_sign_projector(&minus, hyperbolicity_tol)?;
                Ok(AsymptoticSeeds {
                    stable_plus: sp.stable,
                    unstable_minus: sm.unstable,
                })
            }
        }
    }

    /// Stable bundles of the asymptotic systems `(E^s at +infinity, E^s at -infinity)`.
    pub fn asymptotic_stable_bundles(&self, p: &Param) -> Result<(Frame, Frame)> {
        match self {
            CoefficientFamily::PiecewiseScalar { .. } => {
                let (b, c) = self.piecewise_matrices(p).expect("piecewise")?;
                let eb = symmetric_hyperbolic(&b, HYPERBOLICITY_TOL)?;
                let ec = symmetric_hyperbolic(&c, HYPERBOLICITY_TOL)?;
                Ok((ec.positive_frame(), eb.positive_frame()))
            }
            CoefficientFamily::Perturbed { base, .. } => base.asymptotic_stable_bundles(p),
            _ => {
                let (minus, plus) = self.limit_matrices(p).expect("limit kind")?;
                let sp = matrix_sign_projector(&plus, HYPERBOLICITY_TOL)?;
                let sm = matrix_sign_projector(&minus, HYPERBOLICITY_TOL)?;
                Ok((sp.stable, sm.stable))
            }
        }
    }

    /// Seed vectors at `-T` (unstable) and `+T` (stable) whose transports to
    /// `t = 0` carry the reference normalisation of the built-in families:
    /// unit eigenvectors at `t = 0` for piecewise families, and the solutions
    /// `u_-(t) ~ (lambda + 1) e^{lambda t}`, `u_+(t) ~ (lambda + 1) e^{-lambda t}`
    /// for the Pöschl–Teller equation. Only defined for `d = 2` with
    /// one-dimensional subspaces.
    pub fn reference_seed_vectors(
        &self,
        p: &Param,
        truncation: f64,
    ) -> Option<Result<(Vector, Vector)>> {
        match self {
            CoefficientFamily::PiecewiseScalar { profile, .. } => {
                if self.dim() != 2 {
                    return None;
                }
                let mats = self.piecewise_matrices(p)?;
                Some(mats.and_then(|(b, c)| {
                    let eb = symmetric_hyperbolic(&b, HYPERBOLICITY_TOL)?;
                    let ec = symmetric_hyperbolic(&c, HYPERBOLICITY_TOL)?;
                    if eb.stable_count != 1 || ec.stable_count != 1 {
                        return Err(Error::Unsupported(
                            "reference normalisation needs rank-one subspaces".into(),
                        ));
                    }
                    let mu_b = eb.eigenvalues[0];
                    let mu_c = ec.eigenvalues[1];
                    let u = eb.basis.column(0) * (mu_b * profile.integral(0.0, -truncation)).exp();
                    let s = ec.basis.column(1) * (mu_c * profile.integral(0.0, truncation)).exp();
                    Ok((u, s))
                }))
            }
            CoefficientFamily::SecondOrder {
                coefficients: SecondOrderCoefficients::PoschlTeller { strength },
                ..
            } => {
                if *strength != 2.0 {
                    return None;
                }
                Some(SecondOrderCoefficients::lambda(p).map(|l| {
                    let amp = (l + 1.0) * (-l.abs() * truncation).exp();
                    (
                        Vector::from_row_slice(&[amp, amp * l]),
                        Vector::from_row_slice(&[amp, -amp * l]),
                    )
                }))
            }
            CoefficientFamily::Perturbed { base, .. } => base.reference_seed_vectors(p, truncation),
            CoefficientFamily::AsymptoticallyHyperbolic(_) => None,
        }
    }
}

fn symmetric_hyperbolic(m: &Matrix, tol: f64) -> Result<crate::linalg::SpectralDecomposition> {
    let e = sym_eig(m)?;
    if let Some(mu) = e.eigenvalues.iter().find(|mu| mu.abs() <= tol) {
        return Err(Error::NonHyperbolic { real_part: *mu });
    }
    Ok(crate::linalg::SpectralDecomposition {
        basis: canonicalize_columns(&e.basis),
        ..e
    })
}
