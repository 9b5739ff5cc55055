//! Hyperbolic splittings, dichotomy constants and their verification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{range_frame, smallest_singular_value, spectral_norm, sym_eig, Frame, Matrix};
use crate::model::family::{CoefficientFamily, LinearSystem, Param, HYPERBOLICITY_TOL};
use crate::propagation::transition_system;

const SIGN_MAX_ITER: usize = 100;
const SIGN_TOL: f64 = 1e-12;
/// Nonzero singular values of a projector are at least one.
const PROJECTOR_RANK_TOL: f64 = 0.5;

/// Spectral splitting of a hyperbolic matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicSplitting {
    /// Projector onto the eigenspace with positive real parts, along the rest.
    pub projector: Matrix,
    /// Orthonormal basis of `N(P)` (negative real parts).
    pub stable: Frame,
    /// Orthonormal basis of `R(P)`.
    pub unstable: Frame,
    /// `min |Re mu|`.
    pub gap: f64,
}

/// Spectral gap `min |Re mu|` of a square matrix.
pub fn spectral_gap(a: &Matrix) -> f64 {
    if a.is_empty() {
        return f64::INFINITY;
    }
    a.complex_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, z| m.min(z.re.abs()))
}

/// `P = (I + sign(A)) / 2` by the determinant-scaled Newton iteration
/// `S <- (c S + (c S)^{-1}) / 2`.
pub fn matrix_sign_projector(a: &Matrix, tol: f64) -> Result<HyperbolicSplitting> {
    let d = a.nrows();
    if d != a.ncols() {
        return Err(Error::Contract(format!(
            "expected a square matrix, got {}x{}",
            d,
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract("matrix has non-finite entries".into()));
    }
    let gap = spectral_gap(a);
    if gap <= 10.0 * tol {
        let ev = a.complex_eigenvalues();
        let re = ev
            .iter()
            .map(|z| z.re)
            .min_by(|x, y| x.abs().total_cmp(&y.abs()))
            .unwrap_or(0.0);
        return Err(Error::NonHyperbolic { real_part: re });
    }

    let ident = Matrix::identity(d, d);
    let mut s = a.clone();
    let mut converged = false;
    for _ in 0..SIGN_MAX_ITER {
        let lu = s.clone().lu();
        let log_det: f64 = lu.u().diagonal().iter().map(|x| x.abs().ln()).sum();
        let inv = lu.try_inverse().ok_or(Error::HyperbolicityLoss {
            residual: f64::INFINITY,
        })?;
        let c = (-log_det / d as f64).exp();
        let next = (&s * c + inv / c) * 0.5;
        let delta = (&next - &s).norm();
        let size = next.norm();
        s = next;
        if !delta.is_finite() {
            break;
        }
        if delta <= SIGN_TOL * size {
            converged = true;
            break;
        }
    }
    let residual = (&s * &s - &ident).norm();
    if !converged || !(residual <= 1e-8 * d as f64) {
        return Err(Error::HyperbolicityLoss { residual });
    }
    let projector = (&ident + &s) * 0.5;
    let unstable = range_frame(&projector, PROJECTOR_RANK_TOL);
    let stable = range_frame(&(&ident - &projector), PROJECTOR_RANK_TOL);
    if stable.rank() + unstable.rank() != d {
        return Err(Error::HyperbolicityLoss { residual });
    }
    Ok(HyperbolicSplitting {
        projector,
        stable,
        unstable,
        gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// `K = e^{mu a+ t0}`, `alpha = mu a+` for piecewise scalar families.
    ClosedForm,
    /// Conditioning of the splitting basis; an estimate, not a proven bound.
    EigenbasisConditioning,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomyEstimate {
    pub k: f64,
    pub alpha: f64,
    pub provenance: Provenance,
}

impl DichotomyEstimate {
    pub fn roughness_bound(&self) -> f64 {
        self.alpha / (4.0 * self.k * self.k)
    }
}

/// `alpha / (4 K^2)`: perturbations with smaller sup-norm keep the dichotomy.
pub fn roughness_bound(k: f64, alpha: f64) -> Result<f64> {
    if !(k >= 1.0 && alpha > 0.0 && k.is_finite() && alpha.is_finite()) {
        return Err(Error::Contract(format!(
            "need K >= 1 and alpha > 0, got K = {k}, alpha = {alpha}"
        )));
    }
    Ok(alpha / (4.0 * k * k))
}

/// Dichotomy constants on `(-inf, 0]` and `[0, inf)`.
pub fn dichotomy_constants(
    fam: &CoefficientFamily,
    p: &Param,
) -> Result<(DichotomyEstimate, DichotomyEstimate)> {
    match fam {
        CoefficientFamily::PiecewiseScalar { profile, .. } => {
            let (b, c) = fam.piecewise_matrices(p).expect("piecewise family")?;
            let closed_form = |m: &Matrix| -> Result<DichotomyEstimate> {
                let mu = sym_eig(m)?.smallest_magnitude();
                if mu <= HYPERBOLICITY_TOL {
                    return Err(Error::NonHyperbolic { real_part: mu });
                }
                Ok(DichotomyEstimate {
                    k: (mu * profile.a_plus * profile.t0).exp(),
                    alpha: mu * profile.a_plus,
                    provenance: Provenance::ClosedForm,
                })
            };
            Ok((closed_form(&b)?, closed_form(&c)?))
        }
        CoefficientFamily::Perturbed { .. } => Err(Error::Unsupported(
            "dichotomy constants of perturbed families; use the base family and the roughness bound".into(),
        )),
        _ => {
            let (minus, plus) = fam.limit_matrices(p).expect("limit kind")?;
            let onset = fam.onset();
            let est = |m: &Matrix| -> Result<DichotomyEstimate> {
                let split = matrix_sign_projector(m, HYPERBOLICITY_TOL)?;
                let basis = Matrix::from_columns(
                    &(0..split.stable.rank())
                        .map(|i| split.stable.column(i))
                        .chain((0..split.unstable.rank()).map(|i| split.unstable.column(i)))
                        .collect::<Vec<_>>(),
                );
                let cond = spectral_norm(&basis) / smallest_singular_value(&basis);
                Ok(DichotomyEstimate {
                    k: (cond * (split.gap * onset).exp()).max(1.0),
                    alpha: split.gap,
                    provenance: Provenance::EigenbasisConditioning,
                })
            };
            Ok((est(&minus)?, est(&plus)?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfLine {
    /// `(-inf, 0]`.
    Minus,
    /// `[0, inf)`.
    Plus,
}

impl HalfLine {
    fn contains(self, t: f64) -> bool {
        match self {
            HalfLine::Minus => t <= 0.0,
            HalfLine::Plus => t >= 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    /// Number of grid pairs `s < t` checked.
    pub pairs: usize,
    /// `max ||Phi(t,s) P(s)|| e^{alpha (t-s)} / K - 1`.
    pub max_violation: f64,
    /// `max ||Phi(s,t) (I - P(t))|| e^{alpha (t-s)} / K - 1`.
    pub max_mirror_violation: f64,
    /// `max ||Phi(t,s) P(s) - P(t) Phi(t,s)|| / max(1, ||Phi(t,s)||)`.
    pub invariance_residual: f64,
}

impl DichotomyReport {
    pub fn verified(&self, slack: f64) -> bool {
        self.max_violation <= slack
            && self.max_mirror_violation <= slack
            && self.invariance_residual <= 1e-6
    }
}

/// Check the dichotomy inequalities for projector `P` given at `t = 0` on all
/// grid pairs `s < t` inside the half-line. Grid points outside it are ignored.
#[allow(clippy::too_many_arguments)]
pub fn verify_dichotomy(
    fam: &CoefficientFamily,
    p: &Param,
    half_line: HalfLine,
    projector: &Matrix,
    k: f64,
    alpha: f64,
    grid: &[f64],
    tol: f64,
) -> Result<DichotomyReport> {
    let sys = fam.system(p)?;
    verify_dichotomy_system(&sys, half_line, projector, k, alpha, grid, tol)
}

pub fn verify_dichotomy_system<S: LinearSystem + ?Sized>(
    sys: &S,
    half_line: HalfLine,
    projector: &Matrix,
    k: f64,
    alpha: f64,
    grid: &[f64],
    tol: f64,
) -> Result<DichotomyReport> {
    let d = sys.dim();
    if projector.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: projector.nrows(),
        });
    }
    let mut pts: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&t| t.is_finite() && half_line.contains(t))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let ident = Matrix::identity(d, d);
    // P(t) = Phi(t,0) P Phi(0,t)
    let moved: Vec<Matrix> = pts
        .iter()
        .map(|&t| {
            let fwd = transition_system(sys, t, 0.0, tol)?;
            let back = transition_system(sys, 0.0, t, tol)?;
            Ok(&fwd * projector * back)
        })
        .collect::<Result<_>>()?;

    let mut report = DichotomyReport {
        pairs: 0,
        max_violation: f64::NEG_INFINITY,
        max_mirror_violation: f64::NEG_INFINITY,
        invariance_residual: 0.0,
    };
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (s, t) = (pts[i], pts[j]);
            let phi_ts = transition_system(sys, t, s, tol)?;
            let phi_st = transition_system(sys, s, t, tol)?;
            let weight = (alpha * (t - s)).exp() / k;
            let decay = spectral_norm(&(&phi_ts * &moved[i])) * weight - 1.0;
            let mirror = spectral_norm(&(&phi_st * (&ident - &moved[j]))) * weight - 1.0;
            let inv = (&phi_ts * &moved[i] - &moved[j] * &phi_ts).norm()
                / spectral_norm(&phi_ts).max(1.0);
            report.pairs += 1;
            report.max_violation = report.max_violation.max(decay);
            report.max_mirror_violation = report.max_mirror_violation.max(mirror);
            report.invariance_residual = report.invariance_residual.max(inv);
        }
    }
    Ok(report)
}
