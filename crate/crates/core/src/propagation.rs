//! Transition matrices and frame transport for `x' = A(t) x`.
//!
//! Integration uses the Dormand–Prince 5(4) pair with error control
//! `atol = tol / 10`, `rtol = tol`, restarted at every breakpoint of `A`.
//! Backward integration just runs with negative steps.

use crate::error::{Error, Result};
use crate::linalg::{gram_schmidt, Frame, Matrix};
use crate::model::family::{CoefficientFamily, LinearSystem, Param};

/// Hard cap on accepted plus rejected steps per call.
pub const MAX_STEPS: usize = 500_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    /// Orthonormal frame spanning `Phi(t, s) span(F)`.
    pub frame: Frame,
    /// `sum log R_ii` over all re-orthonormalisations.
    pub log_growth: f64,
    pub steps: usize,
    pub reorthonormalizations: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Fifth- minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<'a, S: ?Sized> {
    sys: &'a S,
    a: Matrix,
    atol: f64,
    rtol: f64,
    steps: usize,
}

impl<S: LinearSystem + ?Sized> Stepper<'_, S> {
    fn rhs(&mut self, t: f64, y: &Matrix) -> Matrix {
        self.sys.matrix_into(t, &mut self.a);
        &self.a * y
    }

    fn scaled_norm(&self, e: &Matrix, y0: &Matrix, y1: &Matrix) -> f64 {
        let mut m: f64 = 0.0;
        for ((ei, a), b) in e.iter().zip(y0.iter()).zip(y1.iter()) {
            let sc = self.atol + self.rtol * a.abs().max(b.abs());
            m = m.max(ei.abs() / sc);
        }
        m
    }

    fn initial_step(&mut self, t0: f64, y0: &Matrix, f0: &Matrix, span: f64) -> f64 {
        let (atol, rtol) = (self.atol, self.rtol);
        let sc = |y: &Matrix, v: &Matrix| -> f64 {
            let n = y.len().max(1) as f64;
            (y.iter()
                .zip(v.iter())
                .map(|(yi, vi)| {
                    let s = atol + rtol * yi.abs();
                    (vi / s).powi(2)
                })
                .sum::<f64>()
                / n)
                .sqrt()
        };
        let d0 = sc(y0, y0);
        let d1 = sc(y0, f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span);
        let y1 = y0 + f0 * h0;
        let f1 = self.rhs(t0 + h0, &y1);
        let d2 = sc(y0, &(&f1 - f0)) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrate from `t0` to `t1` (either direction) on a smooth segment.
    fn segment(&mut self, t0: f64, t1: f64, mut y: Matrix) -> Result<Matrix> {
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let span = (t1 - t0).abs();
        if span == 0.0 {
            return Ok(y);
        }
        let mut t = t0;
        let mut k1 = self.rhs(t, &y);
        let mut h = self.initial_step(t0, &y, &k1, span);
        loop {
            let remaining = (t1 - t).abs();
            if remaining <= 4.0 * f64::EPSILON * t1.abs().max(1.0) {
                return Ok(y);
            }
            let last = h >= remaining;
            let hs = dir * if last { remaining } else { h };
            if h < 16.0 * f64::EPSILON * t.abs().max(1.0) || self.steps >= MAX_STEPS {
                return Err(Error::Stiffness { t, step: h });
            }
            self.steps += 1;

            let y2 = &y + &k1 * (hs * A2[0]);
            let k2 = self.rhs(t + C[1] * hs, &y2);
            let y3 = &y + (&k1 * A3[0] + &k2 * A3[1]) * hs;
            let k3 = self.rhs(t + C[2] * hs, &y3);
            let y4 = &y + (&k1 * A4[0] + &k2 * A4[1] + &k3 * A4[2]) * hs;
            let k4 = self.rhs(t + C[3] * hs, &y4);
            let y5 = &y + (&k1 * A5[0] + &k2 * A5[1] + &k3 * A5[2] + &k4 * A5[3]) * hs;
            let k5 = self.rhs(t + C[4] * hs, &y5);
            let y6 =
                &y + (&k1 * A6[0] + &k2 * A6[1] + &k3 * A6[2] + &k4 * A6[3] + &k5 * A6[4]) * hs;
            let k6 = self.rhs(t + hs, &y6);
            let ynew = &y + (&k1 * B[0] + &k3 * B[2] + &k4 * B[3] + &k5 * B[4] + &k6 * B[5]) * hs;
            let tnew = if last { t1 } else { t + hs };
            let k7 = self.rhs(tnew, &ynew);
            let err =
                (&k1 * E[0] + &k3 * E[2] + &k4 * E[3] + &k5 * E[4] + &k6 * E[5] + &k7 * E[6]) * hs;
            let en = self.scaled_norm(&err, &y, &ynew);

            if en <= 1.0 {
                t = tnew;
                y = ynew;
                k1 = k7;
                if last {
                    return Ok(y);
                }
                let fac = if en == 0.0 {
                    5.0
                } else {
                    (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
                };
                h *= fac;
            } else {
                h *= (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
    }

    /// Integrate across breakpoints.
    fn run(&mut self, s: f64, t: f64, y: Matrix) -> Result<Matrix> {
        let (lo, hi) = (s.min(t), s.max(t));
        let mut cuts: Vec<f64> = self
            .sys
            .breakpoints()
            .into_iter()
            .filter(|&b| b > lo && b < hi)
            .collect();
        if t < s {
            cuts.reverse();
        }
        let mut y = y;
        let mut from = s;
        for b in cuts.into_iter().chain(std::iter::once(t)) {
            y = self.segment(from, b, y)?;
            from = b;
        }
        Ok(y)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Contract(format!(
            "ODE tolerance must be positive, got {tol}"
        )));
    }
    Ok(())
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if !(s.is_finite() && t.is_finite()) {
        return Err(Error::Contract(format!(
            "times must be finite, got s = {s}, t = {t}"
        )));
    }
    Ok(())
}

/// Solve `Y' = A(t) Y` from `Y(s) = y0` to time `t`. Returns `Y(t)` and the step count.
pub fn propagate<S: LinearSystem + ?Sized>(
    sys: &S,
    y0: &Matrix,
    s: f64,
    t: f64,
    tol: f64,
) -> Result<(Matrix, usize)> {
    check_tol(tol)?;
    check_times(s, t)?;
    let d = sys.dim();
    if y0.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: y0.nrows(),
        });
    }
    let mut st = Stepper {
        sys,
        a: Matrix::zeros(d, d),
        atol: tol / 10.0,
        rtol: tol,
        steps: 0,
    };
    let y = st.run(s, t, y0.clone())?;
    Ok((y, st.steps))
}

/// `Phi(t, s)` of a frozen system.
pub fn transition_system<S: LinearSystem + ?Sized>(
    sys: &S,
    t: f64,
    s: f64,
    tol: f64,
) -> Result<Matrix> {
    let d = sys.dim();
    if t == s {
        check_times(s, t)?;
        return Ok(Matrix::identity(d, d));
    }
    propagate(sys, &Matrix::identity(d, d), s, t, tol).map(|(m, _)| m)
}

/// `Phi_lambda(t, s)`.
pub fn transition(fam: &CoefficientFamily, p: &Param, t: f64, s: f64, tol: f64) -> Result<Matrix> {
    transition_system(&fam.system(p)?, t, s, tol)
}

/// Transport an orthonormal frame from `s` to `t`, re-orthonormalising every
/// `reortho_interval` time units.
pub fn transport_frame_system<S: LinearSystem + ?Sized>(
    sys: &S,
    frame: &Frame,
    s: f64,
    t: f64,
    reortho_interval: f64,
    tol: f64,
) -> Result<TransportResult> {
    check_tol(tol)?;
    check_times(s, t)?;
    if !(reortho_interval > 0.0 && reortho_interval.is_finite()) {
        return Err(Error::Contract(format!(
            "re-orthonormalisation interval must be positive, got {reortho_interval}"
        )));
    }
    let d = sys.dim();
    if frame.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: frame.dim(),
        });
    }
    let mut out = TransportResult {
        frame: frame.clone(),
        log_growth: 0.0,
        steps: 0,
        reorthonormalizations: 0,
    };
    if s == t || frame.rank() == 0 {
        return Ok(out);
    }
    let dir = if t > s { 1.0 } else { -1.0 };
    let mut st = Stepper {
        sys,
        a: Matrix::zeros(d, d),
        atol: tol / 10.0,
        rtol: tol,
        steps: 0,
    };
    let mut y = frame.matrix().clone();
    let mut from = s;
    loop {
        let to = if (t - from).abs() <= reortho_interval * (1.0 + 1e-12) {
            t
        } else {
            from + dir * reortho_interval
        };
        y = st.run(from, to, y)?;
        let scale = y.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        let (q, r) = gram_schmidt(&y, 1e-13 * scale)
            .map_err(|diagonal| Error::RankCollapse { t: to, diagonal })?;
        out.log_growth += r.diagonal().iter().map(|x| x.ln()).sum::<f64>();
        out.reorthonormalizations += 1;
        y = q;
        from = to;
        if to == t {
            break;
        }
    }
    if !out.log_growth.is_finite() {
        return Err(Error::RankCollapse { t, diagonal: 0.0 });
    }
    out.frame = Frame::new(y);
    out.steps = st.steps;
    Ok(out)
}

/// Transport a frame along `x' = A_lambda(t) x`.
pub fn transport_frame(
    fam: &CoefficientFamily,
    p: &Param,
    frame: &Frame,
    s: f64,
    t: f64,
    reortho_interval: f64,
    tol: f64,
) -> Result<TransportResult> {
    transport_frame_system(&fam.system(p)?, frame, s, t, reortho_interval, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, principal_angle, Vector};
    use crate::model::family::{AngleMap, MatrixMap, ScalarProfile, TabulatedFamily};
    use std::sync::Arc;

    fn reflection_bc() -> CoefficientFamily {
        CoefficientFamily::PiecewiseScalar {
            profile: ScalarProfile::default(),
            b: MatrixMap::ConjugateReflection,
            c: MatrixMap::Reflection,
            angle: AngleMap::identity(),
        }
    }

    #[test]
    fn identity_at_equal_times() {
        let phi = transition(&reflection_bc(), &Param::Scalar(0.3), 1.7, 1.7, 1e-10).unwrap();
        assert_eq!(phi, Matrix::identity(2, 2));
    }

    #[test]
    fn matches_closed_form_on_positive_half_line() {
        let fam = reflection_bc();
        let profile = ScalarProfile::default();
        for theta in [0.0, 0.9, 2.5] {
            let p = Param::Scalar(theta);
            let c = MatrixMap::Reflection.at(theta);
            for (t, s) in [(3.0, 0.5), (0.2, 4.0), (7.0, 0.0)] {
                let phi = transition(&fam, &p, t, s, 1e-11).unwrap();
                let exact = expm(&(&c * profile.integral(s, t))).unwrap();
                assert!((&phi - &exact).amax() < 1e-8, "theta {theta} ({t}, {s})");
            }
        }
    }

    #[test]
    fn cocycle_spot_check() {
        let fam = reflection_bc();
        let p = Param::Scalar(1.2);
        let a = transition(&fam, &p, 2.0, 1.0, 1e-11).unwrap();
        let b = transition(&fam, &p, 1.0, 0.0, 1e-11).unwrap();
        let c = transition(&fam, &p, 2.0, 0.0, 1e-11).unwrap();
        assert!((a * b - c).amax() < 1e-8);
    }

    #[test]
    fn zero_span_transport() {
        let f = Frame::from_columns(&[Vector::from_row_slice(&[0.6, 0.8])]);
        let r = transport_frame(
            &reflection_bc(),
            &Param::Scalar(0.1),
            &f,
            2.0,
            2.0,
            1.0,
            1e-10,
        )
        .unwrap();
        assert_eq!(r.frame, f);
        assert_eq!(r.log_growth, 0.0);
    }

    #[test]
    fn scalar_decay_log_growth() {
        let fam = CoefficientFamily::AsymptoticallyHyperbolic(TabulatedFamily::constant(
            Matrix::from_element(1, 1, -1.0),
        ));
        let f = Frame::new(Matrix::from_element(1, 1, 1.0));
        let r = transport_frame(&fam, &Param::Scalar(0.0), &f, 0.0, 3.0, 1.0, 1e-10).unwrap();
        assert!((r.log_growth + 3.0).abs() < 1e-9, "{}", r.log_growth);
        assert_eq!(r.reorthonormalizations, 3);
        assert_eq!(r.frame.column(0)[0], 1.0);
    }

    #[test]
    fn stable_eigenframe_is_invariant_backward() {
        let fam = reflection_bc();
        let theta: f64 = 1.3;
        let v = Vector::from_row_slice(&[(theta / 2.0).cos(), (theta / 2.0).sin()]);
        let f = Frame::from_columns(&[v]);
        let r = transport_frame(&fam, &Param::Scalar(theta), &f, 12.0, 0.0, 1.0, 1e-10).unwrap();
        assert!(principal_angle(&r.frame, &f).unwrap() < 1e-8);
        assert!(r.frame.column(0)[0] > 0.0);
    }

    #[test]
    fn liouville_with_trace() {
        let fam = CoefficientFamily::AsymptoticallyHyperbolic(TabulatedFamily {
            dim: 2,
            matrix: Arc::new(|_, t| {
                Matrix::from_row_slice(2, 2, &[-1.0 + t.sin(), 1.0, 0.3 * t.cos(), t.cos()])
            }),
            limits: Arc::new(|_| (Matrix::identity(2, 2), Matrix::identity(2, 2))),
            onset: 0.0,
        });
        let (s, t): (f64, f64) = (-1.0, 2.5);
        let phi = transition(&fam, &Param::Scalar(0.0), t, s, 1e-11).unwrap();
        // int_s^t (-1 + sin r + cos r) dr
        let tr = -(t - s) + (s.cos() - t.cos()) + (t.sin() - s.sin());
        assert!((phi.determinant() / tr.exp() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stiff_system_reports_location() {
        let fam = CoefficientFamily::AsymptoticallyHyperbolic(TabulatedFamily::constant(
            Matrix::from_element(1, 1, -1e9),
        ));
        match transition(&fam, &Param::Scalar(0.0), 1.0, 0.0, 1e-10) {
            Err(Error::Stiffness { t, .. }) => assert!((0.0..1.0).contains(&t)),
            other => panic!("expected stiffness error, got {other:?}"),
        }
    }

    #[test]
    fn bad_arguments() {
        let fam = reflection_bc();
        let p = Param::Scalar(0.0);
        assert!(transition(&fam, &p, f64::NAN, 0.0, 1e-10).is_err());
        assert!(transition(&fam, &p, 1.0, 0.0, 0.0).is_err());
        let f = Frame::new(Matrix::identity(3, 1));
        assert!(matches!(
            transport_frame(&fam, &p, &f, 0.0, 1.0, 1.0, 1e-10),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
