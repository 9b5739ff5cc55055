//! Evans determinant `L_D`, parity, the interval index `iota`, circle
//! holonomy and the class of the asymptotic stable bundles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det_sign, principal_angle, procrustes, Frame, Matrix};
use crate::model::config::Numerics;
use crate::model::family::{CoefficientFamily, Param};
use crate::model::space::{ParameterSpace, Topology};
use crate::propagation::transport_frame_system;
use crate::subspaces::{subspace_pair, transversality, FrameField, SubspacePair};

/// `M = [U | S]`, unstable columns first.
pub fn assemble_m(pair: &SubspacePair) -> Result<Matrix> {
    let d = pair.dim();
    let m = pair.unstable.rank();
    let k = m + pair.stable.rank();
    if k != d || pair.stable.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: k,
        });
    }
    Ok(Matrix::from_fn(d, d, |i, j| {
        if j < m {
            pair.unstable.matrix()[(i, j)]
        } else {
            pair.stable.matrix()[(i, j - m)]
        }
    }))
}

/// `det [U | S]` on orthonormal frames, so `|L_D| <= 1`.
pub fn evans_of_pair(pair: &SubspacePair) -> Result<f64> {
    Ok(det_sign(&assemble_m(pair)?, 0.0)?.value)
}

/// `L_D(lambda)` with the per-node canonical frames.
pub fn evans_determinant(fam: &CoefficientFamily, p: &Param, numerics: &Numerics) -> Result<f64> {
    evans_of_pair(&subspace_pair(fam, p, numerics)?)
}

/// `L_D` in the reference normalisation of the built-in two-dimensional
/// families, or `None` where no such normalisation exists.
pub fn reference_normalized_evans(
    fam: &CoefficientFamily,
    p: &Param,
    numerics: &Numerics,
) -> Option<Result<f64>> {
    let seeds = fam.reference_seed_vectors(p, numerics.truncation_time)?;
    Some(seeds.and_then(|(u, s)| {
        let sys = fam.system(p)?;
        let t = numerics.truncation_time;
        let carry = |v: &crate::linalg::Vector, from: f64| -> Result<crate::linalg::Vector> {
            let n = v.norm();
            let f = Frame::from_columns(&[v / n]);
            let r = transport_frame_system(
                &sys,
                &f,
                from,
                0.0,
                numerics.reortho_interval,
                numerics.ode_tol,
            )?;
            Ok(r.frame.column(0) * (n * r.log_growth.exp()))
        };
        let u0 = carry(&u, -t)?;
        let s0 = carry(&s, t)?;
        Ok(u0[0] * s0[1] - u0[1] * s0[0])
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSample {
    pub node: usize,
    pub coords: Vec<f64>,
    /// `L_D` on the aligned frames.
    pub ld: f64,
    /// `-1`, `0` or `1`, with `|ld| <= zero_tol` reported as zero.
    pub sign: i8,
    /// Smallest singular value of `[U | S]`.
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_ld: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Holonomy {
    pub sign: i8,
    pub w1: u8,
}

impl Holonomy {
    fn from_det(det: f64) -> Self {
        if det < 0.0 {
            Holonomy { sign: -1, w1: 1 }
        } else {
            Holonomy { sign: 1, w1: 0 }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityEntry {
    pub a: usize,
    pub b: usize,
    /// `None` when an endpoint is not transversal.
    pub psi: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bundle {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub topology: String,
    pub zero_tol: f64,
    pub lambda0: Vec<usize>,
    pub samples: Vec<NodeSample>,
    pub parity: Vec<ParityEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iota: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stable_holonomy: Option<Holonomy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unstable_holonomy: Option<Holonomy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pejsachowicz_class: Option<u8>,
}

impl IndexReport {
    pub fn sample(&self, node: usize) -> Option<&NodeSample> {
        self.samples.iter().find(|s| s.node == node)
    }

    /// `Lambda_0` nodes failing the transversality check.
    pub fn non_transversal_lambda0(&self) -> Vec<usize> {
        self.lambda0
            .iter()
            .copied()
            .filter(|&i| self.sample(i).is_none_or(|s| !(s.margin > self.zero_tol)))
            .collect()
    }
}

fn sign_of(value: f64, zero_tol: f64) -> i8 {
    if value.abs() <= zero_tol {
        0
    } else if value > 0.0 {
        1
    } else {
        -1
    }
}

/// `psi = 1` iff `L_D` has opposite signs at the two nodes.
pub fn parity_pair(report: &IndexReport, a: usize, b: usize) -> Result<u8> {
    let get = |n: usize| -> Result<&NodeSample> {
        let s = report
            .sample(n)
            .ok_or_else(|| Error::Contract(format!("node {n} is not in the report")))?;
        if !(s.margin > report.zero_tol) {
            return Err(Error::NonTransversal {
                node: n,
                margin: s.margin,
            });
        }
        Ok(s)
    };
    let (sa, sb) = (get(a)?, get(b)?);
    Ok(u8::from(sa.ld * sb.ld < 0.0))
}

/// `iota = 0` if `det(M_a M_b) > 0`, `1` if it is negative.
pub fn iota_interval(m_a: &Matrix, m_b: &Matrix, zero_tol: f64) -> Result<u8> {
    let da = det_sign(m_a, zero_tol)?;
    let db = det_sign(m_b, zero_tol)?;
    if da.sign == 0 || db.sign == 0 {
        return Err(Error::Singular(format!(
            "endpoint determinant {} is within {zero_tol:e} of zero",
            if da.sign == 0 { da.value } else { db.value }
        )));
    }
    Ok(u8::from(da.sign * db.sign < 0))
}

fn require_circle(space: &ParameterSpace) -> Result<()> {
    match space.topology() {
        Topology::Circle => Ok(()),
        other => Err(Error::Topology {
            expected: "circle",
            found: other.name(),
        }),
    }
}

/// Orientation of a bundle around the circle: the sign of `det(F_last^T F_root)`.
pub fn circle_holonomy(field: &FrameField, which: Bundle) -> Result<Holonomy> {
    require_circle(&field.space)?;
    let (last, root) = field.closing_edge().expect("circle");
    let pick = |p: &SubspacePair| match which {
        Bundle::Stable => p.stable.clone(),
        Bundle::Unstable => p.unstable.clone(),
    };
    let (a, b) = (pick(&field.pairs[last]), pick(&field.pairs[root]));
    Ok(Holonomy::from_det(frame_overlap_det(&a, &b)))
}

fn frame_overlap_det(a: &Frame, b: &Frame) -> f64 {
    if a.rank() == 0 {
        return 1.0;
    }
    (a.matrix().transpose() * b.matrix()).determinant()
}

/// Holonomy of a sampled bundle over the circle after sequential Procrustes alignment.
pub fn bundle_holonomy(frames: &[Frame], continuity_bound: f64) -> Result<Holonomy> {
    let n = frames.len();
    if n < 3 {
        return Err(Error::Contract(
            "a circle needs at least three nodes".into(),
        ));
    }
    let mut bad = Vec::new();
    let mut aligned = vec![frames[0].clone()];
    for i in 1..n {
        let prev = &aligned[i - 1];
        let angle = principal_angle(&frames[i], prev)?;
        if !(angle <= continuity_bound) {
            bad.push((i - 1, i, angle));
        }
        aligned.push(frames[i].transform(&procrustes(&frames[i], prev)));
    }
    let closing = principal_angle(&frames[n - 1], &frames[0])?;
    if !(closing <= continuity_bound) {
        bad.push((0, n - 1, closing));
    }
    if !bad.is_empty() {
        return Err(Error::RefinementNeeded { edges: bad });
    }
    Ok(Holonomy::from_det(frame_overlap_det(
        &aligned[n - 1],
        &aligned[0],
    )))
}

/// `w1(E^s at +inf) + w1(E^s at -inf) mod 2` over a circle parameter space.
pub fn pejsachowicz_class(
    fam: &CoefficientFamily,
    space: &ParameterSpace,
    numerics: &Numerics,
) -> Result<u8> {
    require_circle(space)?;
    let bundles = (0..space.len())
        .into_par_iter()
        .map(|i| fam.asymptotic_stable_bundles(&space.node(i)))
        .collect::<Result<Vec<_>>>()?;
    let n = space.len();
    let root = space.lambda0()[0];
    let rotate = |pick: fn(&(Frame, Frame)) -> Frame| -> Vec<Frame> {
        (0..n).map(|k| pick(&bundles[(root + k) % n])).collect()
    };
    let plus = bundle_holonomy(&rotate(|b| b.0.clone()), numerics.continuity_bound)?;
    let minus = bundle_holonomy(&rotate(|b| b.1.clone()), numerics.continuity_bound)?;
    Ok((plus.w1 + minus.w1) % 2)
}

/// Assemble the index report for an aligned frame field.
pub fn index_report(
    fam: &CoefficientFamily,
    field: &FrameField,
    numerics: &Numerics,
) -> Result<IndexReport> {
    let space = &field.space;
    let zero_tol = numerics.zero_tol;
    let samples = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let pair = &field.pairs[i];
            let ld = evans_of_pair(pair)?;
            let (_, margin) = transversality(pair, zero_tol)?;
            let reference_ld =
                reference_normalized_evans(fam, &space.node(i), numerics).transpose()?;
            Ok(NodeSample {
                node: i,
                coords: space.node(i).coords(),
                ld,
                sign: sign_of(ld, zero_tol),
                margin,
                reference_ld,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = IndexReport {
        topology: space.topology().name().to_string(),
        zero_tol,
        lambda0: space.lambda0().to_vec(),
        samples,
        parity: Vec::new(),
        iota: None,
        stable_holonomy: None,
        unstable_holonomy: None,
        pejsachowicz_class: None,
    };
    let l0 = space.lambda0();
    for (x, &a) in l0.iter().enumerate() {
        for &b in &l0[x + 1..] {
            report.parity.push(ParityEntry {
                a,
                b,
                psi: parity_pair(&report, a, b).ok(),
            });
        }
    }
    match space.topology() {
        Topology::Interval { .. } => {
            let (first, last) = (0, space.len() - 1);
            let ma = assemble_m(&field.pairs[first])?;
            let mb = assemble_m(&field.pairs[last])?;
            report.iota = iota_interval(&ma, &mb, zero_tol).ok();
        }
        Topology::Circle => {
            report.stable_holonomy = Some(circle_holonomy(field, Bundle::Stable)?);
            report.unstable_holonomy = Some(circle_holonomy(field, Bundle::Unstable)?);
            report.pejsachowicz_class = Some(pejsachowicz_class(fam, space, numerics)?);
        }
        Topology::Grid2d { .. } => {}
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;
    use crate::model::family::{
        AngleMap, MatrixMap, ScalarProfile, SecondOrderCoefficients, TabulatedFamily,
    };
    use crate::subspaces::{frame_field, TransportDiagnostics};
    use std::f64::consts::PI;

    fn bc() -> CoefficientFamily {
        CoefficientFamily::PiecewiseScalar {
            profile: ScalarProfile::default(),
            b: MatrixMap::ConjugateReflection,
            c: MatrixMap::Reflection,
            angle: AngleMap::identity(),
        }
    }

    fn ex_bc() -> CoefficientFamily {
        CoefficientFamily::PiecewiseScalar {
            profile: ScalarProfile::default(),
            b: MatrixMap::Constant(Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0])),
            c: MatrixMap::Reflection,
            angle: AngleMap::identity(),
        }
    }

    fn pt() -> CoefficientFamily {
        CoefficientFamily::SecondOrder {
            coefficients: SecondOrderCoefficients::PoschlTeller { strength: 2.0 },
            onset: 3.0,
        }
    }

    fn constant() -> CoefficientFamily {
        CoefficientFamily::AsymptoticallyHyperbolic(TabulatedFamily::constant(
            Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]),
        ))
    }

    fn col(v: &[f64]) -> Frame {
        Frame::from_columns(&[Vector::from_row_slice(v)])
    }

    fn pair(u: Frame, s: Frame) -> SubspacePair {
        SubspacePair {
            unstable: u,
            stable: s,
            truncation_time: 12.0,
            unstable_diagnostics: TransportDiagnostics::default(),
            stable_diagnostics: TransportDiagnostics::default(),
        }
    }

    #[test]
    fn assemble_examples() {
        let m = assemble_m(&pair(col(&[1.0, 0.0]), col(&[0.0, 1.0]))).unwrap();
        assert_eq!(m, Matrix::identity(2, 2));
        let th: f64 = 1.1;
        let (s, c) = (th / 2.0).sin_cos();
        let p = subspace_pair(&bc(), &Param::Scalar(th), &Numerics::default()).unwrap();
        let m = assemble_m(&p).unwrap();
        assert!((m - Matrix::from_row_slice(2, 2, &[s, c, c, s])).amax() < 1e-9);
        assert!(assemble_m(&pair(col(&[1.0, 0.0]), Frame::empty(2))).is_err());
    }

    #[test]
    fn poschl_teller_matrix_columns() {
        let num = Numerics::default();
        for l in [0.5, 0.8, 1.3] {
            let m = assemble_m(&subspace_pair(&pt(), &Param::Scalar(l), &num).unwrap()).unwrap();
            let u = Vector::from_row_slice(&[l, l * l - 1.0]).normalize();
            let s = Vector::from_row_slice(&[l, 1.0 - l * l]).normalize();
            assert!((m.column(0) - u).amax() < 1e-8);
            assert!((m.column(1) - s).amax() < 1e-8);
        }
    }

    #[test]
    fn evans_examples() {
        let num = Numerics::default();
        assert!((evans_determinant(&bc(), &Param::Scalar(0.0), &num).unwrap() + 1.0).abs() < 1e-9);
        assert!((evans_determinant(&bc(), &Param::Scalar(PI), &num).unwrap() - 1.0).abs() < 1e-9);
        let pn = reference_normalized_evans(&pt(), &Param::Scalar(0.5), &num)
            .unwrap()
            .unwrap();
        assert!((pn - 0.75).abs() < 1e-6, "{pn}");
        for l in [0.0, 0.5, 3.0] {
            assert!(
                (evans_determinant(&constant(), &Param::Scalar(l), &num).unwrap() + 1.0).abs()
                    < 1e-12
            );
        }
        let pn = reference_normalized_evans(&bc(), &Param::Scalar(1.0), &num)
            .unwrap()
            .unwrap();
        assert!((pn + 1f64.cos()).abs() < 1e-8);
        assert!(reference_normalized_evans(&constant(), &Param::Scalar(0.0), &num).is_none());
    }

    #[test]
    fn parity_and_iota_on_bc() {
        let num = Numerics::default();
        let space = ParameterSpace::interval(0.0, PI, 181, &[0.0, PI]).unwrap();
        let field = frame_field(&bc(), &space, &num).unwrap();
        let r = index_report(&bc(), &field, &num).unwrap();
        assert_eq!(parity_pair(&r, 0, 180).unwrap(), 1);
        assert_eq!(parity_pair(&r, 0, 0).unwrap(), 0);
        assert_eq!(r.iota, Some(1));
        assert_eq!(
            r.parity,
            vec![ParityEntry {
                a: 0,
                b: 180,
                psi: Some(1)
            }]
        );
        assert!(matches!(
            parity_pair(&r, 0, 90),
            Err(Error::NonTransversal { node: 90, .. })
        ));
    }

    #[test]
    fn iota_examples() {
        let i = Matrix::identity(2, 2);
        assert_eq!(iota_interval(&i, &i, 1e-8).unwrap(), 0);
        let f = Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(iota_interval(&i, &f, 1e-8).unwrap(), 1);
        assert!(matches!(
            iota_interval(&i, &Matrix::zeros(2, 2), 1e-8),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn holonomy_and_class() {
        let num = Numerics::default();
        let space = ParameterSpace::circle(120, &[0.0]).unwrap();
        let field = frame_field(&ex_bc(), &space, &num).unwrap();
        assert_eq!(
            circle_holonomy(&field, Bundle::Stable).unwrap(),
            Holonomy { sign: -1, w1: 1 }
        );
        assert_eq!(circle_holonomy(&field, Bundle::Unstable).unwrap().w1, 0);
        assert_eq!(pejsachowicz_class(&ex_bc(), &space, &num).unwrap(), 1);
        assert_eq!(pejsachowicz_class(&bc(), &space, &num).unwrap(), 0);
        assert_eq!(pejsachowicz_class(&constant(), &space, &num).unwrap(), 0);

        let field = frame_field(&constant(), &space, &num).unwrap();
        assert_eq!(
            circle_holonomy(&field, Bundle::Stable).unwrap(),
            Holonomy { sign: 1, w1: 0 }
        );

        let line = ParameterSpace::interval(0.0, 1.0, 5, &[0.0]).unwrap();
        assert!(matches!(
            pejsachowicz_class(&bc(), &line, &num),
            Err(Error::Topology { .. })
        ));
    }

    #[test]
    fn flipping_a_column_flips_every_sign() {
        let num = Numerics::default();
        let space = ParameterSpace::interval(0.0, PI, 37, &[0.0, PI]).unwrap();
        let field = frame_field(&bc(), &space, &num).unwrap();
        let mut flipped = field.clone();
        for p in &mut flipped.pairs {
            p.stable = p.stable.negated();
        }
        let a = index_report(&bc(), &field, &num).unwrap();
        let b = index_report(&bc(), &flipped, &num).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.sign, -y.sign);
        }
        assert_eq!(a.parity, b.parity);
        assert_eq!(a.iota, b.iota);
    }
}
