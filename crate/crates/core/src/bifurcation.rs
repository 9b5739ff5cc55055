//! Sign changes of `L_D` along paths and sign-region geometry on disc grids.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::evans_of_pair;
use crate::linalg::procrustes;
use crate::model::config::Numerics;
use crate::model::family::{CoefficientFamily, Param};
use crate::model::space::{ParameterSpace, Topology};
use crate::subspaces::{subspace_pair, transversality, FrameField, SubspacePair};

/// Bisection stops once the bracket is this narrow and `|L_D| <= zero_tol`.
pub const BRACKET_WIDTH: f64 = 1e-8;
/// Hard floor on the bracket width.
pub const MIN_BRACKET_WIDTH: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatedZero {
    pub lambda: f64,
    /// Final bracket; `L_D` has opposite signs at its ends.
    pub bracket: (f64, f64),
    /// `|L_D(lambda)|`.
    pub residual: f64,
    /// Smallest singular value of `[U | S]` at `lambda`.
    pub margin: f64,
    /// Grid nodes of the initial bracket.
    pub nodes: (usize, usize),
    /// Bracket widths, one per bisection step.
    pub widths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFinding {
    pub zeros: Vec<LocatedZero>,
    /// Nodes with `|L_D| <= zero_tol` and no sign change across them:
    /// candidates without parity evidence.
    pub candidates: Vec<usize>,
}

fn scalar(p: Param) -> Result<f64> {
    match p {
        Param::Scalar(x) => Ok(x),
        other => Err(Error::Contract(format!(
            "expected a scalar parameter, got {other:?}"
        ))),
    }
}

fn aligned_to(pair: SubspacePair, reference: &SubspacePair) -> SubspacePair {
    let ru = procrustes(&pair.unstable, &reference.unstable);
    let rs = procrustes(&pair.stable, &reference.stable);
    SubspacePair {
        unstable: pair.unstable.transform(&ru),
        stable: pair.stable.transform(&rs),
        ..pair
    }
}

/// Scan an aligned interval field for sign changes of `L_D` and refine each
/// by bisection on freshly computed frames.
pub fn locate_zeros_on_path(
    fam: &CoefficientFamily,
    field: &FrameField,
    numerics: &Numerics,
) -> Result<PathFinding> {
    let space = &field.space;
    if !matches!(space.topology(), Topology::Interval { .. }) {
        return Err(Error::Topology {
            expected: "interval",
            found: space.topology().name(),
        });
    }
    let zero_tol = numerics.zero_tol;
    let n = space.len();
    for end in [0, n - 1] {
        let (ok, margin) = transversality(&field.pairs[end], zero_tol)?;
        if !ok {
            return Err(Error::NonTransversal { node: end, margin });
        }
    }
    let values = field
        .pairs
        .iter()
        .map(evans_of_pair)
        .collect::<Result<Vec<_>>>()?;
    let sign = |v: f64| -> i8 {
        if v.abs() <= zero_tol {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    };

    let mut zeros = Vec::new();
    let mut candidates = Vec::new();
    let mut prev = 0usize;
    let mut pending_zeros: Vec<usize> = Vec::new();
    for i in 1..n {
        let s = sign(values[i]);
        if s == 0 {
            pending_zeros.push(i);
            continue;
        }
        if s != sign(values[prev]) {
            zeros.push(bisect(fam, field, numerics, prev, i)?);
        } else {
            candidates.append(&mut pending_zeros);
        }
        pending_zeros.clear();
        prev = i;
    }
    Ok(PathFinding { zeros, candidates })
}

fn bisect(
    fam: &CoefficientFamily,
    field: &FrameField,
    numerics: &Numerics,
    a: usize,
    b: usize,
) -> Result<LocatedZero> {
    let space = &field.space;
    let mut lo = scalar(space.node(a))?;
    let mut hi = scalar(space.node(b))?;
    let mut lo_pair = field.pairs[a].clone();
    let lo_sign = evans_of_pair(&lo_pair)?.signum();
    let mut widths = vec![(hi - lo).abs()];
    loop {
        let mid = 0.5 * (lo + hi);
        let pair = aligned_to(subspace_pair(fam, &Param::Scalar(mid), numerics)?, &lo_pair);
        let v = evans_of_pair(&pair)?;
        let width = (hi - lo).abs();
        let narrow = width <= BRACKET_WIDTH;
        if (narrow && v.abs() <= numerics.zero_tol) || v == 0.0 || width <= MIN_BRACKET_WIDTH {
            let (_, margin) = transversality(&pair, numerics.zero_tol)?;
            return Ok(LocatedZero {
                lambda: mid,
                bracket: (lo.min(hi), lo.max(hi)),
                residual: v.abs(),
                margin,
                nodes: (a, b),
                widths,
            });
        }
        if v.signum() == lo_sign {
            lo = mid;
            lo_pair = pair;
        } else {
            hi = mid;
        }
        widths.push((hi - lo).abs());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFinding {
    pub resolution: usize,
    pub values: Vec<f64>,
    pub signs: Vec<i8>,
    pub zero_nodes: Vec<usize>,
    /// 4-connected components of the strictly positive nodes.
    pub positive_components: usize,
    /// 4-connected components of the strictly negative nodes.
    pub negative_components: usize,
    /// 8-connected components of the zero nodes.
    pub zero_components: usize,
    /// Sign component label per node (`None` on zero nodes).
    pub labels: Vec<Option<usize>>,
    /// At least two sign components, so the zero set separates the disc.
    pub disconnects: bool,
}

impl GridFinding {
    pub fn sign_components(&self) -> usize {
        self.positive_components + self.negative_components
    }
}

/// Sign map of `L_D` on an aligned disc field with component counts.
pub fn sign_map_2d(field: &FrameField, numerics: &Numerics) -> Result<GridFinding> {
    let space = &field.space;
    let resolution = match space.topology() {
        Topology::Grid2d { resolution } => resolution,
        other => {
            return Err(Error::Topology {
                expected: "grid2d",
                found: other.name(),
            })
        }
    };
    let values = field
        .pairs
        .iter()
        .map(evans_of_pair)
        .collect::<Result<Vec<_>>>()?;
    let signs: Vec<i8> = values
        .iter()
        .map(|&v| {
            if v.abs() <= numerics.zero_tol {
                0
            } else if v > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    let zero_nodes: Vec<usize> = (0..signs.len()).filter(|&i| signs[i] == 0).collect();

    let mut labels: Vec<Option<usize>> = vec![None; signs.len()];
    let (mut pos, mut neg) = (0, 0);
    let mut next = 0;
    for start in 0..signs.len() {
        if signs[start] == 0 || labels[start].is_some() {
            continue;
        }
        flood(start, &signs, &mut labels, next, |v| space.neighbors(v));
        next += 1;
        if signs[start] > 0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }

    let mut zero_labels: Vec<Option<usize>> = vec![None; signs.len()];
    let mut zero_components = 0;
    for &start in &zero_nodes {
        if zero_labels[start].is_none() {
            flood(start, &signs, &mut zero_labels, zero_components, |v| {
                neighbors8(space, v)
            });
            zero_components += 1;
        }
    }

    Ok(GridFinding {
        resolution,
        values,
        signs,
        zero_nodes,
        positive_components: pos,
        negative_components: neg,
        zero_components,
        labels,
        disconnects: pos + neg >= 2,
    })
}

fn flood(
    start: usize,
    signs: &[i8],
    labels: &mut [Option<usize>],
    label: usize,
    nbrs: impl Fn(usize) -> Vec<usize>,
) {
    let s = signs[start];
    labels[start] = Some(label);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for w in nbrs(v) {
            if signs[w] == s && labels[w].is_none() {
                labels[w] = Some(label);
                queue.push_back(w);
            }
        }
    }
}

fn neighbors8(space: &ParameterSpace, v: usize) -> Vec<usize> {
    let (i, j) = space.lattice_coords(v).expect("grid node");
    let mut out = Vec::with_capacity(8);
    for dj in -1isize..=1 {
        for di in -1isize..=1 {
            if di == 0 && dj == 0 {
                continue;
            }
            if let Some(w) = space.lattice_node(i as isize + di, j as isize + dj) {
                out.push(w);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semicircle {
    /// `y > 0`.
    Upper,
    /// `y < 0`.
    Lower,
    /// The crossing sits on the x-axis.
    Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCrossing {
    pub from: usize,
    pub to: usize,
    /// Polar angle halfway along the boundary arc from `from` to `to`.
    pub angle: f64,
    pub semicircle: Semicircle,
}

/// Boundary nodes ordered by polar angle, skipping zeros, with a crossing
/// wherever consecutive signs differ (cyclically).
pub fn boundary_trace(
    finding: &GridFinding,
    space: &ParameterSpace,
) -> Result<Vec<BoundaryCrossing>> {
    if !matches!(space.topology(), Topology::Grid2d { .. }) {
        return Err(Error::Topology {
            expected: "grid2d",
            found: space.topology().name(),
        });
    }
    if finding.signs.len() != space.len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            got: finding.signs.len(),
        });
    }
    let polar = |v: usize| match space.node(v) {
        Param::Point(x, y) => y.atan2(x).rem_euclid(TAU),
        _ => unreachable!("grid nodes are points"),
    };
    let mut ring: Vec<(f64, usize)> = space
        .boundary_nodes()
        .into_iter()
        .filter(|&v| finding.signs[v] != 0)
        .map(|v| (polar(v), v))
        .collect();
    ring.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let k = ring.len();
    let mut out = Vec::new();
    if k < 2 {
        return Ok(out);
    }
    for idx in 0..k {
        let (a0, a) = ring[idx];
        let (b0, b) = ring[(idx + 1) % k];
        if finding.signs[a] == finding.signs[b] {
            continue;
        }
        let arc = (b0 - a0).rem_euclid(TAU);
        let mid = a0 + 0.5 * arc;
        let y = mid.sin();
        let semicircle = if y > 1e-12 {
            Semicircle::Upper
        } else if y < -1e-12 {
            Semicircle::Lower
        } else {
            Semicircle::Axis
        };
        out.push(BoundaryCrossing {
            from: a,
            to: b,
            angle: mid.rem_euclid(TAU),
            semicircle,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::family::{AngleMap, MatrixMap, ScalarProfile, TabulatedFamily};
    use crate::subspaces::frame_field;
    use std::f64::consts::PI;

    fn bc(angle: AngleMap) -> CoefficientFamily {
        CoefficientFamily::PiecewiseScalar {
            profile: ScalarProfile::default(),
            b: MatrixMap::ConjugateReflection,
            c: MatrixMap::Reflection,
            angle,
        }
    }

    fn constant() -> CoefficientFamily {
        CoefficientFamily::AsymptoticallyHyperbolic(TabulatedFamily::constant(
            Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]),
        ))
    }

    #[test]
    fn bc_zero_at_half_pi() {
        let num = Numerics::default();
        let space = ParameterSpace::interval(0.0, PI, 46, &[0.0, PI]).unwrap();
        let field = frame_field(&bc(AngleMap::identity()), &space, &num).unwrap();
        let f = locate_zeros_on_path(&bc(AngleMap::identity()), &field, &num).unwrap();
        assert_eq!(f.zeros.len(), 1);
        let z = &f.zeros[0];
        assert!((z.lambda - PI / 2.0).abs() < 1e-6);
        assert!(z.residual <= num.zero_tol);
        assert!(z.margin <= 10.0 * num.zero_tol);
        for w in z.widths.windows(2) {
            assert!((w[1] - 0.5 * w[0]).abs() <= 1e-15 * w[0].max(1.0));
        }
        assert!(f.candidates.is_empty());
    }

    #[test]
    fn constant_path_is_empty() {
        let num = Numerics::default();
        let space = ParameterSpace::interval(0.0, 2.0, 11, &[0.0]).unwrap();
        let field = frame_field(&constant(), &space, &num).unwrap();
        let f = locate_zeros_on_path(&constant(), &field, &num).unwrap();
        assert!(f.zeros.is_empty() && f.candidates.is_empty());
    }

    #[test]
    fn non_transversal_endpoint_is_rejected() {
        let num = Numerics::default();
        let fam = bc(AngleMap::Linear {
            offset: PI / 2.0,
            scale: 1.0,
        });
        let space = ParameterSpace::interval(-1.0, 0.0, 11, &[-1.0]).unwrap();
        let field = frame_field(&fam, &space, &num).unwrap();
        assert!(matches!(
            locate_zeros_on_path(&fam, &field, &num),
            Err(Error::NonTransversal { node: 10, .. })
        ));
    }

    #[test]
    fn radial_disc_disconnects() {
        let num = Numerics::default();
        let space = ParameterSpace::disc(41, &[(0.0, 0.0), (0.99, 0.0)]).unwrap();
        let field = frame_field(&bc(AngleMap::RadialBump), &space, &num).unwrap();
        let g = sign_map_2d(&field, &num).unwrap();
        assert_eq!(g.positive_components, 1);
        assert_eq!(g.negative_components, 1);
        assert!(g.disconnects);
        assert!(boundary_trace(&g, &space).unwrap().is_empty());
        assert_eq!(g.signs[space.lambda0()[0]], 1);
    }

    #[test]
    fn product_disc_crosses_both_semicircles() {
        let num = Numerics::default();
        let space = ParameterSpace::disc(41, &[(-1.0, 0.0)]).unwrap();
        let field = frame_field(&bc(AngleMap::Product), &space, &num).unwrap();
        let g = sign_map_2d(&field, &num).unwrap();
        assert!(g.disconnects);
        let tr = boundary_trace(&g, &space).unwrap();
        assert_eq!(tr.len(), 2);
        assert!(tr.iter().any(|c| c.semicircle == Semicircle::Upper));
        assert!(tr.iter().any(|c| c.semicircle == Semicircle::Lower));
    }

    #[test]
    fn constant_disc_is_one_component() {
        let num = Numerics::default();
        let space = ParameterSpace::disc(15, &[(0.0, 0.0)]).unwrap();
        let field = frame_field(&constant(), &space, &num).unwrap();
        let g = sign_map_2d(&field, &num).unwrap();
        assert_eq!(g.sign_components(), 1);
        assert!(!g.disconnects);
        assert!(boundary_trace(&g, &space).unwrap().is_empty());
    }
}
