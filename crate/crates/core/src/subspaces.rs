//! Truncated shooting for `E^u(0)`, `E^s(0)` and continuous frame fields.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{principal_angle, procrustes, smallest_singular_value, Frame, Matrix};
use crate::model::config::Numerics;
use crate::model::family::{CoefficientFamily, Param};
use crate::model::space::{ParameterSpace, Topology};
use crate::propagation::transport_frame_system;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TransportDiagnostics {
    pub steps: usize,
    pub reorthonormalizations: usize,
    pub log_growth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePair {
    /// `d x m`.
    pub unstable: Frame,
    /// `d x (d - m)`.
    pub stable: Frame,
    pub truncation_time: f64,
    pub unstable_diagnostics: TransportDiagnostics,
    pub stable_diagnostics: TransportDiagnostics,
}

impl SubspacePair {
    pub fn dim(&self) -> usize {
        self.unstable.dim()
    }

    fn transformed(&self, ru: &Matrix, rs: &Matrix) -> SubspacePair {
        SubspacePair {
            unstable: self.unstable.transform(ru),
            stable: self.stable.transform(rs),
            ..self.clone()
        }
    }
}

fn transport(
    fam: &CoefficientFamily,
    p: &Param,
    seed: &Frame,
    from: f64,
    to: f64,
    numerics: &Numerics,
) -> Result<(Frame, TransportDiagnostics)> {
    let sys = fam.system(p)?;
    let r = transport_frame_system(
        &sys,
        seed,
        from,
        to,
        numerics.reortho_interval,
        numerics.ode_tol,
    )?;
    Ok((
        r.frame,
        TransportDiagnostics {
            steps: r.steps,
            reorthonormalizations: r.reorthonormalizations,
            log_growth: r.log_growth,
        },
    ))
}

/// `E^s(tau)`: seed at `tau + T` from the asymptotic data and integrate back to `tau`.
pub fn stable_frame_at(
    fam: &CoefficientFamily,
    p: &Param,
    tau: f64,
    numerics: &Numerics,
) -> Result<(Frame, TransportDiagnostics)> {
    let seeds = fam.asymptotic_splitting_data_with(p, numerics.hyperbolicity_tol)?;
    transport(
        fam,
        p,
        &seeds.stable_plus,
        tau + numerics.truncation_time,
        tau,
        numerics,
    )
}

/// `E^u(tau)`: seed at `tau - T` and integrate forward to `tau`.
pub fn unstable_frame_at(
    fam: &CoefficientFamily,
    p: &Param,
    tau: f64,
    numerics: &Numerics,
) -> Result<(Frame, TransportDiagnostics)> {
    let seeds = fam.asymptotic_splitting_data_with(p, numerics.hyperbolicity_tol)?;
    transport(
        fam,
        p,
        &seeds.unstable_minus,
        tau - numerics.truncation_time,
        tau,
        numerics,
    )
}

pub fn stable_frame_at_zero(
    fam: &CoefficientFamily,
    p: &Param,
    numerics: &Numerics,
) -> Result<Frame> {
    stable_frame_at(fam, p, 0.0, numerics).map(|r| r.0)
}

pub fn unstable_frame_at_zero(
    fam: &CoefficientFamily,
    p: &Param,
    numerics: &Numerics,
) -> Result<Frame> {
    unstable_frame_at(fam, p, 0.0, numerics).map(|r| r.0)
}

pub fn subspace_pair(
    fam: &CoefficientFamily,
    p: &Param,
    numerics: &Numerics,
) -> Result<SubspacePair> {
    let seeds = fam.asymptotic_splitting_data_with(p, numerics.hyperbolicity_tol)?;
    let t = numerics.truncation_time;
    let (unstable, ud) = transport(fam, p, &seeds.unstable_minus, -t, 0.0, numerics)?;
    let (stable, sd) = transport(fam, p, &seeds.stable_plus, t, 0.0, numerics)?;
    Ok(SubspacePair {
        unstable,
        stable,
        truncation_time: t,
        unstable_diagnostics: ud,
        stable_diagnostics: sd,
    })
}

/// Smallest singular value of `[U | S]`; transversal iff it exceeds `zero_tol`.
pub fn transversality(pair: &SubspacePair, zero_tol: f64) -> Result<(bool, f64)> {
    let d = pair.dim();
    let k = pair.unstable.rank() + pair.stable.rank();
    if k != d || pair.stable.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: k,
        });
    }
    let m = Matrix::from_fn(d, d, |i, j| {
        let m = pair.unstable.rank();
        if j < m {
            pair.unstable.matrix()[(i, j)]
        } else {
            pair.stable.matrix()[(i, j - m)]
        }
    });
    let margin = smallest_singular_value(&m);
    Ok((margin > zero_tol, margin))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentStep {
    pub node: usize,
    pub parent: Option<usize>,
    /// Principal angles to the parent's subspaces.
    pub unstable_angle: f64,
    pub stable_angle: f64,
    /// Determinants of the orthogonal factors applied.
    pub unstable_factor_det: f64,
    pub stable_factor_det: f64,
}

/// Subspace frames at every node of a parameter space, aligned along a
/// spanning tree rooted at the first `Lambda_0` node.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub space: ParameterSpace,
    pub pairs: Vec<SubspacePair>,
    pub root: usize,
    /// In traversal order.
    pub alignment: Vec<AlignmentStep>,
}

/// Traversal order with parents. Circles are walked once around starting at
/// the root, so the edge `(root - 1, root)` is never used.
pub fn alignment_order(space: &ParameterSpace, root: usize) -> Vec<(usize, Option<usize>)> {
    let n = space.len();
    if let Topology::Circle = space.topology() {
        return (0..n)
            .map(|k| {
                let node = (root + k) % n;
                (node, (k > 0).then(|| (root + k - 1) % n))
            })
            .collect();
    }
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut start_nodes = vec![root];
    start_nodes.extend(0..n);
    for start in start_nodes {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back((start, None));
        while let Some((v, parent)) = queue.pop_front() {
            order.push((v, parent));
            for w in space.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back((w, Some(v)));
                }
            }
        }
    }
    order
}

impl FrameField {
    /// Closing edge `(last, root)` of a circle.
    pub fn closing_edge(&self) -> Option<(usize, usize)> {
        match self.space.topology() {
            Topology::Circle => {
                let n = self.space.len();
                Some(((self.root + n - 1) % n, self.root))
            }
            _ => None,
        }
    }

    /// Re-run the alignment pass on the current frames.
    pub fn realigned(&self) -> FrameField {
        align(self.space.clone(), self.pairs.clone(), self.root)
    }

    /// Edges whose subspace jump exceeds `bound`, as `(a, b, angle)`.
    pub fn discontinuities(&self, bound: f64) -> Result<Vec<(usize, usize, f64)>> {
        let mut bad = Vec::new();
        for (a, b) in self.space.edges() {
            let (pa, pb) = (&self.pairs[a], &self.pairs[b]);
            let angle = principal_angle(&pa.unstable, &pb.unstable)?
                .max(principal_angle(&pa.stable, &pb.stable)?);
            if !(angle <= bound) {
                bad.push((a, b, angle));
            }
        }
        Ok(bad)
    }
}

fn align(space: ParameterSpace, mut pairs: Vec<SubspacePair>, root: usize) -> FrameField {
    let mut alignment = Vec::with_capacity(pairs.len());
    for (node, parent) in alignment_order(&space, root) {
        let step = match parent {
            None => AlignmentStep {
                node,
                parent: None,
                unstable_angle: 0.0,
                stable_angle: 0.0,
                unstable_factor_det: 1.0,
                stable_factor_det: 1.0,
            },
            Some(par) => {
                let (cur, prev) = (&pairs[node], &pairs[par]);
                let ru = procrustes(&cur.unstable, &prev.unstable);
                let rs = procrustes(&cur.stable, &prev.stable);
                let step = AlignmentStep {
                    node,
                    parent: Some(par),
                    unstable_angle: principal_angle(&cur.unstable, &prev.unstable)
                        .unwrap_or(f64::NAN),
                    stable_angle: principal_angle(&cur.stable, &prev.stable).unwrap_or(f64::NAN),
                    unstable_factor_det: det_or_one(&ru),
                    stable_factor_det: det_or_one(&rs),
                };
                pairs[node] = cur.transformed(&ru, &rs);
                step
            }
        };
        alignment.push(step);
    }
    FrameField {
        space,
        pairs,
        root,
        alignment,
    }
}

fn det_or_one(m: &Matrix) -> f64 {
    if m.is_empty() {
        1.0
    } else {
        m.determinant()
    }
}

/// Compute the subspace pair at every node (in parallel) and align the frames.
pub fn frame_field(
    fam: &CoefficientFamily,
    space: &ParameterSpace,
    numerics: &Numerics,
) -> Result<FrameField> {
    let pairs = (0..space.len())
        .into_par_iter()
        .map(|i| subspace_pair(fam, &space.node(i), numerics))
        .collect::<Result<Vec<_>>>()?;
    let root = space.lambda0()[0];
    let field = align(space.clone(), pairs, root);
    let bad = field.discontinuities(numerics.continuity_bound)?;
    if !bad.is_empty() {
        return Err(Error::RefinementNeeded { edges: bad });
    }
    Ok(field)
}
