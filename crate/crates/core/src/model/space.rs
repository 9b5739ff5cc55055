//! Discretised parameter spaces with a distinguished subset `Lambda_0`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::model::family::Param;

pub const MAX_NODES: usize = 1_000_000;
pub const MAX_GRID_RESOLUTION: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Uniform angles `2 pi k / n`, `k = 0..n`; node `n - 1` is adjacent to node 0.
    Circle,
    /// `n x n` lattice on `[-1, 1]^2` masked to the closed unit disc.
    Grid2d {
        resolution: usize,
    },
}

impl Topology {
    pub fn name(&self) -> &'static str {
        match self {
            Topology::Interval { .. } => "interval",
            Topology::Circle => "circle",
            Topology::Grid2d { .. } => "grid2d",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Lattice {
    resolution: usize,
    /// Row-major `j * n + i`, `None` outside the mask.
    cells: Vec<Option<usize>>,
    coords: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    topology: Topology,
    nodes: Vec<Param>,
    lambda0: Vec<usize>,
    lattice: Option<Lattice>,
}

impl ParameterSpace {
    /// `n` equispaced nodes on `[lo, hi]`; `lambda0` values snap to the nearest node.
    pub fn interval(lo: f64, hi: f64, n: usize, lambda0: &[f64]) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::validation("space.range", "needs finite lo < hi"));
        }
        check_count(n, 2)?;
        let h = (hi - lo) / (n - 1) as f64;
        let nodes: Vec<Param> = (0..n)
            .map(|i| Param::Scalar(if i == n - 1 { hi } else { lo + i as f64 * h }))
            .collect();
        let lambda0 = lambda0
            .iter()
            .map(|&v| {
                if !(v >= lo - 0.5 * h && v <= hi + 0.5 * h) {
                    return Err(Error::validation(
                        "space.lambda0",
                        format!("{v} lies outside [{lo}, {hi}]"),
                    ));
                }
                Ok((((v - lo) / h).round() as usize).min(n - 1))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::finish(Topology::Interval { lo, hi }, nodes, lambda0, None)
    }

    /// `n` equispaced angles on the circle.
    pub fn circle(n: usize, lambda0: &[f64]) -> Result<Self> {
        check_count(n, 3)?;
        let h = TAU / n as f64;
        let nodes: Vec<Param> = (0..n).map(|k| Param::Angle(k as f64 * h)).collect();
        let lambda0 = lambda0
            .iter()
            .map(|&v| {
                if !v.is_finite() {
                    return Err(Error::validation("space.lambda0", "angles must be finite"));
                }
                Ok(((v.rem_euclid(TAU) / h).round() as usize) % n)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::finish(Topology::Circle, nodes, lambda0, None)
    }

    /// Closed unit disc sampled on a `resolution x resolution` lattice over `[-1, 1]^2`.
    pub fn disc(resolution: usize, lambda0: &[(f64, f64)]) -> Result<Self> {
        if !(3..=MAX_GRID_RESOLUTION).contains(&resolution) {
            return Err(Error::validation(
                "space.resolution",
                format!("must lie in 3..={MAX_GRID_RESOLUTION}"),
            ));
        }
        let n = resolution;
        let h = 2.0 / (n - 1) as f64;
        let coord = |i: usize| if i == n - 1 { 1.0 } else { -1.0 + i as f64 * h };
        let mut cells = vec![None; n * n];
        let mut coords = Vec::new();
        let mut nodes = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (coord(i), coord(j));
                if x * x + y * y <= 1.0 + 1e-12 {
                    cells[j * n + i] = Some(nodes.len());
                    coords.push((i, j));
                    nodes.push(Param::Point(x, y));
                }
            }
        }
        let lambda0 = lambda0
            .iter()
            .map(|&(x, y)| {
                let best = nodes
                    .iter()
                    .enumerate()
                    .map(|(k, p)| match *p {
                        Param::Point(px, py) => (k, (px - x).hypot(py - y)),
                        _ => unreachable!(),
                    })
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("disc has nodes");
                if !(best.1 <= h) {
                    return Err(Error::validation(
                        "space.lambda0",
                        format!("({x}, {y}) is not within one grid spacing of the disc"),
                    ));
                }
                Ok(best.0)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::finish(
            Topology::Grid2d { resolution },
            nodes,
            lambda0,
            Some(Lattice {
                resolution,
                cells,
                coords,
            }),
        )
    }

    fn finish(
        topology: Topology,
        nodes: Vec<Param>,
        mut lambda0: Vec<usize>,
        lattice: Option<Lattice>,
    ) -> Result<Self> {
        if lambda0.is_empty() {
            return Err(Error::validation("space.lambda0", "must not be empty"));
        }
        let mut seen = Vec::new();
        lambda0.retain(|i| {
            let fresh = !seen.contains(i);
            seen.push(*i);
            fresh
        });
        Ok(ParameterSpace {
            topology,
            nodes,
            lambda0,
            lattice,
        })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Param] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Param {
        self.nodes[i]
    }

    /// Indices of `Lambda_0` nodes, in configuration order.
    pub fn lambda0(&self) -> &[usize] {
        &self.lambda0
    }

    /// Replace `Lambda_0` (indices must be valid nodes).
    pub fn with_lambda0(mut self, lambda0: Vec<usize>) -> Result<Self> {
        if lambda0.is_empty() || lambda0.iter().any(|&i| i >= self.nodes.len()) {
            return Err(Error::validation(
                "space.lambda0",
                "indices must be non-empty and in range",
            ));
        }
        self.lambda0 = lambda0;
        Ok(self)
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let n = self.nodes.len();
        match self.topology {
            Topology::Interval { .. } => {
                let mut v = Vec::with_capacity(2);
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < n {
                    v.push(i + 1);
                }
                v
            }
            Topology::Circle => vec![(i + n - 1) % n, (i + 1) % n],
            Topology::Grid2d { .. } => {
                let (ci, cj) = self.lattice_coords(i).expect("grid node");
                [(0isize, -1isize), (-1, 0), (1, 0), (0, 1)]
                    .iter()
                    .filter_map(|&(di, dj)| self.lattice_node(ci as isize + di, cj as isize + dj))
                    .collect()
            }
        }
    }

    /// All undirected adjacency edges `(a, b)` with `a < b`, circle closing edge included.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for i in 0..self.nodes.len() {
            for j in self.neighbors(i) {
                if i < j {
                    e.push((i, j));
                }
            }
        }
        e.dedup();
        e
    }

    pub fn lattice_resolution(&self) -> Option<usize> {
        self.lattice.as_ref().map(|l| l.resolution)
    }

    pub fn lattice_coords(&self, node: usize) -> Option<(usize, usize)> {
        self.lattice.as_ref().map(|l| l.coords[node])
    }

    pub fn lattice_node(&self, i: isize, j: isize) -> Option<usize> {
        let l = self.lattice.as_ref()?;
        let n = l.resolution as isize;
        if i < 0 || j < 0 || i >= n || j >= n {
            return None;
        }
        l.cells[(j * n + i) as usize]
    }

    /// Nodes of a grid with at least one 4-neighbour missing from the mask.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        match self.topology {
            Topology::Grid2d { .. } => (0..self.nodes.len())
                .filter(|&i| self.neighbors(i).len() < 4)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Coordinate column names for tabular output.
    pub fn coordinate_names(&self) -> Vec<&'static str> {
        match self.topology {
            Topology::Interval { .. } => vec!["lambda"],
            Topology::Circle => vec!["lambda_theta"],
            Topology::Grid2d { .. } => vec!["lambda_x", "lambda_y"],
        }
    }
}

fn check_count(n: usize, min: usize) -> Result<()> {
    if !(min..=MAX_NODES).contains(&n) {
        return Err(Error::validation(
            "space.nodes",
            format!("must lie in {min}..={MAX_NODES}"),
        ));
    }
    Ok(())
}
