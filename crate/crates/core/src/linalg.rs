//! Small dense real linear-algebra kernels.
//!
//! Matrices are `nalgebra::DMatrix<f64>`; everything here is sized for
//! `d <= 32`. The symmetric eigensolver, the exponential and the QR used for
//! frame stabilisation are implemented locally so that sign conventions and
//! orderings are fixed and reproducible.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Absolute threshold below which a column is treated as dependent.
pub const RANK_TOL: f64 = 1e-13;

/// An ordered set of column vectors in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame(Matrix);

impl Frame {
    pub fn new(columns: Matrix) -> Self {
        Frame(columns)
    }

    pub fn from_columns(columns: &[Vector]) -> Self {
        Frame(Matrix::from_columns(columns))
    }

    /// Empty frame (zero columns) in `R^d`.
    pub fn empty(dim: usize) -> Self {
        Frame(Matrix::zeros(dim, 0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn rank(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn column(&self, i: usize) -> Vector {
        self.0.column(i).into_owned()
    }

    /// Flip every column.
    pub fn negated(&self) -> Frame {
        Frame(-&self.0)
    }

    /// Right-multiply by a `k x k` matrix.
    pub fn transform(&self, m: &Matrix) -> Frame {
        Frame(&self.0 * m)
    }

    /// Maximum deviation of `F^T F` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.0.transpose() * &self.0;
        let k = gram.nrows();
        (&gram - Matrix::identity(k, k)).amax()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, column `i` belongs to `eigenvalues[i]`.
    pub basis: Frame,
    /// Number of strictly negative eigenvalues.
    pub stable_count: usize,
}

impl SpectralDecomposition {
    /// Eigenvectors of the strictly negative eigenvalues.
    pub fn negative_frame(&self) -> Frame {
        let cols: Vec<Vector> = (0..self.stable_count)
            .map(|i| self.basis.column(i))
            .collect();
        frame_or_empty(self.basis.dim(), &cols)
    }

    /// Eigenvectors of the strictly positive eigenvalues, largest eigenvalue first.
    pub fn positive_frame(&self) -> Frame {
        let cols: Vec<Vector> = (0..self.eigenvalues.len())
            .rev()
            .filter(|&i| self.eigenvalues[i] > 0.0)
            .map(|i| self.basis.column(i))
            .collect();
        frame_or_empty(self.basis.dim(), &cols)
    }

    /// `min |mu_i|`.
    pub fn smallest_magnitude(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

fn frame_or_empty(dim: usize, cols: &[Vector]) -> Frame {
    if cols.is_empty() {
        Frame::empty(dim)
    } else {
        Frame::from_columns(cols)
    }
}

fn require_square(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Contract(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Flip `v` so that its first entry of non-negligible magnitude is positive.
pub fn canonical_sign(v: &mut Vector) {
    let scale = v.amax();
    if scale == 0.0 {
        return;
    }
    if let Some(lead) = v.iter().find(|x| x.abs() > 1e-10 * scale) {
        if *lead < 0.0 {
            v.neg_mut();
        }
    }
}

/// Apply [`canonical_sign`] to every column of a frame.
pub fn canonicalize_columns(f: &Frame) -> Frame {
    let cols: Vec<Vector> = (0..f.rank())
        .map(|i| {
            let mut c = f.column(i);
            canonical_sign(&mut c);
            c
        })
        .collect();
    frame_or_empty(f.dim(), &cols)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come back ascending. Each eigenvector has a positive leading
/// entry; within a cluster of equal eigenvalues the lexicographically larger
/// vector comes first.
pub fn sym_eig(m: &Matrix) -> Result<SpectralDecomposition> {
    require_square(m)?;
    let n = m.nrows();
    let scale = m.norm();
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Contract(format!(
            "sym_eig needs a symmetric matrix (asymmetry {asym:e})"
        )));
    }

    let mut a = (m + m.transpose()) * 0.5;
    let mut v = Matrix::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let tie = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut pairs: Vec<(f64, Vector)> = (0..n)
        .map(|i| {
            let mut col = v.column(i).into_owned();
            canonical_sign(&mut col);
            (a[(i, i)], col)
        })
        .collect();
    pairs.sort_by(|x, y| {
        if (x.0 - y.0).abs() <= tie {
            lex_cmp(&y.1, &x.1)
        } else {
            x.0.total_cmp(&y.0)
        }
    });

    let stable_count = pairs.iter().filter(|(mu, _)| *mu < 0.0).count();
    let eigenvalues = pairs.iter().map(|(mu, _)| *mu).collect();
    let cols: Vec<Vector> = pairs.into_iter().map(|(_, c)| c).collect();
    Ok(SpectralDecomposition {
        eigenvalues,
        basis: frame_or_empty(n, &cols),
        stable_count,
    })
}

fn lex_cmp(a: &Vector, b: &Vector) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        if (x - y).abs() > 1e-12 {
            return x.total_cmp(y);
        }
    }
    std::cmp::Ordering::Equal
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    require_square(m)?;
    let n = m.nrows();
    let ident = Matrix::identity(n, n);
    let norm1 = one_norm(m);
    if norm1 == 0.0 {
        return Ok(ident);
    }
    const THETA13: f64 = 5.371920351148152;
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = m / 2f64.powi(s);
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Singular("Padé denominator in expm".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

pub fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Thin singular value decomposition `m = u diag(singular_values) v^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: Matrix,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

/// Thin SVD by one-sided Jacobi rotations.
///
/// Small singular values come out with high relative accuracy, which the
/// rank decisions and transversality margins rely on. Left singular vectors
/// of exactly zero singular values are completed to an orthonormal set.
pub fn svd(m: &Matrix) -> Svd {
    if m.nrows() < m.ncols() {
        let t = svd(&m.transpose());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let (r, c) = m.shape();
    let mut a = m.clone();
    let mut v = Matrix::identity(c, c);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..c {
            for q in (p + 1)..c {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for k in 0..r {
                    let (x, y) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cs * x - sn * y;
                    a[(k, q)] = sn * x + cs * y;
                }
                for k in 0..c {
                    let (x, y) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = cs * x - sn * y;
                    v[(k, q)] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = (0..c).map(|i| (a.column(i).norm(), i)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut u = Matrix::zeros(r, c);
    let mut vs = Matrix::zeros(c, c);
    let mut missing = Vec::new();
    for (j, &(sigma, i)) in order.iter().enumerate() {
        vs.set_column(j, &v.column(i));
        if sigma > 0.0 {
            u.set_column(j, &(a.column(i) / sigma));
        } else {
            missing.push(j);
        }
    }
    let mut basis = 0;
    for j in missing {
        while basis < r {
            let mut e = Vector::zeros(r);
            e[basis] = 1.0;
            basis += 1;
            for _ in 0..2 {
                for k in 0..c {
                    let uk = u.column(k).into_owned();
                    e -= &uk * uk.dot(&e);
                }
            }
            let n = e.norm();
            if n > 0.5 {
                u.set_column(j, &(e / n));
                break;
            }
        }
    }
    Svd {
        u,
        singular_values: order.iter().map(|&(s, _)| s).collect(),
        v: vs,
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    svd(m).singular_values[0]
}

/// Smallest singular value of a (possibly rectangular) matrix.
pub fn smallest_singular_value(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    *svd(m).singular_values.last().expect("non-empty")
}

/// Thin QR with positive `R` diagonal via twice-iterated modified Gram–Schmidt.
///
/// Returns `None` if a diagonal entry of `R` falls below `min_diag`, together
/// with the offending value.
pub(crate) fn gram_schmidt(
    f: &Matrix,
    min_diag: f64,
) -> std::result::Result<(Matrix, Matrix), f64> {
    let (d, k) = f.shape();
    let mut q = f.clone();
    let mut r = Matrix::zeros(k, k);
    for j in 0..k {
        for _pass in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                r[(i, j)] += proj;
                let qi = q.column(i).into_owned();
                q.column_mut(j).axpy(-proj, &qi, 1.0);
            }
        }
        let nrm = q.column(j).norm();
        if !(nrm > min_diag) {
            return Err(nrm);
        }
        r[(j, j)] = nrm;
        q.column_mut(j).scale_mut(1.0 / nrm);
    }
    debug_assert_eq!(q.nrows(), d);
    Ok((q, r))
}

/// QR factorisation `F = Q R` with orthonormal `Q` and positive `R` diagonal.
pub fn orthonormalize(f: &Frame) -> Result<(Frame, Matrix)> {
    let sigma = smallest_singular_value(f.matrix());
    if f.rank() > 0 && !(sigma > RANK_TOL) {
        return Err(Error::RankDeficient {
            smallest_singular_value: sigma,
        });
    }
    match gram_schmidt(f.matrix(), 0.0) {
        Ok((q, r)) => Ok((Frame(q), r)),
        Err(_) => Err(Error::RankDeficient {
            smallest_singular_value: sigma,
        }),
    }
}

/// Sign of a determinant, with `|det| <= zero_tol` reported as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedDet {
    pub sign: i8,
    pub value: f64,
}

pub fn det_sign(m: &Matrix, zero_tol: f64) -> Result<SignedDet> {
    require_square(m)?;
    let value = if m.nrows() == 0 { 1.0 } else { m.determinant() };
    let sign = if value.abs() <= zero_tol {
        0
    } else if value > 0.0 {
        1
    } else {
        -1
    };
    Ok(SignedDet { sign, value })
}

/// Largest principal angle between the spans of two orthonormal frames of
/// equal rank.
pub fn principal_angle(a: &Frame, b: &Frame) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a.rank() != b.rank() {
        return Err(Error::DimensionMismatch {
            expected: a.rank(),
            got: b.rank(),
        });
    }
    if a.rank() == 0 {
        return Ok(0.0);
    }
    let pa = a.matrix();
    let residual = b.matrix() - pa * (pa.transpose() * b.matrix());
    Ok(spectral_norm(&residual).min(1.0).asin())
}

/// Orthogonal factor `R` maximising `tr((F R)^T G)`: the polar factor of `F^T G`.
pub fn procrustes(f: &Frame, g: &Frame) -> Matrix {
    let m = f.matrix().transpose() * g.matrix();
    let k = m.nrows();
    if k == 0 {
        return Matrix::zeros(0, 0);
    }
    let d = svd(&m);
    let r = d.u * d.v.transpose();
    debug_assert_eq!(r.shape(), (k, k));
    r
}

/// Range basis of `m`: left singular vectors with singular value above `tol`.
pub fn range_frame(m: &Matrix, tol: f64) -> Frame {
    if m.is_empty() {
        return Frame::empty(m.nrows());
    }
    let dec = svd(m);
    let cols: Vec<Vector> = (0..dec.singular_values.len())
        .filter(|&i| dec.singular_values[i] > tol)
        .map(|i| dec.u.column(i).into_owned())
        .collect();
    canonicalize_columns(&frame_or_empty(m.nrows(), &cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_row_slice(v))
    }

    #[test]
    fn sym_eig_diag() {
        let e = sym_eig(&diag(&[-1.0, 1.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 1.0]);
        assert_eq!(e.basis.column(0), Vector::from_row_slice(&[1.0, 0.0]));
        assert_eq!(e.basis.column(1), Vector::from_row_slice(&[0.0, 1.0]));
        assert_eq!(e.stable_count, 1);
    }

    #[test]
    fn sym_eig_identity_ties() {
        let e = sym_eig(&Matrix::identity(2, 2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
        assert_eq!(e.basis.column(0), Vector::from_row_slice(&[1.0, 0.0]));
        assert_eq!(e.stable_count, 0);
    }

    #[test]
    fn sym_eig_reflection_half_angle() {
        let th = std::f64::consts::FRAC_PI_2;
        let c = Matrix::from_row_slice(2, 2, &[th.cos(), th.sin(), th.sin(), -th.cos()]);
        let e = sym_eig(&c).unwrap();
        let v = e.positive_frame().column(0);
        let h = th / 2.0;
        assert!((v[0] - h.cos()).abs() < 1e-12 && (v[1] - h.sin()).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sym_eig_rejects_nonsymmetric() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eig(&m), Err(Error::Contract(_))));
    }

    #[test]
    fn expm_examples() {
        assert_eq!(expm(&Matrix::zeros(3, 3)).unwrap(), Matrix::identity(3, 3));
        let e = expm(&diag(&[1.0, -2.0])).unwrap();
        assert!((e[(0, 0)] - 1f64.exp()).abs() < 1e-14 * 1f64.exp());
        assert!((e[(1, 1)] - (-2f64).exp()).abs() < 1e-14);
        assert!(e[(0, 1)].abs() < 1e-15);
        let e = expm(&(diag(&[-1.0, 1.0]) * -0.5)).unwrap();
        assert!((e[(0, 0)] - 0.5f64.exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn expm_large_norm_relative_accuracy() {
        // Rotation generator: exp is a rotation by the angle, oracle cos/sin.
        let w = 47.0;
        let m = Matrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0]);
        let e = expm(&m).unwrap();
        assert!((e[(0, 0)] - w.cos()).abs() < 1e-12);
        assert!((e[(1, 0)] - w.sin()).abs() < 1e-12);
        let e = expm(&diag(&[50.0, -3.0])).unwrap();
        assert!(((e[(0, 0)] - 50f64.exp()) / 50f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn orthonormalize_examples() {
        let (q, r) = orthonormalize(&Frame::new(Matrix::identity(2, 2))).unwrap();
        assert_eq!(q.matrix(), &Matrix::identity(2, 2));
        assert_eq!(r, Matrix::identity(2, 2));

        let (q, r) =
            orthonormalize(&Frame::new(Matrix::from_column_slice(2, 1, &[3.0, 4.0]))).unwrap();
        assert!((q.matrix()[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((q.matrix()[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((r[(0, 0)] - 5.0).abs() < 1e-15);

        let f = Matrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let (q, r) = orthonormalize(&Frame::new(f)).unwrap();
        assert!((q.matrix() - Matrix::identity(2, 2)).amax() < 1e-15);
        assert!((r - Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn orthonormalize_rank_deficient() {
        let f = Matrix::from_column_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        match orthonormalize(&Frame::new(f)) {
            Err(Error::RankDeficient {
                smallest_singular_value,
            }) => {
                assert!(smallest_singular_value < 1e-13)
            }
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn det_sign_examples() {
        assert_eq!(det_sign(&Matrix::identity(4, 4), 1e-12).unwrap().sign, 1);
        assert_eq!(det_sign(&diag(&[-1.0, 1.0, 1.0]), 1e-12).unwrap().sign, -1);
        let h = std::f64::consts::FRAC_PI_4;
        let m = Matrix::from_row_slice(2, 2, &[h.sin(), h.cos(), h.cos(), h.sin()]);
        let d = det_sign(&m, 1e-12).unwrap();
        assert_eq!(d.sign, 0);
        assert!(d.value.abs() < 1e-15);
    }

    #[test]
    fn principal_angle_and_procrustes() {
        let a = Frame::new(Matrix::from_column_slice(2, 1, &[1.0, 0.0]));
        let t: f64 = 0.3;
        let b = Frame::new(Matrix::from_column_slice(2, 1, &[t.cos(), t.sin()]));
        assert!((principal_angle(&a, &b).unwrap() - t).abs() < 1e-14);
        let r = procrustes(&b.negated(), &a);
        assert_eq!(r[(0, 0)], -1.0);
    }

    #[test]
    fn range_frame_of_projector() {
        let p = Matrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let f = range_frame(&p, 0.5);
        assert_eq!(f.rank(), 1);
        let s = 0.5f64.sqrt();
        assert!((f.column(0) - Vector::from_row_slice(&[s, s])).amax() < 1e-14);
    }

    #[test]
    fn svd_of_nearly_rank_one_projector() {
        // Complementary projector of a symmetric 2x2 matrix; its range is the
        // eigenvector of the negative eigenvalue.
        let m = Matrix::from_row_slice(
            2,
            2,
            &[
                0.6642707946063794,
                0.12128189457261182,
                0.12128189457261182,
                -2.955533736488439,
            ],
        );
        let e = sym_eig(&m).unwrap();
        let v = e.basis.column(0);
        let q = &v * v.transpose();
        let d = svd(&q);
        assert!((d.singular_values[0] - 1.0).abs() < 1e-14);
        assert!(d.singular_values[1] < 1e-15);
        let f = range_frame(&q, 0.5);
        assert_eq!(f.rank(), 1);
        assert!(principal_angle(&f, &e.negative_frame()).unwrap() < 1e-14);
    }

    #[test]
    fn svd_completes_null_directions() {
        let d = svd(&diag(&[0.0, 2.0, 0.0]));
        assert_eq!(d.singular_values, vec![2.0, 0.0, 0.0]);
        assert!((d.u.transpose() * &d.u - Matrix::identity(3, 3)).amax() < 1e-15);
        let wide = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let w = svd(&wide);
        assert_eq!(w.u.shape(), (2, 2));
        assert_eq!(w.v.shape(), (3, 2));
        let r = &w.u
            * Matrix::from_diagonal(&Vector::from_vec(w.singular_values.clone()))
            * w.v.transpose();
        assert!((r - wide).amax() < 1e-14);
    }
}
