//! Shared dense/sparse linear-algebra plumbing.
//!
//! Holds the discrete energy-space weights and their Cholesky factor, a
//! minimal row-major sparse matrix, and the iterative kernels used by the
//! spectral module (smallest singular value via inverse power iteration on
//! the normal equations).

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

use crate::{Error, Result, C64};

/// Weights of the discrete energy inner product.
///
/// The L² part is a lumped (trapezoid) weight per degree of freedom; the
/// H¹ part is a cell-difference quadratic form over a contiguous block of
/// `v` degrees of freedom:
///
/// ⟨a, b⟩_H = Σ_i l2[i]·a_i·conj(b_i) + Σ_cells (Δa)(conj Δb)/h_v
///
/// where the cell sum runs over `v_len` cells when the left end of the `v`
/// block is free (the last cell closes onto an implicit Dirichlet zero), or
/// `v_len + 1` cells when both ends are Dirichlet (`v_left_fixed`).
#[derive(Debug, Clone)]
pub struct HWeights {
    /// Per-dof L² weight; zero on the `v` block.
    pub l2: Vec<f64>,
    /// First dof of the `v` (gradient-form) block.
    pub v_start: usize,
    /// Number of `v` dofs.
    pub v_len: usize,
    /// Cell width used in the difference quotients.
    pub v_h: f64,
    /// Whether the value left of `v_start` is an implicit Dirichlet zero.
    pub v_left_fixed: bool,
}

impl HWeights {
    /// Pure L² weights (no gradient block). Used by harness operators.
    pub fn diagonal(l2: Vec<f64>) -> Self {
        HWeights {
            l2,
            v_start: 0,
            v_len: 0,
            v_h: 1.0,
            v_left_fixed: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.l2.len()
    }

    fn in_v(&self, i: usize) -> bool {
        i >= self.v_start && i < self.v_start + self.v_len
    }

    /// ⟨a, b⟩_H for complex coefficient vectors.
    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        assert_eq!(a.len(), self.dim());
        assert_eq!(b.len(), self.dim());
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim() {
            if self.l2[i] != 0.0 {
                acc += self.l2[i] * a[i] * b[i].conj();
            }
        }
        acc + self.grad_inner(a, b)
    }

    /// Gradient-form part of the inner product.
    pub fn grad_inner(&self, a: &[C64], b: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        if self.v_len == 0 {
            return acc;
        }
        let s = self.v_start;
        let e = s + self.v_len;
        if self.v_left_fixed {
            // leading cell (a[s] - 0)
            acc += a[s] * b[s].conj() / self.v_h;
        }
        for k in s..e - 1 {
            let da = a[k + 1] - a[k];
            let db = b[k + 1] - b[k];
            acc += da * db.conj() / self.v_h;
        }
        // trailing cell closes onto the Dirichlet zero at the right end
        acc += a[e - 1] * b[e - 1].conj() / self.v_h;
        acc
    }

    pub fn norm(&self, a: &[C64]) -> f64 {
        self.inner(a, a).re.max(0.0).sqrt()
    }

    /// Cholesky factor R (upper bidiagonal) of the Gram matrix W = Rᵀ R.
    pub fn cholesky(&self) -> CholFactor {
        let n = self.dim();
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n]; // sup[i] couples dof i to i+1
        for (i, d) in diag.iter_mut().enumerate() {
            if !self.in_v(i) {
                assert!(self.l2[i] > 0.0, "L2 weight must be positive on dof {i}");
                *d = self.l2[i].sqrt();
            }
        }
        if self.v_len > 0 {
            // Tridiagonal Gram block: d_j on the diagonal, -1/h off-diagonal.
            let s = self.v_start;
            let inv_h = 1.0 / self.v_h;
            let mut prev = 0.0f64;
            for j in 0..self.v_len {
                let gd = if j == 0 && !self.v_left_fixed {
                    inv_h
                } else {
                    2.0 * inv_h
                };
                let d = (gd - prev * prev).sqrt();
                diag[s + j] = d;
                if j + 1 < self.v_len {
                    let off = -inv_h / d;
                    sup[s + j] = off;
                    prev = off;
                }
            }
        }
        CholFactor { diag, sup }
    }
}

/// Upper-bidiagonal Cholesky factor of the H-weight Gram matrix.
#[derive(Debug, Clone)]
pub struct CholFactor {
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl CholFactor {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// y = R x.
    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            y[i] = self.diag[i] * x[i];
            if i + 1 < n && self.sup[i] != 0.0 {
                y[i] += self.sup[i] * x[i + 1];
            }
        }
        y
    }

    /// x = R⁻¹ y.
    pub fn solve_vec(&self, y: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut x = vec![C64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut rhs = y[i];
            if i + 1 < n && self.sup[i] != 0.0 {
                rhs -= self.sup[i] * x[i + 1];
            }
            x[i] = rhs / self.diag[i];
        }
        x
    }

    /// B = R A (in place on a dense real matrix).
    pub fn mul_mat_left(&self, a: &mut Mat<f64>) {
        let n = self.dim();
        assert_eq!(a.nrows(), n);
        for i in 0..n {
            let s = self.sup[i];
            for j in 0..a.ncols() {
                let mut v = self.diag[i] * a[(i, j)];
                if i + 1 < n && s != 0.0 {
                    v += s * a[(i + 1, j)];
                }
                a[(i, j)] = v;
            }
        }
    }

    /// B = A R⁻¹ (in place), i.e. solves X R = A column by column.
    pub fn solve_mat_right(&self, a: &mut Mat<f64>) {
        let n = self.dim();
        assert_eq!(a.ncols(), n);
        for j in 0..n {
            let d = self.diag[j];
            if j == 0 || self.sup[j - 1] == 0.0 {
                for i in 0..a.nrows() {
                    a[(i, j)] /= d;
                }
            } else {
                let s = self.sup[j - 1];
                for i in 0..a.nrows() {
                    let v = (a[(i, j)] - s * a[(i, j - 1)]) / d;
                    a[(i, j)] = v;
                }
            }
        }
    }
}

/// Row-major sparse real matrix with a fixed dimension.
#[derive(Debug, Clone)]
pub struct SparseRows {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn new(dim: usize) -> Self {
        SparseRows {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.rows[row].push((col, value));
        }
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &(j, a) in row {
                acc += a * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn apply_real(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, a) in row {
                acc += a * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                m[(i, j)] += a;
            }
        }
        m
    }

    /// Dense complex shifted copy A − z·I.
    pub fn to_dense_shifted(&self, z: C64) -> Mat<C64> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                m[(i, j)] += C64::new(a, 0.0);
            }
        }
        for i in 0..self.dim {
            m[(i, i)] -= z;
        }
        m
    }
}

/// Linear operator together with its energy-space weights.
///
/// This is the object the spectral module actually works on; the physical
/// generator, its decoupled blocks, and test harness matrices all reduce
/// to it.
#[derive(Debug, Clone)]
pub struct Operator {
    pub matrix: SparseRows,
    pub weights: HWeights,
}

impl Operator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Diagonal harness operator with identity weights: spectrum known exactly.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut matrix = SparseRows::new(n);
        for (i, &d) in diag.iter().enumerate() {
            matrix.push(i, i, d);
        }
        Operator {
            matrix,
            weights: HWeights::diagonal(vec![1.0; n]),
        }
    }

    /// Dense similarity transform T = R A R⁻¹ mapping the H geometry onto
    /// the Euclidean one: H-norm residuals of A-eigenpairs equal Euclidean
    /// residuals of T-eigenpairs.
    pub fn h_symmetrized(&self) -> (Mat<f64>, CholFactor) {
        let chol = self.weights.cholesky();
        let mut t = self.matrix.to_dense();
        chol.mul_mat_left(&mut t);
        chol.solve_mat_right(&mut t);
        (t, chol)
    }
}

/// Smallest singular value of a dense complex matrix by block inverse
/// power iteration on the normal equations MᴴM, using one LU
/// factorization. The block (default width 3) makes clustered small
/// singular values converge; the estimate is the smallest Ritz value of M
/// on the iterated subspace.
///
/// Deterministic: fixed starting block, no randomness.
pub fn smallest_singular_value(m: &Mat<C64>, rel_tol: f64, max_iter: usize) -> Result<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let b = 3.min(n);
    let lu = m.partial_piv_lu();
    if lu_is_singular(&lu, m) {
        return Err(Error::SingularSolve {
            context: "smallest_singular_value",
        });
    }
    // deterministic quasi-random start block
    let mut z = Mat::<C64>::from_fn(n, b, |i, j| {
        let t = (i as f64 + 1.0) * 0.754_877_666_246_69 + (j as f64) * 0.569_840_290_998;
        C64::new(
            (t * 2.0 * std::f64::consts::PI).cos(),
            (t * std::f64::consts::PI).sin(),
        )
    });
    orthonormalize(&mut z);
    let mut prev = f64::INFINITY;
    let mut sigma = f64::INFINITY;
    let mut hits = 0usize;
    for _ in 0..max_iter {
        // Z ← (MᴴM)⁻¹ Z
        let y = lu.solve_adjoint(&z);
        let mut w = lu.solve(&y);
        if !orthonormalize(&mut w) {
            return Err(Error::SingularSolve {
                context: "smallest_singular_value",
            });
        }
        // Ritz values of M on the subspace: eigenvalues of (MW)ᴴ(MW)
        let mw = m * &w;
        let gram = mw.adjoint() * &mw;
        let evs = gram
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|_| Error::NoConvergence {
                context: "ritz eigenvalues",
                iterations: 0,
                residual: f64::NAN,
            })?;
        let lam_min = evs.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
        sigma = lam_min.sqrt();
        z = w;
        if (sigma - prev).abs() <= rel_tol * sigma.max(f64::MIN_POSITIVE) {
            hits += 1;
            if hits >= 2 {
                return Ok(sigma);
            }
        } else {
            hits = 0;
        }
        prev = sigma;
    }
    Err(Error::NoConvergence {
        context: "smallest_singular_value",
        iterations: max_iter,
        residual: (sigma - prev).abs() / sigma.max(f64::MIN_POSITIVE),
    })
}

/// Modified Gram-Schmidt, two passes. Returns false on rank collapse.
fn orthonormalize(z: &mut Mat<C64>) -> bool {
    let n = z.nrows();
    let b = z.ncols();
    for _pass in 0..2 {
        for j in 0..b {
            for k in 0..j {
                let mut dot = C64::new(0.0, 0.0);
                for i in 0..n {
                    dot += z[(i, k)].conj() * z[(i, j)];
                }
                for i in 0..n {
                    let zik = z[(i, k)];
                    z[(i, j)] -= dot * zik;
                }
            }
            let mut norm = 0.0;
            for i in 0..n {
                norm += z[(i, j)].norm_sqr();
            }
            let norm = norm.sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return false;
            }
            let inv = 1.0 / norm;
            for i in 0..n {
                z[(i, j)] *= inv;
            }
        }
    }
    true
}

/// Crude singularity guard: an LU factor with a zero (or subnormal) pivot
/// relative to the matrix scale cannot be used for solves.
fn lu_is_singular(lu: &PartialPivLu<C64>, m: &Mat<C64>) -> bool {
    let n = m.nrows();
    let mut scale = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            scale = scale.max(m[(i, j)].norm());
        }
    }
    if scale == 0.0 {
        return true;
    }
    let u = lu.U();
    for i in 0..n {
        if u[(i, i)].norm() < 1e-300 * scale.max(1.0) {
            return true;
        }
    }
    false
}

/// Double-double value for cancellation-free identity checks: error-free
/// sums and products keep ~31 significant digits, letting identities that
/// cancel large intermediate terms (like ξ′²) be asserted at 1e-12 of the
/// small remaining scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact product of two f64 (uses FMA).
    pub fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        let e = a.mul_add(b, -p);
        Dd { hi: p, lo: e }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let err = b - (s - a);
        Dd { hi: s, lo: err }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;

    fn add(self, other: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, other.hi);
        let t = Dd::two_sum(self.lo, other.lo);
        let mut r = Dd::quick_two_sum(s.hi, s.lo + t.hi);
        r = Dd::quick_two_sum(r.hi, r.lo + t.lo);
        r
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;

    fn sub(self, other: Dd) -> Dd {
        self + Dd {
            hi: -other.hi,
            lo: -other.lo,
        }
    }
}

/// Both roots of a·ζ² + b·ζ + c = 0 with complex coefficients, using the
/// cancellation-safe variant of the quadratic formula.
pub fn quadratic_roots(a: C64, b: C64, c: C64) -> (C64, C64) {
    let disc = b * b - 4.0 * a * c;
    let sq = disc.sqrt();
    // pick the sign that avoids cancellation in b ± sq
    let q = if (b.conj() * sq).re >= 0.0 {
        -0.5 * (b + sq)
    } else {
        -0.5 * (b - sq)
    };
    if q.norm() == 0.0 {
        (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    } else {
        (q / a, c / q)
    }
}

/// Simple least squares y ≈ intercept + slope·x.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs >= 2 paired samples, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "line fit with degenerate abscissae".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - intercept - slope * xi;
        ss += r * r;
    }
    Ok(LineFit {
        intercept,
        slope,
        rms_residual: (ss / n).sqrt(),
    })
}
