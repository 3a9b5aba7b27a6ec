//! Dense complex linear algebra on small Hilbert spaces.
//!
//! Everything here is plain row-major storage over [`Complex64`]: matrix
//! products, adjoints, traces, Kronecker (tensor) products, partial traces,
//! and a Jacobi eigensolver for self-adjoint matrices. Dimensions are meant
//! to stay small (a few hundred at most), so no sparse formats and no BLAS.

pub use num_complex::Complex64;
use thiserror::Error;

/// Default tolerance for structural predicates (self-adjointness, projector
/// idempotence, unit trace).
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_JACOBI_SWEEPS: usize = 64;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("matrix is not self-adjoint within tolerance {tol}")]
    NotSelfAdjoint { tol: f64 },
    #[error("eigensolver failed to converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("cannot normalize a vector with near-zero norm {0}")]
    ZeroNorm(f64),
    #[error("factor dimensions {dims:?} do not multiply to {total}")]
    BadFactorization { dims: Vec<usize>, total: usize },
    #[error("keep indices {0:?} must be strictly increasing and in range")]
    BadKeepSet(Vec<usize>),
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::InvalidDimension("dim must be >= 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(LinalgError::InvalidDimension(format!(
                "expected {} entries for dim {}, got {}",
                dim * dim,
                dim,
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from real entries, row-major.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self, LinalgError> {
        Self::new(dim, entries.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dim != other.dim {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.entries[i * n + k];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += aik * other.entries[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dim != other.dim {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dim != other.dim {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    /// Kronecker product. Row/column index layout is
    /// `(i_left * other.dim + i_right)`, so the entry at
    /// `(i1*db + i2, j1*db + j2)` equals `a.get(i1, j1) * b.get(i2, j2)`.
    pub fn tensor(&self, other: &Self) -> Self {
        let (da, db) = (self.dim, other.dim);
        let n = da * db;
        let mut out = Self::zeros(n);
        for i1 in 0..da {
            for j1 in 0..da {
                let a = self.entries[i1 * da + j1];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i2 in 0..db {
                    for j2 in 0..db {
                        out.entries[(i1 * db + i2) * n + (j1 * db + j2)] =
                            a * other.entries[i2 * db + j2];
                    }
                }
            }
        }
        out
    }

    /// Trace out the factors not listed in `keep`. `dims` are the tensor
    /// factor dimensions in Kronecker order (must multiply to `self.dim`),
    /// `keep` is a strictly increasing list of factor indices to retain.
    /// An empty `keep` reduces to the full trace as a 1x1 matrix.
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<Self, LinalgError> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || total != self.dim || dims.contains(&0) {
            return Err(LinalgError::BadFactorization {
                dims: dims.to_vec(),
                total: self.dim,
            });
        }
        let increasing = keep.windows(2).all(|w| w[0] < w[1]);
        if !increasing || keep.iter().any(|&k| k >= dims.len()) {
            return Err(LinalgError::BadKeepSet(keep.to_vec()));
        }
        let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
        let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
        let traced_dim: usize = traced.iter().map(|&k| dims[k]).product();

        // Strides of each factor in the flat index.
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }

        let flat = |multi: &[usize], subset: &[usize], base: &mut usize| {
            for (pos, &factor) in subset.iter().enumerate() {
                *base += multi[pos] * strides[factor];
            }
        };

        let unrank = |mut r: usize, subset: &[usize]| -> Vec<usize> {
            let mut multi = vec![0usize; subset.len()];
            for pos in (0..subset.len()).rev() {
                let d = dims[subset[pos]];
                multi[pos] = r % d;
                r /= d;
            }
            multi
        };

        let mut out = Self::zeros(kept_dim.max(1));
        for ik in 0..kept_dim.max(1) {
            let ik_multi = unrank(ik, keep);
            for jk in 0..kept_dim.max(1) {
                let jk_multi = unrank(jk, keep);
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..traced_dim.max(1) {
                    let t_multi = unrank(t, &traced);
                    let mut row = 0usize;
                    let mut col = 0usize;
                    flat(&ik_multi, keep, &mut row);
                    flat(&t_multi, &traced, &mut row);
                    flat(&jk_multi, keep, &mut col);
                    flat(&t_multi, &traced, &mut col);
                    acc += self.entries[row * self.dim + col];
                }
                out.entries[ik * kept_dim.max(1) + jk] = acc;
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector, LinalgError> {
        if self.dim != v.dim() {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim,
                right: v.dim(),
            });
        }
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.entries[i * n + j] * v.entries[j];
            }
            *slot = acc;
        }
        Ok(ComplexVector::new(out))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in i..n {
                if (self.entries[i * n + j] - self.entries[j * n + i].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        if !self.is_self_adjoint(tol) {
            return false;
        }
        match self.matmul(self) {
            Ok(sq) => sq.max_abs_diff(self) <= tol,
            Err(_) => false,
        }
    }

    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        if !self.is_self_adjoint(tol) {
            return false;
        }
        match self.eigendecompose_self_adjoint(tol) {
            Ok(pairs) => pairs.iter().all(|(lambda, _)| *lambda >= -tol),
            Err(_) => false,
        }
    }

    pub fn is_unit_trace(&self, tol: f64) -> bool {
        (self.trace() - Complex64::new(1.0, 0.0)).norm() <= tol
    }

    /// Eigendecomposition of a self-adjoint matrix via cyclic complex Jacobi
    /// rotations. Eigenvalues are returned ascending; eigenvectors are
    /// orthonormal, with the phase fixed so that the first component of
    /// magnitude above `tol` is real and positive.
    pub fn eigendecompose_self_adjoint(
        &self,
        tol: f64,
    ) -> Result<Vec<(f64, ComplexVector)>, LinalgError> {
        if !self.is_self_adjoint(tol) {
            return Err(LinalgError::NotSelfAdjoint { tol });
        }
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut v = Self::identity(n).entries;
        let scale = self.max_abs().max(1.0);
        let threshold = 1e-14 * scale;

        let mut converged = false;
        for _ in 0..MAX_JACOBI_SWEEPS {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a[p * n + q].norm());
                }
            }
            if off <= threshold {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    let r = apq.norm();
                    if r <= threshold * 1e-2 {
                        continue;
                    }
                    let phase = apq / r;
                    let app = a[p * n + p].re;
                    let aqq = a[q * n + q].re;
                    // tan(2*theta) = 2r / (app - aqq) zeroes the (p,q) entry.
                    let theta = 0.5 * (2.0 * r).atan2(app - aqq);
                    let c = Complex64::new(theta.cos(), 0.0);
                    let s = Complex64::new(theta.sin(), 0.0);

                    for k in 0..n {
                        let x = a[p * n + k];
                        let y = a[q * n + k];
                        a[p * n + k] = c * x + s * phase * y;
                        a[q * n + k] = -s * phase.conj() * x + c * y;
                    }
                    for k in 0..n {
                        let x = a[k * n + p];
                        let y = a[k * n + q];
                        a[k * n + p] = c * x + s * phase.conj() * y;
                        a[k * n + q] = -s * phase * x + c * y;
                    }
                    a[p * n + q] = Complex64::new(0.0, 0.0);
                    a[q * n + p] = Complex64::new(0.0, 0.0);
                    a[p * n + p] = Complex64::new(a[p * n + p].re, 0.0);
                    a[q * n + q] = Complex64::new(a[q * n + q].re, 0.0);

                    for k in 0..n {
                        let x = v[k * n + p];
                        let y = v[k * n + q];
                        v[k * n + p] = c * x + s * phase.conj() * y;
                        v[k * n + q] = -s * phase * x + c * y;
                    }
                }
            }
        }
        if !converged {
            return Err(LinalgError::NoConvergence(MAX_JACOBI_SWEEPS));
        }

        let mut pairs: Vec<(f64, ComplexVector)> = (0..n)
            .map(|i| {
                let lambda = a[i * n + i].re;
                let column = ComplexVector::new((0..n).map(|k| v[k * n + i]).collect());
                (lambda, column.phase_fixed(tol))
            })
            .collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("eigenvalues are finite"));
        Ok(pairs)
    }

    /// Extract the normalized principal column of a rank-one self-adjoint
    /// matrix `|v><v|` without a full eigendecomposition: take the column
    /// under the largest diagonal entry and renormalize.
    pub fn principal_column(&self, tol: f64) -> Result<ComplexVector, LinalgError> {
        let n = self.dim;
        let (j0, diag) = (0..n)
            .map(|j| (j, self.entries[j * n + j].re))
            .fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
        if diag <= 0.0 {
            return Err(LinalgError::ZeroNorm(diag));
        }
        let column = ComplexVector::new((0..n).map(|i| self.entries[i * n + j0]).collect());
        Ok(column.normalized()?.phase_fixed(tol))
    }
}

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Computational basis vector |index> in the given dimension.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[index] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real(entries: &[f64]) -> Self {
        Self {
            entries: entries.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize) -> Complex64 {
        self.entries[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: Complex64) {
        self.entries[i] = value;
    }

    /// Inner product `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn normalized(&self) -> Result<Self, LinalgError> {
        let n = self.norm();
        if n < 1e-150 {
            return Err(LinalgError::ZeroNorm(n));
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    /// Kronecker product of vectors; layout matches [`ComplexMatrix::tensor`].
    pub fn tensor(&self, other: &Self) -> Self {
        let mut entries = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.entries {
            for b in &other.entries {
                entries.push(a * b);
            }
        }
        Self { entries }
    }

    /// Outer product `|self><other|`.
    pub fn outer(&self, other: &Self) -> ComplexMatrix {
        let n = self.dim();
        debug_assert_eq!(n, other.dim());
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.entries[i * n + j] = self.entries[i] * other.entries[j].conj();
            }
        }
        m
    }

    /// Multiply by a global phase so the first component of magnitude above
    /// `tol` becomes real and positive.
    pub fn phase_fixed(&self, tol: f64) -> Self {
        for e in &self.entries {
            let r = e.norm();
            if r > tol {
                let phase = e.conj() / r;
                return self.scale(phase);
            }
        }
        self.clone()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Pauli matrices and the 2x2 identity, used all over the test suites and
/// by the builtin observables.
pub mod pauli {
    use super::ComplexMatrix;
    use num_complex::Complex64;

    pub fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::new(
            2,
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap()
    }

    pub fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matmul_identity_and_pauli() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.matmul(&i2).unwrap(), i2);
        // sigma_x squared is the identity
        let sx = pauli::sigma_x();
        assert!(sx.matmul(&sx).unwrap().max_abs_diff(&i2) < 1e-15);
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert!(a.matmul(&b).is_err());
    }

    #[test]
    fn projector_idempotence() {
        let p = ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(p.matmul(&p).unwrap().max_abs_diff(&p) < 1e-15);
        assert!(p.is_projector(1e-10));
    }

    #[test]
    fn tensor_identities_and_diag() {
        let i2 = ComplexMatrix::identity(2);
        let i3 = ComplexMatrix::identity(3);
        assert_eq!(i2.tensor(&i3), ComplexMatrix::identity(6));

        let d = ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let dd = d.tensor(&d);
        let expect =
            ComplexMatrix::from_real(4, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
                .unwrap();
        assert_eq!(dd, expect);
    }

    #[test]
    fn trace_values_and_multiplicativity() {
        assert_eq!(ComplexMatrix::identity(4).trace(), c(4.0, 0.0));
        assert_eq!(pauli::sigma_z().trace(), c(0.0, 0.0));

        let x = pauli::sigma_x();
        let y = pauli::sigma_y();
        let txy = x.tensor(&y).trace();
        assert!((txy - x.trace() * y.trace()).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_product_state() {
        // rho (x) sigma with tr(sigma) = 1 reduces back to rho.
        let rho = ComplexMatrix::new(2, vec![c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)])
            .unwrap();
        let sigma = ComplexMatrix::from_real(2, &[0.25, 0.0, 0.0, 0.75]).unwrap();
        let joint = rho.tensor(&sigma);
        let reduced = joint.partial_trace(&[2, 2], &[0]).unwrap();
        assert!(reduced.max_abs_diff(&rho) < 1e-14);
    }

    #[test]
    fn partial_trace_bell_state() {
        // |Phi+> = (|00> + |11>)/sqrt(2) traces down to I/2 on either side.
        let mut bell = ComplexVector::zeros(4);
        bell.set(0, c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        bell.set(3, c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        let rho = bell.outer(&bell);
        let reduced = rho.partial_trace(&[2, 2], &[0]).unwrap();
        let half = ComplexMatrix::identity(2).scale(c(0.5, 0.0));
        assert!(reduced.max_abs_diff(&half) < 1e-14);
    }

    #[test]
    fn partial_trace_preserves_trace_and_composes_to_trace() {
        let x = pauli::sigma_x();
        let z = pauli::sigma_z();
        let m = x.tensor(&z).add(&ComplexMatrix::identity(4)).unwrap();
        let reduced = m.partial_trace(&[2, 2], &[1]).unwrap();
        assert!((reduced.trace() - m.trace()).norm() < 1e-13);
        let scalar = m.partial_trace(&[2, 2], &[]).unwrap();
        assert_eq!(scalar.dim(), 1);
        assert!((scalar.get(0, 0) - m.trace()).norm() < 1e-13);
    }

    #[test]
    fn partial_trace_bad_dims() {
        let m = ComplexMatrix::identity(4);
        assert!(m.partial_trace(&[3, 2], &[0]).is_err());
        assert!(m.partial_trace(&[2, 2], &[1, 0]).is_err());
        assert!(m.partial_trace(&[2, 2], &[2]).is_err());
    }

    #[test]
    fn eigendecompose_sigma_z() {
        let pairs = pauli::sigma_z().eigendecompose_self_adjoint(1e-10).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!((pairs[0].0 + 1.0).abs() < 1e-12);
        assert!((pairs[1].0 - 1.0).abs() < 1e-12);
        // |z-> = (0, 1), |z+> = (1, 0) after phase fixing
        assert!(pairs[0].1.max_abs_diff(&ComplexVector::basis(2, 1)) < 1e-12);
        assert!(pairs[1].1.max_abs_diff(&ComplexVector::basis(2, 0)) < 1e-12);
    }

    #[test]
    fn eigendecompose_sigma_x() {
        let pairs = pauli::sigma_x().eigendecompose_self_adjoint(1e-10).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let minus = ComplexVector::from_real(&[s, -s]);
        let plus = ComplexVector::from_real(&[s, s]);
        assert!((pairs[0].0 + 1.0).abs() < 1e-12);
        assert!((pairs[1].0 - 1.0).abs() < 1e-12);
        assert!(pairs[0].1.max_abs_diff(&minus) < 1e-12);
        assert!(pairs[1].1.max_abs_diff(&plus) < 1e-12);
    }

    #[test]
    fn eigendecompose_degenerate_identity() {
        let pairs = ComplexMatrix::identity(2)
            .eigendecompose_self_adjoint(1e-10)
            .unwrap();
        assert!((pairs[0].0 - 1.0).abs() < 1e-14);
        assert!((pairs[1].0 - 1.0).abs() < 1e-14);
        // Reconstruction stays exact despite the degeneracy.
        let recon = pairs
            .iter()
            .fold(ComplexMatrix::zeros(2), |acc, (l, v)| {
                acc.add(&v.outer(v).scale(c(*l, 0.0))).unwrap()
            });
        assert!(recon.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn eigendecompose_rejects_non_self_adjoint() {
        let m = ComplexMatrix::new(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert!(matches!(
            m.eigendecompose_self_adjoint(1e-10),
            Err(LinalgError::NotSelfAdjoint { .. })
        ));
    }

    #[test]
    fn principal_column_of_rank_one() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let xplus = ComplexVector::from_real(&[s, s]);
        let p = xplus.outer(&xplus);
        let v = p.principal_column(1e-10).unwrap();
        assert!(v.max_abs_diff(&xplus) < 1e-12);
    }

    #[test]
    fn phase_fixing_makes_leading_component_positive() {
        let v = ComplexVector::new(vec![c(0.0, 0.6), c(0.8, 0.0)]);
        let fixed = v.phase_fixed(1e-10);
        assert!((fixed.get(0) - c(0.6, 0.0)).norm() < 1e-14);
        assert!((fixed.norm() - 1.0).abs() < 1e-14);
    }
}
