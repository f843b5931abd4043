//! Dense complex linear algebra helpers on top of nalgebra.
//!
//! Eigen-decompositions here are always Hermitian, sorted in descending
//! order and phase-canonicalized so that results are reproducible.

use std::cmp::Ordering;

use nalgebra::{Cholesky, Complex, ComplexField, DMatrix, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::scalar::{count, eps, lit, CMat, CVec, Real};

/// Hermitian part `(m + m^H) / 2`.
pub fn hermitian_part<T: Real>(m: &CMat<T>) -> CMat<T> {
    let half = Complex::new(lit::<T>(0.5), T::zero());
    (m + m.adjoint()) * half
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect<T: Real>(m: &CMat<T>) -> T {
    let mut worst = T::zero();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).modulus();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// `a b^H`.
pub fn outer<T: Real>(a: &CVec<T>, b: &CVec<T>) -> CMat<T> {
    a * b.adjoint()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMat<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// The first `k` eigenvectors.
    pub fn leading(&self, k: usize) -> CMat<T> {
        self.vectors.columns(0, k).into_owned()
    }

    /// The trailing `dim - k` eigenvectors.
    pub fn trailing(&self, k: usize) -> CMat<T> {
        let n = self.dim();
        self.vectors.columns(k, n - k).into_owned()
    }
}

/// Rotates `v` so that its first entry of non-negligible magnitude is real
/// and positive.
pub fn canonicalize_phase<T: Real>(v: &mut CVec<T>) {
    let norm = v.norm();
    if norm <= T::zero() {
        return;
    }
    let floor = eps::<T>().sqrt() * norm;
    if let Some(pivot) = v.iter().copied().find(|z| z.modulus() > floor) {
        let rot = pivot.conj() / Complex::new(pivot.modulus(), T::zero());
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

fn lex_cmp<T: Real>(a: &CVec<T>, b: &CVec<T>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Hermitian eigen-decomposition with descending eigenvalues.
///
/// Eigenvalues closer than `1e-10` (relative to the spectral radius) are
/// treated as tied; tied eigenvectors are ordered lexicographically after
/// phase canonicalization while the values stay sorted.
pub fn hermitian_eigen<T: Real>(m: &CMat<T>) -> Result<HermitianEigen<T>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigen-decomposition of a {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: CMat::zeros(0, 0) });
    }
    let h = hermitian_part(m);
    let eig = SymmetricEigen::try_new(h, eps::<T>(), 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigen-decomposition did not converge".into()))?;

    let mut pairs: Vec<(T, CVec<T>)> = (0..n)
        .map(|i| {
            let mut v: CVec<T> = eig.eigenvectors.column(i).into_owned();
            canonicalize_phase(&mut v);
            (eig.eigenvalues[i], v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let values: Vec<T> = pairs.iter().map(|p| p.0).collect();

    let scale = pairs.iter().fold(T::one(), |acc, p| if p.0.abs() > acc { p.0.abs() } else { acc });
    let tie = lit::<T>(1e-10) * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end - 1].0 - pairs[end].0 <= tie {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1));
        }
        start = end;
    }

    let mut vectors = CMat::zeros(n, n);
    for (j, (_, vec)) in pairs.into_iter().enumerate() {
        vectors.set_column(j, &vec);
    }
    Ok(HermitianEigen { values, vectors })
}

/// Moore-Penrose pseudo-inverse with the usual `max(m, n) * eps * sigma_max`
/// cutoff.
pub fn pinv<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(CMat::zeros(c, r));
    }
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &s| if s > a { s } else { a });
    let cutoff = count::<T>(r.max(c)) * eps::<T>() * smax;
    if smax <= T::zero() {
        return Ok(CMat::zeros(c, r));
    }
    svd.pseudo_inverse(cutoff).map_err(|e| Error::Numerical(e.to_string()))
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(m: &CMat<T>) -> Vec<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<T> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    s
}

/// Natural log-determinant of a Hermitian positive definite matrix, or
/// `None` when the Cholesky factorization fails.
pub fn log_det_hpd<T: Real>(m: &CMat<T>) -> Option<T> {
    let chol = Cholesky::new(hermitian_part(m))?;
    let l = chol.l_dirty();
    let mut acc = T::zero();
    for i in 0..l.nrows() {
        let d = l[(i, i)].re;
        if d <= T::zero() {
            return None;
        }
        acc += d.ln();
    }
    Some(acc + acc)
}

/// Projects a Hermitian matrix onto the PSD cone by clipping negative
/// eigenvalues at zero.
pub fn project_psd<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    let eig = hermitian_eigen(m)?;
    if eig.values.iter().all(|&v| v >= T::zero()) {
        return Ok(hermitian_part(m));
    }
    let mut out = CMat::zeros(n, n);
    for (j, &v) in eig.values.iter().enumerate() {
        if v > T::zero() {
            let u = eig.vectors.column(j);
            out += (u * u.adjoint()) * Complex::new(v, T::zero());
        }
    }
    Ok(hermitian_part(&out))
}

/// Sine of the largest principal angle between the column spans of two
/// matrices with orthonormal columns.
pub fn max_principal_sine<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    let n = a.nrows();
    let proj = CMat::<T>::identity(n, n) - a * a.adjoint();
    let resid = proj * b;
    singular_values(&resid).first().copied().unwrap_or_else(T::zero)
}

/// Largest deviation of `Q^H Q` from the identity.
pub fn orthonormality_defect<T: Real>(q: &CMat<T>) -> T {
    let g = q.adjoint() * q;
    let k = g.nrows();
    let mut worst = T::zero();
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { Complex::new(T::one(), T::zero()) } else { Complex::new(T::zero(), T::zero()) };
            let d = (g[(i, j)] - target).modulus();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

fn horner<T: Real>(coeffs: &[Complex<T>], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    let mut p = zero;
    let mut dp = zero;
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of the polynomial with coefficients listed from the highest
/// degree down, via simultaneous Aberth-Ehrlich iteration.
pub fn poly_roots<T: Real>(coeffs: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let scale = coeffs.iter().fold(T::zero(), |a, c| if c.modulus() > a { c.modulus() } else { a });
    if scale <= T::zero() {
        return Err(Error::InvalidArgument("zero polynomial".into()));
    }
    let tiny = eps::<T>() * scale;
    let first = coeffs.iter().position(|c| c.modulus() > tiny).unwrap_or(coeffs.len());
    let last = coeffs.iter().rposition(|c| c.modulus() > tiny).unwrap_or(0);
    let zero_roots = coeffs.len() - 1 - last;
    let trimmed: Vec<Complex<T>> = coeffs[first..=last].iter().map(|&c| c / coeffs[first]).collect();
    let degree = trimmed.len() - 1;

    let mut roots: Vec<Complex<T>> = Vec::with_capacity(degree + zero_roots);
    if degree > 0 {
        let radius = trimmed[degree].modulus().powf(T::one() / count::<T>(degree));
        let radius = if radius > T::zero() { radius } else { T::one() };
        let two_pi = T::two_pi();
        let mut z: Vec<Complex<T>> = (0..degree)
            .map(|k| {
                let ang = two_pi * count::<T>(k) / count::<T>(degree) + lit::<T>(0.4);
                Complex::new(radius * ang.cos(), radius * ang.sin())
            })
            .collect();

        let one = Complex::new(T::one(), T::zero());
        let tol = lit::<T>(4.0) * eps::<T>();
        for _ in 0..2000 {
            let mut max_step = T::zero();
            for i in 0..degree {
                let (p, dp) = horner(&trimmed, z[i]);
                if p.modulus() == T::zero() {
                    continue;
                }
                let ratio = p / dp;
                let mut s = Complex::new(T::zero(), T::zero());
                for j in 0..degree {
                    if j != i {
                        let d = z[i] - z[j];
                        if d.modulus() > T::zero() {
                            s += one / d;
                        }
                    }
                }
                let step = ratio / (one - ratio * s);
                if !(step.re.is_finite() && step.im.is_finite()) {
                    continue;
                }
                z[i] -= step;
                let rel = step.modulus() / (T::one() + z[i].modulus());
                if rel > max_step {
                    max_step = rel;
                }
            }
            if max_step <= tol {
                break;
            }
        }
        roots.extend(z);
    }
    roots.extend(std::iter::repeat_n(Complex::new(T::zero(), T::zero()), zero_roots));
    Ok(roots)
}

/// Real matrix helper used by the non-negative least squares solver.
pub(crate) fn real_lstsq<T: Real>(a: &DMatrix<T>, b: &nalgebra::DVector<T>) -> Result<nalgebra::DVector<T>> {
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.iter().fold(T::zero(), |acc, &s| if s > acc { s } else { acc });
    let cutoff = count::<T>(a.nrows().max(a.ncols())) * eps::<T>() * smax;
    svd.solve(b, cutoff).map_err(|e| Error::Numerical(e.to_string()))
}
