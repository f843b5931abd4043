//! Parametric translation of a sub-6 GHz spatial covariance to a mmWave
//! array.
//!
//! The pipeline counts sources with MDL, estimates per-cluster mean angle and
//! spread with a two-point spread root-MUSIC surrogate, fits cluster powers
//! and a white-noise floor by non-negative least squares, then re-evaluates
//! the closed-form cluster covariances on the mmWave array.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::UlaGeometry;
use crate::covariance::{synthesize_multicluster, theoretical_covariance, CovarianceMatrix, PasKind};
use crate::error::{invalid, mismatch, Error, Result};
use crate::linalg::{poly_roots, real_lstsq};
use crate::scalar::{count, eps, lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterEstimate<T: Real> {
    pub mean_angle: T,
    pub spread: T,
    pub power: T,
}

#[derive(Debug, Clone)]
pub struct TranslationResult<T: Real> {
    /// MDL point-source count.
    pub point_sources: usize,
    /// Cluster count handed to the angle estimator.
    pub num_clusters: usize,
    pub estimates: Vec<ClusterEstimate<T>>,
    pub noise_var: T,
    pub mmwave_cov: CovarianceMatrix<T>,
}

impl<T: Real> TranslationResult<T> {
    /// Number of distinct clusters that received non-zero power.
    pub fn active_clusters(&self) -> usize {
        self.estimates.iter().filter(|e| e.power > T::zero()).count()
    }
}

/// Tunables of [`translate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslationParams {
    /// Snapshots behind the sub-6 GHz covariance estimate (MDL penalty).
    pub num_snapshots: usize,
    pub pas: PasKind,
    /// Spreads above this many radians are treated as estimator failures.
    pub as_threshold: f64,
    /// Multiplier from root-MUSIC half-separation to angle spread.
    pub spread_scale: f64,
}

impl Default for TranslationParams {
    fn default() -> Self {
        Self {
            num_snapshots: 30,
            pas: PasKind::TruncatedGaussian,
            as_threshold: 15f64.to_radians(),
            spread_scale: 1.0,
        }
    }
}

/// Wax-Kailath MDL source count from descending eigenvalues.
pub fn mdl_order<T: Real>(eigenvalues: &[T], num_snapshots: usize) -> Result<usize> {
    let n = eigenvalues.len();
    if n < 2 {
        return Err(invalid("MDL needs at least two eigenvalues"));
    }
    if num_snapshots == 0 {
        return Err(invalid("MDL needs at least one snapshot"));
    }
    if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::NotDescending);
    }
    let top = eigenvalues[0].abs().max(T::one());
    let floor = top * eps::<T>() * eps::<T>();
    let ev: Vec<T> = eigenvalues.iter().map(|&v| v.max(floor)).collect();
    let t = count::<T>(num_snapshots);
    let log_t = t.ln();
    let nn = count::<T>(n);
    let mut best = (T::zero(), 0usize);
    for m in 0..n {
        let tail = &ev[m..];
        let len = count::<T>(tail.len());
        let log_geo = tail.iter().fold(T::zero(), |a, v| a + v.ln()) / len;
        let arith = tail.iter().fold(T::zero(), |a, &v| a + v) / len;
        let mm = count::<T>(m);
        let score = -t * len * (log_geo - arith.ln()) + lit::<T>(0.5) * mm * (lit::<T>(2.0) * nn - mm) * log_t;
        if m == 0 || score < best.0 {
            best = (score, m);
        }
    }
    Ok(best.1)
}

/// `max(floor(point_sources / 2), 1)`.
pub fn cluster_count(point_sources: usize) -> usize {
    (point_sources / 2).max(1)
}

/// Point-source directions by polynomial rooting of the noise subspace,
/// sorted ascending.
pub fn root_music<T: Real>(r: &CovarianceMatrix<T>, num_sources: usize, geom: &UlaGeometry<T>) -> Result<Vec<T>> {
    let n = r.dim();
    if n != geom.num_antennas {
        return Err(mismatch(format!("covariance of size {n} on a {}-element array", geom.num_antennas)));
    }
    if num_sources == 0 || num_sources >= n {
        return Err(invalid(format!("root-MUSIC needs 1 <= sources < {n}, got {num_sources}")));
    }
    let un = r.eigen()?.trailing(num_sources);
    let c = &un * un.adjoint();
    let zero = Complex::new(T::zero(), T::zero());
    // Coefficient of z^k is the sum of the k-th superdiagonal.
    let coeffs: Vec<Complex<T>> = (0..2 * n - 1)
        .map(|idx| {
            let k = n as isize - 1 - idx as isize;
            let mut s = zero;
            for i in 0..n {
                let j = i as isize + k;
                if (0..n as isize).contains(&j) {
                    s += c[(i, j as usize)];
                }
            }
            s
        })
        .collect();
    let roots = poly_roots(&coeffs)?;

    let slack = lit::<T>(1e-6);
    let mut inside: Vec<Complex<T>> = roots.into_iter().filter(|z| z.modulus() <= T::one() + slack).collect();
    inside.sort_by(|a, b| {
        let da = (T::one() - a.modulus()).abs();
        let db = (T::one() - b.modulus()).abs();
        da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
    });

    let max_w = T::two_pi() * geom.spacing;
    let dup = lit::<T>(1e-4);
    let mut chosen: Vec<Complex<T>> = Vec::with_capacity(num_sources);
    let mut angles = Vec::with_capacity(num_sources);
    for z in inside {
        if chosen.len() == num_sources {
            break;
        }
        if chosen.iter().any(|c| (*c - z).modulus() < dup) {
            continue;
        }
        let w = z.im.atan2(z.re);
        let s = w / max_w;
        if s.abs() > T::one() {
            continue;
        }
        chosen.push(z);
        angles.push(s.asin());
    }
    if angles.len() < num_sources {
        return Err(Error::InsufficientRoots { needed: num_sources, found: angles.len() });
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(angles)
}

/// `(mean, spread)` per cluster from root-MUSIC run for two sources per
/// cluster; adjacent sorted angles are paired, sorted by mean.
pub fn spread_root_music<T: Real>(
    r: &CovarianceMatrix<T>,
    num_clusters: usize,
    geom: &UlaGeometry<T>,
    spread_scale: T,
) -> Result<Vec<(T, T)>> {
    if num_clusters == 0 || 2 * num_clusters >= r.dim() {
        return Err(invalid(format!("{num_clusters} clusters need fewer than {} antennas", 2 * num_clusters)));
    }
    let angles = root_music(r, 2 * num_clusters, geom)?;
    let half = lit::<T>(0.5);
    Ok(angles
        .chunks(2)
        .map(|p| ((p[0] + p[1]) * half, spread_scale * (p[1] - p[0]).abs() * half))
        .collect())
}

/// Replaces failed spread estimates by an AoA-only root-MUSIC estimate with
/// zero spread. With `point_source` set every entry is replaced.
pub fn robustify<T: Real>(
    raw: &[(T, T)],
    r: &CovarianceMatrix<T>,
    as_threshold: T,
    geom: &UlaGeometry<T>,
    point_source: bool,
) -> Result<Vec<(T, T)>> {
    if !(as_threshold > T::zero()) {
        return Err(invalid("angle-spread threshold must be positive"));
    }
    let mut single: Option<T> = None;
    let mut out = Vec::with_capacity(raw.len());
    for &(angle, spread) in raw {
        if point_source || spread > as_threshold {
            let a = match single {
                Some(a) => a,
                None => {
                    let a = root_music(r, 1, geom)?[0];
                    single = Some(a);
                    a
                }
            };
            out.push((a, T::zero()));
        } else {
            out.push((angle, spread));
        }
    }
    Ok(out)
}

fn real_composite<T: Real>(m: &CovarianceMatrix<T>) -> Vec<T> {
    let mat = m.mat();
    mat.iter().map(|z| z.re).chain(mat.iter().map(|z| z.im)).collect()
}

/// Lawson-Hanson active-set solution of `min ||A x - b||` subject to `x >= 0`.
pub fn nnls<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> Result<DVector<T>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(mismatch("NNLS right-hand side length"));
    }
    let scale = a.iter().fold(T::zero(), |acc, v| acc.max(v.abs())) * b.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
    let tol = lit::<T>(10.0) * count::<T>(m.max(n)) * eps::<T>() * scale.max(T::one());
    let mut x = DVector::<T>::zeros(n);
    let mut passive = vec![false; n];
    let solve_passive = |passive: &[bool]| -> Result<DVector<T>> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(m, idx.len(), |i, k| a[(i, idx[k])]);
        let zs = real_lstsq(&sub, b)?;
        let mut z = DVector::zeros(n);
        for (k, &j) in idx.iter().enumerate() {
            z[j] = zs[k];
        }
        Ok(z)
    };
    for _outer in 0..3 * n + 10 {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n).filter(|&j| !passive[j]).max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap_or(std::cmp::Ordering::Equal));
        let Some(j) = candidate else { break };
        if w[j] <= tol {
            break;
        }
        passive[j] = true;
        let mut inner = 0;
        loop {
            inner += 1;
            let z = solve_passive(&passive)?;
            if (0..n).filter(|&k| passive[k]).all(|k| z[k] > T::zero()) {
                x = z;
                break;
            }
            let mut alpha = T::one();
            for k in 0..n {
                if passive[k] && z[k] <= T::zero() {
                    let denom = x[k] - z[k];
                    if denom > T::zero() {
                        alpha = alpha.min(x[k] / denom);
                    }
                }
            }
            x = &x + (z - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k] <= tol.min(lit(1e-14)) {
                    passive[k] = false;
                    x[k] = T::zero();
                }
            }
            if inner > 3 * n + 10 {
                break;
            }
        }
    }
    for v in x.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    Ok(x)
}

/// Non-negative cluster powers and noise variance fitting
/// `R ~ sum_c p_c R_c + s I`. Returns `(powers, s)`.
pub fn nnls_powers<T: Real>(r: &CovarianceMatrix<T>, components: &[CovarianceMatrix<T>]) -> Result<(Vec<T>, T)> {
    if components.is_empty() {
        return Err(invalid("no covariance components to fit"));
    }
    let n = r.dim();
    if components.iter().any(|c| c.dim() != n) {
        return Err(mismatch("component size differs from target covariance"));
    }
    let ident = CovarianceMatrix::<T>::identity(n, r.side);
    let cols: Vec<Vec<T>> = components.iter().chain(std::iter::once(&ident)).map(real_composite).collect();
    let rows = 2 * n * n;
    let a = DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]);
    let b = DVector::from_vec(real_composite(r));
    let x = nnls(&a, &b)?;
    let k = components.len();
    Ok((x.iter().take(k).copied().collect(), x[k]))
}

/// Runs the full translation pipeline on a sub-6 GHz receive covariance.
pub fn translate<T: Real>(
    r_sub6: &CovarianceMatrix<T>,
    sub6_geom: &UlaGeometry<T>,
    mmwave_geom: &UlaGeometry<T>,
    params: &TranslationParams,
) -> Result<TranslationResult<T>> {
    let n = r_sub6.dim();
    if n != sub6_geom.num_antennas {
        return Err(mismatch(format!("covariance of size {n} on a {}-element array", sub6_geom.num_antennas)));
    }
    if n < 2 {
        return Err(invalid("translation needs at least two sub-6 GHz antennas"));
    }
    if !(params.as_threshold > 0.0) || !(params.spread_scale > 0.0) {
        return Err(invalid("angle-spread threshold and spread scale must be positive"));
    }
    let threshold = lit::<T>(params.as_threshold);
    let kappa = lit::<T>(params.spread_scale);

    let point_sources = mdl_order(&r_sub6.eigen()?.values, params.num_snapshots)?;
    let mut num_clusters = cluster_count(point_sources);
    while num_clusters > 1 && 2 * num_clusters >= n {
        num_clusters -= 1;
    }

    let aoa_only = |num_clusters: &mut usize| -> Result<Vec<(T, T)>> {
        *num_clusters = 1;
        Ok(vec![(root_music(r_sub6, 1, sub6_geom)?[0], T::zero())])
    };
    let raw = if point_sources <= 1 || 2 * num_clusters >= n {
        aoa_only(&mut num_clusters)?
    } else {
        match spread_root_music(r_sub6, num_clusters, sub6_geom, kappa) {
            Ok(raw) => robustify(&raw, r_sub6, threshold, sub6_geom, false)?,
            Err(Error::InsufficientRoots { .. }) => aoa_only(&mut num_clusters)?,
            Err(e) => return Err(e),
        }
    };

    let mut params_list: Vec<(T, T)> = Vec::with_capacity(raw.len());
    for p in raw {
        if !params_list.contains(&p) {
            params_list.push(p);
        }
    }

    let sub6_components = params_list
        .iter()
        .map(|&(a, s)| theoretical_covariance(params.pas, a, s, sub6_geom))
        .collect::<Result<Vec<_>>>()?;
    let (powers, noise_var) = nnls_powers(r_sub6, &sub6_components)?;

    let mm_components = params_list
        .iter()
        .map(|&(a, s)| theoretical_covariance(params.pas, a, s, mmwave_geom).map(|c| c.with_side(r_sub6.side)))
        .collect::<Result<Vec<_>>>()?;
    let weighted: Vec<(T, &CovarianceMatrix<T>)> = powers.iter().copied().zip(mm_components.iter()).collect();
    let mmwave_cov = synthesize_multicluster(&weighted, None)?;

    let estimates = params_list
        .iter()
        .zip(&powers)
        .map(|(&(mean_angle, spread), &power)| ClusterEstimate { mean_angle, spread, power })
        .collect();
    Ok(TranslationResult { point_sources, num_clusters, estimates, noise_var, mmwave_cov })
}
