//! Upper-orthant probabilities of centered multivariate Gaussians:
//! `P[Z_1 > x_1, ..., Z_k > x_k]` for `Z ~ N(0, Sigma)`.
//!
//! k = 1 uses the complementary error function, k = 2 adaptive quadrature
//! over the conditional tail, and k >= 3 Monte Carlo with eigendecomposition
//! sampling. The Monte Carlo path takes an explicit seeded generator and
//! reports its standard error.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as RandDistribution, StandardNormal};

use crate::error::{Error, Result};

/// Eigenvalues are accepted down to `-PSD_TOL` (scaled by the spectral
/// radius) and clipped to zero.
pub const PSD_TOL: f64 = 1e-9;

/// Default Monte Carlo budget for k >= 3.
pub const DEFAULT_MC_SAMPLES: usize = 200_000;

/// A dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(dim, row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                m.data[i * dim + j] = v;
            }
        }
        for i in 0..dim {
            for j in 0..i {
                let a = m.data[i * dim + j];
                let b = m.data[j * dim + i];
                let s = 0.5 * (a + b);
                m.data[i * dim + j] = s;
                m.data[j * dim + i] = s;
            }
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Set both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].to_vec())
            .collect()
    }

    /// Principal submatrix on the given index list.
    pub fn principal_submatrix(&self, indices: &[usize]) -> SymMatrix {
        let dim = indices.len();
        let mut out = SymMatrix::zeros(dim);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                out.data[a * dim + b] = self.get(i, j);
            }
        }
        out
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.to_dmatrix())
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute entry; zero matrices are "degenerate" covariances.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
    }
}

/// An orthant probability together with the standard error of its estimate
/// (zero for the exact k <= 2 paths).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantValue {
    pub value: f64,
    pub std_error: f64,
}

impl OrthantValue {
    fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
        }
    }
}

/// `P[Z > x]` for `Z ~ N(0, variance)`; a point mass at zero when the
/// variance vanishes.
pub fn normal_upper_tail(x: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return if x < 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * libm::erfc(x / (2.0 * variance).sqrt())
}

/// Linear map `z = A xi` turning i.i.d. standard normals into `N(0, Sigma)`
/// draws, built from the clipped eigendecomposition of `Sigma`.
pub struct GaussianSampler {
    dim: usize,
    transform: Vec<f64>, // row-major dim x dim
}

impl GaussianSampler {
    pub fn new(sigma: &SymMatrix) -> Result<Self> {
        let dim = sigma.dim();
        let eigen = SymmetricEigen::new(sigma.to_dmatrix());
        let max_abs = eigen
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        let floor = -PSD_TOL * max_abs.max(1.0);
        let mut scaled = vec![0.0; dim];
        for (j, &lam) in eigen.eigenvalues.iter().enumerate() {
            if lam < floor {
                return Err(Error::NotPsd(lam));
            }
            scaled[j] = lam.max(0.0).sqrt();
        }
        let mut transform = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                transform[i * dim + j] = eigen.eigenvectors[(i, j)] * scaled[j];
            }
        }
        Ok(Self { dim, transform })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fill `out` with one draw of `N(0, Sigma)`.
    pub fn sample_into(&self, rng: &mut ChaCha8Rng, xi: &mut [f64], out: &mut [f64]) {
        for v in xi.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            let row = &self.transform[i * self.dim..(i + 1) * self.dim];
            *o = row.iter().zip(xi.iter()).map(|(a, b)| a * b).sum();
        }
    }
}

/// Orthant probability dispatcher. `mc_samples` and `rng` are only consulted
/// for k >= 3.
pub fn orthant_q(
    x: &[f64],
    sigma: &SymMatrix,
    mc_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<OrthantValue> {
    if x.len() != sigma.dim() {
        return Err(Error::DimensionMismatch(x.len(), sigma.dim()));
    }
    match x.len() {
        0 => Ok(OrthantValue::exact(1.0)),
        1 => Ok(OrthantValue::exact(normal_upper_tail(x[0], sigma.get(0, 0)))),
        2 => bivariate_orthant(x, sigma).map(OrthantValue::exact),
        _ => orthant_q_mc(x, sigma, mc_samples, rng),
    }
}

/// Monte Carlo orthant estimate for any dimension.
pub fn orthant_q_mc(
    x: &[f64],
    sigma: &SymMatrix,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<OrthantValue> {
    if x.len() != sigma.dim() {
        return Err(Error::DimensionMismatch(x.len(), sigma.dim()));
    }
    let sampler = GaussianSampler::new(sigma)?;
    let k = sigma.dim();
    let mut xi = vec![0.0; k];
    let mut z = vec![0.0; k];
    let mut hits = 0usize;
    for _ in 0..samples {
        sampler.sample_into(rng, &mut xi, &mut z);
        if z.iter().zip(x).all(|(zi, xi)| zi > xi) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(OrthantValue {
        value: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
    })
}

/// `P[Z1 > x1, Z2 > x2]` by integrating the conditional tail against the
/// marginal density of `Z1`.
fn bivariate_orthant(x: &[f64], sigma: &SymMatrix) -> Result<f64> {
    // Validate and clip through the same eigen path as the sampler.
    let _ = GaussianSampler::new(sigma)?;
    let a = sigma.get(0, 0).max(0.0);
    let c = sigma.get(1, 1).max(0.0);
    let mut b = sigma.get(0, 1);
    let cap = (a * c).sqrt();
    b = b.clamp(-cap, cap);
    let (x1, x2) = (x[0], x[1]);

    if a <= 0.0 {
        let first = if x1 < 0.0 { 1.0 } else { 0.0 };
        return Ok(first * normal_upper_tail(x2, c));
    }
    if c <= 0.0 {
        let second = if x2 < 0.0 { 1.0 } else { 0.0 };
        return Ok(second * normal_upper_tail(x1, a));
    }

    let cond_var = c - b * b / a;
    if cond_var <= 1e-14 * c {
        // Z2 is a.s. a linear image of Z1.
        let slope = b / a;
        if slope > 0.0 {
            return Ok(normal_upper_tail(x1.max(x2 / slope), a));
        }
        if slope < 0.0 {
            let p = normal_upper_tail(x1, a) - normal_upper_tail(x2 / slope, a);
            return Ok(p.max(0.0));
        }
        let second = if x2 < 0.0 { 1.0 } else { 0.0 };
        return Ok(second * normal_upper_tail(x1, a));
    }

    let sd = a.sqrt();
    let lo = x1.max(-14.0 * sd);
    let hi = 14.0 * sd;
    if lo >= hi {
        return Ok(0.0);
    }
    let integrand = |z: f64| -> f64 {
        let pdf = (-z * z / (2.0 * a)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
        pdf * normal_upper_tail(x2 - b * z / a, cond_var)
    };
    Ok(adaptive_simpson(&integrand, lo, hi, 1e-12, 40))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (lo + hi);
    let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
    let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let lmid = 0.5 * (lo + mid);
    let rmid = 0.5 * (mid + hi);
    let flm = f(lmid);
    let frm = f(rmid);
    let left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    let right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1)
        + simpson_step(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1)
}
