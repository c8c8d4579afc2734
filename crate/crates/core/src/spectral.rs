//! Principal eigenvalue of the periodic operator
//! `1/2 Lap psi + lambda e.grad psi + (lambda^2/2 + g) psi = mu psi`
//! by Fourier-Galerkin truncation.
//!
//! The operator couples `exp(2 pi i k.x)` only to `exp(2 pi i (k+m).x)` for
//! wavevectors `m` present in `g`, so the truncated matrix is block
//! diagonal over cosets of the lattice generated by those wavevectors. The
//! principal eigenfunction has a nonzero mean and therefore lives in the
//! block of `k = 0`; only that block is assembled.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::env::{for_each_grid_point, PeriodicField, TrigPolynomial};
use crate::error::{Error, Result};

/// Imaginary part above which the selected eigenvalue is rejected.
const IMAG_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Fourier truncation order `N`: wavevectors with `|k|_inf <= N`.
    pub truncation: usize,
    /// Evaluation grid points per axis.
    pub grid_n: usize,
    /// Maximum relative L2 residual of the eigen-equation on the grid.
    pub residual_tol: f64,
}

impl SolverOptions {
    pub fn for_dim(dim: usize) -> Self {
        match dim {
            1 => SolverOptions { truncation: 16, grid_n: 128, residual_tol: 1e-6 },
            2 => SolverOptions { truncation: 8, grid_n: 64, residual_tol: 1e-6 },
            _ => SolverOptions { truncation: 6, grid_n: 24, residual_tol: 1e-6 },
        }
    }

    pub fn with_truncation(mut self, n: usize) -> Self {
        self.truncation = n;
        self
    }
}

/// Principal eigenpair on the torus.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub direction: Vec<f64>,
    pub lambda: f64,
    pub gamma: f64,
    /// `psi` on the `grid_n^d` grid, first axis fastest; `max psi = 1`.
    pub psi: Vec<f64>,
    /// `grad psi / psi` on the same grid, `dim` components per point.
    pub psi_log_grad: Vec<f64>,
    pub grid_n: usize,
    pub truncation: usize,
    pub residual: f64,
    dim: usize,
    wavevectors: Vec<[i32; 3]>,
    /// Coefficients of the real, positive, max-normalized eigenfunction.
    coefficients: Vec<Complex64>,
}

impl EigenResult {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn min_psi(&self) -> f64 {
        self.psi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `psi(x)` and `grad psi(x)` from the Fourier series.
    pub fn eval_with_gradient(&self, x: &[f64]) -> (f64, [f64; 3]) {
        let mut v = 0.0;
        let mut grad = [0.0; 3];
        for (k, c) in self.wavevectors.iter().zip(&self.coefficients) {
            let mut arg = 0.0;
            for a in 0..self.dim {
                arg += k[a] as f64 * x[a];
            }
            let phase = Complex64::from_polar(1.0, TAU * arg);
            let term = c * phase;
            v += term.re;
            // d/dx_a of c e^{2 pi i k.x} = 2 pi i k_a c e^{...}; real part is -2 pi k_a Im
            for a in 0..self.dim {
                grad[a] -= TAU * k[a] as f64 * term.im;
            }
        }
        (v, grad)
    }

    pub fn eval_psi(&self, x: &[f64]) -> f64 {
        self.eval_with_gradient(x).0
    }

    /// `grad psi / psi` at an arbitrary point.
    pub fn eval_log_grad(&self, x: &[f64]) -> [f64; 3] {
        let (v, g) = self.eval_with_gradient(x);
        [g[0] / v, g[1] / v, g[2] / v]
    }
}

/// Wavevectors of the `k = 0` block inside the box `|k|_inf <= n`.
fn coupled_basis(dim: usize, n: i32, generators: &[[i32; 3]]) -> Vec<[i32; 3]> {
    let mut seen: HashMap<[i32; 3], ()> = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert([0; 3], ());
    queue.push_back([0; 3]);
    while let Some(k) = queue.pop_front() {
        order.push(k);
        for g in generators {
            let next = [k[0] + g[0], k[1] + g[1], k[2] + g[2]];
            if (0..dim).all(|a| next[a].abs() <= n) && !seen.contains_key(&next) {
                seen.insert(next, ());
                queue.push_back(next);
            }
        }
    }
    order.sort();
    order
}

struct Galerkin {
    dim: usize,
    basis: Vec<[i32; 3]>,
    matrix: DMatrix<Complex64>,
}

fn pad(k: &[i32]) -> [i32; 3] {
    let mut out = [0; 3];
    out[..k.len()].copy_from_slice(k);
    out
}

fn check_direction(e: &[f64], dim: usize) -> Result<()> {
    if e.len() != dim {
        return Err(Error::InvalidArgument(format!("direction has {} components, expected {dim}", e.len())));
    }
    let norm: f64 = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("direction is not a unit vector (|e| = {norm})")));
    }
    Ok(())
}

fn assemble(poly: &TrigPolynomial, e: &[f64], lambda: f64, truncation: usize) -> Result<Galerkin> {
    let dim = poly.dim();
    check_direction(e, dim)?;
    if truncation < 4 {
        return Err(Error::InvalidArgument(format!("truncation {truncation} < 4")));
    }
    let ghat: HashMap<[i32; 3], Complex64> =
        poly.fourier_coefficients().into_iter().map(|(k, c)| (pad(&k), c)).collect();
    let generators: Vec<[i32; 3]> = ghat.keys().copied().filter(|k| *k != [0; 3]).collect();
    let basis = coupled_basis(dim, truncation as i32, &generators);
    let size = basis.len();
    let mut matrix = DMatrix::<Complex64>::zeros(size, size);
    for (i, ki) in basis.iter().enumerate() {
        let mut k2 = 0.0;
        let mut ek = 0.0;
        for a in 0..dim {
            k2 += (ki[a] * ki[a]) as f64;
            ek += e[a] * ki[a] as f64;
        }
        matrix[(i, i)] = Complex64::new(-2.0 * PI * PI * k2 + 0.5 * lambda * lambda, TAU * lambda * ek);
        for (j, kj) in basis.iter().enumerate() {
            let diff = [ki[0] - kj[0], ki[1] - kj[1], ki[2] - kj[2]];
            if let Some(c) = ghat.get(&diff) {
                matrix[(i, j)] += c;
            }
        }
    }
    Ok(Galerkin { dim, basis, matrix })
}

/// Eigenvalue of maximal real part of the truncated matrix.
fn top_eigenvalue(matrix: &DMatrix<Complex64>) -> Result<Complex64> {
    if matrix.nrows() == 1 {
        return Ok(matrix[(0, 0)]);
    }
    if is_hermitian(matrix) {
        let top = matrix.clone().symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Ok(Complex64::new(top, 0.0));
    }
    let eigs = matrix
        .clone()
        .try_schur(1e-15, 100 * matrix.nrows())
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| Error::InvalidArgument("Schur decomposition did not converge".into()))?;
    let top = eigs
        .iter()
        .copied()
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .expect("nonempty spectrum");
    Ok(top)
}

fn is_hermitian(m: &DMatrix<Complex64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (i..n).all(|j| m[(i, j)] == m[(j, i)].conj()))
}

fn selected_real(mu: Complex64) -> Result<f64> {
    if mu.im.abs() > IMAG_TOL * (1.0 + mu.re.abs()) {
        return Err(Error::NotPositive { ratio: f64::NAN, truncation: 0 });
    }
    Ok(mu.re)
}

/// Principal eigenvalue only, without the eigenfunction checks. Used inside
/// the one-dimensional searches of the speed module.
pub fn principal_eigenvalue(poly: &TrigPolynomial, e: &[f64], lambda: f64, opts: &SolverOptions) -> Result<f64> {
    let gal = assemble(poly, e, lambda, opts.truncation)?;
    selected_real(top_eigenvalue(&gal.matrix)?)
}

/// Eigenvector for a known eigenvalue by inverse iteration.
fn inverse_iteration(matrix: &DMatrix<Complex64>, mu: Complex64, zero_index: usize) -> Vec<Complex64> {
    let n = matrix.nrows();
    let shift = mu + Complex64::new(1e-10 * (1.0 + mu.norm()), 0.0);
    let mut shifted = matrix.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    let mut v = nalgebra::DVector::<Complex64>::from_element(n, Complex64::new(1e-3, 0.0));
    v[zero_index] = Complex64::new(1.0, 0.0);
    for _ in 0..4 {
        match lu.solve(&v) {
            Some(w) => {
                let norm = w.norm();
                if !norm.is_finite() || norm == 0.0 {
                    break;
                }
                v = w / Complex64::new(norm, 0.0);
            }
            None => break,
        }
    }
    v.iter().copied().collect()
}

/// Solves the periodic principal-eigenvalue problem for an arbitrary
/// trigonometric potential.
pub fn principal_eigen_poly(
    poly: &TrigPolynomial,
    e: &[f64],
    lambda: f64,
    opts: &SolverOptions,
) -> Result<EigenResult> {
    let gal = assemble(poly, e, lambda, opts.truncation)?;
    let mu = top_eigenvalue(&gal.matrix)?;
    let gamma = selected_real(mu).map_err(|_| Error::NotPositive { ratio: f64::NAN, truncation: opts.truncation })?;
    let zero_index = gal.basis.iter().position(|k| *k == [0; 3]).expect("basis contains 0");
    let mut coefficients = if gal.basis.len() == 1 {
        vec![Complex64::new(1.0, 0.0)]
    } else {
        inverse_iteration(&gal.matrix, mu, zero_index)
    };

    let dim = gal.dim;
    let n = opts.grid_n;
    let mut values: Vec<Complex64> = Vec::with_capacity(n.pow(dim as u32));
    for_each_grid_point(dim, n, |x| {
        let mut v = Complex64::new(0.0, 0.0);
        for (k, c) in gal.basis.iter().zip(&coefficients) {
            let mut arg = 0.0;
            for a in 0..dim {
                arg += k[a] as f64 * x[a];
            }
            v += c * Complex64::from_polar(1.0, TAU * arg);
        }
        values.push(v);
    });

    // phase: grid value of maximal modulus becomes real positive
    let vmax = *values
        .iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("nonempty grid");
    let rot = vmax.conj() / Complex64::new(vmax.norm() * vmax.norm(), 0.0);
    for c in coefficients.iter_mut() {
        *c *= rot;
    }
    let mut psi = Vec::with_capacity(values.len());
    let mut worst_imag: f64 = 0.0;
    for v in &values {
        let r = v * rot;
        worst_imag = worst_imag.max(r.im.abs());
        psi.push(r.re);
    }
    let min_psi = psi.iter().copied().fold(f64::INFINITY, f64::min);
    if min_psi <= 0.0 || worst_imag > 1e-6 {
        return Err(Error::NotPositive { ratio: min_psi, truncation: opts.truncation });
    }

    let mut result = EigenResult {
        direction: e.to_vec(),
        lambda,
        gamma,
        psi,
        psi_log_grad: Vec::new(),
        grid_n: n,
        truncation: opts.truncation,
        residual: 0.0,
        dim,
        wavevectors: gal.basis,
        coefficients,
    };

    // grad psi / psi and the eigen-equation residual on the grid
    let mut log_grad = Vec::with_capacity(result.psi.len() * dim);
    let mut res2 = 0.0;
    let mut norm2 = 0.0;
    let mut idx = 0;
    for_each_grid_point(dim, n, |x| {
        let mut p = 0.0;
        let mut grad = [0.0; 3];
        let mut lap = 0.0;
        for (k, c) in result.wavevectors.iter().zip(&result.coefficients) {
            let mut arg = 0.0;
            let mut k2 = 0.0;
            for a in 0..dim {
                arg += k[a] as f64 * x[a];
                k2 += (k[a] * k[a]) as f64;
            }
            let term = c * Complex64::from_polar(1.0, TAU * arg);
            p += term.re;
            for a in 0..dim {
                grad[a] -= TAU * k[a] as f64 * term.im;
            }
            lap -= TAU * TAU * k2 * term.re;
        }
        let mut adv = 0.0;
        for a in 0..dim {
            log_grad.push(grad[a] / p);
            adv += e[a] * grad[a];
        }
        let g = poly.eval(x);
        let r = 0.5 * lap + lambda * adv + (0.5 * lambda * lambda + g) * p - gamma * p;
        res2 += r * r;
        norm2 += p * p;
        idx += 1;
    });
    debug_assert_eq!(idx, result.psi.len());
    result.psi_log_grad = log_grad;
    result.residual = (res2 / norm2).sqrt();
    if result.residual > opts.residual_tol {
        return Err(Error::TruncationError { residual: result.residual, tolerance: opts.residual_tol });
    }
    Ok(result)
}

/// Principal eigenpair `(gamma(e, lambda), psi)` for a branching field.
pub fn principal_eigen(field: &PeriodicField, e: &[f64], lambda: f64, truncation: usize) -> Result<EigenResult> {
    let opts = SolverOptions::for_dim(field.dim()).with_truncation(truncation);
    principal_eigen_poly(field.polynomial(), e, lambda, &opts)
}

/// `gamma(e, .)` tabulated over a strictly increasing grid.
#[derive(Debug, Clone)]
pub struct GammaCurve {
    pub points: Vec<(f64, f64)>,
}

impl GammaCurve {
    /// Second divided differences `[l0, l1, l2]` of the curve.
    pub fn second_differences(&self) -> Vec<f64> {
        self.points
            .windows(3)
            .map(|w| {
                let (x0, y0) = w[0];
                let (x1, y1) = w[1];
                let (x2, y2) = w[2];
                let d01 = (y1 - y0) / (x1 - x0);
                let d12 = (y2 - y1) / (x2 - x1);
                (d12 - d01) / (x2 - x0)
            })
            .collect()
    }

    pub fn is_strictly_convex(&self) -> bool {
        self.second_differences().iter().all(|d| *d > 0.0)
    }
}

pub fn gamma_curve(field: &PeriodicField, e: &[f64], lambda_grid: &[f64], truncation: usize) -> Result<GammaCurve> {
    if lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("lambda grid must be strictly increasing".into()));
    }
    let opts = SolverOptions::for_dim(field.dim()).with_truncation(truncation);
    let points = lambda_grid
        .iter()
        .map(|&l| principal_eigenvalue(field.polynomial(), e, l, &opts).map(|g| (l, g)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GammaCurve { points })
}

/// Limiting scaled cumulant `gamma(e, lambda_e + eta) - gamma(e, lambda_e)`.
pub fn cumulant_limit(
    field: &PeriodicField,
    e: &[f64],
    lambda_e: f64,
    gamma_e: f64,
    eta: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    if eta == 0.0 {
        return Ok(0.0);
    }
    Ok(principal_eigenvalue(field.polynomial(), e, lambda_e + eta, opts)? - gamma_e)
}

/// Exponential decay rate `Theta = -Gamma` of the no-branching probability,
/// where `Gamma` is the principal eigenvalue of `1/2 Lap phi - g phi`.
pub fn killing_rate(field: &PeriodicField) -> Result<f64> {
    let dim = field.dim();
    let mut e = vec![0.0; dim];
    e[0] = 1.0;
    let opts = SolverOptions::for_dim(dim);
    let eig = principal_eigen_poly(&field.polynomial().negated(), &e, 0.0, &opts)?;
    Ok(-eig.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Mode;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_field_is_exact() {
        let g = PeriodicField::constant(1, 1.0).unwrap();
        let r = principal_eigen(&g, &[1.0], 2.0, 8).unwrap();
        assert_abs_diff_eq!(r.gamma, 3.0, epsilon = 1e-14);
        assert!(r.psi.iter().all(|p| (p - 1.0).abs() < 1e-14));
        assert!(r.psi_log_grad.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = PeriodicField::constant(2, 1.0).unwrap();
        assert!(principal_eigen(&g, &[1.0, 0.1], 0.0, 8).is_err());
        assert!(principal_eigen(&g, &[1.0, 0.0], 0.0, 3).is_err());
        assert!(principal_eigen(&g, &[1.0], 0.0, 8).is_err());
    }

    #[test]
    fn laminate_block_is_one_dimensional() {
        let g = PeriodicField::cosine(2, 0, 1.0, 0.5).unwrap();
        let gal = assemble(g.polynomial(), &[0.6, 0.8], 1.0, 12).unwrap();
        assert_eq!(gal.basis.len(), 25);
        assert!(gal.basis.iter().all(|k| k[1] == 0));
    }

    #[test]
    fn eigenfunction_is_positive_normalized_and_accurate() {
        let g = PeriodicField::new(
            2,
            vec![Mode::new(&[1, 0], 0.4, 0.0), Mode::new(&[0, 1], 0.3, 0.5)],
            1.0,
        )
        .unwrap();
        let e = [0.6, 0.8];
        let r = principal_eigen(&g, &e, 1.3, 8).unwrap();
        assert!(r.min_psi() > 0.0);
        assert_abs_diff_eq!(r.psi.iter().copied().fold(0.0, f64::max), 1.0, epsilon = 1e-12);
        assert!(r.residual < 1e-6, "residual {}", r.residual);
        let (lo, hi) = (g.min(), g.max());
        let l2 = 0.5 * 1.3 * 1.3;
        assert!(r.gamma >= lo + l2 - 1e-8 && r.gamma <= hi + l2 + 1e-8);
    }

    #[test]
    fn log_gradient_matches_series_derivative() {
        let g = PeriodicField::cosine(1, 0, 1.0, 0.5).unwrap();
        let r = principal_eigen(&g, &[1.0], 1.2, 16).unwrap();
        let h = 1e-5;
        for x in [0.0, 0.13, 0.5, 0.77] {
            let fd = (r.eval_psi(&[x + h]).ln() - r.eval_psi(&[x - h]).ln()) / (2.0 * h);
            assert_abs_diff_eq!(r.eval_log_grad(&[x])[0], fd, epsilon = 1e-7);
        }
        // grid values agree with pointwise evaluation
        let i = 17;
        let x = i as f64 / r.grid_n as f64;
        assert_abs_diff_eq!(r.psi_log_grad[i], r.eval_log_grad(&[x])[0], epsilon = 1e-12);
    }

    #[test]
    fn truncation_converges() {
        let g = PeriodicField::new(
            1,
            vec![Mode::new(&[1], 0.3, 0.0), Mode::new(&[4], 0.2, 1.0)],
            1.0,
        )
        .unwrap();
        let p = g.polynomial();
        let o16 = SolverOptions::for_dim(1).with_truncation(16);
        let o32 = SolverOptions::for_dim(1).with_truncation(32);
        for lambda in [0.0, 1.0, 3.0] {
            let a = principal_eigenvalue(p, &[1.0], lambda, &o16).unwrap();
            let b = principal_eigenvalue(p, &[1.0], lambda, &o32).unwrap();
            assert!((a - b).abs() <= 1e-8, "lambda {lambda}: {a} vs {b}");
        }
    }

    #[test]
    fn symmetric_under_joint_reflection() {
        let g = PeriodicField::new(
            2,
            vec![Mode::new(&[1, 0], 0.4, 0.2), Mode::new(&[1, 1], 0.2, 1.0)],
            1.0,
        )
        .unwrap();
        let opts = SolverOptions::for_dim(2).with_truncation(8);
        for (theta, lambda) in [(0.3, 0.7), (2.0, 1.9), (4.4, -1.1)] {
            let e: [f64; 2] = [f64::cos(theta), f64::sin(theta)];
            let me = [-e[0], -e[1]];
            let a = principal_eigenvalue(g.polynomial(), &e, lambda, &opts).unwrap();
            let b = principal_eigenvalue(g.polynomial(), &me, -lambda, &opts).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_tilt_eigenvalue_dominates_mean() {
        let g = PeriodicField::cosine(1, 0, 1.0, 0.5).unwrap();
        let r = principal_eigen(&g, &[1.0], 0.0, 16).unwrap();
        assert!(r.gamma >= g.mean());
    }

    #[test]
    fn killing_rate_of_constant_field() {
        let g = PeriodicField::constant(1, 0.7).unwrap();
        assert_abs_diff_eq!(killing_rate(&g).unwrap(), 0.7, epsilon = 1e-14);
        let c = PeriodicField::cosine(1, 0, 1.0, 0.5).unwrap();
        let theta = killing_rate(&c).unwrap();
        assert!(theta > c.min() && theta < c.mean());
    }

    #[test]
    fn constant_curve_is_parabola() {
        let g = PeriodicField::constant(1, 2.0).unwrap();
        let grid: Vec<f64> = (0..9).map(|i| 0.5 * i as f64).collect();
        let c = gamma_curve(&g, &[1.0], &grid, 8).unwrap();
        for (l, v) in &c.points {
            assert_abs_diff_eq!(*v, 2.0 + 0.5 * l * l, epsilon = 1e-13);
        }
        for d in c.second_differences() {
            assert_abs_diff_eq!(d, 0.5, epsilon = 1e-10);
        }
    }
}
