//! Front speed `c*(e) = min_{lambda > 0} gamma(e, lambda) / lambda`, its
//! minimizer `lambda_e`, and the rate function `I_e`, the Legendre
//! transform of `eta -> gamma(e, lambda_e + eta) - gamma(e, lambda_e)`.

use serde::Serialize;

use crate::env::PeriodicField;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::spectral::{principal_eigen_poly, principal_eigenvalue, SolverOptions};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes a unimodal `f` on `[a, b]`. Returns `(x, f(x))`.
pub(crate) fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Grows `[lo, hi]` around `mid` until `f(mid) <= min(f(lo), f(hi))`,
/// staying inside `(floor, ceil]`.
fn bracket_minimum<F>(f: &mut F, mut lo: f64, mut hi: f64, floor: f64, ceil: f64, grow_down: impl Fn(f64, f64) -> f64, grow_up: impl Fn(f64, f64) -> f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut mid = 0.5 * (lo + hi);
    let (mut flo, mut fmid, mut fhi) = (f(lo)?, f(mid)?, f(hi)?);
    for _ in 0..200 {
        if flo < fmid {
            hi = mid;
            fhi = fmid;
            mid = lo;
            fmid = flo;
            lo = grow_down(lo, hi);
            if lo <= floor {
                return Err(Error::BracketError(format!("lower end fell below {floor:e}")));
            }
            flo = f(lo)?;
        } else if fhi < fmid {
            lo = mid;
            flo = fmid;
            mid = hi;
            fmid = fhi;
            hi = grow_up(lo, hi);
            if hi > ceil {
                return Err(Error::BracketError(format!("upper end exceeded {ceil}")));
            }
            fhi = f(hi)?;
        } else {
            let _ = (flo, fhi);
            return Ok((lo, hi));
        }
    }
    Err(Error::BracketError("bracket growth did not terminate".into()))
}

/// `(lambda_e, gamma(e, lambda_e), c*(e))` for one direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedEntry {
    pub direction: Vec<f64>,
    pub lambda_e: f64,
    pub gamma_e: f64,
    pub c_star: f64,
    /// `|c* - d/dlambda gamma(e, lambda_e)|` by central difference.
    pub tangency_gap: f64,
}

/// Tangency tolerance between `gamma/lambda` and `d gamma / d lambda` at the minimizer.
pub const TANGENCY_TOL: f64 = 1e-5;

pub fn find_lambda_e(field: &PeriodicField, e: &[f64]) -> Result<SpeedEntry> {
    find_lambda_e_with(field, e, &SolverOptions::for_dim(field.dim()))
}

pub fn find_lambda_e_with(field: &PeriodicField, e: &[f64], opts: &SolverOptions) -> Result<SpeedEntry> {
    let poly = field.polynomial();
    let gamma = |l: f64| principal_eigenvalue(poly, e, l, opts);
    let mut h = |l: f64| gamma(l).map(|g| g / l);

    let mut lo = (2.0 * field.min().max(1e-6)).sqrt();
    let mut hi = (2.0 * field.max()).sqrt();
    if hi - lo < 1e-3 * hi {
        lo *= 0.8;
        hi *= 1.25;
    }
    let (lo, hi) = bracket_minimum(&mut h, lo, hi, 1e-6, 50.0, |lo, _| lo / 1.5, |_, hi| hi * 1.5)?;
    let (lambda_e, c_star) = golden_section(&mut h, lo, hi, 1e-10)?;

    // full solve at the minimizer validates positivity of the eigenfunction
    let eig = principal_eigen_poly(poly, e, lambda_e, opts)?;
    let gamma_e = eig.gamma;
    let delta = 1e-4;
    let slope = (gamma(lambda_e + delta)? - gamma(lambda_e - delta)?) / (2.0 * delta);
    let tangency_gap = (c_star - slope).abs();
    if tangency_gap > TANGENCY_TOL {
        return Err(Error::BracketError(format!(
            "tangency check failed: c* = {c_star}, d gamma/d lambda = {slope}"
        )));
    }
    Ok(SpeedEntry { direction: e.to_vec(), lambda_e, gamma_e, c_star: gamma_e / lambda_e, tangency_gap })
}

/// Unit directions used for a profile: `{+1, -1}` in one dimension, equally
/// spaced angles in two, a Fibonacci lattice on the sphere in three.
pub fn direction_grid(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpeedProfile {
    pub dim: usize,
    pub field_mean: f64,
    pub entries: Vec<SpeedEntry>,
}

impl SpeedProfile {
    pub fn min_speed(&self) -> f64 {
        self.entries.iter().map(|e| e.c_star).fold(f64::INFINITY, f64::min)
    }

    pub fn max_speed(&self) -> f64 {
        self.entries.iter().map(|e| e.c_star).fold(0.0, f64::max)
    }

    /// Profile with every speed multiplied by `s`.
    pub fn scaled(&self, s: f64) -> SpeedProfile {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.c_star *= s;
        }
        out
    }

    /// Profile from explicit `(direction, c*)` pairs; `lambda_e` and
    /// `gamma_e` are left as NaN. Used for synthetic speed functions.
    pub fn synthetic(dim: usize, speeds: impl IntoIterator<Item = (Vec<f64>, f64)>) -> SpeedProfile {
        SpeedProfile {
            dim,
            field_mean: f64::NAN,
            entries: speeds
                .into_iter()
                .map(|(direction, c_star)| SpeedEntry {
                    direction,
                    lambda_e: f64::NAN,
                    gamma_e: f64::NAN,
                    c_star,
                    tangency_gap: 0.0,
                })
                .collect(),
        }
    }

    /// CSV with header `e1[,e2[,e3]],lambda_e,gamma_e,c_star`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let axes: Vec<String> = (1..=self.dim).map(|i| format!("e{i}")).collect();
        out.push_str(&axes.join(","));
        out.push_str(",lambda_e,gamma_e,c_star\n");
        for e in &self.entries {
            for v in &e.direction {
                out.push_str(&format!("{v:.12},"));
            }
            out.push_str(&format!("{:.12},{:.12},{:.12}\n", e.lambda_e, e.gamma_e, e.c_star));
        }
        out
    }
}

pub fn speed_profile(field: &PeriodicField, n_directions: usize, exec: Exec) -> Result<SpeedProfile> {
    if n_directions < 2 {
        return Err(Error::InvalidArgument("need at least 2 directions".into()));
    }
    let dirs = direction_grid(field.dim(), n_directions);
    let entries = exec
        .map(dirs.len(), |i| find_lambda_e(field, &dirs[i]))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let floor = (2.0 * field.mean()).sqrt() - 1e-6;
    if let Some(bad) = entries.iter().find(|e| e.c_star < floor) {
        return Err(Error::BoundViolation(format!(
            "c* = {} below sqrt(2 mean g) = {}",
            bad.c_star,
            floor + 1e-6
        )));
    }
    Ok(SpeedProfile { dim: field.dim(), field_mean: field.mean(), entries })
}

/// Evaluates `I_e(zeta) = sup_eta [eta zeta - Lambda(eta)]` by golden-section
/// search over `eta`, where `Lambda(eta) = gamma(e, lambda_e + eta) - gamma_e`.
#[derive(Debug, Clone)]
pub struct RateEvaluator<'a> {
    field: &'a PeriodicField,
    pub entry: SpeedEntry,
    opts: SolverOptions,
}

/// Largest `|eta|` explored when bracketing the Legendre supremum.
pub const ETA_LIMIT: f64 = 50.0;

impl<'a> RateEvaluator<'a> {
    pub fn new(field: &'a PeriodicField, entry: SpeedEntry) -> Self {
        let opts = SolverOptions::for_dim(field.dim());
        RateEvaluator { field, entry, opts }
    }

    pub fn cumulant(&self, eta: f64) -> Result<f64> {
        if eta == 0.0 {
            return Ok(0.0);
        }
        let g = principal_eigenvalue(self.field.polynomial(), &self.entry.direction, self.entry.lambda_e + eta, &self.opts)?;
        Ok(g - self.entry.gamma_e)
    }

    /// `(I_e(zeta), maximizing eta)`.
    pub fn value_and_argmax(&self, zeta: f64) -> Result<(f64, f64)> {
        let mut neg = |eta: f64| self.cumulant(eta).map(|l| l - eta * zeta);
        // the maximizer sits near (zeta - c*) / Lambda''(0); start around 0
        let (lo, hi) = bracket_minimum(
            &mut neg,
            -0.5,
            0.5,
            -ETA_LIMIT,
            ETA_LIMIT,
            |lo, hi| lo - 1.6 * (hi - lo),
            |lo, hi| hi + 1.6 * (hi - lo),
        )
        .map_err(|_| {
            Error::BracketError(format!(
                "Legendre supremum for zeta = {zeta} not bracketed within |eta| <= {ETA_LIMIT}"
            ))
        })?;
        let (eta, v) = golden_section(&mut neg, lo, hi, 1e-9)?;
        Ok(((-v).max(0.0), eta))
    }

    pub fn value(&self, zeta: f64) -> Result<f64> {
        self.value_and_argmax(zeta).map(|(v, _)| v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFunction {
    pub direction: Vec<f64>,
    pub c_star: f64,
    pub zeta_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Grid point of minimal value.
    pub argmin: f64,
}

impl RateFunction {
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn second_differences(&self) -> Vec<f64> {
        self.zeta_grid
            .windows(3)
            .zip(self.values.windows(3))
            .map(|(z, v)| {
                let d01 = (v[1] - v[0]) / (z[1] - z[0]);
                let d12 = (v[2] - v[1]) / (z[2] - z[1]);
                (d12 - d01) / (z[2] - z[0])
            })
            .collect()
    }

    /// Strictly decreasing left of the grid minimum, strictly increasing right of it.
    pub fn is_unimodal(&self) -> bool {
        let i = self
            .values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.values[..=i].windows(2).all(|w| w[1] < w[0]) && self.values[i..].windows(2).all(|w| w[1] > w[0])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("zeta,rate\n");
        for (z, v) in self.zeta_grid.iter().zip(&self.values) {
            out.push_str(&format!("{z:.12},{v:.12e}\n"));
        }
        out
    }
}

/// Grid on `[0.2 c*, 2.5 c*]`: spacing `c*/200` within 30% of `c*`,
/// `c*/20` elsewhere, and containing `c*` itself.
pub fn default_zeta_grid(c_star: f64) -> Vec<f64> {
    let fine = c_star / 200.0;
    let coarse = c_star / 20.0;
    let mut grid = Vec::new();
    let mut z = 0.2 * c_star;
    while z < 0.7 * c_star - 1e-12 {
        grid.push(z);
        z += coarse;
    }
    for i in -60..=60 {
        grid.push(c_star + i as f64 * fine);
    }
    let mut z = 1.3 * c_star + coarse;
    while z <= 2.5 * c_star + 1e-12 {
        grid.push(z);
        z += coarse;
    }
    grid
}

pub fn rate_function(field: &PeriodicField, entry: &SpeedEntry, zeta_grid: &[f64], exec: Exec) -> Result<RateFunction> {
    if zeta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("zeta grid must be strictly increasing".into()));
    }
    let c = entry.c_star;
    if zeta_grid.first().is_none_or(|z| *z > 0.2 * c + 1e-12) || zeta_grid.last().is_none_or(|z| *z < 2.5 * c - 1e-12) {
        return Err(Error::InvalidArgument("zeta grid must cover [0.2 c*, 2.5 c*]".into()));
    }
    let eval = RateEvaluator::new(field, entry.clone());
    let values = exec
        .map(zeta_grid.len(), |i| eval.value(zeta_grid[i]))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let imin = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(RateFunction {
        direction: entry.direction.clone(),
        c_star: c,
        zeta_grid: zeta_grid.to_vec(),
        values,
        argmin: zeta_grid[imin],
    })
}

/// Result of a discrete Legendre transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LegendreValue {
    Finite(f64),
    /// The supremum is attained at the edge of the sampled grid; the true
    /// value may be infinite.
    GridBoundary,
}

impl LegendreValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            LegendreValue::Finite(v) => Some(v),
            LegendreValue::GridBoundary => None,
        }
    }
}

/// `sup_eta [eta zeta - Lambda(eta)]` from samples of a convex `Lambda`,
/// with parabolic refinement around the best node.
pub fn legendre(eta: &[f64], lambda: &[f64], zeta: f64) -> Result<LegendreValue> {
    if eta.len() != lambda.len() || eta.len() < 3 {
        return Err(Error::InvalidArgument("need at least 3 matching samples".into()));
    }
    for i in 1..eta.len() - 1 {
        let d = lambda[i + 1] - 2.0 * lambda[i] + lambda[i - 1];
        if d <= -1e-10 {
            return Err(Error::NotConvex { index: i, second_difference: d });
        }
    }
    let obj: Vec<f64> = eta.iter().zip(lambda).map(|(e, l)| e * zeta - l).collect();
    let (best, _) = obj
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    if best == 0 || best == eta.len() - 1 {
        return Ok(LegendreValue::GridBoundary);
    }
    let (x0, x1, x2) = (eta[best - 1], eta[best], eta[best + 1]);
    let (y0, y1, y2) = (obj[best - 1], obj[best], obj[best + 1]);
    // quadratic through the three nodes, in Newton form
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a >= 0.0 {
        return Ok(LegendreValue::Finite(y1));
    }
    let b = d01 - a * (x0 + x1);
    let xv = (-b / (2.0 * a)).clamp(x0, x2);
    let c = y0 - a * x0 * x0 - b * x0;
    Ok(LegendreValue::Finite((a * xv * xv + b * xv + c).max(y1)))
}

/// Largest `kappa` in `{2^-1, 2^-2, ..., 2^-40}` with
/// `I_e((1 - kappa) c*) < kappa beta` and `I_e((1 + kappa) c*) < kappa beta`.
pub fn small_kappa_threshold(eval: &RateEvaluator, beta: f64) -> Result<Option<f64>> {
    if beta <= 0.0 {
        return Err(Error::InvalidArgument("beta must be positive".into()));
    }
    let c = eval.entry.c_star;
    for k in 1..=40 {
        let kappa = 0.5f64.powi(k);
        let left = eval.value((1.0 - kappa) * c)?;
        let right = eval.value((1.0 + kappa) * c)?;
        if left < kappa * beta && right < kappa * beta {
            return Ok(Some(kappa));
        }
    }
    Ok(None)
}

/// Exponent `alpha eps gamma_e - 2 I_e((1 - alpha eps) c*)` governing the
/// growth of lineages that keep pace with `(1 - eps) c*`.
pub fn growth_exponent(eval: &RateEvaluator, alpha: f64, eps: f64) -> Result<f64> {
    let ae = alpha * eps;
    Ok(ae * eval.entry.gamma_e - 2.0 * eval.value((1.0 - ae) * eval.entry.c_star)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| Ok((x - 0.3).powi(2) + 1.0), -2.0, 5.0, 1e-10).unwrap();
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-7);
        assert_abs_diff_eq!(fx, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn homogeneous_speed_closed_form() {
        for beta in [0.5, 1.0, 2.0] {
            let g = PeriodicField::constant(1, beta).unwrap();
            let s = find_lambda_e(&g, &[1.0]).unwrap();
            assert_abs_diff_eq!(s.lambda_e, (2.0 * beta).sqrt(), epsilon = 1e-6);
            assert_abs_diff_eq!(s.c_star, (2.0 * beta).sqrt(), epsilon = 1e-6);
        }
    }

    #[test]
    fn isotropic_profile_in_two_dimensions() {
        let g = PeriodicField::constant(2, 1.0).unwrap();
        let p = speed_profile(&g, 64, Exec::Sequential).unwrap();
        assert_eq!(p.entries.len(), 64);
        for e in &p.entries {
            assert_abs_diff_eq!(e.c_star, 2f64.sqrt(), epsilon = 1e-8);
        }
    }

    #[test]
    fn homogeneous_rate_function_is_quadratic() {
        let g = PeriodicField::constant(1, 1.0).unwrap();
        let s = find_lambda_e(&g, &[1.0]).unwrap();
        let ev = RateEvaluator::new(&g, s.clone());
        for zeta in [0.5, 1.0, 2f64.sqrt(), 2.0, 3.0] {
            let expect = 0.5 * (zeta - 2f64.sqrt()).powi(2);
            assert_abs_diff_eq!(ev.value(zeta).unwrap(), expect, epsilon = 1e-7);
        }
        assert!(ev.value(s.c_star).unwrap() <= 1e-8);
        assert_abs_diff_eq!(ev.cumulant(0.5).unwrap(), 2f64.sqrt() * 0.5 + 0.125, epsilon = 1e-7);
    }

    #[test]
    fn legendre_of_quadratic_and_absolute_value() {
        let eta: Vec<f64> = (0..=400).map(|i| -10.0 + 0.05 * i as f64).collect();
        let quad: Vec<f64> = eta.iter().map(|e| 0.5 * e * e).collect();
        for zeta in [0.0, 1.0, 2.0] {
            let v = legendre(&eta, &quad, zeta).unwrap().finite().unwrap();
            assert_abs_diff_eq!(v, 0.5 * zeta * zeta, epsilon = 1e-12);
        }
        let abs: Vec<f64> = eta.iter().map(|e| e.abs()).collect();
        assert_abs_diff_eq!(legendre(&eta, &abs, 0.0).unwrap().finite().unwrap(), 0.0, epsilon = 1e-12);
        assert_eq!(legendre(&eta, &abs, 2.0).unwrap(), LegendreValue::GridBoundary);
    }

    #[test]
    fn legendre_rejects_concave_samples() {
        let eta = [-1.0, 0.0, 1.0, 2.0];
        let lam = [0.0, 1.0, 0.0, 1.0];
        assert!(matches!(legendre(&eta, &lam, 0.0), Err(Error::NotConvex { index: 1, .. })));
    }

    #[test]
    fn kappa_threshold_homogeneous() {
        let g = PeriodicField::constant(1, 1.0).unwrap();
        let s = find_lambda_e(&g, &[1.0]).unwrap();
        let ev = RateEvaluator::new(&g, s.clone());
        let k = small_kappa_threshold(&ev, s.gamma_e / 2.0).unwrap().unwrap();
        assert!(k >= 0.5);
        let k10 = small_kappa_threshold(&ev, 10.0 * s.gamma_e).unwrap().unwrap();
        assert!(k10 >= k);
    }

    #[test]
    fn zeta_grid_shape() {
        let g = default_zeta_grid(1.5);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(g.contains(&1.5));
        assert!(g[0] <= 0.3 + 1e-12 && *g.last().unwrap() >= 3.75 - 1e-9);
    }
}
