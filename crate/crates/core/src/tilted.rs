//! The tilted diffusion `dY = (grad psi / psi + lambda e) dt + dW`, the
//! eigenfunction change of measure, and large-deviation checks for the
//! directional displacement `Y_hat_t = e.(Y_t - Y_0) / t`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::bbm::{feynman_kac, Functional, IdentityCheck};
use crate::env::{for_each_grid_point, interp_periodic, PeriodicField};
use crate::error::{Error, Result};
use crate::exec::{derive_seed, replica_rng, Exec};
use crate::spectral::EigenResult;
use crate::stats::{self, Estimate};

pub const MAX_DT: f64 = 0.005;

/// Hits required before a tail probability is used.
pub const MIN_HITS: usize = 30;

/// Drift `phi = grad psi / psi + lambda e`, tabulated from the spectral
/// eigenfunction on a dense periodic grid.
#[derive(Debug, Clone)]
pub struct DriftField {
    dim: usize,
    n: usize,
    constant: bool,
    shift: [f64; 3],
    components: Vec<Vec<f64>>,
    eigen: EigenResult,
}

impl DriftField {
    pub fn new(eigen: &EigenResult) -> DriftField {
        let dim = eigen.dim();
        let mut shift = [0.0; 3];
        for a in 0..dim {
            shift[a] = eigen.lambda * eigen.direction[a];
        }
        let constant = eigen.psi_log_grad.iter().all(|v| v.abs() < 1e-14);
        let n: usize = if constant {
            1
        } else {
            match dim {
                1 => 2048,
                2 => 256,
                _ => 48,
            }
        };
        let mut components = vec![Vec::with_capacity(n.pow(dim as u32)); dim];
        if constant {
            for c in components.iter_mut() {
                c.push(0.0);
            }
        } else {
            for_each_grid_point(dim, n, |x| {
                let g = eigen.eval_log_grad(x);
                for a in 0..dim {
                    components[a].push(g[a]);
                }
            });
        }
        DriftField { dim, n, constant, shift, components, eigen: eigen.clone() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigen(&self) -> &EigenResult {
        &self.eigen
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> [f64; 3] {
        let mut out = self.shift;
        if !self.constant {
            for a in 0..self.dim {
                out[a] += interp_periodic(&self.components[a], self.n, self.dim, x);
            }
        }
        out
    }
}

pub fn drift_field(eigen: &EigenResult) -> DriftField {
    DriftField::new(eigen)
}

/// Positions of one tilted path at the requested times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltedPath {
    pub times: Vec<f64>,
    pub positions: Vec<[f64; 3]>,
    /// Running maximum of `e.(Y_s - Y_0)`.
    pub path_max: f64,
}

impl TiltedPath {
    /// `Y_hat` at the `k`-th requested time.
    pub fn y_hat(&self, k: usize, origin: &[f64], e: &[f64]) -> f64 {
        let d: f64 = e.iter().enumerate().map(|(a, ea)| ea * (self.positions[k][a] - origin[a])).sum();
        d / self.times[k]
    }
}

fn run_path(drift: &DriftField, x0: &[f64], times: &[f64], dt: f64, rng: &mut ChaCha8Rng) -> TiltedPath {
    let dim = drift.dim;
    let e = &drift.eigen.direction;
    let mut x = [0.0; 3];
    x[..dim].copy_from_slice(x0);
    let mut t = 0.0;
    let mut path_max: f64 = 0.0;
    let mut positions = Vec::with_capacity(times.len());
    for &target in times {
        while target - t > 1e-12 {
            let h = dt.min(target - t);
            let sq = h.sqrt();
            let phi = drift.eval(&x[..dim]);
            for a in 0..dim {
                let z: f64 = rng.sample(StandardNormal);
                x[a] += phi[a] * h + sq * z;
            }
            let proj: f64 = (0..dim).map(|a| e[a] * (x[a] - x0[a])).sum();
            path_max = path_max.max(proj);
            t += h;
        }
        positions.push(x);
    }
    TiltedPath { times: times.to_vec(), positions, path_max }
}

fn check_inputs(drift: &DriftField, x0: &[f64], times: &[f64], dt: f64) -> Result<()> {
    if x0.len() != drift.dim {
        return Err(Error::InvalidArgument("start point has the wrong dimension".into()));
    }
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must lie in (0, {MAX_DT}]")));
    }
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("times must be positive and increasing".into()));
    }
    Ok(())
}

/// Euler-Maruyama ensemble of the tilted diffusion.
pub fn simulate_tilted(drift: &DriftField, x0: &[f64], times: &[f64], dt: f64, reps: usize, seed: u64, exec: Exec) -> Result<Vec<TiltedPath>> {
    check_inputs(drift, x0, times, dt)?;
    Ok(exec.map(reps, |r| run_path(drift, x0, times, dt, &mut replica_rng(seed, r as u64))))
}

/// `Y_hat_t` statistics over an ensemble.
pub fn y_hat_estimate(paths: &[TiltedPath], k: usize, x0: &[f64], e: &[f64]) -> Estimate {
    let v: Vec<f64> = paths.iter().map(|p| p.y_hat(k, x0, e)).collect();
    Estimate::from_samples(&v)
}

/// Both sides of the change-of-measure identity
/// `E[psi(x)/psi(Y_t) e^{-lambda e.(Y_t - Y_0) + t gamma} F(Y)] = E[e^{int g(B)} F(B)]`.
#[allow(clippy::too_many_arguments)]
pub fn change_of_measure_check(
    field: &PeriodicField,
    drift: &DriftField,
    functional: &Functional,
    x0: &[f64],
    t: f64,
    reps: usize,
    dt: f64,
    seed: u64,
    exec: Exec,
) -> Result<IdentityCheck> {
    if !(t > 0.0 && t <= 5.0) {
        return Err(Error::InvalidArgument(format!("t = {t} outside (0, 5]")));
    }
    check_inputs(drift, x0, &[t], dt)?;
    let eig = &drift.eigen;
    if let Some(d) = functional.direction() {
        if d.iter().zip(&eig.direction).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::InvalidArgument("functional direction must match the tilt direction".into()));
        }
    }
    let psi0 = eig.eval_psi(x0);
    let e = eig.direction.clone();
    let tilted_seed = derive_seed(seed, 11);
    let samples = exec.map(reps, |r| {
        let path = run_path(drift, x0, &[t], dt, &mut replica_rng(tilted_seed, r as u64));
        let y = &path.positions[0];
        let disp: f64 = (0..drift.dim).map(|a| e[a] * (y[a] - x0[a])).sum();
        let weight = psi0 / eig.eval_psi(&y[..drift.dim]) * (-eig.lambda * disp + t * eig.gamma).exp();
        weight * functional.value(disp, path.path_max)
    });
    let lhs = Estimate::from_samples(&samples);
    let rhs = feynman_kac(field, functional, x0, t, reps, dt, derive_seed(seed, 12), exec)?;
    Ok(IdentityCheck { functional: functional.name(), z: lhs.z_against(&rhs), lhs, rhs })
}

#[derive(Debug, Clone, Serialize)]
pub struct CumulantEstimate {
    pub eta: f64,
    pub t: f64,
    pub value: f64,
    pub se: f64,
    /// Share of `sum e^{eta t Y_hat}` carried by the top 1% of samples.
    pub top_share: f64,
    pub heavy_tail: bool,
}

/// `t^-1 log E[e^{eta t Y_hat_t}]` from terminal displacements.
pub fn cumulant_from_displacements(displacements: &[f64], eta: f64, t: f64) -> CumulantEstimate {
    let xs: Vec<f64> = displacements.iter().map(|d| eta * d).collect();
    let (v, se) = if eta == 0.0 { (0.0, 0.0) } else { stats::jackknife_log_mean_exp(&xs, 100) };
    let top_share = if eta == 0.0 { 0.01 } else { stats::top_weight_share(&xs) };
    CumulantEstimate { eta, t, value: v / t, se: se / t, top_share, heavy_tail: top_share > 0.5 }
}

#[allow(clippy::too_many_arguments)]
pub fn empirical_cumulant(drift: &DriftField, x0: &[f64], eta: f64, t: f64, reps: usize, dt: f64, seed: u64, exec: Exec) -> Result<CumulantEstimate> {
    let paths = simulate_tilted(drift, x0, &[t], dt, reps, seed, exec)?;
    let e = &drift.eigen.direction;
    let disp: Vec<f64> = paths.iter().map(|p| t * p.y_hat(0, x0, e)).collect();
    Ok(cumulant_from_displacements(&disp, eta, t))
}

/// Empirical tail exponents `-t^-1 log P[Y_hat_t in C]`.
#[derive(Debug, Clone, Serialize)]
pub struct LdpTable {
    pub lo: f64,
    pub hi: f64,
    pub t_list: Vec<f64>,
    pub hits: Vec<usize>,
    /// `None` where there were no hits.
    pub exponents: Vec<Option<f64>>,
    pub reference: f64,
    /// Largest time with at least [`MIN_HITS`] hits and its exponent.
    pub selected_t: f64,
    pub selected_exponent: f64,
    pub reps: usize,
}

impl LdpTable {
    pub fn relative_error(&self) -> f64 {
        (self.selected_exponent - self.reference).abs() / self.reference.abs().max(f64::MIN_POSITIVE)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,hits,exponent,reference\n");
        for ((t, h), x) in self.t_list.iter().zip(&self.hits).zip(&self.exponents) {
            let x = x.map_or(String::from("nan"), |v| v.to_string());
            s.push_str(&format!("{t},{h},{x},{}\n", self.reference));
        }
        s
    }
}

/// Tail counts of `Y_hat_t in [lo, hi]` under the tilt. `reference` is the
/// rate-function infimum over the interval, supplied by the caller.
#[allow(clippy::too_many_arguments)]
pub fn ldp_tail_check(
    drift: &DriftField,
    x0: &[f64],
    lo: f64,
    hi: f64,
    reference: f64,
    t_list: &[f64],
    reps: usize,
    dt: f64,
    seed: u64,
    exec: Exec,
) -> Result<LdpTable> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument("empty interval".into()));
    }
    let paths = simulate_tilted(drift, x0, t_list, dt, reps, seed, exec)?;
    let e = &drift.eigen.direction;
    let mut hits = Vec::new();
    let mut exponents = Vec::new();
    for (k, t) in t_list.iter().enumerate() {
        let h = paths
            .iter()
            .filter(|p| {
                let y = p.y_hat(k, x0, e);
                y >= lo && y <= hi
            })
            .count();
        hits.push(h);
        exponents.push((h > 0).then(|| -(h as f64 / reps as f64).ln() / t));
    }
    let Some(k) = (0..t_list.len()).rev().find(|&k| hits[k] >= MIN_HITS) else {
        return Err(Error::TooFewHits { needed: MIN_HITS, best: hits.iter().copied().max().unwrap_or(0) });
    };
    Ok(LdpTable {
        lo,
        hi,
        t_list: t_list.to_vec(),
        selected_t: t_list[k],
        selected_exponent: exponents[k].expect("hits"),
        hits,
        exponents,
        reference,
        reps,
    })
}
