//! One-dimensional F-KPP equation `q_t = 1/2 q_xx + g(x)(q - q^2)`,
//! explicit finite differences, front tracking and the McKean
//! representation `q(t, x) = 1 - E_x[prod_v f(X_t(v))]`.

use serde::Serialize;

use crate::bbm::{Population, SimParams};
use crate::env::PeriodicField;
use crate::error::{Error, Result};
use crate::exec::{replica_rng, Exec};
use crate::stats::{self, Estimate, LinearFit};

/// Distance the tracked level may come to the domain edge it moves toward.
pub const EDGE_MARGIN: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InitialCondition {
    /// `1{x <= 0}`; the front moves right.
    Heaviside,
    /// `1{x >= 0}`; the front moves left.
    Mirrored,
    /// `1{|x| <= half_width}`; the right front is tracked.
    CompactBump { half_width: f64 },
    /// `1 / (1 + e^{-x/scale})`; the front moves left.
    Sigmoid { scale: f64 },
    /// `1{x >= at}`; the front moves left.
    StepAbove { at: f64 },
    Constant(f64),
}

impl InitialCondition {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            InitialCondition::Heaviside => f64::from(u8::from(x <= 0.0)),
            InitialCondition::Mirrored => f64::from(u8::from(x >= 0.0)),
            InitialCondition::CompactBump { half_width } => f64::from(u8::from(x.abs() <= half_width)),
            InitialCondition::Sigmoid { scale } => 1.0 / (1.0 + (-x / scale).exp()),
            InitialCondition::StepAbove { at } => f64::from(u8::from(x >= at)),
            InitialCondition::Constant(c) => c,
        }
    }

    /// `+1` for a right-moving tracked front, `-1` for left, `0` for none.
    pub fn orientation(&self) -> i8 {
        match self {
            InitialCondition::Heaviside | InitialCondition::CompactBump { .. } => 1,
            InitialCondition::Mirrored | InitialCondition::Sigmoid { .. } | InitialCondition::StepAbove { .. } => -1,
            InitialCondition::Constant(_) => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FkppParams {
    pub half_width: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Time between recorded frames.
    pub frame_every: f64,
}

impl FkppParams {
    /// Step at `safety` times the stability limit `dx^2 / 2`.
    pub fn stable(half_width: f64, dx: f64, t_end: f64, safety: f64) -> Self {
        FkppParams { half_width, dx, dt: safety * 0.5 * dx * dx, t_end, frame_every: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frame {
    pub t: f64,
    /// Position of the tracked half-level, `NaN` if absent.
    pub level: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FkppRun {
    pub params: FkppParams,
    pub init: InitialCondition,
    pub frames: Vec<Frame>,
    /// Grid nodes `-L + i dx`.
    pub grid: Vec<f64>,
    pub profile: Vec<f64>,
    /// Worst excursion of `q` outside `[0, 1]` over all frames.
    pub bound_violation: f64,
    /// Worst increase of a nonincreasing initial profile over all frames.
    pub monotonicity_violation: f64,
}

impl FkppRun {
    /// Linear interpolation of the final profile.
    pub fn value_at(&self, x: f64) -> f64 {
        let l = self.params.half_width;
        let s = ((x + l) / self.params.dx).clamp(0.0, (self.grid.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.grid.len() - 2);
        let f = s - i as f64;
        self.profile[i] * (1.0 - f) + self.profile[i + 1] * f
    }

    pub fn final_time(&self) -> f64 {
        self.frames.last().map_or(0.0, |f| f.t)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,level\n");
        for f in &self.frames {
            s.push_str(&format!("{},{}\n", f.t, f.level));
        }
        s
    }

    pub fn profile_csv(&self) -> String {
        let mut s = String::from("x,q\n");
        for (x, q) in self.grid.iter().zip(&self.profile) {
            s.push_str(&format!("{x},{q}\n"));
        }
        s
    }
}

fn half_level(grid: &[f64], q: &[f64], orientation: i8) -> f64 {
    let cross = |i: usize| {
        let (a, b) = (q[i], q[i + 1]);
        grid[i] + (0.5 - a) / (b - a) * (grid[i + 1] - grid[i])
    };
    match orientation {
        1 => (0..q.len() - 1).rev().find(|&i| q[i] >= 0.5 && q[i + 1] < 0.5).map_or(f64::NAN, cross),
        -1 => (0..q.len() - 1).find(|&i| q[i] < 0.5 && q[i + 1] >= 0.5).map_or(f64::NAN, cross),
        _ => f64::NAN,
    }
}

pub fn solve_fkpp(field: &PeriodicField, init: InitialCondition, params: FkppParams) -> Result<FkppRun> {
    if field.dim() != 1 {
        return Err(Error::InvalidArgument("the PDE solver is one-dimensional".into()));
    }
    let FkppParams { half_width, dx, dt, t_end, frame_every } = params;
    if !(dx > 0.0 && half_width > 10.0 * dx && t_end >= 0.0 && frame_every > 0.0) {
        return Err(Error::InvalidArgument("invalid grid parameters".into()));
    }
    let limit = 0.5 * dx * dx;
    if !(dt > 0.0 && dt <= limit) {
        return Err(Error::CflViolation { dt, limit });
    }
    let n = (2.0 * half_width / dx).round() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| -half_width + i as f64 * dx).collect();
    let g: Vec<f64> = grid.iter().map(|x| field.eval(&[*x])).collect();
    let mut q: Vec<f64> = grid.iter().map(|x| init.value(*x)).collect();
    let mut next = q.clone();
    let orientation = init.orientation();
    let initially_nonincreasing = q.windows(2).all(|w| w[1] <= w[0]);
    let diffusion = 0.5 / (dx * dx);

    // frames land exactly on multiples of frame_every, then on t_end
    let mut targets: Vec<f64> = Vec::new();
    let full = (t_end / frame_every + 1e-9).floor() as usize;
    targets.extend((1..=full).map(|k| k as f64 * frame_every));
    if t_end - full as f64 * frame_every > 1e-9 {
        targets.push(t_end);
    }

    let mut frames = vec![Frame { t: 0.0, level: half_level(&grid, &q, orientation) }];
    let mut bound_violation: f64 = 0.0;
    let mut monotonicity_violation: f64 = 0.0;
    let mut t = 0.0;
    for target in targets {
        let steps = ((target - t) / dt).ceil().max(1.0) as usize;
        let h = (target - t) / steps as f64;
        for _ in 0..steps {
            for i in 1..n - 1 {
                let qi = q[i];
                next[i] = qi + h * (diffusion * (q[i - 1] - 2.0 * qi + q[i + 1]) + g[i] * qi * (1.0 - qi));
            }
            next[0] = q[0];
            next[n - 1] = q[n - 1];
            std::mem::swap(&mut q, &mut next);
        }
        t = target;
        for &v in &q {
            bound_violation = bound_violation.max(-v).max(v - 1.0);
        }
        if initially_nonincreasing {
            for w in q.windows(2) {
                monotonicity_violation = monotonicity_violation.max(w[1] - w[0]);
            }
        }
        let level = half_level(&grid, &q, orientation);
        let edge = match orientation {
            1 => half_width - level,
            -1 => level + half_width,
            _ => f64::INFINITY,
        };
        if edge < EDGE_MARGIN {
            return Err(Error::DomainTooSmall { level, half_width });
        }
        frames.push(Frame { t, level });
    }
    Ok(FkppRun { params, init, frames, grid, profile: q, bound_violation, monotonicity_violation })
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontSpeed {
    /// Absolute speed of the tracked level.
    pub speed: f64,
    pub fit: LinearFit,
    pub frames_used: usize,
}

/// Least-squares slope of the half-level over the second half of the run.
pub fn front_speed_estimate(run: &FkppRun) -> Result<FrontSpeed> {
    let t_half = 0.5 * run.final_time();
    let (t, x): (Vec<f64>, Vec<f64>) = run.frames.iter().filter(|f| f.t >= t_half && f.level.is_finite()).map(|f| (f.t, f.level)).unzip();
    if t.len() < 10 {
        return Err(Error::InvalidArgument(format!("{} frames in the fitting window, need 10", t.len())));
    }
    let fit = stats::linear_fit(&t, &x, None);
    if fit.r_squared < 0.99 {
        return Err(Error::NotLinear { r_squared: fit.r_squared });
    }
    Ok(FrontSpeed { speed: fit.slope.abs(), fit, frames_used: t.len() })
}

/// `(max q ahead of (1 + eps) c t, max (1 - q) behind (1 - eps) c t)` at
/// the final frame, measured along the direction the front moves.
pub fn two_sided_check(run: &FkppRun, c_star: f64, epsilon: f64) -> (f64, f64) {
    let t = run.final_time();
    let s = f64::from(run.init.orientation());
    let mut ahead: f64 = 0.0;
    let mut behind: f64 = 0.0;
    for (x, q) in run.grid.iter().zip(&run.profile) {
        let y = s * x;
        if y >= (1.0 + epsilon) * c_star * t {
            ahead = ahead.max(*q);
        }
        if y <= (1.0 - epsilon) * c_star * t {
            behind = behind.max(1.0 - q);
        }
    }
    (ahead, behind)
}

/// Functions `f` in `1 - E[prod_v f(X_t(v))]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum McKeanFunction {
    /// `1{x <= 0}`.
    Indicator,
    /// `1 / (1 + e^{x/scale})`.
    Sigmoid { scale: f64 },
    Constant(f64),
}

impl McKeanFunction {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            McKeanFunction::Indicator => f64::from(u8::from(x <= 0.0)),
            McKeanFunction::Sigmoid { scale } => 1.0 / (1.0 + (x / scale).exp()),
            McKeanFunction::Constant(c) => c,
        }
    }

    /// Initial condition `q0 = 1 - f`.
    pub fn initial_condition(&self) -> InitialCondition {
        match *self {
            McKeanFunction::Indicator => InitialCondition::Mirrored,
            McKeanFunction::Sigmoid { scale } => InitialCondition::Sigmoid { scale },
            McKeanFunction::Constant(c) => InitialCondition::Constant(1.0 - c),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McKeanRow {
    pub x: f64,
    pub pde_q: f64,
    pub mc_q: Estimate,
    pub z: f64,
}

/// Compares the PDE solution with the particle-system expectation at each
/// probe point; thinned runs are rejected.
#[allow(clippy::too_many_arguments)]
pub fn mckean_check(
    field: &PeriodicField,
    f: McKeanFunction,
    t: f64,
    probes: &[f64],
    reps: usize,
    sim: SimParams,
    pde_dx: f64,
    seed: u64,
    exec: Exec,
) -> Result<Vec<McKeanRow>> {
    if field.dim() != 1 {
        return Err(Error::InvalidArgument("the McKean check is one-dimensional".into()));
    }
    if !(t > 0.0 && t <= 3.0) {
        return Err(Error::InvalidArgument(format!("t = {t} outside (0, 3]")));
    }
    let reach = probes.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let half_width = reach + 4.0 * field.max() * t + 10.0;
    let run = solve_fkpp(field, f.initial_condition(), FkppParams { frame_every: t, ..FkppParams::stable(half_width, pde_dx, t, 0.9) })?;
    let table = field.table();
    let mut rows = Vec::with_capacity(probes.len());
    for (j, &x) in probes.iter().enumerate() {
        let products = exec.map(reps, |r| {
            let rng = replica_rng(seed, (j * reps + r) as u64);
            let mut pop = Population::new(&table, &[x], sim, rng);
            pop.advance_to(t);
            if pop.thinned() {
                return None;
            }
            Some(1.0 - pop.particles().iter().map(|p| f.value(p.position[0])).product::<f64>())
        });
        let products: Vec<f64> = products.into_iter().collect::<Option<_>>().ok_or(Error::CapThinned)?;
        let mc_q = Estimate::from_samples(&products);
        let pde_q = run.value_at(x);
        rows.push(McKeanRow { x, pde_q, z: mc_q.z_exact(pde_q), mc_q });
    }
    Ok(rows)
}

/// `P_0[max_v X_t(v) <= level]` in one dimension, read off as `1 - q(t, 0)`
/// for `q0 = 1{x >= level}`.
pub fn max_below_probability(field: &PeriodicField, level: f64, t: f64, dx: f64) -> Result<f64> {
    if field.dim() != 1 {
        return Err(Error::InvalidArgument("the PDE oracle is one-dimensional".into()));
    }
    let half_width = level.abs() + (2.0 * field.max()).sqrt() * t + 10.0;
    let params = FkppParams { frame_every: t, ..FkppParams::stable(half_width, dx, t, 0.9) };
    let run = solve_fkpp(field, InitialCondition::StepAbove { at: level }, params)?;
    Ok(1.0 - run.value_at(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cfl_enforced() {
        let g = PeriodicField::constant(1, 1.0).unwrap();
        let p = FkppParams { half_width: 10.0, dx: 0.1, dt: 0.006, t_end: 1.0, frame_every: 0.5 };
        assert_eq!(solve_fkpp(&g, InitialCondition::Heaviside, p).unwrap_err(), Error::CflViolation { dt: 0.006, limit: 0.005000000000000001 });
    }

    #[test]
    fn domain_too_small_detected() {
        let g = PeriodicField::constant(1, 1.0).unwrap();
        let p = FkppParams::stable(12.0, 0.1, 20.0, 0.9);
        assert!(matches!(solve_fkpp(&g, InitialCondition::Heaviside, p), Err(Error::DomainTooSmall { .. })));
    }

    #[test]
    fn nearly_zero_reaction_freezes_front() {
        let g = PeriodicField::constant(1, 1e-6).unwrap();
        let run = solve_fkpp(&g, InitialCondition::Heaviside, FkppParams::stable(30.0, 0.05, 10.0, 0.9)).unwrap();
        let moved = (run.frames.last().unwrap().level - run.frames[0].level).abs();
        assert!(moved < 0.1, "{moved}");
    }

    #[test]
    fn solution_stays_in_unit_interval_and_monotone() {
        let g = PeriodicField::cosine(1, 0, 1.0, 0.5).unwrap();
        let run = solve_fkpp(&g, InitialCondition::Heaviside, FkppParams::stable(40.0, 0.05, 10.0, 0.9)).unwrap();
        assert!(run.bound_violation <= 0.0);
        assert!(run.monotonicity_violation <= 1e-8);
    }

    #[test]
    fn constant_initial_data_stay_trivial() {
        let g = PeriodicField::cosine(1, 0, 1.0, 0.5).unwrap();
        for c in [0.0, 1.0] {
            let run = solve_fkpp(&g, InitialCondition::Constant(c), FkppParams::stable(15.0, 0.05, 1.0, 0.9)).unwrap();
            assert!(run.profile.iter().all(|q| *q == c));
        }
    }

    #[test]
    fn mirrored_run_reflects_heaviside_for_symmetric_field() {
        let g = PeriodicField::cosine(1, 0, 1.0, 0.5).unwrap();
        let p = FkppParams::stable(30.0, 0.05, 5.0, 0.9);
        let a = solve_fkpp(&g, InitialCondition::Heaviside, p).unwrap();
        let b = solve_fkpp(&g, InitialCondition::Mirrored, p).unwrap();
        for (fa, fb) in a.frames.iter().zip(&b.frames).skip(1) {
            assert_abs_diff_eq!(fa.level, -fb.level, epsilon = 1e-9);
        }
    }

    #[test]
    fn mckean_trivial_functions() {
        let g = PeriodicField::cosine(1, 0, 1.0, 0.5).unwrap();
        for (c, q) in [(1.0, 0.0), (0.0, 1.0)] {
            let rows = mckean_check(&g, McKeanFunction::Constant(c), 1.0, &[-1.0, 0.5], 20, SimParams::default(), 0.05, 0, Exec::Sequential).unwrap();
            for r in rows {
                assert_eq!(r.mc_q.mean, q);
                assert_abs_diff_eq!(r.pde_q, q, epsilon = 1e-15);
                assert_eq!(r.z, 0.0);
            }
        }
    }
}
