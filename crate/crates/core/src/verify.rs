//! The fifteen acceptance checks, shared by the `acceptance` test target and
//! the `verify-all` subcommand.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::bbm::{self, Functional, SimParams};
use crate::env::{Mode, PeriodicField};
use crate::error::{Error, Result};
use crate::exec::{derive_seed, replica_rng, Exec};
use crate::fkpp::{self, FkppParams, InitialCondition};
use crate::geometry::{self, Point};
use crate::spectral::{gamma_curve, principal_eigen, principal_eigenvalue, SolverOptions};
use crate::speed::{self, direction_grid, find_lambda_e, growth_exponent, small_kappa_threshold, speed_profile, RateEvaluator};
use crate::tilted;
use crate::wulff::{self, WulffShape};

/// `1 + 0.5 cos(2 pi x)`.
pub fn cosine_field() -> PeriodicField {
    PeriodicField::cosine(1, 0, 1.0, 0.5).expect("valid field")
}

/// `1 + 0.3 cos(2 pi x) + 0.2 cos(4 pi x + 1)`.
pub fn two_mode_field() -> PeriodicField {
    PeriodicField::new(1, vec![Mode::new(&[1], 0.3, 0.0), Mode::new(&[2], 0.2, 1.0)], 1.0).expect("valid field")
}

/// `1 + 0.25 cos(2 pi x1) + 0.25 cos(2 pi x2)`.
pub fn checkerboard_field() -> PeriodicField {
    PeriodicField::new(2, vec![Mode::new(&[1, 0], 0.25, 0.0), Mode::new(&[0, 1], 0.25, 0.0)], 1.0).expect("valid field")
}

/// `1 + 0.5 cos(2 pi x1)` in the plane.
pub fn laminate_field() -> PeriodicField {
    PeriodicField::cosine(2, 0, 1.0, 0.5).expect("valid field")
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {} ({:.1} s): {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.details.join("; ")
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub exec: Exec,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 20240611, exec: Exec::Parallel }
    }
}

struct Report {
    passed: bool,
    details: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Report { passed: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        let msg = msg.into();
        self.passed &= ok;
        self.details.push(if ok { msg } else { format!("[x] {msg}") });
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.details.push(msg.into());
    }
}

type Check = fn(&VerifyOptions, &mut Report) -> Result<()>;

const CRITERIA: [(u8, &str, Check); 15] = [
    (1, "homogeneous exactness", c01),
    (2, "eigenvalue bounds and convexity", c02),
    (3, "speed lower bound", c03),
    (4, "PDE front speed", c04),
    (5, "rate function", c05),
    (6, "many-to-one and change of measure", c06),
    (7, "tilted law of large numbers", c07),
    (8, "empirical cumulant", c08),
    (9, "large-deviation tail", c09),
    (10, "half-space decay", c10),
    (11, "generation process", c11),
    (12, "shape convergence trend", c12),
    (13, "Wulff certificates", c13),
    (14, "branching-time tail", c14),
    (15, "ergodic averaging", c15),
];

pub fn criterion_ids() -> impl Iterator<Item = u8> {
    CRITERIA.iter().map(|c| c.0)
}

pub fn run_criterion(id: u8, opts: &VerifyOptions) -> CriterionReport {
    let (id, title, check) = *CRITERIA.iter().find(|c| c.0 == id).expect("known criterion");
    let start = Instant::now();
    let mut report = Report::new();
    if let Err(e) = check(opts, &mut report) {
        report.check(false, format!("error: {e}"));
    }
    CriterionReport { id, title, passed: report.passed, details: report.details, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_all(opts: &VerifyOptions, mut on_done: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    criterion_ids()
        .map(|id| {
            let r = run_criterion(id, opts);
            on_done(&r);
            r
        })
        .collect()
}

fn seed(opts: &VerifyOptions, id: u64) -> u64 {
    derive_seed(opts.seed, id)
}

fn c01(_: &VerifyOptions, r: &mut Report) -> Result<()> {
    for beta in [0.5, 1.0, 2.0] {
        let mut worst: f64 = 0.0;
        for dim in [1, 2] {
            let g = PeriodicField::constant(dim, beta)?;
            let opts = SolverOptions::for_dim(dim);
            for e in direction_grid(dim, 8) {
                for lambda in [0.0, 0.5, 1.0, 2.0, 3.5] {
                    let gamma = principal_eigenvalue(g.polynomial(), &e, lambda, &opts)?;
                    worst = worst.max((gamma - beta - 0.5 * lambda * lambda).abs());
                }
            }
        }
        r.check(worst <= 1e-8, format!("beta {beta}: max |gamma - beta - lambda^2/2| = {worst:.1e}"));
        let s = find_lambda_e(&PeriodicField::constant(1, beta)?, &[1.0])?;
        let exact = (2.0 * beta).sqrt();
        r.check(
            (s.lambda_e - exact).abs() <= 1e-6 && (s.c_star - exact).abs() <= 1e-6,
            format!("beta {beta}: lambda_e - sqrt(2 beta) = {:.1e}, c* - sqrt(2 beta) = {:.1e}", s.lambda_e - exact, s.c_star - exact),
        );
    }
    Ok(())
}

fn c02(_: &VerifyOptions, r: &mut Report) -> Result<()> {
    let lambdas: Vec<f64> = (0..=8).map(|k| 0.5 * k as f64).collect();
    let theta: f64 = 0.3;
    let cases = [
        ("cosine", cosine_field(), vec![1.0]),
        ("two-mode", two_mode_field(), vec![-1.0]),
        ("checkerboard", checkerboard_field(), vec![theta.cos(), theta.sin()]),
    ];
    for (name, g, e) in cases {
        let opts = SolverOptions::for_dim(g.dim());
        let curve = gamma_curve(&g, &e, &lambdas, opts.truncation)?;
        let (gmin, gmax) = (g.min(), g.max());
        let worst = curve
            .points
            .iter()
            .map(|(l, gamma)| (gmin + 0.5 * l * l - gamma).max(gamma - gmax - 0.5 * l * l))
            .fold(f64::NEG_INFINITY, f64::max);
        let min_d2 = curve.second_differences().into_iter().fold(f64::INFINITY, f64::min);
        r.check(worst <= 1e-8, format!("{name}: worst bound excess {worst:.2e}"));
        r.check(min_d2 > 0.0, format!("{name}: min second difference {min_d2:.3e}"));
    }
    Ok(())
}

fn c03(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let g = laminate_field();
    let p = speed_profile(&g, 64, opts.exec)?;
    let bound = (2.0 * g.mean()).sqrt();
    r.check(
        p.min_speed() >= bound - 1e-6,
        format!("min c* = {:.6} over 64 directions, sqrt(2 mean g) = {bound:.6}", p.min_speed()),
    );
    Ok(())
}

/// Final time of the front-speed runs.
pub const FRONT_T_END: f64 = 120.0;

fn c04(_: &VerifyOptions, r: &mut Report) -> Result<()> {
    let g = cosine_field();
    for (sign, init) in [(1.0, InitialCondition::Heaviside), (-1.0, InitialCondition::Mirrored)] {
        let entry = find_lambda_e(&g, &[sign])?;
        let half_width = entry.c_star * FRONT_T_END + 10.0;
        let run = fkpp::solve_fkpp(&g, init, FkppParams::stable(half_width, 0.025, FRONT_T_END, 0.9))?;
        let front = fkpp::front_speed_estimate(&run)?;
        let rel = (front.speed - entry.c_star).abs() / entry.c_star;
        let (ahead, behind) = fkpp::two_sided_check(&run, entry.c_star, 0.2);
        r.check(rel <= 0.02, format!("e = {sign:+}: PDE {:.5} vs c* {:.5}, relative gap {rel:.4}", front.speed, entry.c_star));
        r.check(ahead < 0.05 && behind < 0.05, format!("e = {sign:+}: q ahead {ahead:.1e}, 1 - q behind {behind:.1e}"));
    }
    Ok(())
}

/// Tuned `eps_0` (the small-kappa threshold at `beta = gamma_e / 2`) for the
/// cosine field, together with its evaluator inputs.
pub fn tuned_epsilon(g: &PeriodicField, e: &[f64]) -> Result<(speed::SpeedEntry, f64)> {
    let entry = find_lambda_e(g, e)?;
    let eval = RateEvaluator::new(g, entry.clone());
    let kappa = small_kappa_threshold(&eval, 0.5 * entry.gamma_e)?.ok_or_else(|| Error::Degenerate("no kappa threshold".into()))?;
    Ok((entry, kappa))
}

fn c05(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let g = cosine_field();
    let (entry, eps) = tuned_epsilon(&g, &[1.0])?;
    let eval = RateEvaluator::new(&g, entry.clone());
    let at_c = eval.value(entry.c_star)?;
    r.check(at_c <= 1e-8, format!("I(c*) = {at_c:.1e}"));
    let rf = speed::rate_function(&g, &entry, &speed::default_zeta_grid(entry.c_star), opts.exec)?;
    let min_d2 = rf.second_differences().into_iter().fold(f64::INFINITY, f64::min);
    r.check(min_d2 >= -1e-10, format!("min second difference on {} points {min_d2:.1e}", rf.values.len()));
    r.check(rf.is_unimodal(), "unimodal with minimum at c*".to_string());
    r.note(format!("tuned eps = {eps}"));
    for alpha in [0.25, 0.5, 0.75] {
        let x = growth_exponent(&eval, alpha, eps)?;
        r.check(x > 0.0, format!("alpha {alpha}: exponent {x:.4}"));
    }
    Ok(())
}

fn menu(e: &[f64]) -> [Functional; 3] {
    [
        Functional::Constant,
        Functional::EndpointAbove { direction: e.to_vec(), level: 0.5 },
        Functional::PathMaxAbove { direction: e.to_vec(), level: 1.0 },
    ]
}

/// Tilted-path step used by the change-of-measure and LLN checks.
pub const TILTED_DT: f64 = 0.005;

fn c06(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let g = cosine_field();
    let reps = 10_000;
    let params = SimParams::new(0.005, 100_000)?;
    let entry = find_lambda_e(&g, &[1.0])?;
    let eig = principal_eigen(&g, &[1.0], entry.lambda_e, 16)?;
    let drift = tilted::drift_field(&eig);
    for (k, f) in menu(&[1.0]).iter().enumerate() {
        let m = bbm::many_to_one_check(&g, f, &[0.0], 2.0, reps, params, seed(opts, 60 + k as u64), opts.exec)?;
        r.check(m.z.abs() <= 3.0, format!("many-to-one {}: {:.4} vs {:.4}, z = {:.2}", m.functional, m.lhs.mean, m.rhs.mean, m.z));
        let c = tilted::change_of_measure_check(&g, &drift, f, &[0.0], 2.0, reps, TILTED_DT, seed(opts, 70 + k as u64), opts.exec)?;
        r.check(c.z.abs() <= 3.0, format!("change of measure {}: {:.4} vs {:.4}, z = {:.2}", c.functional, c.lhs.mean, c.rhs.mean, c.z));
    }
    Ok(())
}

fn tilted_terminal(opts: &VerifyOptions, id: u64) -> Result<(speed::SpeedEntry, Vec<f64>)> {
    let g = cosine_field();
    let entry = find_lambda_e(&g, &[1.0])?;
    let eig = principal_eigen(&g, &[1.0], entry.lambda_e, 16)?;
    let drift = tilted::drift_field(&eig);
    let paths = tilted::simulate_tilted(&drift, &[0.0], &[50.0], TILTED_DT, 10_000, seed(opts, id), opts.exec)?;
    Ok((entry, paths.iter().map(|p| p.y_hat(0, &[0.0], &[1.0])).collect()))
}

fn c07(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let (entry, y) = tilted_terminal(opts, 7)?;
    let est = crate::stats::Estimate::from_samples(&y);
    let z = est.z_exact(entry.c_star);
    r.check(z.abs() <= 3.0, format!("mean Y_hat_50 = {:.5} +- {:.5}, c* = {:.5}, z = {z:.2}", est.mean, est.se, entry.c_star));
    Ok(())
}

fn c08(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let (entry, y) = tilted_terminal(opts, 8)?;
    let g = cosine_field();
    let eval = RateEvaluator::new(&g, entry);
    let disp: Vec<f64> = y.iter().map(|v| 50.0 * v).collect();
    for eta in [-0.3, 0.3] {
        let c = tilted::cumulant_from_displacements(&disp, eta, 50.0);
        let exact = eval.cumulant(eta)?;
        let z = (c.value - exact) / c.se;
        r.check(z.abs() <= 3.0, format!("eta {eta:+}: {:.5} +- {:.5} vs Lambda {exact:.5}, z = {z:.2}", c.value, c.se));
        if c.heavy_tail {
            r.note(format!("eta {eta:+}: heavy tail, top 1% share {:.2}", c.top_share));
        }
    }
    Ok(())
}

fn c09(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let g = PeriodicField::constant(1, 1.0)?;
    let entry = find_lambda_e(&g, &[1.0])?;
    let eig = principal_eigen(&g, &[1.0], entry.lambda_e, 16)?;
    let drift = tilted::drift_field(&eig);
    let lo = 1.9 * 2f64.sqrt();
    let reference = 0.5 * (lo - entry.c_star).powi(2);
    let t_list: Vec<f64> = (1..=10).map(f64::from).collect();
    let table = tilted::ldp_tail_check(&drift, &[0.0], lo, f64::INFINITY, reference, &t_list, 100_000, TILTED_DT, seed(opts, 9), opts.exec)?;
    let first = table.exponents.iter().flatten().next().copied().unwrap_or(f64::NAN);
    r.note(format!(
        "exponents {}",
        table
            .t_list
            .iter()
            .zip(&table.exponents)
            .zip(&table.hits)
            .filter(|(_, h)| **h > 0)
            .map(|((t, x), h)| format!("t={t}:{:.3}({h})", x.unwrap_or(f64::NAN)))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    r.check(
        table.relative_error() <= 0.4,
        format!("t = {}: exponent {:.4} vs I = {reference:.4}, relative error {:.3}", table.selected_t, table.selected_exponent, table.relative_error()),
    );
    r.check(
        (table.selected_exponent - reference).abs() < (first - reference).abs(),
        format!("trend toward I: first exponent {first:.4}"),
    );
    Ok(())
}

fn c10(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let g = cosine_field();
    let entry = find_lambda_e(&g, &[1.0])?;
    let eps = 0.3;
    let big = SimParams::new(0.01, 5_000_000)?;
    let t_up: Vec<f64> = (1..=6).map(f64::from).collect();
    let up = bbm::halfspace_upper_stat(&g, &entry, &[0.0], eps, &t_up, 10_000, big, seed(opts, 100), opts.exec)?;
    let target = -eps * entry.gamma_e;
    let slope = up.fit.map_or(f64::NAN, |f| f.slope);
    r.note(format!("upper probabilities {}", fmt_probs(&up)));
    r.check(slope < 0.0 && slope / target <= 2.0 && slope / target >= 0.5, format!("upper slope {slope:.3} vs -eps gamma_e = {target:.3}"));
    r.check(up.is_nonincreasing_from(4.0), "upper probability nonincreasing from t = 4".to_string());
    let low = bbm::halfspace_lower_stat(&g, &entry, &[0.0], eps, &[4.0, 8.0, 12.0], 500, big, seed(opts, 101), opts.exec)?;
    r.note(format!("lower probabilities {}", fmt_probs(&low)));
    r.check(low.is_strictly_decreasing(), "lower probability strictly decreasing".to_string());
    let exact: Vec<String> = low
        .t_list
        .iter()
        .map(|t| fkpp::max_below_probability(&g, (1.0 - eps) * entry.c_star * t, *t, 0.025).map(|p| format!("t={t}:{p:.4}")))
        .collect::<Result<_>>()?;
    r.note(format!("PDE lower probabilities {}", exact.join(" ")));
    let p12 = low.probabilities[2];
    r.check(p12.mean <= 0.1, format!("lower probability at t = 12: {:.3} +- {:.3}", p12.mean, p12.se));
    Ok(())
}

fn fmt_probs(t: &bbm::HalfspaceTable) -> String {
    t.t_list.iter().zip(&t.probabilities).map(|(t, p)| format!("t={t}:{:.4}", p.mean)).collect::<Vec<_>>().join(" ")
}

/// Starting positions of the generation-process check.
pub const GENERATION_STARTS: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];

/// First-moment target for `E[#I_1]` when tuning `T0`.
pub const OFFSPRING_TARGET: f64 = 3.0;

/// Smallest integer `T0` in `1..=6` whose many-to-one prediction of
/// `E_x[#I_1]` reaches [`OFFSPRING_TARGET`] at every start.
pub fn tuned_t0(g: &PeriodicField, entry: &speed::SpeedEntry, eps: f64, seed: u64, exec: Exec) -> Result<(f64, f64)> {
    for t0 in (1..=6).map(f64::from) {
        let f = Functional::EndpointAbove { direction: entry.direction.clone(), level: (1.0 - eps) * entry.c_star * t0 };
        let mut worst = f64::INFINITY;
        for (k, x) in GENERATION_STARTS.iter().enumerate() {
            let m = bbm::feynman_kac(g, &f, &[*x], t0, 10_000, 0.01, derive_seed(seed, k as u64), exec)?;
            worst = worst.min(m.mean);
        }
        if worst >= OFFSPRING_TARGET {
            return Ok((t0, worst));
        }
    }
    Err(Error::Degenerate("no T0 up to 6 reaches the offspring target".into()))
}

fn c11(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let g = cosine_field();
    let (entry, eps) = tuned_epsilon(&g, &[1.0])?;
    let eval = RateEvaluator::new(&g, entry.clone());
    let x = growth_exponent(&eval, 0.75, eps)?;
    let (t0, predicted) = tuned_t0(&g, &entry, eps, seed(opts, 119), opts.exec)?;
    r.note(format!("eps = {eps}, growth exponent {x:.4}, T0 = {t0}, predicted E[#I_1] >= {predicted:.2}"));
    let params = SimParams::new(0.01, 1_000_000)?;
    for (k, start) in GENERATION_STARTS.iter().enumerate() {
        let s = bbm::generation_process(&g, &entry, &[*start], eps, t0, 5, 20, 200, params, seed(opts, 110 + k as u64), opts.exec)?;
        r.check(s.mean_offspring.mean > 1.0, format!("x = {start}: mean offspring {:.2}", s.mean_offspring.mean));
        r.check(s.survival_fraction > 0.2, format!("x = {start}: survival to n = 5 {:.3}", s.survival_fraction));
    }
    Ok(())
}

/// Wulff shape of a planar field from a 64-direction profile.
pub fn planar_shape(g: &PeriodicField, exec: Exec) -> Result<WulffShape> {
    wulff::build_wulff(&speed_profile(g, 64, exec)?)
}

fn c12(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let params = SimParams::new(0.01, 20_000)?;
    for (name, g) in [("homogeneous", PeriodicField::constant(2, 1.0)?), ("laminate", laminate_field())] {
        let w = planar_shape(&g, opts.exec)?;
        let table = bbm::shape_error(&g, &w, &[0.0, 0.0], &[4.0, 8.0, 12.0], 0.2, 50, params, seed(opts, 120), opts.exec)?;
        let m = &table.medians;
        r.check(table.medians_strictly_decreasing(), format!("{name}: medians {:.3} {:.3} {:.3}", m[0], m[1], m[2]));
        if name == "homogeneous" {
            r.check(m[2] <= 0.25, format!("{name}: median at t = 12 is {:.3}", m[2]));
        }
        r.note(format!("{name}: thinned runs {}", table.thinned_runs));
    }
    Ok(())
}

/// Random convex polygon inside `B(0, radius)` reaching every half-plane of
/// the certificate.
pub fn random_admissible_polygon(cert: &wulff::InnerCertificate, rng: &mut impl Rng) -> Vec<Point> {
    let radius = cert.radius;
    let mut pts: Vec<Point> = Vec::new();
    for (q, c) in cert.directions.iter().zip(&cert.offsets) {
        let s = c + rng.random::<f64>() * (radius - c) * 0.5;
        let room = (radius * radius - s * s).max(0.0).sqrt();
        let u = (2.0 * rng.random::<f64>() - 1.0) * room;
        pts.push([s * q[0] - u * q[1], s * q[1] + u * q[0]]);
    }
    for _ in 0..10 {
        let a = rng.random::<f64>() * std::f64::consts::TAU;
        let rr = radius * rng.random::<f64>().sqrt();
        pts.push([rr * a.cos(), rr * a.sin()]);
    }
    geometry::convex_hull(&pts)
}

fn c13(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let mut rng = replica_rng(seed(opts, 130), 0);
    for (name, g) in [("homogeneous", PeriodicField::constant(2, 1.0)?), ("laminate", laminate_field())] {
        let w = planar_shape(&g, opts.exec)?;
        for eps in [0.1, 0.2] {
            let outer = wulff::approx_outer(&w, eps)?;
            let boundary = geometry::sample_boundary(&w.scaled_vertices(1.0 + eps), wulff::COVER_SAMPLES);
            r.check(
                outer.covers(&boundary).is_none(),
                format!("{name} eps {eps}: |R| = {}, {} boundary samples covered", outer.directions.len(), boundary.len()),
            );
        }
        let eps = 0.2;
        let inner = wulff::approx_inner(&w, eps)?;
        let shrunk = w.scaled_vertices(1.0 - eps);
        let mut ok = 0;
        for _ in 0..50 {
            let k = random_admissible_polygon(&inner, &mut rng);
            if inner.hypothesis_holds(&k) && shrunk.iter().all(|v| geometry::contains(&k, *v, 1e-12)) {
                ok += 1;
            }
        }
        r.check(ok == 50, format!("{name} eps {eps}: |Q| = {}, theta = {:.2e}, {ok}/50 polygons contain (1 - eps) W", inner.directions.len(), inner.theta));
    }
    Ok(())
}

fn c14(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let g = cosine_field();
    let grid: Vec<f64> = (0..=8).map(|k| 2.0 + 0.5 * f64::from(k)).collect();
    let tail = bbm::branching_time_tail(&g, &[0.0], &grid, 100_000, 0.01, seed(opts, 14), opts.exec)?;
    r.check(
        tail.relative_rate_error() <= 0.1,
        format!("fitted {:.4} vs spectral {:.4}, relative {:.4}, theta {:.3}", tail.fitted_rate, tail.spectral_rate, tail.relative_rate_error(), tail.theta),
    );
    Ok(())
}

fn c15(opts: &VerifyOptions, r: &mut Report) -> Result<()> {
    let g = cosine_field();
    let table = bbm::ergodic_check(&g, &[5.0, 10.0, 20.0, 40.0], 10_000, 0.01, seed(opts, 15), opts.exec)?;
    let slope = table.slope.unwrap_or(f64::NAN);
    r.check((-1.3..=-0.8).contains(&slope), format!("variance slope {slope:.3}"));
    // E cos(2 pi B_s) = exp(-2 pi^2 s), summed with the simulator's trapezoid rule
    let (dt, t_end) = (0.01, 40.0);
    let r_step = (-2.0 * PI * PI * dt).exp();
    let steps = (t_end / dt).round() as i32;
    let bias: f64 = (0..steps).map(|k| 0.25 * dt * (r_step.powi(k) + r_step.powi(k + 1))).sum();
    let exact = table.field_mean + bias / t_end;
    let last = table.averages.last().expect("nonempty");
    let z = last.z_exact(exact);
    r.check(z.abs() <= 3.0, format!("mean at t = 40: {:.5} vs {exact:.5}, z = {z:.2}", last.mean));
    Ok(())
}
