//! Independent oracles: Floquet shooting for one-dimensional eigenvalues,
//! separation of variables for laminates, direct Legendre maximization,
//! closed-form laws for constant fields and the F-KPP solution of the
//! lower half-space event.

use gbbm::bbm::{self, Population, SimParams};
use gbbm::env::PeriodicField;
use gbbm::exec::replica_rng;
use gbbm::fkpp;
use gbbm::spectral::{principal_eigenvalue, SolverOptions};
use gbbm::speed::{self, RateEvaluator};
use gbbm::stats::{ks_critical_1pct, ks_statistic};
use gbbm::verify::{cosine_field, laminate_field, planar_shape, two_mode_field};
use gbbm::wulff::{hausdorff, ConvexBody};
use gbbm::Exec;

/// Minimum of a unimodal function on `[a, b]`: `(argmin, min)`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Trace of the monodromy of `v'' = 2 (gamma - g) v` over one period, RK4.
fn monodromy_trace(g: &PeriodicField, gamma: f64) -> f64 {
    let n = 4000;
    let h = 1.0 / n as f64;
    let rhs = |x: f64, y: [f64; 4]| {
        let k = 2.0 * (gamma - g.eval(&[x]));
        [y[1], k * y[0], y[3], k * y[2]]
    };
    let mut y = [1.0, 0.0, 0.0, 1.0];
    for i in 0..n {
        let x = i as f64 * h;
        let k1 = rhs(x, y);
        let k2 = rhs(x + h / 2.0, std::array::from_fn(|j| y[j] + h / 2.0 * k1[j]));
        let k3 = rhs(x + h / 2.0, std::array::from_fn(|j| y[j] + h / 2.0 * k2[j]));
        let k4 = rhs(x + h, std::array::from_fn(|j| y[j] + h * k3[j]));
        for j in 0..4 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y[0] + y[3]
}

/// Largest gamma with `trace = 2 cosh(lambda)`: the multiplier `e^lambda`
/// of `v = e^{lambda x} psi`.
fn floquet_gamma(g: &PeriodicField, lambda: f64) -> f64 {
    let target = 2.0 * lambda.cosh();
    let f = |gamma: f64| monodromy_trace(g, gamma) - target;
    let mut hi = g.max() + 0.5 * lambda * lambda + 0.01;
    assert!(f(hi) > 0.0);
    let mut lo = hi - 0.01;
    while f(lo) > 0.0 {
        hi = lo;
        lo -= 0.01;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn one_dimensional_eigenvalues_match_floquet() {
    let opts = SolverOptions::for_dim(1);
    for g in [cosine_field(), two_mode_field()] {
        for lambda in [0.0, 0.7, 1.5, 3.0] {
            for e in [1.0, -1.0] {
                let gamma = principal_eigenvalue(g.polynomial(), &[e], lambda, &opts).unwrap();
                let oracle = floquet_gamma(&g, lambda);
                assert!((gamma - oracle).abs() < 1e-8, "lambda {lambda}: {gamma} vs {oracle}");
            }
        }
    }
}

#[test]
fn laminate_separates_variables() {
    let g = laminate_field();
    let g1 = cosine_field();
    let opts = SolverOptions::for_dim(2);
    for theta in [0.0, 0.4, 1.0, 1.5707963267948966, 2.5] {
        let e = [f64::cos(theta), f64::sin(theta)];
        for lambda in [0.5, 1.5] {
            let mu = lambda * e[0];
            let oracle = floquet_gamma(&g1, mu.abs()) - 0.5 * mu * mu + 0.5 * lambda * lambda;
            let gamma = principal_eigenvalue(g.polynomial(), &e, lambda, &opts).unwrap();
            assert!((gamma - oracle).abs() < 1e-8, "theta {theta}, lambda {lambda}: {gamma} vs {oracle}");
        }
    }
}

#[test]
fn front_speed_matches_floquet_minimization() {
    let g = cosine_field();
    let (lam, ratio) = golden_section(|l| floquet_gamma(&g, l) / l, 0.5, 3.0, 1e-9);
    let entry = speed::find_lambda_e(&g, &[1.0]).unwrap();
    assert!((entry.c_star - ratio).abs() < 1e-7, "{} vs {ratio}", entry.c_star);
    assert!((entry.lambda_e - lam).abs() < 1e-3);
}

#[test]
fn rate_function_matches_direct_legendre() {
    let g = cosine_field();
    let entry = speed::find_lambda_e(&g, &[1.0]).unwrap();
    let eval = RateEvaluator::new(&g, entry.clone());
    let big_lambda = |eta: f64| floquet_gamma(&g, entry.lambda_e + eta) - entry.gamma_e;
    for s in [0.8, 0.9, 1.1, 1.25] {
        let zeta = s * entry.c_star;
        let (_, neg) = golden_section(|eta| big_lambda(eta) - eta * zeta, -1.0, 1.0, 1e-10);
        let oracle = -neg;
        let value = eval.value(zeta).unwrap();
        assert!((value - oracle).abs() < 1e-7, "zeta {zeta}: {value} vs {oracle}");
    }
}

#[test]
fn dilation_hausdorff_is_scaled_radius() {
    let w = planar_shape(&laminate_field(), Exec::Parallel).unwrap();
    for s in [1.1, 1.5] {
        let d = hausdorff(&w.as_body(), &ConvexBody::Polygon(w.scaled_vertices(s)));
        let expected = (s - 1.0) * w.radius();
        assert!((d - expected).abs() < 1e-3 * expected, "{d} vs {expected}");
    }
}

#[test]
fn root_lifetimes_are_exponential_for_constant_field() {
    let beta = 1.5;
    let g = PeriodicField::constant(1, beta).unwrap();
    let table = g.table();
    let params = SimParams::new(0.01, 10_000).unwrap();
    let n = 4000;
    let samples: Vec<f64> = (0..n)
        .map(|r| {
            let mut pop = Population::new(&table, &[0.0], params, replica_rng(5, r)).with_lifetimes();
            let mut t = 0.0;
            while pop.lifetimes().is_empty() {
                t += 0.5;
                pop.advance_to(t);
            }
            pop.lifetimes()[0]
        })
        .collect();
    let d = ks_statistic(&samples, |x| 1.0 - (-beta * x).exp());
    assert!(d < ks_critical_1pct(n as usize), "KS {d}");
}

#[test]
fn lower_halfspace_probability_matches_pde() {
    let g = cosine_field();
    let entry = speed::find_lambda_e(&g, &[1.0]).unwrap();
    let eps = 0.3;
    let t_list = [2.0, 4.0];
    let params = SimParams::new(0.01, 1_000_000).unwrap();
    let table = bbm::halfspace_lower_stat(&g, &entry, &[0.0], eps, &t_list, 2000, params, 31, Exec::Parallel).unwrap();
    for (t, p) in t_list.iter().zip(&table.probabilities) {
        let exact = fkpp::max_below_probability(&g, (1.0 - eps) * entry.c_star * t, *t, 0.025).unwrap();
        let z = p.z_exact(exact);
        assert!(z.abs() < 3.5, "t {t}: {} vs {exact}, z {z}", p.mean);
    }
}

#[test]
fn lower_halfspace_limit_at_t12_is_far_above_one_tenth() {
    let g = cosine_field();
    let entry = speed::find_lambda_e(&g, &[1.0]).unwrap();
    let p = fkpp::max_below_probability(&g, 0.7 * entry.c_star * 12.0, 12.0, 0.025).unwrap();
    assert!((0.3..0.36).contains(&p), "{p}");
}

#[test]
fn homogeneous_maximum_lags_behind_linear_front() {
    // median of the rightmost particle against the F-KPP half level
    let g = PeriodicField::constant(1, 1.0).unwrap();
    let times = [2.0, 4.0];
    let params = SimParams::new(0.01, 1_000_000).unwrap();
    let runs = bbm::simulate_replicas(&g, &[0.0], &times, params, 400, 17, Exec::Parallel).unwrap();
    for (k, t) in times.iter().enumerate() {
        let maxima: Vec<f64> = runs.iter().map(|r| r[k].max_projection(&[1.0])).collect();
        let median = gbbm::stats::median(&maxima);
        // P[max <= m] = 1/2 solved by bisection on the PDE oracle
        let (mut lo, mut hi) = (0.0, 2f64.sqrt() * t);
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if fkpp::max_below_probability(&g, mid, *t, 0.025).unwrap() < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let pde = 0.5 * (lo + hi);
        assert!((median - pde).abs() < 0.2, "t {t}: {median} vs {pde}");
        assert!(pde < 2f64.sqrt() * t - 0.2);
    }
}

#[test]
fn homogeneous_upper_event_obeys_first_moment_bound() {
    let g = PeriodicField::constant(1, 1.0).unwrap();
    let entry = speed::find_lambda_e(&g, &[1.0]).unwrap();
    let params = SimParams::new(0.01, 1_000_000).unwrap();
    let table = bbm::halfspace_upper_stat(&g, &entry, &[0.0], 0.3, &[6.0], 2000, params, 41, Exec::Parallel).unwrap();
    let c = 1.3 * 2f64.sqrt();
    let bound = (6.0 * (1.0 - 0.5 * c * c)).exp();
    let p = table.probabilities[0];
    assert!(p.mean <= 0.05, "{}", p.mean);
    assert!(p.mean <= bound + 3.0 * p.se.max(1e-3), "{} vs {bound}", p.mean);
}

#[test]
fn homogeneous_lower_event_at_t10_is_one_tenth() {
    // dx = 0.05, 0.025, 0.0125 give 0.0999, 0.1004, 0.1000
    let g = PeriodicField::constant(1, 1.0).unwrap();
    let level = 0.5 * 2f64.sqrt() * 10.0;
    let exact = fkpp::max_below_probability(&g, level, 10.0, 0.025).unwrap();
    assert!((exact - 0.1).abs() < 0.002, "{exact}");
}
