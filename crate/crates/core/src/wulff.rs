//! Wulff shape `W = { x : x.e <= c*(e) for all e }`, the spreading speed,
//! finite half-space certificates and Hausdorff distances.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::speed::SpeedProfile;

/// Boundary sample size used to verify the outer certificate.
pub const COVER_SAMPLES: usize = 10_000;

/// Direction count used for support-function comparisons in the plane.
pub const HAUSDORFF_DIRECTIONS: usize = 3600;

#[derive(Debug, Clone)]
pub struct WulffShape {
    pub dim: usize,
    /// Profile directions and their speeds `c*(e)`.
    pub directions: Vec<Vec<f64>>,
    pub speeds: Vec<f64>,
    /// Support function of the intersection on the profile directions;
    /// never larger than the corresponding speed.
    pub support: Vec<f64>,
    /// Counter-clockwise polygon vertices (two dimensions only).
    pub vertices: Vec<Point>,
    /// `[-c*(-1), c*(+1)]` in one dimension.
    pub interval: Option<(f64, f64)>,
    /// Bound with `c*` taking values in `(a, 1/a)`.
    pub a: f64,
}

fn angle_of(e: &[f64]) -> f64 {
    e[1].atan2(e[0]).rem_euclid(TAU)
}

pub fn build_wulff(profile: &SpeedProfile) -> Result<WulffShape> {
    let dim = profile.dim;
    if profile.entries.iter().any(|e| !(e.c_star > 0.0) || !e.c_star.is_finite()) {
        return Err(Error::Degenerate("speeds must be positive and finite".into()));
    }
    let mut directions: Vec<Vec<f64>> = profile.entries.iter().map(|e| e.direction.clone()).collect();
    let mut speeds: Vec<f64> = profile.entries.iter().map(|e| e.c_star).collect();
    let cmin = speeds.iter().copied().fold(f64::INFINITY, f64::min);
    let cmax = speeds.iter().copied().fold(0.0, f64::max);
    let a = 0.99 * cmin.min(1.0 / cmax);

    match dim {
        1 => {
            let plus = profile.entries.iter().find(|e| e.direction[0] > 0.0);
            let minus = profile.entries.iter().find(|e| e.direction[0] < 0.0);
            let (Some(p), Some(m)) = (plus, minus) else {
                return Err(Error::Degenerate("one-dimensional profile needs both directions".into()));
            };
            Ok(WulffShape {
                dim,
                directions: vec![vec![1.0], vec![-1.0]],
                speeds: vec![p.c_star, m.c_star],
                support: vec![p.c_star, m.c_star],
                vertices: Vec::new(),
                interval: Some((-m.c_star, p.c_star)),
                a,
            })
        }
        2 => {
            if directions.len() < 32 {
                return Err(Error::InvalidArgument("planar Wulff shapes need at least 32 directions".into()));
            }
            let mut order: Vec<usize> = (0..directions.len()).collect();
            order.sort_by(|&i, &j| angle_of(&directions[i]).total_cmp(&angle_of(&directions[j])));
            directions = order.iter().map(|&i| directions[i].clone()).collect();
            speeds = order.iter().map(|&i| speeds[i]).collect();
            let vertices = halfplane_intersection(&directions, &speeds)?;
            let support = directions
                .iter()
                .map(|e| geometry::support(&vertices, [e[0], e[1]]))
                .collect();
            Ok(WulffShape { dim, directions, speeds, support, vertices, interval: None, a })
        }
        3 => {
            let support = support_3d(&directions, &speeds)?;
            Ok(WulffShape { dim, directions, speeds, support, vertices: Vec::new(), interval: None, a })
        }
        _ => Err(Error::InvalidArgument(format!("dimension {dim}"))),
    }
}

/// Intersection of `{x : x.e_i <= c_i}` through the polar dual: the hull
/// of `e_i / c_i` has one edge per vertex of the intersection.
fn halfplane_intersection(directions: &[Vec<f64>], speeds: &[f64]) -> Result<Vec<Point>> {
    let dual: Vec<Point> = directions
        .iter()
        .zip(speeds)
        .map(|(e, c)| [e[0] / c, e[1] / c])
        .collect();
    let hull = geometry::convex_hull(&dual);
    if hull.len() < 3 || !geometry::contains(&hull, [0.0, 0.0], 0.0) {
        return Err(Error::Degenerate("intersection is unbounded".into()));
    }
    let n = hull.len();
    let origin_margin = (0..n)
        .map(|i| geometry::segment_distance([0.0, 0.0], hull[i], hull[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min);
    if origin_margin <= 0.0 {
        return Err(Error::Degenerate("intersection is unbounded".into()));
    }
    let mut vertices = Vec::with_capacity(n);
    for i in 0..n {
        let p = hull[i];
        let q = hull[(i + 1) % n];
        let det = p[0] * q[1] - p[1] * q[0];
        if det.abs() < 1e-300 {
            return Err(Error::Degenerate("parallel supporting lines".into()));
        }
        vertices.push([(q[1] - p[1]) / det, (p[0] - q[0]) / det]);
    }
    Ok(vertices)
}

/// Support values of a three-dimensional intersection on its own
/// directions, by brute-force linear programming over plane triples.
fn support_3d(directions: &[Vec<f64>], speeds: &[f64]) -> Result<Vec<f64>> {
    let n = directions.len();
    let mut feasible: Vec<[f64; 3]> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let m = nalgebra::Matrix3::new(
                    directions[i][0], directions[i][1], directions[i][2],
                    directions[j][0], directions[j][1], directions[j][2],
                    directions[k][0], directions[k][1], directions[k][2],
                );
                let Some(inv) = m.try_inverse() else { continue };
                let x = inv * nalgebra::Vector3::new(speeds[i], speeds[j], speeds[k]);
                let ok = directions
                    .iter()
                    .zip(speeds)
                    .all(|(e, c)| e[0] * x[0] + e[1] * x[1] + e[2] * x[2] <= c + 1e-9);
                if ok {
                    feasible.push([x[0], x[1], x[2]]);
                }
            }
        }
    }
    if feasible.is_empty() {
        return Err(Error::Degenerate("no vertices found".into()));
    }
    Ok(directions
        .iter()
        .map(|e| feasible.iter().map(|x| e[0] * x[0] + e[1] * x[1] + e[2] * x[2]).fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

impl WulffShape {
    /// Support function at an arbitrary unit direction.
    pub fn support_at(&self, e: &[f64]) -> f64 {
        match self.dim {
            1 => {
                let (lo, hi) = self.interval.expect("interval");
                if e[0] >= 0.0 { hi * e[0] } else { lo * e[0] }
            }
            2 => geometry::support(&self.vertices, [e[0], e[1]]),
            _ => {
                // the shape is known through its support samples only
                let best = self
                    .directions
                    .iter()
                    .zip(&self.support)
                    .max_by(|a, b| dot(a.0, e).total_cmp(&dot(b.0, e)))
                    .expect("nonempty");
                *best.1
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self.dim {
            1 => {
                let (lo, hi) = self.interval.expect("interval");
                x[0] >= lo - tol && x[0] <= hi + tol
            }
            2 => geometry::contains(&self.vertices, [x[0], x[1]], tol),
            _ => self.directions.iter().zip(&self.speeds).all(|(e, c)| dot(e, x) <= c + tol),
        }
    }

    /// Largest `max(|x|)` over the shape.
    pub fn radius(&self) -> f64 {
        match self.dim {
            1 => {
                let (lo, hi) = self.interval.expect("interval");
                lo.abs().max(hi.abs())
            }
            2 => self.vertices.iter().map(|v| geometry::norm(*v)).fold(0.0, f64::max),
            _ => self.support.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.dim {
            1 => {
                let (lo, hi) = self.interval.expect("interval");
                hi - lo
            }
            2 => {
                let mut d: f64 = 0.0;
                for a in &self.vertices {
                    for b in &self.vertices {
                        d = d.max(geometry::norm([a[0] - b[0], a[1] - b[1]]));
                    }
                }
                d
            }
            _ => 2.0 * self.radius(),
        }
    }

    /// Polygon (or interval endpoints) scaled by `s`.
    pub fn scaled_vertices(&self, s: f64) -> Vec<Point> {
        self.vertices.iter().map(|v| [s * v[0], s * v[1]]).collect()
    }

    pub fn as_body(&self) -> ConvexBody {
        match self.dim {
            1 => {
                let (lo, hi) = self.interval.expect("interval");
                ConvexBody::Interval(lo, hi)
            }
            2 => ConvexBody::Polygon(self.vertices.clone()),
            _ => ConvexBody::Support { directions: self.directions.clone(), values: self.support.clone() },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Out<'a> {
            dim: usize,
            a: f64,
            support: Vec<Vec<f64>>,
            vertices: &'a [Point],
            halfspaces: Vec<Vec<f64>>,
        }
        let support = self
            .directions
            .iter()
            .zip(&self.support)
            .map(|(e, h)| e.iter().copied().chain(std::iter::once(*h)).collect())
            .collect();
        let halfspaces = self
            .directions
            .iter()
            .zip(&self.speeds)
            .map(|(e, c)| e.iter().copied().chain(std::iter::once(*c)).collect())
            .collect();
        serde_json::to_value(Out { dim: self.dim, a: self.a, support, vertices: &self.vertices, halfspaces })
            .expect("serializable")
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Radial extent `w(e) = inf_{e'.e > 0} c*(e') / (e'.e)` over the profile
/// directions.
pub fn spreading_speed(shape: &WulffShape, e: &[f64]) -> f64 {
    shape
        .directions
        .iter()
        .zip(&shape.speeds)
        .filter_map(|(d, c)| {
            let p = dot(d, e);
            (p > 1e-12).then(|| c / p)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Finite direction set `R` with `cap_{r in R} H^-_{r, c*(r)} within (1+eps) W`.
#[derive(Debug, Clone)]
pub struct OuterCertificate {
    pub directions: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    pub samples_checked: usize,
}

impl OuterCertificate {
    /// Every sampled point of `boundary((1+eps) W)` lies strictly beyond
    /// some selected half-plane.
    pub fn covers(&self, points: &[Point]) -> Option<usize> {
        points.iter().position(|p| {
            !self
                .directions
                .iter()
                .zip(&self.offsets)
                .any(|(e, c)| p[0] * e[0] + p[1] * e[1] > *c)
        })
    }
}

pub fn approx_outer(shape: &WulffShape, eps: f64) -> Result<OuterCertificate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} not in (0, 1)")));
    }
    if shape.dim == 1 {
        let (lo, hi) = shape.interval.expect("interval");
        let covered = (1.0 + eps) * hi > hi && (1.0 + eps) * lo < lo;
        if !covered {
            return Err(Error::CoverFailure { index: 0 });
        }
        return Ok(OuterCertificate {
            directions: vec![vec![1.0], vec![-1.0]],
            offsets: vec![hi, -lo],
            samples_checked: 2,
        });
    }
    if shape.dim != 2 {
        return Err(Error::InvalidArgument("outer certificates are built in one and two dimensions".into()));
    }
    let boundary = geometry::sample_boundary(&shape.scaled_vertices(1.0 + eps), COVER_SAMPLES);
    let mut chosen: Vec<usize> = Vec::new();
    let margin = |p: &Point, i: usize| p[0] * shape.directions[i][0] + p[1] * shape.directions[i][1] - shape.speeds[i];
    for (idx, p) in boundary.iter().enumerate() {
        if chosen.iter().any(|&i| margin(p, i) > 0.0) {
            continue;
        }
        let (best, m) = (0..shape.directions.len())
            .map(|i| (i, margin(p, i)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if m <= 0.0 {
            return Err(Error::CoverFailure { index: idx });
        }
        chosen.push(best);
    }
    chosen.sort_unstable();
    chosen.dedup();
    let cert = OuterCertificate {
        directions: chosen.iter().map(|&i| shape.directions[i].clone()).collect(),
        offsets: chosen.iter().map(|&i| shape.speeds[i]).collect(),
        samples_checked: boundary.len(),
    };
    if let Some(index) = cert.covers(&boundary) {
        return Err(Error::CoverFailure { index });
    }
    Ok(cert)
}

/// Direction net `Q` such that any convex `K` inside `B(0, 2/a)` meeting
/// every `H^+_{q, offset(q)}` contains `(1 - eps) W`.
#[derive(Debug, Clone)]
pub struct InnerCertificate {
    pub directions: Vec<Vec<f64>>,
    /// Offsets `h_W(q)`: the tight support values of the shape.
    pub offsets: Vec<f64>,
    pub theta: f64,
    pub kappa: f64,
    pub radius: f64,
}

impl InnerCertificate {
    /// Whether a polygon reaches every half-plane of the certificate.
    pub fn hypothesis_holds(&self, k: &[Point]) -> bool {
        self.directions
            .iter()
            .zip(&self.offsets)
            .all(|(q, c)| geometry::support(k, [q[0], q[1]]) >= *c)
    }
}

/// Smallest net angle tried before giving up.
pub const THETA_MIN: f64 = 1e-12;

pub fn approx_inner(shape: &WulffShape, eps: f64) -> Result<InnerCertificate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} not in (0, 1)")));
    }
    let radius = 2.0 / shape.a;
    let kappa = 0.5 * ((1.0 - eps / 4.0) / (1.0 - eps / 2.0) - 1.0);
    if shape.dim == 1 {
        let (lo, hi) = shape.interval.expect("interval");
        return Ok(InnerCertificate {
            directions: vec![vec![1.0], vec![-1.0]],
            offsets: vec![hi, -lo],
            theta: 1.0,
            kappa,
            radius,
        });
    }
    if shape.dim != 2 {
        return Err(Error::InvalidArgument("inner certificates are built in one and two dimensions".into()));
    }
    // dense support samples of the tight support function
    let m = HAUSDORFF_DIRECTIONS;
    let dense: Vec<f64> = (0..m)
        .map(|i| {
            let t = TAU * i as f64 / m as f64;
            geometry::support(&shape.vertices, [t.cos(), t.sin()])
        })
        .collect();
    let hmin = dense.iter().copied().fold(f64::INFINITY, f64::min);
    let mut theta = 0.5;
    while theta >= THETA_MIN {
        let width_ok = radius * (2.0 * theta).sqrt() < 0.25 * eps * hmin;
        let half_angle = (1.0 - theta).acos();
        let window = (half_angle / (TAU / m as f64)).floor() as usize;
        let continuity_ok = width_ok
            && (0..m).all(|i| {
                (1..=window).all(|d| {
                    let j1 = (i + d) % m;
                    let j2 = (i + m - d % m) % m;
                    [j1, j2].iter().all(|&j| dense[j] > dense[i] * (1.0 - kappa) && dense[j] < dense[i] * (1.0 + kappa))
                })
            });
        if continuity_ok {
            // every direction within angle `half_angle` of some net point
            let step = 2.0 * half_angle * 0.999;
            let count = (TAU / step).ceil() as usize;
            let directions: Vec<Vec<f64>> = (0..count)
                .map(|j| {
                    let t = TAU * j as f64 / count as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect();
            let offsets = directions
                .iter()
                .map(|q| geometry::support(&shape.vertices, [q[0], q[1]]))
                .collect();
            return Ok(InnerCertificate { directions, offsets, theta, kappa, radius });
        }
        theta *= 0.5;
    }
    Err(Error::NetFailure { theta_min: THETA_MIN })
}

/// Minimum of `x.e` over `{x : x.q >= offset, |x| <= radius}` in the plane.
pub fn cap_min_projection(q: Point, offset: f64, radius: f64, e: Point) -> f64 {
    let d = offset;
    if d > radius {
        return f64::INFINITY;
    }
    let half = (radius * radius - d * d).max(0.0).sqrt();
    let perp = [-q[1], q[0]];
    let c1 = [d * q[0] + half * perp[0], d * q[1] + half * perp[1]];
    let c2 = [d * q[0] - half * perp[0], d * q[1] - half * perp[1]];
    let mut best = geometry::dot(c1, e).min(geometry::dot(c2, e));
    // the arc minimum -radius e is attained if that point lies in the cap
    let arc = [-radius * e[0], -radius * e[1]];
    if geometry::dot(arc, q) >= d {
        best = best.min(-radius);
    }
    best
}

/// A compact convex set in one of the representations the crate uses.
#[derive(Debug, Clone)]
pub enum ConvexBody {
    Interval(f64, f64),
    Polygon(Vec<Point>),
    /// Known through support values on unit directions.
    Support { directions: Vec<Vec<f64>>, values: Vec<f64> },
}

impl ConvexBody {
    pub fn support(&self, e: &[f64]) -> f64 {
        match self {
            ConvexBody::Interval(lo, hi) => {
                if e[0] >= 0.0 { hi * e[0] } else { lo * e[0] }
            }
            ConvexBody::Polygon(v) => geometry::support(v, [e[0], e[1]]),
            ConvexBody::Support { directions, values } => {
                let i = directions
                    .iter()
                    .enumerate()
                    .max_by(|a, b| dot(a.1, e).total_cmp(&dot(b.1, e)))
                    .map(|(i, _)| i)
                    .expect("nonempty");
                values[i]
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            ConvexBody::Interval(..) => 1,
            ConvexBody::Polygon(_) => 2,
            ConvexBody::Support { directions, .. } => directions[0].len(),
        }
    }
}

/// Hausdorff distance between convex bodies as the largest support-function
/// gap over a direction grid. Exact for intervals; in the plane the grid has
/// [`HAUSDORFF_DIRECTIONS`] directions.
pub fn hausdorff(a: &ConvexBody, b: &ConvexBody) -> f64 {
    if let (ConvexBody::Support { directions, .. }, _) | (_, ConvexBody::Support { directions, .. }) = (a, b) {
        return directions
            .iter()
            .map(|e| (a.support(e) - b.support(e)).abs())
            .fold(0.0, f64::max);
    }
    match a.dim() {
        1 => {
            let (ConvexBody::Interval(a0, a1), ConvexBody::Interval(b0, b1)) = (a, b) else {
                unreachable!("dimension mismatch")
            };
            (a0 - b0).abs().max((a1 - b1).abs())
        }
        _ => (0..HAUSDORFF_DIRECTIONS)
            .map(|i| {
                let t = TAU * i as f64 / HAUSDORFF_DIRECTIONS as f64;
                let e = [t.cos(), t.sin()];
                (a.support(&e) - b.support(&e)).abs()
            })
            .fold(0.0, f64::max),
    }
}

/// Hausdorff distance between a finite planar point set and a convex polygon.
/// The polygon side is sampled at `boundary_samples` boundary points plus
/// its vertices.
pub fn hausdorff_points_polygon(points: &[Point], polygon: &[Point], boundary_samples: usize) -> f64 {
    let outward = points
        .iter()
        .map(|p| geometry::distance_to_polygon(polygon, *p))
        .fold(0.0, f64::max);
    let mut probes = geometry::sample_boundary(polygon, boundary_samples);
    probes.extend_from_slice(polygon);
    let inward = probes
        .iter()
        .map(|q| {
            points
                .iter()
                .map(|p| geometry::norm([p[0] - q[0], p[1] - q[1]]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    outward.max(inward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speed::direction_grid;
    use approx::assert_abs_diff_eq;

    fn ball(r: f64, n: usize) -> WulffShape {
        build_wulff(&SpeedProfile::synthetic(2, direction_grid(2, n).into_iter().map(|e| (e, r)))).unwrap()
    }

    #[test]
    fn constant_speed_gives_regular_polygon() {
        let n = 64;
        let w = ball(1.5, n);
        assert_eq!(w.vertices.len(), n);
        let tol = 1.5 * (1.0 - (std::f64::consts::PI / n as f64).cos());
        for v in &w.vertices {
            let r = geometry::norm(*v);
            assert!(r >= 1.5 - 1e-12 && r <= 1.5 / (std::f64::consts::PI / n as f64).cos() + 1e-12);
            assert!((r - 1.5).abs() <= 1.5 * tol / (1.0 - tol) + 1e-12);
        }
        for (h, c) in w.support.iter().zip(&w.speeds) {
            assert!(*h <= c + 1e-12);
        }
    }

    #[test]
    fn one_dimensional_interval() {
        let p = SpeedProfile::synthetic(1, vec![(vec![1.0], 2.0), (vec![-1.0], 1.0)]);
        let w = build_wulff(&p).unwrap();
        assert_eq!(w.interval, Some((-1.0, 2.0)));
        assert_eq!(spreading_speed(&w, &[1.0]), 2.0);
        let outer = approx_outer(&w, 0.3).unwrap();
        assert_eq!(outer.directions.len(), 2);
        let inner = approx_inner(&w, 0.3).unwrap();
        assert_eq!(inner.directions, vec![vec![1.0], vec![-1.0]]);
    }

    #[test]
    fn too_few_directions_rejected() {
        let p = SpeedProfile::synthetic(2, direction_grid(2, 8).into_iter().map(|e| (e, 1.0)));
        assert!(build_wulff(&p).is_err());
        let bad = SpeedProfile::synthetic(2, direction_grid(2, 40).into_iter().map(|e| (e, -1.0)));
        assert!(matches!(build_wulff(&bad), Err(Error::Degenerate(_))));
    }

    #[test]
    fn positive_homogeneity() {
        let prof = SpeedProfile::synthetic(
            2,
            direction_grid(2, 48).into_iter().map(|e| {
                let c = 1.0 + 0.5 * e[0].abs() + 0.2 * e[1] * e[1];
                (e, c)
            }),
        );
        let w = build_wulff(&prof).unwrap();
        for s in [0.5, 2.0] {
            let ws = build_wulff(&prof.scaled(s)).unwrap();
            assert_eq!(ws.vertices.len(), w.vertices.len());
            for (a, b) in ws.vertices.iter().zip(&w.vertices) {
                assert_abs_diff_eq!(a[0], s * b[0], epsilon = 1e-10);
                assert_abs_diff_eq!(a[1], s * b[1], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn spreading_speed_not_above_front_speed() {
        let prof = SpeedProfile::synthetic(
            2,
            direction_grid(2, 64).into_iter().map(|e| {
                let c = 1.0 + 0.5 * e[0].abs();
                (e, c)
            }),
        );
        let w = build_wulff(&prof).unwrap();
        for (e, c) in w.directions.iter().zip(&w.speeds) {
            assert!(spreading_speed(&w, e) <= c + 1e-12);
        }
    }

    #[test]
    fn hausdorff_of_concentric_balls() {
        let a = ball(1.0, 256);
        let b = ball(1.3, 256);
        assert_eq!(hausdorff(&a.as_body(), &a.as_body()), 0.0);
        assert_abs_diff_eq!(hausdorff(&a.as_body(), &b.as_body()), 0.3, epsilon = 0.3 * 1e-3);
        let i = ConvexBody::Interval(-1.0, 2.0);
        let j = ConvexBody::Interval(-1.5, 2.1);
        assert_abs_diff_eq!(hausdorff(&i, &j), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn cap_projection_matches_brute_force() {
        let q = [0.6, 0.8];
        let radius = 3.0;
        for e in [[1.0, 0.0], [0.0, -1.0], [-0.6, -0.8], [0.8, -0.6]] {
            let exact = cap_min_projection(q, 1.2, radius, e);
            let mut brute = f64::INFINITY;
            for i in 0..400 {
                for j in 0..400 {
                    let x = [-radius + 2.0 * radius * i as f64 / 399.0, -radius + 2.0 * radius * j as f64 / 399.0];
                    if geometry::norm(x) <= radius && geometry::dot(x, q) >= 1.2 {
                        brute = brute.min(geometry::dot(x, e));
                    }
                }
            }
            assert!((exact - brute).abs() < 0.03, "{e:?}: {exact} vs {brute}");
            assert!(exact <= brute + 1e-12);
        }
    }
}
