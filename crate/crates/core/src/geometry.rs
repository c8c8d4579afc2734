//! Planar convex geometry helpers.

pub type Point = [f64; 2];

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Convex hull in counter-clockwise order without collinear points
/// (monotone chain).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Support function `max_{v} v.e` over a vertex list.
pub fn support(vertices: &[Point], e: Point) -> f64 {
    vertices.iter().map(|v| dot(*v, e)).fold(f64::NEG_INFINITY, f64::max)
}

/// Whether `p` lies in the closed CCW polygon, with slack `tol`.
pub fn contains(polygon: &[Point], p: Point, tol: f64) -> bool {
    let n = polygon.len();
    match n {
        0 => false,
        1 => norm([p[0] - polygon[0][0], p[1] - polygon[0][1]]) <= tol,
        2 => segment_distance(p, polygon[0], polygon[1]) <= tol,
        _ => (0..n).all(|i| {
            let a = polygon[i];
            let b = polygon[(i + 1) % n];
            let len = norm([b[0] - a[0], b[1] - a[1]]);
            cross(a, b, p) >= -tol * len
        }),
    }
}

pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 { (dot(ap, ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    norm([ap[0] - t * ab[0], ap[1] - t * ab[1]])
}

/// Euclidean distance from `p` to the closed convex polygon (0 inside).
pub fn distance_to_polygon(polygon: &[Point], p: Point) -> f64 {
    if contains(polygon, p, 0.0) {
        return 0.0;
    }
    let n = polygon.len();
    (0..n)
        .map(|i| segment_distance(p, polygon[i], polygon[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

pub fn perimeter(polygon: &[Point]) -> f64 {
    let n = polygon.len();
    (0..n)
        .map(|i| {
            let a = polygon[i];
            let b = polygon[(i + 1) % n];
            norm([b[0] - a[0], b[1] - a[1]])
        })
        .sum()
}

/// `count` points equally spaced in arc length along the boundary.
pub fn sample_boundary(polygon: &[Point], count: usize) -> Vec<Point> {
    let n = polygon.len();
    let total = perimeter(polygon);
    let step = total / count as f64;
    let mut out = Vec::with_capacity(count);
    let mut edge = 0;
    let mut edge_start = 0.0;
    for i in 0..count {
        let s = i as f64 * step;
        loop {
            let a = polygon[edge % n];
            let b = polygon[(edge + 1) % n];
            let len = norm([b[0] - a[0], b[1] - a[1]]);
            if s <= edge_start + len || edge + 1 >= n {
                let t = if len > 0.0 { ((s - edge_start) / len).clamp(0.0, 1.0) } else { 0.0 };
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                break;
            }
            edge_start += len;
            edge += 1;
        }
    }
    out
}

/// Writes `p` as a convex combination of at most three polygon vertices
/// (fan triangulation from vertex 0). Returns vertex indices and weights.
pub fn caratheodory(polygon: &[Point], p: Point, tol: f64) -> Option<([usize; 3], [f64; 3])> {
    let n = polygon.len();
    if n < 3 {
        return None;
    }
    let v0 = polygon[0];
    for i in 1..n - 1 {
        let (a, b) = (polygon[i], polygon[i + 1]);
        let det = cross(v0, a, b);
        if det.abs() < f64::MIN_POSITIVE {
            continue;
        }
        let wa = cross(v0, p, b) / det;
        let wb = cross(v0, a, p) / det;
        let w0 = 1.0 - wa - wb;
        if wa >= -tol && wb >= -tol && w0 >= -tol {
            return Some(([0, i, i + 1], [w0, wa, wb]));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square() -> Vec<Point> {
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let mut pts = square();
        pts.extend([[0.5, 0.5], [0.5, 0.0], [0.2, 0.7]]);
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        for p in square() {
            assert!(h.contains(&p));
        }
    }

    #[test]
    fn containment_and_distance() {
        let s = square();
        assert!(contains(&s, [0.5, 0.5], 0.0));
        assert!(!contains(&s, [1.5, 0.5], 0.0));
        assert_abs_diff_eq!(distance_to_polygon(&s, [1.5, 0.5]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(distance_to_polygon(&s, [2.0, 2.0]), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(distance_to_polygon(&s, [0.3, 0.3]), 0.0);
    }

    #[test]
    fn boundary_samples_lie_on_boundary() {
        let s = square();
        let b = sample_boundary(&s, 400);
        assert_eq!(b.len(), 400);
        for p in b {
            let on_edge = (0..4).any(|i| segment_distance(p, s[i], s[(i + 1) % 4]) < 1e-12);
            assert!(on_edge);
        }
    }

    #[test]
    fn caratheodory_reproduces_point() {
        let hex: Vec<Point> = (0..6)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 6.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let p = [0.3, -0.4];
        let (idx, w) = caratheodory(&hex, p, 1e-12).unwrap();
        let mut q = [0.0, 0.0];
        for k in 0..3 {
            q[0] += w[k] * hex[idx[k]][0];
            q[1] += w[k] * hex[idx[k]][1];
        }
        assert_abs_diff_eq!(q[0], p[0], epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], p[1], epsilon = 1e-12);
        assert!(caratheodory(&hex, [2.0, 0.0], 1e-12).is_none());
    }
}
