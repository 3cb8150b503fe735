//! Gauss rules, curved cut-cell rules and arc-length rules on interface
//! segments.
//!
//! A cut side `K ∩ Ω_i` is bounded by a polygonal chain of the element
//! boundary and one interface arc. It is split from an apex into a curved
//! fan `{apex + t (r(ξ) - apex)}` over the arc plus straight triangles over
//! the chain edges not incident to the apex. The apex is the side's corner
//! from which the arc is most clearly visible (largest `min |G(ξ)|`), else
//! the best point inside a chain edge. When no boundary point sees the whole
//! arc, the region is cut straight from the arc midpoint to the nearest
//! chain point and both halves are treated recursively.

use std::io::Write;
use std::sync::OnceLock;

use crate::interface::{CutTopology, ElementClass, InterfaceSegment, Side};
use crate::mesh::{ElementGeometry, Mesh};
use crate::{cross, Curve, Error, Result, Vec2};

/// Smallest number of points along the curved direction of a fan cell.
pub const MIN_CURVED_POINTS: usize = 8;

const MAX_CACHED: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Polynomial exactness degree.
    pub degree: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadRule2d {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl QuadRule2d {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Vec2) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Physical quadrature on `K ∩ Ω_side` of a cut element.
#[derive(Debug, Clone, PartialEq)]
pub struct CutCellRule {
    pub element: usize,
    pub side: Side,
    pub rule: QuadRule2d,
}

/// Arc-length quadrature on one interface segment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentRule {
    pub params: Vec<f64>,
    pub points: Vec<Vec2>,
    /// Gauss weight times `|r'(ξ)|` times the interval scaling.
    pub weights: Vec<f64>,
    pub normals: Vec<Vec2>,
}

impl SegmentRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Vec2) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }
}

/// `n`-point Gauss–Legendre rule on `[-1, 1]`, exact to degree `2n - 1`.
pub fn gauss_1d(n: usize) -> QuadRule1d {
    assert!(n >= 1, "Gauss rule needs at least one point");
    if n <= MAX_CACHED {
        static CACHE: OnceLock<Vec<QuadRule1d>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| (1..=MAX_CACHED).map(compute_gauss).collect());
        cache[n - 1].clone()
    } else {
        compute_gauss(n)
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute_gauss(n: usize) -> QuadRule1d {
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        if n % 2 == 1 && i == n / 2 {
            x = 0.0;
        } else {
            for _ in 0..100 {
                let (p, dp) = legendre_and_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = x;
        points[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let rule = QuadRule1d { points, weights, degree: 2 * n - 1 };
    self_test(&rule);
    rule
}

fn self_test(rule: &QuadRule1d) {
    for k in 0..=rule.degree {
        let approx: f64 = rule.points.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
        let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
        assert!(
            (approx - exact).abs() <= 1e-13 * exact.abs().max(1.0),
            "Gauss rule with {} points fails on x^{k}",
            rule.points.len()
        );
    }
}

/// Gauss rule mapped to `[0, 1]`.
fn unit_gauss(n: usize) -> (Vec<f64>, Vec<f64>) {
    let g = gauss_1d(n);
    (g.points.iter().map(|x| 0.5 * (x + 1.0)).collect(), g.weights.iter().map(|w| 0.5 * w).collect())
}

/// Tensor Gauss rule with `n x n` points on a whole element.
pub fn tensor_rule(g: &ElementGeometry, n: usize) -> QuadRule2d {
    let rule = gauss_1d(n);
    let jac = g.jacobian();
    let det = jac.x * jac.y;
    let mut out = QuadRule2d { points: Vec::with_capacity(n * n), weights: Vec::with_capacity(n * n) };
    for (j, &eta) in rule.points.iter().enumerate() {
        for (i, &xi) in rule.points.iter().enumerate() {
            out.points.push(g.map(Vec2::new(xi, eta)));
            out.weights.push(rule.weights[i] * rule.weights[j] * det);
        }
    }
    out
}

/// Rule for `K ∩ Ω_side` of a cut element with `n` Gauss points per
/// straight direction; straight sub-cells are exact for total degree
/// `2n - 2`.
pub fn cut_cell_rule(mesh: &Mesh, topology: &CutTopology, element: usize, side: Side, n: usize) -> Result<CutCellRule> {
    if element >= mesh.num_elements() {
        return Err(Error::OutOfRange { index: element, len: mesh.num_elements() });
    }
    if topology.class(element) != ElementClass::Cut {
        return Err(Error::InvalidArgument(format!("element {element} is not cut")));
    }
    let fraction = topology.fraction(element, side);
    if fraction < topology.cut_threshold() {
        return Err(Error::DegenerateSliver { element, side: side.label(), fraction });
    }
    let seg = topology.segment_of(element).expect("cut elements host a segment");
    cut_rule_for_segment(mesh, topology.curve(), seg, side, n)
}

/// Volume rule for copy `side` on `element`: the full tensor rule for a pure
/// element of that side, the cut rule for a cut element, `None` otherwise.
pub fn volume_rule(mesh: &Mesh, topology: &CutTopology, element: usize, side: Side, n: usize) -> Result<Option<QuadRule2d>> {
    match topology.class(element) {
        ElementClass::Pure(s) if s == side => Ok(Some(tensor_rule(&mesh.geometry(element), n))),
        ElementClass::Pure(_) => Ok(None),
        ElementClass::Cut => Ok(Some(cut_cell_rule(mesh, topology, element, side, n)?.rule)),
    }
}

/// Arc-length Gauss rule with `n` points on a segment.
pub fn segment_rule(curve: &Curve, segment: &InterfaceSegment, n: usize) -> SegmentRule {
    let g = gauss_1d(n);
    let (a, b) = (segment.xi[0], segment.xi[1]);
    let half = 0.5 * (b - a);
    let mut out = SegmentRule::default();
    for (t, w) in g.points.iter().zip(&g.weights) {
        let xi = a + half * (t + 1.0);
        out.params.push(xi);
        out.points.push(curve.point(xi));
        out.weights.push(w * half * curve.derivative(xi).norm());
        out.normals.push(curve.normal(xi));
    }
    out
}

/// Perimeter coordinate in `[0, 4)`: edge `k` runs from corner `k` to `k+1`.
fn perimeter_coord(g: &ElementGeometry, p: Vec2) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..4 {
        let (a, b) = (g.corners[k], g.corners[(k + 1) % 4]);
        let d = b - a;
        let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        let dist = (a + t * d - p).norm();
        if dist < best.0 {
            best = (dist, k as f64 + t);
        }
    }
    best.1.rem_euclid(4.0)
}

/// Signed `G`: cross product of `r(ξ) - apex` with the unit tangent.
fn g_value(curve: &Curve, apex: Vec2, xi: f64) -> f64 {
    let d = curve.derivative(xi);
    cross(curve.point(xi) - apex, d) / d.norm()
}

/// Smallest `|G|` over the arc and the sign of `G`, if `G` keeps one sign.
/// The endpoints may touch zero (a tangency at a corner) but not change sign.
fn visibility(curve: &Curve, apex: Vec2, xa: f64, xb: f64, h: f64) -> Option<(f64, f64)> {
    let samples = 24;
    let g = |k: usize| g_value(curve, apex, xa + (xb - xa) * k as f64 / samples as f64);
    let interior: Vec<f64> = (1..samples).map(g).collect();
    let lo = interior.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = interior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ends = [g(0), g(samples)];
    let tol = 1e-12 * h;
    if lo > 0.0 && ends.iter().all(|&e| e > -tol) {
        Some((lo, 1.0))
    } else if hi < 0.0 && ends.iter().all(|&e| e < tol) {
        Some((-hi, -1.0))
    } else {
        None
    }
}

/// Apex quality if the region boundary (the chain from `r(xa)` to `r(xb)`,
/// then the arc back) winds monotonically around `chain[ci]`, so the fan
/// and the triangles tile the region without overlap.
fn star_score(curve: &Curve, chain: &[Vec2], ci: usize, xa: f64, xb: f64, h: f64) -> Option<f64> {
    let apex = chain[ci];
    let (score, sign) = visibility(curve, apex, xa, xb, h)?;
    let tol = 1e-12 * h * h;
    for m in 0..chain.len() - 1 {
        if m == ci || m + 1 == ci {
            continue;
        }
        let c = cross(chain[m] - apex, chain[m + 1] - chain[m]);
        if (chain[m + 1] - chain[m]).norm() > 1e-14 * h && sign * c > -tol {
            return None;
        }
    }
    Some(score)
}

/// Recursion depth of arc splitting in fan decompositions.
const MAX_SPLITS: usize = 8;

struct FanRules {
    curved: (Vec<f64>, Vec<f64>),
    straight: (Vec<f64>, Vec<f64>),
}

/// Region of `side` bounded by the arc `r([xa, xb])` and the polyline
/// `chain` from `r(xa)` to `r(xb)`. Apex candidates are interior chain
/// vertices, then points inside chain edges.
#[allow(clippy::too_many_arguments)]
fn fan_region(curve: &Curve, xa: f64, xb: f64, chain: &[Vec2], fan: &FanRules, side: Side, h: f64, depth: usize, rule: &mut QuadRule2d) -> Result<()> {
    let mut best: Option<(usize, Vec2, bool, f64)> = None;
    for i in 1..chain.len() - 1 {
        if let Some(score) = star_score(curve, chain, i, xa, xb, h) {
            if best.is_none_or(|b| score > b.3) {
                best = Some((i, chain[i], false, score));
            }
        }
    }
    if best.is_none() {
        for m in 0..chain.len() - 1 {
            for k in 1..8 {
                let q = chain[m] + (chain[m + 1] - chain[m]) * (k as f64 / 8.0);
                let mut trial = chain.to_vec();
                trial.insert(m + 1, q);
                if let Some(score) = star_score(curve, &trial, m + 1, xa, xb, h) {
                    if best.is_none_or(|b| score > b.3) {
                        best = Some((m, q, true, score));
                    }
                }
            }
        }
    }
    let Some((i, apex, inserted, _)) = best else {
        if depth == 0 {
            return Err(Error::UnresolvedTopology("arc not visible from its region boundary".into()));
        }
        // Cut from the arc midpoint along the normal into the region, to the
        // first chain crossing; the cut must stay on this side.
        let xm = 0.5 * (xa + xb);
        let rm = curve.point(xm);
        let dir = curve.normal(xm) * -side.jump_sign();
        let on_side = |p: Vec2| match side {
            Side::One => curve.level(p) < 0.0,
            Side::Two => curve.level(p) > 0.0,
        };
        let mut cut: Option<(usize, Vec2, f64)> = None;
        for m in 0..chain.len() - 1 {
            let (p0, e) = (chain[m], chain[m + 1] - chain[m]);
            let det = cross(dir, -e);
            if det.abs() < 1e-300 {
                continue;
            }
            let w = p0 - rm;
            let t = cross(w, -e) / det;
            let u = cross(dir, w) / det;
            let endpoint = (m == 0 && u < 1e-9) || (m + 2 == chain.len() && u > 1.0 - 1e-9);
            if !(0.0..=1.0).contains(&u) || t <= 1e-12 * h || endpoint || cut.is_some_and(|c| t >= c.2) {
                continue;
            }
            cut = Some((m, p0 + e * u, t));
        }
        let cut = cut.filter(|&(_, q, _)| (1..32).all(|k| on_side(rm + (q - rm) * (k as f64 / 32.0))));
        let Some((j, q, _)) = cut else {
            return Err(Error::UnresolvedTopology("no interior cut for an invisible arc".into()));
        };
        let mut left: Vec<Vec2> = chain[..=j].to_vec();
        left.extend([q, rm]);
        let mut right = vec![rm, q];
        right.extend_from_slice(&chain[j + 1..]);
        fan_region(curve, xa, xm, &left, fan, side, h, depth - 1, rule)?;
        return fan_region(curve, xm, xb, &right, fan, side, h, depth - 1, rule);
    };
    let mut chain = chain.to_vec();
    let ci = if inserted {
        chain.insert(i + 1, apex);
        i + 1
    } else {
        i
    };
    let (cu, wu) = &fan.curved;
    let (cv, wv) = &fan.straight;
    // Curved fan over the arc.
    let dxi = xb - xa;
    for (u, wu) in cu.iter().zip(wu) {
        let xi = xa + u * dxi;
        let r = curve.point(xi);
        let jac_arc = cross(r - apex, curve.derivative(xi)).abs() * dxi.abs();
        for (v, wv) in cv.iter().zip(wv) {
            rule.points.push(apex + (r - apex) * *v);
            rule.weights.push(wu * wv * v * jac_arc);
        }
    }
    // Straight triangles over chain edges away from the apex.
    for m in 0..chain.len() - 1 {
        if m == ci || m + 1 == ci {
            continue;
        }
        let (p, q) = (chain[m], chain[m + 1]);
        let area2 = cross(p - apex, q - p).abs();
        if area2 == 0.0 {
            continue;
        }
        for (u, wu) in cv.iter().zip(wv) {
            let e = p + (q - p) * *u;
            for (v, wv) in cv.iter().zip(wv) {
                rule.points.push(apex + (e - apex) * *v);
                rule.weights.push(wu * wv * v * area2);
            }
        }
    }
    Ok(())
}

pub(crate) fn cut_rule_for_segment(mesh: &Mesh, curve: &Curve, seg: &InterfaceSegment, side: Side, n: usize) -> Result<CutCellRule> {
    assert!(n >= 1);
    let g = mesh.geometry(seg.host);
    let (xa, xb) = (seg.xi[0], seg.xi[1]);
    let (a, b) = (curve.point(xa), curve.point(xb));
    let (sa, sb) = (perimeter_coord(&g, a), perimeter_coord(&g, b));
    // Ω₁ lies left of the curve, i.e. counterclockwise from the exit point
    // back to the entry point.
    let (from, to, first, last) = match side {
        Side::One => (sb, sa, b, a),
        Side::Two => (sa, sb, a, b),
    };
    let span = (to - from).rem_euclid(4.0);
    let tol = 1e-9;
    let mut chain = vec![first];
    for step in 1..=4 {
        let s = (from.floor() + step as f64).rem_euclid(4.0);
        let d = (s - from).rem_euclid(4.0);
        if d > tol && d < span - tol {
            let c = g.corners[s.round() as usize % 4];
            let level = curve.level(c);
            let wrong = match side {
                Side::One => level > 1e-12 * g.h,
                Side::Two => level < -1e-12 * g.h,
            };
            if wrong {
                return Err(Error::UnresolvedTopology(format!(
                    "corner ({}, {}) of element {} is on the wrong side of its cut",
                    c.x, c.y, seg.host
                )));
            }
            chain.push(c);
        }
    }
    chain.push(last);

    // Orient the chain from r(xa) to r(xb).
    if side == Side::One {
        chain.reverse();
    }
    let fan = FanRules { curved: unit_gauss(n.max(MIN_CURVED_POINTS)), straight: unit_gauss(n) };
    let mut rule = QuadRule2d::default();
    fan_region(curve, xa, xb, &chain, &fan, side, g.h, MAX_SPLITS, &mut rule)
        .map_err(|_| Error::UnresolvedTopology(format!("no fan decomposition of side {} in element {}", side.label(), seg.host)))?;

    let nudge = 1e-12 * g.h;
    for p in rule.points.iter_mut() {
        let l = curve.level(*p);
        if l.abs() < 1e-13 {
            let eps = 1e-7 * g.h;
            let grad = Vec2::new(
                curve.level(*p + Vec2::new(eps, 0.0)) - curve.level(*p - Vec2::new(eps, 0.0)),
                curve.level(*p + Vec2::new(0.0, eps)) - curve.level(*p - Vec2::new(0.0, eps)),
            );
            let dir = grad / grad.norm();
            *p -= side.jump_sign() * nudge * dir;
        }
    }

    Ok(CutCellRule { element: seg.host, side, rule })
}

/// Writes `x,y,w` rows for every volume rule of both sides.
pub fn dump_volume_rules(mesh: &Mesh, topology: &CutTopology, n: usize, out: &mut impl Write) -> Result<()> {
    writeln!(out, "element,side,x,y,w")?;
    for k in 0..mesh.num_elements() {
        for side in Side::BOTH {
            if let Some(rule) = volume_rule(mesh, topology, k, side, n)? {
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    writeln!(out, "{k},{},{:.17e},{:.17e},{:.17e}", side.label(), p.x, p.y, w)?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::{classify_elements, signed_side, ClassifyOptions};
    use crate::mesh::Rect;
    use std::f64::consts::PI;

    fn disk_setup(n: usize, r: f64) -> (Mesh, CutTopology) {
        let mesh = Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), n, n).unwrap();
        let topo = classify_elements(&mesh, &Curve::circle(0.0, 0.0, r), ClassifyOptions::default()).unwrap();
        (mesh, topo)
    }

    #[test]
    fn gauss_small_rules() {
        let g1 = gauss_1d(1);
        assert_eq!(g1.points, vec![0.0]);
        assert_eq!(g1.weights, vec![2.0]);
        let g2 = gauss_1d(2);
        assert!((g2.points[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((g2.points[0] + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((g2.weights[0] - 1.0).abs() < 1e-15 && (g2.weights[1] - 1.0).abs() < 1e-15);
        let g5 = gauss_1d(5);
        let i: f64 = g5.points.iter().zip(&g5.weights).map(|(x, w)| w * x.powi(8)).sum();
        assert!((i - 2.0 / 9.0).abs() < 1e-14);
        for n in 1..=40 {
            let g = gauss_1d(n);
            assert!(((g.weights.iter().sum::<f64>()) - 2.0).abs() < 1e-13);
            assert!(g.weights.iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn disk_area_and_circumference() {
        let r = 0.5;
        let (mesh, topo) = disk_setup(8, r);
        let mut area = 0.0;
        for k in 0..mesh.num_elements() {
            if let Some(rule) = volume_rule(&mesh, &topo, k, Side::One, 4).unwrap() {
                area += rule.measure();
            }
        }
        assert!((area - PI * r * r).abs() <= 1e-10 * PI * r * r);
        let curve = topo.curve();
        let len: f64 = topo.segments().iter().map(|s| segment_rule(curve, s, 4).weights.iter().sum::<f64>()).sum();
        assert!((len - 2.0 * PI * r).abs() <= 1e-12 * 2.0 * PI * r);
        let mx: f64 = topo.segments().iter().map(|s| segment_rule(curve, s, 6).integrate(|p| p.x)).sum();
        assert!(mx.abs() < 1e-12);
    }

    #[test]
    fn sides_partition_each_cut_element() {
        let (mesh, topo) = disk_setup(8, 0.6);
        for k in topo.cut_elements() {
            let a1 = cut_cell_rule(&mesh, &topo, k, Side::One, 3).unwrap().rule.measure();
            let a2 = cut_cell_rule(&mesh, &topo, k, Side::Two, 3).unwrap().rule.measure();
            let area = mesh.geometry(k).area();
            assert!((a1 + a2 - area).abs() <= 1e-12 * area, "element {k}");
        }
    }

    #[test]
    fn points_strictly_inside_their_side() {
        let mesh = Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), 16, 16).unwrap();
        let curve = Curve::ellipse(0.03, -0.01, 0.7, 0.45);
        let topo = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap();
        for k in topo.cut_elements() {
            let g = mesh.geometry(k);
            for side in Side::BOTH {
                let r = cut_cell_rule(&mesh, &topo, k, side, 4).unwrap();
                for (p, w) in r.rule.points.iter().zip(&r.rule.weights) {
                    assert!(*w > 0.0);
                    assert!(g.contains(*p, 1e-14));
                    assert_eq!(signed_side(&curve, *p, 0.0).unwrap(), side);
                }
            }
        }
    }

    #[test]
    fn pure_element_is_rejected() {
        let (mesh, topo) = disk_setup(8, 0.6);
        assert!(matches!(cut_cell_rule(&mesh, &topo, 0, Side::One, 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn straight_edge_segment_length() {
        let mesh = Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), 4, 4).unwrap();
        let curve = Curve::line(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0));
        let topo = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap();
        for s in topo.segments() {
            let len: f64 = segment_rule(&curve, s, 4).weights.iter().sum();
            assert!((len - 0.5).abs() < 1e-15);
        }
    }
}
