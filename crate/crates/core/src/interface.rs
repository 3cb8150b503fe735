//! Parametric interface curves, element classification and the induced
//! partition of the interface into per-element segments.
//!
//! Orientation convention: a curve is traversed with `Ω₁` on its left, so the
//! unit normal `n = (r'_y, -r'_x) / |r'|` points out of `Ω₁` into `Ω₂`.

use serde::{Deserialize, Serialize};

use crate::mesh::{ElementGeometry, Mesh};
use crate::quadrature;
use crate::{cross, Error, Result, Vec2};

/// One of the two subdomains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::One, Side::Two];

    pub fn index(self) -> usize {
        match self {
            Side::One => 0,
            Side::Two => 1,
        }
    }

    /// 1 or 2.
    pub fn label(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_label(label: u8) -> Option<Side> {
        match label {
            1 => Some(Side::One),
            2 => Some(Side::Two),
            _ => None,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }

    /// Sign of this side's trace in the jump `[v] = v|Ω₁ - v|Ω₂`.
    pub fn jump_sign(self) -> f64 {
        match self {
            Side::One => 1.0,
            Side::Two => -1.0,
        }
    }
}

/// Built-in interface curves with closed-form parameterizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Curve {
    /// Counterclockwise circle; `Ω₁` is the disk.
    Circle { center: Vec2, radius: f64 },
    /// Counterclockwise axis-aligned ellipse; `Ω₁` is the interior.
    Ellipse { center: Vec2, semi_x: f64, semi_y: f64 },
    /// Open straight segment from `start` to `end` whose endpoints lie on the
    /// domain boundary; `Ω₁` is on the left.
    Line { start: Vec2, end: Vec2 },
}

impl Curve {
    pub fn circle(cx: f64, cy: f64, radius: f64) -> Self {
        Curve::Circle { center: Vec2::new(cx, cy), radius }
    }

    pub fn ellipse(cx: f64, cy: f64, semi_x: f64, semi_y: f64) -> Self {
        Curve::Ellipse { center: Vec2::new(cx, cy), semi_x, semi_y }
    }

    pub fn line(start: Vec2, end: Vec2) -> Self {
        Curve::Line { start, end }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Curve::Circle { radius, .. } => radius > 0.0 && radius.is_finite(),
            Curve::Ellipse { semi_x, semi_y, .. } => semi_x > 0.0 && semi_y > 0.0 && semi_x.is_finite() && semi_y.is_finite(),
            Curve::Line { start, end } => (end - start).norm() > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("degenerate curve {self:?}")))
        }
    }

    pub fn is_closed(&self) -> bool {
        !matches!(self, Curve::Line { .. })
    }

    /// Length of the parameter interval `[0, L)`.
    pub fn period(&self) -> f64 {
        match self {
            Curve::Circle { .. } | Curve::Ellipse { .. } => std::f64::consts::TAU,
            Curve::Line { .. } => 1.0,
        }
    }

    pub fn point(&self, xi: f64) -> Vec2 {
        match *self {
            Curve::Circle { center, radius } => center + radius * Vec2::new(xi.cos(), xi.sin()),
            Curve::Ellipse { center, semi_x, semi_y } => center + Vec2::new(semi_x * xi.cos(), semi_y * xi.sin()),
            Curve::Line { start, end } => start + xi * (end - start),
        }
    }

    pub fn derivative(&self, xi: f64) -> Vec2 {
        match *self {
            Curve::Circle { radius, .. } => radius * Vec2::new(-xi.sin(), xi.cos()),
            Curve::Ellipse { semi_x, semi_y, .. } => Vec2::new(-semi_x * xi.sin(), semi_y * xi.cos()),
            Curve::Line { start, end } => end - start,
        }
    }

    /// Unit normal pointing out of `Ω₁`.
    pub fn normal(&self, xi: f64) -> Vec2 {
        let d = self.derivative(xi);
        Vec2::new(d.y, -d.x) / d.norm()
    }

    /// Signed inside function: negative in `Ω₁`, positive in `Ω₂`, and equal
    /// to the distance to the curve to first order near it.
    pub fn level(&self, p: Vec2) -> f64 {
        match *self {
            Curve::Circle { center, radius } => (p - center).norm() - radius,
            Curve::Ellipse { center, semi_x, semi_y } => {
                let d = p - center;
                let q = (d.x / semi_x).powi(2) + (d.y / semi_y).powi(2);
                let g = 2.0 * ((d.x / (semi_x * semi_x)).powi(2) + (d.y / (semi_y * semi_y)).powi(2)).sqrt();
                if g == 0.0 {
                    -semi_x.min(semi_y)
                } else {
                    (q - 1.0) / g
                }
            }
            Curve::Line { start, end } => {
                let d = end - start;
                let n = Vec2::new(d.y, -d.x) / d.norm();
                n.dot(&(p - start))
            }
        }
    }

    /// Upper bound on the curvature.
    pub fn curvature_bound(&self) -> f64 {
        match *self {
            Curve::Circle { radius, .. } => 1.0 / radius,
            Curve::Ellipse { semi_x, semi_y, .. } => (semi_x / (semi_y * semi_y)).max(semi_y / (semi_x * semi_x)),
            Curve::Line { .. } => 0.0,
        }
    }

    pub fn translated(&self, shift: Vec2) -> Self {
        match *self {
            Curve::Circle { center, radius } => Curve::Circle { center: center + shift, radius },
            Curve::Ellipse { center, semi_x, semi_y } => Curve::Ellipse { center: center + shift, semi_x, semi_y },
            Curve::Line { start, end } => Curve::Line { start: start + shift, end: end + shift },
        }
    }

    /// Arc length, exact for circles and lines, Gauss-composite otherwise.
    pub fn length(&self) -> f64 {
        match *self {
            Curve::Circle { radius, .. } => std::f64::consts::TAU * radius,
            Curve::Line { start, end } => (end - start).norm(),
            Curve::Ellipse { .. } => {
                let rule = quadrature::gauss_1d(20);
                let pieces = 64;
                let width = self.period() / pieces as f64;
                (0..pieces)
                    .map(|k| {
                        let a = k as f64 * width;
                        rule.points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(&t, &w)| 0.5 * width * w * self.derivative(a + 0.5 * width * (t + 1.0)).norm())
                            .sum::<f64>()
                    })
                    .sum()
            }
        }
    }
}

/// Which subdomain contains `p`. Fails within `tol` of the curve.
pub fn signed_side(curve: &Curve, p: Vec2, tol: f64) -> Result<Side> {
    let l = curve.level(p);
    if l < -tol {
        Ok(Side::One)
    } else if l > tol {
        Ok(Side::Two)
    } else {
        Err(Error::OnInterface { x: p.x, y: p.y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementClass {
    Pure(Side),
    Cut,
}

/// Portion of the interface inside (or on an edge of) one host element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceSegment {
    /// The host element `K^e`.
    pub host: usize,
    /// For a segment lying on a shared mesh edge: the element on the `Ω₂`
    /// side. The host is then the `Ω₁`-side element.
    pub neighbor: Option<usize>,
    /// Parameter interval `[ξ_a, ξ_b]`; may extend past the period for the
    /// segment that wraps around a closed curve's parameter origin.
    pub xi: [f64; 2],
    /// The side `i_e` containing the host corner farthest from the tangent
    /// line at the segment midpoint.
    pub analysis_side: Side,
    /// Index (0..4, counterclockwise from lower-left) of that far corner.
    pub far_corner: usize,
}

impl InterfaceSegment {
    pub fn is_edge_aligned(&self) -> bool {
        self.neighbor.is_some()
    }

    /// Element whose basis provides the trace of copy `side` on this segment.
    pub fn element_for(&self, side: Side) -> usize {
        match (side, self.neighbor) {
            (Side::Two, Some(n)) => n,
            _ => self.host,
        }
    }

    pub fn midpoint_param(&self) -> f64 {
        0.5 * (self.xi[0] + self.xi[1])
    }

    pub fn param_length(&self) -> f64 {
        self.xi[1] - self.xi[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Sides whose area fraction falls below this are treated as empty.
    pub cut_threshold: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { cut_threshold: 1e-12 }
    }
}

/// Element labels, interface segments and per-side area fractions.
#[derive(Debug, Clone)]
pub struct CutTopology {
    curve: Curve,
    classes: Vec<ElementClass>,
    fractions: Vec<[f64; 2]>,
    segments: Vec<InterfaceSegment>,
    hosted: Vec<Option<usize>>,
    cut_threshold: f64,
}

impl CutTopology {
    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn classes(&self) -> &[ElementClass] {
        &self.classes
    }

    pub fn class(&self, element: usize) -> ElementClass {
        self.classes[element]
    }

    pub fn segments(&self) -> &[InterfaceSegment] {
        &self.segments
    }

    /// Segment hosted by a cut element, if any.
    pub fn segment_of(&self, element: usize) -> Option<&InterfaceSegment> {
        self.hosted[element].map(|s| &self.segments[s])
    }

    /// Area fraction of `K ∩ Ω_side`.
    pub fn fraction(&self, element: usize, side: Side) -> f64 {
        self.fractions[element][side.index()]
    }

    pub fn is_active(&self, element: usize, side: Side) -> bool {
        self.fraction(element, side) > 0.0
    }

    pub fn cut_elements(&self) -> impl Iterator<Item = usize> + '_ {
        self.classes.iter().enumerate().filter(|(_, c)| **c == ElementClass::Cut).map(|(k, _)| k)
    }

    pub fn num_cut(&self) -> usize {
        self.cut_elements().count()
    }

    pub fn cut_threshold(&self) -> f64 {
        self.cut_threshold
    }
}

/// Picks `i_e`: the side of the host containing the corner with maximal
/// distance to the tangent line at the segment's midpoint parameter.
/// Ties go to the smallest corner index.
pub fn select_analysis_side(segment: &InterfaceSegment, mesh: &Mesh, curve: &Curve) -> (Side, usize) {
    let g = mesh.geometry(segment.host);
    let m = segment.midpoint_param();
    let (best, _) = far_corner(&g, curve.point(m), curve.derivative(m));
    let c = g.corners[best];
    let side = if curve.level(c) < 0.0 { Side::One } else { Side::Two };
    (side, best)
}

fn far_corner(g: &ElementGeometry, base: Vec2, tangent: Vec2) -> (usize, f64) {
    let t = tangent / tangent.norm();
    let mut best = 0;
    let mut dist = f64::NEG_INFINITY;
    for (k, c) in g.corners.iter().enumerate() {
        let d = cross(c - base, t).abs();
        if d > dist {
            dist = d;
            best = k;
        }
    }
    (best, dist)
}

/// Classifies every element against the curve and extracts the interface
/// partition. Each cut element must host exactly one segment.
pub fn classify_elements(mesh: &Mesh, curve: &Curve, options: ClassifyOptions) -> Result<CutTopology> {
    curve.validate()?;
    let h = mesh.h();
    let min_side = mesh.cell_size().min();
    let domain = mesh.domain();
    let period = curve.period();
    let closed = curve.is_closed();

    let length = curve.length();
    let n_samples = ((16.0 * length / min_side).ceil() as usize).max(256);
    let step = period / n_samples as f64;
    let samples: Vec<(f64, Vec2)> = if closed {
        (0..n_samples).map(|k| (k as f64 * step, curve.point(k as f64 * step))).collect()
    } else {
        (0..=n_samples).map(|k| (k as f64 * step, curve.point(k as f64 * step))).collect()
    };

    let boundary_tol = 1e-10 * h;
    let inside: Vec<bool> = samples.iter().map(|(_, p)| domain.contains(*p, -boundary_tol)).collect();
    let mut classes = vec![ElementClass::Pure(Side::Two); mesh.num_elements()];
    let mut fractions = vec![[0.0, 1.0]; mesh.num_elements()];
    let label_pure = |classes: &mut Vec<ElementClass>, fractions: &mut Vec<[f64; 2]>, k: usize| -> Result<()> {
        let c = mesh.geometry(k).center();
        let side = if curve.level(c) < 0.0 { Side::One } else { Side::Two };
        classes[k] = ElementClass::Pure(side);
        let mut f = [0.0; 2];
        f[side.index()] = 1.0;
        fractions[k] = f;
        Ok(())
    };

    if closed {
        if inside.iter().all(|&b| !b) {
            // Curve entirely outside the closed domain: nothing is cut.
            if samples.iter().all(|(_, p)| !domain.contains(*p, boundary_tol)) {
                for k in 0..mesh.num_elements() {
                    label_pure(&mut classes, &mut fractions, k)?;
                }
                return Ok(CutTopology {
                    curve: *curve,
                    classes,
                    fractions,
                    segments: Vec::new(),
                    hosted: vec![None; mesh.num_elements()],
                    cut_threshold: options.cut_threshold,
                });
            }
        }
        if !inside.iter().all(|&b| b) {
            return Err(Error::InvalidArgument("closed interface must lie strictly inside the domain".into()));
        }
    } else {
        let (a, b) = (samples[0].1, samples[samples.len() - 1].1);
        let on_boundary = |p: Vec2| domain.contains(p, boundary_tol) && !domain.contains(p, -boundary_tol);
        if !on_boundary(a) || !on_boundary(b) {
            return Err(Error::InvalidArgument("open interface must start and end on the domain boundary".into()));
        }
        if !inside[1..inside.len() - 1].iter().all(|&b| b) {
            return Err(Error::InvalidArgument("open interface must stay inside the domain".into()));
        }
    }

    // Crossings with every grid line; lines the curve runs along are recorded.
    let mut breaks = Vec::new();
    let mut aligned: Vec<(usize, f64)> = Vec::new();
    for (axis, lines) in [(0usize, mesh.x_lines()), (1usize, mesh.y_lines())] {
        for c in lines {
            let f: Vec<f64> = samples.iter().map(|(_, p)| p[axis] - c).collect();
            if f.iter().all(|v| v.abs() <= 1e-12 * h) {
                aligned.push((axis, c));
                continue;
            }
            let other = if axis == 0 { mesh.y_lines() } else { mesh.x_lines() };
            line_crossings(curve, axis, c, &other, &samples, &f, closed, step, h, &mut breaks)?;
        }
    }

    if closed {
        for b in breaks.iter_mut() {
            *b = b.rem_euclid(period);
        }
    } else {
        breaks.push(0.0);
        breaks.push(period);
    }
    breaks.sort_by(f64::total_cmp);
    let speed = samples.windows(2).map(|w| (w[1].1 - w[0].1).norm()).fold(0.0, f64::max) / step;
    let dedupe_tol = (1e-12 * period).max(1e-9 * h / speed);
    breaks.dedup_by(|b, a| (*b - *a).abs() <= dedupe_tol);
    if closed && breaks.len() >= 2 && (breaks[0] + period - breaks[breaks.len() - 1]) <= dedupe_tol {
        breaks.pop();
    }

    if closed && breaks.is_empty() {
        return Err(Error::UnresolvedTopology(
            "interface forms a closed loop inside a single element; refine the mesh".into(),
        ));
    }

    let mut intervals = Vec::new();
    if closed {
        for k in 0..breaks.len() {
            let a = breaks[k];
            let b = if k + 1 < breaks.len() { breaks[k + 1] } else { breaks[0] + period };
            intervals.push([a, b]);
        }
    } else {
        for w in breaks.windows(2) {
            intervals.push([w[0], w[1]]);
        }
    }
    // Start the list at the smallest parameter.
    intervals.sort_by(|a, b| a[0].total_cmp(&b[0]));

    let mut segments = Vec::with_capacity(intervals.len());
    let mut hosted = vec![None; mesh.num_elements()];
    let probe = 0.25 * min_side;
    for xi in intervals {
        let m = 0.5 * (xi[0] + xi[1]);
        let p = curve.point(m);
        let on_line = aligned.iter().any(|&(axis, c)| (p[axis] - c).abs() <= 1e-9 * h);
        let n = curve.normal(m);
        let (host, neighbor) = if on_line {
            let inner = mesh.locate(p - probe * n);
            let outer = mesh.locate(p + probe * n);
            match (inner, outer) {
                (Some(a), Some(b)) if a != b => (a, Some(b)),
                _ => {
                    return Err(Error::UnresolvedTopology(format!(
                        "interface runs along the domain boundary near ({}, {})",
                        p.x, p.y
                    )))
                }
            }
        } else {
            match mesh.locate(p) {
                Some(k) => (k, None),
                None => return Err(Error::UnresolvedTopology(format!("segment midpoint ({}, {}) outside the mesh", p.x, p.y))),
            }
        };
        let g = mesh.geometry(host);
        let tol = 1e-9 * h;
        if !g.contains(curve.point(xi[0]), tol) || !g.contains(curve.point(xi[1]), tol) || !g.contains(p, tol) {
            return Err(Error::MultiIntersection { element: host });
        }
        let mut seg = InterfaceSegment { host, neighbor, xi, analysis_side: Side::One, far_corner: 0 };
        let (side, corner) = select_analysis_side(&seg, mesh, curve);
        seg.analysis_side = side;
        seg.far_corner = corner;
        if neighbor.is_none() {
            if hosted[host].is_some() {
                return Err(Error::MultiIntersection { element: host });
            }
            hosted[host] = Some(segments.len());
        }
        segments.push(seg);
    }

    for k in 0..mesh.num_elements() {
        match hosted[k] {
            None => label_pure(&mut classes, &mut fractions, k)?,
            Some(s) => {
                let seg = segments[s];
                let area = mesh.geometry(k).area();
                let mut f = [0.0; 2];
                for side in Side::BOTH {
                    let rule = quadrature::cut_rule_for_segment(mesh, curve, &seg, side, 4)?;
                    f[side.index()] = rule.rule.weights.iter().sum::<f64>() / area;
                }
                let total = f[0] + f[1];
                f[0] /= total;
                f[1] /= total;
                if f[0] < options.cut_threshold {
                    classes[k] = ElementClass::Pure(Side::Two);
                    fractions[k] = [0.0, 1.0];
                } else if f[1] < options.cut_threshold {
                    classes[k] = ElementClass::Pure(Side::One);
                    fractions[k] = [1.0, 0.0];
                } else {
                    classes[k] = ElementClass::Cut;
                    fractions[k] = f;
                }
            }
        }
    }

    Ok(CutTopology { curve: *curve, classes, fractions, segments, hosted, cut_threshold: options.cut_threshold })
}

/// Appends the parameters where the curve crosses the grid line
/// `p[axis] = c`, given samples `f_k = p_k[axis] - c`.
#[allow(clippy::too_many_arguments)]
fn line_crossings(
    curve: &Curve,
    axis: usize,
    c: f64,
    other_lines: &[f64],
    samples: &[(f64, Vec2)],
    f: &[f64],
    closed: bool,
    step: f64,
    h: f64,
    out: &mut Vec<f64>,
) -> Result<()> {
    let n = samples.len();
    let period = curve.period();
    let param = |k: usize| -> f64 {
        if k < n {
            samples[k].0
        } else {
            samples[k - n].0 + period
        }
    };
    let fval = |k: usize| f[k % n];
    let eval = |xi: f64| curve.point(xi)[axis] - c;
    let pairs = if closed { n } else { n - 1 };
    let max_speed = samples.windows(2).map(|w| (w[1].1 - w[0].1).norm()).fold(0.0, f64::max) / step;
    let xi_tol = (1e-14 * h / max_speed.max(1e-300)).max(4.0 * f64::EPSILON * period);
    let line_name = || format!("{}={c}", if axis == 0 { "x" } else { "y" });

    // Samples on the line are roots themselves; brackets need strict signs.
    let ztol = 1e-14 * h;
    let zero = |v: f64| v.abs() <= ztol;
    let touch = |x_star: f64| -> Result<()> {
        // A touch at a mesh vertex is split by the crossing of the other
        // grid line; anywhere else the local topology is ambiguous. The
        // minimiser is only accurate to about sqrt(eps) along the curve.
        let p = curve.point(x_star);
        if other_lines.iter().any(|&l| (p[1 - axis] - l).abs() <= 1e-6 * h) {
            Ok(())
        } else {
            Err(Error::TangencyUnresolved { line: line_name(), xi: x_star })
        }
    };
    for k in 0..n {
        if !zero(f[k]) || (!closed && (k == 0 || k == n - 1)) {
            continue;
        }
        let prev = (1..n).map(|d| f[(k + n - d) % n]).find(|v| !zero(*v)).unwrap_or(0.0);
        let next = (1..n).map(|d| f[(k + d) % n]).find(|v| !zero(*v)).unwrap_or(0.0);
        if (prev < 0.0) != (next < 0.0) {
            out.push(samples[k].0);
        } else {
            touch(samples[k].0)?;
        }
    }
    for k in 0..pairs {
        let (fa, fb) = (fval(k), fval(k + 1));
        if !zero(fa) && !zero(fb) && (fa < 0.0) != (fb < 0.0) {
            out.push(bracket_root(curve, axis, c, param(k), param(k + 1), xi_tol));
        }
    }

    // Close approaches without a sign change at the samples: either a missed
    // pair of roots or a tangency.
    let lo = if closed { 0 } else { 1 };
    let hi = if closed { n } else { n - 1 };
    for k in lo..hi {
        let km = if k == 0 { n - 1 } else { k - 1 };
        let (f0, f1, f2) = (f[km], f[k], fval(k + 1));
        if zero(f0) || zero(f1) || zero(f2) {
            continue;
        }
        let same_sign = (f0 < 0.0) == (f1 < 0.0) && (f1 < 0.0) == (f2 < 0.0);
        if !same_sign || f1.abs() > 2.0 * step * max_speed {
            continue;
        }
        let toward_zero = f1.abs() <= f0.abs() && f1.abs() <= f2.abs();
        if !toward_zero {
            continue;
        }
        let a = if k == 0 { param(0) - step } else { param(k - 1) };
        let b = a + 2.0 * step;
        let sign = if f1 < 0.0 { -1.0 } else { 1.0 };
        let x_star = golden_min(|x| sign * eval(x), a, b, 1e-15 * period);
        let f_star = eval(x_star);
        if sign * f_star < -1e-10 * h {
            out.push(bracket_root(curve, axis, c, a, x_star, xi_tol));
            out.push(bracket_root(curve, axis, c, x_star, b, xi_tol));
        } else if f_star.abs() <= 1e-10 * h {
            touch(x_star)?;
        }
    }
    Ok(())
}

/// Bisection to `xi_tol`, then one Newton step if it stays in the bracket.
fn bracket_root(curve: &Curve, axis: usize, c: f64, mut lo: f64, mut hi: f64, xi_tol: f64) -> f64 {
    let eval = |xi: f64| curve.point(xi)[axis] - c;
    let flo = eval(lo);
    if flo == 0.0 {
        return lo;
    }
    let lo_neg = flo < 0.0;
    for _ in 0..200 {
        if hi - lo <= xi_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let d = curve.derivative(mid)[axis];
    if d != 0.0 {
        let next = mid - eval(mid) / d;
        if next >= lo && next <= hi {
            return next;
        }
    }
    mid
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
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
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    fn square(n: usize) -> Mesh {
        Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), n, n).unwrap()
    }

    #[test]
    fn signed_side_examples() {
        let c = Curve::circle(0.0, 0.0, 0.5);
        assert_eq!(signed_side(&c, Vec2::zeros(), 1e-12).unwrap(), Side::One);
        assert_eq!(signed_side(&c, Vec2::new(0.9, 0.9), 1e-12).unwrap(), Side::Two);
        let p = c.point(0.0) + 1e-6 * c.normal(0.0);
        assert_eq!(signed_side(&c, p, 1e-12).unwrap(), Side::Two);
        assert!(matches!(signed_side(&c, c.point(1.0), 1e-12), Err(Error::OnInterface { .. })));
    }

    #[test]
    fn normals_point_into_omega_two() {
        for curve in [Curve::circle(0.1, -0.2, 0.5), Curve::ellipse(0.0, 0.0, 0.7, 0.4), Curve::line(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0))] {
            for k in 0..16 {
                let xi = curve.period() * (k as f64 + 0.5) / 16.0;
                let p = curve.point(xi);
                let n = curve.normal(xi);
                assert!(curve.level(p + 1e-6 * n) > 0.0);
                assert!(curve.level(p - 1e-6 * n) < 0.0);
                assert!(curve.level(p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn circle_segments_tile_the_curve() {
        let mesh = square(8);
        let curve = Curve::circle(0.0, 0.0, 0.5);
        let topo = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap();
        let total: f64 = topo.segments().iter().map(|s| s.param_length()).sum();
        assert!((total - curve.period()).abs() <= 1e-12 * curve.period());
        assert_eq!(topo.segments().len(), topo.num_cut());
        for s in topo.segments() {
            assert!(!s.is_edge_aligned());
            let g = mesh.geometry(s.host);
            for t in [0.0, 0.3, 0.7, 1.0] {
                assert!(g.contains(curve.point(s.xi[0] + t * s.param_length()), 1e-9));
            }
        }
    }

    #[test]
    fn far_outside_curve_cuts_nothing() {
        let mesh = square(4);
        let curve = Curve::circle(10.0, 10.0, 0.5);
        let topo = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap();
        assert!(topo.segments().is_empty());
        assert!(topo.classes().iter().all(|c| *c == ElementClass::Pure(Side::Two)));
    }

    #[test]
    fn interior_loop_rejected() {
        let mesh = square(1);
        let curve = Curve::circle(0.0, 0.0, 0.3);
        assert!(matches!(
            classify_elements(&mesh, &curve, ClassifyOptions::default()),
            Err(Error::UnresolvedTopology(_))
        ));
    }

    #[test]
    fn multiple_crossings_rejected() {
        // The middle column of a 3x1 mesh hosts both the upper and lower arc.
        let mesh = Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), 3, 1).unwrap();
        let curve = Curve::circle(0.0, 0.0, 0.5);
        let err = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MultiIntersection { .. }), "{err:?}");
    }

    #[test]
    fn analysis_side_hand_example() {
        // Element [0.25,0.5]x[0,0.25] against the circle R=0.5: the tangent at
        // the segment midpoint is nearly vertical near x≈0.47, so the lower
        // left corner (0.25, 0) is farthest and lies inside the disk.
        let mesh = square(8);
        let curve = Curve::circle(0.0, 0.0, 0.5);
        let topo = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap();
        let k = mesh.element_index(5, 4);
        let g = mesh.geometry(k);
        assert_eq!(g.corners[0], Vec2::new(0.25, 0.0));
        let seg = topo.segment_of(k).unwrap();
        let m = seg.midpoint_param();
        let (p, t) = (curve.point(m), curve.derivative(m).normalize());
        let dists: Vec<f64> = g.corners.iter().map(|c| cross(c - p, t).abs()).collect();
        let far = (0..4).fold(0, |b, i| if dists[i] > dists[b] { i } else { b });
        assert_eq!(far, 0);
        assert_eq!(seg.far_corner, 0);
        assert_eq!(seg.analysis_side, Side::One);
    }

    #[test]
    fn far_corner_distance_bounded_below() {
        let mesh = square(16);
        let curve = Curve::ellipse(0.05, -0.02, 0.6, 0.45);
        let topo = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap();
        for s in topo.segments() {
            let g = mesh.geometry(s.host);
            let m = s.midpoint_param();
            let (_, d) = far_corner(&g, curve.point(m), curve.derivative(m));
            assert!(d >= 0.5 * g.min_side());
        }
    }

    #[test]
    fn aligned_line_hosted_on_omega_one_side() {
        let mesh = square(4);
        let curve = Curve::line(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0));
        let topo = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap();
        assert_eq!(topo.segments().len(), 4);
        assert_eq!(topo.num_cut(), 0);
        for s in topo.segments() {
            assert!(s.is_edge_aligned());
            assert!(mesh.geometry(s.host).center().x < 0.0);
            assert!(mesh.geometry(s.neighbor.unwrap()).center().x > 0.0);
            assert_eq!(s.analysis_side, Side::One);
        }
    }

    #[test]
    fn odd_mesh_line_cuts_elements() {
        let mesh = square(5);
        let curve = Curve::line(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0));
        let topo = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap();
        assert_eq!(topo.num_cut(), 5);
        for k in topo.cut_elements() {
            assert!((topo.fraction(k, Side::One) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn labels_stable_under_tiny_shift() {
        let mesh = square(16);
        let shifted = mesh.translated(Vec2::new(1e-9, 1e-9));
        let curve = Curve::circle(0.013, -0.021, 0.6);
        let a = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap();
        let b = classify_elements(&shifted, &curve, ClassifyOptions::default()).unwrap();
        for k in 0..mesh.num_elements() {
            let g = mesh.geometry(k);
            let near = g.corners.iter().map(|c| curve.level(*c).abs()).fold(f64::INFINITY, f64::min) < 1e-8;
            if !near {
                assert_eq!(a.class(k), b.class(k), "element {k}");
            }
        }
    }
}
