//! Bitmap to cubic-Bézier tracing.
//!
//! Contours follow pixel cracks with the foreground on the right in image
//! axes, so outer contours have positive shoelace area (counterclockwise in
//! x-right, y-up axes) and holes negative. Output coordinates are pixel
//! units in a `(0, 0, W, H)` viewbox under the nonzero rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{angle_between, CubicSegment, Point};
use crate::mask_ops::iou;
use crate::raster::{rasterize, BinaryMask};
use crate::svg::{CompoundPath, FillRule, Subpath, ViewBox};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("mask is empty")]
    EmptyMask,
    #[error("every contour fell below the minimum area")]
    DroppedAllContours,
    #[error("invalid trace config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    /// Turning angle in degrees above which a sample is a corner.
    pub corner_angle_threshold: f64,
    /// Maximum distance from samples to the fitted curve.
    pub fit_tolerance: f64,
    /// Runs whose samples all lie this close to the chord become lines.
    pub simplify_tolerance: f64,
    /// Contours enclosing fewer pixels are dropped.
    pub min_contour_area: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig { corner_angle_threshold: 60.0, fit_tolerance: 1.0, simplify_tolerance: 0.5, min_contour_area: 4.0 }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<(), TraceError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(self.corner_angle_threshold > 0.0 && self.corner_angle_threshold < 180.0) {
            return Err(TraceError::InvalidConfig(format!("corner_angle_threshold {} not in (0, 180)", self.corner_angle_threshold)));
        }
        if !positive(self.fit_tolerance) || !positive(self.simplify_tolerance) || !positive(self.min_contour_area) {
            return Err(TraceError::InvalidConfig("tolerances and min_contour_area must be positive".into()));
        }
        Ok(())
    }
}

/// Direction of a unit crack step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    East,
    South,
    West,
    North,
}

impl Dir {
    fn delta(self) -> (i64, i64) {
        match self {
            Dir::East => (1, 0),
            Dir::South => (0, 1),
            Dir::West => (-1, 0),
            Dir::North => (0, -1),
        }
    }

    fn right(self) -> Dir {
        match self {
            Dir::East => Dir::South,
            Dir::South => Dir::West,
            Dir::West => Dir::North,
            Dir::North => Dir::East,
        }
    }

    fn left(self) -> Dir {
        self.right().right().right()
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Boundary cracks indexed by their start vertex; each crack has the
/// foreground pixel on its right.
struct Cracks<'a> {
    mask: &'a BinaryMask,
    used: Vec<[bool; 4]>,
}

impl<'a> Cracks<'a> {
    fn new(mask: &'a BinaryMask) -> Self {
        let n = (mask.width() + 1) * (mask.height() + 1);
        Cracks { mask, used: vec![[false; 4]; n] }
    }

    fn fg(&self, x: i64, y: i64) -> bool {
        self.mask.get_signed(x as isize, y as isize)
    }

    /// A crack leaving vertex `(x, y)` in `dir` is a boundary when the pixel
    /// on its right is set and the one on its left is not.
    fn exists(&self, x: i64, y: i64, dir: Dir) -> bool {
        let (right, left) = match dir {
            Dir::East => ((x, y), (x, y - 1)),
            Dir::South => ((x - 1, y), (x, y)),
            Dir::West => ((x - 1, y - 1), (x - 1, y)),
            Dir::North => ((x, y - 1), (x - 1, y - 1)),
        };
        self.fg(right.0, right.1) && !self.fg(left.0, left.1)
    }

    fn slot(&self, x: i64, y: i64) -> usize {
        y as usize * (self.mask.width() + 1) + x as usize
    }

    /// Follow one closed contour starting with the crack `(x, y, dir)`.
    /// At ambiguous vertices the rightmost turn wins, keeping diagonal
    /// pixels in separate contours.
    fn follow(&mut self, x0: i64, y0: i64, dir0: Dir) -> Vec<(i64, i64)> {
        let mut verts = Vec::new();
        let (mut x, mut y, mut dir) = (x0, y0, dir0);
        loop {
            let s = self.slot(x, y);
            self.used[s][dir.index()] = true;
            verts.push((x, y));
            let (dx, dy) = dir.delta();
            x += dx;
            y += dy;
            if (x, y) == (x0, y0) {
                return verts;
            }
            dir = [dir.right(), dir, dir.left()]
                .into_iter()
                .find(|&d| self.exists(x, y, d))
                .expect("boundary cracks form closed loops");
        }
    }
}

/// Closed crack contours, discovered in row-major order of the pixel whose
/// top side starts them.
fn crack_contours(mask: &BinaryMask) -> Vec<Vec<(i64, i64)>> {
    let mut cracks = Cracks::new(mask);
    let mut out = Vec::new();
    for y in 0..mask.height() as i64 {
        for x in 0..mask.width() as i64 {
            let s = cracks.slot(x, y);
            if cracks.exists(x, y, Dir::East) && !cracks.used[s][Dir::East.index()] {
                out.push(cracks.follow(x, y, Dir::East));
            }
        }
    }
    out
}

fn polygon_area(verts: &[(i64, i64)]) -> f64 {
    let n = verts.len();
    let twice: i64 = (0..n).map(|i| {
        let (a, b) = (verts[i], verts[(i + 1) % n]);
        a.0 * b.1 - b.0 * a.1
    })
    .sum();
    twice as f64 / 2.0
}

/// A sample on the smoothed contour; `anchor` marks lattice vertices that
/// join two long straight runs.
#[derive(Debug, Clone, Copy)]
struct Sample {
    p: Point,
    anchor: bool,
}

/// Samples along a crack contour: the midpoint of every straight run plus
/// the vertex between two runs that are both at least two cracks long,
/// densified to at most one pixel spacing.
fn contour_samples(verts: &[(i64, i64)]) -> Vec<Sample> {
    let n = verts.len();
    // Indices where direction changes.
    let dir_at = |i: usize| {
        let (a, b) = (verts[i], verts[(i + 1) % n]);
        (b.0 - a.0, b.1 - a.1)
    };
    let turns: Vec<usize> = (0..n).filter(|&i| dir_at(i) != dir_at((i + n - 1) % n)).collect();
    let m = turns.len();
    let pt = |v: (i64, i64)| Point::new(v.0 as f64, v.1 as f64);
    let mut base = Vec::with_capacity(2 * m);
    for r in 0..m {
        let start = turns[r];
        let end = turns[(r + 1) % m];
        let len = (end + n - start) % n;
        let next_len = (turns[(r + 2) % m] + n - end) % n;
        let mid = pt(verts[start]).lerp(pt(verts[end]), 0.5);
        base.push(Sample { p: mid, anchor: false });
        if len >= 2 && next_len >= 2 {
            base.push(Sample { p: pt(verts[end]), anchor: true });
        }
    }
    let mut out = Vec::with_capacity(base.len() * 2);
    for i in 0..base.len() {
        let (a, b) = (base[i], base[(i + 1) % base.len()]);
        out.push(a);
        let pieces = a.p.distance(b.p).ceil() as usize;
        for k in 1..pieces {
            out.push(Sample { p: a.p.lerp(b.p, k as f64 / pieces as f64), anchor: false });
        }
    }
    out
}

/// Indices of corner samples: turning angle over a five-sample window above
/// the threshold, kept greedily by descending angle with at most one corner
/// per window.
fn detect_corners(samples: &[Sample], threshold_rad: f64) -> Vec<usize> {
    let n = samples.len();
    if n < 5 {
        return (0..n).collect();
    }
    let angle = |i: usize| {
        let a = samples[i].p - samples[(i + n - 2) % n].p;
        let b = samples[(i + 2) % n].p - samples[i].p;
        if a.length() == 0.0 || b.length() == 0.0 {
            0.0
        } else {
            angle_between(a, b)
        }
    };
    let angles: Vec<f64> = (0..n).map(angle).collect();
    let mut candidates: Vec<usize> = (0..n).filter(|&i| angles[i] > threshold_rad).collect();
    candidates.sort_by(|&a, &b| {
        angles[b]
            .total_cmp(&angles[a])
            .then(samples[b].anchor.cmp(&samples[a].anchor))
            .then(a.cmp(&b))
    });
    let mut taken = vec![false; n];
    let mut corners = Vec::new();
    for c in candidates {
        if (0..=4).any(|k| taken[(c + n + k - 2) % n]) {
            continue;
        }
        taken[c] = true;
        corners.push(c);
    }
    corners.sort_unstable();
    corners
}

fn bernstein(u: f64) -> [f64; 4] {
    let v = 1.0 - u;
    [v * v * v, 3.0 * u * v * v, 3.0 * u * u * v, u * u * u]
}

fn chord_params(pts: &[Point]) -> Vec<f64> {
    let mut u = vec![0.0; pts.len()];
    for i in 1..pts.len() {
        u[i] = u[i - 1] + pts[i].distance(pts[i - 1]);
    }
    let total = u[pts.len() - 1];
    if total > 0.0 {
        u.iter_mut().for_each(|v| *v /= total);
    }
    u
}

/// Least-squares cubic with fixed end tangents (directions of travel).
fn generate_cubic(pts: &[Point], u: &[f64], t0: Point, t1: Point) -> CubicSegment {
    let (p0, p3) = (pts[0], pts[pts.len() - 1]);
    let (mut c00, mut c01, mut c11, mut x0, mut x1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&d, &ui) in pts.iter().zip(u) {
        let b = bernstein(ui);
        let a0 = t0 * b[1];
        let a1 = -t1 * b[2];
        c00 += a0.dot(a0);
        c01 += a0.dot(a1);
        c11 += a1.dot(a1);
        let tmp = d - (p0 * (b[0] + b[1]) + p3 * (b[2] + b[3]));
        x0 += a0.dot(tmp);
        x1 += a1.dot(tmp);
    }
    let det = c00 * c11 - c01 * c01;
    let chord = p0.distance(p3);
    let (mut al, mut ar) = if det.abs() > 1e-12 {
        ((x0 * c11 - x1 * c01) / det, (c00 * x1 - c01 * x0) / det)
    } else {
        (chord / 3.0, chord / 3.0)
    };
    let eps = 1e-6 * chord;
    if al < eps || ar < eps {
        al = chord / 3.0;
        ar = chord / 3.0;
    }
    CubicSegment::new(p0, p0 + t0 * al, p3 - t1 * ar, p3)
}

fn max_error(seg: &CubicSegment, pts: &[Point], u: &[f64]) -> (f64, usize) {
    let mut worst = (0.0, pts.len() / 2);
    for i in 1..pts.len() - 1 {
        let d = seg.point_at(u[i]).distance_sq(pts[i]);
        if d > worst.0 {
            worst = (d, i);
        }
    }
    (worst.0.sqrt(), worst.1)
}

fn second_derivative(seg: &CubicSegment, t: f64) -> Point {
    let a = seg.c2 - seg.c1 * 2.0 + seg.p0;
    let b = seg.p3 - seg.c2 * 2.0 + seg.c1;
    (a * (1.0 - t) + b * t) * 6.0
}

fn reparameterize(seg: &CubicSegment, pts: &[Point], u: &[f64]) -> Vec<f64> {
    pts.iter()
        .zip(u)
        .map(|(&d, &ui)| {
            let diff = seg.point_at(ui) - d;
            let d1 = seg.derivative(ui);
            let d2 = second_derivative(seg, ui);
            let den = d1.dot(d1) + diff.dot(d2);
            if den.abs() < 1e-12 {
                ui
            } else {
                (ui - diff.dot(d1) / den).clamp(0.0, 1.0)
            }
        })
        .collect()
}

fn unit_or(v: Point, fallback: Point) -> Point {
    v.normalized().unwrap_or(fallback)
}

/// Fit `pts` with cubics whose end tangents are `t0` and `t1`, splitting at
/// the worst sample until every sample is within `tol`.
fn fit_cubics(pts: &[Point], t0: Point, t1: Point, tol: f64, out: &mut Vec<CubicSegment>) {
    let n = pts.len();
    if n == 2 {
        out.push(CubicSegment::line(pts[0], pts[1]));
        return;
    }
    if n > 2 * TANGENT_SPAN && total_turning(pts, t0, t1) > MAX_TURN {
        let mid = n / 2;
        let tc = center_tangent(pts, mid, t0);
        fit_cubics(&pts[..=mid], t0, tc, tol, out);
        fit_cubics(&pts[mid..], tc, t1, tol, out);
        return;
    }
    let mut u = chord_params(pts);
    let mut seg = generate_cubic(pts, &u, t0, t1);
    let (mut err, mut split) = max_error(&seg, pts, &u);
    if err <= 4.0 * tol {
        // Reparameterize even after an acceptable fit: chord-length
        // parameters bias the handle lengths.
        for _ in 0..REPARAM_ITERATIONS {
            u = reparameterize(&seg, pts, &u);
            let next = generate_cubic(pts, &u, t0, t1);
            let (e, sp) = max_error(&next, pts, &u);
            if e > err && err <= tol {
                break;
            }
            (seg, err, split) = (next, e, sp);
        }
    }
    if err <= tol {
        out.push(seg);
        return;
    }
    let tc = center_tangent(pts, split, t0);
    fit_cubics(&pts[..=split], t0, tc, tol, out);
    fit_cubics(&pts[split..], tc, t1, tol, out);
}

/// Samples used to estimate a one-sided tangent and to measure turning.
const TANGENT_SPAN: usize = 4;
const REPARAM_ITERATIONS: usize = 8;
/// Widest half-window for a centered tangent; symmetric chords are parallel
/// to the tangent on circular arcs, so a wide window only averages noise.
const CENTER_SPAN: usize = 16;

fn center_tangent(pts: &[Point], i: usize, fallback: Point) -> Point {
    let k = CENTER_SPAN.min(i).min(pts.len() - 1 - i);
    if k == 0 {
        return fallback;
    }
    unit_or(pts[i + k] - pts[i - k], fallback)
}

/// Largest tangent turn one cubic may span, in radians.
const MAX_TURN: f64 = std::f64::consts::FRAC_PI_2 + 1e-9;

/// Absolute net turning from `t0` through chords of `pts` to `t1`.
fn total_turning(pts: &[Point], t0: Point, t1: Point) -> f64 {
    let mut dirs = vec![t0];
    let mut i = 0;
    while i + TANGENT_SPAN < pts.len() {
        if let Some(d) = (pts[i + TANGENT_SPAN] - pts[i]).normalized() {
            dirs.push(d);
        }
        i += TANGENT_SPAN;
    }
    dirs.push(t1);
    dirs.windows(2).map(|w| w[0].cross(w[1]).atan2(w[0].dot(w[1]))).sum::<f64>().abs()
}

fn end_tangent_out(pts: &[Point]) -> Point {
    let k = TANGENT_SPAN.min(pts.len() - 1);
    unit_or(pts[k] - pts[0], Point::new(1.0, 0.0))
}

fn end_tangent_in(pts: &[Point]) -> Point {
    let n = pts.len();
    let k = TANGENT_SPAN.min(n - 1);
    unit_or(pts[n - 1] - pts[n - 1 - k], Point::new(1.0, 0.0))
}

fn within_chord(pts: &[Point], tol: f64) -> bool {
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    let ab = b - a;
    let len = ab.length();
    pts.iter().all(|&p| {
        if len == 0.0 {
            p.distance(a) <= tol
        } else {
            let t = ((p - a).dot(ab) / (len * len)).clamp(0.0, 1.0);
            p.distance(a + ab * t) <= tol
        }
    })
}

/// Curves for one corner-to-corner run of samples.
fn fit_run(pts: &[Point], cfg: &TraceConfig, t0: Option<Point>, t1: Option<Point>, out: &mut Vec<CubicSegment>) {
    if t0.is_none() && t1.is_none() && within_chord(pts, cfg.simplify_tolerance) {
        out.push(CubicSegment::line(pts[0], pts[pts.len() - 1]));
        return;
    }
    let t0 = t0.unwrap_or_else(|| end_tangent_out(pts));
    let t1 = t1.unwrap_or_else(|| end_tangent_in(pts));
    fit_cubics(pts, t0, t1, cfg.fit_tolerance, out);
}

fn fit_contour(samples: &[Sample], cfg: &TraceConfig) -> Vec<CubicSegment> {
    let n = samples.len();
    let corners = detect_corners(samples, cfg.corner_angle_threshold.to_radians());
    let mut segs = Vec::new();
    if corners.is_empty() {
        // Smooth loop: start at sample 0 with its centered tangent on both ends.
        let mut pts: Vec<Point> = samples.iter().map(|s| s.p).collect();
        pts.push(samples[0].p);
        let k = CENTER_SPAN.min(n / 4).max(1);
        let t = unit_or(samples[k].p - samples[n - k].p, Point::new(1.0, 0.0));
        fit_run(&pts, cfg, Some(t), Some(t), &mut segs);
        return segs;
    }
    for (ci, &start) in corners.iter().enumerate() {
        let end = corners[(ci + 1) % corners.len()];
        let len = if end > start { end - start } else { end + n - start };
        let pts: Vec<Point> = (0..=len).map(|k| samples[(start + k) % n].p).collect();
        fit_run(&pts, cfg, None, None, &mut segs);
    }
    segs
}

fn polygon_subpath(samples: &[Sample]) -> Subpath {
    let n = samples.len();
    let segments = (0..n).map(|i| CubicSegment::line(samples[i].p, samples[(i + 1) % n].p)).collect();
    Subpath::new(segments, true).expect("polygon chains by construction")
}

/// Trace a mask into a compound path.
pub fn trace(mask: &BinaryMask, config: &TraceConfig) -> Result<CompoundPath, TraceError> {
    config.validate()?;
    if mask.is_empty() {
        return Err(TraceError::EmptyMask);
    }
    let mut subpaths = Vec::new();
    for verts in crack_contours(mask) {
        let area = polygon_area(&verts);
        if area.abs() < config.min_contour_area {
            continue;
        }
        let samples = contour_samples(&verts);
        let segments: Vec<CubicSegment> =
            fit_contour(&samples, config).into_iter().filter(|s| !s.is_degenerate()).collect();
        let fitted = Subpath::new(segments, true).ok().filter(|sp| sp.signed_area() * area > 0.0);
        subpaths.push(fitted.unwrap_or_else(|| polygon_subpath(&samples)));
    }
    if subpaths.is_empty() {
        return Err(TraceError::DroppedAllContours);
    }
    Ok(CompoundPath::new(subpaths, FillRule::NonZero, ViewBox::canvas(mask.width(), mask.height()))
        .expect("traced subpaths are closed and finite"))
}

/// IoU between a mask and the rasterization of its trace. A mask whose
/// contours are all below the area threshold scores 0.
pub fn round_trip_iou(mask: &BinaryMask, config: &TraceConfig) -> Result<f64, TraceError> {
    match trace(mask, config) {
        Ok(path) => Ok(iou(mask, &rasterize(&path, mask.width(), mask.height())).expect("same canvas")),
        Err(TraceError::DroppedAllContours) => {
            log::warn!("all contours dropped below min_contour_area {}", config.min_contour_area);
            Ok(0.0)
        }
        Err(e) => Err(e),
    }
}
