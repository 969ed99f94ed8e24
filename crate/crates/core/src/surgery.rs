//! Curve reuse: merge an original, partially occluded contour with a
//! completed proposal. Where the two contours touch, the original geometry
//! is kept verbatim; elsewhere the completion supplies the hidden boundary;
//! G1 cubic bridges join the kept chains.
//!
//! Parameters on a subpath are global: segment index plus local `t`, so a
//! subpath with `n` segments has the domain `[0, n]`.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::geom::{angle_between, CubicSegment, Point};
use crate::svg::{Subpath, ViewBox};

/// Contact threshold in raster pixels.
pub const DEFAULT_CONTACT_EPSILON: f64 = 1.5;
/// Bridges shorter than this are refused by [`build_bridge`].
pub const DEGENERATE_BRIDGE: f64 = 1e-9;
/// Joins shorter than this are welded instead of bridged during merging, so
/// bridge tangents stay well conditioned.
pub const WELD_DISTANCE: f64 = 1e-6;
/// Contact regions shorter than this many epsilons of arc are ignored when
/// merging; they mark crossings rather than shared boundary.
const MIN_REGION_EPSILONS: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurgeryError {
    #[error("parameter {t} outside [0, {max}]")]
    ParameterOutOfRange { t: f64, max: f64 },
    #[error("bridge endpoints coincide")]
    DegenerateBridge,
    #[error("zero-length tangent")]
    ZeroTangent,
    #[error("contact epsilon must be positive")]
    InvalidEpsilon,
    #[error("contour must be closed")]
    OpenContour,
    #[error("contacts do not split the contours into consistent chains: {0}")]
    AmbiguousTopology(String),
}

/// Matching stretches of two closed contours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactRegion {
    /// `(start, end)` on `c_a` with `start <= end`; `end` may exceed the
    /// domain length, meaning the interval wraps past the origin.
    pub interval_a: (f64, f64),
    /// Nearest parameters on `c_b` to the start and end of `interval_a`.
    pub interval_b: (f64, f64),
    /// Largest sampled distance from `c_a` to `c_b` inside the region.
    pub max_gap: f64,
}

impl ContactRegion {
    pub fn covers_all(&self, c_a: &Subpath) -> bool {
        self.interval_a.1 - self.interval_a.0 >= c_a.segments.len() as f64
    }
}

/// Where a merged segment came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SegmentOrigin {
    /// A whole original segment, bit-identical.
    Original,
    /// An exact de Casteljau piece of an original segment.
    OriginalCut,
    Completion,
    Bridge,
}

impl SegmentOrigin {
    pub fn is_original(self) -> bool {
        matches!(self, SegmentOrigin::Original | SegmentOrigin::OriginalCut)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChainOrigin {
    Original,
    Completion,
}

/// A run of consecutive kept segments from one source.
#[derive(Debug, Clone, PartialEq)]
pub struct KeptChain {
    pub segments: Vec<CubicSegment>,
    pub tags: Vec<SegmentOrigin>,
    pub origin: ChainOrigin,
}

impl KeptChain {
    fn start(&self) -> Point {
        self.segments[0].p0
    }

    fn end(&self) -> Point {
        self.segments[self.segments.len() - 1].p3
    }

    fn start_tangent(&self) -> Point {
        self.segments[0].tangent(0.0).unwrap_or(Point::new(1.0, 0.0))
    }

    fn end_tangent(&self) -> Point {
        self.segments[self.segments.len() - 1].tangent(1.0).unwrap_or(Point::new(1.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeCurve {
    pub segment: CubicSegment,
    pub start_tangent: Point,
    pub end_tangent: Point,
}

/// A merged contour with one provenance tag per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedContour {
    pub subpath: Subpath,
    pub provenance: Vec<SegmentOrigin>,
    /// Set when surgery failed and the completion was used wholesale.
    pub fell_back: bool,
}

fn domain(sp: &Subpath) -> f64 {
    sp.segments.len() as f64
}

fn locate(sp: &Subpath, t: f64) -> (usize, f64) {
    let n = sp.segments.len();
    let t = t.rem_euclid(n as f64);
    let i = (t.floor() as usize).min(n - 1);
    (i, t - i as f64)
}

fn point_at(sp: &Subpath, t: f64) -> Point {
    let (i, u) = locate(sp, t);
    sp.segments[i].point_at(u)
}

/// Split at a global parameter. Segments other than the one containing the
/// cut are reused unchanged; a cut on a joint subdivides nothing.
pub fn cut_at(subpath: &Subpath, global_t: f64) -> Result<(Vec<CubicSegment>, Vec<CubicSegment>), SurgeryError> {
    let n = subpath.segments.len();
    if !(0.0..=n as f64).contains(&global_t) {
        return Err(SurgeryError::ParameterOutOfRange { t: global_t, max: n as f64 });
    }
    let i = global_t.floor() as usize;
    let local = global_t - i as f64;
    if i == n || local == 0.0 {
        return Ok((subpath.segments[..i].to_vec(), subpath.segments[i..].to_vec()));
    }
    let (l, r) = subpath.segments[i].split(local);
    let mut left = subpath.segments[..i].to_vec();
    left.push(l);
    let mut right = vec![r];
    right.extend_from_slice(&subpath.segments[i + 1..]);
    Ok((left, right))
}

/// Segments of `sp` from `t0` to `t1` (`t0 <= t1 <= t0 + n`), wrapping past
/// the origin. Whole segments come back unchanged.
fn extract(sp: &Subpath, t0: f64, t1: f64, whole: SegmentOrigin, cut: SegmentOrigin) -> (Vec<CubicSegment>, Vec<SegmentOrigin>) {
    let n = sp.segments.len();
    let mut segs = Vec::new();
    let mut tags = Vec::new();
    let mut k = t0.floor();
    while k < t1 {
        let lo = (t0 - k).max(0.0);
        let hi = (t1 - k).min(1.0);
        if hi - lo > 1e-12 {
            let seg = sp.segments[(k as usize) % n];
            if lo == 0.0 && hi == 1.0 {
                segs.push(seg);
                tags.push(whole);
            } else {
                segs.push(seg.subsegment(lo, hi));
                tags.push(cut);
            }
        }
        k += 1.0;
    }
    (segs, tags)
}

/// G1 bridge from `end_point` (leaving along `end_tangent`) to `start_point`
/// (arriving along `start_tangent`), handles one third of the chord.
pub fn build_bridge(end_point: Point, end_tangent: Point, start_point: Point, start_tangent: Point) -> Result<BridgeCurve, SurgeryError> {
    let t0 = end_tangent.normalized().ok_or(SurgeryError::ZeroTangent)?;
    let t3 = start_tangent.normalized().ok_or(SurgeryError::ZeroTangent)?;
    let chord = end_point.distance(start_point);
    if chord < DEGENERATE_BRIDGE {
        return Err(SurgeryError::DegenerateBridge);
    }
    let alpha = chord / 3.0;
    Ok(BridgeCurve {
        segment: CubicSegment::new(end_point, end_point + t0 * alpha, start_point - t3 * alpha, start_point),
        start_tangent: t0,
        end_tangent: t3,
    })
}

/// Sample parameters at most `spacing` of arc apart, using the bound
/// `|B'(t)| <= 3 * longest control leg`.
fn sample_params(sp: &Subpath, spacing: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for (i, s) in sp.segments.iter().enumerate() {
        let leg = s.p0.distance(s.c1).max(s.c1.distance(s.c2)).max(s.c2.distance(s.p3));
        let n = ((3.0 * leg / spacing).ceil() as usize).max(1);
        for k in 0..n {
            out.push(i as f64 + k as f64 / n as f64);
        }
    }
    out
}

/// Nearest-point queries against a sampled contour, bucketed on a grid.
struct NearestIndex<'a> {
    sp: &'a Subpath,
    params: Vec<f64>,
    points: Vec<Point>,
    cell: f64,
    origin: Point,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
    step: f64,
}

impl<'a> NearestIndex<'a> {
    fn new(sp: &'a Subpath, spacing: f64) -> Self {
        let params = sample_params(sp, spacing);
        let points: Vec<Point> = params.iter().map(|&t| point_at(sp, t)).collect();
        let (mut lo, mut hi) = (points[0], points[0]);
        for p in &points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let cell = spacing * 4.0;
        let cols = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let rows = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); cols * rows];
        for (i, p) in points.iter().enumerate() {
            let cx = ((p.x - lo.x) / cell) as usize;
            let cy = ((p.y - lo.y) / cell) as usize;
            buckets[cy.min(rows - 1) * cols + cx.min(cols - 1)].push(i);
        }
        NearestIndex { sp, params, points, cell, origin: lo, cols, rows, buckets, step: spacing }
    }

    /// Nearest point within `radius` (refined on the curve), as
    /// `(distance, parameter)`.
    fn nearest_within(&self, q: Point, radius: f64) -> Option<(f64, f64)> {
        let reach = radius + self.step;
        let x0 = ((q.x - reach - self.origin.x) / self.cell).floor();
        let x1 = ((q.x + reach - self.origin.x) / self.cell).floor();
        let y0 = ((q.y - reach - self.origin.y) / self.cell).floor();
        let y1 = ((q.y + reach - self.origin.y) / self.cell).floor();
        if x1 < 0.0 || y1 < 0.0 || x0 >= self.cols as f64 || y0 >= self.rows as f64 {
            return None;
        }
        let mut best: Option<(f64, usize)> = None;
        for cy in (y0.max(0.0) as usize)..=(y1 as usize).min(self.rows - 1) {
            for cx in (x0.max(0.0) as usize)..=(x1 as usize).min(self.cols - 1) {
                for &i in &self.buckets[cy * self.cols + cx] {
                    let d = self.points[i].distance_sq(q);
                    if best.is_none_or(|(b, j)| d < b || (d == b && i < j)) {
                        best = Some((d, i));
                    }
                }
            }
        }
        let (_, i) = best?;
        let (d, t) = self.refine(q, i);
        (d <= radius).then_some((d, t))
    }

    /// Golden-section refinement of the distance around sample `i`.
    fn refine(&self, q: Point, i: usize) -> (f64, f64) {
        let n = self.params.len();
        let prev = self.params[(i + n - 1) % n];
        let next = self.params[(i + 1) % n];
        let t = self.params[i];
        let span = domain(self.sp);
        let lo = if prev > t { prev - span } else { prev };
        let hi = if next < t { next + span } else { next };
        let f = |u: f64| point_at(self.sp, u).distance(q);
        let (mut a, mut b) = (lo, hi);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..40 {
            let m1 = b - g * (b - a);
            let m2 = a + g * (b - a);
            if f(m1) <= f(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        let u = 0.5 * (a + b);
        let (du, dt) = (f(u), f(t));
        if du < dt {
            (du, u.rem_euclid(span))
        } else {
            (dt, t)
        }
    }
}

/// Maximal stretches of `c_a` whose samples (at most `epsilon / 2` of arc
/// apart) lie within `epsilon` of `c_b`, in order along `c_a`.
pub fn detect_contacts(c_a: &Subpath, c_b: &Subpath, epsilon: f64) -> Result<Vec<ContactRegion>, SurgeryError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SurgeryError::InvalidEpsilon);
    }
    if !c_a.closed || !c_b.closed {
        return Err(SurgeryError::OpenContour);
    }
    let spacing = epsilon / 2.0;
    let index = NearestIndex::new(c_b, spacing);
    let params = sample_params(c_a, spacing);
    let hits: Vec<Option<(f64, f64)>> = params.iter().map(|&t| index.nearest_within(point_at(c_a, t), epsilon)).collect();
    let m = params.len();
    let la = domain(c_a);
    if hits.iter().all(Option::is_some) {
        let gap = hits.iter().map(|h| h.unwrap().0).fold(0.0, f64::max);
        let b0 = hits[0].unwrap().1;
        return Ok(vec![ContactRegion { interval_a: (0.0, la), interval_b: (b0, b0), max_gap: gap }]);
    }
    let Some(first_miss) = hits.iter().position(Option::is_none) else { unreachable!() };
    let mut regions = Vec::new();
    let mut k = 0;
    while k < m {
        let i = (first_miss + k) % m;
        if hits[i].is_none() {
            k += 1;
            continue;
        }
        let start = i;
        let mut gap = 0.0f64;
        let mut last = i;
        while k < m && hits[(first_miss + k) % m].is_some() {
            last = (first_miss + k) % m;
            gap = gap.max(hits[last].unwrap().0);
            k += 1;
        }
        let s = params[start];
        let mut e = params[last];
        if e < s {
            e += la;
        }
        regions.push(ContactRegion { interval_a: (s, e), interval_b: (hits[start].unwrap().1, hits[last].unwrap().1), max_gap: gap });
    }
    regions.sort_by(|a, b| a.interval_a.0.total_cmp(&b.interval_a.0));
    Ok(regions)
}

fn fwd(from: f64, to: f64, len: f64) -> f64 {
    (to - from).rem_euclid(len)
}

fn arc_length(sp: &Subpath, t0: f64, t1: f64) -> f64 {
    let steps = (((t1 - t0) * 16.0).ceil() as usize).max(1);
    let mut prev = point_at(sp, t0);
    let mut len = 0.0;
    for k in 1..=steps {
        let p = point_at(sp, t0 + (t1 - t0) * k as f64 / steps as f64);
        len += prev.distance(p);
        prev = p;
    }
    len
}

/// Region with its b-side resolved against a (possibly reversed) `c_b`.
#[derive(Debug, Clone, Copy)]
struct Resolved {
    a0: f64,
    a1: f64,
    b0: f64,
    b1: f64,
    length: f64,
}

/// Merge `c_a` (original) and `c_b` (completion) through `contacts`.
///
/// Regions are accepted longest first; a region whose order or direction on
/// `c_b` disagrees with those already accepted is left to the completion.
/// `c_b` is reversed when needed so the result follows `c_a`'s direction.
pub fn merge_contours(c_a: &Subpath, c_b: &Subpath, contacts: &[ContactRegion], epsilon: f64) -> Result<MergedContour, SurgeryError> {
    if !c_a.closed || !c_b.closed {
        return Err(SurgeryError::OpenContour);
    }
    if contacts.is_empty() {
        return Ok(MergedContour {
            subpath: c_b.clone(),
            provenance: vec![SegmentOrigin::Completion; c_b.segments.len()],
            fell_back: false,
        });
    }
    if contacts.iter().any(|r| r.covers_all(c_a)) {
        // c_a lies along c_b everywhere; it replaces c_b only if c_b also
        // lies along c_a.
        let back = detect_contacts(c_b, c_a, epsilon)?;
        if back.len() == 1 && back[0].covers_all(c_b) {
            return Ok(MergedContour {
                subpath: c_a.clone(),
                provenance: vec![SegmentOrigin::Original; c_a.segments.len()],
                fell_back: false,
            });
        }
        return Err(SurgeryError::AmbiguousTopology("original lies entirely along a larger completion".into()));
    }

    let (la, lb) = (domain(c_a), domain(c_b));
    let index = NearestIndex::new(c_b, epsilon / 2.0);
    let nearest = |t: f64| index.nearest_within(point_at(c_a, t), f64::INFINITY).map(|h| h.1).unwrap_or(0.0);
    let mut regions: Vec<(Resolved, bool)> = contacts
        .iter()
        .map(|r| {
            let (a0, a1) = r.interval_a;
            let mid = nearest(0.5 * (a0 + a1));
            let (b0, b1) = r.interval_b;
            let forward = fwd(b0, mid, lb) + fwd(mid, b1, lb) <= lb;
            (Resolved { a0, a1, b0, b1, length: arc_length(c_a, a0, a1) }, forward)
        })
        .filter(|(r, _)| r.length >= MIN_REGION_EPSILONS * epsilon)
        .collect();
    if regions.is_empty() {
        return Ok(MergedContour {
            subpath: c_b.clone(),
            provenance: vec![SegmentOrigin::Completion; c_b.segments.len()],
            fell_back: false,
        });
    }
    regions.sort_by(|x, y| y.0.length.total_cmp(&x.0.length).then(x.0.a0.total_cmp(&y.0.a0)));

    let reverse_b = !regions[0].1;
    let b = if reverse_b { c_b.reversed() } else { c_b.clone() };
    let flip = |t: f64| if reverse_b { (lb - t).rem_euclid(lb) } else { t };

    let mut accepted: Vec<Resolved> = Vec::new();
    for (r, forward) in regions {
        if forward == reverse_b {
            continue;
        }
        let r = Resolved { b0: flip(r.b0), b1: flip(r.b1), ..r };
        let mut trial = accepted.clone();
        trial.push(r);
        trial.sort_by(|x, y| x.a0.total_cmp(&y.a0));
        let turn: f64 = (0..trial.len())
            .map(|i| {
                let next = trial[(i + 1) % trial.len()];
                fwd(trial[i].b0, trial[i].b1, lb) + fwd(trial[i].b1, next.b0, lb)
            })
            .sum();
        let a_disjoint = (0..trial.len()).all(|i| {
            let next = trial[(i + 1) % trial.len()];
            trial.len() == 1 || fwd(trial[i].a0, next.a0, la) >= trial[i].a1 - trial[i].a0
        });
        if (turn - lb).abs() < 1e-6 && a_disjoint {
            accepted = trial;
        }
    }
    if accepted.is_empty() {
        return Err(SurgeryError::AmbiguousTopology("no contact region agrees with the completion's direction".into()));
    }

    let mut chains: Vec<KeptChain> = Vec::new();
    for (i, r) in accepted.iter().enumerate() {
        let (segs, tags) = extract(c_a, r.a0, r.a1, SegmentOrigin::Original, SegmentOrigin::OriginalCut);
        if !segs.is_empty() {
            chains.push(KeptChain { segments: segs, tags, origin: ChainOrigin::Original });
        }
        let next = accepted[(i + 1) % accepted.len()];
        let span = fwd(r.b1, next.b0, lb);
        let (segs, tags) = extract(&b, r.b1, r.b1 + span, SegmentOrigin::Completion, SegmentOrigin::Completion);
        if !segs.is_empty() {
            chains.push(KeptChain { segments: segs, tags, origin: ChainOrigin::Completion });
        }
    }
    if !chains.iter().any(|c| c.origin == ChainOrigin::Original) {
        return Err(SurgeryError::AmbiguousTopology("contact regions collapse to points".into()));
    }
    assemble(chains)
}

/// Join chains cyclically: weld near-coincident ends by moving the
/// completion side, otherwise insert a G1 bridge.
fn assemble(mut chains: Vec<KeptChain>) -> Result<MergedContour, SurgeryError> {
    let n = chains.len();
    // Welds first, so bridges see final endpoints.
    let mut bridge_after = vec![false; n];
    for i in 0..n {
        let j = (i + 1) % n;
        let (end, start) = (chains[i].end(), chains[j].start());
        if end == start {
            continue;
        }
        if end.distance(start) < WELD_DISTANCE {
            if chains[j].origin == ChainOrigin::Completion {
                let s = &mut chains[j].segments[0];
                let off = end - s.p0;
                s.p0 = end;
                s.c1 = s.c1 + off;
            } else {
                let last = chains[i].segments.len() - 1;
                let s = &mut chains[i].segments[last];
                let off = start - s.p3;
                s.p3 = start;
                s.c2 = s.c2 + off;
            }
        } else {
            bridge_after[i] = true;
        }
    }
    let mut segments = Vec::new();
    let mut provenance = Vec::new();
    for i in 0..n {
        segments.extend_from_slice(&chains[i].segments);
        provenance.extend_from_slice(&chains[i].tags);
        if bridge_after[i] {
            let j = (i + 1) % n;
            let bridge = build_bridge(chains[i].end(), chains[i].end_tangent(), chains[j].start(), chains[j].start_tangent())?;
            segments.push(bridge.segment);
            provenance.push(SegmentOrigin::Bridge);
        }
    }
    let subpath = Subpath::new(segments, true).map_err(|e| SurgeryError::AmbiguousTopology(e.to_string()))?;
    Ok(MergedContour { subpath, provenance, fell_back: false })
}

/// Detect contacts and merge; on failure return the completion wholesale,
/// flagged as a fallback.
pub fn merge_or_fallback(c_a: &Subpath, c_b: &Subpath, epsilon: f64) -> MergedContour {
    let merged = detect_contacts(c_a, c_b, epsilon).and_then(|contacts| merge_contours(c_a, c_b, &contacts, epsilon));
    match merged {
        Ok(m) => m,
        Err(e) => {
            log::warn!("curve surgery fell back to the completion: {e}");
            MergedContour {
                subpath: c_b.clone(),
                provenance: vec![SegmentOrigin::Completion; c_b.segments.len()],
                fell_back: true,
            }
        }
    }
}

/// Largest tangent mismatch over the bridge joints of a merged contour.
pub fn max_bridge_joint_angle(merged: &MergedContour) -> f64 {
    let segs = &merged.subpath.segments;
    let n = segs.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        if merged.provenance[i] != SegmentOrigin::Bridge {
            continue;
        }
        let prev = segs[(i + n - 1) % n];
        let next = segs[(i + 1) % n];
        let bridge = segs[i];
        for (a, b) in [(prev.tangent(1.0), bridge.tangent(0.0)), (bridge.tangent(1.0), next.tangent(0.0))] {
            if let (Some(a), Some(b)) = (a, b) {
                worst = worst.max(angle_between(a, b));
            }
        }
    }
    worst
}

/// Annotated SVG of merged contours: original chains blue, completion red,
/// bridges green.
pub fn debug_svg(contours: &[MergedContour], viewbox: ViewBox) -> String {
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
        viewbox.min_x, viewbox.min_y, viewbox.width, viewbox.height
    );
    let stroke = viewbox.width.max(viewbox.height) / 256.0;
    for c in contours {
        for (seg, tag) in c.subpath.segments.iter().zip(&c.provenance) {
            let color = match tag {
                SegmentOrigin::Original | SegmentOrigin::OriginalCut => "#1f77b4",
                SegmentOrigin::Completion => "#d62728",
                SegmentOrigin::Bridge => "#2ca02c",
            };
            let _ = writeln!(
                out,
                "<path d=\"M{:?} {:?}C{:?} {:?} {:?} {:?} {:?} {:?}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{stroke:?}\"/>",
                seg.p0.x, seg.p0.y, seg.c1.x, seg.c1.y, seg.c2.x, seg.c2.y, seg.p3.x, seg.p3.y
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{rasterize, BinaryMask};
    use crate::svg::{CompoundPath, FillRule};
    use proptest::prelude::*;

    const K: f64 = 0.552_284_749_830_793_4;

    fn circle(cx: f64, cy: f64, r: f64) -> Subpath {
        let p = |x: f64, y: f64| Point::new(cx + x * r, cy + y * r);
        let segs = vec![
            CubicSegment::new(p(1.0, 0.0), p(1.0, K), p(K, 1.0), p(0.0, 1.0)),
            CubicSegment::new(p(0.0, 1.0), p(-K, 1.0), p(-1.0, K), p(-1.0, 0.0)),
            CubicSegment::new(p(-1.0, 0.0), p(-1.0, -K), p(-K, -1.0), p(0.0, -1.0)),
            CubicSegment::new(p(0.0, -1.0), p(K, -1.0), p(1.0, -K), p(1.0, 0.0)),
        ];
        Subpath::new(segs, true).unwrap()
    }

    /// Arc of a circle as cubics of at most 90 degrees, from angle `a0` to
    /// `a1` (radians, either direction).
    fn arc(cx: f64, cy: f64, r: f64, a0: f64, a1: f64) -> Vec<CubicSegment> {
        let n = ((a1 - a0).abs() / std::f64::consts::FRAC_PI_2).ceil().max(1.0) as usize;
        let step = (a1 - a0) / n as f64;
        let k = 4.0 / 3.0 * (step / 4.0).tan();
        (0..n)
            .map(|i| {
                let (s, e) = (a0 + step * i as f64, a0 + step * (i + 1) as f64);
                let p0 = Point::new(cx + r * s.cos(), cy + r * s.sin());
                let p3 = Point::new(cx + r * e.cos(), cy + r * e.sin());
                let d0 = Point::new(-s.sin(), s.cos()) * (r * k);
                let d3 = Point::new(-e.sin(), e.cos()) * (r * k);
                CubicSegment::new(p0, p0 + d0, p3 - d3, p3)
            })
            .collect()
    }

    /// Disk (cx, cy, r) with a disk of radius `ro` centered `off` to the
    /// right removed: outer arc counterclockwise-in-angle, inner arc back.
    fn crescent(cx: f64, cy: f64, r: f64, off: f64, ro: f64) -> Subpath {
        // Intersection angles of the two circles.
        let x = (off * off + r * r - ro * ro) / (2.0 * off);
        let h = (r * r - x * x).sqrt();
        let a = h.atan2(x);
        let b = h.atan2(x - off);
        let mut segs = arc(cx, cy, r, a, 2.0 * std::f64::consts::PI - a);
        let mut inner = arc(cx + off, cy, ro, -b, b - 2.0 * std::f64::consts::PI);
        // Share exact joint points.
        let first = segs[0].p0;
        let last = segs[segs.len() - 1].p3;
        inner[0].c1 = inner[0].c1 + (last - inner[0].p0);
        inner[0].p0 = last;
        let li = inner.len() - 1;
        inner[li].c2 = inner[li].c2 + (first - inner[li].p3);
        inner[li].p3 = first;
        segs.extend(inner);
        Subpath::new(segs, true).unwrap()
    }

    fn mask_of(sp: &Subpath, w: usize) -> BinaryMask {
        rasterize(&CompoundPath::new(vec![sp.clone()], FillRule::EvenOdd, ViewBox::canvas(w, w)).unwrap(), w, w)
    }

    #[test]
    fn cut_identity_on_random_cubic() {
        let s = CubicSegment::new(Point::new(1.0, 2.0), Point::new(7.0, -3.0), Point::new(2.0, 9.0), Point::new(11.0, 4.0));
        let sp = Subpath::new(vec![s, CubicSegment::line(s.p3, s.p0)], true).unwrap();
        let (l, r) = cut_at(&sp, 0.3).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(r[1], sp.segments[1]);
        for i in 0..=200 {
            let t = i as f64 / 200.0;
            let want = s.point_at(t);
            let got = if t <= 0.3 { l[0].point_at(t / 0.3) } else { r[0].point_at((t - 0.3) / 0.7) };
            assert!(want.distance(got) < 1e-12, "{t}");
        }
    }

    #[test]
    fn cut_at_joint_and_line() {
        let sp = circle(0.0, 0.0, 10.0);
        let (l, r) = cut_at(&sp, 2.0).unwrap();
        assert_eq!(l, sp.segments[..2].to_vec());
        assert_eq!(r, sp.segments[2..].to_vec());
        let line = Subpath::new(
            vec![CubicSegment::line(Point::new(0.0, 0.0), Point::new(4.0, 0.0)), CubicSegment::line(Point::new(4.0, 0.0), Point::new(0.0, 0.0))],
            true,
        )
        .unwrap();
        let (l, r) = cut_at(&line, 0.5).unwrap();
        assert_eq!(l[0].p3, Point::new(2.0, 0.0));
        assert_eq!(r[0].p0, Point::new(2.0, 0.0));
        assert!(matches!(cut_at(&line, 2.5), Err(SurgeryError::ParameterOutOfRange { .. })));
        assert!(matches!(cut_at(&line, -0.1), Err(SurgeryError::ParameterOutOfRange { .. })));
    }

    proptest! {
        #[test]
        fn cut_concatenation(pts in proptest::collection::vec(-50.0f64..50.0, 8), t in 0.0f64..1.0) {
            let p = |i: usize| Point::new(pts[2 * i], pts[2 * i + 1]);
            let s = CubicSegment::new(p(0), p(1), p(2), p(3));
            prop_assume!(s.p0 != s.p3);
            let sp = Subpath::new(vec![s, CubicSegment::line(s.p3, s.p0)], true).unwrap();
            let (l, r) = cut_at(&sp, t).unwrap();
            prop_assert_eq!(*r.last().unwrap(), sp.segments[1]);
            for i in 0..=200 {
                let u = i as f64 / 200.0;
                let want = s.point_at(u);
                let got = if u <= t { l[0].point_at(if t > 0.0 { u / t } else { 0.0 }) } else { r[0].point_at((u - t) / (1.0 - t)) };
                prop_assert!(want.distance(got) < 1e-12 * (1.0 + want.length()) * 10.0);
            }
        }
    }

    #[test]
    fn bridge_cases() {
        let b = build_bridge(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(3.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        assert_eq!(b.segment, CubicSegment::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0), Point::new(3.0, 0.0)));
        let b = build_bridge(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(0.0, 2.0)).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(b.segment.c1, Point::new(third, 0.0));
        assert_eq!(b.segment.c2, Point::new(0.0, 1.0 - third));
        assert!(angle_between(b.segment.tangent(0.0).unwrap(), Point::new(1.0, 0.0)) < 1e-6);
        assert!(angle_between(b.segment.tangent(1.0).unwrap(), Point::new(0.0, 1.0)) < 1e-6);
        assert_eq!(
            build_bridge(Point::new(1.0, 1.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0)),
            Err(SurgeryError::DegenerateBridge)
        );
        assert_eq!(
            build_bridge(Point::new(0.0, 0.0), Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0)),
            Err(SurgeryError::ZeroTangent)
        );
    }

    #[test]
    fn contacts_trivial_cases() {
        let c = circle(50.0, 50.0, 20.0);
        let all = detect_contacts(&c, &c, 1.5).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].covers_all(&c));
        assert_eq!(all[0].max_gap, 0.0);
        assert!(detect_contacts(&c, &circle(150.0, 50.0, 20.0), 1.0).unwrap().is_empty());
        assert_eq!(detect_contacts(&c, &c, 0.0), Err(SurgeryError::InvalidEpsilon));
    }

    #[test]
    fn half_moon_contact_interval() {
        // Half disk: arc over angles [-pi/2, pi/2] then the diameter.
        let r = 30.0;
        let mut segs = arc(50.0, 50.0, r, -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
        let top = segs[0].p0;
        let bottom = segs[segs.len() - 1].p3;
        segs.push(CubicSegment::line(bottom, top));
        let half = Subpath::new(segs, true).unwrap();
        let eps = 1.5;
        let regions = detect_contacts(&half, &circle(50.0, 50.0, r), eps).unwrap();
        assert_eq!(regions.len(), 1);
        let reg = regions[0];
        // Dense oracle: the analytic overlap is the arc (params [0, 2]) plus
        // the stretch of the diameter within eps of the circle at each end.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=30000 {
            let t = 3.0 * i as f64 / 30000.0;
            let p = point_at(&half, t);
            let d = (p.distance(Point::new(50.0, 50.0)) - r).abs();
            if d <= eps {
                let tt = if t > 2.5 { t - 3.0 } else { t };
                lo = lo.min(tt);
                hi = hi.max(tt);
            }
        }
        let spacing_param = eps / 2.0 / (2.0 * r);
        let (a0, a1) = reg.interval_a;
        let (a0, a1) = if a0 > 1.5 { (a0 - 3.0, a1 - 3.0) } else { (a0, a1) };
        assert!((a0 - lo).abs() <= spacing_param + 1e-3, "{a0} vs {lo}");
        assert!((a1 - hi).abs() <= spacing_param + 1e-3, "{a1} vs {hi}");
        assert!(reg.max_gap <= eps);
    }

    #[test]
    fn empty_contacts_return_completion() {
        let a = circle(20.0, 20.0, 5.0);
        let b = circle(80.0, 80.0, 5.0);
        let m = merge_contours(&a, &b, &[], 1.5).unwrap();
        assert_eq!(m.subpath, b);
        assert!(m.provenance.iter().all(|&t| t == SegmentOrigin::Completion));
    }

    #[test]
    fn identical_contours_return_original() {
        let a = circle(40.0, 40.0, 20.0);
        let m = merge_or_fallback(&a, &a.clone(), 1.5);
        assert_eq!(m.subpath, a);
        assert!(!m.fell_back);
        assert!(m.provenance.iter().all(|&t| t == SegmentOrigin::Original));
    }

    fn check_crescent(cx: f64, cy: f64, r: f64, off: f64, ro: f64, reverse: bool) {
        let eps = DEFAULT_CONTACT_EPSILON;
        let original = crescent(cx, cy, r, off, ro);
        let mut completion = circle(cx, cy, r);
        if reverse {
            completion = completion.reversed();
        }
        let contacts = detect_contacts(&original, &completion, eps).unwrap();
        let merged = merge_contours(&original, &completion, &contacts, eps).unwrap();
        assert!(!merged.fell_back);
        let segs = &merged.subpath.segments;
        assert_eq!(segs[0].p0, segs[segs.len() - 1].p3);
        // Whole reused segments match a source segment bit for bit.
        let originals = merged.provenance.iter().filter(|t| **t == SegmentOrigin::Original).count();
        assert!(originals >= 2, "outer arc reused");
        for (s, t) in segs.iter().zip(&merged.provenance) {
            if *t == SegmentOrigin::Original {
                assert!(original.segments.contains(s));
            }
        }
        assert!(merged.provenance.contains(&SegmentOrigin::Completion));
        assert!(max_bridge_joint_angle(&merged) < 1e-6);
        // Raster fidelity outside the contact bands.
        let w = 160;
        let got = mask_of(&merged.subpath, w);
        let want = mask_of(&completion, w);
        let band_pts: Vec<Point> = contacts
            .iter()
            .flat_map(|c| {
                let (a0, a1) = c.interval_a;
                let steps = ((a1 - a0) * 400.0) as usize + 1;
                (0..=steps).map(move |k| a0 + (a1 - a0) * k as f64 / steps as f64)
            })
            .map(|t| point_at(&original, t))
            .collect();
        // Pixel centers within eps of a band point, plus half a pixel
        // diagonal for the center-sampling rule.
        let reach = eps + std::f64::consts::FRAC_1_SQRT_2;
        for y in 0..w {
            for x in 0..w {
                if got.get(x, y) != want.get(x, y) {
                    let c = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                    assert!(band_pts.iter().any(|p| p.distance(c) <= reach), "pixel ({x}, {y}) differs outside band");
                }
            }
        }
    }

    #[test]
    fn crescent_and_disk() {
        check_crescent(70.0, 80.0, 40.0, 35.0, 30.0, false);
        check_crescent(70.0, 80.0, 40.0, 35.0, 30.0, true);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn crescent_family(r in 25.0f64..45.0, off_f in 0.4f64..0.9, ro_f in 0.5f64..1.0, reverse: bool) {
            let off = r * off_f;
            let ro = (r * ro_f).max(off * 0.6 + 1.0);
            prop_assume!(off + ro > r + 2.0 && (off - ro).abs() < r - 2.0);
            check_crescent(75.0, 78.0, r, off, ro, reverse);
        }
    }

    #[test]
    fn debug_svg_has_three_colors() {
        let original = crescent(70.0, 80.0, 40.0, 35.0, 30.0);
        let m = merge_or_fallback(&original, &circle(70.0, 80.0, 40.0), 1.5);
        let svg = debug_svg(&[m], ViewBox::canvas(160, 160));
        for color in ["#1f77b4", "#d62728", "#2ca02c"] {
            assert!(svg.contains(color), "{color}");
        }
        roxmltree::Document::parse(&svg).unwrap();
    }
}
