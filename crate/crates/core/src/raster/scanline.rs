//! Pixel-center scanline fill of compound cubic paths. Crossings are solved
//! on the curves themselves rather than on a flattened polyline.

use crate::geom::{CubicSegment, Point};
use crate::svg::{CompoundPath, FillRule};

use super::BinaryMask;

/// Bisection steps when locating a scanline crossing; enough to pin `t`
/// to the last bit, so coverage does not depend on how a curve is split.
const BISECTION_STEPS: usize = 60;

/// A piece of a cubic, in pixel space, on which `y` is monotone.
struct Edge {
    seg: CubicSegment,
    t0: f64,
    t1: f64,
    y0: f64,
    y1: f64,
    /// +1 for downward edges (increasing y), −1 for upward.
    dir: i32,
}

impl Edge {
    /// `x` where the edge meets the horizontal line `y = yc`; `yc` lies
    /// within the edge's `y` range.
    fn crossing(&self, yc: f64) -> f64 {
        let (mut lo, mut hi) = (self.t0, self.t1);
        let rising = self.y1 > self.y0;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (eval(&self.seg, mid).y < yc) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        eval(&self.seg, 0.5 * (lo + hi)).x
    }
}

/// Point on `s`, exact at the endpoints so adjacent pieces share them.
fn eval(s: &CubicSegment, t: f64) -> Point {
    match t {
        0.0 => s.p0,
        1.0 => s.p3,
        _ => s.point_at(t),
    }
}

/// Parameters in `(0, 1)` where `dy/dt` vanishes, ascending.
fn y_extrema(s: &CubicSegment) -> Vec<f64> {
    let a = 3.0 * (-s.p0.y + 3.0 * s.c1.y - 3.0 * s.c2.y + s.p3.y);
    let b = 6.0 * (s.p0.y - 2.0 * s.c1.y + s.c2.y);
    let c = 3.0 * (s.c1.y - s.p0.y);
    let mut roots = Vec::new();
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return roots;
    }
    if a.abs() <= 1e-12 * scale {
        if b != 0.0 {
            roots.push(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            roots.push(q / a);
            if q != 0.0 {
                roots.push(c / q);
            }
        }
    }
    roots.retain(|t| *t > 0.0 && *t < 1.0);
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

/// Split every subpath of `path` into y-monotone pixel-space edges.
fn edges(path: &CompoundPath, width: usize, height: usize) -> Vec<Edge> {
    let vb = path.viewbox;
    let sx = width as f64 / vb.width;
    let sy = height as f64 / vb.height;
    let to_px = |p: Point| Point::new((p.x - vb.min_x) * sx, (p.y - vb.min_y) * sy);
    let mut out = Vec::new();
    let mut push = |seg: CubicSegment| {
        let mut cuts = vec![0.0];
        cuts.extend(y_extrema(&seg));
        cuts.push(1.0);
        for w in cuts.windows(2) {
            let (y0, y1) = (eval(&seg, w[0]).y, eval(&seg, w[1]).y);
            if y0 != y1 {
                out.push(Edge { seg, t0: w[0], t1: w[1], y0, y1, dir: if y1 > y0 { 1 } else { -1 } });
            }
        }
    };
    for sp in &path.subpaths {
        for seg in &sp.segments {
            push(seg.map(to_px));
        }
        // Subpaths are closed by contract; close defensively for open ones.
        if let (Some(first), Some(last)) = (sp.segments.first(), sp.segments.last()) {
            if first.p0 != last.p3 {
                push(CubicSegment::line(to_px(last.p3), to_px(first.p0)));
            }
        }
    }
    out
}

/// Set each pixel whose center lies inside `path` under its fill rule.
pub fn rasterize(path: &CompoundPath, width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::new(width, height);
    let edges = edges(path, width, height);
    let rule = path.fill_rule;

    // Bucket edges by the first scanline whose center they may cross.
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); height];
    for (i, e) in edges.iter().enumerate() {
        let ymin = e.y0.min(e.y1);
        let ymax = e.y0.max(e.y1);
        if ymax < 0.5 || ymin > height as f64 - 0.5 {
            continue;
        }
        let first_row = ((ymin - 0.5).ceil().max(0.0)) as usize;
        if first_row < height {
            buckets[first_row].push(i);
        }
    }

    let mut active: Vec<usize> = Vec::new();
    let mut crossings: Vec<(f64, i32)> = Vec::new();
    for (row, bucket) in buckets.iter().enumerate() {
        let yc = row as f64 + 0.5;
        active.extend_from_slice(bucket);
        active.retain(|&i| edges[i].y0.max(edges[i].y1) > yc);
        crossings.clear();
        for &i in &active {
            let e = &edges[i];
            let (ylo, yhi) = if e.y0 < e.y1 { (e.y0, e.y1) } else { (e.y1, e.y0) };
            // Half-open rule: count when ylo <= yc < yhi.
            if ylo <= yc && yc < yhi {
                crossings.push((e.crossing(yc), e.dir));
            }
        }
        if crossings.is_empty() {
            continue;
        }
        crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
        fill_row(&mut mask, row, &crossings, rule);
    }
    mask
}

fn fill_row(mask: &mut BinaryMask, row: usize, crossings: &[(f64, i32)], rule: FillRule) {
    let width = mask.width();
    let mut winding = 0;
    for w in crossings.windows(2) {
        winding += w[0].1;
        if !rule.contains(winding) {
            continue;
        }
        // Pixel x is inside when x0 <= x + 0.5 < x1.
        let start = (w[0].0 - 0.5).ceil().max(0.0);
        let end = (w[1].0 - 0.5).ceil().min(width as f64);
        if end <= start {
            continue;
        }
        for x in start as usize..end as usize {
            mask.set(x, row, true);
        }
    }
}
