//! SVG path-data grammar: tokenizing, command interpretation, and
//! normalization of every command to absolute cubic segments.

use std::f64::consts::PI;

use crate::geom::{CubicSegment, Point};

use super::{Subpath, SvgError};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Command(u8),
    Number(f64),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn skip_separators(&mut self) {
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_whitespace() || c == b',' {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek_is_number(&mut self) -> bool {
        self.skip_separators();
        matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit() || matches!(c, b'-' | b'+' | b'.'))
    }

    fn next_token(&mut self) -> Result<Option<Token>, SvgError> {
        self.skip_separators();
        let Some(&c) = self.src.get(self.pos) else {
            return Ok(None);
        };
        if c.is_ascii_alphabetic() && c != b'e' && c != b'E' {
            self.pos += 1;
            return Ok(Some(Token::Command(c)));
        }
        self.number().map(|n| Some(Token::Number(n)))
    }

    fn number(&mut self) -> Result<f64, SvgError> {
        self.skip_separators();
        let start = self.pos;
        let bytes = self.src;
        let mut i = self.pos;
        if matches!(bytes.get(i), Some(b'+' | b'-')) {
            i += 1;
        }
        let mut digits = 0;
        while matches!(bytes.get(i), Some(c) if c.is_ascii_digit()) {
            i += 1;
            digits += 1;
        }
        if bytes.get(i) == Some(&b'.') {
            i += 1;
            while matches!(bytes.get(i), Some(c) if c.is_ascii_digit()) {
                i += 1;
                digits += 1;
            }
        }
        if digits == 0 {
            return Err(SvgError::MalformedPathData {
                offset: start,
                reason: "expected a number".into(),
            });
        }
        if matches!(bytes.get(i), Some(b'e' | b'E')) {
            let mut j = i + 1;
            if matches!(bytes.get(j), Some(b'+' | b'-')) {
                j += 1;
            }
            let exp_start = j;
            while matches!(bytes.get(j), Some(c) if c.is_ascii_digit()) {
                j += 1;
            }
            if j > exp_start {
                i = j;
            }
        }
        self.pos = i;
        let text = std::str::from_utf8(&bytes[start..i]).expect("ascii slice");
        text.parse::<f64>().map_err(|_| SvgError::MalformedPathData {
            offset: start,
            reason: format!("invalid number `{text}`"),
        })
    }

    /// Arc flags may be packed without separators (`a1 1 0 0110 10`).
    fn flag(&mut self) -> Result<bool, SvgError> {
        self.skip_separators();
        match self.src.get(self.pos) {
            Some(b'0') => {
                self.pos += 1;
                Ok(false)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(true)
            }
            _ => Err(SvgError::MalformedPathData {
                offset: self.pos,
                reason: "expected arc flag".into(),
            }),
        }
    }
}

/// Accumulates segments into closed subpaths while interpreting commands.
struct Builder {
    subpaths: Vec<Subpath>,
    segments: Vec<CubicSegment>,
    start: Point,
    current: Point,
    last_cubic_ctrl: Option<Point>,
    last_quad_ctrl: Option<Point>,
    arc_tolerance: f64,
}

impl Builder {
    fn push(&mut self, seg: CubicSegment) -> Result<(), SvgError> {
        if !seg.is_finite() {
            return Err(SvgError::MalformedPathData {
                offset: 0,
                reason: "non-finite coordinate".into(),
            });
        }
        // Degenerate (single-point) segments are dropped; they carry no geometry.
        if !seg.is_degenerate() {
            self.segments.push(seg);
        }
        self.current = seg.p3;
        Ok(())
    }

    fn move_to(&mut self, p: Point) -> Result<(), SvgError> {
        if !self.segments.is_empty() {
            return Err(SvgError::OpenSubpathInFlattenedInput {
                index: self.subpaths.len(),
            });
        }
        self.start = p;
        self.current = p;
        Ok(())
    }

    fn close(&mut self) -> Result<(), SvgError> {
        if self.current != self.start {
            self.push(CubicSegment::line(self.current, self.start))?;
        }
        if !self.segments.is_empty() {
            let segments = std::mem::take(&mut self.segments);
            self.subpaths.push(Subpath { segments, closed: true });
        }
        self.current = self.start;
        Ok(())
    }
}

/// Parse a `d` attribute into closed subpaths of absolute cubic segments.
///
/// `arc_tolerance` is the maximum allowed deviation of the cubic
/// approximation of elliptical arcs, in user units.
pub fn parse_path_data(d: &str, arc_tolerance: f64) -> Result<Vec<Subpath>, SvgError> {
    let mut lex = Lexer::new(d);
    let mut b = Builder {
        subpaths: Vec::new(),
        segments: Vec::new(),
        start: Point::default(),
        current: Point::default(),
        last_cubic_ctrl: None,
        last_quad_ctrl: None,
        arc_tolerance,
    };
    let mut command: Option<u8> = None;
    let mut first = true;

    loop {
        let cmd = if lex.peek_is_number() {
            match command {
                // Implicit repetition; a repeated moveto becomes lineto.
                Some(b'M') => b'L',
                Some(b'm') => b'l',
                Some(c) if !matches!(c, b'Z' | b'z') => c,
                _ => {
                    return Err(SvgError::MalformedPathData {
                        offset: lex.pos,
                        reason: "number without a command".into(),
                    })
                }
            }
        } else {
            match lex.next_token()? {
                None => break,
                Some(Token::Command(c)) => c,
                Some(Token::Number(_)) => unreachable!("numbers handled above"),
            }
        };
        if first && !matches!(cmd, b'M' | b'm') {
            return Err(SvgError::MalformedPathData {
                offset: 0,
                reason: "path data must begin with a moveto".into(),
            });
        }
        first = false;
        let rel = cmd.is_ascii_lowercase();
        let origin = if rel { b.current } else { Point::default() };
        let mut cubic_ctrl = None;
        let mut quad_ctrl = None;
        match cmd.to_ascii_uppercase() {
            b'M' => {
                let p = origin + point(&mut lex)?;
                b.move_to(p)?;
            }
            b'L' => {
                let p = origin + point(&mut lex)?;
                b.push(CubicSegment::line(b.current, p))?;
            }
            b'H' => {
                let x = lex.number()? + origin.x;
                b.push(CubicSegment::line(b.current, Point::new(x, b.current.y)))?;
            }
            b'V' => {
                let y = lex.number()? + origin.y;
                b.push(CubicSegment::line(b.current, Point::new(b.current.x, y)))?;
            }
            b'C' => {
                let c1 = origin + point(&mut lex)?;
                let c2 = origin + point(&mut lex)?;
                let p = origin + point(&mut lex)?;
                b.push(CubicSegment::new(b.current, c1, c2, p))?;
                cubic_ctrl = Some(c2);
            }
            b'S' => {
                let c1 = match b.last_cubic_ctrl {
                    Some(c) => b.current * 2.0 - c,
                    None => b.current,
                };
                let c2 = origin + point(&mut lex)?;
                let p = origin + point(&mut lex)?;
                b.push(CubicSegment::new(b.current, c1, c2, p))?;
                cubic_ctrl = Some(c2);
            }
            b'Q' => {
                let q = origin + point(&mut lex)?;
                let p = origin + point(&mut lex)?;
                b.push(CubicSegment::from_quadratic(b.current, q, p))?;
                quad_ctrl = Some(q);
            }
            b'T' => {
                let q = match b.last_quad_ctrl {
                    Some(c) => b.current * 2.0 - c,
                    None => b.current,
                };
                let p = origin + point(&mut lex)?;
                b.push(CubicSegment::from_quadratic(b.current, q, p))?;
                quad_ctrl = Some(q);
            }
            b'A' => {
                let rx = lex.number()?;
                let ry = lex.number()?;
                let rotation = lex.number()?;
                let large_arc = lex.flag()?;
                let sweep = lex.flag()?;
                let p = origin + point(&mut lex)?;
                let tolerance = b.arc_tolerance;
                for seg in arc_to_cubics(b.current, p, rx, ry, rotation, large_arc, sweep, tolerance) {
                    b.push(seg)?;
                }
                b.current = p;
            }
            b'Z' => b.close()?,
            _ => return Err(SvgError::UnsupportedFeature(format!("path command `{}`", cmd as char))),
        }
        b.last_cubic_ctrl = cubic_ctrl;
        b.last_quad_ctrl = quad_ctrl;
        command = Some(cmd);
    }
    if !b.segments.is_empty() {
        return Err(SvgError::OpenSubpathInFlattenedInput { index: b.subpaths.len() });
    }
    Ok(b.subpaths)
}

fn point(lex: &mut Lexer<'_>) -> Result<Point, SvgError> {
    let x = lex.number()?;
    let y = lex.number()?;
    Ok(Point::new(x, y))
}

/// Convert an SVG endpoint-parameterized elliptical arc to cubics, one per
/// sweep of at most 90° (finer when needed to meet `tolerance`).
#[allow(clippy::too_many_arguments)]
pub fn arc_to_cubics(
    from: Point,
    to: Point,
    rx: f64,
    ry: f64,
    x_axis_rotation_deg: f64,
    large_arc: bool,
    sweep: bool,
    tolerance: f64,
) -> Vec<CubicSegment> {
    if from == to {
        return Vec::new();
    }
    let (mut rx, mut ry) = (rx.abs(), ry.abs());
    if rx == 0.0 || ry == 0.0 {
        return vec![CubicSegment::line(from, to)];
    }
    let phi = x_axis_rotation_deg.to_radians();
    let (sin_phi, cos_phi) = phi.sin_cos();
    let dx = (from.x - to.x) / 2.0;
    let dy = (from.y - to.y) / 2.0;
    let x1p = cos_phi * dx + sin_phi * dy;
    let y1p = -sin_phi * dx + cos_phi * dy;

    let lambda = (x1p * x1p) / (rx * rx) + (y1p * y1p) / (ry * ry);
    if lambda > 1.0 {
        let s = lambda.sqrt();
        rx *= s;
        ry *= s;
    }
    let num = rx * rx * ry * ry - rx * rx * y1p * y1p - ry * ry * x1p * x1p;
    let den = rx * rx * y1p * y1p + ry * ry * x1p * x1p;
    let mut coef = (num / den).max(0.0).sqrt();
    if large_arc == sweep {
        coef = -coef;
    }
    let cxp = coef * rx * y1p / ry;
    let cyp = -coef * ry * x1p / rx;
    let cx = cos_phi * cxp - sin_phi * cyp + (from.x + to.x) / 2.0;
    let cy = sin_phi * cxp + cos_phi * cyp + (from.y + to.y) / 2.0;

    let v1 = Point::new((x1p - cxp) / rx, (y1p - cyp) / ry);
    let v2 = Point::new((-x1p - cxp) / rx, (-y1p - cyp) / ry);
    let theta1 = v1.y.atan2(v1.x);
    let mut delta = v1.cross(v2).atan2(v1.dot(v2));
    if !sweep && delta > 0.0 {
        delta -= 2.0 * PI;
    } else if sweep && delta < 0.0 {
        delta += 2.0 * PI;
    }

    // Error of the standard 90° cubic arc is about 2.7e-4 of the radius and
    // scales with the sixth power of the sweep.
    let r_max = rx.max(ry);
    let mut pieces = (delta.abs() / (PI / 2.0)).ceil().max(1.0) as usize;
    while r_max * 2.7e-4 * ((delta.abs() / pieces as f64) / (PI / 2.0)).powi(6) > tolerance && pieces < 1024 {
        pieces *= 2;
    }
    let step = delta / pieces as f64;
    let k = 4.0 / 3.0 * (step / 4.0).tan();

    let map = |ux: f64, uy: f64| -> Point {
        let x = rx * ux;
        let y = ry * uy;
        Point::new(cos_phi * x - sin_phi * y + cx, sin_phi * x + cos_phi * y + cy)
    };
    let mut out = Vec::with_capacity(pieces);
    let mut prev = from;
    for i in 0..pieces {
        let a0 = theta1 + step * i as f64;
        let a1 = a0 + step;
        let (s0, c0) = a0.sin_cos();
        let (s1, c1) = a1.sin_cos();
        let p3 = if i + 1 == pieces { to } else { map(c1, s1) };
        let ctrl1 = map(c0 - k * s0, s0 + k * c0);
        let ctrl2 = map(c1 + k * s1, s1 - k * c1);
        out.push(CubicSegment::new(prev, ctrl1, ctrl2, p3));
        prev = p3;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_numbers_and_flags() {
        let subs = parse_path_data("M0,0L10-5.5.5-5.5z", 1e-3).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].segments[0].p3, Point::new(10.0, -5.5));
        assert_eq!(subs[0].segments[1].p3, Point::new(0.5, -5.5));

        let subs = parse_path_data("M0 0a5 5 0 1010 0z", 1e-3).unwrap();
        let last = subs[0].segments.iter().rev().nth(1).unwrap();
        assert!(last.p3.distance(Point::new(10.0, 0.0)) < 1e-12);
    }

    #[test]
    fn implicit_lineto_after_moveto() {
        let subs = parse_path_data("m1 1 2 0 0 2z", 1e-3).unwrap();
        let pts: Vec<_> = subs[0].segments.iter().map(|s| s.p3).collect();
        assert_eq!(pts, vec![Point::new(3.0, 1.0), Point::new(3.0, 3.0), Point::new(1.0, 1.0)]);
    }

    #[test]
    fn exponent_numbers() {
        let subs = parse_path_data("M1e1 0 L2E+1 0 L0 1e-1Z", 1e-3).unwrap();
        assert_eq!(subs[0].segments[0].p0, Point::new(10.0, 0.0));
        assert_eq!(subs[0].segments[0].p3, Point::new(20.0, 0.0));
    }

    #[test]
    fn smooth_reflection() {
        let subs = parse_path_data("M0 0 C0 5 5 10 10 10 S20 5 20 0 Z", 1e-3).unwrap();
        let s = subs[0].segments[1];
        assert_eq!(s.c1, Point::new(15.0, 10.0));
        let subs = parse_path_data("M0 0 Q5 5 10 0 T20 0 Z", 1e-3).unwrap();
        let t = subs[0].segments[1];
        let expected = CubicSegment::from_quadratic(Point::new(10.0, 0.0), Point::new(15.0, -5.0), Point::new(20.0, 0.0));
        assert_eq!(t, expected);
    }

    #[test]
    fn open_subpath_rejected() {
        assert!(matches!(
            parse_path_data("M0 0 L10 0 L10 10", 1e-3),
            Err(SvgError::OpenSubpathInFlattenedInput { index: 0 })
        ));
        assert!(matches!(
            parse_path_data("M0 0 L10 0 L10 10 Z M20 20 L30 20", 1e-3),
            Err(SvgError::OpenSubpathInFlattenedInput { index: 1 })
        ));
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(parse_path_data("L0 0", 1e-3).is_err());
        assert!(parse_path_data("M0 0 L . 3 Z", 1e-3).is_err());
        assert!(parse_path_data("M0 0 A1 1 0 2 0 3 3 Z", 1e-3).is_err());
    }

    fn ellipse_deviation(segs: &[CubicSegment], center: Point, rx: f64, ry: f64, phi: f64) -> f64 {
        // Distance to the ellipse measured via the implicit equation in the
        // ellipse frame, scaled by the minor radius (a first-order distance).
        let (s, c) = phi.sin_cos();
        let mut worst: f64 = 0.0;
        for seg in segs {
            for i in 0..=50 {
                let p = seg.point_at(i as f64 / 50.0) - center;
                let x = c * p.x + s * p.y;
                let y = -s * p.x + c * p.y;
                let r = ((x / rx).powi(2) + (y / ry).powi(2)).sqrt();
                worst = worst.max((r - 1.0).abs() * rx.min(ry));
            }
        }
        worst
    }

    #[test]
    fn arc_deviation_bound() {
        // Half circle of radius 50 and a rotated ellipse arc.
        let segs = arc_to_cubics(Point::new(0.0, 50.0), Point::new(100.0, 50.0), 50.0, 50.0, 0.0, false, true, 1e-3);
        assert!(ellipse_deviation(&segs, Point::new(50.0, 50.0), 50.0, 50.0, 0.0) < 1e-3);
        assert!(segs.iter().all(|s| s.is_finite()));

        let segs = arc_to_cubics(Point::new(10.0, 0.0), Point::new(-10.0, 0.0), 10.0, 10.0, 0.0, true, false, 1e-3);
        assert!(ellipse_deviation(&segs, Point::new(0.0, 0.0), 10.0, 10.0, 0.0) < 1e-3);
    }

    #[test]
    fn arc_radius_scaled_up_when_too_small() {
        let segs = arc_to_cubics(Point::new(0.0, 0.0), Point::new(10.0, 0.0), 1.0, 1.0, 0.0, false, true, 1e-3);
        assert!(ellipse_deviation(&segs, Point::new(5.0, 0.0), 5.0, 5.0, 0.0) < 1e-3);
        assert_eq!(segs.last().unwrap().p3, Point::new(10.0, 0.0));
    }
}
