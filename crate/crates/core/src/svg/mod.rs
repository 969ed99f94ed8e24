//! Compound cubic-Bézier paths: parsing flattened SVG icons and writing
//! layered SVG output.

mod path_data;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{CubicSegment, Point};

pub use path_data::{arc_to_cubics, parse_path_data};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvgError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("malformed path data at byte {offset}: {reason}")]
    MalformedPathData { offset: usize, reason: String },
    #[error("unsupported SVG feature: {0}")]
    UnsupportedFeature(String),
    #[error("subpath {index} is not closed with Z")]
    OpenSubpathInFlattenedInput { index: usize },
    #[error("document contains no filled path")]
    NoPath,
    #[error("invalid viewBox: {0}")]
    InvalidViewBox(String),
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillRule {
    #[default]
    NonZero,
    EvenOdd,
}

impl FillRule {
    pub fn contains(self, winding: i32) -> bool {
        match self {
            FillRule::NonZero => winding != 0,
            FillRule::EvenOdd => winding % 2 != 0,
        }
    }

    fn attr(self) -> &'static str {
        match self {
            FillRule::NonZero => "nonzero",
            FillRule::EvenOdd => "evenodd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewBox {
    pub min_x: f64,
    pub min_y: f64,
    pub width: f64,
    pub height: f64,
}

impl ViewBox {
    pub fn new(min_x: f64, min_y: f64, width: f64, height: f64) -> Result<Self, SvgError> {
        let vb = ViewBox { min_x, min_y, width, height };
        if !(width > 0.0 && height > 0.0) || ![min_x, min_y, width, height].iter().all(|v| v.is_finite()) {
            return Err(SvgError::InvalidViewBox(format!("{min_x} {min_y} {width} {height}")));
        }
        Ok(vb)
    }

    /// Pixel-space viewbox of a `width × height` canvas.
    pub fn canvas(width: usize, height: usize) -> Self {
        ViewBox { min_x: 0.0, min_y: 0.0, width: width as f64, height: height as f64 }
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }
}

/// An ordered chain of cubic segments; closed subpaths end where they begin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subpath {
    pub segments: Vec<CubicSegment>,
    pub closed: bool,
}

impl Subpath {
    /// Validating constructor: endpoints must chain exactly.
    pub fn new(segments: Vec<CubicSegment>, closed: bool) -> Result<Self, SvgError> {
        let sp = Subpath { segments, closed };
        sp.validate()?;
        Ok(sp)
    }

    pub fn validate(&self) -> Result<(), SvgError> {
        let first = self
            .segments
            .first()
            .ok_or_else(|| SvgError::InvalidLayer("subpath has no segments".into()))?;
        if let Some(i) = self.segments.windows(2).position(|w| w[0].p3 != w[1].p0) {
            return Err(SvgError::InvalidLayer(format!("segments {i} and {} do not chain", i + 1)));
        }
        if self.segments.iter().any(|s| !s.is_finite()) {
            return Err(SvgError::InvalidLayer("non-finite coordinate".into()));
        }
        if self.closed && self.segments.last().map(|s| s.p3) != Some(first.p0) {
            return Err(SvgError::InvalidLayer("closed subpath does not end at its start".into()));
        }
        Ok(())
    }

    pub fn start(&self) -> Point {
        self.segments[0].p0
    }

    pub fn end(&self) -> Point {
        self.segments[self.segments.len() - 1].p3
    }

    /// Shoelace area of the curve flattened into a polyline; positive when the
    /// vertex sequence turns counterclockwise in (x right, y up) axes.
    pub fn signed_area(&self) -> f64 {
        let mut area = 0.0;
        for seg in &self.segments {
            let n = seg.flatten_count(0.05).max(4);
            let mut prev = seg.p0;
            for i in 1..=n {
                let p = seg.point_at(i as f64 / n as f64);
                area += prev.cross(p);
                prev = p;
            }
        }
        area / 2.0
    }

    pub fn reversed(&self) -> Subpath {
        Subpath {
            segments: self.segments.iter().rev().map(CubicSegment::reversed).collect(),
            closed: self.closed,
        }
    }

    pub fn map(&self, f: impl Fn(Point) -> Point + Copy) -> Subpath {
        Subpath { segments: self.segments.iter().map(|s| s.map(f)).collect(), closed: self.closed }
    }
}

/// A parsed vector icon: closed cubic subpaths under one fill rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPath {
    pub subpaths: Vec<Subpath>,
    pub fill_rule: FillRule,
    pub viewbox: ViewBox,
}

impl CompoundPath {
    pub fn new(subpaths: Vec<Subpath>, fill_rule: FillRule, viewbox: ViewBox) -> Result<Self, SvgError> {
        if subpaths.is_empty() {
            return Err(SvgError::NoPath);
        }
        for sp in &subpaths {
            sp.validate()?;
        }
        ViewBox::new(viewbox.min_x, viewbox.min_y, viewbox.width, viewbox.height)?;
        Ok(CompoundPath { subpaths, fill_rule, viewbox })
    }

    /// Parse a path-data string directly (no XML wrapper).
    pub fn from_path_data(d: &str, fill_rule: FillRule, viewbox: ViewBox) -> Result<Self, SvgError> {
        let subpaths = parse_path_data(d, 1e-3 * viewbox.diagonal())?;
        CompoundPath::new(subpaths, fill_rule, viewbox)
    }

    /// Absolute `M`/`C`/`Z` path data with shortest round-trip float formatting.
    pub fn to_path_data(&self) -> String {
        let mut d = String::new();
        for sp in &self.subpaths {
            let s0 = sp.start();
            if !d.is_empty() {
                d.push(' ');
            }
            let _ = write!(d, "M{} {}", s0.x, s0.y);
            for seg in &sp.segments {
                let _ = write!(
                    d,
                    " C{} {} {} {} {} {}",
                    seg.c1.x, seg.c1.y, seg.c2.x, seg.c2.y, seg.p3.x, seg.p3.y
                );
            }
            if sp.closed {
                d.push_str(" Z");
            }
        }
        d
    }

    /// Re-express the path in another viewbox, mapping this viewbox onto it.
    pub fn with_viewbox(&self, target: ViewBox) -> CompoundPath {
        let src = self.viewbox;
        let sx = target.width / src.width;
        let sy = target.height / src.height;
        let f = move |p: Point| {
            Point::new((p.x - src.min_x) * sx + target.min_x, (p.y - src.min_y) * sy + target.min_y)
        };
        CompoundPath {
            subpaths: self.subpaths.iter().map(|sp| sp.map(f)).collect(),
            fill_rule: self.fill_rule,
            viewbox: target,
        }
    }

    /// Apply `p ↦ p·scale + offset` to every point, keeping the viewbox.
    pub fn transformed(&self, scale: f64, offset: Point) -> CompoundPath {
        let f = move |p: Point| p * scale + offset;
        CompoundPath {
            subpaths: self.subpaths.iter().map(|sp| sp.map(f)).collect(),
            fill_rule: self.fill_rule,
            viewbox: self.viewbox,
        }
    }

    /// Bounding box of all control points: `(min, max)`.
    pub fn control_bounds(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for seg in self.subpaths.iter().flat_map(|s| &s.segments) {
            for p in seg.points() {
                lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub path: CompoundPath,
    pub fill: Rgb,
    pub z_index: i32,
}

/// Ordered stack of editable layers, bottom first.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredIcon {
    pub layers: Vec<Layer>,
    pub canvas: ViewBox,
    /// Objective value of the ordering that produced this stack, if any.
    pub objective: Option<f64>,
}

impl LayeredIcon {
    pub fn validate(&self) -> Result<(), SvgError> {
        for w in self.layers.windows(2) {
            if w[0].z_index >= w[1].z_index {
                return Err(SvgError::InvalidLayer("z_index must increase bottom to top".into()));
            }
        }
        for (i, a) in self.layers.iter().enumerate() {
            if self.layers[..i].iter().any(|b| b.fill == a.fill) {
                return Err(SvgError::InvalidLayer(format!("duplicate fill color {}", a.fill.hex())));
            }
            if a.path.subpaths.is_empty() {
                return Err(SvgError::InvalidLayer(format!("layer {} is empty", a.z_index)));
            }
        }
        Ok(())
    }
}

/// Options for [`write_layered_svg_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SvgWriteOptions {
    /// Precede each layer with a white path covering its outermost contours,
    /// so viewers occlude lower layers the way the stacking model does.
    pub backing: bool,
}

pub fn write_layered_svg(icon: &LayeredIcon) -> Vec<u8> {
    write_layered_svg_with(icon, SvgWriteOptions::default())
}

pub fn write_layered_svg_with(icon: &LayeredIcon, options: SvgWriteOptions) -> Vec<u8> {
    let vb = icon.canvas;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        vb.min_x, vb.min_y, vb.width, vb.height
    );
    match icon.objective {
        Some(obj) => {
            let _ = writeln!(out, "<!-- iconstack layers={} objective={} -->", icon.layers.len(), obj);
        }
        None => {
            let _ = writeln!(out, "<!-- iconstack layers={} -->", icon.layers.len());
        }
    }
    for layer in &icon.layers {
        if options.backing {
            if let Some(backing) = outer_contours(&layer.path) {
                let _ = writeln!(
                    out,
                    r##"<path id="layer-{}-backing" fill="#ffffff" fill-rule="nonzero" d="{}"/>"##,
                    layer.z_index,
                    backing.to_path_data()
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<path id="layer-{}" fill="{}" fill-rule="{}" d="{}"/>"#,
            layer.z_index,
            layer.fill.hex(),
            layer.path.fill_rule.attr(),
            layer.path.to_path_data()
        );
    }
    out.push_str("</svg>\n");
    out.into_bytes()
}

/// Subpaths not nested inside another subpath (by point-in-polygon of their
/// start point), oriented consistently so nonzero fill covers them solidly.
fn outer_contours(path: &CompoundPath) -> Option<CompoundPath> {
    let polys: Vec<Vec<Point>> = path.subpaths.iter().map(flatten_subpath).collect();
    let mut kept = Vec::new();
    for (i, sp) in path.subpaths.iter().enumerate() {
        let probe = sp.start();
        let nested = polys.iter().enumerate().any(|(j, poly)| j != i && point_in_polygon(probe, poly));
        if !nested {
            let oriented = if sp.signed_area() < 0.0 { sp.reversed() } else { sp.clone() };
            kept.push(oriented);
        }
    }
    CompoundPath::new(kept, FillRule::NonZero, path.viewbox).ok()
}

fn flatten_subpath(sp: &Subpath) -> Vec<Point> {
    let mut pts = vec![sp.start()];
    for seg in &sp.segments {
        let n = seg.flatten_count(0.1);
        pts.extend((1..=n).map(|i| seg.point_at(i as f64 / n as f64)));
    }
    pts
}

fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let mut inside = false;
    for w in poly.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x > p.x {
                inside = !inside;
            }
        }
    }
    inside
}

fn parse_viewbox(s: &str) -> Result<ViewBox, SvgError> {
    let nums: Vec<f64> = s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| SvgError::InvalidViewBox(s.to_string())))
        .collect::<Result<_, _>>()?;
    if nums.len() != 4 {
        return Err(SvgError::InvalidViewBox(s.to_string()));
    }
    ViewBox::new(nums[0], nums[1], nums[2], nums[3])
}

fn parse_length(s: &str) -> Option<f64> {
    s.trim().trim_end_matches("px").parse().ok()
}

const UNSUPPORTED_ELEMENTS: &[&str] = &[
    "linearGradient",
    "radialGradient",
    "clipPath",
    "mask",
    "pattern",
    "filter",
    "text",
    "image",
    "use",
    "rect",
    "circle",
    "ellipse",
    "polygon",
    "polyline",
    "line",
];

/// Look up a presentation property from the attribute or an inline `style`.
fn property<'a>(node: roxmltree::Node<'a, 'a>, name: &str) -> Option<String> {
    if let Some(style) = node.attribute("style") {
        for decl in style.split(';') {
            if let Some((k, v)) = decl.split_once(':') {
                if k.trim() == name {
                    return Some(v.trim().to_string());
                }
            }
        }
    }
    node.attribute(name).map(|v| v.trim().to_string())
}

/// Property with inheritance through ancestors.
fn inherited(node: roxmltree::Node<'_, '_>, name: &str) -> Option<String> {
    node.ancestors().filter(|n| n.is_element()).find_map(|n| property(n, name))
}

fn is_white(fill: &str) -> bool {
    let f = fill.to_ascii_lowercase().replace(' ', "");
    matches!(f.as_str(), "white" | "#fff" | "#ffffff" | "rgb(255,255,255)")
}

fn check_unsupported(doc: &roxmltree::Document<'_>) -> Result<(), SvgError> {
    for node in doc.descendants().filter(|n| n.is_element()) {
        let name = node.tag_name().name();
        if UNSUPPORTED_ELEMENTS.contains(&name) {
            return Err(SvgError::UnsupportedFeature(name.to_string()));
        }
        if name != "svg" && node.attribute("transform").is_some() {
            return Err(SvgError::UnsupportedFeature("transform".into()));
        }
        for attr in ["clip-path", "mask", "filter"] {
            if property(node, attr).is_some_and(|v| v != "none") {
                return Err(SvgError::UnsupportedFeature(attr.into()));
            }
        }
        if property(node, "fill").is_some_and(|v| v.starts_with("url(")) {
            return Err(SvgError::UnsupportedFeature("gradient or pattern fill".into()));
        }
    }
    Ok(())
}

fn document_viewbox(root: roxmltree::Node<'_, '_>) -> Result<Option<ViewBox>, SvgError> {
    if let Some(vb) = root.attribute("viewBox") {
        return parse_viewbox(vb).map(Some);
    }
    match (root.attribute("width").and_then(parse_length), root.attribute("height").and_then(parse_length)) {
        (Some(w), Some(h)) => ViewBox::new(0.0, 0.0, w, h).map(Some),
        _ => Ok(None),
    }
}

fn parse_document(document: &[u8]) -> Result<String, SvgError> {
    String::from_utf8(document.to_vec()).map_err(|e| SvgError::MalformedXml(e.to_string()))
}

/// Parse a flattened icon. Every foreground (non-white, non-`none`) path
/// contributes its subpaths; the first such path decides the fill rule.
pub fn parse_svg(document: &[u8]) -> Result<CompoundPath, SvgError> {
    let text = parse_document(document)?;
    let doc = roxmltree::Document::parse(&text).map_err(|e| SvgError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "svg" {
        return Err(SvgError::MalformedXml(format!("root element is <{}>", root.tag_name().name())));
    }
    check_unsupported(&doc)?;
    let viewbox = document_viewbox(root)?;
    let tolerance = 1e-3 * viewbox.map_or(1.0, |vb| vb.diagonal());

    let mut subpaths = Vec::new();
    let mut fill_rule = None;
    for node in doc.descendants().filter(|n| n.has_tag_name("path")) {
        let fill = inherited(node, "fill");
        if fill.as_deref().is_some_and(|f| f == "none" || is_white(f)) {
            continue;
        }
        let rule = match inherited(node, "fill-rule").as_deref() {
            Some("evenodd") => FillRule::EvenOdd,
            _ => FillRule::NonZero,
        };
        match fill_rule {
            None => fill_rule = Some(rule),
            Some(r) if r != rule => log::warn!("paths disagree on fill-rule; using {:?}", r),
            _ => {}
        }
        let d = node.attribute("d").unwrap_or("");
        subpaths.extend(parse_path_data(d, tolerance)?);
    }
    if subpaths.is_empty() {
        return Err(SvgError::NoPath);
    }
    let viewbox = match viewbox {
        Some(vb) => vb,
        None => {
            let tmp = CompoundPath { subpaths: subpaths.clone(), fill_rule: FillRule::NonZero, viewbox: ViewBox::canvas(1, 1) };
            let (lo, hi) = tmp.control_bounds();
            ViewBox::new(lo.x, lo.y, hi.x - lo.x, hi.y - lo.y)?
        }
    };
    CompoundPath::new(subpaths, fill_rule.unwrap_or_default(), viewbox)
}

fn parse_hex_color(s: &str) -> Option<Rgb> {
    let h = s.strip_prefix('#')?;
    let v = |i: usize| u8::from_str_radix(h.get(i..i + 2)?, 16).ok();
    match h.len() {
        6 => Some(Rgb(v(0)?, v(2)?, v(4)?)),
        3 => {
            let c = |i: usize| u8::from_str_radix(h.get(i..i + 1)?, 16).ok().map(|x| x * 17);
            Some(Rgb(c(0)?, c(1)?, c(2)?))
        }
        _ => None,
    }
}

/// Parse a document produced by [`write_layered_svg`] back into layers.
pub fn parse_layered_svg(document: &[u8]) -> Result<LayeredIcon, SvgError> {
    let text = parse_document(document)?;
    let doc = roxmltree::Document::parse(&text).map_err(|e| SvgError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    let canvas = document_viewbox(root)?.ok_or_else(|| SvgError::InvalidViewBox("missing".into()))?;
    let objective = doc
        .descendants()
        .filter(|n| n.is_comment())
        .filter_map(|n| n.text())
        .find_map(|t| t.split_whitespace().find_map(|w| w.strip_prefix("objective=")?.parse::<f64>().ok()));

    let mut layers = Vec::new();
    for node in doc.descendants().filter(|n| n.has_tag_name("path")) {
        let Some(id) = node.attribute("id") else { continue };
        let Some(z) = id.strip_prefix("layer-").and_then(|z| z.parse::<i32>().ok()) else {
            continue;
        };
        let fill = node
            .attribute("fill")
            .and_then(parse_hex_color)
            .ok_or_else(|| SvgError::InvalidLayer(format!("{id} has no hex fill")))?;
        let fill_rule = match node.attribute("fill-rule") {
            Some("evenodd") => FillRule::EvenOdd,
            _ => FillRule::NonZero,
        };
        let subpaths = parse_path_data(node.attribute("d").unwrap_or(""), 1e-3 * canvas.diagonal())?;
        let path = CompoundPath::new(subpaths, fill_rule, canvas)?;
        layers.push(Layer { path, fill, z_index: z });
    }
    let icon = LayeredIcon { layers, canvas, objective };
    icon.validate()?;
    Ok(icon)
}
