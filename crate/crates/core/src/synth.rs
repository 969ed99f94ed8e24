//! Synthetic occlusion scenes with exact visible masks, amodal masks and
//! layer order.
//!
//! Each part is a library icon placed on the canvas. Stacking follows the
//! line-drawing model used by the ordering stage: bottom to top, each part
//! blanks its fill region and then draws its amodal mask, so
//! `V_k = A_k \ ∪_{j above k} F_j`.
//!
//! # Corpus layout (version 1)
//!
//! One directory per sample:
//!
//! - `composite.png`: silhouette, 1-bit grayscale
//! - `visible_{k}.png`, `amodal_{k}.png`: per-part masks, `k` from 0
//! - `segmentation.png`: indexed label map, label `k + 1` on `visible_k`
//! - `flattened.svg`: traced silhouette as a single black compound path
//! - `manifest.json`: mask-stack manifest for `decompose`, with the amodal
//!   masks as external completions
//! - `truth.json`: `version`, `canvas`, `order` (bottom first),
//!   `occlusion_fraction`, `seed` and per-part placements

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geom::Point;
use crate::ordering::render_stack;
use crate::raster::png_io::{encode_label_map, encode_mask};
use crate::raster::{rasterize, BinaryMask, LabelMap, RasterError, DEFAULT_RESOLUTION};
use crate::svg::{write_layered_svg, CompoundPath, FillRule, Layer, LayeredIcon, Rgb, SvgError, ViewBox};
use crate::trace::{trace, TraceConfig, TraceError};

pub const TRUTH_VERSION: u32 = 1;
/// Attempts allowed per requested sample before sampling gives up.
pub const ATTEMPTS_PER_SAMPLE: usize = 1000;
pub const DEFAULT_ACCEPT: (f64, f64) = (0.10, 0.60);
pub const DEFAULT_OCCLUDER_SCALE: (f64, f64) = (0.3, 0.8);
/// Side of the square viewbox library icons are authored in.
pub const ICON_BOX: f64 = 100.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("part {0} has an empty visible mask")]
    DegeneratePlacement(usize),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("accepted {accepted} of {requested} samples within {attempts} attempts")]
    ExhaustedSampling { accepted: usize, requested: usize, attempts: usize },
    #[error(transparent)]
    Svg(#[from] SvgError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for SynthError {
    fn from(e: std::io::Error) -> Self {
        SynthError::Io(e.to_string())
    }
}

/// Icons used by the sampler, authored in a `0 0 100 100` viewbox with
/// nonzero fill. Outline icons have holes, which is what produces extra
/// regions once they occlude something.
const LIBRARY: &[(&str, &str)] = &[
    ("disk", "M50 10 A40 40 0 1 1 50 90 A40 40 0 1 1 50 10 Z"),
    ("square", "M15 15 L85 15 L85 85 L15 85 Z"),
    (
        "ring",
        "M50 8 A42 42 0 1 1 50 92 A42 42 0 1 1 50 8 Z M50 24 A26 26 0 1 0 50 76 A26 26 0 1 0 50 24 Z",
    ),
    ("frame", "M10 10 L90 10 L90 90 L10 90 Z M26 26 L26 74 L74 74 L74 26 Z"),
    ("triangle", "M50 8 L92 88 L8 88 Z"),
    ("star", "M50 6 L61 38 L95 38 L68 58 L78 92 L50 72 L22 92 L32 58 L5 38 L39 38 Z"),
    ("plus", "M38 8 L62 8 L62 38 L92 38 L92 62 L62 62 L62 92 L38 92 L38 62 L8 62 L8 38 L38 38 Z"),
    (
        "rounded",
        "M28 12 L72 12 A16 16 0 0 1 88 28 L88 72 A16 16 0 0 1 72 88 L28 88 A16 16 0 0 1 12 72 L12 28 A16 16 0 0 1 28 12 Z",
    ),
    ("heart", "M50 88 C20 66 6 50 6 32 C6 16 18 8 30 8 C40 8 47 14 50 22 C53 14 60 8 70 8 C82 8 94 16 94 32 C94 50 80 66 50 88 Z"),
    (
        "porthole",
        "M50 6 A44 44 0 1 1 50 94 A44 44 0 1 1 50 6 Z M32 32 L32 68 L68 68 L68 32 Z",
    ),
    (
        "rounded-frame",
        "M30 8 L70 8 A22 22 0 0 1 92 30 L92 70 A22 22 0 0 1 70 92 L30 92 A22 22 0 0 1 8 70 L8 30 A22 22 0 0 1 30 8 Z M32 24 A8 8 0 0 0 24 32 L24 68 A8 8 0 0 0 32 76 L68 76 A8 8 0 0 0 76 68 L76 32 A8 8 0 0 0 68 24 Z",
    ),
    ("diamond", "M50 4 L94 50 L50 96 L6 50 Z"),
];

pub fn builtin_icon_names() -> Vec<&'static str> {
    LIBRARY.iter().map(|(n, _)| *n).collect()
}

pub fn builtin_icon(name: &str) -> Option<CompoundPath> {
    let (_, d) = LIBRARY.iter().find(|(n, _)| *n == name)?;
    Some(CompoundPath::from_path_data(d, FillRule::NonZero, ViewBox::new(0.0, 0.0, ICON_BOX, ICON_BOX).ok()?).expect("library icon parses"))
}

pub fn builtin_library() -> Vec<CompoundPath> {
    builtin_icon_names().into_iter().map(|n| builtin_icon(n).expect("listed icon")).collect()
}

/// One icon on the canvas: its viewbox mapped onto the canvas, then
/// `p ↦ p·scale + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedIcon {
    pub icon: CompoundPath,
    pub scale: f64,
    pub offset: Point,
}

impl PlacedIcon {
    pub fn on_canvas(&self, canvas: usize) -> CompoundPath {
        self.icon.with_viewbox(ViewBox::canvas(canvas, canvas)).transformed(self.scale, self.offset)
    }
}

/// Two-icon composite: the object fills the canvas and the occluder sits
/// above it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSpec {
    pub object_icon: CompoundPath,
    pub occluder_icon: CompoundPath,
    pub occluder_scale: f64,
    pub occluder_offset: Point,
    pub seed: u64,
    pub canvas: usize,
}

/// A stack of parts. `parts[k]` is part `k`; `order` lists part indices
/// bottom first.
#[derive(Debug, Clone, PartialEq)]
pub struct StackSpec {
    pub canvas: usize,
    pub parts: Vec<PlacedIcon>,
    pub order: Vec<usize>,
    pub seed: u64,
}

impl From<&CompositeSpec> for StackSpec {
    fn from(spec: &CompositeSpec) -> Self {
        StackSpec {
            canvas: spec.canvas,
            parts: vec![
                PlacedIcon { icon: spec.object_icon.clone(), scale: 1.0, offset: Point::new(0.0, 0.0) },
                PlacedIcon { icon: spec.occluder_icon.clone(), scale: spec.occluder_scale, offset: spec.occluder_offset },
            ],
            order: vec![0, 1],
            seed: spec.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub composite_silhouette: BinaryMask,
    pub visible_masks: Vec<BinaryMask>,
    pub amodal_masks: Vec<BinaryMask>,
    /// Part indices, bottom first.
    pub order: Vec<usize>,
    /// `1 − |V_k| / |A_k|` per part.
    pub occlusion_fraction: Vec<f64>,
    pub spec: StackSpec,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.amodal_masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amodal_masks.is_empty()
    }

    pub fn max_occlusion(&self) -> f64 {
        self.occlusion_fraction.iter().copied().fold(0.0, f64::max)
    }

    /// Fill regions: amodal masks with holes filled.
    pub fn fill_masks(&self) -> Vec<BinaryMask> {
        self.amodal_masks.iter().map(BinaryMask::fill_holes).collect()
    }

    /// Label map with label `k + 1` on `visible_k`.
    pub fn label_map(&self) -> LabelMap {
        LabelMap::from_masks(&self.visible_masks).expect("visible masks are disjoint and share dimensions")
    }

    /// Flattened icon: the traced silhouette as one compound path.
    pub fn flattened(&self) -> Result<CompoundPath, TraceError> {
        trace(&self.composite_silhouette, &TraceConfig::default())
    }
}

pub fn generate(spec: &CompositeSpec) -> Result<GroundTruth, SynthError> {
    generate_stack(&StackSpec::from(spec))
}

/// Rasterize every part and stack them in `spec.order`.
pub fn generate_stack(spec: &StackSpec) -> Result<GroundTruth, SynthError> {
    let k = spec.parts.len();
    if k == 0 || spec.canvas == 0 {
        return Err(SynthError::InvalidSpec("empty stack or canvas".into()));
    }
    let mut seen = vec![false; k];
    if spec.order.len() != k || spec.order.iter().any(|&i| i >= k || std::mem::replace(&mut seen[i], true)) {
        return Err(SynthError::InvalidSpec(format!("order {:?} is not a permutation of {k} parts", spec.order)));
    }
    let side = spec.canvas as f64;
    let mut amodal = Vec::with_capacity(k);
    for (i, part) in spec.parts.iter().enumerate() {
        if !(part.scale > 0.0 && part.scale.is_finite()) {
            return Err(SynthError::InvalidSpec(format!("part {i} scale {}", part.scale)));
        }
        let path = part.on_canvas(spec.canvas);
        let (lo, hi) = path.control_bounds();
        let eps = 1e-9 * side;
        if lo.x < -eps || lo.y < -eps || hi.x > side + eps || hi.y > side + eps {
            return Err(SynthError::InvalidSpec(format!("part {i} leaves the canvas")));
        }
        amodal.push(rasterize(&path, spec.canvas, spec.canvas));
    }
    let fill: Vec<BinaryMask> = amodal.iter().map(BinaryMask::fill_holes).collect();
    let mut visible = Vec::with_capacity(k);
    let mut fractions = Vec::with_capacity(k);
    for i in 0..k {
        let pos = spec.order.iter().position(|&p| p == i).expect("permutation");
        let mut v = amodal[i].clone();
        for &j in &spec.order[pos + 1..] {
            v = v.and_not(&fill[j])?;
        }
        if v.is_empty() {
            return Err(SynthError::DegeneratePlacement(i));
        }
        fractions.push(1.0 - v.count() as f64 / amodal[i].count() as f64);
        visible.push(v);
    }
    let silhouette = render_stack(&amodal, &fill, &spec.order)?;
    Ok(GroundTruth {
        composite_silhouette: silhouette,
        visible_masks: visible,
        amodal_masks: amodal,
        order: spec.order.clone(),
        occlusion_fraction: fractions,
        spec: spec.clone(),
    })
}

/// Rejection-sampling parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub canvas: usize,
    /// Inclusive range of part counts.
    pub parts: (usize, usize),
    /// Scale of the bottom part.
    pub base_scale: (f64, f64),
    /// Scale of every part above the bottom one.
    pub occluder_scale: (f64, f64),
    /// Accepted range of the largest per-part occlusion fraction.
    pub accept: (f64, f64),
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            canvas: DEFAULT_RESOLUTION,
            parts: (2, 2),
            base_scale: (1.0, 1.0),
            occluder_scale: DEFAULT_OCCLUDER_SCALE,
            accept: DEFAULT_ACCEPT,
        }
    }
}

/// Two-part corpus on the default canvas with the given acceptance range.
pub fn sample_corpus(library: &[CompoundPath], n: usize, seed: u64, accept: (f64, f64)) -> Result<Vec<GroundTruth>, SynthError> {
    sample_corpus_with(library, n, seed, &SamplerConfig { accept, ..SamplerConfig::default() })
}

/// Sample `i` draws from its own ChaCha stream `(seed, i)`, so the corpus
/// is identical however the samples are scheduled.
pub fn sample_corpus_with(library: &[CompoundPath], n: usize, seed: u64, config: &SamplerConfig) -> Result<Vec<GroundTruth>, SynthError> {
    if library.len() < 2 {
        return Err(SynthError::InvalidSpec("library needs at least two icons".into()));
    }
    if n == 0 || config.parts.0 < 1 || config.parts.0 > config.parts.1 {
        return Err(SynthError::InvalidSpec("need n ≥ 1 and a valid part range".into()));
    }
    let results: Vec<Option<GroundTruth>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            (0..ATTEMPTS_PER_SAMPLE).find_map(|_| {
                let spec = draw_spec(library, config, &mut rng, seed);
                let gt = generate_stack(&spec).ok()?;
                let m = gt.max_occlusion();
                (config.accept.0..=config.accept.1).contains(&m).then_some(gt)
            })
        })
        .collect();
    let accepted = results.iter().filter(|r| r.is_some()).count();
    if accepted < n {
        return Err(SynthError::ExhaustedSampling { accepted, requested: n, attempts: n * ATTEMPTS_PER_SAMPLE });
    }
    Ok(results.into_iter().flatten().collect())
}

fn draw_spec(library: &[CompoundPath], config: &SamplerConfig, rng: &mut ChaCha8Rng, seed: u64) -> StackSpec {
    let k = rng.random_range(config.parts.0..=config.parts.1);
    let side = config.canvas as f64;
    let mut icons: Vec<usize> = Vec::with_capacity(k);
    while icons.len() < k {
        let pick = rng.random_range(0..library.len());
        // Distinct icons while the library allows it.
        if icons.len() < library.len() && icons.contains(&pick) {
            continue;
        }
        icons.push(pick);
    }
    let mut layers = Vec::with_capacity(k);
    for (pos, &icon) in icons.iter().enumerate() {
        let range = if pos == 0 { config.base_scale } else { config.occluder_scale };
        let scale = if range.0 < range.1 { rng.random_range(range.0..=range.1) } else { range.0 };
        let room = side * (1.0 - scale);
        let offset = if room > 0.0 {
            Point::new(rng.random_range(0.0..=room), rng.random_range(0.0..=room))
        } else {
            Point::new(0.0, 0.0)
        };
        layers.push(PlacedIcon { icon: library[icon].clone(), scale, offset });
    }
    // Stack position `pos` holds part `order[pos]`.
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let mut parts = vec![None; k];
    for (pos, layer) in layers.into_iter().enumerate() {
        parts[order[pos]] = Some(layer);
    }
    StackSpec { canvas: config.canvas, parts: parts.into_iter().map(|p| p.expect("filled")).collect(), order, seed }
}

#[derive(Serialize)]
struct TruthPart {
    path_data: String,
    scale: f64,
    offset: [f64; 2],
}

#[derive(Serialize)]
struct Truth<'a> {
    version: u32,
    canvas: [usize; 2],
    order: &'a [usize],
    occlusion_fraction: &'a [f64],
    seed: u64,
    parts: Vec<TruthPart>,
}

/// JSON ground truth record for one sample.
pub fn truth_json(gt: &GroundTruth) -> String {
    let truth = Truth {
        version: TRUTH_VERSION,
        canvas: [gt.spec.canvas, gt.spec.canvas],
        order: &gt.order,
        occlusion_fraction: &gt.occlusion_fraction,
        seed: gt.spec.seed,
        parts: gt
            .spec
            .parts
            .iter()
            .map(|p| TruthPart { path_data: p.icon.to_path_data(), scale: p.scale, offset: [p.offset.x, p.offset.y] })
            .collect(),
    };
    serde_json::to_string_pretty(&truth).expect("truth serializes")
}

/// Flattened icon as an SVG document with one black path.
pub fn flattened_svg(gt: &GroundTruth) -> Result<Vec<u8>, SynthError> {
    let path = gt.flattened()?;
    let icon = LayeredIcon {
        canvas: path.viewbox,
        layers: vec![Layer { path, fill: Rgb(0, 0, 0), z_index: 0 }],
        objective: None,
    };
    Ok(write_layered_svg(&icon))
}

/// Write one sample directory; see the module docs for the layout.
pub fn write_sample(dir: &Path, gt: &GroundTruth) -> Result<(), SynthError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("composite.png"), encode_mask(&gt.composite_silhouette)?)?;
    for (k, (v, a)) in gt.visible_masks.iter().zip(&gt.amodal_masks).enumerate() {
        fs::write(dir.join(format!("visible_{k}.png")), encode_mask(v)?)?;
        fs::write(dir.join(format!("amodal_{k}.png")), encode_mask(a)?)?;
    }
    fs::write(dir.join("segmentation.png"), encode_label_map(&gt.label_map())?)?;
    fs::write(dir.join("flattened.svg"), flattened_svg(gt)?)?;
    let manifest = crate::pipeline::MaskStackManifest {
        silhouette_path: Some(PathBuf::from("composite.png")),
        segmentation: crate::pipeline::Segmentation::Masks((0..gt.len()).map(|k| PathBuf::from(format!("visible_{k}.png"))).collect()),
        completions: Some((0..gt.len()).map(|k| PathBuf::from(format!("amodal_{k}.png"))).collect()),
        canvas: (gt.spec.canvas, gt.spec.canvas),
    };
    fs::write(dir.join("manifest.json"), manifest.to_json())?;
    fs::write(dir.join("truth.json"), truth_json(gt))?;
    Ok(())
}

/// Write `sample_{i:04}` directories under `dir`; returns their paths.
pub fn write_corpus(dir: &Path, samples: &[GroundTruth]) -> Result<Vec<PathBuf>, SynthError> {
    samples
        .iter()
        .enumerate()
        .map(|(i, gt)| {
            let sub = dir.join(format!("sample_{i:04}"));
            write_sample(&sub, gt)?;
            Ok(sub)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::{build_problem, enumerate_objective, solve, FillSource, Weight};
    use proptest::prelude::*;

    fn spec(object: &str, occluder: &str, scale: f64, offset: (f64, f64)) -> CompositeSpec {
        CompositeSpec {
            object_icon: builtin_icon(object).unwrap(),
            occluder_icon: builtin_icon(occluder).unwrap(),
            occluder_scale: scale,
            occluder_offset: Point::new(offset.0, offset.1),
            seed: 0,
            canvas: 200,
        }
    }

    #[test]
    fn library_icons_rasterize_inside_margin() {
        for (name, icon) in builtin_icon_names().into_iter().zip(builtin_library()) {
            let m = rasterize(&icon.with_viewbox(ViewBox::canvas(100, 100)), 100, 100);
            let (x0, y0, x1, y1) = m.bounds().unwrap();
            assert!(x0 >= 3 && y0 >= 3 && x1 <= 97 && y1 <= 97, "{name}");
            assert!(m.count() > 1500, "{name}");
            // One piece, so cleanup never has to bridge components.
            assert_eq!(m.component_count(crate::raster::Connectivity::Four), 1, "{name}");
        }
        // Outline icons have holes.
        for name in ["ring", "frame", "porthole", "rounded-frame"] {
            let m = rasterize(&builtin_icon(name).unwrap().with_viewbox(ViewBox::canvas(100, 100)), 100, 100);
            assert!(m.fill_holes().count() > m.count(), "{name}");
        }
    }

    #[test]
    fn zero_overlap_is_unoccluded() {
        let mut s = spec("disk", "square", 0.3, (0.0, 0.0));
        s.object_icon = s.object_icon.transformed(0.4, Point::new(60.0, 60.0));
        let gt = generate(&s).unwrap();
        assert_eq!(gt.occlusion_fraction, vec![0.0, 0.0]);
        assert_eq!(gt.visible_masks, gt.amodal_masks);
    }

    #[test]
    fn full_cover_is_degenerate() {
        let mut s = spec("disk", "square", 1.0, (0.0, 0.0));
        s.object_icon = s.object_icon.transformed(0.3, Point::new(35.0, 35.0));
        assert!(matches!(generate(&s), Err(SynthError::DegeneratePlacement(0))));
    }

    #[test]
    fn circle_over_square_matches_analytic_overlap() {
        // Square [30, 170]² (side 140). Disk of radius 20 centred on the
        // square's right edge at (170, 100): half of it, 200π, lies inside.
        let s = CompositeSpec {
            object_icon: builtin_icon("square").unwrap(),
            occluder_icon: builtin_icon("disk").unwrap(),
            occluder_scale: 0.25,
            occluder_offset: Point::new(145.0, 75.0),
            seed: 0,
            canvas: 200,
        };
        let gt = generate(&s).unwrap();
        let square_area = 140.0 * 140.0;
        let expected = square_area - 200.0 * std::f64::consts::PI;
        let got = gt.visible_masks[0].count() as f64;
        // Boundary quantization: at most one pixel per unit of arc length.
        assert!((got - expected).abs() < 20.0 * std::f64::consts::PI, "{got} vs {expected}");
        assert_eq!(gt.amodal_masks[0].count() as f64, square_area);
        assert!((gt.occlusion_fraction[0] - 200.0 * std::f64::consts::PI / square_area).abs() < 0.005);
    }

    #[test]
    fn outline_occluder_creates_extra_region() {
        let gt = generate(&spec("square", "ring", 0.6, (40.0, 40.0))).unwrap();
        let extra = gt.amodal_masks[0].and_not(&gt.composite_silhouette).unwrap();
        assert!(!extra.is_empty());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(matches!(generate(&spec("disk", "square", 0.5, (150.0, 0.0))), Err(SynthError::InvalidSpec(_))));
        assert!(matches!(generate(&spec("disk", "square", 0.0, (0.0, 0.0))), Err(SynthError::InvalidSpec(_))));
    }

    fn check_invariants(gt: &GroundTruth) {
        let mut union = BinaryMask::new(gt.spec.canvas, gt.spec.canvas);
        for (i, v) in gt.visible_masks.iter().enumerate() {
            assert!(v.is_subset_of(&gt.amodal_masks[i]));
            for w in &gt.visible_masks[i + 1..] {
                assert!(!v.intersects(w));
            }
            union = union.or(v).unwrap();
        }
        assert_eq!(union, gt.composite_silhouette);
        assert_eq!(render_stack(&gt.amodal_masks, &gt.fill_masks(), &gt.order).unwrap(), gt.composite_silhouette);
    }

    #[test]
    fn sampled_corpus_respects_accept_range_and_invariants() {
        let lib = builtin_library();
        let config = SamplerConfig { canvas: 128, ..SamplerConfig::default() };
        let corpus = sample_corpus_with(&lib, 12, 3, &config).unwrap();
        assert_eq!(corpus.len(), 12);
        for gt in &corpus {
            let m = gt.max_occlusion();
            assert!((0.10..=0.60).contains(&m));
            check_invariants(gt);
        }
        let again = sample_corpus_with(&lib, 12, 3, &config).unwrap();
        assert_eq!(corpus, again);
        let other = sample_corpus_with(&lib, 12, 4, &config).unwrap();
        assert_ne!(corpus, other);
    }

    #[test]
    fn impossible_accept_range_exhausts() {
        let lib = builtin_library();
        let config = SamplerConfig { canvas: 32, accept: (2.0, 3.0), ..SamplerConfig::default() };
        assert!(matches!(
            sample_corpus_with(&lib, 1, 0, &config),
            Err(SynthError::ExhaustedSampling { accepted: 0, requested: 1, attempts: 1000 })
        ));
        assert!(sample_corpus(&lib[..1], 1, 0, DEFAULT_ACCEPT).is_err());
    }

    #[test]
    fn corpus_files_are_deterministic() {
        let lib = builtin_library();
        let config = SamplerConfig { canvas: 96, parts: (2, 3), accept: (0.0, 1.0), ..SamplerConfig::default() };
        let corpus = sample_corpus_with(&lib, 2, 9, &config).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_corpus(a.path(), &corpus).unwrap();
        write_corpus(b.path(), &corpus).unwrap();
        for sample in ["sample_0000", "sample_0001"] {
            for entry in fs::read_dir(a.path().join(sample)).unwrap() {
                let name = entry.unwrap().file_name();
                let fa = fs::read(a.path().join(sample).join(&name)).unwrap();
                let fb = fs::read(b.path().join(sample).join(&name)).unwrap();
                assert_eq!(fa, fb, "{name:?}");
            }
        }
        let truth: serde_json::Value = serde_json::from_slice(&fs::read(a.path().join("sample_0000/truth.json")).unwrap()).unwrap();
        assert_eq!(truth["version"], 1);
        assert_eq!(truth["order"].as_array().unwrap().len(), corpus[0].len());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn stacks_satisfy_invariants_and_ground_truth_is_optimal(seed in 0u64..1000) {
            let lib = builtin_library();
            let config = SamplerConfig {
                canvas: 96,
                parts: (2, 5),
                base_scale: (0.6, 1.0),
                occluder_scale: (0.25, 0.6),
                accept: (0.0, 0.95),
            };
            let gt = sample_corpus_with(&lib, 1, seed, &config).unwrap().remove(0);
            check_invariants(&gt);
            let problem = build_problem(&gt.amodal_masks, &gt.visible_masks, &gt.composite_silhouette, FillSource::RawMasks, Weight::ONE).unwrap();
            let truth = enumerate_objective(&problem, &gt.order).unwrap();
            prop_assert!(solve(&problem).objective >= truth);
        }
    }
}
