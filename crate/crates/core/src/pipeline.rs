//! End-to-end decomposition: mask ingestion, refinement, completion
//! cleanup and merging, tracing, ordering, curve surgery and layered SVG
//! assembly.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask_ops::{
    clean_completion, merge_completions, refine_labels, split_components, AmodalSet, CleanupParams, PartSet,
    DEFAULT_MERGE_TAU,
};
use crate::ordering::{build_problem, dump_json, render_stack, solve, FillSource, OrderingProblem, OrderingSolution, Weight};
use crate::raster::png_io::{encode_label_map, encode_mask, read_label_map, read_mask, read_rgb, RgbImage, LABEL_PALETTE};
use crate::raster::{fill_region, rasterize, BinaryMask, LabelMap, RasterError};
use crate::surgery::{debug_svg, merge_or_fallback, MergedContour, DEFAULT_CONTACT_EPSILON};
use crate::metrics::{score_icon, IconScore};
use crate::svg::{parse_layered_svg, CompoundPath, FillRule, Layer, LayeredIcon, Rgb, Subpath, ViewBox};
use crate::trace::{trace, TraceConfig};

/// Channel quantization step for colorized segmentations.
pub const COLOR_STEP: u8 = 8;
/// Pixels whose brightest channel is below this are unlabeled.
pub const NEAR_BLACK: u8 = 32;
/// Quantized colors within this Euclidean distance of a more frequent
/// color join its cluster.
pub const COLOR_RADIUS: f64 = 48.0;
pub const MAX_COLORS: usize = 64;
/// Fraction of a layer's visible mask an original subpath must lie in to
/// be paired with that layer for surgery.
pub const PAIRING_OVERLAP: f64 = 0.5;
pub const DEFAULT_MIN_FRAGMENT_AREA: usize = 16;

/// Pipeline step an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Input,
    Manifest,
    Import,
    Refine,
    Completion,
    Cleanup,
    Merge,
    Trace,
    Order,
    Surgery,
    Assemble,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        f.write_str(s.as_str().expect("unit variant"))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("{completions} completions for {labels} segmentation labels")]
    PartCountMismatch { completions: usize, labels: usize },
    #[error("{0} distinct colors; not a segmentation image")]
    TooManyColors(usize),
    #[error("manifest: {0}")]
    Manifest(String),
}

fn at<E: std::error::Error + Send + Sync + 'static>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage { stage, source: Box::new(e) }
}

/// Where the per-part segmentation comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segmentation {
    /// Indexed PNG whose palette indices are labels.
    LabelMap(PathBuf),
    /// RGB image with one flat color per part, see [`import_colorized`].
    Colorized(PathBuf),
    /// One mask per part; mask `k` becomes label `k + 1`.
    Masks(Vec<PathBuf>),
}

/// JSON description of a mask stack. Relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskStackManifest {
    /// Silhouette mask; when absent the input SVG is rasterized.
    #[serde(rename = "silhouette", default, skip_serializing_if = "Option::is_none")]
    pub silhouette_path: Option<PathBuf>,
    pub segmentation: Segmentation,
    /// Amodal masks per segmentation label, in label order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completions: Option<Vec<PathBuf>>,
    pub canvas: (usize, usize),
}

impl MaskStackManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Manifest(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<(Self, PathBuf), PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, base))
    }

    /// Read every referenced raster. `flattened` supplies the silhouette
    /// when the manifest has none.
    pub fn load(&self, base: &Path, flattened: Option<&CompoundPath>) -> Result<MaskStack, PipelineError> {
        let (w, h) = self.canvas;
        let resolve = |p: &Path| base.join(p);
        let check = |m: &BinaryMask, what: &str| -> Result<(), PipelineError> {
            if m.dims() != (w, h) {
                return Err(PipelineError::Manifest(format!("{what} is {:?}, canvas is {:?}", m.dims(), (w, h))));
            }
            Ok(())
        };
        let read = |p: &Path| read_mask(&resolve(p)).map_err(at(Stage::Manifest));
        let silhouette = match (&self.silhouette_path, flattened) {
            (Some(p), _) => read(p)?,
            (None, Some(svg)) => rasterize(&svg.with_viewbox(ViewBox::canvas(w, h)), w, h),
            (None, None) => return Err(PipelineError::Manifest("no silhouette and no input SVG".into())),
        };
        check(&silhouette, "silhouette")?;
        let labels = match &self.segmentation {
            Segmentation::LabelMap(p) => read_label_map(&resolve(p)).map_err(at(Stage::Manifest))?,
            Segmentation::Colorized(p) => {
                let img = read_rgb(&resolve(p)).map_err(at(Stage::Manifest))?;
                import_colorized(&img, &silhouette)?
            }
            Segmentation::Masks(ps) => {
                let masks = ps.iter().map(|p| read(p)).collect::<Result<Vec<_>, _>>()?;
                for (i, m) in masks.iter().enumerate() {
                    check(m, &format!("mask {i}"))?;
                }
                LabelMap::from_masks(&masks).map_err(at(Stage::Manifest))?
            }
        };
        if labels.dims() != (w, h) {
            return Err(PipelineError::Manifest(format!("segmentation is {:?}, canvas is {:?}", labels.dims(), (w, h))));
        }
        if !labels.is_contiguous() {
            return Err(PipelineError::Manifest(format!("labels {:?} are not contiguous", labels.present_labels())));
        }
        let completions = match &self.completions {
            None => None,
            Some(ps) => {
                let masks = ps.iter().map(|p| read(p)).collect::<Result<Vec<_>, _>>()?;
                for (i, m) in masks.iter().enumerate() {
                    check(m, &format!("completion {i}"))?;
                }
                Some(masks)
            }
        };
        Ok(MaskStack { silhouette, labels, completions })
    }
}

/// Rasters a decomposition starts from.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskStack {
    pub silhouette: BinaryMask,
    /// Raw segmentation: label `l ≥ 1` per part, 0 unlabeled.
    pub labels: LabelMap,
    /// Amodal mask per label `l`, at index `l − 1`.
    pub completions: Option<Vec<BinaryMask>>,
}

/// Source of amodal completions for visible fragments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompletionProvider {
    /// `A_k = V_k`.
    Identity,
    /// `A_k` is the filled convex hull of `V_k`.
    Convex,
    /// `A_k` read from the manifest, by the fragment's segmentation label.
    #[default]
    ExternalFiles,
}

impl FromStr for CompletionProvider {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(CompletionProvider::Identity),
            "convex" => Ok(CompletionProvider::Convex),
            "external" | "external-files" => Ok(CompletionProvider::ExternalFiles),
            _ => Err(format!("unknown provider {s:?}; expected identity, convex or external-files")),
        }
    }
}

impl fmt::Display for CompletionProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompletionProvider::Identity => "identity",
            CompletionProvider::Convex => "convex",
            CompletionProvider::ExternalFiles => "external-files",
        })
    }
}

/// Where ordering takes fill regions from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillMode {
    #[default]
    Paths,
    RawMasks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeConfig {
    pub tau: f64,
    pub lambda: Weight,
    pub trace: TraceConfig,
    /// Cleanup constants; scaled from the canvas size when `None`.
    pub cleanup: Option<CleanupParams>,
    pub contact_epsilon: f64,
    pub fill_mode: FillMode,
    /// Run curve surgery against the input subpaths.
    pub surgery: bool,
    /// Visible fragments with fewer pixels join the nearest larger fragment
    /// of the same label.
    pub min_fragment_area: usize,
    pub debug_dir: Option<PathBuf>,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig {
            tau: DEFAULT_MERGE_TAU,
            lambda: Weight::ONE,
            trace: TraceConfig::default(),
            cleanup: None,
            contact_epsilon: DEFAULT_CONTACT_EPSILON,
            fill_mode: FillMode::Paths,
            surgery: true,
            min_fragment_area: DEFAULT_MIN_FRAGMENT_AREA,
            debug_dir: None,
        }
    }
}

/// Everything a decomposition produced. Per-part vectors are indexed by
/// post-merge part; `icon` stacks them in solved order.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub icon: LayeredIcon,
    pub refined: LabelMap,
    pub fragments: PartSet,
    pub amodal: AmodalSet,
    pub visible: Vec<BinaryMask>,
    /// Final vector path per part.
    pub paths: Vec<CompoundPath>,
    pub problem: OrderingProblem,
    pub solution: OrderingSolution,
    /// Surgery outcome per part: one entry per paired original subpath.
    pub surgery: Vec<Vec<MergedContour>>,
}

/// Fill color of stack position `i`: the palette, darkened on each cycle
/// so colors stay distinct past twelve layers.
pub fn layer_color(i: usize) -> Rgb {
    let [r, g, b] = LABEL_PALETTE[i % LABEL_PALETTE.len()];
    let round = (i / LABEL_PALETTE.len()) as u32;
    let f = |c: u8| ((c as u32 * 8) / (8 + round)) as u8;
    Rgb(f(r), f(g), f(b))
}

/// Decompose a flattened icon given its mask stack.
pub fn decompose(
    input: &CompoundPath,
    stack: &MaskStack,
    provider: CompletionProvider,
    config: &DecomposeConfig,
) -> Result<Decomposition, PipelineError> {
    let silhouette = &stack.silhouette;
    let (w, h) = silhouette.dims();
    config.trace.validate().map_err(at(Stage::Input))?;
    if stack.labels.dims() != (w, h) {
        return Err(at(Stage::Input)(RasterError::DimensionMismatch { left: stack.labels.dims(), right: (w, h) }));
    }

    let refined = refine_labels(&stack.labels, silhouette).map_err(at(Stage::Refine))?;
    let fragments = fold_specks(split_components(&refined), config.min_fragment_area);
    log::info!("{} labels, {} visible fragments", refined.max_label(), fragments.len());

    let raw: Vec<BinaryMask> = match provider {
        CompletionProvider::Identity => fragments.visible.clone(),
        CompletionProvider::Convex => fragments.visible.iter().map(BinaryMask::convex_hull).collect(),
        CompletionProvider::ExternalFiles => {
            let Some(completions) = &stack.completions else {
                return Err(at(Stage::Completion)(ProviderError("external-files provider needs completions".into())));
            };
            let labels = stack.labels.max_label() as usize;
            if completions.len() != labels {
                return Err(PipelineError::PartCountMismatch { completions: completions.len(), labels });
            }
            fragments.source_label.iter().map(|&l| completions[l as usize - 1].clone()).collect()
        }
    };

    let params = config.cleanup.unwrap_or_else(|| CleanupParams::for_resolution(w, h));
    let cleaned = raw
        .par_iter()
        .zip(&fragments.visible)
        .map(|(a, v)| clean_completion(a, v, &params))
        .collect::<Result<Vec<_>, _>>()
        .map_err(at(Stage::Cleanup))?;
    let amodal = merge_completions(&AmodalSet::from_completions(cleaned), config.tau).map_err(at(Stage::Merge))?;
    let visible = amodal.visible_union(&fragments);
    log::info!("{} parts after merging at tau {}", amodal.len(), config.tau);

    let traced = amodal
        .amodal
        .par_iter()
        .map(|a| trace(a, &config.trace))
        .collect::<Result<Vec<_>, _>>()
        .map_err(at(Stage::Trace))?;

    let fill_source = match config.fill_mode {
        FillMode::Paths => FillSource::Paths(&traced),
        FillMode::RawMasks => FillSource::RawMasks,
    };
    let problem = build_problem(&amodal.amodal, &visible, silhouette, fill_source, config.lambda).map_err(at(Stage::Order))?;
    let solution = solve(&problem);
    log::info!("order {:?}, objective {}", solution.permutation, solution.objective_value);

    let originals = input.with_viewbox(ViewBox::canvas(w, h));
    let (paths, surgery): (Vec<CompoundPath>, Vec<Vec<MergedContour>>) = if config.surgery {
        traced
            .par_iter()
            .zip(&visible)
            .map(|(t, v)| operate(t, v, &originals.subpaths, config.contact_epsilon))
            .unzip()
    } else {
        (traced.clone(), vec![Vec::new(); traced.len()])
    };

    let layers = solution
        .permutation
        .iter()
        .enumerate()
        .map(|(pos, &k)| Layer { path: paths[k].clone(), fill: layer_color(pos), z_index: pos as i32 })
        .collect();
    let icon = LayeredIcon { layers, canvas: ViewBox::canvas(w, h), objective: Some(solution.objective_value) };
    icon.validate().map_err(at(Stage::Assemble))?;
    if icon.layers.len() != amodal.len() {
        return Err(at(Stage::Assemble)(ProviderError("layer count differs from part count".into())));
    }

    let out = Decomposition { icon, refined, fragments, amodal, visible, paths, problem, solution, surgery };
    if let Some(dir) = &config.debug_dir {
        write_debug(dir, &out).map_err(at(Stage::Output))?;
    }
    Ok(out)
}

#[derive(Debug, Error)]
#[error("{0}")]
struct ProviderError(String);

/// Fold fragments smaller than `min_area` into the nearest (Chebyshev)
/// fragment of the same label that is at least that large. Specks of a
/// label with no large fragment stay as they are.
pub fn fold_specks(parts: PartSet, min_area: usize) -> PartSet {
    let sizes: Vec<usize> = parts.visible.iter().map(BinaryMask::count).collect();
    let mut target: Vec<usize> = (0..parts.len()).collect();
    for i in (0..parts.len()).filter(|&i| sizes[i] < min_area) {
        let speck: Vec<(usize, usize)> = parts.visible[i].pixels().collect();
        let best = (0..parts.len())
            .filter(|&j| sizes[j] >= min_area && parts.source_label[j] == parts.source_label[i])
            .map(|j| {
                let d = parts.visible[j]
                    .pixels()
                    .flat_map(|q| speck.iter().map(move |p| p.0.abs_diff(q.0).max(p.1.abs_diff(q.1))))
                    .min()
                    .unwrap_or(usize::MAX);
                (d, j)
            })
            .min();
        if let Some((_, j)) = best {
            target[i] = j;
        }
    }
    let mut visible = Vec::new();
    let mut source_label = Vec::new();
    for (j, v) in parts.visible.iter().enumerate() {
        if target[j] != j {
            continue;
        }
        let mut acc = v.clone();
        for i in (0..parts.len()).filter(|&i| target[i] == j && i != j) {
            acc = acc.or(&parts.visible[i]).expect("fragments share dimensions");
        }
        visible.push(acc);
        source_label.push(parts.source_label[j]);
    }
    PartSet { visible, source_label }
}

/// Pair original subpaths with this part by visible overlap and run
/// surgery of each against the completion contour it overlaps most.
fn operate(traced: &CompoundPath, visible: &BinaryMask, originals: &[Subpath], epsilon: f64) -> (CompoundPath, Vec<MergedContour>) {
    let (w, h) = visible.dims();
    let single = |sp: &Subpath| {
        let p = CompoundPath { subpaths: vec![sp.clone()], fill_rule: FillRule::NonZero, viewbox: ViewBox::canvas(w, h) };
        rasterize(&p, w, h)
    };
    let mut subpaths = traced.subpaths.clone();
    let mut regions: Vec<BinaryMask> = subpaths.iter().map(single).collect();
    let mut merged = Vec::new();
    for o in originals {
        let region = single(o);
        let n = region.count();
        if n == 0 || region.intersection_count(visible) as f64 <= PAIRING_OVERLAP * n as f64 {
            continue;
        }
        let Some((best, overlap)) = regions
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.intersection_count(&region)))
            .max_by_key(|&(i, c)| (c, std::cmp::Reverse(i)))
        else {
            continue;
        };
        if overlap == 0 {
            continue;
        }
        let m = merge_or_fallback(o, &subpaths[best], epsilon);
        subpaths[best] = m.subpath.clone();
        regions[best] = single(&subpaths[best]);
        merged.push(m);
    }
    let path = CompoundPath { subpaths, fill_rule: traced.fill_rule, viewbox: traced.viewbox };
    (path, merged)
}

fn write_debug(dir: &Path, d: &Decomposition) -> Result<(), DebugError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("refined.png"), encode_label_map(&d.refined)?)?;
    for (k, (a, v)) in d.amodal.amodal.iter().zip(&d.visible).enumerate() {
        fs::write(dir.join(format!("amodal_{k}.png")), encode_mask(a)?)?;
        fs::write(dir.join(format!("visible_{k}.png")), encode_mask(v)?)?;
    }
    fs::write(dir.join("ordering.json"), dump_json(&d.problem, &d.solution))?;
    let contours: Vec<MergedContour> = d.surgery.iter().flatten().cloned().collect();
    fs::write(dir.join("surgery.svg"), debug_svg(&contours, d.icon.canvas))?;
    Ok(())
}

#[derive(Debug, Error)]
enum DebugError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Optional TOML configuration: `[trace]` and `[cleanup]` tables override
/// the defaults, `[decompose]` sets `tau`, `lambda` and `contact_epsilon`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub trace: Option<TraceConfig>,
    pub cleanup: Option<CleanupParams>,
    pub decompose: DecomposeSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeSection {
    pub tau: Option<f64>,
    pub lambda: Option<String>,
    pub contact_epsilon: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Manifest(format!("config: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Defaults overridden by this file.
    pub fn decompose_config(&self) -> Result<DecomposeConfig, PipelineError> {
        let mut c = DecomposeConfig::default();
        if let Some(t) = self.trace {
            c.trace = t;
        }
        c.cleanup = self.cleanup;
        if let Some(tau) = self.decompose.tau {
            c.tau = tau;
        }
        if let Some(l) = &self.decompose.lambda {
            c.lambda = l.parse().map_err(|e| PipelineError::Manifest(format!("config lambda: {e}")))?;
        }
        if let Some(e) = self.decompose.contact_epsilon {
            c.contact_epsilon = e;
        }
        Ok(c)
    }
}

/// Score layered SVGs against a corpus. For every sample directory under
/// `truth_dir` holding `amodal_{k}.png` files, the prediction is
/// `pred_dir/<name>.svg`; each of its layers is rasterized at the truth
/// resolution. Samples are visited in name order.
pub fn evaluate_corpus(pred_dir: &Path, truth_dir: &Path, n_samples: usize, seed: u64) -> Result<Vec<IconScore>, PipelineError> {
    let io = |e: std::io::Error| PipelineError::Manifest(format!("{}: {e}", truth_dir.display()));
    let mut names: Vec<String> = fs::read_dir(truth_dir)
        .map_err(io)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("amodal_0.png").is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
        .par_iter()
        .map(|name| {
            let dir = truth_dir.join(name);
            let mut truth = Vec::new();
            while let Ok(m) = read_mask(&dir.join(format!("amodal_{}.png", truth.len()))) {
                truth.push(m);
            }
            let (w, h) = truth[0].dims();
            let svg = pred_dir.join(format!("{name}.svg"));
            let bytes = fs::read(&svg).map_err(|e| PipelineError::Manifest(format!("{}: {e}", svg.display())))?;
            let icon = parse_layered_svg(&bytes).map_err(at(Stage::Input))?;
            let pred: Vec<BinaryMask> = icon.layers.iter().map(|l| rasterize(&l.path.with_viewbox(ViewBox::canvas(w, h)), w, h)).collect();
            score_icon(name, &pred, &truth, n_samples, seed).map_err(at(Stage::Output))
        })
        .collect()
}

/// Painter's-algorithm render of a layered icon: each layer blanks its
/// fill region, then draws its path.
pub fn render_layered(icon: &LayeredIcon, width: usize, height: usize) -> BinaryMask {
    if icon.layers.is_empty() {
        return BinaryMask::new(width, height);
    }
    let paths: Vec<CompoundPath> = icon.layers.iter().map(|l| l.path.with_viewbox(ViewBox::canvas(width, height))).collect();
    let amodal: Vec<BinaryMask> = paths.iter().map(|p| rasterize(p, width, height)).collect();
    let fill: Vec<BinaryMask> = paths.iter().map(|p| fill_region(p, width, height)).collect();
    let order: Vec<usize> = (0..paths.len()).collect();
    render_stack(&amodal, &fill, &order).expect("layers share the canvas")
}

fn snap(c: u8) -> u8 {
    let q = COLOR_STEP as u16;
    (((c as u16 + q / 2) / q) * q).min(255) as u8
}

fn color_distance(a: [u8; 3], b: [u8; 3]) -> f64 {
    a.iter().zip(&b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>().sqrt()
}

/// Labels from a colorized segmentation.
///
/// Channels snap to the nearest multiple of [`COLOR_STEP`]; pixels that are
/// near black or outside the silhouette stay unlabeled. Snapped colors are
/// visited by descending frequency and join the first cluster whose center
/// lies within [`COLOR_RADIUS`], else start one. Clusters no thicker than
/// two pixels anywhere are boundary blends and stay unlabeled. Labels go by
/// descending pixel count.
pub fn import_colorized(image: &RgbImage, silhouette: &BinaryMask) -> Result<LabelMap, PipelineError> {
    let (w, h) = silhouette.dims();
    if (image.width, image.height) != (w, h) {
        return Err(at(Stage::Import)(RasterError::DimensionMismatch { left: (image.width, image.height), right: (w, h) }));
    }
    let snapped: Vec<Option<[u8; 3]>> = image
        .pixels
        .iter()
        .zip(silhouette.bits())
        .map(|(p, &inside)| (inside && p.iter().copied().max().unwrap_or(0) >= NEAR_BLACK).then(|| p.map(snap)))
        .collect();
    let mut freq: BTreeMap<[u8; 3], usize> = BTreeMap::new();
    for c in snapped.iter().flatten() {
        *freq.entry(*c).or_default() += 1;
    }
    let mut colors: Vec<([u8; 3], usize)> = freq.into_iter().collect();
    colors.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut centers: Vec<[u8; 3]> = Vec::new();
    let mut cluster_of: BTreeMap<[u8; 3], usize> = BTreeMap::new();
    for (c, _) in &colors {
        let hit = centers.iter().position(|&z| color_distance(z, *c) <= COLOR_RADIUS);
        let id = hit.unwrap_or_else(|| {
            centers.push(*c);
            centers.len() - 1
        });
        cluster_of.insert(*c, id);
    }
    let cluster: Vec<Option<usize>> = snapped.iter().map(|c| c.map(|c| cluster_of[&c])).collect();

    let mut masks: Vec<BinaryMask> = (0..centers.len()).map(|_| BinaryMask::new(w, h)).collect();
    for (i, c) in cluster.iter().enumerate() {
        if let Some(c) = c {
            masks[*c].set(i % w, i / w, true);
        }
    }
    let mut kept: Vec<(usize, usize)> = masks
        .iter()
        .enumerate()
        .filter(|(_, m)| m.inner_distance().iter().any(|&d| d > 2.0))
        .map(|(i, m)| (i, m.count()))
        .collect();
    if kept.len() > MAX_COLORS {
        return Err(PipelineError::TooManyColors(kept.len()));
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut label_of = vec![0u16; centers.len()];
    for (rank, &(i, _)) in kept.iter().enumerate() {
        label_of[i] = rank as u16 + 1;
    }
    let labels = cluster.iter().map(|c| c.map_or(0, |c| label_of[c])).collect();
    LabelMap::from_labels(w, h, labels).map_err(at(Stage::Import))
}
