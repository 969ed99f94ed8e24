//! Post-processing of segmentation label maps and amodal completions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{edt, BinaryMask, Connectivity, LabelMap, RasterError};

/// IoU threshold above which two completions are one instance.
pub const DEFAULT_MERGE_TAU: f64 = 0.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaskError {
    #[error("label map has no labeled pixels")]
    NoLabeledPixels,
    #[error("visible mask is empty")]
    EmptyVisibleMask,
    #[error("merge threshold {0} outside (0, 1]")]
    InvalidTau(f64),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Visible fragments, one 4-connected component each.
#[derive(Debug, Clone, PartialEq)]
pub struct PartSet {
    pub visible: Vec<BinaryMask>,
    /// Label in the refined map each fragment came from.
    pub source_label: Vec<u16>,
}

impl PartSet {
    pub fn len(&self) -> usize {
        self.visible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visible.is_empty()
    }
}

/// Amodal masks with the indices of the visible fragments behind each.
#[derive(Debug, Clone, PartialEq)]
pub struct AmodalSet {
    pub amodal: Vec<BinaryMask>,
    pub provenance: Vec<Vec<usize>>,
}

impl AmodalSet {
    /// One completion per fragment, fragment `i` producing `amodal[i]`.
    pub fn from_completions(amodal: Vec<BinaryMask>) -> Self {
        let provenance = (0..amodal.len()).map(|i| vec![i]).collect();
        AmodalSet { amodal, provenance }
    }

    pub fn len(&self) -> usize {
        self.amodal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amodal.is_empty()
    }

    /// Union of the visible fragments behind each amodal mask.
    pub fn visible_union(&self, parts: &PartSet) -> Vec<BinaryMask> {
        self.provenance
            .iter()
            .map(|srcs| {
                let mut acc = BinaryMask::new(parts.visible[srcs[0]].width(), parts.visible[srcs[0]].height());
                for &s in srcs {
                    acc = acc.or(&parts.visible[s]).expect("fragments share dimensions");
                }
                acc
            })
            .collect()
    }
}

/// Assign every unlabeled silhouette pixel the label of its Euclidean-nearest
/// labeled pixel (ties go to the smaller label) and clear everything outside
/// the silhouette.
pub fn refine_labels(raw: &LabelMap, silhouette: &BinaryMask) -> Result<LabelMap, MaskError> {
    if raw.dims() != silhouette.dims() {
        return Err(RasterError::DimensionMismatch { left: raw.dims(), right: silhouette.dims() }.into());
    }
    let labels = raw.present_labels();
    if labels.is_empty() {
        return Err(MaskError::NoLabeledPixels);
    }
    let (w, h) = raw.dims();
    let sil = silhouette.bits();
    let needs_query = raw.labels().iter().zip(sil).any(|(&l, &s)| s && l == 0);

    let mut best_d = vec![f64::INFINITY; w * h];
    let mut best_l = vec![0u16; w * h];
    if needs_query {
        // Labels ascend, so strict improvement keeps the smaller id on ties.
        for &label in &labels {
            let d2 = edt::squared_distance_to_set(&raw.mask_of(label));
            for i in 0..w * h {
                if d2[i] < best_d[i] {
                    best_d[i] = d2[i];
                    best_l[i] = label;
                }
            }
        }
    }
    let out = raw
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &l)| match (sil[i], l) {
            (false, _) => 0,
            (true, 0) => best_l[i],
            (true, l) => l,
        })
        .collect();
    Ok(LabelMap::from_labels(w, h, out)?)
}

/// Split each label into its 4-connected fragments. Fragments are ordered by
/// label, then by row-major position of their first pixel.
pub fn split_components(labels: &LabelMap) -> PartSet {
    let mut visible = Vec::new();
    let mut source_label = Vec::new();
    for label in labels.present_labels() {
        for comp in labels.mask_of(label).components(Connectivity::Four) {
            visible.push(comp);
            source_label.push(label);
        }
    }
    PartSet { visible, source_label }
}

/// Constants for [`clean_completion`], in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanupParams {
    /// Radius of the expanded visible mask that anchors valid regions.
    pub dilation_radius: f64,
    /// Structures thinner than this (by inner distance) are boundary artifacts.
    pub min_width: f64,
}

impl Default for CleanupParams {
    fn default() -> Self {
        CleanupParams { dilation_radius: 3.0, min_width: 2.0 }
    }
}

impl CleanupParams {
    /// Defaults scaled linearly from the 512-pixel reference resolution.
    pub fn for_resolution(width: usize, height: usize) -> Self {
        let s = (width.max(height) as f64 / 512.0).max(0.5);
        let d = CleanupParams::default();
        CleanupParams { dilation_radius: (d.dilation_radius * s).max(1.0), min_width: (d.min_width * s).max(1.0) }
    }
}

/// Clean a raw amodal completion so it is one 4-connected component that
/// contains `visible`, stays anchored to it, and has no thin rings.
pub fn clean_completion(raw: &BinaryMask, visible: &BinaryMask, params: &CleanupParams) -> Result<BinaryMask, MaskError> {
    raw.check_dims(visible)?;
    if visible.is_empty() {
        return Err(MaskError::EmptyVisibleMask);
    }
    let mut work = raw.or(visible)?;
    let near = visible.dilate(params.dilation_radius);

    // Thin structures: pixels farther than `min_width` from any pixel whose
    // inner distance reaches `min_width`.
    let depth = work.inner_distance();
    let core = BinaryMask::from_bits(work.width(), work.height(), depth.iter().map(|&d| d >= params.min_width).collect())?;
    let reach = core.dilate(params.min_width);
    let thin = work.and_not(&reach)?;
    work = work.and_not(&thin.and_not(&near)?)?;

    // Keep only the component(s) that hold the visible pixels.
    let (ids, n) = work.component_labels(Connectivity::Four);
    let mut keep = vec![false; n + 1];
    for (i, &v) in visible.bits().iter().enumerate() {
        if v {
            keep[ids[i] as usize] = true;
        }
    }
    let bits = ids.iter().map(|&id| id != 0 && keep[id as usize]).collect();
    let kept = BinaryMask::from_bits(work.width(), work.height(), bits)?;
    Ok(connect_components(kept))
}

/// Join all 4-connected components with Manhattan pixel paths between
/// nearest pixel pairs until one component remains.
fn connect_components(mut mask: BinaryMask) -> BinaryMask {
    loop {
        let comps = mask.components(Connectivity::Four);
        if comps.len() <= 1 {
            return mask;
        }
        let anchor: Vec<(usize, usize)> = comps[0].pixels().collect();
        let others: Vec<(usize, usize)> = comps[1..].iter().flat_map(|c| c.pixels()).collect();
        let mut best = (usize::MAX, (0, 0), (0, 0));
        for &a in &anchor {
            for &b in &others {
                let d = a.0.abs_diff(b.0) + a.1.abs_diff(b.1);
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        let (_, (mut x, mut y), (bx, by)) = best;
        while x != bx {
            x = if bx > x { x + 1 } else { x - 1 };
            mask.set(x, y, true);
        }
        while y != by {
            y = if by > y { y + 1 } else { y - 1 };
            mask.set(x, y, true);
        }
    }
}

/// Intersection over union; 1 when both masks are empty.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64, RasterError> {
    a.check_dims(b)?;
    let inter = a.intersection_count(b);
    let union = a.count() + b.count() - inter;
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Merge completions whose IoU exceeds `tau`, closing the relation
/// transitively. Each group becomes the union of its members; groups are
/// ordered by their first member.
pub fn merge_completions(amodal: &AmodalSet, tau: f64) -> Result<AmodalSet, MaskError> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(MaskError::InvalidTau(tau));
    }
    let n = amodal.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if iou(&amodal.amodal[i], &amodal.amodal[j])? > tau {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(i),
            None => groups.push((root, vec![i])),
        }
    }
    let mut out = AmodalSet { amodal: Vec::new(), provenance: Vec::new() };
    for (_, members) in groups {
        let mut mask = amodal.amodal[members[0]].clone();
        let mut prov = amodal.provenance[members[0]].clone();
        for &m in &members[1..] {
            mask = mask.or(&amodal.amodal[m])?;
            prov.extend_from_slice(&amodal.provenance[m]);
        }
        out.amodal.push(mask);
        out.provenance.push(prov);
    }
    Ok(out)
}
