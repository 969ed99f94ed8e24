//! Instance matching, mIoU, panoptic quality and chamfer distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::mask_ops::iou;
use crate::raster::{edt, BinaryMask, RasterError};

/// Points sampled from each mask for the chamfer distance.
pub const DEFAULT_CHAMFER_SAMPLES: usize = 4096;
pub const DEFAULT_CHAMFER_SEED: u64 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("mask is empty")]
    EmptyMask,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MatchResult {
    /// `(prediction, reference, iou)` with `iou > 0.5`.
    pub matched_pairs: Vec<(usize, usize, f64)>,
    pub unmatched_predictions: Vec<usize>,
    pub unmatched_references: Vec<usize>,
}

/// Match predictions to references at IoU above one half. Pairs form the
/// maximum-total-IoU assignment among eligible pairs, so overlapping
/// instances match independently of their order; for disjoint references
/// each prediction has at most one eligible partner anyway.
pub fn match_instances(pred: &[BinaryMask], reference: &[BinaryMask]) -> Result<MatchResult, MetricsError> {
    let mut weight = vec![vec![0.0; reference.len()]; pred.len()];
    for (p, pm) in pred.iter().enumerate() {
        for (r, rm) in reference.iter().enumerate() {
            let v = iou(pm, rm)?;
            if v > 0.5 {
                weight[p][r] = v;
            }
        }
    }
    let mut result = MatchResult::default();
    let mut ref_taken = vec![false; reference.len()];
    let assignment = max_weight_assignment(&weight, pred.len(), reference.len());
    for (p, r) in assignment.into_iter().enumerate() {
        match r.filter(|&r| weight[p][r] > 0.0) {
            Some(r) => {
                ref_taken[r] = true;
                result.matched_pairs.push((p, r, weight[p][r]));
            }
            None => result.unmatched_predictions.push(p),
        }
    }
    result.unmatched_references = (0..reference.len()).filter(|&r| !ref_taken[r]).collect();
    Ok(result)
}

/// Column assigned to each row under the assignment maximizing total weight
/// (Hungarian method with potentials). Rows and columns may differ in count;
/// the surplus side stays partly unassigned.
fn max_weight_assignment(weight: &[Vec<f64>], rows: usize, cols: usize) -> Vec<Option<usize>> {
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let cost = |i: usize, j: usize| if transpose { -weight[j][i] } else { -weight[i][j] };
    // 1-based potentials; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=m {
        if owner[j] != 0 {
            let (r, c) = if transpose { (j - 1, owner[j] - 1) } else { (owner[j] - 1, j - 1) };
            out[r] = Some(c);
        }
    }
    out
}

/// Mean over references of the matched IoU (0 when unmatched), in percent.
pub fn mean_iou(result: &MatchResult, n_ref: usize) -> f64 {
    if n_ref == 0 {
        return 0.0;
    }
    100.0 * result.matched_pairs.iter().map(|m| m.2).sum::<f64>() / n_ref as f64
}

/// `100 · ΣIoU / (TP + FP/2 + FN/2)`; 0 for an empty denominator.
pub fn panoptic_quality(result: &MatchResult) -> f64 {
    let tp = result.matched_pairs.len() as f64;
    let den = tp + 0.5 * result.unmatched_predictions.len() as f64 + 0.5 * result.unmatched_references.len() as f64;
    if den == 0.0 {
        return 0.0;
    }
    100.0 * result.matched_pairs.iter().map(|m| m.2).sum::<f64>() / den
}

/// `n` pixels drawn uniformly with replacement from the set pixels. The
/// stream depends only on the mask and the seed.
fn sample_pixels(mask: &BinaryMask, n: usize, seed: u64) -> Vec<(usize, usize)> {
    let pixels: Vec<(usize, usize)> = mask.pixels().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| pixels[rng.random_range(0..pixels.len())]).collect()
}

fn directed_mean(from: &[(usize, usize)], to: &[(usize, usize)], w: usize, h: usize) -> f64 {
    let mut target = BinaryMask::new(w, h);
    for &(x, y) in to {
        target.set(x, y, true);
    }
    let d2 = edt::squared_distance_to_set(&target);
    from.iter().map(|&(x, y)| d2[y * w + x].sqrt()).sum::<f64>() / from.len() as f64
}

/// Symmetric chamfer distance in pixels between point sets sampled from
/// pixel centers of each mask.
pub fn chamfer_distance(pred: &BinaryMask, reference: &BinaryMask, n_samples: usize, seed: u64) -> Result<f64, MetricsError> {
    pred.check_dims(reference)?;
    if pred.is_empty() || reference.is_empty() {
        return Err(MetricsError::EmptyMask);
    }
    if n_samples == 0 {
        return Err(MetricsError::NoSamples);
    }
    let (w, h) = pred.dims();
    let a = sample_pixels(pred, n_samples, seed);
    let b = sample_pixels(reference, n_samples, seed);
    Ok(directed_mean(&a, &b, w, h) + directed_mean(&b, &a, w, h))
}

/// One evaluated icon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IconScore {
    pub icon_id: String,
    pub miou: f64,
    pub pq: f64,
    /// Mean chamfer distance over matched pairs; `None` when nothing matched.
    pub cd: Option<f64>,
}

/// Score predicted masks against references for one icon.
pub fn score_icon(icon_id: &str, pred: &[BinaryMask], reference: &[BinaryMask], n_samples: usize, seed: u64) -> Result<IconScore, MetricsError> {
    let m = match_instances(pred, reference)?;
    let mut cds = Vec::with_capacity(m.matched_pairs.len());
    for &(p, r, _) in &m.matched_pairs {
        cds.push(chamfer_distance(&pred[p], &reference[r], n_samples, seed)?);
    }
    Ok(IconScore {
        icon_id: icon_id.to_string(),
        miou: mean_iou(&m, reference.len()),
        pq: panoptic_quality(&m),
        cd: (!cds.is_empty()).then(|| cds.iter().sum::<f64>() / cds.len() as f64),
    })
}

/// CSV with header `icon_id,miou,pq,cd`, one row per icon and a final
/// `mean` row. Values use six decimals; a missing CD is an empty field.
pub fn scores_csv(scores: &[IconScore]) -> Result<String, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| MetricsError::Csv(e.to_string());
    w.write_record(["icon_id", "miou", "pq", "cd"]).map_err(err)?;
    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
    for s in scores {
        w.write_record([s.icon_id.clone(), fmt(Some(s.miou)), fmt(Some(s.pq)), fmt(s.cd)]).map_err(err)?;
    }
    let n = scores.len() as f64;
    let mean = |f: &dyn Fn(&IconScore) -> f64| (n > 0.0).then(|| scores.iter().map(f).sum::<f64>() / n);
    let cds: Vec<f64> = scores.iter().filter_map(|s| s.cd).collect();
    let cd_mean = (!cds.is_empty()).then(|| cds.iter().sum::<f64>() / cds.len() as f64);
    w.write_record(["mean".to_string(), fmt(mean(&|s| s.miou)), fmt(mean(&|s| s.pq)), fmt(cd_mean)]).map_err(err)?;
    let bytes = w.into_inner().map_err(|e| MetricsError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
