//! Clean raw completions and merge those that describe the same object.

use iconstack::mask_ops::{clean_completion, iou, merge_completions, AmodalSet, CleanupParams, DEFAULT_MERGE_TAU};
use iconstack::raster::BinaryMask;

fn disk(cx: f64, cy: f64, r: f64) -> BinaryMask {
    BinaryMask::from_fn(128, 128, |x, y| (x as f64 + 0.5 - cx).hypot(y as f64 + 0.5 - cy) <= r)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Two visible fragments of one disk split by a bar, and a separate square.
    let left = BinaryMask::from_fn(128, 128, |x, y| x < 40 && disk(50.0, 50.0, 30.0).get(x, y));
    let right = BinaryMask::from_fn(128, 128, |x, y| x > 60 && disk(50.0, 50.0, 30.0).get(x, y));
    let square = BinaryMask::from_fn(128, 128, |x, y| (90..120).contains(&x) && (90..120).contains(&y));
    let params = CleanupParams::for_resolution(128, 128);
    let raw = [disk(50.0, 50.0, 30.5), disk(50.5, 50.0, 30.0), square.clone()];
    let cleaned = raw
        .iter()
        .zip([&left, &right, &square])
        .map(|(a, v)| clean_completion(a, v, &params))
        .collect::<Result<Vec<_>, _>>()?;
    println!("IoU of the two disk completions: {:.3}", iou(&cleaned[0], &cleaned[1])?);
    let merged = merge_completions(&AmodalSet::from_completions(cleaned), DEFAULT_MERGE_TAU)?;
    println!("{} completions after merging at tau {DEFAULT_MERGE_TAU}: provenance {:?}", merged.len(), merged.provenance);
    Ok(())
}
