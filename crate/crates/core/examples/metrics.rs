//! Score predicted part masks against references with mIoU, PQ and chamfer
//! distance, and print the evaluation CSV.

use iconstack::metrics::{chamfer_distance, match_instances, mean_iou, panoptic_quality, score_icon, scores_csv, DEFAULT_CHAMFER_SAMPLES};
use iconstack::raster::BinaryMask;

fn rect(x0: usize, y0: usize, x1: usize, y1: usize) -> BinaryMask {
    BinaryMask::from_fn(64, 64, |x, y| (x0..x1).contains(&x) && (y0..y1).contains(&y))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference = vec![rect(4, 4, 30, 30), rect(34, 4, 60, 30), rect(4, 34, 60, 60)];
    let pred = vec![rect(5, 4, 31, 30), rect(34, 6, 60, 30), rect(40, 40, 44, 44)];
    let m = match_instances(&pred, &reference)?;
    println!("matched {:?}", m.matched_pairs);
    println!("mIoU {:.2}, PQ {:.2}", mean_iou(&m, reference.len()), panoptic_quality(&m));
    println!("CD of first pair {:.3} px", chamfer_distance(&pred[0], &reference[0], DEFAULT_CHAMFER_SAMPLES, 0)?);
    let score = score_icon("demo", &pred, &reference, DEFAULT_CHAMFER_SAMPLES, 0)?;
    print!("{}", scores_csv(&[score])?);
    Ok(())
}
