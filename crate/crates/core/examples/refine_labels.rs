//! Fill unlabeled silhouette pixels from their nearest label, then split
//! labels into 4-connected visible fragments.

use iconstack::mask_ops::{refine_labels, split_components};
use iconstack::raster::{BinaryMask, LabelMap};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let silhouette = BinaryMask::from_fn(40, 20, |x, y| (2..38).contains(&x) && (2..18).contains(&y));
    // Label 1 on two separate blocks, label 2 between them, a black seam left over.
    let labels: Vec<u16> = (0..40 * 20)
        .map(|i| {
            let (x, y) = (i % 40, i / 40);
            if !silhouette.get(x, y) || x == 14 || x == 26 {
                0
            } else if x < 14 || x > 26 {
                1
            } else {
                2
            }
        })
        .collect();
    let raw = LabelMap::from_labels(40, 20, labels)?;
    let refined = refine_labels(&raw, &silhouette)?;
    println!("unlabeled before {}, after {}", silhouette.and_not(&raw.labeled())?.count(), silhouette.and_not(&refined.labeled())?.count());
    let parts = split_components(&refined);
    for (v, l) in parts.visible.iter().zip(&parts.source_label) {
        println!("fragment of label {l}: {} pixels", v.count());
    }
    Ok(())
}
