//! Turn a flat-colored segmentation image into labels; anti-aliased seams
//! stay unlabeled until refinement assigns them.

use iconstack::mask_ops::refine_labels;
use iconstack::pipeline::import_colorized;
use iconstack::raster::png_io::RgbImage;
use iconstack::raster::BinaryMask;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (w, h) = (96, 48);
    let silhouette = BinaryMask::from_fn(w, h, |x, y| (4..92).contains(&x) && (4..44).contains(&y));
    let mut image = RgbImage::new(w, h);
    for (x, y) in silhouette.pixels() {
        image.pixels[y * w + x] = match x {
            0..=47 => [230, 60, 50],
            48 => [140, 120, 100],
            _ => [40, 180, 220],
        };
    }
    let labels = import_colorized(&image, &silhouette)?;
    println!("labels {:?}, unlabeled silhouette pixels {}", labels.present_labels(), silhouette.and_not(&labels.labeled())?.count());
    let refined = refine_labels(&labels, &silhouette)?;
    println!("after refinement: {}", silhouette.and_not(&refined.labeled())?.count());
    Ok(())
}
