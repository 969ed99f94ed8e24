//! Binary masks and label maps, and the rasterization that produces the
//! silhouette, fill regions and extra regions.

pub mod edt;
mod mask;
pub mod png_io;
mod scanline;

use thiserror::Error;

use crate::svg::CompoundPath;

pub use mask::{BinaryMask, Connectivity, LabelMap};
pub use scanline::rasterize;

/// Working resolution for segmentation-scale masks.
pub const DEFAULT_RESOLUTION: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("label {0} does not fit an 8-bit palette")]
    TooManyLabels(usize),
    #[error("png: {0}")]
    Png(String),
    #[error("io: {0}")]
    Io(String),
}

/// Amodal pixels not present in the silhouette: `amodal \ silhouette`.
pub fn extra_region(amodal: &BinaryMask, silhouette: &BinaryMask) -> Result<BinaryMask, RasterError> {
    amodal.and_not(silhouette)
}

/// The solid region inside the path's outermost contours: its
/// rasterization with every enclosed background component filled.
pub fn fill_region(amodal_path: &CompoundPath, width: usize, height: usize) -> BinaryMask {
    rasterize(amodal_path, width, height).fill_holes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svg::{FillRule, ViewBox};
    use proptest::prelude::*;

    #[test]
    fn extra_region_cases() {
        let i = BinaryMask::from_fn(8, 8, |x, _| x < 4);
        assert!(extra_region(&i, &i).unwrap().is_empty());
        let full = BinaryMask::full(8, 8);
        assert_eq!(extra_region(&full, &i).unwrap(), BinaryMask::from_fn(8, 8, |x, _| x >= 4));
        assert!(matches!(
            extra_region(&full, &BinaryMask::new(4, 8)),
            Err(RasterError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ring_fills_to_disk() {
        let ring = CompoundPath::from_path_data(
            "M50 10 A40 40 0 1 1 50 90 A40 40 0 1 1 50 10 Z M50 30 A20 20 0 1 0 50 70 A20 20 0 1 0 50 30 Z",
            FillRule::EvenOdd,
            ViewBox::canvas(100, 100),
        )
        .unwrap();
        let disk = CompoundPath::from_path_data(
            "M50 10 A40 40 0 1 1 50 90 A40 40 0 1 1 50 10 Z",
            FillRule::EvenOdd,
            ViewBox::canvas(100, 100),
        )
        .unwrap();
        assert_eq!(fill_region(&ring, 100, 100), rasterize(&disk, 100, 100));
        assert_eq!(fill_region(&disk, 100, 100), rasterize(&disk, 100, 100));
    }

    /// Flood-fill oracle: count background pixels not reachable from the
    /// border through 8-connected background.
    fn enclosed_background(m: &BinaryMask) -> usize {
        let (w, h) = m.dims();
        let mut seen = vec![false; w * h];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for x in 0..w {
            for y in [0, h - 1] {
                stack.push((x, y));
            }
        }
        for y in 0..h {
            for x in [0, w - 1] {
                stack.push((x, y));
            }
        }
        while let Some((x, y)) = stack.pop() {
            if m.get(x, y) || seen[y * w + x] {
                continue;
            }
            seen[y * w + x] = true;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                        stack.push((nx as usize, ny as usize));
                    }
                }
            }
        }
        (0..w * h).filter(|&i| !m.bits()[i] && !seen[i]).count()
    }

    #[test]
    fn two_nested_holes() {
        // Square frame with a second frame inside: two holes (the gap
        // between frames and the inner window).
        let d = "M0 0 H60 V60 H0 Z M10 10 V50 H50 V10 Z M20 20 H40 V40 H20 Z M25 25 V35 H35 V25 Z";
        let p = CompoundPath::from_path_data(d, FillRule::NonZero, ViewBox::canvas(64, 64)).unwrap();
        let raster = rasterize(&p, 64, 64);
        let holes = enclosed_background(&raster);
        assert_eq!(holes, 40 * 40 - 20 * 20 + 10 * 10);
        assert_eq!(fill_region(&p, 64, 64).count(), raster.count() + holes);
    }

    proptest! {
        #[test]
        fn fill_contains_raster_and_extra_avoids_silhouette(
            cx in 10.0f64..50.0, cy in 10.0f64..50.0, r in 3.0f64..25.0, t in 0.2f64..0.9,
        ) {
            let d = format!(
                "M{} {cy} A{r} {r} 0 1 1 {} {cy} A{r} {r} 0 1 1 {} {cy} Z M{} {cy} A{ri} {ri} 0 1 0 {} {cy} A{ri} {ri} 0 1 0 {} {cy} Z",
                cx - r, cx + r, cx - r, cx - r * t, cx + r * t, cx - r * t, ri = r * t
            );
            let p = CompoundPath::from_path_data(&d, FillRule::EvenOdd, ViewBox::canvas(64, 64)).unwrap();
            let raster = rasterize(&p, 64, 64);
            prop_assert!(raster.is_subset_of(&fill_region(&p, 64, 64)));
            let sil = BinaryMask::from_fn(64, 64, |x, y| (x + y) % 3 != 0);
            prop_assert!(!extra_region(&raster, &sil).unwrap().intersects(&sil));
        }

        #[test]
        fn doubling_resolution_keeps_normalized_area(
            x in 10.0f64..20.0, y in 2.0f64..20.0, rx in 20.0f64..40.0, ry in 20.0f64..40.0,
        ) {
            let d = format!("M{x} {y} h{rx} l{} {ry} h-{rx} Z", -rx / 2.0);
            let p = CompoundPath::from_path_data(&d, FillRule::NonZero, ViewBox::canvas(64, 64)).unwrap();
            let lo = rasterize(&p, 512, 512).count() as f64 / (512.0 * 512.0);
            let hi = rasterize(&p, 1024, 1024).count() as f64 / (1024.0 * 1024.0);
            prop_assert!((lo - hi).abs() / hi < 0.02);
        }
    }
}
