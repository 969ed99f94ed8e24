//! Trace a binary mask into cubic Bézier contours and measure how well the
//! vector re-rasterizes to the input.

use iconstack::raster::rasterize;
use iconstack::svg::ViewBox;
use iconstack::synth::builtin_icon;
use iconstack::trace::{round_trip_iou, trace, TraceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let heart = builtin_icon("heart").expect("library icon").with_viewbox(ViewBox::canvas(512, 512));
    let mask = rasterize(&heart, 512, 512);
    for tol in [2.0, 1.0, 0.5] {
        let config = TraceConfig { fit_tolerance: tol, ..TraceConfig::default() };
        let path = trace(&mask, &config)?;
        let segments: usize = path.subpaths.iter().map(|s| s.segments.len()).sum();
        println!("fit tolerance {tol}: {segments} segments, round-trip IoU {:.5}", round_trip_iou(&mask, &config)?);
    }
    Ok(())
}
