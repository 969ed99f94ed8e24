//! Rasterize an icon at 512×512 and derive its fill region and extra region.

use iconstack::raster::png_io::write_mask;
use iconstack::raster::{extra_region, fill_region, rasterize};
use iconstack::svg::ViewBox;
use iconstack::synth::builtin_icon;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ring = builtin_icon("ring").expect("library icon").with_viewbox(ViewBox::canvas(512, 512));
    let mask = rasterize(&ring, 512, 512);
    let fill = fill_region(&ring, 512, 512);
    let extra = extra_region(&fill, &mask)?;
    println!("ring pixels {}, fill pixels {}, hole pixels {}", mask.count(), fill.count(), extra.count());
    let out = std::env::temp_dir().join("iconstack_ring.png");
    write_mask(&mask, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
