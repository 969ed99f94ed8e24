//! Merge an occluded crescent outline with its completed disk: original
//! segments survive where the curves agree, G1 bridges join the rest.

use iconstack::surgery::{debug_svg, detect_contacts, max_bridge_joint_angle, merge_contours, DEFAULT_CONTACT_EPSILON};
use iconstack::svg::{CompoundPath, FillRule, ViewBox};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let vb = ViewBox::canvas(200, 200);
    // Visible crescent: disk of radius 60 at (100, 100) minus a disk of radius 50 at (150, 100).
    let crescent = "M100 40 A60 60 0 1 0 136 148 A50 50 0 0 1 136 52 A60 60 0 0 0 100 40 Z";
    let original = CompoundPath::from_path_data(crescent, FillRule::NonZero, vb)?.subpaths.remove(0);
    let disk = "M100 40 A60 60 0 1 0 100 160 A60 60 0 1 0 100 40 Z";
    let completion = CompoundPath::from_path_data(disk, FillRule::NonZero, vb)?.subpaths.remove(0);

    let contacts = detect_contacts(&original, &completion, DEFAULT_CONTACT_EPSILON)?;
    println!("{} contact region(s)", contacts.len());
    let merged = merge_contours(&original, &completion, &contacts, DEFAULT_CONTACT_EPSILON)?;
    println!("merged contour: {} segments, provenance {:?}", merged.subpath.segments.len(), merged.provenance);
    println!("largest bridge joint angle {:.2e} rad", max_bridge_joint_angle(&merged));
    let out = std::env::temp_dir().join("iconstack_surgery.svg");
    std::fs::write(&out, debug_svg(&[merged], vb))?;
    println!("wrote {}", out.display());
    Ok(())
}
