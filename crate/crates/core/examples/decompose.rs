//! Full pipeline on a synthetic composite: refine, complete, merge, trace,
//! order, operate, and write the layered SVG.

use iconstack::mask_ops::iou;
use iconstack::pipeline::{decompose, render_layered, CompletionProvider, DecomposeConfig, MaskStack};
use iconstack::svg::{write_layered_svg_with, SvgWriteOptions};
use iconstack::synth::{builtin_library, sample_corpus_with, SamplerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SamplerConfig { parts: (3, 3), occluder_scale: (0.3, 0.6), accept: (0.1, 0.8), ..Default::default() };
    let gt = sample_corpus_with(&builtin_library(), 1, 3, &config)?.remove(0);
    let flattened = gt.flattened()?;
    let stack = MaskStack { silhouette: gt.composite_silhouette.clone(), labels: gt.label_map(), completions: Some(gt.amodal_masks.clone()) };
    let d = decompose(&flattened, &stack, CompletionProvider::ExternalFiles, &DecomposeConfig::default())?;
    let render = render_layered(&d.icon, 512, 512);
    println!("{} layers, order {:?}, ground truth {:?}", d.icon.layers.len(), d.solution.permutation, gt.order);
    println!("re-render IoU vs silhouette {:.4}", iou(&render, &gt.composite_silhouette)?);
    let out = std::env::temp_dir().join("iconstack_layers.svg");
    std::fs::write(&out, write_layered_svg_with(&d.icon, SvgWriteOptions { backing: true }))?;
    println!("wrote {}", out.display());
    Ok(())
}
