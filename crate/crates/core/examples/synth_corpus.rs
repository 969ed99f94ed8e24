//! Generate a small occlusion corpus and write it to a temporary directory.

use iconstack::synth::{builtin_library, sample_corpus_with, write_corpus, SamplerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SamplerConfig { canvas: 256, parts: (2, 3), ..Default::default() };
    let corpus = sample_corpus_with(&builtin_library(), 4, 42, &config)?;
    for (i, gt) in corpus.iter().enumerate() {
        println!("sample {i}: order {:?}, occlusion {:?}", gt.order, gt.occlusion_fraction.iter().map(|f| format!("{f:.2}")).collect::<Vec<_>>());
    }
    let dir = std::env::temp_dir().join("iconstack_corpus");
    let written = write_corpus(&dir, &corpus)?;
    println!("wrote {} samples under {}", written.len(), dir.display());
    Ok(())
}
