use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use iconstack::metrics::{scores_csv, DEFAULT_CHAMFER_SAMPLES};
use iconstack::ordering::{build_problem, dump_json, solve, FillSource, Weight};
use iconstack::pipeline::{decompose, evaluate_corpus, CompletionProvider, ConfigFile, FillMode, MaskStackManifest};
use iconstack::raster::png_io::read_mask;
use iconstack::raster::DEFAULT_RESOLUTION;
use iconstack::svg::{parse_svg, write_layered_svg_with, Layer, LayeredIcon, Rgb, SvgWriteOptions};
use iconstack::synth::{builtin_library, sample_corpus_with, write_corpus, SamplerConfig, DEFAULT_ACCEPT, DEFAULT_OCCLUDER_SCALE};
use iconstack::trace::{round_trip_iou, trace};

#[derive(Parser)]
#[command(name = "iconstack", version, about = "Recover ordered vector layers from flattened icons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a flattened SVG into an ordered layered SVG.
    Decompose {
        #[arg(long)]
        svg: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "external-files")]
        provider: CompletionProvider,
        /// Completion merge threshold.
        #[arg(long)]
        tau: Option<f64>,
        /// Visibility penalty weight, e.g. `1`, `0.5` or `3/2`.
        #[arg(long)]
        lambda: Option<Weight>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        debug_dir: Option<PathBuf>,
        /// TOML file with `[trace]`, `[cleanup]` and `[decompose]` tables.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Take ordering fill regions from the raw masks instead of the traced paths.
        #[arg(long)]
        raw_mask_fills: bool,
        #[arg(long)]
        no_surgery: bool,
        /// Omit the white backing path drawn under each layer.
        #[arg(long)]
        no_backing: bool,
    },
    /// Solve the layer order of a mask stack and print the JSON dump.
    Order {
        /// Manifest whose completions are the amodal masks.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "1")]
        lambda: Weight,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace a mask PNG to an SVG path.
    Trace {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML file with a `[trace]` table.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score layered SVGs against a synthetic corpus and write a CSV.
    Eval {
        /// Directory of `<sample>.svg` predictions.
        #[arg(long)]
        pred: PathBuf,
        /// Corpus directory written by `synth`.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CHAMFER_SAMPLES)]
        samples: usize,
        #[arg(long, env = "ICONSTACK_SEED", default_value_t = 0)]
        seed: u64,
        /// CSV path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic occlusion corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, env = "ICONSTACK_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "ICONSTACK_RESOLUTION", default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        #[arg(long, default_value_t = 2)]
        min_parts: usize,
        #[arg(long, default_value_t = 2)]
        max_parts: usize,
        #[arg(long, default_value_t = DEFAULT_ACCEPT.0)]
        accept_min: f64,
        #[arg(long, default_value_t = DEFAULT_ACCEPT.1)]
        accept_max: f64,
    },
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    Ok(match path {
        Some(p) => ConfigFile::read(p)?,
        None => ConfigFile::default(),
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Decompose { svg, manifest, provider, tau, lambda, out, debug_dir, config, raw_mask_fills, no_surgery, no_backing } => {
            let input = parse_svg(&fs::read(&svg).with_context(|| format!("reading {}", svg.display()))?)?;
            let (m, base) = MaskStackManifest::read(&manifest)?;
            let stack = m.load(&base, Some(&input))?;
            let mut cfg = load_config(config.as_deref())?.decompose_config()?;
            if let Some(t) = tau {
                cfg.tau = t;
            }
            if let Some(l) = lambda {
                cfg.lambda = l;
            }
            if raw_mask_fills {
                cfg.fill_mode = FillMode::RawMasks;
            }
            cfg.surgery = !no_surgery;
            cfg.debug_dir = debug_dir;
            let d = decompose(&input, &stack, provider, &cfg)?;
            let bytes = write_layered_svg_with(&d.icon, SvgWriteOptions { backing: !no_backing });
            write_out(Some(&out), &bytes)
        }
        Command::Order { manifest, lambda, out } => {
            let (m, base) = MaskStackManifest::read(&manifest)?;
            let stack = m.load(&base, None)?;
            let Some(amodal) = stack.completions else {
                bail!("order needs completions in the manifest");
            };
            let labels = stack.labels.max_label() as usize;
            if amodal.len() != labels {
                bail!("{} completions for {labels} labels", amodal.len());
            }
            let visible: Vec<_> = (1..=labels as u16).map(|l| stack.labels.mask_of(l)).collect();
            let problem = build_problem(&amodal, &visible, &stack.silhouette, FillSource::RawMasks, lambda)?;
            let solution = solve(&problem);
            write_out(out.as_deref(), dump_json(&problem, &solution).as_bytes())
        }
        Command::Trace { mask, out, config } => {
            let mask = read_mask(&mask).with_context(|| format!("reading {}", mask.display()))?;
            let tc = load_config(config.as_deref())?.trace.unwrap_or_default();
            let path = trace(&mask, &tc)?;
            eprintln!("round-trip IoU {:.6}", round_trip_iou(&mask, &tc)?);
            let icon = LayeredIcon { canvas: path.viewbox, layers: vec![Layer { path, fill: Rgb(0, 0, 0), z_index: 0 }], objective: None };
            write_out(Some(&out), &write_layered_svg_with(&icon, SvgWriteOptions::default()))
        }
        Command::Eval { pred, truth, samples, seed, out } => {
            let scores = evaluate_corpus(&pred, &truth, samples, seed)?;
            write_out(out.as_deref(), scores_csv(&scores)?.as_bytes())
        }
        Command::Synth { out, n, seed, resolution, min_parts, max_parts, accept_min, accept_max } => {
            let cfg = SamplerConfig {
                canvas: resolution,
                parts: (min_parts, max_parts),
                base_scale: (1.0, 1.0),
                occluder_scale: DEFAULT_OCCLUDER_SCALE,
                accept: (accept_min, accept_max),
            };
            let corpus = sample_corpus_with(&builtin_library(), n, seed, &cfg)?;
            let dirs = write_corpus(&out, &corpus)?;
            eprintln!("wrote {} samples to {}", dirs.len(), out.display());
            Ok(())
        }
    }
}
