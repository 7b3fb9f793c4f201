use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use texlab::pipeline::{self, LabelPaths, RunConfig};
use texlab::{Result, TexlabError};

/// Multiresolution texture attributes and superpixel structure labeling.
#[derive(Parser)]
#[command(name = "texlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags given here override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Attribute: amplitude, pyramid, dwt, gabor or curvelet [default: curvelet]
    #[arg(long = "attr")]
    attribute: Option<String>,
    /// Decomposition scales [default: 3]
    #[arg(long)]
    scales: Option<usize>,
    /// Gabor orientations [default: 4]
    #[arg(long)]
    orientations: Option<usize>,
    /// Patch side in pixels, odd [default: 99]
    #[arg(long)]
    patch_side: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one-vs-all SVMs from a folder of class subfolders
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset root holding one subfolder of PGM/SGRD patches per class
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Output model JSON
        #[arg(long)]
        model: Option<PathBuf>,
        /// SVM regularization C [default: 1.0]
        #[arg(long)]
        c: Option<f64>,
        /// Maximum training epochs [default: 200]
        #[arg(long)]
        epochs: Option<usize>,
        /// Shuffling seed [default: 7]
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Label a section superpixel by superpixel
    Label {
        #[command(flatten)]
        common: Common,
        /// Section image (PGM or SGRD)
        #[arg(long)]
        section: Option<PathBuf>,
        /// Trained model JSON
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output label map (SGRD of class ids)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output PPM overlay in the class palette
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Also write <PREFIX>_superpixels.sgrd and <PREFIX>_boundaries.pgm
        #[arg(long, value_name = "PREFIX")]
        dump_superpixels: Option<PathBuf>,
        /// Target superpixel count [default: pixels / 2500]
        #[arg(long)]
        superpixels: Option<usize>,
        /// SLIC compactness [default: 10]
        #[arg(long)]
        compactness: Option<f64>,
    },
    /// Score predicted label maps against references
    Eval {
        #[command(flatten)]
        common: Common,
        /// Predicted label map; repeat together with --ref
        #[arg(long = "pred", required = true)]
        pred: Vec<PathBuf>,
        /// Reference label map, paired with --pred in order
        #[arg(long = "ref", required = true)]
        reference: Vec<PathBuf>,
        /// Also report the per-metric mean over all pairs
        #[arg(long)]
        average: bool,
        /// Write the report JSON here (the table always goes to stdout)
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Dump every subband of an image as SGRD plus index.json
    Decompose {
        #[command(flatten)]
        common: Common,
        /// Input image (PGM or SGRD)
        #[arg(long)]
        image: PathBuf,
        /// Output directory
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write feature vectors of patches as CSV (label or -1, values...)
    Features {
        #[command(flatten)]
        common: Common,
        /// Output CSV
        #[arg(long)]
        out: PathBuf,
        /// Patch files, or dataset roots whose class folders supply labels
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(a) = &common.attribute {
        cfg.attribute = pipeline::parse_attribute(a)?;
    }
    if let Some(v) = common.scales {
        cfg.scales = v;
    }
    if let Some(v) = common.orientations {
        cfg.orientations = v;
    }
    if let Some(v) = common.patch_side {
        cfg.patch_side = v;
    }
    Ok(cfg)
}

fn required(value: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    value.ok_or_else(|| TexlabError::Config(format!("no {what} given on the command line or in the config")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            common,
            dataset,
            model,
            c,
            epochs,
            seed,
        } => {
            let mut cfg = base_config(&common)?;
            cfg.svm_c = c.unwrap_or(cfg.svm_c);
            cfg.epochs = epochs.unwrap_or(cfg.epochs);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.validate()?;
            let dataset = required(dataset.or(cfg.dataset.clone()), "dataset")?;
            let model = required(model.or(cfg.model.clone()), "model path")?;
            let summary = pipeline::cmd_train(&cfg, &dataset, &model)?;
            for (id, name, count) in &summary.counts {
                println!("class {id} {name}: {count} patches");
            }
            println!(
                "wrote {} ({} features, {} classes)",
                model.display(),
                summary.model.feature_len,
                summary.model.classes.len()
            );
        }
        Command::Label {
            common,
            section,
            model,
            out,
            overlay,
            dump_superpixels,
            superpixels,
            compactness,
        } => {
            let mut cfg = base_config(&common)?;
            if superpixels.is_some() {
                cfg.superpixels = superpixels;
            }
            cfg.compactness = compactness.unwrap_or(cfg.compactness);
            cfg.validate()?;
            let section = required(section.or(cfg.section.clone()), "section")?;
            let model = required(model.or(cfg.model.clone()), "model")?;
            let out = required(out.or(cfg.output.clone()), "output path")?;
            let paths = LabelPaths {
                labels: out.clone(),
                overlay,
                superpixel_prefix: dump_superpixels,
            };
            let outcome = pipeline::cmd_label(&cfg, &section, &model, &paths)?;
            println!(
                "labeled {} superpixels, wrote {}",
                outcome.superpixels.count,
                out.display()
            );
        }
        Command::Eval {
            common,
            pred,
            reference,
            average,
            json,
        } => {
            let cfg = base_config(&common)?;
            cfg.validate()?;
            if pred.len() != reference.len() {
                return Err(TexlabError::Argument(format!(
                    "{} --pred maps but {} --ref maps",
                    pred.len(),
                    reference.len()
                )));
            }
            let pairs: Vec<_> = pred.into_iter().zip(reference).collect();
            let report = pipeline::cmd_eval(&cfg, &pairs, average)?;
            print!("{}", report.to_table());
            if let Some(p) = json {
                std::fs::write(&p, report.to_json()).map_err(|e| TexlabError::Io { path: p, source: e })?;
            }
        }
        Command::Decompose { common, image, out_dir } => {
            let cfg = base_config(&common)?;
            let index = pipeline::cmd_decompose(&cfg, &image, &out_dir)?;
            println!("wrote {} subbands to {}", index.len(), out_dir.display());
        }
        Command::Features { common, out, inputs } => {
            let cfg = base_config(&common)?;
            let n = pipeline::cmd_features(&cfg, &inputs, &out)?;
            println!("wrote {n} feature rows to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("texlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
