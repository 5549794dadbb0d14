//! `gom`: build query-filtered scene graphs, draw them onto images and emit
//! multimodal prompts.

mod artifacts;
mod batch;
mod eval_rec;
mod options;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use gom_core::Pipeline;

use artifacts::Request;
use options::ConfigArgs;

#[derive(Debug, Parser)]
#[command(name = "gom", version, about = "Scene-graph visual prompting for multimodal models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Annotate one image and write annotated.png, scene_graph.json, prompt.json and layout.json.
    Annotate {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        /// 8/16-bit binary PGM, higher = nearer. Depth relations are skipped without it.
        #[arg(long)]
        depth: Option<PathBuf>,
        #[arg(long)]
        query: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score referring-expression predictions (mark IDs) against ground-truth boxes.
    EvalRec {
        /// JSON lines: {"item": ..., "predicted_id": ...}
        #[arg(long)]
        predictions: PathBuf,
        /// `ITEM=scene_graph.json`, or a path whose parent directory is the item name.
        #[arg(long = "graph", required = true)]
        graphs: Vec<String>,
        /// JSON lines: {"item": ..., "box": [x_min, y_min, x_max, y_max]}
        #[arg(long)]
        ground_truth: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Annotate every row of a JSON-lines manifest.
    Batch {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn pipeline(config: &ConfigArgs) -> Result<Pipeline> {
    let cfg = config.pipeline_config().context("config")?;
    let res = config.resources().context("resources")?;
    Ok(Pipeline::new(cfg, res)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Annotate {
            image,
            detections,
            depth,
            query,
            out,
            config,
        } => {
            let p = pipeline(&config)?;
            let req = Request {
                image,
                detections,
                depth,
                query,
            };
            let report = artifacts::annotate(&p, &req, &out)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", serde_json::to_string(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::EvalRec {
            predictions,
            graphs,
            ground_truth,
            out,
        } => {
            let report = eval_rec::evaluate(&predictions, &graphs, &ground_truth)?;
            let text = serde_json::to_string_pretty(&report)? + "\n";
            match out {
                Some(path) => artifacts::write_atomic(&path, text.as_bytes())?,
                None => print!("{text}"),
            }
            for item in report.items.iter().filter(|i| !i.flags.is_empty()) {
                eprintln!("warning: {}: {}", item.item, item.flags.join(", "));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Batch {
            manifest,
            out,
            workers,
            config,
        } => {
            let p = pipeline(&config)?;
            let summary = batch::run(&p, &manifest, &out, workers.max(1))?;
            let text = serde_json::to_string_pretty(&summary)? + "\n";
            artifacts::write_atomic(&out.join("summary.json"), text.as_bytes())?;
            print!("{text}");
            for row in summary.rows.iter().filter(|r| !r.ok) {
                eprintln!(
                    "error: row {}: {}",
                    row.index,
                    row.error.as_deref().unwrap_or("")
                );
            }
            Ok(if summary.failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
