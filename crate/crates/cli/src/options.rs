use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use gom_core::filtering::{RelationLexicon, Stopwords, SynonymLexicon, WordVectorTable};
use gom_core::{FilterResources, PipelineConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum IdStyleArg {
    Numeric,
    Textual,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PromptModeArg {
    Visual,
    VisualTextual,
}

/// Configuration flags shared by `annotate` and `batch`.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat TOML config file; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any config key, e.g. `--set mask_alpha=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub tau_od_min_conf: Option<f64>,
    #[arg(long)]
    pub tau_overlap_iou: Option<f64>,
    #[arg(long)]
    pub tau_dir_margin: Option<f64>,
    #[arg(long)]
    pub tau_z_diff: Option<f64>,
    #[arg(long)]
    pub tau_near: Option<f64>,
    #[arg(long)]
    pub tau_touch_iou: Option<f64>,
    #[arg(long)]
    pub tau_touch_gap: Option<f64>,
    #[arg(long)]
    pub tau_v_close: Option<f64>,
    #[arg(long)]
    pub tau_close: Option<f64>,
    #[arg(long)]
    pub tau_query_obj: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub id_style: Option<IdStyleArg>,
    #[arg(long, value_enum)]
    pub relation_labels: Option<Toggle>,
    #[arg(long, value_enum)]
    pub prompt_mode: Option<PromptModeArg>,
    /// Class synonym lexicon (JSON: class -> aliases).
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// Relation trigger lexicon (JSON: label -> phrases).
    #[arg(long)]
    pub relation_lexicon: Option<PathBuf>,
    /// Word vectors, one `token v1 v2 ...` row per line.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Stopword list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

impl ConfigArgs {
    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::from_toml_str(&read(p)?)
                .with_context(|| format!("config {}", p.display()))?,
            None => PipelineConfig::default(),
        };
        for kv in &self.overrides {
            let (key, value) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            cfg.set(key.trim(), value.trim())?;
        }
        let floats = [
            ("tau_od_min_conf", self.tau_od_min_conf),
            ("tau_overlap_iou", self.tau_overlap_iou),
            ("tau_dir_margin", self.tau_dir_margin),
            ("tau_z_diff", self.tau_z_diff),
            ("tau_near", self.tau_near),
            ("tau_touch_iou", self.tau_touch_iou),
            ("tau_touch_gap", self.tau_touch_gap),
            ("tau_v_close", self.tau_v_close),
            ("tau_close", self.tau_close),
            ("tau_query_obj", self.tau_query_obj),
        ];
        for (key, value) in floats {
            if let Some(v) = value {
                cfg.set(key, &format!("{v:?}"))?;
            }
        }
        if let Some(k) = self.k {
            cfg.set("k", &k.to_string())?;
        }
        if let Some(s) = self.id_style {
            cfg.set("id_style", &format!("{:?}", s).to_lowercase())?;
        }
        if let Some(t) = self.relation_labels {
            cfg.set(
                "render_relation_labels",
                if matches!(t, Toggle::On) {
                    "true"
                } else {
                    "false"
                },
            )?;
        }
        if let Some(m) = self.prompt_mode {
            let v = match m {
                PromptModeArg::Visual => "visual",
                PromptModeArg::VisualTextual => "visual_textual",
            };
            cfg.set("prompt_mode", v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resources(&self) -> Result<FilterResources> {
        let mut res = FilterResources::default();
        if let Some(p) = &self.synonyms {
            res.synonyms = SynonymLexicon::from_json(&read(p)?)
                .with_context(|| format!("synonyms {}", p.display()))?;
        }
        if let Some(p) = &self.relation_lexicon {
            res.relations = RelationLexicon::from_json(&read(p)?)
                .with_context(|| format!("relation lexicon {}", p.display()))?;
        }
        if let Some(p) = &self.vectors {
            res.vectors = WordVectorTable::parse(&read(p)?)
                .with_context(|| format!("vectors {}", p.display()))?;
        }
        if let Some(p) = &self.stopwords {
            res.stopwords = Stopwords::parse(&read(p)?);
        }
        Ok(res)
    }
}
