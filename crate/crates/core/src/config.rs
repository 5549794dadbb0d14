//! Pipeline configuration: every threshold, the filtering budget `k`, and
//! the rendering style. Loaded from a flat TOML key/value file; any key can
//! be overridden individually.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::IdStyle;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    #[default]
    Visual,
    VisualTextual,
}

/// Where linear distance thresholds are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Rescale both axes into a `reference_frame_size` square first.
    #[default]
    ReferenceFrame,
    Pixel,
}

/// How `tau_near` is compared against the center distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NearMetric {
    #[default]
    Squared,
    Linear,
}

/// Fused confidence of a box cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreWeighting {
    #[default]
    Mean,
    /// Confidence-weighted mean, `sum(c^2) / sum(c)`.
    WeightedMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupScope {
    /// One edge per unordered object pair.
    #[default]
    Pair,
    /// One edge per unordered pair and relation group.
    PairAndGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderStyle {
    pub mask_alpha: f64,
    pub border_width_px: u32,
    /// Fixed glyph height; unset means `max(12, 0.018 * min(W, H))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub font_size_px: Option<u32>,
    pub arrow_width_px: u32,
    pub label_padding_px: u32,
    pub resolver_step_px: u32,
    pub resolver_max_iters: u32,
    pub palette_seed: u64,
    pub arrow_base_bend_px: f64,
    pub arrow_bend_step_px: f64,
    pub similar_direction_deg: f64,
    pub arrow_endpoint_gap_px: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            mask_alpha: 0.35,
            border_width_px: 3,
            font_size_px: None,
            arrow_width_px: 2,
            label_padding_px: 3,
            resolver_step_px: 4,
            resolver_max_iters: 200,
            palette_seed: 0,
            arrow_base_bend_px: 16.0,
            arrow_bend_step_px: 12.0,
            similar_direction_deg: 30.0,
            arrow_endpoint_gap_px: 4.0,
        }
    }
}

impl RenderStyle {
    pub fn font_px(&self, width: u32, height: u32) -> u32 {
        self.font_size_px.unwrap_or_else(|| {
            let scaled = 0.018 * width.min(height) as f64;
            scaled.max(12.0).round() as u32
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub tau_od_min_conf: f64,
    pub tau_overlap_iou: f64,
    pub tau_dir_margin: f64,
    pub tau_z_diff: f64,
    pub tau_near: f64,
    pub tau_touch_iou: f64,
    pub tau_touch_gap: f64,
    pub tau_v_close: f64,
    pub tau_close: f64,
    pub tau_query_obj: f64,
    pub k: usize,
    pub id_style: IdStyle,
    pub render_relation_labels: bool,
    pub prompt_mode: PromptMode,
    pub distance_mode: DistanceMode,
    pub reference_frame_size: f64,
    pub near_metric: NearMetric,
    pub score_weighting: ScoreWeighting,
    pub dedup_scope: DedupScope,
    #[serde(flatten)]
    pub style: RenderStyle,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau_od_min_conf: 0.5,
            tau_overlap_iou: 0.9,
            tau_dir_margin: 20.0,
            tau_z_diff: 0.1,
            tau_near: 5000.0,
            tau_touch_iou: 0.1,
            tau_touch_gap: 3.0,
            tau_v_close: 0.05,
            tau_close: 0.12,
            tau_query_obj: 0.5,
            k: 3,
            id_style: IdStyle::Numeric,
            render_relation_labels: true,
            prompt_mode: PromptMode::Visual,
            distance_mode: DistanceMode::ReferenceFrame,
            reference_frame_size: 1000.0,
            near_metric: NearMetric::Squared,
            score_weighting: ScoreWeighting::Mean,
            dedup_scope: DedupScope::Pair,
            style: RenderStyle::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        let known = Self::default().to_table();
        let style_keys = ["font_size_px"];
        if let Some(key) = table
            .keys()
            .find(|k| !known.contains_key(*k) && !style_keys.contains(&k.as_str()))
        {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        let cfg: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn to_table(&self) -> toml::Table {
        match toml::Value::try_from(self).expect("config serializes") {
            toml::Value::Table(t) => t,
            _ => unreachable!("config serializes to a table"),
        }
    }

    /// Flat TOML dump of every key.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Override one key. `value` is read as a TOML scalar, falling back to a
    /// bare string (so `id_style=textual` works unquoted).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let mut table = self.to_table();
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        table.insert(key.to_string(), parsed);
        *self = Self::from_table(table)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn unit(key: &'static str, v: f64) -> Result<(), ConfigError> {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::Invalid {
                    key,
                    reason: format!("{v} not in [0, 1]"),
                });
            }
            Ok(())
        }
        fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Invalid {
                    key,
                    reason: format!("{v} must be a positive finite number"),
                });
            }
            Ok(())
        }
        unit("tau_od_min_conf", self.tau_od_min_conf)?;
        unit("tau_overlap_iou", self.tau_overlap_iou)?;
        unit("tau_z_diff", self.tau_z_diff)?;
        unit("tau_touch_iou", self.tau_touch_iou)?;
        unit("tau_query_obj", self.tau_query_obj)?;
        positive("tau_dir_margin", self.tau_dir_margin)?;
        positive("tau_near", self.tau_near)?;
        positive("tau_touch_gap", self.tau_touch_gap)?;
        positive("tau_v_close", self.tau_v_close)?;
        positive("tau_close", self.tau_close)?;
        positive("reference_frame_size", self.reference_frame_size)?;
        if self.k == 0 {
            return Err(ConfigError::Invalid {
                key: "k",
                reason: "k must be at least 1".into(),
            });
        }
        let s = &self.style;
        if !(s.mask_alpha > 0.0 && s.mask_alpha < 1.0) {
            return Err(ConfigError::Invalid {
                key: "mask_alpha",
                reason: format!("{} not in (0, 1)", s.mask_alpha),
            });
        }
        for (key, v) in [
            ("border_width_px", s.border_width_px),
            ("arrow_width_px", s.arrow_width_px),
            ("resolver_step_px", s.resolver_step_px),
            ("resolver_max_iters", s.resolver_max_iters),
        ] {
            if v == 0 {
                return Err(ConfigError::Invalid {
                    key,
                    reason: "must be positive".into(),
                });
            }
        }
        if s.font_size_px == Some(0) {
            return Err(ConfigError::Invalid {
                key: "font_size_px",
                reason: "must be positive".into(),
            });
        }
        positive("similar_direction_deg", s.similar_direction_deg)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(
            PipelineConfig::from_toml_str("").unwrap(),
            PipelineConfig::default()
        );
    }

    #[test]
    fn dump_round_trips() {
        let cfg = PipelineConfig::default();
        let back = PipelineConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn integer_literals_accepted_for_reals() {
        let cfg = PipelineConfig::from_toml_str("tau_near = 7000\nmask_alpha = 0.5").unwrap();
        assert_eq!(cfg.tau_near, 7000.0);
        assert_eq!(cfg.style.mask_alpha, 0.5);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            PipelineConfig::from_toml_str("tau_nearr = 1"),
            Err(ConfigError::UnknownKey(k)) if k == "tau_nearr"
        ));
    }

    #[test]
    fn overrides() {
        let mut cfg = PipelineConfig::default();
        cfg.set("k", "5").unwrap();
        cfg.set("id_style", "textual").unwrap();
        cfg.set("font_size_px", "20").unwrap();
        cfg.set("prompt_mode", "\"visual_textual\"").unwrap();
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.id_style, IdStyle::Textual);
        assert_eq!(cfg.style.font_size_px, Some(20));
        assert_eq!(cfg.prompt_mode, PromptMode::VisualTextual);
        assert!(cfg.set("k", "0").is_err());
        assert!(cfg.set("mask_alpha", "1.0").is_err());
    }

    #[test]
    fn font_scaling() {
        let s = RenderStyle::default();
        assert_eq!(s.font_px(200, 200), 12);
        assert_eq!(s.font_px(1024, 768), 14);
        assert_eq!(s.font_px(4000, 2000), 36);
    }
}
