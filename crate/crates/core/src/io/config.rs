//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are an error so
//! typos do not silently fall back to defaults.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matching::{MatchConfig, Metric};
use crate::pipeline::{AltitudeRule, PipelineConfig, ScoreField, DEFAULT_MIN_ALTITUDE, DEFAULT_MIN_AREA, SNAP_TOLERANCE};

/// Which overlaps enter an S-IoU match set.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum MatchSetRule {
    /// Every pair with positive intersection area.
    #[default]
    AnyOverlap,
    /// Additionally require intersection / label area ≥ the fraction.
    LabelFraction(f64),
}

impl FromStr for MatchSetRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "any" {
            return Ok(MatchSetRule::AnyOverlap);
        }
        match s.strip_prefix("label_fraction:").map(str::parse::<f64>) {
            Some(Ok(f)) if f > 0.0 && f <= 1.0 => Ok(MatchSetRule::LabelFraction(f)),
            _ => Err(Error::InvalidArgument(format!(
                "match_set_rule must be `any` or `label_fraction:<f>` with f in (0, 1], got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for MatchSetRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatchSetRule::AnyOverlap => f.write_str("any"),
            MatchSetRule::LabelFraction(x) => write!(f, "label_fraction:{x}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub metric: Metric,
    pub overlap_threshold: f64,
    pub theta: f64,
    pub min_altitude: f64,
    pub altitude_rule: AltitudeRule,
    pub min_area: f64,
    /// `None` means "not given"; resolves to max unless `strict` is set.
    pub score_field: Option<ScoreField>,
    pub match_set_rule: MatchSetRule,
    pub exclusive_labels: bool,
    pub snap_tolerance: f64,
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            metric: Metric::SIoU,
            overlap_threshold: 0.5,
            theta: 0.5,
            min_altitude: DEFAULT_MIN_ALTITUDE,
            altitude_rule: AltitudeRule::Max,
            min_area: DEFAULT_MIN_AREA,
            score_field: None,
            match_set_rule: MatchSetRule::AnyOverlap,
            exclusive_labels: false,
            snap_tolerance: SNAP_TOLERANCE,
            strict: false,
        }
    }
}

fn parse_value<V: FromStr>(key: &str, value: &str) -> std::result::Result<V, String> {
    value.parse().map_err(|_| format!("bad value {value:?} for `{key}`"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("bad boolean {value:?} for `{key}`")),
    }
}

impl RunConfig {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: {message}", n + 1),
            };
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value).map_err(bad)?;
        }
        cfg.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "metric" => self.metric = value.parse().map_err(|e: Error| e.to_string())?,
            "overlap_threshold" => self.overlap_threshold = parse_value(key, value)?,
            "theta" | "score_threshold" => self.theta = parse_value(key, value)?,
            "min_altitude" => self.min_altitude = parse_value(key, value)?,
            "altitude_rule" => self.altitude_rule = value.parse().map_err(|e: Error| e.to_string())?,
            "min_area" => self.min_area = parse_value(key, value)?,
            "score_field" => self.score_field = Some(value.parse().map_err(|e: Error| e.to_string())?),
            "match_set_rule" => self.match_set_rule = value.parse().map_err(|e: Error| e.to_string())?,
            "exclusive_labels" => self.exclusive_labels = parse_bool(key, value)?,
            "snap_tolerance" => self.snap_tolerance = parse_value(key, value)?,
            "strict" => self.strict = parse_bool(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.match_config()?;
        if !self.min_altitude.is_finite() {
            return Err(Error::InvalidArgument("min_altitude must be finite".into()));
        }
        if !(self.min_area >= 0.0) || !self.min_area.is_finite() {
            return Err(Error::InvalidArgument(format!("min_area must be >= 0, got {}", self.min_area)));
        }
        if !(self.snap_tolerance >= 0.0) || !self.snap_tolerance.is_finite() {
            return Err(Error::InvalidArgument(format!("snap_tolerance must be >= 0, got {}", self.snap_tolerance)));
        }
        self.resolved_score_field()?;
        Ok(())
    }

    /// In strict mode the score field has to be stated explicitly.
    pub fn resolved_score_field(&self) -> Result<ScoreField> {
        match (self.score_field, self.strict) {
            (Some(f), _) => Ok(f),
            (None, false) => Ok(ScoreField::Max),
            (None, true) => Err(Error::InvalidArgument("strict mode requires an explicit score_field".into())),
        }
    }

    pub fn match_config(&self) -> Result<MatchConfig> {
        let mut m = MatchConfig::new(self.metric, self.overlap_threshold, self.theta)?;
        if let MatchSetRule::LabelFraction(f) = self.match_set_rule {
            m.min_label_fraction = f;
        }
        m.exclusive_labels = self.exclusive_labels;
        m.validate()?;
        Ok(m)
    }

    pub fn pipeline_config(&self, workers: usize) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            min_altitude: self.min_altitude,
            altitude_rule: self.altitude_rule,
            min_area: self.min_area,
            score_field: self.resolved_score_field()?,
            theta: self.theta,
            snap_tolerance: self.snap_tolerance,
            workers: workers.max(1),
        })
    }

    /// Writes every key, so the output reloads to an equal config.
    pub fn format(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "metric = {}", self.metric.to_string().to_ascii_lowercase().replace('-', ""));
        let _ = writeln!(s, "overlap_threshold = {}", self.overlap_threshold);
        let _ = writeln!(s, "theta = {}", self.theta);
        let _ = writeln!(s, "min_altitude = {}", self.min_altitude);
        let _ = writeln!(s, "altitude_rule = {}", self.altitude_rule);
        let _ = writeln!(s, "min_area = {}", self.min_area);
        if let Some(f) = self.score_field {
            let _ = writeln!(s, "score_field = {f}");
        }
        let _ = writeln!(s, "match_set_rule = {}", self.match_set_rule);
        let _ = writeln!(s, "exclusive_labels = {}", self.exclusive_labels);
        let _ = writeln!(s, "snap_tolerance = {}", self.snap_tolerance);
        let _ = writeln!(s, "strict = {}", self.strict);
        s
    }
}
