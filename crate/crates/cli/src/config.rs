//! Flat key=value configuration with documented defaults.
//!
//! Precedence is flags > file > defaults; the file is named by `--config`
//! or the `STEREOKIT_CONFIG` environment variable. Lines starting with
//! `#` are comments; unknown keys are rejected.

use std::fs;
use std::path::Path;

use stereokit_core::dispvol::{DEFAULT_D_MAX, DEFAULT_D_MIN, DEFAULT_N};
use stereokit_core::losses::{
    LossWeights, DEFAULT_ALPHA_DC, DEFAULT_ALPHA_DM, DEFAULT_ALPHA_DS, DEFAULT_ALPHA_P,
};
use stereokit_core::matting::MattingParams;
use stereokit_core::metrics::DEFAULT_CAP;

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub d_min: f64,
    pub d_max: f64,
    pub n_planes: usize,
    pub window_radius: usize,
    pub eps: f64,
    pub lambda: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub alpha_p: f64,
    pub alpha_ds: f64,
    pub alpha_dm: f64,
    pub alpha_dc: f64,
    pub corr_window: usize,
    pub cap: f64,
    pub median_scale: bool,
    pub npe_hidden: usize,
    pub npe_out: usize,
    pub npe_seed: u64,
    pub feat_seed: u64,
    pub jobs: usize,
}

impl Default for Config {
    fn default() -> Self {
        let m = MattingParams::default();
        Config {
            d_min: DEFAULT_D_MIN,
            d_max: DEFAULT_D_MAX,
            n_planes: DEFAULT_N,
            window_radius: m.window_radius,
            eps: m.eps,
            lambda: m.lambda,
            cg_tol: m.cg_tol,
            cg_max_iter: m.cg_max_iter,
            alpha_p: DEFAULT_ALPHA_P,
            alpha_ds: DEFAULT_ALPHA_DS,
            alpha_dm: DEFAULT_ALPHA_DM,
            alpha_dc: DEFAULT_ALPHA_DC,
            corr_window: 3,
            cap: DEFAULT_CAP,
            median_scale: false,
            npe_hidden: 16,
            npe_out: 16,
            npe_seed: 0,
            feat_seed: 0,
            jobs: 1,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("config key {key}: cannot parse {value:?}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("config key {key}: expected a boolean, got {other:?}")),
    }
}

impl Config {
    /// Applies `key = value` lines from `text` on top of `self`.
    /// Later lines win over earlier ones.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got {raw:?}", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "d_min" => self.d_min = parse_value(key, value)?,
                "d_max" => self.d_max = parse_value(key, value)?,
                "n_planes" => self.n_planes = parse_value(key, value)?,
                "window_radius" => self.window_radius = parse_value(key, value)?,
                "eps" => self.eps = parse_value(key, value)?,
                "lambda" => self.lambda = parse_value(key, value)?,
                "cg_tol" => self.cg_tol = parse_value(key, value)?,
                "cg_max_iter" => self.cg_max_iter = parse_value(key, value)?,
                "alpha_p" => self.alpha_p = parse_value(key, value)?,
                "alpha_ds" => self.alpha_ds = parse_value(key, value)?,
                "alpha_dm" => self.alpha_dm = parse_value(key, value)?,
                "alpha_dc" => self.alpha_dc = parse_value(key, value)?,
                "corr_window" => self.corr_window = parse_value(key, value)?,
                "cap" => self.cap = parse_value(key, value)?,
                "median_scale" => self.median_scale = parse_bool(key, value)?,
                "npe_hidden" => self.npe_hidden = parse_value(key, value)?,
                "npe_out" => self.npe_out = parse_value(key, value)?,
                "npe_seed" => self.npe_seed = parse_value(key, value)?,
                "feat_seed" => self.feat_seed = parse_value(key, value)?,
                "jobs" => self.jobs = parse_value(key, value)?,
                other => return Err(format!("unknown config key {other:?}")),
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Config, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg = Config::default();
        cfg.apply_text(&text)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(cfg)
    }

    pub fn matting_params(&self) -> MattingParams {
        MattingParams {
            window_radius: self.window_radius,
            eps: self.eps,
            lambda: self.lambda,
            cg_tol: self.cg_tol,
            cg_max_iter: self.cg_max_iter,
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            alpha_p: self.alpha_p,
            alpha_ds: self.alpha_ds,
            alpha_dm: self.alpha_dm,
            alpha_dc: self.alpha_dc,
        }
    }
}
