use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filters::{BpdnDfParams, LsmParams, PredictionNorm};
use crate::solvers::SolverSettings;
use crate::synthetic::SyntheticConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Bpdn,
    Rwl1,
    BpdnDf,
    Rwl1Df,
    Kalman,
}

impl Algorithm {
    pub const SPARSE: [Algorithm; 4] = [Self::Bpdn, Self::Rwl1, Self::BpdnDf, Self::Rwl1Df];

    pub fn tag(self) -> &'static str {
        match self {
            Self::Bpdn => "bpdn",
            Self::Rwl1 => "rwl1",
            Self::BpdnDf => "bpdn-df",
            Self::Rwl1Df => "rwl1-df",
            Self::Kalman => "kalman",
        }
    }

    /// Parses a comma-separated list, keeping the canonical order and
    /// dropping duplicates.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        let mut out: Vec<Self> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Config("algorithm list is empty".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpdn" => Ok(Self::Bpdn),
            "rwl1" => Ok(Self::Rwl1),
            "bpdn-df" | "bpdndf" => Ok(Self::BpdnDf),
            "rwl1-df" | "rwl1df" => Ok(Self::Rwl1Df),
            "kalman" => Ok(Self::Kalman),
            other => Err(Error::Config(format!(
                "unknown algorithm '{other}' (expected bpdn, rwl1, bpdn-df, rwl1-df, kalman)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Synthetic,
    SweepM,
    SweepP,
    Video,
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Self::Synthetic),
            "sweep-m" => Ok(Self::SweepM),
            "sweep-p" => Ok(Self::SweepP),
            "video" => Ok(Self::Video),
            other => Err(Error::Config(format!("unknown experiment kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoConfig {
    pub yuv_path: PathBuf,
    pub width: usize,
    pub height: usize,
    /// Side of the centered square crop; a power of two.
    pub crop: usize,
    pub frames: usize,
    pub m_over_n: f64,
    pub wavelet_taps: usize,
    pub wavelet_levels: usize,
    /// Measurement noise variance (the video runs are noise-free by default).
    pub noise_var: f64,
}

impl Default for VideoConfig {
    fn default() -> Self {
        Self {
            yuv_path: PathBuf::from("foreman.yuv"),
            width: 352,
            height: 288,
            crop: 64,
            frames: 30,
            m_over_n: 0.27,
            wavelet_taps: 4,
            wavelet_levels: 4,
            noise_var: 0.0,
        }
    }
}

impl VideoConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.crop.is_power_of_two() {
            return Err(Error::Config(format!(
                "crop {} is not a power of two",
                self.crop
            )));
        }
        if self.crop > self.width || self.crop > self.height {
            return Err(Error::Config(format!(
                "crop {} exceeds frame {}x{}",
                self.crop, self.width, self.height
            )));
        }
        if !self.width.is_multiple_of(2) || !self.height.is_multiple_of(2) {
            return Err(Error::Config(
                "4:2:0 frames need even width and height".into(),
            ));
        }
        if !(self.m_over_n > 0.0 && self.m_over_n <= 1.0) {
            return Err(Error::Config(format!(
                "m_over_n {} outside (0, 1]",
                self.m_over_n
            )));
        }
        if self.frames == 0 {
            return Err(Error::Config("frames must be at least 1".into()));
        }
        if !(self.noise_var >= 0.0) {
            return Err(Error::Config(
                "video noise variance must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn pixels(&self) -> usize {
        self.crop * self.crop
    }

    pub fn measurements(&self) -> usize {
        ((self.m_over_n * self.pixels() as f64).round() as usize).clamp(1, self.pixels())
    }
}

/// Resolved per-algorithm parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgorithmParams {
    pub bpdn_lambda: f64,
    pub rwl1: LsmParams<f64>,
    pub bpdn_df: BpdnDfParams<f64>,
    pub rwl1_df: LsmParams<f64>,
    /// Diagonal process noise of the Kalman baseline.
    pub kalman_process_var: f64,
    /// Diagonal initial covariance of the Kalman baseline.
    pub kalman_prior_var: f64,
}

impl AlgorithmParams {
    /// Defaults for the synthetic experiment; several depend on `σ²`, `p`
    /// and `S`.
    pub fn synthetic(cfg: &SyntheticConfig) -> Self {
        let var = cfg.noise_var;
        let p = cfg.p as f64;
        let s = cfg.s.max(1) as f64;
        let n = cfg.n as f64;
        let mut rwl1 = LsmParams::new(0.0011, 1.0, 1.0, 0.01);
        rwl1.em_iters = 10;
        Self {
            bpdn_lambda: 0.55 * var,
            rwl1,
            bpdn_df: BpdnDfParams {
                gamma: 0.5 * var,
                kappa: 0.001 / (p + 1.0),
                q: PredictionNorm::L1,
            },
            rwl1_df: LsmParams::new(0.0011, 1.0, 1.0, 1.0 - 2.0 * p / s),
            kalman_process_var: (2.0 * p).max(1.0) / n,
            kalman_prior_var: s / n,
        }
    }

    /// Defaults for the video experiment with an orthonormal DWT.
    pub fn video() -> Self {
        Self {
            bpdn_lambda: 0.01,
            rwl1: LsmParams::new(0.001, 0.05, 0.05, 0.1),
            bpdn_df: BpdnDfParams {
                gamma: 0.01,
                kappa: 0.4,
                q: PredictionNorm::L2,
            },
            rwl1_df: LsmParams::new(0.001, 0.2, 1.0, 0.2),
            kalman_process_var: 1e-3,
            kalman_prior_var: 1.0,
        }
    }

    /// Applies `section.name` overrides such as `rwl1df.tau`.
    pub fn with_overrides(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        for (key, &v) in overrides {
            let as_count = || -> Result<usize> {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::Config(format!(
                        "{key} must be a positive integer, got {v}"
                    )))
                }
            };
            match key.as_str() {
                "bpdn.lambda" => self.bpdn_lambda = v,
                "rwl1.lambda0" => self.rwl1.lambda0 = v,
                "rwl1.tau" => self.rwl1.tau = v,
                "rwl1.beta" => self.rwl1.beta = v,
                "rwl1.eta" => self.rwl1.eta = v,
                "rwl1.em_iters" => self.rwl1.em_iters = as_count()?,
                "rwl1df.lambda0" => self.rwl1_df.lambda0 = v,
                "rwl1df.tau" => self.rwl1_df.tau = v,
                "rwl1df.beta" => self.rwl1_df.beta = v,
                "rwl1df.eta" => self.rwl1_df.eta = v,
                "rwl1df.em_iters" => self.rwl1_df.em_iters = as_count()?,
                "bpdndf.gamma" => self.bpdn_df.gamma = v,
                "bpdndf.kappa" => self.bpdn_df.kappa = v,
                "bpdndf.q" => self.bpdn_df.q = PredictionNorm::from_q(as_count()? as u32)?,
                "kalman.process_var" => self.kalman_process_var = v,
                "kalman.prior_var" => self.kalman_prior_var = v,
                other => return Err(Error::Config(format!("unknown parameter key '{other}'"))),
            }
        }
        Ok(self)
    }
}

const PARAM_KEYS: &[&str] = &[
    "bpdn.lambda",
    "rwl1.lambda0",
    "rwl1.tau",
    "rwl1.beta",
    "rwl1.eta",
    "rwl1.em_iters",
    "rwl1df.lambda0",
    "rwl1df.tau",
    "rwl1df.beta",
    "rwl1df.eta",
    "rwl1df.em_iters",
    "bpdndf.gamma",
    "bpdndf.kappa",
    "bpdndf.q",
    "kalman.process_var",
    "kalman.prior_var",
];

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub synthetic: SyntheticConfig,
    pub video: VideoConfig,
    /// Parameter overrides keyed `section.name`; defaults come from
    /// [`AlgorithmParams::synthetic`] or [`AlgorithmParams::video`].
    pub params: BTreeMap<String, f64>,
    pub algorithms: Vec<Algorithm>,
    /// Axis values for sweeps; `None` uses the standard grid.
    pub sweep_values: Option<Vec<usize>>,
    pub solver: SolverSettings<f64>,
    pub trials: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Synthetic,
            synthetic: SyntheticConfig::default(),
            video: VideoConfig::default(),
            params: BTreeMap::new(),
            algorithms: Algorithm::SPARSE.to_vec(),
            sweep_values: None,
            solver: SolverSettings::default(),
            trials: 40,
            seed: 0,
            out_dir: PathBuf::from("out"),
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if let Some(v) = &self.sweep_values {
            if v.is_empty() {
                return Err(Error::Config("sweep axis is empty".into()));
            }
        }
        match self.kind {
            ExperimentKind::Video => self.video.validate(),
            _ => self.synthetic.validate(),
        }?;
        self.solver.validate()
    }

    pub fn synthetic_params(&self) -> Result<AlgorithmParams> {
        AlgorithmParams::synthetic(&self.synthetic).with_overrides(&self.params)
    }

    pub fn video_params(&self) -> Result<AlgorithmParams> {
        AlgorithmParams::video().with_overrides(&self.params)
    }

    /// Sets one `key=value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<V: FromStr>(key: &str, value: &str) -> Result<V>
        where
            V::Err: fmt::Display,
        {
            value
                .parse()
                .map_err(|e| Error::Config(format!("{key}: cannot parse '{value}': {e}")))
        }
        match key {
            "experiment" => self.kind = value.parse()?,
            "seed" => self.seed = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "algos" => self.algorithms = Algorithm::parse_list(value)?,
            "sweep.values" => {
                self.sweep_values = Some(
                    value
                        .split(',')
                        .map(|v| num(key, v.trim()))
                        .collect::<Result<_>>()?,
                )
            }
            "synthetic.n" => self.synthetic.n = num(key, value)?,
            "synthetic.s" => self.synthetic.s = num(key, value)?,
            "synthetic.m" => self.synthetic.m = num(key, value)?,
            "synthetic.p" => self.synthetic.p = num(key, value)?,
            "synthetic.noise_var" => self.synthetic.noise_var = num(key, value)?,
            "synthetic.t_steps" => self.synthetic.t_steps = num(key, value)?,
            "video.path" => self.video.yuv_path = PathBuf::from(value),
            "video.width" => self.video.width = num(key, value)?,
            "video.height" => self.video.height = num(key, value)?,
            "video.crop" => self.video.crop = num(key, value)?,
            "video.frames" => self.video.frames = num(key, value)?,
            "video.m_over_n" => self.video.m_over_n = num(key, value)?,
            "video.taps" => self.video.wavelet_taps = num(key, value)?,
            "video.levels" => self.video.wavelet_levels = num(key, value)?,
            "video.noise_var" => self.video.noise_var = num(key, value)?,
            "solver.max_iters" => self.solver.max_iters = num(key, value)?,
            "solver.rel_tol" => self.solver.rel_tol = num(key, value)?,
            k if PARAM_KEYS.contains(&k) => {
                self.params.insert(k.to_string(), num(key, value)?);
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key=value` file on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected key=value, got '{line}'",
                    lineno + 1
                ))
            })?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }
}
