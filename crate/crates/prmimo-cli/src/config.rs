//! Declarative experiment configuration (JSON) and the CSV-shaped result
//! table every experiment emits.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One experiment per figure or table of the evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Capacity surface over the two Tx polarization angles (2x2, fixed Rx).
    CapacityVsTxangle,
    /// Capacity surface over the two Rx polarization angles with the Tx
    /// fixed at the grid optimum (2x2).
    CapacityVsRxangle,
    /// Per-half-step trace of one joint pre/post coding run.
    JointIterationTrace,
    /// Capacity cdf: joint coding vs random polarization vs grid extremes.
    CapacityCdf,
    /// Mean capacity vs SNR for 2x2 / 3x3 / 4x4 arrays.
    CapacityVsSnr,
    /// Capacity cdf of hybrid selection + MRT under EW / Global / random
    /// polarization, with SNR bounds.
    HsmrtCapacityCdf,
    /// Analytic average QPSK SER vs mean SNR for the selection schemes.
    HsmrtSer,
    /// Symbol-level Monte Carlo validation of the analytic SER.
    SerMontecarlo,
    /// Angle and squared-envelope histograms with analytic overlays.
    StatsHistograms,
    /// Selected-index agreement between the selection schemes.
    IndexMatching,
}

impl ExperimentKind {
    pub fn as_kebab(&self) -> String {
        serde_json::to_value(self)
            .expect("enum serializes")
            .as_str()
            .expect("string variant")
            .to_string()
    }
}

/// Single SNR value or an inclusive dB sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrSpec {
    Single(f64),
    Sweep { start: f64, stop: f64, step: f64 },
}

impl SnrSpec {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            SnrSpec::Single(v) => vec![v],
            SnrSpec::Sweep { start, stop, step } => {
                let mut out = Vec::new();
                if step > 0.0 {
                    let n = ((stop - start) / step + 1e-9).floor() as i64;
                    for k in 0..=n.max(-1) {
                        out.push(start + k as f64 * step);
                    }
                }
                out
            }
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        match *self {
            SnrSpec::Single(v) if v.is_finite() => Ok(()),
            SnrSpec::Single(v) => bail!("snr_db must be finite, got {v}"),
            SnrSpec::Sweep { start, stop, step } => {
                if !start.is_finite() || !stop.is_finite() || !step.is_finite() {
                    bail!("snr_db sweep bounds must be finite");
                }
                if step <= 0.0 {
                    bail!("snr_db sweep step must be positive, got {step}");
                }
                Ok(())
            }
        }
    }
}

fn default_n_t() -> usize {
    2
}
fn default_n_r() -> usize {
    2
}
fn default_snr() -> SnrSpec {
    SnrSpec::Single(20.0)
}
fn default_realizations() -> usize {
    1000
}
fn default_grid_step() -> f64 {
    10.0
}
fn default_iterations() -> usize {
    5
}
fn default_output() -> String {
    "out.csv".to_string()
}
fn default_xpd() -> f64 {
    0.0
}

/// Declarative experiment description. JSON keys match the field names;
/// CLI flags override file values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    #[serde(default = "default_n_r")]
    pub n_r: usize,
    /// Selected Tx element count. 0 selects the experiment's documented
    /// default sweep (e.g. all of 1..=n_t for the selection cdf).
    #[serde(default)]
    pub l_t: usize,
    #[serde(default = "default_snr")]
    pub snr_db: SnrSpec,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default = "default_grid_step")]
    pub grid_step_deg: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_xpd")]
    pub xpd_db: f64,
    #[serde(default = "default_output")]
    pub output_path: String,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n_t == 0 || self.n_r == 0 {
            bail!("n_t and n_r must be positive");
        }
        if self.l_t > self.n_t {
            bail!("l_t = {} exceeds n_t = {}", self.l_t, self.n_t);
        }
        if self.iterations == 0 {
            bail!("iterations must be positive");
        }
        // Header-only output for an empty stats run is allowed; everything
        // else needs at least one realization.
        if self.realizations == 0 && self.experiment != ExperimentKind::StatsHistograms {
            bail!("realizations must be >= 1");
        }
        let per_turn = 180.0 / self.grid_step_deg;
        if !(self.grid_step_deg > 0.0) || (per_turn - per_turn.round()).abs() > 1e-9 {
            bail!(
                "grid_step_deg must divide 180 evenly, got {}",
                self.grid_step_deg
            );
        }
        self.snr_db.validate()?;
        if !self.xpd_db.is_finite() {
            bail!("xpd_db must be finite");
        }
        Ok(())
    }

    /// First SNR value (for experiments that need a single operating point).
    pub fn snr_single(&self) -> anyhow::Result<f64> {
        match self.snr_db.values().first() {
            Some(&v) => Ok(v),
            None => bail!("snr_db sweep is empty"),
        }
    }

    /// The selection sizes this config asks for; `fallback` supplies the
    /// documented per-experiment default when `l_t == 0`.
    pub fn lt_values(&self, fallback: &[usize]) -> Vec<usize> {
        if self.l_t > 0 {
            vec![self.l_t]
        } else {
            fallback.iter().copied().filter(|&l| l <= self.n_t).collect()
        }
    }
}

/// Column-oriented experiment output with one `#`-prefixed JSON metadata
/// line. Data rows are deterministic in the config seed; the metadata
/// timestamp is excluded from that contract.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub metadata: serde_json::Value,
}

impl ResultTable {
    pub fn new(header: &[&str], cfg: &ExperimentConfig) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            metadata: serde_json::json!({
                "experiment": cfg.experiment.as_kebab(),
                "config": cfg,
                "library_version": env!("CARGO_PKG_VERSION"),
                "seed": cfg.seed,
                "timestamp_unix": timestamp,
            }),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row arity must match header");
        self.rows.push(row);
    }

    pub fn meta_insert(&mut self, key: &str, value: serde_json::Value) {
        self.metadata
            .as_object_mut()
            .expect("metadata is an object")
            .insert(key.to_string(), value);
    }

    /// Header and data rows only; the determinism contract covers exactly
    /// these bytes.
    pub fn data_bytes(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_csv_string(&self) -> String {
        format!("# {}\n{}", self.metadata, self.data_bytes())
    }

    pub fn write_csv(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.to_csv_string())
            .with_context(|| format!("writing {}", path.display()))
    }
}

/// Shortest round-trip decimal rendering used for all numeric cells.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
