//! Run configuration, read from JSON or TOML by file extension.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use xtalk::design::DesignParams;
use xtalk::discovery::AnalysisConfig;
use xtalk::regions::DeviceLayout;
use xtalk::simulator::ModelSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    /// Every qubit its own region.
    #[default]
    One,
    /// One 2-partition per disjoint pair of allowed 2-regions.
    Brute2,
    /// Random 2-partitions covering every disjoint pair with high probability.
    Random2,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub plan: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub dot: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; design and simulation draw from named sub-streams.
    pub seed: u64,
    /// Preset (`full:N`, `line:N`, `ladder6`) or a path to a layout JSON file.
    pub layout: Option<String>,
    pub partition: PartitionMode,
    /// Failure probability for `random2` covers.
    pub cover_epsilon: f64,
    pub design: Option<DesignParams>,
    pub model: Option<ModelSpec>,
    pub analysis: AnalysisConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            layout: None,
            partition: PartitionMode::One,
            cover_epsilon: 0.1,
            design: None,
            model: None,
            analysis: AnalysisConfig::default(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => {
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            _ => serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?,
        };
        Ok(config)
    }
}

pub fn resolve_layout(spec: &str) -> Result<DeviceLayout> {
    let preset = |prefix: &str| spec.strip_prefix(prefix).map(|n| n.parse::<usize>());
    if spec == "ladder6" {
        return Ok(DeviceLayout::ladder6());
    }
    if let Some(n) = preset("full:") {
        return Ok(DeviceLayout::fully_connected(
            n.context("layout full:N needs an integer N")?,
        ));
    }
    if let Some(n) = preset("line:") {
        return Ok(DeviceLayout::line(
            n.context("layout line:N needs an integer N")?,
        ));
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!(
            "layout file {} does not exist (presets: full:N, line:N, ladder6)",
            path.display()
        );
    }
    let text =
        fs::read_to_string(path).with_context(|| format!("reading layout {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing layout {}", path.display()))
}
