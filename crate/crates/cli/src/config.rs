//! Run configuration: one TOML document per run, validated up front.

use std::path::{Path, PathBuf};

use metapop::engine::AquaticMode;
use metapop::experiments::{GridSpec, ReplicateConfig};
use metapop::geo::IslandConfig;
use metapop::network::{KernelNormalization, DEFAULT_D_MAX};
use metapop::{EventSpec, ModelParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_d_max() -> f64 {
    DEFAULT_D_MAX
}

/// Where the patch network comes from. Exactly one source is allowed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// `nodes.csv` with optional `area_m2`.
    pub nodes: Option<PathBuf>,
    /// Cached `mosq_edges.csv`, used with `nodes` only.
    pub edges: Option<PathBuf>,
    /// Road intersections (`x_m,y_m`), used with `cells`.
    pub intersections: Option<PathBuf>,
    /// Population grid cells.
    pub cells: Option<PathBuf>,
    /// Synthetic island; its seed derives from the master seed.
    pub synthetic: Option<IslandConfig>,
    #[serde(default = "default_d_max")]
    pub d_max: f64,
    #[serde(default)]
    pub normalization: KernelNormalization,
}

fn default_g() -> f64 {
    0.5
}

fn default_return_rate() -> f64 {
    1.0
}

fn default_destinations() -> usize {
    40
}

/// Human mobility: read from `file`, or generated with these settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityConfig {
    pub file: Option<PathBuf>,
    #[serde(default = "default_g")]
    pub g_default: f64,
    #[serde(default = "default_return_rate")]
    pub return_rate: f64,
    #[serde(default = "default_destinations")]
    pub destinations_per_node: usize,
    pub delta_r0: Option<f64>,
    pub kappa: Option<f64>,
    pub power_beta: Option<f64>,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            file: None,
            g_default: default_g(),
            return_rate: default_return_rate(),
            destinations_per_node: default_destinations(),
            delta_r0: None,
            kappa: None,
            power_beta: None,
        }
    }
}

/// Individual overrides of the reference parameter table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub b: Option<f64>,
    pub k_e: Option<f64>,
    pub k_l: Option<f64>,
    pub s: Option<f64>,
    pub s_l: Option<f64>,
    pub d: Option<f64>,
    pub d_l: Option<f64>,
    pub d_m: Option<f64>,
    pub b_h: Option<f64>,
    pub beta_h: Option<f64>,
    pub beta_m: Option<f64>,
    pub gamma_h: Option<f64>,
}

/// Infection rates used when the configuration gives none.
pub const DEFAULT_BETAS: (f64, f64) = (0.2, 0.15);

impl ParamsConfig {
    pub fn resolve(&self) -> ModelParams {
        let base = ModelParams::reference(DEFAULT_BETAS.0, DEFAULT_BETAS.1);
        ModelParams {
            b: self.b.unwrap_or(base.b),
            k_e: self.k_e.unwrap_or(base.k_e),
            k_l: self.k_l.unwrap_or(base.k_l),
            s: self.s.unwrap_or(base.s),
            s_l: self.s_l.unwrap_or(base.s_l),
            d: self.d.unwrap_or(base.d),
            d_l: self.d_l.unwrap_or(base.d_l),
            d_m: self.d_m.unwrap_or(base.d_m),
            b_h: self.b_h.unwrap_or(base.b_h),
            beta_h: self.beta_h.unwrap_or(base.beta_h),
            beta_m: self.beta_m.unwrap_or(base.beta_m),
            gamma_h: self.gamma_h.unwrap_or(base.gamma_h),
        }
    }
}

fn default_t1() -> f64 {
    400.0
}

fn default_h() -> f64 {
    0.05
}

fn default_one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_t1")]
    pub t1: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_one")]
    pub output_interval: f64,
    #[serde(default)]
    pub seed_node: usize,
    /// Infected residents placed at `seed_node`.
    #[serde(default = "default_one")]
    pub seed_count: f64,
    #[serde(default)]
    pub aquatic: AquaticMode,
    #[serde(default)]
    pub tracked_nodes: Vec<usize>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            t0: 0.0,
            t1: default_t1(),
            h: default_h(),
            output_interval: default_one(),
            seed_node: 0,
            seed_count: default_one(),
            aquatic: AquaticMode::Dynamic,
            tracked_nodes: Vec::new(),
            snapshot_times: Vec::new(),
        }
    }
}

fn default_thresholds() -> Vec<f64> {
    vec![1.0, 0.5, 0.2, 0.1, 0.02]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuarantineConfig {
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_one")]
    pub check_interval: f64,
}

impl Default for QuarantineConfig {
    fn default() -> Self {
        QuarantineConfig {
            thresholds: default_thresholds(),
            check_interval: default_one(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Weekly new cases, `week_start_day,new_cases`.
    pub reference: PathBuf,
}

fn default_subcritical() -> (f64, f64) {
    (0.01, 0.01)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Infection rates for the extinction check.
    #[serde(default = "default_subcritical")]
    pub subcritical: (f64, f64),
    /// Infection rates for the endemic reach check; the run parameters when
    /// absent.
    pub supercritical: Option<(f64, f64)>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            subcritical: default_subcritical(),
            supercritical: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every random stream derives from it.
    pub seed: u64,
    pub network: NetworkConfig,
    #[serde(default)]
    pub mobility: MobilityConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub events: EventSpec,
    pub sweep: Option<GridSpec>,
    #[serde(default)]
    pub quarantine: QuarantineConfig,
    #[serde(default)]
    pub replicates: ReplicateConfig,
    pub compare: Option<CompareConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
}

/// A parsed configuration with its source text, kept for the manifest.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub text: String,
    pub config: RunConfig,
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

/// Names a close match among the keys listed in a serde unknown-field
/// message.
fn suggest(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    let (found, rest) = rest.split_once('`')?;
    let expected = rest.split_once("expected")?.1;
    let lowered = found.to_lowercase();
    expected
        .split('`')
        .skip(1)
        .step_by(2)
        .map(|cand| (strsim::levenshtein(&lowered, &cand.to_lowercase()), cand))
        .filter(|(dist, _)| *dist <= 2.max(found.len() / 3))
        .min()
        .map(|(_, cand)| format!("unknown key `{found}`; did you mean `{cand}`?"))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document. Relative paths resolve
/// against `base_dir`; `origin` names the document in messages.
pub fn parse_config_str(text: &str, origin: &Path, base_dir: &Path) -> Result<RunConfig, CliError> {
    let mut config: RunConfig = toml::from_str(text).map_err(|e| {
        let message = e.message().trim().to_string();
        let message = suggest(&message).unwrap_or(message);
        match e.span() {
            Some(span) => invalid(format!("{}: line {}: {message}", origin.display(), line_of(text, span.start))),
            None => invalid(format!("{}: {message}", origin.display())),
        }
    })?;
    let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| invalid(e.message().to_string()))?;
    let synthetic = raw.get("network").and_then(|n| n.get("synthetic"));
    if synthetic.is_some_and(|s| s.get("seed").is_some()) {
        return Err(invalid(
            "`network.synthetic.seed` is not accepted; seeds derive from the master `seed`",
        ));
    }
    if synthetic.is_some_and(|s| s.get("d_max").is_some()) {
        return Err(invalid("set the kernel range with `network.d_max`, not `network.synthetic.d_max`"));
    }
    config.resolve_paths(base_dir);
    config.validate()?;
    Ok(config)
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let config = parse_config_str(&text, path, base)?;
    Ok(LoadedConfig {
        path: path.to_owned(),
        text,
        config,
    })
}

fn require_file(key: &str, path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(invalid(format!("`{key}`: file {} does not exist", path.display())))
    }
}

impl RunConfig {
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.network.nodes);
        fix(&mut self.network.edges);
        fix(&mut self.network.intersections);
        fix(&mut self.network.cells);
        fix(&mut self.mobility.file);
        if let Some(c) = &mut self.compare {
            if c.reference.is_relative() {
                c.reference = base.join(&c.reference);
            }
        }
    }

    /// Model parameters with overrides applied.
    pub fn model_params(&self) -> ModelParams {
        self.params.resolve()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let net = &self.network;
        let sources = [
            net.nodes.is_some(),
            net.intersections.is_some() || net.cells.is_some(),
            net.synthetic.is_some(),
        ];
        match sources.iter().filter(|&&s| s).count() {
            1 => {}
            0 => return Err(invalid("[network] needs one of `nodes`, `intersections` with `cells`, or `synthetic`")),
            _ => return Err(invalid("[network] sources `nodes`, `intersections`/`cells` and `synthetic` are exclusive")),
        }
        if let Some(p) = &net.nodes {
            require_file("network.nodes", p)?;
        }
        if let Some(p) = &net.edges {
            if net.nodes.is_none() {
                return Err(invalid("`network.edges` is only read together with `network.nodes`"));
            }
            require_file("network.edges", p)?;
        }
        match (&net.intersections, &net.cells) {
            (Some(i), Some(c)) => {
                require_file("network.intersections", i)?;
                require_file("network.cells", c)?;
            }
            (None, None) => {}
            _ => return Err(invalid("`network.intersections` and `network.cells` go together")),
        }
        if let Some(island) = &net.synthetic {
            island.validate().map_err(CliError::Invalid)?;
        }
        if !(net.d_max > 0.0 && net.d_max.is_finite()) {
            return Err(invalid(format!("`network.d_max` must be positive, got {}", net.d_max)));
        }
        if let Some(p) = &self.mobility.file {
            require_file("mobility.file", p)?;
        }
        self.mobility_config(0).validate().map_err(CliError::Invalid)?;
        self.model_params().validate().map_err(CliError::Invalid)?;

        let sim = &self.simulation;
        if !(sim.h > 0.0 && sim.h.is_finite()) {
            return Err(invalid(format!("`simulation.h` must be positive, got {}", sim.h)));
        }
        if !(sim.t0.is_finite() && sim.t1.is_finite() && sim.t1 >= sim.t0) {
            return Err(invalid(format!(
                "`simulation.t1` ({}) must not precede `simulation.t0` ({})",
                sim.t1, sim.t0
            )));
        }
        if !(sim.output_interval > 0.0 && sim.output_interval.is_finite()) {
            return Err(invalid("`simulation.output_interval` must be positive"));
        }
        if !(sim.seed_count > 0.0 && sim.seed_count.is_finite()) {
            return Err(invalid("`simulation.seed_count` must be positive"));
        }
        self.events.validate().map_err(CliError::Invalid)?;
        if let Some(spec) = &self.sweep {
            spec.validate().map_err(CliError::Invalid)?;
        }
        let q = &self.quarantine;
        if q.thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(invalid("`quarantine.thresholds` must lie in (0, 1]"));
        }
        if !(q.check_interval > 0.0 && q.check_interval.is_finite()) {
            return Err(invalid("`quarantine.check_interval` must be positive"));
        }
        if self.replicates.n_replicates < 2 {
            return Err(invalid("`replicates.n_replicates` must be at least 2"));
        }
        if let Some(c) = &self.compare {
            require_file("compare.reference", &c.reference)?;
        }
        Ok(())
    }

    /// Generation settings for human mobility with the given seed.
    pub fn mobility_config(&self, seed: u64) -> metapop::MobilityGenConfig {
        let m = &self.mobility;
        let base = metapop::MobilityGenConfig::default();
        metapop::MobilityGenConfig {
            delta_r0: m.delta_r0.unwrap_or(base.delta_r0),
            kappa: m.kappa.unwrap_or(base.kappa),
            power_beta: m.power_beta.unwrap_or(base.power_beta),
            destinations_per_node: m.destinations_per_node,
            g_default: m.g_default,
            return_rate: m.return_rate,
            seed,
        }
    }
}
