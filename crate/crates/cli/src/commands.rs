//! Subcommands: load inputs, run one pipeline, write its CSV outputs and the
//! manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use metapop::engine::{snapshot_csv, IntegrateOptions, Trajectory};
use metapop::experiments::verify::{run_checks, VerifySettings};
use metapop::experiments::{
    compare_timeseries, read_reference, run_beta_grid, run_quarantine_sweep, run_replicates, run_scenario,
    RunSettings,
};
use metapop::geo::{distribute_population, load_cells, load_intersections, synthesize_island, IslandConfig};
use metapop::mobility::generate_travel_matrices;
use metapop::network::io::{edges_csv, network_from_records, nodes_csv, read_edges, read_nodes};
use metapop::network::{graph_metrics, Bounds, GraphMetrics, KernelNormalization, MetricsOptions};
use metapop::{PatchNetwork, TravelMatrices};

use crate::config::{LoadedConfig, RunConfig};
use crate::manifest::{input_hashes, sha256_hex, write_manifest, Manifest, Seeds, FORMAT_VERSION};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Build,
    GenMobility,
    Simulate,
    Sweep,
    Quarantine,
    Replicates,
    Metrics,
    Compare,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::GenMobility => "gen-mobility",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Quarantine => "quarantine",
            Command::Replicates => "replicates",
            Command::Metrics => "metrics",
            Command::Compare => "compare",
            Command::Verify => "verify",
        }
    }
}

pub const METRICS_HEADER: &str =
    "graph,node_count,link_count,average_degree,connected_components,largest_component,diameter,diameter_lower_bound";
pub const TRACKED_HEADER: &str =
    "t_days,node_id,S_H_present,I_H_present,R_H_present,infection_fraction,S_m,I_m,E,L";
pub const QUARANTINE_HEADER: &str = "threshold,t_days,I_H,seroprevalence";
pub const QUARANTINE_PEAKS_HEADER: &str = "threshold,peak_day,peak_I_H,final_seroprevalence";
pub const COMPARISON_HEADER: &str = "week_start_day,simulated,reference";
pub const VERIFY_HEADER: &str = "check,passed,detail";

/// Output files collected in memory, then written by one writer each.
struct Outputs {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_owned(),
            files: BTreeMap::new(),
        }
    }

    fn add(&mut self, name: impl Into<String>, content: String) {
        self.files.insert(name.into(), content);
    }

    fn write(self) -> Result<BTreeMap<String, String>, CliError> {
        std::fs::create_dir_all(&self.dir).map_err(|source| CliError::Output {
            path: self.dir.clone(),
            source,
        })?;
        let mut hashes = BTreeMap::new();
        for (name, content) in self.files {
            let path = self.dir.join(&name);
            std::fs::write(&path, &content).map_err(|source| CliError::Output { path, source })?;
            hashes.insert(name, sha256_hex(content.as_bytes()));
        }
        Ok(hashes)
    }
}

fn require<'a, T>(value: &'a Option<T>, section: &str, command: Command) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("`{}` needs a [{section}] section", command.name())))
}

/// Builds the patch network from the configured source.
pub fn load_network(config: &RunConfig, seeds: &Seeds) -> Result<PatchNetwork, CliError> {
    let net = &config.network;
    let params = config.model_params();
    let network = if let Some(nodes) = &net.nodes {
        let records = read_nodes(nodes).map_err(CliError::Invalid)?;
        let edges = match &net.edges {
            Some(p) => Some(read_edges(p).map_err(CliError::Invalid)?),
            None => None,
        };
        network_from_records(&records, None, &params, net.d_max, edges).map_err(CliError::Invalid)?
    } else if let (Some(inter), Some(cells)) = (&net.intersections, &net.cells) {
        let points = load_intersections(inter).map_err(CliError::Invalid)?;
        let cells = load_cells(cells).map_err(CliError::Invalid)?;
        let dist = distribute_population(&cells, &points);
        let mut extent = dist.coords.clone();
        for c in &cells {
            extent.push((c.x0, c.y0));
            extent.push((c.x0 + c.size, c.y0 + c.size));
        }
        let bounds = Bounds::around(&extent, 0.0).map_err(CliError::Invalid)?;
        let pops: Vec<f64> = dist.populations.iter().map(|&p| p as f64).collect();
        PatchNetwork::build(&dist.coords, &pops, &bounds, &params, net.d_max).map_err(CliError::Invalid)?
    } else {
        let island = IslandConfig {
            seed: seeds.synthesis,
            d_max: net.d_max,
            ..require(&net.synthetic, "network.synthetic", Command::Build)?.clone()
        };
        synthesize_island(&island, &params).map_err(CliError::Invalid)?
    };
    Ok(match net.normalization {
        KernelNormalization::Raw => network,
        other => network.with_normalization(other),
    })
}

/// Reads the configured mobility file or generates travel tables.
pub fn load_mobility(config: &RunConfig, seeds: &Seeds, network: &PatchNetwork) -> Result<TravelMatrices, CliError> {
    match &config.mobility.file {
        Some(path) => TravelMatrices::read_csv(path, network.len()).map_err(CliError::Invalid),
        None => Ok(generate_travel_matrices(network, &config.mobility_config(seeds.mobility))?),
    }
}

fn run_settings(config: &RunConfig) -> RunSettings {
    let sim = &config.simulation;
    RunSettings {
        integrate: IntegrateOptions {
            t0: sim.t0,
            t1: sim.t1,
            h: sim.h,
            output_interval: sim.output_interval,
            tracked_nodes: sim.tracked_nodes.clone(),
            snapshot_times: sim.snapshot_times.clone(),
        },
        aquatic: sim.aquatic,
        seed_node: sim.seed_node,
        seed_count: sim.seed_count,
    }
}

fn check_nodes(config: &RunConfig, n: usize) -> Result<(), CliError> {
    let sim = &config.simulation;
    let bad = std::iter::once(sim.seed_node)
        .chain(sim.tracked_nodes.iter().copied())
        .chain(config.replicates.observed_nodes.iter().copied())
        .find(|&k| k >= n);
    match bad {
        Some(index) => Err(CliError::Invalid(metapop::Error::NodeOutOfRange { index, count: n })),
        None => Ok(()),
    }
}

fn metrics_row(out: &mut String, name: &str, m: &GraphMetrics) {
    let opt = |v: Option<usize>| v.map_or_else(String::new, |d| d.to_string());
    let _ = writeln!(
        out,
        "{name},{},{},{},{},{},{},{}",
        m.node_count,
        m.link_count,
        m.average_degree,
        m.connected_component_count,
        m.largest_component_size,
        opt(m.diameter),
        opt(m.diameter_lower_bound)
    );
}

fn tracked_csv(traj: &Trajectory) -> String {
    let mut out = String::from(TRACKED_HEADER);
    out.push('\n');
    for (t, row) in traj.times.iter().zip(&traj.node_series) {
        for o in row {
            let _ = writeln!(
                out,
                "{t},{},{},{},{},{},{},{},{},{}",
                o.node, o.s_h_present, o.i_h_present, o.r_h_present, o.infection_fraction, o.s_m, o.i_m, o.eggs, o.larvae
            );
        }
    }
    out
}

fn trajectory_outputs(out: &mut Outputs, traj: &Trajectory) {
    out.add("timeseries.csv", traj.timeseries_csv());
    if !traj.tracked_nodes.is_empty() {
        out.add("tracked_nodes.csv", tracked_csv(traj));
    }
    for snap in &traj.snapshots {
        // Rounded so step accumulation does not leak into file names.
        let day = (snap.t * 1e6).round() / 1e6;
        out.add(format!("snapshot_day_{day}.csv"), snapshot_csv(&snap.nodes));
    }
}

/// Runs `command` on a loaded configuration, writing outputs and the
/// manifest under `out_dir`.
pub fn dispatch(command: Command, loaded: &LoadedConfig, out_dir: &Path) -> Result<(), CliError> {
    let config = &loaded.config;
    let seeds = Seeds::from_master(config.seed);
    let inputs = input_hashes(config)?;
    if command == Command::Sweep {
        require(&config.sweep, "sweep", command)?;
    }
    if command == Command::Compare {
        require(&config.compare, "compare", command)?;
    }
    let params = config.model_params();
    let network = load_network(config, &seeds)?;
    info!("network: {} nodes, {} mosquito links", network.len(), network.edges().len());
    check_nodes(config, network.len())?;
    let mut out = Outputs::new(out_dir);
    let mut failed_checks = 0;

    match command {
        Command::Build => {
            out.add("nodes.csv", nodes_csv(&network));
            out.add("mosq_edges.csv", edges_csv(&network));
        }
        Command::GenMobility => {
            let travel = load_mobility(config, &seeds, &network)?;
            out.add("mobility.csv", travel.to_csv());
        }
        Command::Metrics => {
            let travel = load_mobility(config, &seeds, &network)?;
            let mut csv = String::from(METRICS_HEADER);
            csv.push('\n');
            let kernel = network.metrics(MetricsOptions::default())?;
            metrics_row(&mut csv, "mosquito", &kernel);
            let human = graph_metrics(&travel.edge_pairs(), network.len(), MetricsOptions::default())?;
            metrics_row(&mut csv, "human", &human);
            print!("{csv}");
            out.add("metrics.csv", csv);
        }
        Command::Simulate => {
            let travel = load_mobility(config, &seeds, &network)?;
            let traj = run_scenario(&network, &travel, &params, &config.events, &run_settings(config))?;
            let (day, peak) = traj.peak_infected();
            println!(
                "peak I_H {peak:.3} on day {day}; final seroprevalence {:.3}",
                traj.seroprevalence.last().copied().unwrap_or(0.0)
            );
            trajectory_outputs(&mut out, &traj);
        }
        Command::Sweep => {
            let travel = load_mobility(config, &seeds, &network)?;
            let spec = require(&config.sweep, "sweep", command)?;
            let grid = run_beta_grid(&network, &travel, &params, spec, &run_settings(config))?;
            out.add("grid.csv", grid.to_csv());
        }
        Command::Quarantine => {
            let travel = load_mobility(config, &seeds, &network)?;
            let q = &config.quarantine;
            let sweep = run_quarantine_sweep(
                &network,
                &travel,
                &params,
                &run_settings(config),
                &q.thresholds,
                q.check_interval,
            )?;
            let mut series = String::from(QUARANTINE_HEADER);
            series.push('\n');
            let mut peaks = String::from(QUARANTINE_PEAKS_HEADER);
            peaks.push('\n');
            let runs = std::iter::once(("none".to_string(), &sweep.baseline))
                .chain(sweep.runs.iter().map(|(t, tr)| (t.to_string(), tr)));
            for (label, traj) in runs {
                for ((t, tot), sero) in traj.times.iter().zip(&traj.totals).zip(&traj.seroprevalence) {
                    let _ = writeln!(series, "{label},{t},{},{sero}", tot.i_h);
                }
                let (day, peak) = traj.peak_infected();
                let last = traj.seroprevalence.last().copied().unwrap_or(0.0);
                let _ = writeln!(peaks, "{label},{day},{peak},{last}");
            }
            print!("{peaks}");
            out.add("quarantine.csv", series);
            out.add("quarantine_peaks.csv", peaks);
        }
        Command::Replicates => {
            let gen = config.mobility_config(seeds.mobility);
            let stats = run_replicates(
                &network,
                &gen,
                &params,
                &run_settings(config),
                seeds.replicates,
                &config.replicates,
            )?;
            let table = stats.sd_table_csv();
            print!("{table}");
            out.add("replicate_stats.csv", stats.stats_csv());
            out.add("replicate_network.csv", stats.network_csv());
            out.add("replicate_sd.csv", table);
        }
        Command::Compare => {
            let travel = load_mobility(config, &seeds, &network)?;
            let reference_path = &require(&config.compare, "compare", command)?.reference;
            let reference = read_reference(reference_path).map_err(CliError::Invalid)?;
            let traj = run_scenario(&network, &travel, &params, &config.events, &run_settings(config))?;
            let cmp = compare_timeseries(&traj, &reference)?;
            println!(
                "{} weeks compared; rmse {:.3}; peak offset {} days; cumulative gap {:.3}",
                cmp.weeks, cmp.rmse, cmp.peak_time_offset, cmp.final_seroprevalence_gap
            );
            let mut csv = String::from(COMPARISON_HEADER);
            csv.push('\n');
            for (w, s, r) in &cmp.rows {
                let _ = writeln!(csv, "{w},{s},{r}");
            }
            trajectory_outputs(&mut out, &traj);
            out.add("comparison.csv", csv);
        }
        Command::Verify => {
            let travel = load_mobility(config, &seeds, &network)?;
            let vs = VerifySettings {
                run: run_settings(config),
                subcritical: config.verify.subcritical,
                random_seed: seeds.verify,
            };
            let reach_params = match config.verify.supercritical {
                Some((bh, bm)) => params.with_infection_rates(bh, bm),
                None => params,
            };
            let checks = run_checks(&network, &travel, &reach_params, &vs)?;
            let mut csv = String::from(VERIFY_HEADER);
            csv.push('\n');
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                let _ = writeln!(csv, "{},{},\"{}\"", c.name, c.passed, c.detail.replace('"', "'"));
            }
            failed_checks = checks.iter().filter(|c| !c.passed).count();
            out.add("verify.csv", csv);
        }
    }

    let outputs = out.write()?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        library_version: metapop::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        subcommand: command.name(),
        config_file: loaded.path.display().to_string(),
        config_sha256: sha256_hex(loaded.text.as_bytes()),
        seeds,
        inputs,
        outputs,
        resolved_config: config,
    };
    write_manifest(out_dir, &manifest)?;
    if failed_checks > 0 {
        return Err(CliError::ChecksFailed(failed_checks));
    }
    Ok(())
}
