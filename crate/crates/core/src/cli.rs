//! Command-line front end: `gen`, `select`, `eval` and `sweep`.
//!
//! Commands write their primary output (JSON or a table) to the supplied
//! writer and return a [`CommandOutcome`]; the binary maps errors to exit
//! codes with [`Error::exit_code`].

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{self, SweepSpec};
use crate::fattree::{self, RegenReport, DEFAULT_DT};
use crate::model::{self, BandwidthDistribution, CodeParams, FatTreeRoles, TierDistributions};
use crate::overlay_select::{self, RepairPlan, Scheme};
use crate::seed::{self, Stream, RNG_ALGORITHM};
use crate::topology_file::{RngInfo, TopologyFile};
use crate::traffic::BetaMode;

pub const SEED_ENV: &str = "REGENSEL_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "regensel",
    version,
    about = "Repair node selection for regenerating-coded storage"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random topology and write it as JSON.
    Gen(GenArgs),
    /// Run a selection scheme on a topology file.
    Select(SelectArgs),
    /// Evaluate a given repair plan on a topology file.
    Eval(EvalArgs),
    /// Run a parameter sweep and write CSV results.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Overlay with dedicated provider-newcomer links.
    #[arg(long, conflicts_with = "fattree", required_unless_present = "fattree")]
    pub overlay: bool,
    /// Three-tier fat-tree.
    #[arg(long)]
    pub fattree: bool,
    /// Total nodes N (overlay).
    #[arg(long)]
    pub n_total: Option<usize>,
    /// Coded-block holders n (overlay).
    #[arg(long)]
    pub n: Option<usize>,
    /// Reconstruction threshold for --overlay; switch arity for --fattree.
    #[arg(long)]
    pub k: Option<usize>,
    /// Providers per repair d (overlay).
    #[arg(long)]
    pub d: Option<usize>,
    /// File size in Mb (overlay).
    #[arg(long, default_value_t = 100.0)]
    pub m: f64,
    /// Lower bound of link bandwidth in Mbps (bottom tier for fat-trees).
    #[arg(long, default_value_t = 1.0)]
    pub low: f64,
    /// Upper bound of link bandwidth in Mbps (bottom tier for fat-trees).
    #[arg(long, default_value_t = 120.0)]
    pub high: f64,
    /// Edge-aggregation tier multiplier of the bottom interval.
    #[arg(long, default_value_t = 5.0)]
    pub middle_scale: f64,
    /// Aggregation-core tier multiplier of the bottom interval.
    #[arg(long, default_value_t = 10.0)]
    pub top_scale: f64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Code flags shared by `select`. Unset values come from the topology file.
#[derive(Debug, Args, Default)]
pub struct CodeArgs {
    /// Coded-block holders n.
    #[arg(long)]
    pub n: Option<usize>,
    /// Reconstruction threshold k.
    #[arg(long)]
    pub k: Option<usize>,
    /// Providers per repair d.
    #[arg(long)]
    pub d: Option<usize>,
    /// File size in Mb.
    #[arg(long)]
    pub m: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    pub topology: PathBuf,
    #[arg(long)]
    pub scheme: Scheme,
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long, default_value = "msr")]
    pub beta_mode: BetaMode,
    /// Seed for the random schemes.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Seed for placing holders on fat-tree hosts when the file has no
    /// roles; defaults to --seed.
    #[arg(long)]
    pub placement_seed: Option<u64>,
    /// Also run the matching exhaustive or fluid oracle and report the gap.
    #[arg(long)]
    pub oracle: bool,
    /// Step of the fluid oracle in seconds.
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub topology: PathBuf,
    /// Repair plan JSON.
    #[arg(long)]
    pub plan: PathBuf,
    /// Label recorded in fat-tree reports.
    #[arg(long, default_value = "msr")]
    pub beta_mode: BetaMode,
    /// Fat-tree only: also run the fluid oracle.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub spec: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Override the spec's trials per point.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Override the spec's base seed.
    #[arg(long)]
    pub base_seed: Option<u64>,
    /// Also write an SVG chart of the means.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: u8,
    pub outputs: Vec<PathBuf>,
    pub summary: String,
}

impl CommandOutcome {
    fn ok(outputs: Vec<PathBuf>, summary: String) -> Self {
        CommandOutcome {
            exit_code: 0,
            outputs,
            summary,
        }
    }
}

#[derive(Debug, Serialize)]
struct OracleReport {
    method: &'static str,
    time_s: f64,
    /// `(time - oracle) / oracle`.
    relative_gap: f64,
}

impl OracleReport {
    fn new(method: &'static str, time_s: f64, reference: f64) -> Self {
        OracleReport {
            method,
            time_s: reference,
            relative_gap: (time_s - reference) / reference,
        }
    }
}

#[derive(Debug, Serialize)]
struct PlanOutput {
    topology: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    code_params: Option<CodeParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    roles: Option<FatTreeRoles>,
    beta_mode: BetaMode,
    plan: RepairPlan,
    time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bottleneck_mbps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<RegenReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<CommandOutcome> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Select(a) => cmd_select(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
    }
}

fn required(v: Option<usize>, flag: &str) -> Result<usize> {
    v.ok_or_else(|| Error::param(format!("--{flag} is required")))
}

pub fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<CommandOutcome> {
    let rng = Some(RngInfo {
        algorithm: RNG_ALGORITHM.into(),
        seed: a.seed,
    });
    let dist = BandwidthDistribution::new(a.low, a.high)?;
    let (file, summary) = if a.fattree {
        if a.n_total.is_some() || a.n.is_some() || a.d.is_some() {
            return Err(Error::param(
                "--fattree takes only --k (arity); code flags belong to select",
            ));
        }
        let arity = required(a.k, "k")?;
        let tiers = TierDistributions::scaled(dist, a.middle_scale, a.top_scale)?;
        let net = model::build_fattree(arity, &tiers, a.seed)?;
        let summary = format!(
            "fattree K={arity}: {} hosts, {} edge, {} aggregation, {} core switches, {} links",
            net.host_count(),
            net.edge_switch_count(),
            net.agg_switch_count(),
            net.core_switch_count(),
            net.links().len()
        );
        (
            TopologyFile::Fattree {
                rng,
                tiers: Some(tiers),
                code_params: None,
                roles: None,
                network: net,
            },
            summary,
        )
    } else {
        let code = CodeParams::new(
            required(a.n_total, "n-total")?,
            required(a.n, "n")?,
            required(a.k, "k")?,
            required(a.d, "d")?,
            a.m,
        )?;
        let net = model::gen_overlay(&code, &dist, a.seed);
        let summary = format!(
            "overlay N={}: {} provider candidates x {} newcomer candidates",
            code.n_total(),
            net.provider_candidates().len(),
            net.newcomer_candidates().len()
        );
        (
            TopologyFile::Overlay {
                rng,
                distribution: Some(dist),
                code_params: code,
                network: net,
            },
            summary,
        )
    };
    file.save(&a.out)?;
    writeln!(out, "{summary}")?;
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(CommandOutcome::ok(vec![a.out.clone()], summary))
}

fn merge_code(base: Option<&CodeParams>, n_total: usize, flags: &CodeArgs) -> Result<CodeParams> {
    let pick = |flag: Option<usize>, from_base: Option<usize>, name: &str| {
        flag.or(from_base)
            .ok_or_else(|| Error::param(format!("--{name} is required")))
    };
    CodeParams::new(
        n_total,
        pick(flags.n, base.map(|c| c.n()), "n")?,
        pick(flags.k, base.map(|c| c.k()), "k")?,
        pick(flags.d, base.map(|c| c.d()), "d")?,
        flags.m.or(base.map(|c| c.file_size())).unwrap_or(100.0),
    )
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn cmd_select(a: &SelectArgs, out: &mut dyn Write) -> Result<CommandOutcome> {
    let file = TopologyFile::load(&a.topology)?;
    if a.scheme == Scheme::Oracle {
        return Err(Error::param(
            "ORACLE is not a selectable scheme; use --oracle",
        ));
    }
    let output = match &file {
        TopologyFile::Overlay {
            code_params,
            network,
            ..
        } => {
            if a.scheme.is_fattree() {
                return Err(Error::param(format!(
                    "{} needs a fat-tree topology",
                    a.scheme
                )));
            }
            if a.code.n.is_some_and(|n| n != code_params.n()) {
                return Err(Error::param("n is fixed by the overlay's candidate sets"));
            }
            let code = merge_code(Some(code_params), code_params.n_total(), &a.code)?;
            network.check_code(&code)?;
            let mut rng = seed::rng(a.seed, Stream::Selection);
            let plan = match a.scheme {
                Scheme::Rs => overlay_select::select_rs(network, &code, a.beta_mode, &mut rng)?,
                Scheme::Spsn => overlay_select::select_spsn(network, &code, a.beta_mode)?,
                Scheme::Frs => overlay_select::select_frs(network, &code, &mut rng)?.0,
                Scheme::Flex => overlay_select::select_flex(network, &code)?.0,
                _ => unreachable!("fat-tree schemes rejected above"),
            };
            let report = overlay_select::evaluate(network, &plan)?;
            let oracle = if a.oracle {
                let (method, reference) = if a.scheme.is_flexible() {
                    (
                        "brute_force_flex",
                        overlay_select::brute_force_flex(network, &code)?.1,
                    )
                } else {
                    let best = overlay_select::brute_force_uniform(network, &code, a.beta_mode)?;
                    (
                        "brute_force_uniform",
                        overlay_select::evaluate(network, &best)?.time_s,
                    )
                };
                Some(OracleReport::new(method, report.time_s, reference))
            } else {
                None
            };
            PlanOutput {
                topology: "overlay",
                code_params: Some(code),
                roles: None,
                beta_mode: a.beta_mode,
                plan,
                time_s: report.time_s,
                bottleneck_mbps: report.bottleneck_mbps,
                report: None,
                oracle,
            }
        }
        TopologyFile::Fattree {
            code_params,
            roles,
            network,
            ..
        } => {
            if !a.scheme.is_fattree() {
                return Err(Error::param(format!(
                    "{} needs an overlay topology",
                    a.scheme
                )));
            }
            let code = merge_code(code_params.as_ref(), network.host_count(), &a.code)?;
            let roles = match (roles, a.placement_seed) {
                (Some(r), None) => {
                    r.validate(network, &code)?;
                    if r.providers.len() != code.n() - 1 {
                        return Err(Error::param(
                            "file roles disagree with n; pass --placement-seed to redraw",
                        ));
                    }
                    r.clone()
                }
                (_, placement) => {
                    model::fattree_roles(network, &code, placement.unwrap_or(a.seed))?
                }
            };
            let plan = match a.scheme {
                Scheme::RsF => {
                    let mut rng = seed::rng(a.seed, Stream::Selection);
                    fattree::select_rs_f(network, &code, &roles, a.beta_mode, &mut rng)?
                }
                _ => fattree::select_spsn_f(network, &code, &roles, a.beta_mode)?,
            };
            let report = fattree::regen_time_fattree(network, &plan, a.beta_mode)?;
            let oracle = if a.oracle {
                let reference = fattree::fluid_oracle(network, &plan, a.dt)?;
                Some(OracleReport::new("fluid", report.total_time_s, reference))
            } else {
                None
            };
            PlanOutput {
                topology: "fattree",
                code_params: Some(code),
                roles: Some(roles),
                beta_mode: a.beta_mode,
                plan,
                time_s: report.total_time_s,
                bottleneck_mbps: None,
                report: Some(report),
                oracle,
            }
        }
    };
    write_json(out, &output)?;
    let summary = format!(
        "{} on {}: {} s",
        a.scheme,
        a.topology.display(),
        output.time_s
    );
    Ok(CommandOutcome::ok(vec![], summary))
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<CommandOutcome> {
    let file = TopologyFile::load(&a.topology)?;
    let plan: RepairPlan = serde_json::from_str(&fs::read_to_string(&a.plan)?)?;
    let output = match &file {
        TopologyFile::Overlay { network, .. } => {
            if a.oracle {
                return Err(Error::param(
                    "--oracle on eval is only defined for fat-trees",
                ));
            }
            let report = overlay_select::evaluate(network, &plan)?;
            PlanOutput {
                topology: "overlay",
                code_params: None,
                roles: None,
                beta_mode: a.beta_mode,
                plan,
                time_s: report.time_s,
                bottleneck_mbps: report.bottleneck_mbps,
                report: None,
                oracle: None,
            }
        }
        TopologyFile::Fattree { network, .. } => {
            let report = fattree::regen_time_fattree(network, &plan, a.beta_mode)?;
            let oracle = if a.oracle {
                let reference = fattree::fluid_oracle(network, &plan, a.dt)?;
                Some(OracleReport::new("fluid", report.total_time_s, reference))
            } else {
                None
            };
            PlanOutput {
                topology: "fattree",
                code_params: None,
                roles: None,
                beta_mode: a.beta_mode,
                plan,
                time_s: report.total_time_s,
                bottleneck_mbps: None,
                report: Some(report),
                oracle,
            }
        }
    };
    write_json(out, &output)?;
    let summary = format!("plan on {}: {} s", a.topology.display(), output.time_s);
    Ok(CommandOutcome::ok(vec![], summary))
}

pub fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<CommandOutcome> {
    let mut spec = SweepSpec::from_json(&fs::read_to_string(&a.spec)?)?;
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    if let Some(s) = a.base_seed {
        spec.base_seed = s;
    }
    let result = experiment::run_sweep(&spec)?;
    fs::create_dir_all(&a.out_dir)?;
    let trials_path = a.out_dir.join("trials.csv");
    let summary_path = a.out_dir.join("summary.csv");
    experiment::write_trials_csv(&result, fs::File::create(&trials_path)?)?;
    experiment::write_summary_csv(&result, fs::File::create(&summary_path)?)?;
    let mut outputs = vec![trials_path, summary_path];
    if a.svg {
        let svg_path = a.out_dir.join("means.svg");
        fs::write(&svg_path, experiment::render_svg(&result))?;
        outputs.push(svg_path);
    }
    out.write_all(experiment::format_summary(&result).as_bytes())?;
    let summary = format!(
        "{} records from {} points x {} trials",
        result.records.len(),
        result.records.len() / spec.schemes.len(),
        spec.trials
    );
    writeln!(out, "{summary}")?;
    Ok(CommandOutcome::ok(outputs, summary))
}
