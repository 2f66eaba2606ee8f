//! Command-line workflows over files: collect -> estimate -> validate.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use crate::disturbance::DisturbanceBasis;
use crate::error::Error;
use crate::estimation::{self, Dataset, Method, ParamSet};
use crate::excitation::{self, CollectionRanges};
use crate::files::{self, ModelFile};
use crate::gcc::GccConfig;
use crate::gravity::{GravityConstants, GravityRegressorSpec};
use crate::kinematics::KinematicModel;
use crate::metrics::{self, CondStudyOptions, HoldSchedule};
use crate::plant::{self, Plant, PlantSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IDENTIFIABILITY: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Environment variable read for log verbosity (`error` .. `trace`).
pub const LOG_ENV: &str = "GRAVCOMP_LOG";

/// Probe configurations used to reduce the gravity regressor.
pub const PROBE_COUNT: usize = 500;
pub const PROBE_SEED: u64 = 1;

/// Noise stream of the trajectory-test plant; collection uses the joint index.
const TRAJECTORY_STREAM: u64 = 100;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(e) => match e {
                Error::Identifiability { .. } | Error::IllConditionedProbes { .. } => EXIT_IDENTIFIABILITY,
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_VALIDATION,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "gravcomp",
    version,
    about = "Gravity and disturbance identification for serial arms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Collect static torque datasets from a simulated plant.
    Collect(CollectArgs),
    /// Estimate a model file from collected datasets.
    Estimate(EstimateArgs),
    /// Run a validation protocol of a model against a simulated plant.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CollectArgs {
    /// Plant description (TOML).
    #[arg(long)]
    pub plant: PathBuf,
    /// Estimated joint (1-based) or `all`.
    #[arg(long, default_value = "all")]
    pub joint: String,
    /// Grid `NxM`: N points of the estimated joint, M of its auxiliary
    /// joint. Joints without an auxiliary joint get N*M points.
    #[arg(long, default_value = "30x20")]
    pub counts: String,
    /// Overrides the plant seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the plant measurement noise (N*m).
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Slse,
    Mlse,
    FontanelliLike,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Slse => Method::Slse,
            MethodArg::Mlse => Method::Mlse,
            MethodArg::FontanelliLike => Method::FontanelliLike,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Directory of dataset CSV files.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "mlse")]
    pub method: MethodArg,
    /// Per-joint polynomial orders, e.g. `4,1,4,4,4,4`.
    #[arg(long)]
    pub orders: Option<String>,
    /// Kinematic description (TOML); the built-in MTM-like model otherwise.
    #[arg(long)]
    pub kinematics: Option<PathBuf>,
    #[arg(long)]
    pub dead_band: Option<f64>,
    #[arg(long)]
    pub saturation: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Trajectory,
    Drift,
    OrderSweep,
    CondStudy,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub plant: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Drift: number of release poses.
    #[arg(long)]
    pub poses: Option<usize>,
    /// Drift: release duration (s).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Trajectory: number of waypoints.
    #[arg(long)]
    pub waypoints: Option<usize>,
    /// Trajectory: hold time per waypoint (s).
    #[arg(long)]
    pub hold: Option<f64>,
    /// Order sweep and condition study: collection grid `NxM`.
    #[arg(long)]
    pub counts: Option<String>,
    /// Order sweep: share of each dataset held out.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Order sweep: highest order tried (from 0).
    #[arg(long)]
    pub max_order: Option<usize>,
    /// Seed of poses, waypoints and held-out draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Collect(a) => cmd_collect(&a).map(|_| ()),
        Command::Estimate(a) => cmd_estimate(&a).map(|_| ()),
        Command::Validate(a) => cmd_validate(&a).map(|_| ()),
    }
}

/// Parses `NxM`.
pub fn parse_counts(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Usage(format!("counts `{s}` must look like NxM with positive integers"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let n: usize = a.trim().parse().map_err(|_| bad())?;
    let m: usize = b.trim().parse().map_err(|_| bad())?;
    if n == 0 || m == 0 {
        return Err(bad());
    }
    Ok((n, m))
}

/// Parses `k1,...,kn`.
pub fn parse_orders(s: &str, n: usize) -> CliResult<Vec<usize>> {
    let orders = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("orders `{s}` must be comma-separated integers")))?;
    if orders.len() != n {
        return Err(CliError::Usage(format!(
            "orders: {} given, the model has {n} joints",
            orders.len()
        )));
    }
    Ok(orders)
}

fn parse_joints(s: &str, n: usize) -> CliResult<Vec<usize>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok((0..n).collect());
    }
    match s.parse::<usize>() {
        Ok(j) if (1..=n).contains(&j) => Ok(vec![j - 1]),
        _ => Err(CliError::Usage(format!("joint `{s}` must be `all` or 1..={n}"))),
    }
}

/// Advisory lock held while a command writes into `dir`.
struct DirLock(File);

impl DirLock {
    fn acquire(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let path = dir.join(".gravcomp.lock");
        let f = File::create(&path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        f.lock()
            .map_err(|e| Error::io(format!("locking {}", path.display()), e))?;
        Ok(Self(f))
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = self.0.unlock();
    }
}

fn load_plant(path: &Path, seed: Option<u64>, sigma: Option<f64>) -> CliResult<PlantSpec> {
    let mut spec = files::read_plant_spec(path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(s) = sigma {
        spec.noise_sigma = s;
    }
    spec.validate()?;
    Ok(spec)
}

/// Grid for `joint`: `NxM`, or `N*M` points along joints without an
/// auxiliary joint.
fn joint_counts(ranges: &CollectionRanges, joint: usize, counts: (usize, usize)) -> (usize, usize) {
    if ranges.auxiliary[joint].is_some() {
        counts
    } else {
        (counts.0 * counts.1, 1)
    }
}

fn collect_datasets(spec: &PlantSpec, joints: &[usize], counts: (usize, usize)) -> CliResult<Vec<Dataset>> {
    let ranges = CollectionRanges::mtm_table();
    if ranges.n_joints() != spec.model.n_joints {
        return Err(Error::config(
            "plant.kinematics",
            format!(
                "collection ranges cover {} joints, the plant has {}",
                ranges.n_joints(),
                spec.model.n_joints
            ),
        )
        .into());
    }
    let mut out = Vec::with_capacity(joints.len());
    for &j in joints {
        let plan = excitation::two_joint_plan(&spec.model, j, &ranges, joint_counts(&ranges, j, counts), None)?;
        let ds = Plant::with_stream(spec, j as u64)?.collect(&plan)?;
        info!("joint {}: {} samples ({})", j + 1, ds.len(), plan.description);
        out.push(ds);
    }
    Ok(out)
}

pub fn dataset_file_name(joint: usize) -> String {
    format!("joint{}.csv", joint + 1)
}

/// Writes one dataset per estimated joint; returns the written paths.
pub fn cmd_collect(args: &CollectArgs) -> CliResult<Vec<PathBuf>> {
    let counts = parse_counts(&args.counts)?;
    let spec = load_plant(&args.plant, args.seed, args.noise_sigma)?;
    let joints = parse_joints(&args.joint, spec.model.n_joints)?;
    let datasets = collect_datasets(&spec, &joints, counts)?;
    let _lock = DirLock::acquire(&args.out)?;
    let mut paths = Vec::new();
    for (&j, ds) in joints.iter().zip(&datasets) {
        let path = args.out.join(dataset_file_name(j));
        files::write_dataset(&path, ds, spec.model.n_joints)?;
        paths.push(path);
    }
    println!("wrote {} dataset(s) to {}", paths.len(), args.out.display());
    Ok(paths)
}

/// Reads every `*.csv` of `dir` in file-name order.
pub fn read_dataset_dir(dir: &Path) -> CliResult<Vec<(PathBuf, Dataset)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(format!("reading {}", dir.display()), e))?;
    let mut paths = Vec::new();
    for e in entries {
        let p = e
            .map_err(|e| Error::io(format!("reading {}", dir.display()), e))?
            .path();
        if p.extension().is_some_and(|x| x == "csv") {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::config("data", format!("no .csv datasets in {}", dir.display())).into());
    }
    paths
        .into_iter()
        .map(|p| files::read_dataset(&p).map(|d| (p, d)).map_err(CliError::from))
        .collect()
}

/// Orders each dataset by its estimated joint; every joint needs exactly one.
fn per_joint_datasets(all: &[(PathBuf, Dataset)], n: usize) -> CliResult<Vec<Dataset>> {
    let mut by_joint: BTreeMap<usize, &PathBuf> = BTreeMap::new();
    let mut slots: Vec<Option<Dataset>> = vec![None; n];
    for (path, ds) in all {
        match ds.meta.estimated_joint {
            Some(j) if j < n => {
                if let Some(prev) = by_joint.insert(j, path) {
                    return Err(Error::config(
                        "data",
                        format!(
                            "two datasets for joint {}: {} and {}",
                            j + 1,
                            prev.display(),
                            path.display()
                        ),
                    )
                    .into());
                }
                slots[j] = Some(ds.clone());
            }
            Some(j) => {
                return Err(Error::config(
                    "estimated_joint",
                    format!("{}: joint {} outside 1..={n}", path.display(), j + 1),
                )
                .into())
            }
            None => warn!("{}: no estimated joint, ignored by mlse", path.display()),
        }
    }
    let missing: Vec<String> = (0..n)
        .filter(|&j| slots[j].is_none())
        .map(|j| (j + 1).to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::config(
            "data",
            format!(
                "mlse needs one dataset per joint; missing joint(s) {}",
                missing.join(", ")
            ),
        )
        .into());
    }
    Ok(slots.into_iter().flatten().collect())
}

/// Gravity base for `model` from the fixed probe set.
pub fn reduce_gravity(model: &KinematicModel, consts: GravityConstants) -> CliResult<GravityRegressorSpec> {
    let probes = plant::random_poses(model, PROBE_COUNT, PROBE_SEED)?;
    Ok(GravityRegressorSpec::reduce_to_base(model, &probes, consts)?)
}

fn estimation_report(model: &KinematicModel, params: &ParamSet, data: &Dataset) -> CliResult<String> {
    let mut s = format!("method: {}\n", params.provenance.method.label());
    let _ = writeln!(s, "base gravity parameters: {}", params.gravity.base_count());
    let _ = writeln!(
        s,
        "{:>6} {:>7} {:>7} {:>14} {:>14}",
        "step", "rows", "params", "rms residual", "condition"
    );
    for st in &params.provenance.steps {
        let _ = writeln!(
            s,
            "{:>6} {:>7} {:>7} {:>14.6e} {:>14.6e}",
            st.joint.map_or("all".to_string(), |j| format!("J{}", j + 1)),
            st.rows,
            st.params,
            st.rms_residual(),
            st.condition
        );
    }
    let fit = metrics::evaluate_dataset(model, params, data, "training")?;
    s.push_str("\nfit on the training data\n");
    s.push_str(&fit.to_text());
    Ok(s)
}

/// Estimates and writes the model file plus `<out>.report.txt`.
pub fn cmd_estimate(args: &EstimateArgs) -> CliResult<ModelFile> {
    let model = match &args.kinematics {
        Some(p) => files::read_kinematic_model(p)?,
        None => KinematicModel::mtm_default(),
    };
    let n = model.n_joints;
    let method = Method::from(args.method);
    let orders = match &args.orders {
        Some(s) => parse_orders(s, n)?,
        None if n == 6 => DisturbanceBasis::mtm_default().orders,
        None => vec![4; n],
    };
    if method == Method::FontanelliLike && args.orders.is_some() {
        warn!("--orders is ignored by fontanelli-like (order 1, direction-symmetric)");
    }
    let mut gcc = GccConfig::default_for(n);
    if let Some(v) = args.dead_band {
        gcc.dead_band = vec![v; n];
    }
    if let Some(v) = args.saturation {
        gcc.saturation = vec![v; n];
    }
    if let Some(v) = args.alpha {
        gcc.alpha = v;
    }
    gcc.validate(n)?;

    let all = read_dataset_dir(&args.data)?;
    let hash = files::model_hash(&model);
    for (p, d) in &all {
        if d.meta.model_hash != hash {
            return Err(Error::config(
                "model_hash",
                format!(
                    "{} was recorded with model {}, estimating with {hash}",
                    p.display(),
                    d.meta.model_hash
                ),
            )
            .into());
        }
        d.validate(&model)?;
    }
    let per_joint = if method == Method::Mlse {
        Some(per_joint_datasets(&all, n)?)
    } else {
        None
    };

    let spec = reduce_gravity(&model, GravityConstants::default())?;
    let basis = DisturbanceBasis::new(orders);
    let everything = Dataset::concat(&all.iter().map(|(_, d)| d.clone()).collect::<Vec<_>>());
    let params = match method {
        Method::Slse => estimation::slse(&model, &everything, &spec, &basis)?,
        Method::Mlse => estimation::mlse(&model, per_joint.as_deref().unwrap_or_default(), &spec, &basis)?,
        Method::FontanelliLike => estimation::slse_symmetric_linear(&model, &everything, &spec)?,
    };
    let report = estimation_report(&model, &params, &everything)?;
    let mf = ModelFile { model, params, gcc };
    let report_path = report_path(&args.out);
    let parent = args
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let _lock = DirLock::acquire(parent)?;
    files::write_model_file(&args.out, &mf)?;
    files::write_text(&report_path, &report)?;
    print!("{report}");
    Ok(mf)
}

pub fn report_path(model_out: &Path) -> PathBuf {
    model_out.with_extension("report.txt")
}

fn reject(mode: Mode, given: bool, flag: &str) -> CliResult<()> {
    if given {
        let name = mode
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default();
        return Err(CliError::Usage(format!("--{flag} does not apply to mode {name}")));
    }
    Ok(())
}

fn check_mode_options(a: &ValidateArgs) -> CliResult<()> {
    let drift = a.mode == Mode::Drift;
    let traj = a.mode == Mode::Trajectory;
    let sweep = a.mode == Mode::OrderSweep;
    let study = a.mode == Mode::CondStudy;
    reject(a.mode, !drift && a.poses.is_some(), "poses")?;
    reject(a.mode, !drift && a.duration.is_some(), "duration")?;
    reject(a.mode, !traj && a.waypoints.is_some(), "waypoints")?;
    reject(a.mode, !traj && a.hold.is_some(), "hold")?;
    reject(a.mode, !(sweep || study) && a.counts.is_some(), "counts")?;
    reject(a.mode, !sweep && a.test_fraction.is_some(), "test-fraction")?;
    reject(a.mode, !sweep && a.max_order.is_some(), "max-order")?;
    Ok(())
}

/// Files written by one validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationOutput {
    pub csv: PathBuf,
    pub text: PathBuf,
    pub summary: String,
}

pub const DEFAULT_SWEEP_MAX_ORDER: usize = 8;
pub const DEFAULT_TEST_FRACTION: f64 = 0.3;

pub fn cmd_validate(args: &ValidateArgs) -> CliResult<ValidationOutput> {
    check_mode_options(args)?;
    let mf = files::read_model_file(&args.model)?;
    let spec = load_plant(&args.plant, None, None)?;
    let (mh, ph) = (files::model_hash(&mf.model), files::model_hash(&spec.model));
    if mh != ph {
        return Err(Error::config(
            "plant.kinematics",
            format!("plant kinematics {ph} differ from the model's {mh}"),
        )
        .into());
    }
    let model = &mf.model;
    let params = &mf.params;
    let (stem, csv, summary) = match args.mode {
        Mode::Trajectory => {
            let count = args.waypoints.unwrap_or(metrics::DEFAULT_WAYPOINTS);
            let schedule = HoldSchedule {
                hold: args.hold.unwrap_or(HoldSchedule::default().hold),
                ..HoldSchedule::default()
            };
            let waypoints = plant::random_poses(model, count, args.seed)?;
            let mut p = Plant::with_stream(&spec, TRAJECTORY_STREAM)?;
            let rep = metrics::trajectory_test(&mut p, params, &waypoints, schedule)?;
            ("trajectory", rep.to_csv(), rep.to_text())
        }
        Mode::Drift => {
            let count = args.poses.unwrap_or(metrics::DEFAULT_DRIFT_POSES);
            let duration = args.duration.unwrap_or(metrics::DEFAULT_DRIFT_DURATION);
            let poses = plant::random_poses(model, count, args.seed)?;
            let rep = metrics::drift_test(&spec, params, &mf.gcc, &poses, duration, metrics::DEFAULT_DRIFT_DT)?;
            ("drift", rep.to_csv(), rep.to_text())
        }
        Mode::OrderSweep => {
            let counts = parse_counts(args.counts.as_deref().unwrap_or("30x20"))?;
            let max = args.max_order.unwrap_or(DEFAULT_SWEEP_MAX_ORDER);
            let fraction = args.test_fraction.unwrap_or(DEFAULT_TEST_FRACTION);
            let joints: Vec<usize> = (0..model.n_joints).collect();
            let data = collect_datasets(&spec, &joints, counts)?;
            let orders: Vec<usize> = (0..=max).collect();
            let sweep = estimation::order_sweep(
                model,
                &data,
                &params.gravity,
                &params.disturbance.basis,
                &orders,
                fraction,
            )?;
            ("order_sweep", order_sweep_csv(&sweep), order_sweep_text(&sweep))
        }
        Mode::CondStudy => {
            let mut options = CondStudyOptions {
                seed: args.seed,
                ..CondStudyOptions::default()
            };
            if let Some(c) = &args.counts {
                options.counts = parse_counts(c)?;
            }
            let study = metrics::cond_study(&spec, &params.gravity, &params.disturbance.basis, &options)?;
            ("cond_study", study.to_csv(), study.to_text())
        }
    };
    let _lock = DirLock::acquire(&args.out)?;
    let csv_path = args.out.join(format!("{stem}.csv"));
    let text_path = args.out.join(format!("{stem}.txt"));
    files::write_text(&csv_path, &csv)?;
    files::write_text(&text_path, &summary)?;
    print!("{summary}");
    Ok(ValidationOutput {
        csv: csv_path,
        text: text_path,
        summary,
    })
}

pub fn order_sweep_csv(sweep: &estimation::OrderSweep) -> String {
    let mut s = String::from("joint,order,train_rms_nm,test_rms_nm\n");
    for r in &sweep.rows {
        let _ = writeln!(s, "{},{},{:?},{:?}", r.joint + 1, r.order, r.train_rms, r.test_rms);
    }
    s
}

pub fn order_sweep_text(sweep: &estimation::OrderSweep) -> String {
    let mut s = String::new();
    for (j, best) in sweep.best.iter().enumerate() {
        let _ = writeln!(
            s,
            "joint {}: lowest test error at order {}",
            j + 1,
            best.map_or("none".to_string(), |k| k.to_string())
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_parse() {
        assert_eq!(parse_counts("30x20").unwrap(), (30, 20));
        assert_eq!(parse_counts("1X1").unwrap(), (1, 1));
        for bad in ["30", "0x4", "ax3", "3x"] {
            assert_eq!(parse_counts(bad).unwrap_err().exit_code(), EXIT_USAGE, "{bad}");
        }
    }

    #[test]
    fn orders_parse() {
        assert_eq!(parse_orders("4,1,4", 3).unwrap(), vec![4, 1, 4]);
        assert!(parse_orders("4,1", 3).is_err());
        assert!(parse_orders("4,-1,4", 3).is_err());
    }

    #[test]
    fn joints_parse() {
        assert_eq!(parse_joints("all", 3).unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_joints("2", 3).unwrap(), vec![1]);
        assert!(parse_joints("0", 3).is_err());
        assert!(parse_joints("4", 3).is_err());
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            CliError::Usage("x".into()).exit_code(),
            CliError::Lib(Error::config("k", "r")).exit_code(),
            CliError::Lib(Error::Identifiability {
                joint: Some(1),
                detail: "d".into(),
            })
            .exit_code(),
            CliError::Lib(Error::io("c", std::io::Error::other("e"))).exit_code(),
        ];
        assert_eq!(codes, [EXIT_USAGE, EXIT_VALIDATION, EXIT_IDENTIFIABILITY, EXIT_IO]);
    }

    #[test]
    fn mode_mismatch_is_usage() {
        let cli = Cli::try_parse_from([
            "gravcomp",
            "validate",
            "--model",
            "m",
            "--plant",
            "p",
            "--mode",
            "trajectory",
            "--poses",
            "4",
            "--out",
            "o",
        ])
        .unwrap();
        let Command::Validate(a) = cli.command else {
            unreachable!()
        };
        assert_eq!(check_mode_options(&a).unwrap_err().exit_code(), EXIT_USAGE);
    }

    #[test]
    fn report_path_sits_next_to_model() {
        assert_eq!(
            report_path(Path::new("out/model.txt")),
            PathBuf::from("out/model.report.txt")
        );
    }
}
