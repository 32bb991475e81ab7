//! `nasplan` command line: build, query, plan, replan, bench, verify.
//!
//! Exit codes: 0 success, 1 invalid input or failed verification, 2 node
//! budget exceeded, 3 no solution.

pub mod bench;
pub mod sample;
pub mod svg;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::footstep::{assemble_problem, solve, Objective, SolveStatus};
use crate::geometry::{chebyshev_center, Point3};
use crate::planner::{build_tree, load_tree, save_tree, BuildError, BuildOptions, FeasibilityTree, DEFAULT_NODE_BUDGET};
use crate::query::{build_index, extract_plan, find_nodes, invalidate_surface, replan, SurfacePlan};
use crate::scene::{load_instance, save_instance, uniform_yaw_set, validate_scene, Effector, ProblemInstance};

use bench::{BenchRecord, Family, RowStatus};

#[derive(Debug, Parser)]
#[command(name = "nasplan", version, about = "Complete n-step footstep feasibility trees and queries over them")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Foot {
    Left,
    Right,
}

impl From<Foot> for Effector {
    fn from(f: Foot) -> Self {
        match f {
            Foot::Left => Effector::Left,
            Foot::Right => Effector::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Feasibility,
    MinStepLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Growth,
    Timing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Staircase,
    Stones,
    Tiles,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Staircase => Family::Staircase,
            FamilyArg::Stones => Family::Stones,
            FamilyArg::Tiles => Family::Tiles,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a tree from an instance file and write it as JSON lines.
    Build {
        instance: PathBuf,
        /// Number of steps (defaults to the instance's max_steps).
        #[arg(short = 'n', long)]
        steps: Option<usize>,
        #[arg(long, overrides_with = "no_merge")]
        merge: bool,
        #[arg(long, overrides_with = "merge")]
        no_merge: bool,
        /// Uniform yaw angle set in degrees, e.g. 0,90,180,270.
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        yaw: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shallowest plan for a foot position, with lookup latency.
    Query {
        tree: PathBuf,
        #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true, required = true)]
        point: Vec<f64>,
        #[arg(long, value_enum)]
        effector: Foot,
        #[arg(long, default_value_t = 1000)]
        repeats: usize,
    },
    /// Footstep positions along the shallowest plan.
    Plan {
        tree: PathBuf,
        #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true, required = true)]
        point: Vec<f64>,
        #[arg(long, value_enum)]
        effector: Foot,
        /// Steps to optimize (defaults to the whole plan).
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum, default_value = "feasibility")]
        objective: ObjectiveArg,
        /// Write a top-view SVG here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Plan again after marking surfaces impassable.
    Replan {
        tree: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        invalidate: Vec<u32>,
        #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true, required = true)]
        point: Vec<f64>,
        #[arg(long, value_enum)]
        effector: Foot,
    },
    /// Run a benchmark suite and write its CSV.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        out: PathBuf,
    },
    /// Completeness rollouts, soundness sweep and merge-neutrality sampling.
    Verify {
        tree: PathBuf,
        /// Instance to check against (defaults to the one stored in the tree).
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        rollouts: usize,
        #[arg(long, default_value_t = 1000)]
        points_per_layer: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Write the instance of a bench scene family.
    Generate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Number of surfaces.
        #[arg(short = 'm', long)]
        surfaces: usize,
        #[arg(short = 'n', long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    NoSolution(String),
    #[error("verification failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) | CliError::Failed(_) => 1,
            CliError::Budget(_) => 2,
            CliError::NoSolution(_) => 3,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn io(e: std::io::Error) -> CliError {
    CliError::Invalid(e.to_string())
}

/// Parses `args` and runs the command, writing results to `out`.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Build { instance, steps, merge: _, no_merge, yaw, out: path } => {
            cmd_build(&instance, steps, !no_merge, yaw.as_deref(), &path, out)
        }
        Command::Query { tree, point, effector, repeats } => cmd_query(&tree, &to_point(&point)?, effector.into(), repeats, out),
        Command::Plan { tree, point, effector, horizon, objective, svg } => {
            let objective = match objective {
                ObjectiveArg::Feasibility => Objective::Feasibility,
                ObjectiveArg::MinStepLength => Objective::MinStepLength,
            };
            cmd_plan(&tree, &to_point(&point)?, effector.into(), horizon, objective, svg.as_deref(), out)
        }
        Command::Replan { tree, invalidate, point, effector } => {
            cmd_replan(&tree, &invalidate, &to_point(&point)?, effector.into(), out)
        }
        Command::Bench { suite, out: path } => cmd_bench(suite, &path, out),
        Command::Verify { tree, instance, rollouts, points_per_layer, seed } => {
            cmd_verify(&tree, instance.as_deref(), rollouts, points_per_layer, seed, out)
        }
        Command::Generate { family, surfaces, steps, out: path } => {
            let inst = bench::family_instance(family.into(), surfaces, steps).map_err(invalid)?;
            save_instance(&inst, &path).map_err(invalid)?;
            writeln!(out, "wrote {} ({} surfaces, {} steps)", path.display(), inst.scene.len(), steps).map_err(io)
        }
    }
}

fn to_point(v: &[f64]) -> Result<Point3, CliError> {
    match v {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Point3::new(*x, *y, *z)),
        _ => Err(CliError::Invalid(format!("--point needs three finite numbers, got {v:?}"))),
    }
}

fn fmt_point(p: &Point3) -> String {
    format!("({}, {}, {})", p.x, p.y, p.z)
}

fn scene_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
}

pub fn cmd_build(
    instance: &Path,
    steps: Option<usize>,
    merge: bool,
    yaw_deg: Option<&[f64]>,
    path: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut inst = load_instance(instance).map_err(invalid)?;
    let report = validate_scene(&inst.scene);
    if !report.is_clean() {
        eprint!("{report}");
    }
    if let Some(n) = steps {
        inst.max_steps = n;
    }
    if let Some(deg) = yaw_deg {
        inst.yaw_angles = uniform_yaw_set(deg).map_err(invalid)?;
    }
    let budget = bench::node_budget(DEFAULT_NODE_BUDGET).map_err(CliError::Invalid)?;
    let name = scene_name(instance);
    let m = inst.scene.len();
    match build_tree(&inst, &BuildOptions { merge, node_budget: budget, ..Default::default() }) {
        Ok(tree) => {
            save_tree(&tree, &inst, path).map_err(invalid)?;
            let rec = BenchRecord::from_tree(&name, m, inst.max_steps, &tree);
            bench::write_csv(&[rec], out).map_err(invalid)
        }
        Err(BuildError::NodeBudget { budget, depth, stats }) => {
            let rec = BenchRecord {
                scene: name,
                m,
                n: inst.max_steps,
                merge,
                yaw: inst.yaw_angles.len(),
                h: stats.total_nodes(),
                layers: stats.layer_counts.clone(),
                build_ms: stats.total_ms,
                q_p50_ms: None,
                q_p99_ms: None,
                qp_ms: None,
                status: RowStatus::Budget,
            };
            bench::write_csv(&[rec], &mut *out).map_err(invalid)?;
            Err(CliError::Budget(format!("node budget {budget} exceeded at depth {depth}")))
        }
    }
}

fn load(tree: &Path) -> Result<(FeasibilityTree, ProblemInstance), CliError> {
    load_tree(tree).map_err(invalid)
}

fn write_plan(tree: &FeasibilityTree, plan: &SurfacePlan, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "steps {}", plan.steps())?;
    for (i, e) in plan.entries.iter().enumerate() {
        let c = chebyshev_center(&e.region);
        let depth = tree.node(e.node).map_or(0, |n| n.depth);
        writeln!(
            out,
            "{i:>4} node {:>7} depth {:>3} {:<5} surface {:>4} yaw {:>6.1} center {:.4} {:.4} {:.4}",
            e.node,
            depth,
            format!("{:?}", e.effector).to_lowercase(),
            e.surface_id,
            e.yaw.to_degrees(),
            c.x,
            c.y,
            c.z
        )?;
    }
    Ok(())
}

pub fn cmd_query(tree_path: &Path, p: &Point3, effector: Effector, repeats: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let (tree, _) = load(tree_path)?;
    let index = build_index(&tree);
    let hits = find_nodes(&tree, &index, p, effector);
    let Some(&first) = hits.first() else {
        return Err(CliError::NoSolution(format!("no node of the tree contains {} for the {effector:?} foot", fmt_point(p))));
    };
    let plan = extract_plan(&tree, first).map_err(|e| CliError::NoSolution(e.to_string()))?;
    write_plan(&tree, &plan, out).map_err(io)?;
    let lat = bench::query_latency(&tree, &index, &vec![(*p, effector); repeats.max(1)]);
    writeln!(out, "latency_ms p50 {:.4} p99 {:.4} over {} lookups", lat.p50, lat.p99, repeats.max(1)).map_err(io)
}

pub fn cmd_plan(
    tree_path: &Path,
    p: &Point3,
    effector: Effector,
    horizon: Option<usize>,
    objective: Objective,
    svg_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (tree, inst) = load(tree_path)?;
    let index = build_index(&tree);
    let t0 = Instant::now();
    let hits = find_nodes(&tree, &index, p, effector);
    let Some(&first) = hits.first() else {
        return Err(CliError::NoSolution(format!("no node of the tree contains {} for the {effector:?} foot", fmt_point(p))));
    };
    let plan = extract_plan(&tree, first).map_err(|e| CliError::NoSolution(e.to_string()))?;
    let query_ms = t0.elapsed().as_secs_f64() * 1e3;
    let mut path = vec![(*p, effector)];
    if plan.steps() == 0 {
        writeln!(out, "steps 0: the start is in the goal region").map_err(io)?;
    } else {
        let h = horizon.unwrap_or(plan.steps());
        let t1 = Instant::now();
        let prob = assemble_problem(&plan, p, h, objective, &inst.kinematics).map_err(invalid)?;
        let sol = solve(&prob);
        let qp_ms = t1.elapsed().as_secs_f64() * 1e3;
        writeln!(
            out,
            "status {} max_violation {:.3e} objective {:.6} steps {h}/{} query_ms {query_ms:.3} qp_ms {qp_ms:.3}",
            sol.status,
            sol.max_violation,
            sol.objective_value,
            plan.steps()
        )
        .map_err(io)?;
        if sol.status == SolveStatus::Infeasible {
            return Err(CliError::NoSolution(format!("footstep program infeasible (violation {:.3e})", sol.max_violation)));
        }
        for (i, (q, step)) in sol.positions.iter().zip(&prob.steps).enumerate() {
            let e = &plan.entries[i + 1];
            writeln!(
                out,
                "{:>4} {:<5} surface {:>4} {:.6} {:.6} {:.6}",
                i + 1,
                format!("{:?}", step.effector).to_lowercase(),
                e.surface_id,
                q.x,
                q.y,
                q.z
            )
            .map_err(io)?;
            path.push((*q, step.effector));
        }
    }
    if let Some(svg_path) = svg_path {
        std::fs::write(svg_path, svg::render(&inst.scene, &tree, &path)).map_err(io)?;
    }
    Ok(())
}

pub fn cmd_replan(
    tree_path: &Path,
    surfaces: &[u32],
    p: &Point3,
    effector: Effector,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (mut tree, inst) = load(tree_path)?;
    let mut index = build_index(&tree);
    for &s in surfaces {
        let n = invalidate_surface(&mut tree, &mut index, &inst.scene, s).map_err(invalid)?;
        writeln!(out, "invalidated surface {s}: {n} nodes").map_err(io)?;
    }
    match replan(&tree, &index, p, effector) {
        Some(plan) => write_plan(&tree, &plan, out).map_err(io),
        None => Err(CliError::NoSolution(format!("no valid plan from {} for the {effector:?} foot", fmt_point(p)))),
    }
}

pub fn cmd_bench(suite: Suite, path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let rows = match suite {
        Suite::Growth => bench::growth_suite(),
        Suite::Timing => bench::timing_suite(),
    }
    .map_err(CliError::Invalid)?;
    let file = std::fs::File::create(path).map_err(io)?;
    bench::write_csv(&rows, std::io::BufWriter::new(file)).map_err(invalid)?;
    writeln!(out, "wrote {} rows to {}", rows.len(), path.display()).map_err(io)?;
    if suite == Suite::Growth {
        for family in Family::ALL {
            let pts: Vec<_> = rows
                .iter()
                .filter(|r| r.merge && r.scene.starts_with(family.name()))
                .map(|r| (r.m, r.n, r.h))
                .collect();
            let fit = bench::bilinear_fit(&pts);
            writeln!(
                out,
                "{:<10} h = {:.3}·m·n  residual {:.3}  max pointwise {:.3}",
                family.name(),
                fit.a,
                fit.residual,
                fit.max_pointwise
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

pub fn cmd_verify(
    tree_path: &Path,
    instance_path: Option<&Path>,
    rollouts: usize,
    points_per_layer: usize,
    seed: u64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (tree, stored) = load(tree_path)?;
    let inst = match instance_path {
        Some(p) => load_instance(p).map_err(invalid)?,
        None => stored,
    };
    let mut failures = Vec::new();

    let r = verify::rollouts(&tree, &inst, rollouts, seed);
    writeln!(out, "completeness: {} rollouts, {} positions checked, {} misses", r.rollouts, r.checks, r.misses.len())
        .map_err(io)?;
    if !r.misses.is_empty() {
        failures.push(format!("{} rollout misses", r.misses.len()));
    }

    let s = verify::soundness(&tree, &inst);
    writeln!(
        out,
        "soundness: {} nodes solved, max violation {:.3e}, {} failures",
        s.checked,
        s.max_violation,
        s.failures.len()
    )
    .map_err(io)?;
    if let Some((id, v)) = s.failures.first() {
        failures.push(format!("{} nodes unsound (first: node {id}, violation {v:.3e})", s.failures.len()));
    }

    let budget = bench::node_budget(bench::NO_MERGE_BUDGET).map_err(CliError::Invalid)?;
    let m = verify::merge_neutrality(&tree, &inst, points_per_layer, budget, seed);
    writeln!(out, "merge neutrality: {} layers, {} points, {} mismatches", m.layers, m.points, m.mismatches.len())
        .map_err(io)?;
    if !m.mismatches.is_empty() {
        failures.push(format!("{} membership mismatches", m.mismatches.len()));
    }

    if failures.is_empty() {
        writeln!(out, "pass").map_err(io)
    } else {
        Err(CliError::Failed(failures.join("; ")))
    }
}
