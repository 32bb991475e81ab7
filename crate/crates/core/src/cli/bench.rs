//! Growth and timing benchmarks over generated scene families.
//!
//! Every family is a single lane of surfaces along +x with the goal on the
//! middle surface. Scenes, goals and query points are seeded, so node counts
//! are reproducible run to run; only the time columns vary.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::footstep::{assemble_problem, solve, Objective, SolveStatus};
use crate::geometry::Point3;
use crate::planner::{build_tree, BuildError, BuildOptions, FeasibilityTree, DEFAULT_NODE_BUDGET};
use crate::query::{build_index, extract_plan, find_nodes, SpatialIndex};
use crate::scene::{generate_scene, Effector, KinematicModel, ProblemInstance, SceneError, SceneSpec};

use super::sample::point_in;

pub const GROWTH_M: [usize; 4] = [4, 10, 22, 43];
pub const GROWTH_N: [usize; 4] = [10, 25, 50, 100];
pub const TIMING_N: [usize; 3] = [25, 61, 100];
/// Node cap for un-merged builds unless `NAS_NODE_BUDGET` is set.
pub const NO_MERGE_BUDGET: usize = 250_000;
pub const QUERY_SAMPLES: usize = 1000;
pub const PLAN_SAMPLES: usize = 200;
const SEED: u64 = 0x5eed;

pub const CSV_HEADER: [&str; 12] =
    ["scene", "m", "n", "merge", "yaw", "h", "layers", "build_ms", "q_p50_ms", "q_p99_ms", "qp_ms", "status"];
/// Columns that hold wall-clock measurements.
pub const TIME_COLUMNS: [&str; 4] = ["build_ms", "q_p50_ms", "q_p99_ms", "qp_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Staircase,
    Stones,
    Tiles,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Staircase, Family::Stones, Family::Tiles];

    pub fn name(self) -> &'static str {
        match self {
            Family::Staircase => "staircase",
            Family::Stones => "stones",
            Family::Tiles => "tiles",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Scene with `m` surfaces. Tiles beyond 22 are built by duplicating the
    /// 22-tile row.
    pub fn spec(self, m: usize) -> SceneSpec {
        match self {
            Family::Staircase => SceneSpec::Staircase { steps: m, rise: 0.05, run: 0.3, width: 0.6 },
            Family::Stones => SceneSpec::SteppingStones {
                rows: 1,
                cols: m,
                spacing: 0.4,
                size: 0.3,
                xy_jitter: 0.02,
                height_jitter: 0.05,
                seed: 1,
            },
            Family::Tiles if m > 22 => SceneSpec::Duplicate {
                base: Box::new(SceneSpec::FlatGrid { nx: 22, ny: 1, tile: 0.3, gap: 0.1 }),
                copies: (m - 1).div_ceil(21),
                offset: [21.0 * 0.4, 0.0, 0.0],
            },
            Family::Tiles => SceneSpec::FlatGrid { nx: m, ny: 1, tile: 0.3, gap: 0.1 },
        }
    }
}

/// Scene id used in CSV rows.
pub fn scene_id(family: Family, m: usize) -> String {
    format!("{}-m{m}", family.name())
}

/// Inset scene of `family` with `m` surfaces, synthetic biped kinematics and
/// a left-foot goal point on the middle surface, offset toward +y so the
/// right foot fits beside it.
pub fn family_instance(family: Family, m: usize, n: usize) -> Result<ProblemInstance, SceneError> {
    let kin = KinematicModel::synthetic_biped();
    let mut scene = generate_scene(&family.spec(m))?;
    scene.surfaces.truncate(m);
    if scene.len() != m {
        return Err(SceneError::Params(format!("{} produced {} surfaces, expected {m}", family.name(), scene.len())));
    }
    let scene = scene.inset(kin.inset_margin())?;
    let poly = &scene.surfaces[m / 2].polygon;
    let (lo, hi) = poly.bounds();
    let c = poly.centroid();
    let (x, y) = (c.x, c.y + 0.25 * (hi.y - lo.y));
    let nrm = poly.normal();
    let goal = Point3::new(x, y, (poly.offset() - nrm.x * x - nrm.y * y) / nrm.z);
    ProblemInstance::new(scene, kin, &[goal], Effector::Left, n, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    /// Build aborted by the node budget; layers are those reached.
    Budget,
    /// Build stopped early on its target point.
    Stopped,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Budget => "budget",
            RowStatus::Stopped => "stopped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scene: String,
    pub m: usize,
    pub n: usize,
    pub merge: bool,
    /// Number of yaw angles, 0 without yaw.
    pub yaw: usize,
    pub h: usize,
    pub layers: Vec<usize>,
    pub build_ms: f64,
    pub q_p50_ms: Option<f64>,
    pub q_p99_ms: Option<f64>,
    pub qp_ms: Option<f64>,
    pub status: RowStatus,
}

fn ms(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

impl BenchRecord {
    pub fn from_tree(scene: &str, m: usize, n: usize, tree: &FeasibilityTree) -> Self {
        let layers = tree.layer_counts();
        BenchRecord {
            scene: scene.to_string(),
            m,
            n,
            merge: tree.merged(),
            yaw: tree.yaw_angles().len(),
            h: layers.iter().sum(),
            layers,
            build_ms: tree.stats.total_ms,
            q_p50_ms: None,
            q_p99_ms: None,
            qp_ms: None,
            status: if tree.stats.stopped_early { RowStatus::Stopped } else { RowStatus::Ok },
        }
    }

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.scene.clone(),
            self.m.to_string(),
            self.n.to_string(),
            self.merge.to_string(),
            self.yaw.to_string(),
            self.h.to_string(),
            serde_json::to_string(&self.layers).expect("integers serialize"),
            format!("{:.3}", self.build_ms),
            ms(self.q_p50_ms),
            ms(self.q_p99_ms),
            ms(self.qp_ms),
            self.status.as_str().to_string(),
        ]
    }

    fn sort_key(&self) -> (String, bool, usize) {
        (self.scene.clone(), !self.merge, self.n)
    }
}

/// Sorts rows (scene, merged first, n) and writes them with a header.
pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> csv::Result<()> {
    let mut sorted: Vec<&BenchRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.sort_key());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in sorted {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// The CSV text with the time columns removed.
pub fn without_time_columns(text: &str) -> csv::Result<String> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut keep: Vec<bool> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        if i == 0 {
            keep = rec.iter().map(|c| !TIME_COLUMNS.contains(&c)).collect();
        }
        out.write_record(rec.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| c))?;
    }
    let bytes = out.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Latency {
    pub p50: f64,
    pub p99: f64,
    pub mean: f64,
    pub max: f64,
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn latency(mut samples_ms: Vec<f64>) -> Latency {
    samples_ms.sort_by(f64::total_cmp);
    let n = samples_ms.len().max(1) as f64;
    Latency {
        p50: percentile(&samples_ms, 0.5),
        p99: percentile(&samples_ms, 0.99),
        mean: samples_ms.iter().sum::<f64>() / n,
        max: samples_ms.last().copied().unwrap_or(f64::NAN),
    }
}

/// `count` points drawn inside the regions of uniformly chosen valid nodes,
/// with the effector of that node.
pub fn sample_queries(tree: &FeasibilityTree, count: usize, seed: u64) -> Vec<(Point3, Effector)> {
    let valid: Vec<usize> = tree.nodes().iter().filter(|n| n.is_valid()).map(|n| n.id as usize).collect();
    if valid.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let node = &tree.nodes()[valid[rng.random_range(0..valid.len())]];
            (point_in(&node.region, &mut rng), node.effector)
        })
        .collect()
}

/// Per-call latency of [`find_nodes`].
pub fn query_latency(tree: &FeasibilityTree, index: &SpatialIndex, queries: &[(Point3, Effector)]) -> Latency {
    let samples = queries
        .iter()
        .map(|(p, e)| {
            let t = Instant::now();
            let hits = find_nodes(tree, index, p, *e);
            let dt = t.elapsed().as_secs_f64() * 1e3;
            std::hint::black_box(hits);
            dt
        })
        .collect();
    latency(samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanTiming {
    /// Query, plan extraction and feasibility solve over the full plan.
    pub end_to_end: Latency,
    /// Problem assembly and solve only.
    pub qp: Latency,
    /// Deepest plan solved.
    pub max_steps: usize,
    /// Queries whose solve did not come back feasible, or found no node.
    pub failures: usize,
}

pub fn plan_latency(
    tree: &FeasibilityTree,
    index: &SpatialIndex,
    kinematics: &KinematicModel,
    queries: &[(Point3, Effector)],
) -> PlanTiming {
    let mut total = Vec::with_capacity(queries.len());
    let mut qp = Vec::with_capacity(queries.len());
    let mut failures = 0;
    let mut max_steps = 0;
    for (p, e) in queries {
        let t0 = Instant::now();
        let Some(&id) = find_nodes(tree, index, p, *e).first() else {
            failures += 1;
            continue;
        };
        let Ok(plan) = extract_plan(tree, id) else {
            failures += 1;
            continue;
        };
        let t1 = Instant::now();
        if plan.steps() > 0 {
            let ok = assemble_problem(&plan, p, plan.steps(), Objective::Feasibility, kinematics)
                .map(|prob| solve(&prob).status == SolveStatus::Feasible)
                .unwrap_or(false);
            failures += usize::from(!ok);
        }
        qp.push(t1.elapsed().as_secs_f64() * 1e3);
        total.push(t0.elapsed().as_secs_f64() * 1e3);
        max_steps = max_steps.max(plan.steps());
    }
    PlanTiming { end_to_end: latency(total), qp: latency(qp), max_steps, failures }
}

/// `NAS_NODE_BUDGET` if set, else `default`.
pub fn node_budget(default: usize) -> Result<usize, String> {
    match std::env::var("NAS_NODE_BUDGET") {
        Ok(v) => v.trim().parse().map_err(|_| format!("NAS_NODE_BUDGET must be a non-negative integer, got {v:?}")),
        Err(_) => Ok(default),
    }
}

fn row_seed(scene: &str, n: usize) -> u64 {
    scene.bytes().fold(SEED ^ n as u64, |h, b| h.rotate_left(5) ^ b as u64)
}

/// Merged rows for every `n` in `ns`, cut from one build at `max(ns)`.
fn merged_rows(
    family: Family,
    m: usize,
    ns: &[usize],
    budget: usize,
    with_plans: bool,
) -> Result<Vec<BenchRecord>, SceneError> {
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let inst = family_instance(family, m, n_max)?;
    let id = scene_id(family, m);
    let full = match build_tree(&inst, &BuildOptions { merge: true, node_budget: budget, ..Default::default() }) {
        Ok(tree) => tree,
        Err(BuildError::NodeBudget { stats, .. }) => {
            return Ok(ns.iter().map(|&n| budget_row(&id, m, n, true, &stats.layer_counts, &stats.layer_ms)).collect());
        }
    };
    let mut rows = Vec::new();
    for &n in ns {
        let tree = full.truncated(n + 1);
        let mut row = BenchRecord::from_tree(&id, m, n, &tree);
        let index = build_index(&tree);
        let queries = sample_queries(&tree, QUERY_SAMPLES, row_seed(&id, n));
        let q = query_latency(&tree, &index, &queries);
        row.q_p50_ms = Some(q.p50);
        row.q_p99_ms = Some(q.p99);
        if with_plans {
            let t = plan_latency(&tree, &index, &inst.kinematics, &queries[..PLAN_SAMPLES.min(queries.len())]);
            row.qp_ms = Some(t.qp.p99);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn budget_row(id: &str, m: usize, n: usize, merge: bool, layers: &[usize], layer_ms: &[f64]) -> BenchRecord {
    BenchRecord {
        scene: id.to_string(),
        m,
        n,
        merge,
        yaw: 0,
        h: layers.iter().sum(),
        layers: layers.to_vec(),
        build_ms: layer_ms.iter().sum(),
        q_p50_ms: None,
        q_p99_ms: None,
        qp_ms: None,
        status: RowStatus::Budget,
    }
}

/// Un-merged rows. A budget abort at depth `d` leaves complete rows for
/// `n < d` and truncated rows after.
fn unmerged_rows(family: Family, m: usize, ns: &[usize], budget: usize) -> Result<Vec<BenchRecord>, SceneError> {
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let inst = family_instance(family, m, n_max)?;
    let id = scene_id(family, m);
    let opts = BuildOptions { merge: false, node_budget: budget, ..Default::default() };
    Ok(match build_tree(&inst, &opts) {
        Ok(tree) => ns.iter().map(|&n| BenchRecord::from_tree(&id, m, n, &tree.truncated(n + 1))).collect(),
        Err(BuildError::NodeBudget { depth, stats, .. }) => ns
            .iter()
            .map(|&n| {
                if n < depth {
                    let k = n + 1;
                    let mut row = budget_row(&id, m, n, false, &stats.layer_counts[..k], &stats.layer_ms[..k]);
                    row.status = RowStatus::Ok;
                    row
                } else {
                    budget_row(&id, m, n, false, &stats.layer_counts, &stats.layer_ms)
                }
            })
            .collect(),
    })
}

/// Node growth: every family and `m` in [`GROWTH_M`], `n` in [`GROWTH_N`],
/// merged and un-merged.
pub fn growth_suite() -> Result<Vec<BenchRecord>, String> {
    let merged_budget = node_budget(DEFAULT_NODE_BUDGET)?;
    let raw_budget = node_budget(NO_MERGE_BUDGET)?;
    let mut rows = Vec::new();
    for family in Family::ALL {
        for m in GROWTH_M {
            rows.extend(merged_rows(family, m, &GROWTH_N, merged_budget, false).map_err(|e| e.to_string())?);
            rows.extend(unmerged_rows(family, m, &GROWTH_N, raw_budget).map_err(|e| e.to_string())?);
        }
    }
    Ok(rows)
}

/// Query and QP latency on merged trees, `n` in [`TIMING_N`].
pub fn timing_suite() -> Result<Vec<BenchRecord>, String> {
    let budget = node_budget(DEFAULT_NODE_BUDGET)?;
    let mut rows = Vec::new();
    for family in Family::ALL {
        for m in GROWTH_M {
            rows.extend(merged_rows(family, m, &TIMING_N, budget, true).map_err(|e| e.to_string())?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearFit {
    /// Least-squares slope of `h ≈ a·m·n`.
    pub a: f64,
    /// `‖h − a·m·n‖₂ / ‖h‖₂`.
    pub residual: f64,
    /// Largest `|h − a·m·n| / h` over the points.
    pub max_pointwise: f64,
}

pub fn bilinear_fit(points: &[(usize, usize, usize)]) -> BilinearFit {
    let x: Vec<f64> = points.iter().map(|&(m, n, _)| (m * n) as f64).collect();
    let h: Vec<f64> = points.iter().map(|&(_, _, h)| h as f64).collect();
    let a = x.iter().zip(&h).map(|(x, h)| x * h).sum::<f64>() / x.iter().map(|x| x * x).sum::<f64>();
    let err: f64 = x.iter().zip(&h).map(|(x, h)| (h - a * x).powi(2)).sum();
    let norm: f64 = h.iter().map(|h| h * h).sum();
    let max_pointwise = x.iter().zip(&h).map(|(x, h)| ((h - a * x) / h).abs()).fold(0.0, f64::max);
    BilinearFit { a, residual: (err / norm).sqrt(), max_pointwise }
}

/// Layer of saturation: the first layer after which every count stays within
/// `tol` of the final count and never rises by more than `tol`. `None` if the
/// counts are still climbing at the end.
pub fn saturation_layer(layers: &[usize], tol: usize) -> Option<usize> {
    let last = *layers.last()? as i64;
    let tol = tol as i64;
    let within = |c: usize| (c as i64 - last).abs() <= tol;
    let mut start = layers.len() - 1;
    while start > 0 && within(layers[start - 1]) {
        start -= 1;
    }
    let steady = layers[start..].windows(2).all(|w| w[1] as i64 <= w[0] as i64 + tol);
    (steady && start + 1 < layers.len()).then_some(start)
}

/// Longest run of consecutive layer ratios `h[k+1]/h[k] >= ratio`.
pub fn longest_growth_run(layers: &[usize], ratio: f64) -> usize {
    let mut best = 0;
    let mut run = 0;
    for w in layers.windows(2) {
        if w[0] > 0 && w[1] as f64 / w[0] as f64 >= ratio {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_have_the_requested_size() {
        for f in Family::ALL {
            for m in GROWTH_M {
                let inst = family_instance(f, m, 3).unwrap();
                assert_eq!(inst.scene.len(), m, "{}", f.name());
            }
        }
    }

    #[test]
    fn duplicated_tiles_match_a_long_row() {
        let dup = generate_scene(&Family::Tiles.spec(43)).unwrap();
        let row = generate_scene(&SceneSpec::FlatGrid { nx: 43, ny: 1, tile: 0.3, gap: 0.1 }).unwrap();
        let key = |s: &crate::scene::Scene| {
            let mut k: Vec<_> = s.surfaces.iter().map(|s| s.polygon.canonical()).collect();
            k.sort();
            k
        };
        assert_eq!(key(&dup), key(&row));
    }

    #[test]
    fn exact_bilinear_data_fits_perfectly() {
        let pts: Vec<_> = [(4, 10), (10, 25), (22, 50)].iter().map(|&(m, n)| (m, n, 3 * m * n)).collect();
        let fit = bilinear_fit(&pts);
        assert!((fit.a - 3.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12 && fit.max_pointwise < 1e-12);
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.5), 50.0);
        assert_eq!(percentile(&v, 0.99), 99.0);
        assert_eq!(percentile(&[7.0], 0.99), 7.0);
    }

    #[test]
    fn saturation_detection() {
        assert_eq!(saturation_layer(&[1, 2, 5, 9, 10, 10, 10], 1), Some(3));
        assert_eq!(saturation_layer(&[1, 2, 4, 8, 16], 1), None);
        assert_eq!(saturation_layer(&[1, 2, 7, 82, 78, 82, 78], 10), Some(3));
    }

    #[test]
    fn growth_runs() {
        assert_eq!(longest_growth_run(&[1, 2, 7, 32, 135, 535, 600], 1.3), 5);
        assert_eq!(longest_growth_run(&[5, 5, 5], 1.3), 0);
    }

    #[test]
    fn time_columns_are_stripped() {
        let rec = BenchRecord {
            scene: "s".into(),
            m: 1,
            n: 2,
            merge: true,
            yaw: 0,
            h: 3,
            layers: vec![1, 2],
            build_ms: 1.5,
            q_p50_ms: Some(0.1),
            q_p99_ms: None,
            qp_ms: None,
            status: RowStatus::Ok,
        };
        let mut a = Vec::new();
        write_csv(std::slice::from_ref(&rec), &mut a).unwrap();
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("\"[1,2]\""));
        let mut slow = rec.clone();
        slow.build_ms = 99.0;
        let mut b = Vec::new();
        write_csv(&[slow], &mut b).unwrap();
        assert_ne!(text, String::from_utf8(b.clone()).unwrap());
        assert_eq!(without_time_columns(&text).unwrap(), without_time_columns(&String::from_utf8(b).unwrap()).unwrap());
        assert!(without_time_columns(&text).unwrap().starts_with("scene,m,n,merge,yaw,h,layers,status\n"));
    }
}
