//! C ABI for `nasplan`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Every fallible call returns a [`NasStatus`];
//! on failure [`nas_last_error`] describes what went wrong on this thread.
//! Panics are caught at the boundary and reported as `NAS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nasplan::footstep::{assemble_problem, solve, Objective, SolveStatus};
use nasplan::geometry::Point3;
use nasplan::planner::{build_tree, load_tree, save_tree, BuildError, BuildOptions, FeasibilityTree, TreeFileError, DEFAULT_NODE_BUDGET};
use nasplan::query::{build_index, invalidate_surface, replan, SpatialIndex};
use nasplan::scene::{load_instance, parse_instance, Effector, ProblemInstance, SceneError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NasStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    InvalidInput = 4,
    NodeBudget = 5,
    NoSolution = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NasEffector {
    Left = 0,
    Right = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NasObjective {
    Feasibility = 0,
    MinStepLength = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NasSolveStatus {
    Feasible = 0,
    Marginal = 1,
    Infeasible = 2,
}

/// A problem instance: scene, kinematics, goal.
pub struct NasInstance {
    inner: ProblemInstance,
}

/// A feasibility tree with its instance and spatial index.
pub struct NasTree {
    tree: FeasibilityTree,
    instance: ProblemInstance,
    index: SpatialIndex,
}

/// Footstep positions from a start point to the goal.
pub struct NasFootstepPlan {
    steps: Vec<(Point3, Effector)>,
    status: SolveStatus,
    max_violation: f64,
    objective_value: f64,
}

struct Failure(NasStatus, String);

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        let status = if matches!(e, SceneError::Io { .. }) { NasStatus::Io } else { NasStatus::InvalidInput };
        Failure(status, e.to_string())
    }
}

impl From<TreeFileError> for Failure {
    fn from(e: TreeFileError) -> Self {
        let status = match e {
            TreeFileError::Io { .. } | TreeFileError::Scene(SceneError::Io { .. }) => NasStatus::Io,
            _ => NasStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NasStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            NasStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(NasStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(NasStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn point_arg(p: *const f64) -> Result<Point3, Failure> {
    if p.is_null() {
        return Err(null("point"));
    }
    let v = std::slice::from_raw_parts(p, 3);
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Failure(NasStatus::InvalidArgument, "point must be finite".into()));
    }
    Ok(Point3::new(v[0], v[1], v[2]))
}

impl From<NasEffector> for Effector {
    fn from(e: NasEffector) -> Self {
        match e {
            NasEffector::Left => Effector::Left,
            NasEffector::Right => Effector::Right,
        }
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn nas_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Reads an instance from a JSON file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nas_instance_load(path: *const c_char, out: *mut *mut NasInstance) -> NasStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = load_instance(path)?;
        *out = Box::into_raw(Box::new(NasInstance { inner }));
        Ok(())
    })
}

/// Parses an instance from JSON text.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nas_instance_parse(json: *const c_char, out: *mut *mut NasInstance) -> NasStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = parse_instance(json)?;
        *out = Box::into_raw(Box::new(NasInstance { inner }));
        Ok(())
    })
}

/// # Safety
/// `instance` must come from `nas_instance_load` or `nas_instance_parse`, or
/// be null.
#[no_mangle]
pub unsafe extern "C" fn nas_instance_free(instance: *mut NasInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Builds a tree over `max_steps` steps (0 keeps the instance's value).
/// `node_budget` 0 means the library default.
///
/// # Safety
/// `instance` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nas_tree_build(
    instance: *const NasInstance,
    max_steps: usize,
    merge: bool,
    node_budget: usize,
    out: *mut *mut NasTree,
) -> NasStatus {
    guard(|| {
        let inst = instance.as_ref().ok_or_else(|| null("instance"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut instance = inst.inner.clone();
        if max_steps > 0 {
            instance.max_steps = max_steps;
        }
        let budget = if node_budget == 0 { DEFAULT_NODE_BUDGET } else { node_budget };
        let tree = build_tree(&instance, &BuildOptions { merge, node_budget: budget, ..Default::default() }).map_err(
            |e @ BuildError::NodeBudget { .. }| Failure(NasStatus::NodeBudget, e.to_string()),
        )?;
        let index = build_index(&tree);
        *out = Box::into_raw(Box::new(NasTree { tree, instance, index }));
        Ok(())
    })
}

/// Reads a tree file written by `nas_tree_save` or the command line tool.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nas_tree_load(path: *const c_char, out: *mut *mut NasTree) -> NasStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (tree, instance) = load_tree(path)?;
        let index = build_index(&tree);
        *out = Box::into_raw(Box::new(NasTree { tree, instance, index }));
        Ok(())
    })
}

/// # Safety
/// `tree` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nas_tree_save(tree: *const NasTree, path: *const c_char) -> NasStatus {
    guard(|| {
        let t = tree.as_ref().ok_or_else(|| null("tree"))?;
        let path = str_arg(path, "path")?;
        save_tree(&t.tree, &t.instance, path)?;
        Ok(())
    })
}

/// # Safety
/// `tree` must come from `nas_tree_build` or `nas_tree_load`, or be null.
#[no_mangle]
pub unsafe extern "C" fn nas_tree_free(tree: *mut NasTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Total number of nodes, 0 for a null handle.
///
/// # Safety
/// `tree` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nas_tree_node_count(tree: *const NasTree) -> usize {
    tree.as_ref().map_or(0, |t| t.tree.len())
}

/// Number of layers (steps + 1), 0 for a null handle.
///
/// # Safety
/// `tree` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nas_tree_layer_count(tree: *const NasTree) -> usize {
    tree.as_ref().map_or(0, |t| t.tree.num_layers())
}

/// Nodes at `depth`, 0 past the last layer.
///
/// # Safety
/// `tree` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nas_tree_layer_size(tree: *const NasTree, depth: usize) -> usize {
    match tree.as_ref() {
        Some(t) if depth < t.tree.num_layers() => t.tree.layer(depth).len(),
        _ => 0,
    }
}

/// Marks every node on `surface` impassable. `invalidated` (may be null)
/// receives the number of nodes affected.
///
/// # Safety
/// `tree` must be a live handle not used concurrently; `invalidated` must be
/// valid or null.
#[no_mangle]
pub unsafe extern "C" fn nas_tree_invalidate_surface(tree: *mut NasTree, surface: u32, invalidated: *mut usize) -> NasStatus {
    guard(|| {
        let t = tree.as_mut().ok_or_else(|| null("tree"))?;
        let n = invalidate_surface(&mut t.tree, &mut t.index, &t.instance.scene, surface)
            .map_err(|e| Failure(NasStatus::InvalidArgument, e.to_string()))?;
        if let Some(out) = invalidated.as_mut() {
            *out = n;
        }
        Ok(())
    })
}

/// Fewest steps from `point` (3 doubles) for `effector` to the goal,
/// skipping invalidated surfaces. `NAS_STATUS_NO_SOLUTION` if none.
///
/// # Safety
/// `tree` must be a live handle, `point` must hold 3 doubles and `steps` be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nas_tree_query(tree: *const NasTree, point: *const f64, effector: NasEffector, steps: *mut usize) -> NasStatus {
    guard(|| {
        let t = tree.as_ref().ok_or_else(|| null("tree"))?;
        let p = point_arg(point)?;
        let out = steps.as_mut().ok_or_else(|| null("steps"))?;
        let plan = replan(&t.tree, &t.index, &p, effector.into())
            .ok_or_else(|| Failure(NasStatus::NoSolution, "no plan from this point".into()))?;
        *out = plan.steps();
        Ok(())
    })
}

/// Footstep positions along the shallowest valid plan from `point`.
/// `horizon` 0 optimizes the whole plan. An infeasible program still
/// returns a plan handle; check `nas_plan_status`.
///
/// # Safety
/// `tree` must be a live handle, `point` must hold 3 doubles and `out` be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nas_tree_plan(
    tree: *const NasTree,
    point: *const f64,
    effector: NasEffector,
    horizon: usize,
    objective: NasObjective,
    out: *mut *mut NasFootstepPlan,
) -> NasStatus {
    guard(|| {
        let t = tree.as_ref().ok_or_else(|| null("tree"))?;
        let p = point_arg(point)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let e: Effector = effector.into();
        let plan = replan(&t.tree, &t.index, &p, e)
            .ok_or_else(|| Failure(NasStatus::NoSolution, "no plan from this point".into()))?;
        let mut result =
            NasFootstepPlan { steps: vec![(p, e)], status: SolveStatus::Feasible, max_violation: 0.0, objective_value: 0.0 };
        if plan.steps() > 0 {
            let h = if horizon == 0 { plan.steps() } else { horizon };
            let objective = match objective {
                NasObjective::Feasibility => Objective::Feasibility,
                NasObjective::MinStepLength => Objective::MinStepLength,
            };
            let prob = assemble_problem(&plan, &p, h, objective, &t.instance.kinematics)
                .map_err(|e| Failure(NasStatus::InvalidArgument, e.to_string()))?;
            let sol = solve(&prob);
            result.steps.extend(sol.positions.iter().zip(&prob.steps).map(|(q, s)| (*q, s.effector)));
            result.status = sol.status;
            result.max_violation = sol.max_violation;
            result.objective_value = sol.objective_value;
        }
        *out = Box::into_raw(Box::new(result));
        Ok(())
    })
}

/// # Safety
/// `plan` must come from `nas_tree_plan`, or be null.
#[no_mangle]
pub unsafe extern "C" fn nas_plan_free(plan: *mut NasFootstepPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Number of positions, the start included.
///
/// # Safety
/// `plan` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nas_plan_len(plan: *const NasFootstepPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.steps.len())
}

/// Position `i` (0 is the start) into `xyz` (3 doubles) and its foot.
///
/// # Safety
/// `plan` must be a live handle, `xyz` must hold 3 doubles, `effector` must
/// be valid or null.
#[no_mangle]
pub unsafe extern "C" fn nas_plan_position(
    plan: *const NasFootstepPlan,
    i: usize,
    xyz: *mut f64,
    effector: *mut NasEffector,
) -> NasStatus {
    guard(|| {
        let p = plan.as_ref().ok_or_else(|| null("plan"))?;
        if xyz.is_null() {
            return Err(null("xyz"));
        }
        let (q, e) = p.steps.get(i).ok_or_else(|| {
            Failure(NasStatus::InvalidArgument, format!("index {i} out of range for {} positions", p.steps.len()))
        })?;
        std::slice::from_raw_parts_mut(xyz, 3).copy_from_slice(q.as_slice());
        if let Some(out) = effector.as_mut() {
            *out = match e {
                Effector::Left => NasEffector::Left,
                Effector::Right => NasEffector::Right,
            };
        }
        Ok(())
    })
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nas_plan_status(plan: *const NasFootstepPlan) -> NasSolveStatus {
    match plan.as_ref().map(|p| p.status) {
        Some(SolveStatus::Feasible) => NasSolveStatus::Feasible,
        Some(SolveStatus::Marginal) => NasSolveStatus::Marginal,
        _ => NasSolveStatus::Infeasible,
    }
}

/// Largest constraint violation of the positions, NaN for a null handle.
///
/// # Safety
/// `plan` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nas_plan_max_violation(plan: *const NasFootstepPlan) -> f64 {
    plan.as_ref().map_or(f64::NAN, |p| p.max_violation)
}

/// # Safety
/// `plan` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nas_plan_objective(plan: *const NasFootstepPlan) -> f64 {
    plan.as_ref().map_or(f64::NAN, |p| p.objective_value)
}
