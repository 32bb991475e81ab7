use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use nasplan_ffi::*;

const DEMO: &str = r#"{
    "surfaces": [
        {"id": 0, "vertices": [[-0.3,-0.5,0],[0.3,-0.5,0],[0.3,0.1,0],[-0.3,0.1,0]]},
        {"id": 1, "vertices": [[0.45,-0.5,0],[1.05,-0.5,0],[1.05,0.5,0],[0.45,0.5,0]]}
    ],
    "kinematics": {
        "reach_left_given_right": [[-0.35,0.12,-0.25],[0.45,0.12,-0.25],[0.45,0.45,-0.25],[-0.35,0.45,-0.25],
                                   [-0.25,0.14,0.25],[0.35,0.14,0.25],[0.35,0.40,0.25],[-0.25,0.40,0.25]],
        "reach_right_given_left": [[-0.35,-0.12,-0.25],[0.45,-0.12,-0.25],[0.45,-0.45,-0.25],[-0.35,-0.45,-0.25],
                                   [-0.25,-0.14,0.25],[0.35,-0.14,0.25],[0.35,-0.40,0.25],[-0.25,-0.40,0.25]],
        "foot_half_extents": [0.0, 0.0]
    },
    "goal": {"vertices": [[0.8, 0.2, 0.0]]},
    "goal_effector": "left",
    "max_steps": 2
}"#;

fn last_error() -> String {
    let p = nas_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn demo_tree() -> *mut NasTree {
    let json = CString::new(DEMO).unwrap();
    let mut inst = ptr::null_mut();
    let mut tree = ptr::null_mut();
    unsafe {
        assert_eq!(nas_instance_parse(json.as_ptr(), &mut inst), NasStatus::Ok);
        assert_eq!(nas_tree_build(inst, 0, true, 0, &mut tree), NasStatus::Ok);
        nas_instance_free(inst);
    }
    tree
}

#[test]
fn build_query_plan() {
    let tree = demo_tree();
    unsafe {
        assert_eq!(nas_tree_node_count(tree), 4);
        assert_eq!(nas_tree_layer_count(tree), 3);
        assert_eq!((0..4).map(|d| nas_tree_layer_size(tree, d)).collect::<Vec<_>>(), vec![1, 1, 2, 0]);

        let mut steps = 99;
        assert_eq!(nas_tree_query(tree, [0.8, 0.2, 0.0].as_ptr(), NasEffector::Left, &mut steps), NasStatus::Ok);
        assert_eq!(steps, 0);
        assert_eq!(nas_tree_query(tree, [0.1, 0.0, 0.0].as_ptr(), NasEffector::Left, &mut steps), NasStatus::Ok);
        assert_eq!(steps, 2);

        let mut plan = ptr::null_mut();
        let st = nas_tree_plan(tree, [0.1, 0.0, 0.0].as_ptr(), NasEffector::Left, 0, NasObjective::MinStepLength, &mut plan);
        assert_eq!(st, NasStatus::Ok);
        assert_eq!(nas_plan_len(plan), 3);
        assert_eq!(nas_plan_status(plan), NasSolveStatus::Feasible);
        assert!(nas_plan_max_violation(plan) <= 1e-8);
        assert!(nas_plan_objective(plan) > 0.0);
        let mut q = [0.0; 3];
        let mut e = NasEffector::Left;
        assert_eq!(nas_plan_position(plan, 1, q.as_mut_ptr(), &mut e), NasStatus::Ok);
        assert_eq!(e, NasEffector::Right);
        assert_eq!(nas_plan_position(plan, 2, q.as_mut_ptr(), &mut e), NasStatus::Ok);
        assert!((q[0] - 0.8).abs() < 1e-9 && (q[1] - 0.2).abs() < 1e-9);
        assert_eq!(nas_plan_position(plan, 3, q.as_mut_ptr(), ptr::null_mut()), NasStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));
        nas_plan_free(plan);
        nas_tree_free(tree);
    }
}

#[test]
fn errors_are_reported() {
    let tree = demo_tree();
    unsafe {
        let mut steps = 0;
        assert_eq!(nas_tree_query(tree, [9.0, 9.0, 0.0].as_ptr(), NasEffector::Left, &mut steps), NasStatus::NoSolution);
        assert_eq!(nas_tree_query(tree, ptr::null(), NasEffector::Left, &mut steps), NasStatus::NullArgument);
        assert_eq!(last_error(), "point is null");
        assert_eq!(nas_tree_query(tree, [f64::NAN, 0.0, 0.0].as_ptr(), NasEffector::Left, &mut steps), NasStatus::InvalidArgument);
        assert_eq!(nas_tree_invalidate_surface(tree, 7, ptr::null_mut()), NasStatus::InvalidArgument);

        let mut n = 0;
        assert_eq!(nas_tree_invalidate_surface(tree, 0, &mut n), NasStatus::Ok);
        assert_eq!(n, 1);
        assert!(nas_last_error().is_null());
        assert_eq!(nas_tree_query(tree, [0.1, 0.0, 0.0].as_ptr(), NasEffector::Left, &mut steps), NasStatus::NoSolution);
        nas_tree_free(tree);

        let bad = CString::new("{}").unwrap();
        let mut inst = ptr::null_mut();
        assert_eq!(nas_instance_parse(bad.as_ptr(), &mut inst), NasStatus::InvalidInput);
        assert!(inst.is_null());
        let missing = CString::new("/nonexistent/instance.json").unwrap();
        assert_eq!(nas_instance_load(missing.as_ptr(), &mut inst), NasStatus::Io);

        let json = CString::new(DEMO).unwrap();
        assert_eq!(nas_instance_parse(json.as_ptr(), &mut inst), NasStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(nas_tree_build(inst, 0, true, 2, &mut t), NasStatus::NodeBudget);
        assert!(t.is_null());
        nas_instance_free(inst);
        nas_tree_free(ptr::null_mut());
    }
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("demo.tree").to_str().unwrap()).unwrap();
    let tree = demo_tree();
    let mut back = ptr::null_mut();
    unsafe {
        assert_eq!(nas_tree_save(tree, path.as_ptr()), NasStatus::Ok);
        assert_eq!(nas_tree_load(path.as_ptr(), &mut back), NasStatus::Ok);
        assert_eq!(nas_tree_node_count(back), nas_tree_node_count(tree));
        nas_tree_free(tree);
        nas_tree_free(back);
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libnasplan_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or {} missing", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "nodes 4 positions 3 status 0 goal 0.800 0.200 0.000\noff-scene 6 message\n");
}
