//! End-to-end tests of the `wagg` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use wagg_core::WeightedStructure;

const G1: &str = "signature\nrelation E 2\nrelation R 1\nrelation B 1\nweight w 2 Q\npredicates v1\nend\nuniverse 3\n\
E(0,1)\nE(1,0)\nE(1,2)\nE(2,1)\nR(0)\nB(2)\nw(0,1) = 2\nw(1,0) = 2\nw(1,2) = 1/2\nw(2,1) = 1/2\n";

/// Sum of the weights of edges from `x` to blue neighbours.
const T_B: &str = "(agg (* (w x1 y)) (and (= x1 x) (rel E x y) (rel B y)))";

const CLASS: &str = "# adjacency to a parameter, and colour\nradius 1\ninstance x\nparameters y\n\
formula (rel E x y)\nformula (rel R x)\nclosure boolean\n";

fn wagg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wagg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Path 0–1–…–7 with R on the even elements.
fn path_structure() -> String {
    let mut text = String::from("signature\nrelation E 2\nrelation R 1\npredicates v1\nend\nuniverse 8\n");
    for i in 0..7 {
        text.push_str(&format!("E({},{})\nE({},{})\n", i, i + 1, i + 1, i));
    }
    for i in (0..8).step_by(2) {
        text.push_str(&format!("R({i})\n"));
    }
    text
}

#[test]
fn eval_prints_the_blue_edge_weight() {
    let dir = TempDir::new().unwrap();
    let g1 = file(&dir, "g1.wst", G1);
    let tb = file(&dir, "tb.fml", T_B);
    let o = wagg(&["eval", "--structure", s(&g1), "--formula", s(&tb), "--tuple", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "1/2\n");
}

#[test]
fn eval_without_tuple_lists_every_assignment() {
    let dir = TempDir::new().unwrap();
    let g1 = file(&dir, "g1.wst", G1);
    let o = wagg(&["eval", "--structure", s(&g1), "--expr", T_B]);
    assert_eq!(stdout(&o), "# x\n0\t0\n1\t1/2\n2\t0\n");
    let o = wagg(&["eval", "--structure", s(&g1), "--expr", "(exists y (rel E x y))"]);
    assert_eq!(stdout(&o), "# x\n0\ttrue\n1\ttrue\n2\ttrue\n");
}

#[test]
fn errors_exit_nonzero_with_the_variant_name_and_file() {
    let dir = TempDir::new().unwrap();
    let g1 = file(&dir, "g1.wst", G1);
    let bad = file(&dir, "bad.fml", "(rel E x");
    let o = wagg(&["eval", "--structure", s(&g1), "--formula", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("SyntaxError: "), "{err}");
    assert!(err.contains("bad.fml"), "{err}");

    let broken = file(&dir, "broken.wst", &G1.replace("E(1,2)", "E(1,9)"));
    let o = wagg(&["eval", "--structure", s(&broken), "--expr", T_B]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("broken.wst"), "{}", stderr(&o));

    let o = wagg(&["eval", "--structure", s(&dir.path().join("missing.wst")), "--expr", T_B]);
    assert!(stderr(&o).starts_with("IoError: "));

    let o = wagg(&["--caps.pairs", "1", "fv", "--expr", "(exists z (and (rel R z) (or (rel E x z) (rel E y z))))", "--left", "x", "--right", "y"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("BlowupExceeded: "), "{}", stderr(&o));
}

#[test]
fn analyze_reports_rank_depth_and_fragment() {
    let o = wagg(&["analyze", "--expr", "(exists y (and (rel E x y) (rel B y)))"]);
    assert_eq!(stdout(&o), "free_vars: x\nquantifier_rank: 1\nagg_depth: 0\nfragment: FO\n");
}

#[test]
fn fv_and_gaifman_list_pairs_and_leaves() {
    let o = wagg(&["fv", "--expr", "(or (and (rel R x) (rel B y)) (and (rel B x) (rel R y)))", "--left", "x", "--right", "y"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("formula: "));
    let n: usize = lines[2].strip_prefix("pairs: ").unwrap().parse().unwrap();
    assert_eq!(lines.len(), 3 + n);
    assert!(lines[3..].iter().all(|l| l.split('\t').count() == 2));

    let o = wagg(&["gaifman", "--expr", "(exists y (and (rel E x y) (rel B y)))"]);
    let text = stdout(&o);
    let n: usize = text.lines().nth(1).unwrap().strip_prefix("leaves: ").unwrap().parse().unwrap();
    assert!(n >= 1);
    assert!(text.lines().skip(2).all(|l| l.starts_with("local\t") || l.starts_with("basic-local\t") || l.starts_with("local-aggregation\t")));
}

#[test]
fn expand_writes_structure_and_manifest_that_agree_with_the_input() {
    let dir = TempDir::new().unwrap();
    let g1 = file(&dir, "g1.wst", G1);
    let phi = "(pred gt (agg (* (w x1 y)) (and (= x1 x) (rel E x y))) 1:Q)";
    let o = wagg(&["expand", "--structure", s(&g1), "--expr", phi]);
    assert!(o.status.success(), "{}", stderr(&o));
    let expanded = dir.path().join("g1.expanded.wst");
    let manifest = fs::read_to_string(dir.path().join("g1.expanded.manifest")).unwrap();
    let final_line = manifest.lines().last().unwrap();
    let final_formula = final_line.strip_prefix("final\t").unwrap();
    let direct = wagg(&["eval", "--structure", s(&g1), "--expr", phi]);
    let via = wagg(&["eval", "--structure", s(&expanded), "--expr", final_formula]);
    assert!(via.status.success(), "{}", stderr(&via));
    assert_eq!(stdout(&direct), stdout(&via));
}

#[test]
fn gen_structure_round_trips_byte_for_byte_and_is_seeded() {
    let a = stdout(&wagg(&["--seed", "7", "gen-structure", "--size", "30", "--degree", "3"]));
    let b = stdout(&wagg(&["--seed", "7", "gen-structure", "--size", "30", "--degree", "3"]));
    let c = stdout(&wagg(&["--seed", "8", "gen-structure", "--size", "30", "--degree", "3"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let s = WeightedStructure::from_text(&a).unwrap();
    assert_eq!(s.to_text(), a);
    assert!(s.degree() <= 3);
}

#[test]
fn learn_exact_rejects_contradictory_labels() {
    let dir = TempDir::new().unwrap();
    let st = file(&dir, "path.wst", &path_structure());
    let class = file(&dir, "class.txt", CLASS);
    let training = file(&dir, "t.csv", "a1,label\n3,1\n3,0\n");
    let o = wagg(&["learn-exact", "--structure", s(&st), "--class", s(&class), "--training", s(&training)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no consistent hypothesis"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn learners_emit_json_records_with_query_counts() {
    let dir = TempDir::new().unwrap();
    let st = file(&dir, "path.wst", &path_structure());
    let class = file(&dir, "class.txt", CLASS);
    // Neighbours of 4 are positive.
    let training = file(&dir, "t.csv", "a1,label\n3,1\n5,1\n1,0\n4,0\n7,0\n");
    let args = ["--structure", s(&st), "--class", s(&class), "--training", s(&training)];
    let o = wagg(&[&["learn-exact"], &args[..]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let rec: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rec["training_error"], "0");
    assert_eq!(rec["examples"], 5);
    for key in ["relation_probes", "weight_lookups", "neighbour_queries"] {
        assert!(rec["query_counts"][key].is_u64());
    }
    assert_eq!(rec["query_counts"]["weight_lookups"], 0);

    let noisy = file(&dir, "n.csv", "a1,label\n3,1\n5,1\n1,0\n4,0\n7,0\n3,0\n");
    let o = wagg(&["learn-pac", "--structure", s(&st), "--class", s(&class), "--training", s(&noisy)]);
    let rec: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rec["training_error"], "1/6");
    let again = wagg(&["learn-pac", "--structure", s(&st), "--class", s(&class), "--training", s(&noisy)]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn experiment_report_has_one_row_per_trial_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let st = file(&dir, "path.wst", &path_structure());
    let class = file(&dir, "class.txt", CLASS);
    let csv = dir.path().join("report.csv");
    let args = [
        "--seed", "11", "--output", s(&csv), "experiment", "--structure", s(&st), "--class", s(&class),
        "--expr", "(rel E x y)", "--target-params", "4", "--trials", "20",
    ];
    let o = wagg(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read(&csv).unwrap();
    let text = String::from_utf8(report.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 20 + 1);
    assert!(lines[0].ends_with("relation_probes,weight_lookups,neighbour_queries"));
    assert!(lines[21].starts_with("summary,"));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let freq = summary["success_frequency"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&freq));
    assert_eq!(summary["best_error"], "0");

    let o2 = wagg(&args);
    assert_eq!(o.stdout, o2.stdout);
    assert_eq!(fs::read(&csv).unwrap(), report);
}
