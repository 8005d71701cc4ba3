use selfaffine_core::dyadic::CellSet;
use selfaffine_core::ifs::{rasterize, Ifs};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BM: &str = r#"{"maps":[
  {"A":[[0.25,0],[0,0.5]],"t":[0,0]},
  {"A":[[0.25,0],[0,0.5]],"t":[0,0.5]},
  {"A":[[0.25,0],[0,0.5]],"t":[0.5,0]}]}"#;

const SQUARE: &str = r#"{"maps":[
  {"A":[[0.5,0],[0,0.5]],"t":[0,0]},
  {"A":[[0.5,0],[0,0.5]],"t":[0.5,0]},
  {"A":[[0.5,0],[0,0.5]],"t":[0,0.5]},
  {"A":[[0.5,0],[0,0.5]],"t":[0.5,0.5]}]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfaffine")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn rasterize_writes_the_raster() {
    let dir = tempfile::tempdir().unwrap();
    let ifs = write(dir.path(), "bm.json", BM);
    let out = dir.path().join("cells.txt");
    let o = run(&["rasterize", "--ifs", ifs.to_str().unwrap(), "--level", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let expected = rasterize(&Ifs::from_json(BM).unwrap(), 7).unwrap();
    assert_eq!(CellSet::read_file(&out).unwrap(), expected);
    assert!(stdout(&o).contains(&format!("count,{}", expected.len())));
}

#[test]
fn box_dimension_of_the_square_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let ifs = write(dir.path(), "sq.json", SQUARE);
    let svg = dir.path().join("box.svg");
    let o = run(&[
        "dims", "--ifs", ifs.to_str().unwrap(), "--method", "box", "--m", "8",
        "--out-format", "json", "--plot", svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for e in v.as_array().unwrap() {
        assert!((e["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    }
    assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn pigeonhole_certificate_is_verified() {
    let dir = tempfile::tempdir().unwrap();
    let cells = dir.path().join("full.txt");
    CellSet::full(1, 8).unwrap().write_file(&cells).unwrap();
    let o = run(&[
        "pigeonhole", "--cells", cells.to_str().unwrap(), "--s", "0.5", "--t", "1", "--ell", "2", "--k", "2",
        "--out-format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verified"], true);
    assert_eq!(v["table"], serde_json::json!([1, 2, 4]));
}

#[test]
fn tube_range_is_parsed() {
    let dir = tempfile::tempdir().unwrap();
    let ifs = write(dir.path(), "sq.json", SQUARE);
    let o = run(&["tube", "--ifs", ifs.to_str().unwrap(), "--angle", "0", "--levels", "3..7"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("method,value"));
    assert_eq!(text.lines().count(), 6);
    let bad = run(&["tube", "--ifs", ifs.to_str().unwrap(), "--angle", "0", "--levels", "7"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "sq.json", SQUARE);
    let out = dir.path().join("x.txt");
    let o = run(&["rasterize", "--ifs", sq.to_str().unwrap(), "--level", "12", "--max-words", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let broken = write(dir.path(), "broken.json", "{\"maps\": [");
    let o = run(&["rasterize", "--ifs", broken.to_str().unwrap(), "--level", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["verify", "--family", "fj", "--params", "beta=0.6", "alpha=0.5", "b=0,0.3", "a=0,0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid family"));
}

#[test]
fn product_tangent_saves_a_loadable_report() {
    let dir = tempfile::tempdir().unwrap();
    let ifs = write(dir.path(), "bm.json", BM);
    let out = dir.path().join("report");
    let o = run(&[
        "product-tangent", "--ifs", ifs.to_str().unwrap(), "--m", "6", "--out", out.to_str().unwrap(),
        "--out-format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verified"], true);
    let report = selfaffine_core::tangent::ProductTangentReport::load(out.join("product.json")).unwrap();
    assert!(selfaffine_core::tangent::verify_product_bounds(&report));
}

#[test]
fn semigroup_classifies_the_carpet() {
    let dir = tempfile::tempdir().unwrap();
    let ifs = write(dir.path(), "bm.json", BM);
    let o = run(&["semigroup", "--ifs", ifs.to_str().unwrap(), "--depth", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("classification,dominated"));
}

#[test]
fn verify_exit_code_follows_the_rows() {
    let o = run(&["verify", "--family", "bm", "--params", "n=4", "m=2", "digits=0:0,0:1,2:0", "--budget", "10"]);
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let passes: Vec<bool> = rdr.records().map(|r| r.unwrap()[4].parse().unwrap()).collect();
    assert_eq!(passes.len(), 4, "{text}");
    let expected = if passes.iter().all(|&p| p) { 0 } else { 1 };
    assert_eq!(o.status.code(), Some(expected), "{text}");
}
