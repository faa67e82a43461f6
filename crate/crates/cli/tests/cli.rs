use mating_lab::group::base_group;
use mating_lab::sigma::SigmaMap;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mating-lab-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write<T: serde::Serialize>(dir: &Path, name: &str, v: &T) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn mating_lab(dir: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_mating-lab"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env_remove("MATING_LAB_THREADS")
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let dir = workdir("usage");
    assert_eq!(mating_lab(&dir, &["render"]), 2);
    assert_eq!(mating_lab(&dir, &["frobnicate"]), 2);
    assert_eq!(mating_lab(&dir, &["moduli", "--h", "-1"]), 2);
    let g = write(&dir, "g.json", &base_group(4).unwrap());
    assert_eq!(mating_lab(&dir, &["ray", "--group", g.to_str().unwrap(), "--angle", "0/1"]), 2);
}

#[test]
fn bad_input_exits_1_with_error_report() {
    let dir = workdir("bad");
    let p = dir.join("f.json");
    std::fs::write(&p, "{\"d\": 3}").unwrap();
    assert_eq!(mating_lab(&dir, &["ray", "--sigma", p.to_str().unwrap(), "--angle", "0/1"]), 1);
    let r = report(&dir, "ray");
    assert_eq!(r["passed"], false);
    assert!(r["error"].is_string());
}

#[test]
fn fixed_ray_of_base_map() {
    let dir = workdir("ray");
    let f = write(&dir, "f0_d3.json", &SigmaMap::f0(3).unwrap());
    assert_eq!(mating_lab(&dir, &["ray", "--sigma", f.to_str().unwrap(), "--angle", "0/1"]), 0);
    let r = report(&dir, "ray");
    let p = &r["results"]["landing"]["point"];
    let (x, y) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
    // σ fixes (4/3)e^{iπ/4}, where the 0-ray lands.
    let w = 4.0 / 3.0 * std::f64::consts::FRAC_1_SQRT_2;
    assert!(((x - w).powi(2) + (y - w).powi(2)).sqrt() < 1e-3, "{x} {y}");
}

#[test]
fn group_render_and_determinism() {
    let dir = workdir("render");
    let g = write(&dir, "base5.json", &base_group(5).unwrap());
    let g = g.to_str().unwrap();
    for name in ["a", "b"] {
        let code = mating_lab(&dir, &["--threads", "1", "render", "--group", g, "--res", "512", "--width", "3", "--name", name]);
        assert_eq!(code, 0);
    }
    let a = std::fs::read(dir.join("a.ppm")).unwrap();
    let b = std::fs::read(dir.join("b.ppm")).unwrap();
    assert!(a.starts_with(b"P6\n512 512\n255\n"));
    assert_eq!(a, b);
    let (ra, rb) = (report(&dir, "a"), report(&dir, "b"));
    let hist = &ra["results"]["histogram"];
    assert!(hist["limit"].as_u64().unwrap() > 0, "{hist}");
    assert_eq!(hist, &rb["results"]["histogram"]);
    assert_eq!(ra["inputs"], rb["inputs"]);
}

#[test]
fn pack_and_moduli_commands() {
    let dir = workdir("pack");
    let f = write(&dir, "f1.json", &SigmaMap::cubic_family(2.0));
    let f = f.to_str().unwrap();
    assert_eq!(mating_lab(&dir, &["pack", "--sigma", f]), 0);
    assert!(report(&dir, "packing")["checks"].as_array().is_some_and(|c| !c.is_empty()));
    assert_eq!(mating_lab(&dir, &["moduli", "--sigma", f, "--h", "0.03125"]), 0);
    let r = report(&dir, "moduli");
    assert_eq!(r["results"]["value"]["kind"], "infinite", "{r}");
}
