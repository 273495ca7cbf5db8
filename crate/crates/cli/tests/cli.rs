use ftl_core::lattice::{make_grid, CompactWindow};
use ftl_core::propagators::read_kernel_dump;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

const FTL: &str = env!("CARGO_BIN_EXE_ftl");

fn ftl(dir: &Path, config: &str, args: &[&str], env: &[(&str, &str)]) -> Output {
    let path = dir.join("scenario_in.toml");
    std::fs::write(&path, config).unwrap();
    let mut cmd = Command::new(FTL);
    cmd.arg("--config").arg(&path).arg("--out").arg(dir.join("out")).args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

const HARMONIC: &str = "[hamiltonian]\npreset = \"harmonic\"\n[grid]\nN = 64\nL = 6.0\n";
const FREE: &str = "[hamiltonian]\npreset = \"free\"\n[grid]\nN = 128\nL = 16.0\n";

#[test]
fn flow_reports_det_b() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{HARMONIC}[time]\nt = [{}, 0.0]\n", PI / 2.0);
    let o = ftl(dir.path(), &cfg, &["flow"], &[]);
    assert_eq!(code(&o), 0);
    let flow = read_json(&dir.path().join("out/flow.json"));
    assert!((flow[0]["det_b"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(flow[0]["exceptional"], false);
    assert_eq!(flow[1]["det_b"].as_f64().unwrap(), 0.0);
    assert_eq!(flow[1]["exceptional"], true);

    let o = ftl(dir.path(), &format!("{FREE}[time]\nt = [1.0]\n"), &["flow"], &[]);
    assert_eq!(code(&o), 0);
    let flow = read_json(&dir.path().join("out/flow.json"));
    assert!((flow[0]["det_b"].as_f64().unwrap() - 2.0 * PI).abs() < 1e-12);
}

#[test]
fn exceptional_roots_and_degenerate_marker() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftl(dir.path(), HARMONIC, &["exceptional"], &[]);
    assert_eq!(code(&o), 0);
    let set = read_json(&dir.path().join("out/exceptional.json"));
    let roots: Vec<f64> = set["roots"].as_array().unwrap().iter().map(|r| r["t"].as_f64().unwrap()).collect();
    assert_eq!(roots.len(), 7);
    for (i, t) in roots.iter().enumerate() {
        assert!((t - (i as f64 - 3.0) * PI).abs() < 1e-8);
    }

    let o = ftl(dir.path(), &format!("{FREE}[time]\nscan = [-5.0, 5.0]\n"), &["exceptional"], &[]);
    assert_eq!(code(&o), 0);
    let set = read_json(&dir.path().join("out/exceptional.json"));
    assert_eq!(set["roots"].as_array().unwrap().len(), 1);
    assert_eq!(set["roots"][0]["t"].as_f64().unwrap(), 0.0);

    let o = ftl(dir.path(), HARMONIC, &["exceptional"], &[("FTL_HAMILTONIAN_PRESET", "zero")]);
    assert_eq!(code(&o), 0);
    let set = read_json(&dir.path().join("out/exceptional.json"));
    assert_eq!(set["status"], "degenerate");
    assert_eq!(set["whole_line"], true);
}

#[test]
fn kernel_dump_checksum_and_descriptor_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("[hamiltonian]\npreset = \"harmonic\"\n[grid]\nN = 256\nL = 8.0\n[time]\nt = [{}]\n", PI / 2.0);
    let o = ftl(dir.path(), &cfg, &["kernel", "--provenance", "mehler"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let bin = std::fs::read(dir.path().join("out/kernel_mehler.bin")).unwrap();
    assert_eq!(bin.len(), 2 * 256 * 256 * 8);
    let digest: String = Sha256::digest(&bin).iter().map(|b| format!("{b:02x}")).collect();
    assert!(String::from_utf8_lossy(&o.stdout).contains(&digest));
    let sidecar = read_json(&dir.path().join("out/kernel_mehler.json"));
    for key in ["d", "N", "L", "t", "n", "provenance", "hamiltonian", "potential", "c_t", "boundary_mass"] {
        assert!(sidecar.get(key).is_some(), "sidecar misses {key}");
    }

    let cfg = format!("[hamiltonian]\npreset = \"harmonic\"\n[grid]\nN = 64\nL = 6.0\n[time]\nt = [{PI}]\n");
    let o = ftl(dir.path(), &cfg, &["kernel", "--provenance", "mehler"], &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sidecar only"));
    let sidecar = read_json(&dir.path().join("out/kernel_mehler.json"));
    assert_eq!(sidecar["descriptor"]["k"], 1);

    let cfg = format!("{FREE}[time]\nt = [0.0]\n");
    let o = ftl(dir.path(), &cfg, &["kernel", "--provenance", "metaplectic"], &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("det B_t"));
}

#[test]
fn kernel_dumps_differ_by_the_tabulated_sup_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[hamiltonian]\npreset = \"harmonic\"\n[potential]\nkind = \"cosine\"\namplitude = 1.0\nfrequency = [1.0]\n\
               [grid]\nN = 64\nL = 6.0\n[study]\nschedule = [32, 64]\natoms = 3\n[kernel]\nn = 64\n";
    assert_eq!(code(&ftl(dir.path(), cfg, &["kernel"], &[])), 0);
    assert_eq!(code(&ftl(dir.path(), cfg, &["kernel", "--provenance", "eigensolver"], &[])), 0);
    let o = ftl(dir.path(), cfg, &["converge", "--threads", "2"], &[]);
    assert!(matches!(code(&o), 0 | 4));
    let (_, trotter) = read_kernel_dump(&dir.path().join("out/kernel_trotter_n64")).unwrap();
    let (_, exact) = read_kernel_dump(&dir.path().join("out/kernel_eigensolver")).unwrap();
    let grid = make_grid(1, 64, 6.0).unwrap();
    let inside = CompactWindow::new(grid).inside_indices();
    let mut sup = 0.0f64;
    for &j in &inside {
        for &k in &inside {
            sup = sup.max((trotter[(j, k)] - exact[(j, k)]).norm());
        }
    }
    let csv = std::fs::read_to_string(dir.path().join("out/converge.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("64,")).unwrap();
    let tabulated: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((sup - tabulated).abs() <= 1e-12 * tabulated, "{sup} vs {tabulated}");
}

#[test]
fn free_convergence_is_exact_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{FREE}[study]\nschedule = [8, 16]\natoms = 4\n");
    let o = ftl(dir.path(), &cfg, &["converge"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(dir.path().join("out/converge.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "n,sup_err,fl1_err,minfty1_norm,weakstar_max_gap,m1_slice_err,boundary_mass");
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        for i in [1, 2, 4, 5] {
            assert!(cols[i].parse::<f64>().unwrap() <= 1e-10, "{line}");
        }
    }
    assert_eq!(code(&ftl(dir.path(), &cfg, &["converge"], &[])), 0);
    assert_eq!(std::fs::read(dir.path().join("out/converge.csv")).unwrap(), first);
    let jsonl = std::fs::read_to_string(dir.path().join("out/converge.jsonl")).unwrap();
    let header: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(header["kind"], "report");
    assert_eq!(jsonl.lines().count(), 3);
}

#[test]
fn routing_and_band_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftl(dir.path(), &format!("{HARMONIC}[time]\nt = [1.0]\n[study]\nschedule = [8, 16]\natoms = 3\n"), &["weakstar"], &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not exceptional"));
    let o = ftl(dir.path(), &format!("{HARMONIC}[time]\nt = [{PI}]\n[study]\nschedule = [8, 16]\natoms = 3\n"), &["converge"], &[]);
    assert_eq!(code(&o), 3);

    let strict = "[hamiltonian]\npreset = \"harmonic\"\n[potential]\nkind = \"cosine\"\namplitude = 1.0\nfrequency = [1.0]\n\
                  [grid]\nN = 64\nL = 6.0\n[study]\nschedule = [8, 16]\natoms = 3\n[study.bands]\nfinal_factor = 1e-9\n";
    let o = ftl(dir.path(), strict, &["converge"], &[]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sup_err_final_factor"));
    assert!(dir.path().join("out/converge.csv").exists());
}

#[test]
fn amplitude_limit_for_the_free_particle() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftl(dir.path(), "[hamiltonian]\npreset = \"free\"\n[grid]\nN = 1024\nL = 16.0\n", &["amplitude"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let study = read_json(&dir.path().join("out/amplitude.json"));
    let target = 2.0 * (2.0 * PI).powf(-0.5);
    assert!((study["extrapolated"].as_f64().unwrap() - target).abs() < 0.05 * target);
    assert_eq!(study["reference_source"], "analytic");
}

#[test]
fn parse_errors_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftl(dir.path(), "[grid]\nN = 64\nL = \"wide\"\n", &["flow"], &[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(code(&ftl(dir.path(), HARMONIC, &["flow", "--threads", "0"], &[])), 1);
    assert_eq!(code(&ftl(dir.path(), HARMONIC, &["no-such-command"], &[])), 1);
    assert_eq!(code(&ftl(dir.path(), HARMONIC, &["flow"], &[("FTL_GRID_N", "15")])), 1);

    let o = ftl(dir.path(), HARMONIC, &["flow", "--seed", "5"], &[("FTL_GRID_N", "32"), ("FTL_TIME_T", "[0.5]")]);
    assert_eq!(code(&o), 0);
    let resolved = std::fs::read_to_string(dir.path().join("out/scenario.toml")).unwrap();
    assert!(resolved.contains("N = 32") && resolved.contains("seed = 5") && resolved.contains("t = [0.5]"), "{resolved}");
}

#[test]
fn stft_report_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[hamiltonian]\npreset = \"harmonic\"\n[potential]\nkind = \"cosine\"\namplitude = 0.5\nfrequency = [1.0]\n\
               [grid]\nN = 32\nL = 4.0\n[study]\nschedule = [4]\n";
    let o = ftl(dir.path(), cfg, &["stft-report"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/stft_report.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2 * 5 + 1);
    for l in &lines[..10] {
        for key in ["object_id", "flavor", "p", "q", "s", "value", "lattice"] {
            assert!(l.get(key).is_some());
        }
    }
    assert_eq!(lines[1]["p"], "inf");
    assert_eq!(lines[10]["object_id"], "potential:gram");
}
