use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mechgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mechgraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn target_writes_pure_state() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("t");
    let result = mechgraph(&["target", "--graph", "linear-4", "--db", "5", "--out", &out_arg(&out)]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let m = manifest(&out);
    assert!((m["derived"]["purity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(m["command"], "target");
    let (header, rows) = csv_rows(&out.join("unitary.csv"));
    assert_eq!(header, "k,j,magnitude,phase");
    assert_eq!(rows.len(), 16);
    for name in ["adjacency.csv", "covariance.csv", "nullifier_spectrum.csv"] {
        assert!(out.join(name).is_file(), "{name}");
    }
}

#[test]
fn edgeless_target_is_diagonal() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("e");
    assert!(mechgraph(&["target", "--graph", "edgeless-2", "--r", "0.5", "--out", &out_arg(&out)]).status.success());
    let text = fs::read_to_string(out.join("covariance.csv")).unwrap();
    for (i, line) in text.lines().enumerate() {
        for (j, cell) in line.split(',').enumerate() {
            let x: f64 = cell.parse().unwrap();
            if i != j {
                assert!(x.abs() < 1e-15, "({i},{j}) = {x}");
            }
        }
    }
}

#[test]
fn drives_table_layout() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("d");
    assert!(mechgraph(&["drives", "--graph", "edgeless-3", "--db", "5", "--out", &out_arg(&out)]).status.success());
    let (header, rows) = csv_rows(&out.join("drives.csv"));
    assert_eq!(header, "step,j,alpha_minus,alpha_plus,phi_minus,phi_plus");
    assert_eq!(rows.len(), 9);
    for row in rows {
        let alpha: f64 = row[2].parse().unwrap();
        let expected = if row[0] == row[1] { 1.0 } else { 0.0 };
        assert!((alpha - expected).abs() < 1e-14);
    }
}

#[test]
fn steady_simulation_ends_on_target() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        &tmp,
        "steady.json",
        r#"{"graph": "square-4", "squeezing": {"db": 12.7}, "protocol": {"switch_time": "steady"}}"#,
    );
    let out = tmp.path().join("s");
    let result = mechgraph(&["simulate", "--config", &config, "--out", &out_arg(&out)]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let (header, rows) = csv_rows(&out.join("trajectory.csv"));
    assert_eq!(header, "time,kappa_units,step_index,fidelity");
    assert_eq!(rows.len(), 5);
    let last: f64 = rows.last().unwrap()[3].parse().unwrap();
    assert!((last - 1.0).abs() < 1e-8);
}

#[test]
fn simulation_output_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        &tmp,
        "fig2.json",
        r#"{"graph": "linear-4", "kappa": 2e5, "omega_spacing": 1e6, "squeezing": {"db": 5},
            "protocol": {"switch_time": 20, "sample_dt": 1}}"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert!(mechgraph(&["simulate", "--config", &config, "--out", &out_arg(dir)]).status.success());
    }
    let read = |d: &Path| fs::read(d.join("trajectory.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let (_, rows) = csv_rows(&a.join("trajectory.csv"));
    assert_eq!(rows.len(), 81);
    let boundary = &rows[20];
    assert_eq!(boundary[2], "1");
    assert_eq!(boundary[1].parse::<f64>().unwrap(), 20.0);
}

#[test]
fn strict_mode_rejects_regime_violations() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        &tmp,
        "crowded.json",
        r#"{"graph": "linear-2", "kappa": 2e5, "omega_spacing": 1e6, "squeezing": {"db": 5},
            "protocol": {"switch_time": 5}}"#,
    );
    let out = out_arg(&tmp.path().join("x"));
    let relaxed = mechgraph(&["simulate", "--config", &config, "--out", &out]);
    assert!(relaxed.status.success());
    assert!(String::from_utf8_lossy(&relaxed.stderr).contains("frequency_separation"));
    let strict = mechgraph(&["--strict", "simulate", "--config", &config, "--out", &out]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn malformed_input_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    let bad = write_config(&tmp, "bad.json", "{ not json");
    assert_eq!(mechgraph(&["simulate", "--config", &bad]).status.code(), Some(2));
    let unknown = write_config(&tmp, "unknown.json", r#"{"graph": "linear-2", "colour": 1}"#);
    assert_eq!(mechgraph(&["simulate", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(mechgraph(&["simulate"]).status.code(), Some(2));
    assert_eq!(mechgraph(&["target", "--graph", "blob-3", "--db", "5"]).status.code(), Some(2));
    assert_eq!(mechgraph(&["frobnicate"]).status.code(), Some(2));
    let adjacency = write_config(&tmp, "adj.txt", "0 1\n0 0\n");
    let out = out_arg(&tmp.path().join("adj"));
    assert_eq!(mechgraph(&["target", "--graph", &adjacency, "--db", "5", "--out", &out]).status.code(), Some(2));
}

#[test]
fn adjacency_file_is_accepted() {
    let tmp = TempDir::new().unwrap();
    let adjacency = write_config(&tmp, "tri.txt", "# triangle\n0 1 1\n1 0 1\n1 1 0\n");
    let out = tmp.path().join("tri");
    let result = mechgraph(&["target", "--graph", &adjacency, "--db", "3", "--out", &out_arg(&out)]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    assert_eq!(csv_rows(&out.join("unitary.csv")).1.len(), 9);
}

#[test]
fn analyze_reports_spectrum() {
    let result = mechgraph(&["analyze", "--graph", "linear-2", "--db", "5"]);
    assert!(result.status.success());
    let text = String::from_utf8_lossy(&result.stdout);
    assert!(text.contains("tau = 4.000000 /kappa"), "{text}");
    assert!(text.contains("step 1: not Hurwitz, 2 zero eigenvalues"), "{text}");
    assert_eq!(mechgraph(&["analyze", "--graph", "linear-2", "--r", "1.0"]).status.code(), Some(1));
}

#[test]
fn analyze_writes_json_when_asked() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("a");
    assert!(mechgraph(&["analyze", "--graph", "square-4", "--db", "5", "--out", &out_arg(&out)]).status.success());
    let analysis: Value = serde_json::from_str(&fs::read_to_string(out.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(analysis["steps"].as_array().unwrap().len(), 4);
    assert_eq!(analysis["steps"][0]["zero_eigenvalues"], 6);
}

#[test]
fn single_point_noise_sweep() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        &tmp,
        "noise.json",
        r#"{"graph": "linear-2", "kappa": 1e5, "omega_spacing": 1e6, "squeezing": {"db": 5},
            "sweep": {"kind": "noise", "gamma_over_kappa": [1e-5], "temperatures_mK": [10]}}"#,
    );
    let out = tmp.path().join("n");
    let result = mechgraph(&["--threads", "2", "sweep", "--config", &config, "--out", &out_arg(&out)]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let (header, rows) = csv_rows(&out.join("noise_sweep.csv"));
    assert_eq!(header, "gamma,T_mK,fidelity,t_opt");
    assert_eq!(rows.len(), 1);
    let f: f64 = rows[0][2].parse().unwrap();
    let t_opt: f64 = rows[0][3].parse().unwrap();

    use mechgraph::gaussian::SqueezingSpec;
    use mechgraph::graph::{builtin_graph, GraphKind, GraphTarget};
    use mechgraph::model::{Bath, SystemParams};
    use mechgraph::protocol::{optimize_evolution_time, ProtocolConfig, SwitchTime};
    let tau = std::f64::consts::TAU;
    let sq = SqueezingSpec::from_db(5.0).unwrap();
    let target = GraphTarget::new(builtin_graph(GraphKind::Linear, 2).unwrap(), sq).unwrap();
    let mut params = SystemParams::new(2, tau * 1e5, sq).unwrap();
    params.omegas = vec![tau * 1e6, tau * 2e6];
    params.gammas = vec![1e-5 * params.kappa; 2];
    params.baths = vec![Bath::Temperature(10e-3); 2];
    let direct = optimize_evolution_time(&target, &params, &ProtocolConfig::noisy(SwitchTime::Steady), None).unwrap();
    assert_eq!(f, direct.fidelity);
    assert_eq!(t_opt, direct.t_switch);
}

#[test]
fn squeezing_sweep_rows() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        &tmp,
        "sq.json",
        r#"{"graph": "linear", "kappa": 2e5, "omega_spacing": 11e6, "gammas": 32, "temperatures_mK": 15,
            "sweep": {"kind": "squeezing", "n_nodes": [1, 2], "dB": [3, 6]}}"#,
    );
    let out = tmp.path().join("q");
    let result = mechgraph(&["sweep", "--config", &config, "--out", &out_arg(&out)]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let (header, rows) = csv_rows(&out.join("squeezing_sweep.csv"));
    assert_eq!(header, "n_nodes,dB,fidelity,t_opt");
    let keys: Vec<(String, f64)> = rows.iter().map(|r| (r[0].clone(), r[1].parse().unwrap())).collect();
    assert_eq!(
        keys,
        vec![("1".into(), 3.0), ("1".into(), 6.0), ("2".into(), 3.0), ("2".into(), 6.0)]
    );
}
