use std::process::{Command, Output};

fn sir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sir-times")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn compute_at_zero_susceptibles() {
    let o = sir(&["compute", "--beta", "2", "--gamma", "3", "--mu", "1", "--x", "0", "--y", "20.0855369232", "--time", "u"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(
        &sir(&["compute", "--beta", "2", "--gamma", "3", "--x", "0", "--y", "20.0855369232", "--format", "json"]).stdout,
    )
    .unwrap();
    assert_eq!(v["row"]["method"], "ExactX0");
    let ode = v["evaluation"]["ode"]["value"].as_f64().unwrap();
    let exact = v["evaluation"]["integral"]["value"].as_f64().unwrap();
    assert!((exact - 1.0).abs() < 1e-10);
    assert!((ode - 1.0).abs() < 1e-9);
    assert!(stdout(&o).starts_with("u = 1.00000000000"));
}

#[test]
fn compute_on_v_boundary() {
    let o = sir(&["compute", "--beta", "3", "--gamma", "3", "--x", "1", "--y", "2", "--time", "v"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("v = 0.0000000000000000e0  [BoundaryZero]"));
}

#[test]
fn both_methods_agree() {
    let o = sir(&["compute", "--beta", "2", "--gamma", "3", "--mu", "1", "--x", "4", "--y", "2", "--time", "u", "--method", "both", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["evaluation"]["rel_discrepancy"].as_f64().unwrap() < 1e-6);
}

#[test]
fn exit_codes() {
    assert_eq!(sir(&["compute", "--beta", "3", "--gamma", "3", "--x", "5", "--y", "0", "--time", "v"]).status.code(), Some(4));
    assert_eq!(sir(&["compute", "--beta=-1", "--gamma", "3", "--x", "5", "--y", "1"]).status.code(), Some(2));
    assert_eq!(sir(&["compute", "--gamma", "3", "--x", "5", "--y", "1"]).status.code(), Some(2));
    assert_eq!(sir(&["compute", "--beta", "2", "--gamma", "3", "--x", "5"]).status.code(), Some(2));
    assert_eq!(sir(&["grid", "--beta", "2", "--gamma", "3", "--x", "0:1:1", "--y", "1:2:3"]).status.code(), Some(2));
    assert_eq!(sir(&["grid", "--beta", "3", "--gamma", "3", "--time", "v", "--x", "5:6:2", "--y", "0:1:2"]).status.code(), Some(5));
    assert_eq!(sir(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(sir(&["--help"]).status.code(), Some(0));
}

#[test]
fn grid_on_u_boundary_is_zero() {
    let o = sir(&["grid", "--beta", "2", "--gamma", "3", "--time", "u", "--x", "0:1.5:2", "--y", "0.5:1:2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,y,value,method,err_estimate,lower,upper,asymptotic,status");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r[2], "0.0000000000000000e0");
        assert_eq!(r[3], "BoundaryZero");
    }
    // y outer, x inner
    assert_eq!((rows[1][0], rows[1][1]), ("1.5000000000000000e0", "5.0000000000000000e-1"));
}

#[test]
fn json_grid_mirrors_csv_fields() {
    let o = sir(&["grid", "--beta", "3", "--gamma", "3", "--time", "v", "--x", "2:4:3", "--y", "1:2:2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for r in rows {
        let lo = r["lower"].as_f64().unwrap();
        let hi = r["upper"].as_f64().unwrap();
        let val = r["value"].as_f64().unwrap();
        assert!(lo <= val && val <= hi);
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "beta = 2\ngamma = 3\nx = 4\ny = 2\ntime = u\nmethod = integral\n").unwrap();
    let from_file = sir(&["compute", "--config", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(from_file.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&from_file.stdout).unwrap();
    assert!((v["row"]["value"].as_f64().unwrap() - 0.7345107821039448).abs() < 1e-12);

    let overridden = sir(&["compute", "--config", path.to_str().unwrap(), "--gamma", "4", "--format", "json"]);
    let w: serde_json::Value = serde_json::from_slice(&overridden.stdout).unwrap();
    assert_ne!(w["row"]["value"], v["row"]["value"]);
}

#[test]
fn asymptotic_rays() {
    let o = sir(&["asymptotics", "--beta", "2", "--gamma", "3", "--mu", "1", "--time", "u", "--ray", "share:0.5", "--r", "1e2:1e6:5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let ratios: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 5);
    assert!((ratios[4] - 1.0).abs() < 0.1);

    let o = sir(&["asymptotics", "--beta", "2", "--gamma", "3", "--time", "u", "--ray", "share:0", "--r", "1e1:1e5:5"]);
    for l in stdout(&o).lines().skip(1) {
        assert_eq!(l.rsplit(',').next().unwrap(), "1.0000000000000000e0");
    }

    let o = sir(&["asymptotics", "--beta", "3", "--gamma", "3", "--time", "v", "--ray", "fixed-y:1", "--r", "1e2:1e6:5"]);
    let last: f64 = stdout(&o).lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((last - 1.0).abs() < 0.1);
}

#[test]
fn verify_quick_and_sabotage() {
    let o = sir(&["verify", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
    let o = sir(&["verify", "--quick", "--perturb", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL  pde-residual-u"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pde-residual-u"));
}

#[test]
fn bounds_report() {
    let o = sir(&["bounds", "--beta", "3", "--gamma", "3", "--x", "5", "--y", "1", "--time", "v", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let val = 0.2174623977335871;
    assert!(v["lower"].as_f64().unwrap() <= val && val <= v["upper"].as_f64().unwrap());
}
