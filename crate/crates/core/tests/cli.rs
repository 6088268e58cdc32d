use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use bathsim::tcl::equilibrium_sigma_z;
use bathsim::units::ghz_2pi;
use tempfile::TempDir;

const TABLE1_Z: &str = "\
[system]
g = 2MHz2pi
kappa = 20MHz2pi
nbar = 0

[target]
theta = 0
phi = 0
omega_bar = 100MHz2pi
";

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn bathsim(dir: &TempDir, config: Option<&str>, args: &[&str]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bathsim"));
    cmd.args(args);
    if let Some(text) = config {
        let path: PathBuf = dir.path().join("run.ini");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    Run {
        code: status.code().unwrap_or(-1),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

/// Header and rows of a CSV with `#` comment lines.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines.next().expect("header").split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn match_sigma_z_detunings() {
    let dir = TempDir::new().unwrap();
    let r = bathsim(&dir, Some(TABLE1_Z), &["match"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("qubit_detuning    2π·200.000000 MHz"), "{}", r.stdout);
    assert!(r.stdout.contains("cavity_detuning   2π·200.000000 MHz"));
    assert!(!r.stdout.contains("remap"));
}

#[test]
fn match_diagonal_target_quadratures() {
    let dir = TempDir::new().unwrap();
    let text = TABLE1_Z.replace("theta = 0", "theta = acos(1/sqrt(3))").replace("phi = 0", "phi = 3pi/4");
    let r = bathsim(&dir, Some(&text), &["match"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let q = format!("2π·{:.6} MHz", 100.0 / 3f64.sqrt());
    let dq = format!("2π·{:.6} MHz", 200.0 / 3f64.sqrt());
    assert!(r.stdout.contains(&format!("rabi_re           {q}")), "{}", r.stdout);
    assert!(r.stdout.contains(&format!("rabi_im           {q}")));
    assert!(r.stdout.contains(&format!("qubit_detuning    {dq}")));
}

#[test]
fn match_reports_antipodal_remap() {
    let dir = TempDir::new().unwrap();
    let text = TABLE1_Z.replace("theta = 0", "theta = 2pi/3");
    let r = bathsim(&dir, Some(&text), &["match"]);
    assert_eq!(r.code, 0);
    let line = r.stdout.lines().find(|l| l.starts_with("remap")).expect("remap notice");
    assert!(line.contains(&format!("θ' = {:.12}", std::f64::consts::FRAC_PI_3)), "{line}");
}

#[test]
fn strict_mode_fails_on_validity_checks() {
    let dir = TempDir::new().unwrap();
    let text = TABLE1_Z.replace("kappa = 20MHz2pi", "kappa = 100MHz2pi");
    let lax = bathsim(&dir, Some(&text), &["match"]);
    assert_eq!(lax.code, 0);
    assert!(lax.stdout.contains("FAIL") || lax.stdout.contains("marginal"));
    let strict = bathsim(&dir, Some(&text), &["match", "--strict"]);
    assert_eq!(strict.code, 3);
    assert!(strict.stderr.contains("second_rwa_kappa"), "{}", strict.stderr);
    let steady = bathsim(&dir, Some(&text), &["steady", "--strict"]);
    assert_eq!(steady.code, 3);
}

#[test]
fn simulate_table1_sigma_z() {
    let dir = TempDir::new().unwrap();
    let text = format!("{TABLE1_Z}\n[time]\nt_end = 1us\nsteps = 100\n");
    let out = dir.path().join("traj.csv");
    let r = bathsim(&dir, Some(&text), &["simulate", "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = std::fs::read_to_string(&out).unwrap();
    let (header, rows) = csv_rows(&csv);
    assert_eq!(header, ["t_seconds", "sigma_z_rot", "fidelity", "p_minus", "p_plus", "trace_dev", "min_eig"]);
    assert_eq!(rows.len(), 101);
    let last = rows.last().unwrap();
    assert!((last[0] - 1e-6).abs() < 1e-18);
    assert!(last[column(&header, "fidelity")] >= 0.99);
    assert!(rows.iter().all(|r| r[column(&header, "trace_dev")] < 1e-9));
    assert!(rows.iter().all(|r| r[column(&header, "min_eig")] > -1e-8));
}

#[test]
fn simulate_optimized_point_by_tau_500() {
    let dir = TempDir::new().unwrap();
    let text = "\
[system]
eta = 1/9
zeta = 1/3
gamma = 0

[target]
theta = 0
phi = 0
omega_bar = 100MHz2pi

[time]
t_end = 500tau
steps = 50
";
    let r = bathsim(&dir, Some(text), &["simulate"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    let last = rows.last().unwrap();
    assert!((last[0] - 500.0 / (2.0 * 2e8 * std::f64::consts::PI)).abs() < 1e-18);
    assert!(last[column(&header, "fidelity")] >= 0.99);
}

#[test]
fn simulate_zero_duration_is_header_only() {
    let dir = TempDir::new().unwrap();
    let text = format!("{TABLE1_Z}\n[time]\nt_end = 0us\nsteps = 10\n");
    let r = bathsim(&dir, Some(&text), &["simulate"]);
    assert_eq!(r.code, 0);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(header.len(), 7);
    assert!(rows.is_empty());
}

#[test]
fn steady_table1_sigma_z() {
    let dir = TempDir::new().unwrap();
    let r = bathsim(&dir, Some(TABLE1_Z), &["steady", "--fock", "6"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("# meta: fock=6"));
    assert!(r.stdout.contains("full Lindblad steady state"));
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(rows.len(), 1);
    assert!(rows[0][column(&header, "fidelity")] >= 0.99);
    assert!(rows[0][column(&header, "fock_drift")] < 1e-4);
}

#[test]
fn steady_weak_coupling_matches_thermal_equilibrium() {
    let dir = TempDir::new().unwrap();
    let text = TABLE1_Z.replace("g = 2MHz2pi", "g = 0.01MHz2pi").replace("nbar = 0", "temperature = 150mK");
    let r = bathsim(&dir, Some(&text), &["steady"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    // The designed drive keeps the resonator at 6 GHz.
    let want = equilibrium_sigma_z(ghz_2pi(6.0), 0.15).unwrap();
    let got = rows[0][column(&header, "sigma_z_rot")];
    assert!((got - want).abs() < 0.01, "{got} vs {want}");
}

#[test]
fn missing_field_exit_code() {
    let dir = TempDir::new().unwrap();
    let text = TABLE1_Z.replace("kappa = 20MHz2pi\n", "");
    let r = bathsim(&dir, Some(&text), &["steady"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("system.kappa"), "{}", r.stderr);
    let r = bathsim(&dir, None, &["steady"]);
    assert_eq!(r.code, 2);
}

#[test]
fn config_errors_exit_code() {
    let dir = TempDir::new().unwrap();
    for bad in [
        TABLE1_Z.replace("nbar = 0", "nbar = 0\nwidth = 4"),
        TABLE1_Z.replace("20MHz2pi", "20"),
        TABLE1_Z.replace("[target]", "[targets]"),
        format!("{TABLE1_Z}[drive]\nrabi_re = 1MHz2pi\ndrive_freq = 6GHz2pi\n"),
    ] {
        let r = bathsim(&dir, Some(&bad), &["match"]);
        assert_eq!(r.code, 2, "{bad}\n{}", r.stderr);
    }
}

#[test]
fn solver_failure_exit_code() {
    let dir = TempDir::new().unwrap();
    // Decoupled qubit without intrinsic loss: the steady state is not unique.
    let text = TABLE1_Z.replace("g = 2MHz2pi", "g = 0");
    let r = bathsim(&dir, Some(&text), &["steady"]);
    assert_eq!(r.code, 4, "{}", r.stderr);
}

#[test]
fn rate_map_peaks_at_four() {
    let dir = TempDir::new().unwrap();
    let text = "\
[system]
g = 2MHz2pi
kappa = 20MHz2pi

[sweep]
kind = rate_map
x_min = -3
x_max = 3
x_points = 13
y_min = 0
y_max = pi
y_points = 9
";
    let r = bathsim(&dir, Some(text), &["sweep"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(header, ["delta_over_kappa", "theta", "gamma_z_norm"]);
    assert_eq!(rows.len(), 13 * 9);
    let best = rows.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    assert_eq!((best[0], best[1]), (0.0, 0.0));
    assert!((best[2] - 4.0).abs() < 1e-12);
}

#[test]
fn robustness_origin_is_best_cell() {
    let dir = TempDir::new().unwrap();
    let text = "\
[system]
g = 2MHz2pi
kappa = 20MHz2pi

[target]
theta = acos(1/sqrt(3))
phi = 3pi/4
omega_bar = 100MHz2pi

[sweep]
kind = robustness
x_min = -0.3
x_max = 0.3
x_points = 21
y_min = -0.3
y_max = 0.3
y_points = 21
t_end = 0us
";
    let r = bathsim(&dir, Some(text), &["sweep"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(rows.len(), 441);
    let inf = column(&header, "infidelity");
    let e3 = column(&header, "infidelity_e3");
    let best = rows.iter().min_by(|a, b| a[inf].total_cmp(&b[inf])).unwrap();
    assert!(best[0].abs() < 1e-12 && best[1].abs() < 1e-12, "{best:?}");
    assert!(rows.iter().all(|r| (r[e3] - 1e3 * r[inf]).abs() <= 1e-9 * r[e3].abs().max(1e-12)));
    assert!(rows.iter().all(|r| r[column(&header, "time_to_99_fidelity")].is_nan()));
}

#[test]
fn fidelity_map_over_target_angles() {
    let dir = TempDir::new().unwrap();
    let text = "\
[system]
fock = 6

[target]
theta = 0
phi = 0
omega_bar = 100MHz2pi

[sweep]
kind = fidelity_map
eta = 0.25
zeta = 0.17
gamma = 0.02
x_axis = theta
y_axis = phi
x_min = 0
x_max = pi/2
x_points = 5
y_min = 0
y_max = 2pi
y_points = 5
";
    let r = bathsim(&dir, Some(text), &["sweep", "--workers", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(header, ["theta", "phi", "fidelity", "residual"]);
    let max = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    assert!(max > 0.99);

    let again = bathsim(&dir, Some(text), &["sweep", "--workers", "1"]);
    assert_eq!(r.stdout, again.stdout);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let text = format!("{TABLE1_Z}\n[time]\nt_end = 0.3us\nsteps = 30\n");
    let a = bathsim(&dir, Some(&text), &["simulate", "--fock", "5"]);
    let b = bathsim(&dir, Some(&text), &["simulate", "--fock", "5"]);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    let hash = a.stdout.lines().find(|l| l.starts_with("# meta: config_sha256=")).unwrap();
    assert_eq!(hash.len(), "# meta: config_sha256=".len() + 64);
}

#[test]
fn table1_reduced_model_is_fast() {
    let dir = TempDir::new().unwrap();
    let start = Instant::now();
    let r = bathsim(&dir, None, &["table1", "--tcl-only"]);
    assert!(start.elapsed() < Duration::from_secs(1));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = {
        let csv: String = r.stdout.lines().skip_while(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
        let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
        let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
        let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        (header, rows)
    };
    let t = column(&header, "t_tcl");
    let times: Vec<f64> = rows.iter().map(|r| r[t].parse().unwrap()).collect();
    for (got, want) in times.iter().zip([0.8e-6, 0.8e-6, 0.2e-6]) {
        assert!((got / want - 1.0).abs() < 0.05);
    }
    assert!(rows.iter().all(|r| r[column(&header, "ratio")].is_empty()));
}

#[test]
fn table1_full_ratios() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("table1.csv");
    let r = bathsim(&dir, None, &["table1", "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("T_tcl"));
    let csv = std::fs::read_to_string(out).unwrap();
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let ratio = header.iter().position(|h| *h == "ratio").unwrap();
    let ratios: Vec<f64> = lines.map(|l| l.split(',').nth(ratio).unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 3);
    assert!(ratios.iter().all(|r| (0.75..=1.25).contains(r)), "{ratios:?}");
}
