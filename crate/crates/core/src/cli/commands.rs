//! Scenario runners behind the subcommands.

use std::fmt::Write as _;

use super::config::{DriveSpec, MapAxis, RunConfig, SweepKind, SweepSpec, Tolerances};
use super::output::{fmt_e, fmt_opt, Meta, Table};
use super::CliError;
use crate::analysis::{robustness_map, table1_report, RobustnessOptions, Table1Options};
use crate::error::Error;
use crate::lindblad::{
    batch_map, evolve, fidelity_target, mixed_vacuum, rotated_sigma_z, scenario_liouvillian, steady_state,
    uniform_grid, EvolveOptions, RelaxationBasis, SERIES_FIDELITY, SERIES_MIN_EIG, SERIES_P_MINUS, SERIES_P_PLUS,
    SERIES_SIGMA_Z_ROT, SERIES_TRACE,
};
use crate::model::{
    design_drive, frame_vectors, rwa_report_with_margin, CheckStatus, DriveDesign, DriveParams, RwaCheck,
    SystemParams, TargetState,
};
use crate::operators::partial_trace_resonator_op;
use crate::tcl::gamma_z;
use crate::units::to_mhz_2pi;

/// Fully specified drive, system and fidelity target.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub system: SystemParams,
    pub drive: DriveParams,
    pub target: TargetState,
    pub design: Option<DriveDesign>,
}

pub fn scenario(cfg: &RunConfig) -> Result<Scenario, CliError> {
    match &cfg.drive {
        Some(DriveSpec::Designed { target, omega_bar }) => {
            let dd = design_drive(target, *omega_bar, &cfg.system)?;
            Ok(Scenario { system: dd.system, drive: dd.drive, target: dd.target, design: Some(dd) })
        }
        Some(DriveSpec::Explicit { drive, target }) => {
            Ok(Scenario { system: cfg.system, drive: *drive, target: *target, design: None })
        }
        None => Err(CliError::Config("missing field `target.theta` (or a [drive] section)".into())),
    }
}

fn rwa(sc: &Scenario, tol: &Tolerances) -> Vec<RwaCheck> {
    rwa_report_with_margin(&sc.system, &sc.drive, &sc.target, tol.rwa_margin)
}

/// Under `--strict`, any check short of the margin is an error.
pub fn enforce_rwa(checks: &[RwaCheck], strict: bool) -> Result<(), CliError> {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if strict && !failed.is_empty() {
        return Err(CliError::Strict(format!("validity checks failed: {}", failed.join(", "))));
    }
    Ok(())
}

/// Rounded to the 4 displayed decimals so residues like -1e-15 print as 0.
fn display_mhz(omega: f64) -> f64 {
    (to_mhz_2pi(omega) * 1e4).round() / 1e4 + 0.0
}

fn mhz(omega: f64) -> String {
    format!("2π·{:.6} MHz", to_mhz_2pi(omega) + 0.0)
}

fn status_name(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Marginal => "marginal",
        CheckStatus::Fail => "FAIL",
    }
}

/// Human-readable drive design, frame vectors and validity report.
pub fn cmd_match(cfg: &RunConfig, strict: bool) -> Result<String, CliError> {
    let sc = scenario(cfg)?;
    let mut s = String::new();
    let w = &mut s;
    if let Some(dd) = &sc.design {
        let req = dd.requested;
        writeln!(w, "target            θ = {:.12} rad, φ = {:.12} rad", req.theta(), req.phi()).unwrap();
        if dd.remapped {
            writeln!(
                w,
                "remap             cosθ < 0: using antipodal θ' = {:.12} rad, φ' = {:.12} rad",
                dd.target.theta(),
                dd.target.phi()
            )
            .unwrap();
        }
        writeln!(w, "omega_bar         {}", mhz(dd.omega_bar)).unwrap();
    } else {
        writeln!(w, "target            θ = {:.12} rad, φ = {:.12} rad", sc.target.theta(), sc.target.phi()).unwrap();
    }
    let d = &sc.drive;
    writeln!(w, "rabi_re           {}", mhz(d.rabi_re)).unwrap();
    writeln!(w, "rabi_im           {}", mhz(d.rabi_im)).unwrap();
    writeln!(w, "qubit_detuning    {}", mhz(d.qubit_detuning(&sc.system))).unwrap();
    writeln!(w, "cavity_detuning   {}", mhz(d.resonator_detuning(&sc.system))).unwrap();
    writeln!(w, "drive_freq        {}", mhz(d.drive_freq)).unwrap();
    writeln!(w, "omega_c           {}", mhz(sc.system.omega_c)).unwrap();
    writeln!(w, "omega_sc          {}", mhz(sc.system.omega_sc)).unwrap();

    let fv = frame_vectors(&sc.system, &sc.drive, &sc.target);
    writeln!(w).unwrap();
    writeln!(
        w,
        "A                 ({:.6}, {:.6}, {:.6}) MHz·2π",
        to_mhz_2pi(fv.a[0]),
        to_mhz_2pi(fv.a[1]),
        to_mhz_2pi(fv.a[2])
    )
    .unwrap();
    let c = |z: num_complex::Complex64| format!("{:+.6}{:+.6}i", z.re, z.im);
    writeln!(w, "Theta             ({}, {}, {})", c(fv.theta[0]), c(fv.theta[1]), c(fv.theta[2])).unwrap();
    writeln!(w, "Theta_plus        {}", c(fv.theta_plus)).unwrap();
    writeln!(w, "Theta_minus       {}", c(fv.theta_minus)).unwrap();
    writeln!(w, "Delta_minus       {}", mhz(fv.delta_minus)).unwrap();
    writeln!(w, "Delta_plus        {}", mhz(fv.delta_plus)).unwrap();

    let checks = rwa(&sc, &cfg.tolerances);
    writeln!(w).unwrap();
    writeln!(w, "{:<24} {:>14} {:>14} {:>12}  status", "check", "lhs [MHz·2π]", "rhs [MHz·2π]", "ratio").unwrap();
    for ch in &checks {
        writeln!(
            w,
            "{:<24} {:>14.6} {:>14.6} {:>12.4}  {}",
            ch.name,
            to_mhz_2pi(ch.lhs),
            to_mhz_2pi(ch.rhs),
            ch.ratio,
            status_name(ch.status)
        )
        .unwrap();
    }
    enforce_rwa(&checks, strict).map(|_| s.clone()).map_err(|e| match e {
        CliError::Strict(msg) => CliError::StrictReport { report: s, msg },
        other => other,
    })
}

fn base_meta(cfg: &RunConfig, command: &str, fock: usize) -> Meta {
    Meta {
        command: command.into(),
        config_hash: cfg.hash.clone(),
        fock,
        tolerances: cfg.tolerances,
        extra: vec![(
            "relaxation".into(),
            match cfg.relaxation {
                RelaxationBasis::Energy => "energy".into(),
                RelaxationBasis::Rotated => "rotated".into(),
            },
        )],
    }
}

pub const SIMULATE_COLUMNS: [&str; 7] =
    ["t_seconds", "sigma_z_rot", "fidelity", "p_minus", "p_plus", "trace_dev", "min_eig"];

/// Full Lindblad trajectory from the maximally mixed qubit with the resonator in vacuum.
pub fn cmd_simulate(cfg: &RunConfig, strict: bool) -> Result<(Meta, Table), CliError> {
    let sc = scenario(cfg)?;
    enforce_rwa(&rwa(&sc, &cfg.tolerances), strict)?;
    let time = cfg.time.as_ref().ok_or_else(|| CliError::Config("missing field `time.t_end`".into()))?;
    let mut meta = base_meta(cfg, "simulate", sc.system.fock);
    meta.extra.push(("method".into(), format!("{:?}", time.method)));
    meta.extra.push(("initial_state".into(), "maximally mixed qubit, resonator vacuum".into()));
    let mut table = Table::new(&SIMULATE_COLUMNS);
    if time.t_end == 0.0 || time.steps == 0 {
        return Ok((meta, table));
    }
    let l = scenario_liouvillian(&sc.system, &sc.drive, &sc.target, cfg.relaxation)?;
    let times = uniform_grid(time.t_end, time.steps);
    let opts = EvolveOptions { method: time.method, observables: Vec::new(), limits: Some(cfg.tolerances.hygiene) };
    let mut traj = evolve(&l, &mixed_vacuum(sc.system.fock), &times, &opts)?;
    traj.add_target_series(&sc.target)?;
    let names = [SERIES_SIGMA_Z_ROT, SERIES_FIDELITY, SERIES_P_MINUS, SERIES_P_PLUS, SERIES_TRACE, SERIES_MIN_EIG];
    let cols: Vec<&[f64]> = names.iter().map(|n| traj.series(n).expect("recorded series")).collect();
    for (k, t) in traj.times().iter().enumerate() {
        let mut row = vec![fmt_e(*t)];
        row.extend(cols.iter().map(|c| fmt_e(c[k])));
        table.push(row);
    }
    Ok((meta, table))
}

/// Steady-state observables of one scenario.
#[derive(Clone, Copy, Debug)]
pub struct SteadyReport {
    pub fidelity: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    pub sigma_z_rot: f64,
    pub residual: f64,
    pub clipped_eigenvalue: f64,
}

pub fn steady_report(sc: &Scenario, relaxation: RelaxationBasis) -> Result<SteadyReport, Error> {
    let l = scenario_liouvillian(&sc.system, &sc.drive, &sc.target, relaxation)?;
    let ss = steady_state(&l)?;
    let red = partial_trace_resonator_op(ss.rho.op())?;
    let fidelity = fidelity_target(&ss.rho, &sc.target)?;
    let plus = sc.target.plus_ket();
    let p_plus = plus.dotc(&(red.matrix() * &plus)).re;
    Ok(SteadyReport {
        fidelity,
        p_minus: fidelity,
        p_plus,
        sigma_z_rot: rotated_sigma_z(&red, &sc.target),
        residual: ss.residual,
        clipped_eigenvalue: ss.clipped_eigenvalue,
    })
}

pub const STEADY_COLUMNS: [&str; 9] =
    ["fidelity", "p_minus", "p_plus", "sigma_z_rot", "residual", "clipped_eigenvalue", "nbar", "fock", "fock_drift"];

/// Steady state plus the fidelity shift from doubling the Fock cutoff.
pub fn cmd_steady(cfg: &RunConfig, strict: bool) -> Result<(Meta, Table, Vec<String>), CliError> {
    let sc = scenario(cfg)?;
    enforce_rwa(&rwa(&sc, &cfg.tolerances), strict)?;
    let rep = steady_report(&sc, cfg.relaxation)?;
    let doubled = Scenario { system: SystemParams { fock: 2 * sc.system.fock, ..sc.system }, ..sc.clone() };
    let drift = (steady_report(&doubled, cfg.relaxation)?.fidelity - rep.fidelity).abs();
    let mut warnings = Vec::new();
    if drift > cfg.tolerances.fock_drift {
        warnings.push(format!(
            "fidelity shifts by {} when the Fock cutoff is doubled to {}; raise `system.fock`",
            fmt_e(drift),
            doubled.system.fock
        ));
    }
    let mut meta = base_meta(cfg, "steady", sc.system.fock);
    meta.extra.push(("steady_state".into(), "full Lindblad steady state".into()));
    let mut table = Table::new(&STEADY_COLUMNS);
    table.push(vec![
        fmt_e(rep.fidelity),
        fmt_e(rep.p_minus),
        fmt_e(rep.p_plus),
        fmt_e(rep.sigma_z_rot),
        fmt_e(rep.residual),
        fmt_e(rep.clipped_eigenvalue),
        fmt_e(sc.system.nbar()?),
        sc.system.fock.to_string(),
        fmt_e(drift),
    ]);
    Ok((meta, table, warnings))
}

pub fn cmd_sweep(cfg: &RunConfig, strict: bool, workers: usize) -> Result<(Meta, Table), CliError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("missing field `sweep.kind`".into()))?;
    match sweep.kind {
        SweepKind::RateMap => Ok(rate_map(cfg, sweep)),
        SweepKind::Robustness => robustness(cfg, sweep, strict, workers),
        SweepKind::FidelityMap => fidelity_map(cfg, sweep, strict, workers),
    }
}

/// Matched rate Γ_z(Δ/κ, θ) in units of g²/κ.
fn rate_map(cfg: &RunConfig, sweep: &SweepSpec) -> (Meta, Table) {
    let (g, kappa) = (cfg.system.g, cfg.system.kappa);
    let unit = g * g / kappa;
    let mut table = Table::new(&["delta_over_kappa", "theta", "gamma_z_norm"]);
    for x in sweep.x.values() {
        for y in sweep.y.values() {
            let v = gamma_z(g, kappa, y, x * kappa).map(|r| r / unit).unwrap_or(f64::NAN);
            table.push(vec![fmt_e(x), fmt_e(y), fmt_e(v)]);
        }
    }
    let mut meta = base_meta(cfg, "sweep rate_map", cfg.system.fock);
    meta.extra.push(("units".into(), "gamma_z_norm = Gamma_z * kappa / g^2".into()));
    (meta, table)
}

pub const ROBUSTNESS_COLUMNS: [&str; 8] = [
    "delta_re",
    "delta_im",
    "fidelity",
    "infidelity",
    "infidelity_e3",
    "time_to_99_sigma_z",
    "time_to_99_fidelity",
    "residual",
];

fn robustness(cfg: &RunConfig, sweep: &SweepSpec, strict: bool, workers: usize) -> Result<(Meta, Table), CliError> {
    let sc = scenario(cfg)?;
    enforce_rwa(&rwa(&sc, &cfg.tolerances), strict)?;
    let opts = RobustnessOptions { relaxation: cfg.relaxation, threshold: sweep.threshold, window: sweep.window, workers };
    let grid = robustness_map(&sc.drive, &sc.target, &sc.system, &sweep.x.values(), &sweep.y.values(), &opts)?;
    // Without a window the times are not evaluated at all.
    let time_cell = |t: Option<f64>| if sweep.window.is_some() { fmt_opt(t) } else { fmt_e(f64::NAN) };
    let mut table = Table::new(&ROBUSTNESS_COLUMNS);
    for (i, dr) in grid.delta_re.iter().enumerate() {
        for (j, di) in grid.delta_im.iter().enumerate() {
            let c = grid.cells[i][j];
            table.push(vec![
                fmt_e(*dr),
                fmt_e(*di),
                fmt_e(1.0 - c.infidelity),
                fmt_e(c.infidelity),
                fmt_e(c.infidelity * 1e3),
                time_cell(c.time_sigma_z),
                time_cell(c.time_fidelity),
                fmt_e(c.residual),
            ]);
        }
    }
    let mut meta = base_meta(cfg, "sweep robustness", sc.system.fock);
    meta.extra.push(("steady_state".into(), "full Lindblad steady state".into()));
    meta.extra.push(("threshold".into(), fmt_e(sweep.threshold)));
    match sweep.window {
        Some(w) => meta.extra.push(("window".into(), format!("t_end={} steps={}", fmt_e(w.t_end), w.steps))),
        None => meta.extra.push(("window".into(), "none".into())),
    }
    Ok((meta, table))
}

fn fidelity_map(cfg: &RunConfig, sweep: &SweepSpec, strict: bool, workers: usize) -> Result<(Meta, Table), CliError> {
    let Some(DriveSpec::Designed { target, omega_bar }) = cfg.drive else {
        return Err(CliError::Config("fidelity_map needs target.theta, target.phi and target.omega_bar".into()));
    };
    let (x_axis, y_axis) = sweep.axes.expect("fidelity_map axes resolved");
    let two = 2.0 * omega_bar;
    let point = |x: f64, y: f64| -> Result<(SystemParams, TargetState), Error> {
        let mut sys = cfg.system;
        let (mut theta, mut phi) = (target.theta(), target.phi());
        if let Some(eta) = sweep.eta {
            sys.g = two * eta;
        }
        if let Some(zeta) = sweep.zeta {
            sys.kappa = two * zeta;
        }
        if let Some(gamma) = sweep.gamma {
            sys.gamma_s = two * gamma;
            sys.gamma_p = two * gamma;
        }
        for (axis, v) in [(x_axis, x), (y_axis, y)] {
            match axis {
                MapAxis::Eta => sys.g = two * v,
                MapAxis::Zeta => sys.kappa = two * v,
                MapAxis::Gamma => {
                    sys.gamma_s = two * v;
                    sys.gamma_p = two * v;
                }
                MapAxis::Theta => theta = v,
                MapAxis::Phi => phi = v,
            }
        }
        Ok((sys, TargetState::wrapped(theta, phi)?))
    };
    let (base_sys, base_target) = point(sweep.x.values()[0], sweep.y.values()[0])?;
    let base = design_drive(&base_target, omega_bar, &base_sys)?;
    let sc = Scenario { system: base.system, drive: base.drive, target: base.target, design: Some(base) };
    enforce_rwa(&rwa(&sc, &cfg.tolerances), strict)?;

    let jobs: Vec<(f64, f64)> =
        sweep.x.values().into_iter().flat_map(|x| sweep.y.values().into_iter().map(move |y| (x, y))).collect();
    let results = batch_map(&jobs, workers, |_, &(x, y)| -> Result<SteadyReport, Error> {
        let (sys, t) = point(x, y)?;
        let dd = design_drive(&t, omega_bar, &sys)?;
        let sc = Scenario { system: dd.system, drive: dd.drive, target: dd.target, design: Some(dd) };
        steady_report(&sc, cfg.relaxation).map_err(|e| Error::GridPoint { x, y, source: Box::new(e) })
    });
    let mut table = Table::new(&[x_axis.name(), y_axis.name(), "fidelity", "residual"]);
    for (&(x, y), r) in jobs.iter().zip(results) {
        let r = r?;
        table.push(vec![fmt_e(x), fmt_e(y), fmt_e(r.fidelity), fmt_e(r.residual)]);
    }
    let mut meta = base_meta(cfg, "sweep fidelity_map", cfg.system.fock);
    meta.extra.push(("steady_state".into(), "full Lindblad steady state".into()));
    meta.extra.push(("omega_bar".into(), fmt_e(omega_bar)));
    Ok((meta, table))
}

pub const TABLE1_COLUMNS: [&str; 9] = [
    "axis",
    "rabi_re",
    "rabi_im",
    "qubit_detuning",
    "cavity_detuning",
    "t_tcl",
    "t_sim",
    "fit_residual",
    "ratio",
];

/// Axis-time table; returns the formatted text and the CSV table.
pub fn cmd_table1(
    cfg: &RunConfig,
    tcl_only: bool,
    strict: bool,
    workers: usize,
) -> Result<(String, Meta, Table), CliError> {
    let opts = Table1Options { simulate: !tcl_only, relaxation: cfg.relaxation, workers, ..Table1Options::default() };
    let rows = table1_report(&cfg.system, &opts)?;
    let mut failed = Vec::new();
    for r in &rows {
        let checks = rwa_report_with_margin(&r.system, &r.drive, &r.axis.target(), cfg.tolerances.rwa_margin);
        if let Err(CliError::Strict(msg)) = enforce_rwa(&checks, strict) {
            failed.push(format!("{}: {msg}", r.axis.name()));
        }
    }
    if !failed.is_empty() {
        return Err(CliError::Strict(failed.join("; ")));
    }
    let opt = |x: Option<f64>, scale: f64| x.map_or("-".to_string(), |v| format!("{:.4}", v * scale));
    let mut text = String::new();
    writeln!(
        text,
        "{:<5} {:>12} {:>12} {:>12} {:>12} {:>10} {:>10} {:>8}",
        "axis", "Re Ω [MHz]", "Im Ω [MHz]", "δϖ [MHz]", "δω [MHz]", "T_tcl [µs]", "T_sim [µs]", "ratio"
    )
    .unwrap();
    let mut table = Table::new(&TABLE1_COLUMNS);
    for r in &rows {
        let (qd, cd) = (r.drive.qubit_detuning(&r.system), r.drive.resonator_detuning(&r.system));
        writeln!(
            text,
            "{:<5} {:>12.4} {:>12.4} {:>12.4} {:>12.4} {:>10.4} {:>10} {:>8}",
            r.axis.name(),
            display_mhz(r.drive.rabi_re),
            display_mhz(r.drive.rabi_im),
            display_mhz(qd),
            display_mhz(cd),
            r.t_tcl * 1e6,
            opt(r.t_sim, 1e6),
            opt(r.ratio, 1.0),
        )
        .unwrap();
        table.push(vec![
            r.axis.name().to_string(),
            fmt_e(r.drive.rabi_re),
            fmt_e(r.drive.rabi_im),
            fmt_e(qd),
            fmt_e(cd),
            fmt_e(r.t_tcl),
            r.t_sim.map_or(String::new(), fmt_e),
            r.fit_residual.map_or(String::new(), fmt_e),
            r.ratio.map_or(String::new(), fmt_e),
        ]);
    }
    let mut meta = base_meta(cfg, if tcl_only { "table1 --tcl-only" } else { "table1" }, cfg.system.fock);
    meta.extra.push(("units".into(), "rad/s and seconds".into()));
    Ok((text, meta, table))
}
