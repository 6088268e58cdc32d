//! Post-processing: exponential fits, robustness maps and the axis-time table.

use crate::error::{Error, Result};
use crate::lindblad::{
    batch_map, evolve, fidelity_target, mixed_vacuum, scenario_liouvillian, steady_state, uniform_grid,
    EvolveOptions, RelaxationBasis, Trajectory, SERIES_FIDELITY, SERIES_SIGMA_Z_ROT,
};
use crate::model::{design_drive, DriveParams, SystemParams, TargetState};
use crate::tcl;
use crate::units::mhz_2pi;

/// Result of [`fit_exponential`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpFit {
    /// Time constant, in the units of the input times.
    pub tau: f64,
    /// Root-mean-square residual of `y − (1 − e^{−t/τ})`.
    pub residual: f64,
}

/// Samples with `1 − y` below this are dropped from the log-linear stage.
pub const FIT_CLIP: f64 = 1e-6;

/// Least-squares fit of `y = 1 − e^{−t/τ}`.
///
/// A weighted log-linear fit through the origin seeds one Gauss–Newton step
/// on the nonlinear residuals.
pub fn fit_exponential(t: &[f64], y: &[f64]) -> Result<ExpFit> {
    if t.len() != y.len() {
        return Err(Error::Fit(format!("{} times but {} values", t.len(), y.len())));
    }
    if t.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 samples, got {}", t.len())));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Fit("times must be strictly increasing".into()));
    }
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slack = 0.01 * (hi - lo);
    let mut running = y[0];
    for &v in y {
        if v < running - slack {
            return Err(Error::Fit("input is not monotonically increasing".into()));
        }
        running = running.max(v);
    }
    if y.iter().all(|v| 1.0 - v < FIT_CLIP) {
        return Err(Error::Fit("input is saturated everywhere".into()));
    }

    // Weights (1 − y)² undo the error amplification of the logarithm.
    let (mut num, mut den) = (0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        let r = 1.0 - yi;
        if r < FIT_CLIP || ti == 0.0 {
            continue;
        }
        let w = r * r;
        num += w * ti * r.ln();
        den += w * ti * ti;
    }
    if den == 0.0 || !(num < 0.0) {
        return Err(Error::Fit("no decaying samples".into()));
    }
    let mut tau = -den / num;

    let (mut jr, mut jj) = (0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        let e = (-ti / tau).exp();
        let r = yi - (1.0 - e);
        let j = -e * ti / (tau * tau);
        jr += j * r;
        jj += j * j;
    }
    if jj > 0.0 {
        let step = jr / jj;
        if (tau + step) > 0.0 && (tau + step).is_finite() {
            tau += step;
        }
    }
    let residual = (t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| (yi - (1.0 - (-ti / tau).exp())).powi(2))
        .sum::<f64>()
        / t.len() as f64)
        .sqrt();
    Ok(ExpFit { tau, residual })
}

/// `−⟨σ_z⟩` in the target frame.
pub fn normalized_sigma_z(traj: &Trajectory) -> Result<Vec<f64>> {
    traj.series(SERIES_SIGMA_Z_ROT)
        .map(|s| s.iter().map(|v| -v).collect())
        .ok_or_else(|| Error::InvalidArgument(format!("trajectory has no `{SERIES_SIGMA_Z_ROT}` series")))
}

/// First time the series reaches `threshold`, linearly interpolated.
pub fn first_crossing(times: &[f64], values: &[f64], threshold: f64) -> Option<f64> {
    if values.first().is_some_and(|v| *v >= threshold) {
        return times.first().copied();
    }
    for k in 1..values.len().min(times.len()) {
        if values[k] >= threshold {
            let (t0, t1, v0, v1) = (times[k - 1], times[k], values[k - 1], values[k]);
            return Some(t0 + (t1 - t0) * (threshold - v0) / (v1 - v0));
        }
    }
    None
}

/// Evolution window used for time-to-threshold evaluations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeWindow {
    pub t_end: f64,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct RobustnessOptions {
    pub relaxation: RelaxationBasis,
    /// Threshold on −⟨σ_z⟩ and on the fidelity.
    pub threshold: f64,
    /// `None` skips the time evolutions.
    pub window: Option<TimeWindow>,
    pub workers: usize,
}

impl Default for RobustnessOptions {
    fn default() -> Self {
        RobustnessOptions {
            relaxation: RelaxationBasis::Energy,
            threshold: 0.99,
            window: Some(TimeWindow { t_end: 20e-6, steps: 4000 }),
            workers: 0,
        }
    }
}

/// One grid cell of a robustness map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustnessCell {
    pub infidelity: f64,
    pub residual: f64,
    /// First time −⟨σ_z⟩ reaches the threshold; `None` when never reached in the window.
    pub time_sigma_z: Option<f64>,
    /// First time the fidelity reaches the threshold.
    pub time_fidelity: Option<f64>,
}

/// Steady-state infidelity and polarization times over (Δ_R, Δ_I).
#[derive(Clone, Debug)]
pub struct RobustnessGrid {
    pub delta_re: Vec<f64>,
    pub delta_im: Vec<f64>,
    /// `cells[i][j]` belongs to `(delta_re[i], delta_im[j])`.
    pub cells: Vec<Vec<RobustnessCell>>,
}

impl RobustnessGrid {
    pub fn infidelity(&self, i: usize, j: usize) -> f64 {
        self.cells[i][j].infidelity
    }

    pub fn infidelities(&self) -> Vec<Vec<f64>> {
        self.cells.iter().map(|row| row.iter().map(|c| c.infidelity).collect()).collect()
    }

    /// Indices of the exact grid value pair, if present.
    pub fn index_of(&self, dr: f64, di: f64) -> Option<(usize, usize)> {
        let i = self.delta_re.iter().position(|v| (v - dr).abs() < 1e-12)?;
        let j = self.delta_im.iter().position(|v| (v - di).abs() < 1e-12)?;
        Some((i, j))
    }
}

/// Drive with `Re Ω → Re Ω·(1+Δ_R)`, `Im Ω → Im Ω·(1+Δ_I)`; detunings held fixed.
pub fn perturb_drive(base: &DriveParams, delta_re: f64, delta_im: f64) -> DriveParams {
    DriveParams { rabi_re: base.rabi_re * (1.0 + delta_re), rabi_im: base.rabi_im * (1.0 + delta_im), ..*base }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() || axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("{name} axis must be finite and strictly increasing")));
    }
    Ok(())
}

fn robustness_cell(
    sys: &SystemParams,
    drive: &DriveParams,
    target: &TargetState,
    opts: &RobustnessOptions,
) -> Result<RobustnessCell> {
    let l = scenario_liouvillian(sys, drive, target, opts.relaxation)?;
    let ss = steady_state(&l)?;
    let infidelity = (1.0 - fidelity_target(&ss.rho, target)?).clamp(0.0, 1.0);
    let (mut time_sigma_z, mut time_fidelity) = (None, None);
    if let Some(w) = opts.window {
        let times = uniform_grid(w.t_end, w.steps);
        let mut traj = evolve(&l, &mixed_vacuum(sys.fock), &times, &EvolveOptions::default())?;
        traj.add_target_series(target)?;
        let sz = normalized_sigma_z(&traj)?;
        time_sigma_z = first_crossing(&times, &sz, opts.threshold);
        time_fidelity = first_crossing(&times, traj.series(SERIES_FIDELITY).unwrap_or(&[]), opts.threshold);
    }
    Ok(RobustnessCell { infidelity, residual: ss.residual, time_sigma_z, time_fidelity })
}

/// Robustness of the prepared state against Rabi-amplitude errors.
///
/// `base` is the designed drive, `sys` the matching system and `target` the
/// state the drive prepares.
pub fn robustness_map(
    base: &DriveParams,
    target: &TargetState,
    sys: &SystemParams,
    delta_re: &[f64],
    delta_im: &[f64],
    opts: &RobustnessOptions,
) -> Result<RobustnessGrid> {
    check_axis("Δ_R", delta_re)?;
    check_axis("Δ_I", delta_im)?;
    sys.validate()?;
    let jobs: Vec<(f64, f64)> =
        delta_re.iter().flat_map(|&x| delta_im.iter().map(move |&y| (x, y))).collect();
    let results = batch_map(&jobs, opts.workers, |_, &(x, y)| {
        robustness_cell(sys, &perturb_drive(base, x, y), target, opts)
            .map_err(|e| Error::GridPoint { x, y, source: Box::new(e) })
    });
    let mut flat = Vec::with_capacity(results.len());
    for r in results {
        flat.push(r?);
    }
    let cells = flat.chunks(delta_im.len()).map(|c| c.to_vec()).collect();
    Ok(RobustnessGrid { delta_re: delta_re.to_vec(), delta_im: delta_im.to_vec(), cells })
}

/// Cartesian axis used in the axis-time table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CartesianAxis {
    X,
    Y,
    Z,
}

impl CartesianAxis {
    pub const ALL: [CartesianAxis; 3] = [CartesianAxis::X, CartesianAxis::Y, CartesianAxis::Z];

    /// Target whose `|−⟩` is the ground state of σ_x, σ_y or σ_z.
    pub fn target(self) -> TargetState {
        use std::f64::consts::{FRAC_PI_2, PI};
        let (theta, phi) = match self {
            CartesianAxis::X => (FRAC_PI_2, PI),
            CartesianAxis::Y => (FRAC_PI_2, FRAC_PI_2),
            CartesianAxis::Z => (0.0, 0.0),
        };
        TargetState::new(theta, phi).expect("angles in range")
    }

    pub fn name(self) -> &'static str {
        match self {
            CartesianAxis::X => "x",
            CartesianAxis::Y => "y",
            CartesianAxis::Z => "z",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Table1Row {
    pub axis: CartesianAxis,
    pub drive: DriveParams,
    /// System after matching (resonator retuned).
    pub system: SystemParams,
    pub t_tcl: f64,
    pub t_sim: Option<f64>,
    pub fit_residual: Option<f64>,
    pub ratio: Option<f64>,
}

/// Effective Rabi frequency used for the axis-time table.
pub fn table1_omega_bar() -> f64 {
    mhz_2pi(100.0)
}

#[derive(Clone, Copy, Debug)]
pub struct Table1Options {
    /// Run the full simulations; otherwise only the reduced model is evaluated.
    pub simulate: bool,
    /// Simulated span in units of the reduced-model time.
    pub span: f64,
    pub steps: usize,
    pub relaxation: RelaxationBasis,
    pub workers: usize,
}

impl Default for Table1Options {
    fn default() -> Self {
        Table1Options { simulate: true, span: 6.0, steps: 300, relaxation: RelaxationBasis::Energy, workers: 0 }
    }
}

/// Polarization times of the three Cartesian ground states from the reduced
/// model and from fitted full simulations.
pub fn table1_report(sys: &SystemParams, opts: &Table1Options) -> Result<Vec<Table1Row>> {
    sys.validate()?;
    let rows = batch_map(&CartesianAxis::ALL, opts.workers, |_, &axis| -> Result<Table1Row> {
        let dd = design_drive(&axis.target(), table1_omega_bar(), sys)?;
        let fv = crate::model::frame_vectors(&dd.system, &dd.drive, &dd.target);
        let nbar = dd.system.nbar()?;
        let t_tcl = tcl::polarization_time(sys.g, sys.kappa, dd.target.theta(), fv.delta_minus, nbar)?;
        let (mut t_sim, mut fit_residual, mut ratio) = (None, None, None);
        if opts.simulate {
            let l = scenario_liouvillian(&dd.system, &dd.drive, &dd.target, opts.relaxation)?;
            let times = uniform_grid(opts.span * t_tcl, opts.steps);
            let mut traj = evolve(&l, &mixed_vacuum(sys.fock), &times, &EvolveOptions::default())?;
            traj.add_target_series(&dd.target)?;
            let fit = fit_exponential(&times, &normalized_sigma_z(&traj)?)?;
            t_sim = Some(fit.tau);
            fit_residual = Some(fit.residual);
            ratio = Some(fit.tau / t_tcl);
        }
        Ok(Table1Row { axis, drive: dd.drive, system: dd.system, t_tcl, t_sim, fit_residual, ratio })
    });
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_exact_synthetic() {
        let tau0 = 3.7e-7;
        let t = uniform_grid(2e-6, 50);
        let y: Vec<f64> = t.iter().map(|x| 1.0 - (-x / tau0).exp()).collect();
        let fit = fit_exponential(&t, &y).unwrap();
        assert!((fit.tau / tau0 - 1.0).abs() < 1e-9);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let t = [0.0, 1.0, 2.0, 3.0];
        assert!(fit_exponential(&t[..3], &[0.0, 0.5, 0.7]).is_err());
        assert!(fit_exponential(&t, &[0.0, 0.6, 0.2, 0.8]).is_err());
        assert!(fit_exponential(&t, &[1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(fit_exponential(&t, &[0.0, 0.5]).is_err());
    }

    #[test]
    fn crossing_interpolates() {
        let t = [0.0, 1.0, 2.0];
        assert_eq!(first_crossing(&t, &[0.0, 0.5, 1.0], 0.75), Some(1.5));
        assert_eq!(first_crossing(&t, &[0.0, 0.5, 0.6], 0.75), None);
        assert_eq!(first_crossing(&t, &[0.9, 0.5, 0.6], 0.75), Some(0.0));
    }

    #[test]
    fn perturbation_scales_quadratures() {
        let base = DriveParams { rabi_re: 2.0, rabi_im: -4.0, counter_rotating: 0.0, drive_freq: 9.0 };
        let p = perturb_drive(&base, 0.1, -0.25);
        assert!((p.rabi_re - 2.2).abs() < 1e-15);
        assert!((p.rabi_im + 3.0).abs() < 1e-15);
        assert_eq!(p.drive_freq, 9.0);
    }

    #[test]
    fn table1_reduced_only() {
        let opts = Table1Options { simulate: false, ..Default::default() };
        let rows = table1_report(&SystemParams::typical(), &opts).unwrap();
        assert_eq!(rows.len(), 3);
        assert!((rows[2].t_tcl - 0.2e-6).abs() < 0.01e-6);
        assert!((rows[0].t_tcl - 0.8e-6).abs() < 0.01e-6);
        assert!((rows[0].t_tcl - rows[1].t_tcl).abs() < 1e-12 * rows[0].t_tcl);
        assert!(rows.iter().all(|r| r.t_sim.is_none()));
    }

    #[test]
    fn axis_targets() {
        assert!((CartesianAxis::X.target().axis()[0] - 1.0).abs() < 1e-15);
        assert!((CartesianAxis::Y.target().axis()[1] - 1.0).abs() < 1e-15);
        assert_eq!(CartesianAxis::Z.target().axis()[2], 1.0);
    }
}
