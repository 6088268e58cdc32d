//! Joint qubit–resonator master equation: Liouvillian assembly, time
//! evolution and steady states.
//!
//! Density matrices are vectorised column-wise, so `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.
//! Dissipators use `D[C]ρ = 2CρC† − {C†C, ρ}` and are paired with a rate
//! prefactor, i.e. `(C, Γ/2)` contributes `(Γ/2)·D[C]ρ`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, DriveParams, SystemParams, TargetState};
use crate::operators::{
    annihilation, expect_op, expm_matrix, hygiene, kron, lift_qubit, lift_resonator, matmul, matvec, pauli,
    partial_trace_resonator_op, Axis, DensityMatrix, Operator, Space, C64, I, ZERO,
};
use crate::units::boltzmann_exponent;

/// Bose–Einstein occupation `1/(e^{ħω/k_B T} − 1)`; zero at T = 0.
pub fn thermal_occupation(omega_c: f64, t_c: f64) -> Result<f64> {
    if !(omega_c > 0.0) {
        return Err(Error::InvalidArgument(format!("resonator frequency must be > 0, got {omega_c}")));
    }
    if !(t_c >= 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be >= 0, got {t_c}")));
    }
    let x = boltzmann_exponent(omega_c, t_c);
    Ok(1.0 / x.exp_m1())
}

/// Superoperator acting on column-vectorised density matrices.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    dim: usize,
    space: Option<Space>,
    mat: DMatrix<C64>,
    hamiltonian: Operator,
    dissipators: Vec<(Operator, f64)>,
}

/// `L vec(ρ) = vec(−i[H, ρ] + Σ rate·D[C]ρ)`.
pub fn build_liouvillian(h: &Operator, dissipators: &[(Operator, f64)]) -> Result<Liouvillian> {
    if !h.is_square() {
        return Err(Error::NotSquare { rows: h.rows(), cols: h.cols() });
    }
    let d = h.rows();
    for (c, rate) in dissipators {
        if c.rows() != d || c.cols() != d {
            return Err(Error::Dimension(format!(
                "collapse operator is {}x{}, Hamiltonian is {d}x{d}",
                c.rows(),
                c.cols()
            )));
        }
        if !(rate.is_finite() && *rate >= 0.0) {
            return Err(Error::InvalidArgument(format!("dissipator rate must be >= 0, got {rate}")));
        }
    }
    let id = Operator::identity(d);
    let mut l = (&kron(&id, h) - &kron(&h.transpose(), &id)).scale(-I);
    for (c, rate) in dissipators {
        if *rate == 0.0 {
            continue;
        }
        let cdc = &c.dagger() * c;
        let jump = kron(&c.conj(), c).scale_re(2.0);
        let anti = &kron(&id, &cdc) + &kron(&cdc.transpose(), &id);
        l = &l + &(&jump - &anti).scale_re(*rate);
    }
    Ok(Liouvillian {
        dim: d,
        space: h.space(),
        mat: l.into_matrix(),
        hamiltonian: h.clone(),
        dissipators: dissipators.to_vec(),
    })
}

impl Liouvillian {
    /// Hilbert-space dimension d; the matrix is d² × d².
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> Option<Space> {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn dissipators(&self) -> &[(Operator, f64)] {
        &self.dissipators
    }

    /// Largest modulus of `vec(I)ᵀ L`; zero for a trace-preserving generator.
    pub fn trace_annihilation_residual(&self) -> f64 {
        let d = self.dim;
        (0..d * d)
            .map(|col| (0..d).map(|i| self.mat[(i + i * d, col)]).sum::<C64>().norm())
            .fold(0.0, f64::max)
    }

    /// Apply to an operator through the vectorised matrix.
    pub fn apply(&self, rho: &Operator) -> Operator {
        let v = DVector::from_column_slice(rho.matrix().as_slice());
        let out = matvec(&self.mat, &v);
        Operator::from_matrix(DMatrix::from_column_slice(self.dim, self.dim, out.as_slice()))
    }
}

/// Basis in which the intrinsic qubit relaxation acts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RelaxationBasis {
    /// σ₋ = |0⟩⟨1| of the bare qubit.
    #[default]
    Energy,
    /// `|−⟩⟨+|` of the target frame.
    Rotated,
}

/// Collapse operators of the full model on the joint space:
/// `κ(1+n̄)/2·D[a]`, `κn̄/2·D[a†]`, `Γ_s/2·D[σ₋]`, `Γ_p/2·D[σ_z]`.
/// Zero-rate entries are dropped.
pub fn system_dissipators(
    sys: &SystemParams,
    target: &TargetState,
    relaxation: RelaxationBasis,
) -> Result<Vec<(Operator, f64)>> {
    sys.validate()?;
    let nbar = sys.nbar()?;
    let cutoff = sys.fock;
    let a = lift_resonator(&annihilation(cutoff)?)?;
    let lowering = match relaxation {
        RelaxationBasis::Energy => pauli(Axis::Minus),
        RelaxationBasis::Rotated => Operator::outer(&target.minus_ket(), &target.plus_ket()),
    };
    let candidates = vec![
        (a.clone(), sys.kappa * (1.0 + nbar) / 2.0),
        (a.dagger(), sys.kappa * nbar / 2.0),
        (lift_qubit(&lowering, cutoff), sys.gamma_s / 2.0),
        (lift_qubit(&pauli(Axis::Z), cutoff), sys.gamma_p / 2.0),
    ];
    Ok(candidates.into_iter().filter(|(_, r)| *r > 0.0).collect())
}

/// Liouvillian of the driven system with resonator and qubit losses.
pub fn scenario_liouvillian(
    sys: &SystemParams,
    drive: &DriveParams,
    target: &TargetState,
    relaxation: RelaxationBasis,
) -> Result<Liouvillian> {
    let h = build_hamiltonian(sys, drive)?;
    build_liouvillian(&h, &system_dissipators(sys, target, relaxation)?)
}

/// `(tr_c ρ)` projected on the target `|−⟩`.
pub fn fidelity_target(rho: &DensityMatrix, t: &TargetState) -> Result<f64> {
    let red = partial_trace_resonator_op(rho.op())?;
    Ok(qubit_fidelity(&red, t))
}

pub(crate) fn qubit_fidelity(reduced: &Operator, t: &TargetState) -> f64 {
    let m = t.minus_ket();
    let v = matvec(reduced.matrix(), &m);
    m.dotc(&v).re.clamp(0.0, 1.0)
}

/// Rotated-axis expectation `−sinθcosφ⟨σ_x⟩ + sinθsinφ⟨σ_y⟩ + cosθ⟨σ_z⟩` of a qubit state.
pub fn rotated_sigma_z(reduced: &Operator, t: &TargetState) -> f64 {
    let n = t.axis();
    let ex = |axis| expect_op(reduced, &pauli(axis)).map(|z| z.re).unwrap_or(f64::NAN);
    n[0] * ex(Axis::X) + n[1] * ex(Axis::Y) + n[2] * ex(Axis::Z)
}

/// Thresholds applied to every recorded trajectory point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HygieneLimits {
    pub trace: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl Default for HygieneLimits {
    fn default() -> Self {
        HygieneLimits { trace: 1e-9, hermiticity: 1e-10, min_eigenvalue: -1e-8 }
    }
}

/// Time-evolution method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Exact propagator `expm(L·Δt)`, computed once per distinct step.
    Propagator,
    /// Adaptive Dormand–Prince 5(4).
    RungeKutta { rtol: f64, atol: f64 },
}

impl Method {
    pub fn runge_kutta() -> Self {
        Method::RungeKutta { rtol: 1e-9, atol: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub method: Method,
    /// Extra named expectation values recorded as series.
    pub observables: Vec<(String, Operator)>,
    /// `None` records hygiene without enforcing limits.
    pub limits: Option<HygieneLimits>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { method: Method::Propagator, observables: Vec::new(), limits: Some(HygieneLimits::default()) }
    }
}

pub const SERIES_TRACE: &str = "trace_dev";
pub const SERIES_HERMITICITY: &str = "hermiticity";
pub const SERIES_MIN_EIG: &str = "min_eig";
pub const SERIES_SIGMA_Z_ROT: &str = "sigma_z_rot";
pub const SERIES_FIDELITY: &str = "fidelity";
pub const SERIES_P_MINUS: &str = "p_minus";
pub const SERIES_P_PLUS: &str = "p_plus";

/// Time grid plus named observable series.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    series: BTreeMap<String, Vec<f64>>,
    /// Reduced qubit states, recorded for joint-space evolutions.
    reduced: Vec<Operator>,
    final_state: Option<DensityMatrix>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.get(name).map(|v| v.as_slice())
    }

    pub fn series_names(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(|s| s.as_str())
    }

    pub fn reduced_states(&self) -> &[Operator] {
        &self.reduced
    }

    pub fn final_state(&self) -> Option<&DensityMatrix> {
        self.final_state.as_ref()
    }

    /// Add or replace a series; it must match the time grid.
    pub fn insert_series(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.times.len() {
            return Err(Error::Dimension(format!(
                "series `{name}` has {} points, grid has {}",
                values.len(),
                self.times.len()
            )));
        }
        self.series.insert(name.to_string(), values);
        Ok(())
    }

    /// Record target-frame series (`sigma_z_rot`, `fidelity`, `p_minus`, `p_plus`)
    /// from the reduced states.
    pub fn add_target_series(&mut self, t: &TargetState) -> Result<()> {
        if self.reduced.len() != self.times.len() {
            return Err(Error::NotJoint);
        }
        let plus = t.plus_ket();
        let mut sz = Vec::with_capacity(self.len());
        let mut fid = Vec::with_capacity(self.len());
        let mut pp = Vec::with_capacity(self.len());
        for r in &self.reduced {
            sz.push(rotated_sigma_z(r, t));
            fid.push(qubit_fidelity(r, t));
            pp.push(plus.dotc(&matvec(r.matrix(), &plus)).re);
        }
        self.series.insert(SERIES_SIGMA_Z_ROT.into(), sz);
        self.series.insert(SERIES_P_MINUS.into(), fid.clone());
        self.series.insert(SERIES_FIDELITY.into(), fid);
        self.series.insert(SERIES_P_PLUS.into(), pp);
        Ok(())
    }

    /// Largest hygiene violations along the trajectory:
    /// (max trace deviation, max Hermiticity deviation, min eigenvalue).
    pub fn worst_hygiene(&self) -> (f64, f64, f64) {
        let max = |name| self.series(name).map_or(0.0, |s| s.iter().cloned().fold(0.0, f64::max));
        let min_eig = self
            .series(SERIES_MIN_EIG)
            .map_or(0.0, |s| s.iter().cloned().fold(f64::INFINITY, f64::min));
        (max(SERIES_TRACE), max(SERIES_HERMITICITY), min_eig)
    }
}

struct Recorder<'a> {
    traj: Trajectory,
    observables: &'a [(String, Operator)],
    limits: Option<HygieneLimits>,
    joint: bool,
}

impl Recorder<'_> {
    fn record(&mut self, time: f64, rho: &Operator) -> Result<()> {
        let h = hygiene(rho);
        if let Some(lim) = self.limits {
            let what = if !(h.trace_deviation <= lim.trace) {
                Some(format!("trace deviation {:e}", h.trace_deviation))
            } else if !(h.hermiticity <= lim.hermiticity) {
                Some(format!("Hermiticity deviation {:e}", h.hermiticity))
            } else if !(h.min_eigenvalue >= lim.min_eigenvalue) {
                Some(format!("minimum eigenvalue {:e}", h.min_eigenvalue))
            } else {
                None
            };
            if let Some(what) = what {
                return Err(Error::InvariantBreach { time, what });
            }
        }
        self.traj.times.push(time);
        let s = &mut self.traj.series;
        s.entry(SERIES_TRACE.into()).or_default().push(h.trace_deviation);
        s.entry(SERIES_HERMITICITY.into()).or_default().push(h.hermiticity);
        s.entry(SERIES_MIN_EIG.into()).or_default().push(h.min_eigenvalue);
        for (name, obs) in self.observables {
            let v = expect_op(rho, obs)?;
            s.entry(name.clone()).or_default().push(v.re);
        }
        if self.joint {
            self.traj.reduced.push(partial_trace_resonator_op(rho)?);
        }
        Ok(())
    }
}

/// Propagate `ρ0` (taken to sit at `times[0]`) and record every grid point.
pub fn evolve(l: &Liouvillian, rho0: &DensityMatrix, times: &[f64], opts: &EvolveOptions) -> Result<Trajectory> {
    let d = l.dim;
    if rho0.dim() != d {
        return Err(Error::Dimension(format!("state is {}x{0}, Liouvillian acts on {d}x{d}", rho0.dim())));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be finite and strictly increasing".into()));
    }
    for (name, obs) in &opts.observables {
        if obs.rows() != d || obs.cols() != d {
            return Err(Error::Dimension(format!("observable `{name}` has wrong dimensions")));
        }
    }
    let space = l.space.or(rho0.space());
    let mut rec = Recorder {
        traj: Trajectory::default(),
        observables: &opts.observables,
        limits: opts.limits,
        joint: matches!(space, Some(Space::Joint(_))),
    };
    let tag = |m: DMatrix<C64>| {
        let op = Operator::from_matrix(m);
        match space {
            Some(s) => op.with_space(s).expect("dimension checked above"),
            None => op,
        }
    };
    if times.is_empty() {
        return Ok(rec.traj);
    }
    let mut rho = tag(rho0.op().matrix().clone());
    rec.record(times[0], &rho)?;
    match opts.method {
        Method::Propagator => {
            let mut v = DVector::from_column_slice(rho.matrix().as_slice());
            let mut cache: Vec<(f64, DMatrix<C64>)> = Vec::new();
            for w in times.windows(2) {
                let dt = w[1] - w[0];
                let idx = match cache.iter().position(|(h, _)| ((h - dt) / dt).abs() < 1e-10) {
                    Some(i) => i,
                    None => {
                        let arg = &l.mat * C64::new(dt, 0.0);
                        cache.push((dt, expm_matrix(&arg)));
                        cache.len() - 1
                    }
                };
                v = matvec(&cache[idx].1, &v);
                rho = tag(DMatrix::from_column_slice(d, d, v.as_slice()));
                rec.record(w[1], &rho)?;
            }
        }
        Method::RungeKutta { rtol, atol } => {
            let mut stepper = DormandPrince::new(l, rtol, atol)?;
            let mut state = rho.matrix().clone();
            for w in times.windows(2) {
                state = stepper.advance(state, w[0], w[1])?;
                rho = tag(state.clone());
                rec.record(w[1], &rho)?;
            }
        }
    }
    let mut traj = rec.traj;
    traj.final_state = Some(DensityMatrix::from_trusted(rho));
    Ok(traj)
}

/// `n + 1` evenly spaced points on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect()
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the nodes are not needed.
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive explicit integrator in operator form:
/// `ρ' = −i(H_eff ρ − ρ H_eff†) + Σ 2γ CρC†`, `H_eff = H − iΣ γ C†C`.
struct DormandPrince {
    h_eff: DMatrix<C64>,
    h_eff_dag: DMatrix<C64>,
    jumps: Vec<(DMatrix<C64>, DMatrix<C64>, f64)>,
    rtol: f64,
    atol: f64,
    max_step: f64,
    step: f64,
    fsal: Option<DMatrix<C64>>,
}

impl DormandPrince {
    fn new(l: &Liouvillian, rtol: f64, atol: f64) -> Result<Self> {
        if !(rtol > 0.0 && atol > 0.0) {
            return Err(Error::InvalidArgument("integrator tolerances must be positive".into()));
        }
        let h = l.hamiltonian.matrix();
        let mut h_eff = h.clone();
        let mut jumps = Vec::new();
        for (c, rate) in &l.dissipators {
            if *rate == 0.0 {
                continue;
            }
            let cm = c.matrix().clone();
            let cdc = matmul(&cm.adjoint(), &cm);
            h_eff -= cdc * C64::new(0.0, *rate);
            jumps.push((cm.adjoint(), cm, *rate));
        }
        // Spectral radius of H sets the fastest coherent frequency.
        let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let omega_max = herm.symmetric_eigenvalues().iter().map(|x| x.abs()).fold(0.0, f64::max);
        let decay_max: f64 = l.dissipators.iter().map(|(c, r)| 2.0 * r * c.norm_one().powi(2)).sum();
        let scale = omega_max.max(decay_max);
        let max_step = if scale > 0.0 { std::f64::consts::TAU / (20.0 * scale) } else { f64::INFINITY };
        Ok(DormandPrince {
            h_eff_dag: h_eff.adjoint(),
            h_eff,
            jumps,
            rtol,
            atol,
            max_step,
            step: 0.0,
            fsal: None,
        })
    }

    fn rhs(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = (matmul(&self.h_eff, rho) - matmul(rho, &self.h_eff_dag)) * (-I);
        for (cd, c, rate) in &self.jumps {
            out += matmul(&matmul(c, rho), cd) * C64::new(2.0 * rate, 0.0);
        }
        out
    }

    fn advance(&mut self, mut y: DMatrix<C64>, t0: f64, t1: f64) -> Result<DMatrix<C64>> {
        let mut t = t0;
        if self.step == 0.0 {
            self.step = (self.max_step.min(t1 - t0) * 0.05).max(f64::MIN_POSITIVE);
        }
        let mut k1 = self.fsal.take().unwrap_or_else(|| self.rhs(&y));
        let mut rejections = 0usize;
        while t < t1 {
            let h_try = self.step.min(self.max_step);
            let last = t + 1.01 * h_try >= t1;
            let h = if last { t1 - t } else { h_try };
            if !last && h <= t1.abs() * 1e-14 {
                return Err(Error::Integrator(format!("step size underflow at t = {t:e}")));
            }
            let mut ks: Vec<DMatrix<C64>> = Vec::with_capacity(7);
            ks.push(k1.clone());
            for (s, row) in DP_A.iter().enumerate().skip(1) {
                let mut ys = y.clone();
                for (j, a) in row.iter().enumerate().take(s) {
                    if *a != 0.0 {
                        ys.zip_apply(&ks[j], |o, k| *o += k * (h * a));
                    }
                }
                ks.push(self.rhs(&ys));
            }
            // Stage 7 is evaluated at the fifth-order solution.
            let mut y_new = y.clone();
            for (j, a) in DP_A[6].iter().enumerate() {
                if *a != 0.0 {
                    y_new.zip_apply(&ks[j], |o, k| *o += k * (h * a));
                }
            }
            let mut err_sq = 0.0;
            let n = y.len() as f64;
            for idx in 0..y.len() {
                let e: C64 = (0..7).map(|j| ks[j][idx] * (h * DP_E[j])).sum();
                let sc = self.atol + self.rtol * y[idx].norm().max(y_new[idx].norm());
                err_sq += (e.norm() / sc).powi(2);
            }
            let err = (err_sq / n).sqrt();
            if !err.is_finite() {
                return Err(Error::Integrator(format!("non-finite error estimate at t = {t:e}")));
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y = y_new;
                k1 = ks.pop().expect("seven stages");
                if !last || factor < 1.0 {
                    self.step = (h * factor).min(self.max_step);
                }
                rejections = 0;
            } else {
                self.step = h * factor.min(1.0);
                rejections += 1;
                if rejections > 100 {
                    return Err(Error::Integrator(format!("too many rejected steps at t = {t:e}")));
                }
            }
        }
        self.fsal = Some(k1);
        Ok(y)
    }
}

/// Steady state together with solver diagnostics.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `‖L vec(ρ)‖_∞ / ‖L‖_max`.
    pub residual: f64,
    /// Most negative eigenvalue before clipping (0 when none).
    pub clipped_eigenvalue: f64,
}

/// Relative pivot size below which a direction counts as kernel.
pub const KERNEL_PIVOT_TOL: f64 = 1e-11;

/// Unique trace-one kernel vector of `L`.
///
/// The kernel dimension is estimated from a fully pivoted LU factorisation;
/// the state itself comes from the system with one row replaced by the
/// trace functional.
pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    let d = l.dim;
    let n = d * d;
    let scale = l.mat.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::AmbiguousSteadyState { dim: n });
    }
    let full = l.mat.clone().full_piv_lu();
    let u = full.u();
    let pivots: Vec<f64> = (0..n).map(|i| u[(i, i)].norm()).collect();
    let largest = pivots.iter().cloned().fold(0.0, f64::max);
    let kernel = pivots.iter().filter(|p| **p <= KERNEL_PIVOT_TOL * largest).count();
    if kernel > 1 {
        return Err(Error::AmbiguousSteadyState { dim: kernel });
    }

    let mut aug = l.mat.clone();
    for col in 0..n {
        aug[(0, col)] = ZERO;
    }
    for i in 0..d {
        aug[(0, i + i * d)] = C64::new(scale, 0.0);
    }
    let mut rhs = DVector::<C64>::zeros(n);
    rhs[0] = C64::new(scale, 0.0);
    let x = aug
        .lu()
        .solve(&rhs)
        .ok_or(Error::AmbiguousSteadyState { dim: kernel.max(2) })?;
    if x.iter().any(|z| !z.is_finite()) {
        return Err(Error::AmbiguousSteadyState { dim: kernel.max(2) });
    }

    let raw = DMatrix::from_column_slice(d, d, x.as_slice());
    let herm = (&raw + raw.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let clipped_eigenvalue = eig.eigenvalues.iter().cloned().fold(0.0, f64::min);
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidState("steady state has no positive weight".into()));
    }
    let vecs = &eig.eigenvectors;
    let mut rho = DMatrix::<C64>::zeros(d, d);
    for (k, w) in clipped.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let v = vecs.column(k);
        rho += (v * v.adjoint()) * C64::new(w / total, 0.0);
    }
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let residual = {
        let v = DVector::from_column_slice(rho.as_slice());
        matvec(&l.mat, &v).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
    };
    let mut op = Operator::from_matrix(rho);
    if let Some(s) = l.space {
        op = op.with_space(s)?;
    }
    Ok(SteadyState { rho: DensityMatrix::new(op)?, residual, clipped_eigenvalue })
}

/// Evaluate independent jobs on a bounded worker pool; results keep input order.
/// `workers == 0` uses one worker per logical core.
pub fn batch_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let run = || items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect::<Vec<R>>();
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(run),
        Err(_) => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
    }
}

/// Steady states of many Liouvillians, in input order.
pub fn steady_state_batch(jobs: &[Liouvillian], workers: usize) -> Vec<Result<SteadyState>> {
    batch_map(jobs, workers, |_, l| steady_state(l))
}

/// Initial state used throughout: maximally mixed qubit with the resonator in vacuum.
pub fn mixed_vacuum(cutoff: usize) -> DensityMatrix {
    DensityMatrix::with_vacuum(&DensityMatrix::maximally_mixed(2), cutoff)
        .expect("2x2 qubit state")
}
