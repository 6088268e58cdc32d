//! Physical parameters, Bloch-sphere frame rotations, drive design and the
//! rotating-frame Hamiltonian of the driven qubit–resonator system.

use std::f64::consts::{PI, TAU};

use nalgebra::{DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::lindblad::thermal_occupation;
use crate::operators::{annihilation, kron, lift_qubit, lift_resonator, pauli, Axis, Operator, C64};
use crate::units::{ghz_2pi, mhz_2pi};

/// Resonator temperature, given either directly or as a thermal occupation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Thermal {
    /// Bath temperature in kelvin.
    Temperature(f64),
    /// Mean thermal photon number n̄.
    Occupation(f64),
}

/// Static system parameters. Frequencies and rates in rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub omega_c: f64,
    pub omega_sc: f64,
    pub g: f64,
    pub kappa: f64,
    /// Qubit relaxation rate Γ_s.
    pub gamma_s: f64,
    /// Qubit pure-dephasing rate Γ_p.
    pub gamma_p: f64,
    pub thermal: Thermal,
    /// Fock cutoff N (resonator states 0..=N).
    pub fock: usize,
}

impl SystemParams {
    /// Typical operating point: g = 2π·2 MHz, κ = 2π·20 MHz, ω_sc = ω_c = 2π·6 GHz,
    /// no intrinsic qubit loss, cold resonator, N = 8.
    pub fn typical() -> Self {
        SystemParams {
            omega_c: ghz_2pi(6.0),
            omega_sc: ghz_2pi(6.0),
            g: mhz_2pi(2.0),
            kappa: mhz_2pi(20.0),
            gamma_s: 0.0,
            gamma_p: 0.0,
            thermal: Thermal::Occupation(0.0),
            fock: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("omega_c", self.omega_c),
            ("omega_sc", self.omega_sc),
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma_s", self.gamma_s),
            ("gamma_p", self.gamma_p),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        match self.thermal {
            Thermal::Temperature(t) if !(t.is_finite() && t >= 0.0) => {
                return Err(Error::InvalidArgument(format!("temperature must be >= 0, got {t}")));
            }
            Thermal::Occupation(n) if !(n.is_finite() && n >= 0.0) => {
                return Err(Error::InvalidArgument(format!("nbar must be >= 0, got {n}")));
            }
            _ => {}
        }
        if self.fock == 0 {
            return Err(Error::InvalidArgument("Fock cutoff must be at least 1".into()));
        }
        Ok(())
    }

    /// Thermal occupation n̄ of the resonator.
    pub fn nbar(&self) -> Result<f64> {
        match self.thermal {
            Thermal::Occupation(n) => Ok(n),
            Thermal::Temperature(t) => thermal_occupation(self.omega_c, t),
        }
    }
}

/// Drive parameters. Detunings are derived from the system on demand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveParams {
    /// Re(Ω), rad/s.
    pub rabi_re: f64,
    /// Im(Ω), rad/s.
    pub rabi_im: f64,
    /// Counter-rotating amplitude Ω̃; only enters the validity report.
    pub counter_rotating: f64,
    /// Drive frequency ϖ_L, rad/s.
    pub drive_freq: f64,
}

impl DriveParams {
    /// δω = ω_c − ϖ_L.
    pub fn resonator_detuning(&self, sys: &SystemParams) -> f64 {
        sys.omega_c - self.drive_freq
    }

    /// δϖ = ω_sc − ϖ_L.
    pub fn qubit_detuning(&self, sys: &SystemParams) -> f64 {
        sys.omega_sc - self.drive_freq
    }

    pub fn rabi_magnitude(&self) -> f64 {
        self.rabi_re.hypot(self.rabi_im)
    }
}

/// Bloch-sphere direction of the state to prepare.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetState {
    theta: f64,
    phi: f64,
}

impl TargetState {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidArgument(format!("theta must lie in [0, π], got {theta}")));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(Error::InvalidArgument(format!("phi must lie in [0, 2π), got {phi}")));
        }
        Ok(TargetState { theta, phi })
    }

    /// Like [`TargetState::new`] but reduces φ modulo 2π first.
    pub fn wrapped(theta: f64, phi: f64) -> Result<Self> {
        let mut p = phi.rem_euclid(TAU);
        if p >= TAU {
            p = 0.0;
        }
        TargetState::new(theta, p)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `|−⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`, the eigenvalue −1 state of σ_z-rot.
    pub fn minus_ket(&self) -> DVector<C64> {
        let (h, p) = (self.theta / 2.0, self.phi);
        DVector::from_vec(vec![C64::new(h.cos(), 0.0), C64::from_polar(h.sin(), p)])
    }

    /// `|+⟩ = sin(θ/2)|0⟩ − e^{iφ} cos(θ/2)|1⟩`.
    pub fn plus_ket(&self) -> DVector<C64> {
        let (h, p) = (self.theta / 2.0, self.phi);
        DVector::from_vec(vec![C64::new(h.sin(), 0.0), -C64::from_polar(h.cos(), p)])
    }

    /// Unit vector `n` with `σ_z-rot = n·σ`, the third row of the rotation matrix.
    pub fn axis(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [-st * cp, st * sp, ct]
    }

    /// Rotated Pauli operator `−sinθcosφ σ_x + sinθsinφ σ_y + cosθ σ_z`.
    pub fn rotated_sigma_z(&self) -> Operator {
        let n = self.axis();
        let x = pauli(Axis::X).scale_re(n[0]);
        let y = pauli(Axis::Y).scale_re(n[1]);
        let z = pauli(Axis::Z).scale_re(n[2]);
        &(&x + &y) + &z
    }

    /// The antipodal parameterisation `(π − θ, φ + π)`.
    pub fn antipode(&self) -> TargetState {
        TargetState::wrapped(PI - self.theta, self.phi + PI).expect("antipode stays in range")
    }
}

/// √(B_x² + B_z²).
pub fn qubit_splitting(b_x: f64, b_z: f64) -> f64 {
    b_x.hypot(b_z)
}

/// Rotation taking `(σ_x, σ_y, σ_z)` to the target-aligned `(σ_x', σ_y', σ_z')`.
pub fn rotation_matrix(t: &TargetState) -> Matrix3<f64> {
    let (st, ct) = t.theta.sin_cos();
    let (sp, cp) = t.phi.sin_cos();
    Matrix3::new(
        ct * cp, -ct * sp, st, //
        sp, cp, 0.0, //
        -st * cp, st * sp, ct,
    )
}

/// Effective Rabi frequency Ω̄ from its closed form.
pub fn effective_rabi(sys: &SystemParams, d: &DriveParams, t: &TargetState) -> f64 {
    effective_rabi_raw(d.rabi_re, d.rabi_im, d.qubit_detuning(sys), t)
}

pub(crate) fn effective_rabi_raw(rabi_re: f64, rabi_im: f64, qubit_detuning: f64, t: &TargetState) -> f64 {
    let (st, ct) = t.theta.sin_cos();
    let (sp, cp) = t.phi.sin_cos();
    -rabi_re * st * cp + rabi_im * st * sp + 0.5 * qubit_detuning * ct
}

/// Rotated-frame drive and coupling vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameVectors {
    pub omega_bar: f64,
    /// `A = R·(Re Ω, Im Ω, δϖ/2)`.
    pub a: [f64; 3],
    /// `Θ = R·(1/2, −i/2, 0)`, dimensionless.
    pub theta: [C64; 3],
    pub theta_plus: C64,
    pub theta_minus: C64,
    pub delta_omega: f64,
    /// Δ₋ = δω − 2Ω̄.
    pub delta_minus: f64,
    /// Δ₊ = δω + 2Ω̄.
    pub delta_plus: f64,
}

impl FrameVectors {
    /// A₊ = A_x + iA_y.
    pub fn a_plus(&self) -> C64 {
        C64::new(self.a[0], self.a[1])
    }

    /// A₋ = A_x − iA_y.
    pub fn a_minus(&self) -> C64 {
        C64::new(self.a[0], -self.a[1])
    }
}

/// Closed forms of Θ₊, Θ₋, Θ_z.
pub fn theta_closed_form(t: &TargetState) -> (C64, C64, C64) {
    let half_phase = C64::from_polar(0.5, t.phi);
    let ct = t.theta.cos();
    (half_phase * (1.0 + ct), half_phase * (ct - 1.0), -half_phase * t.theta.sin())
}

/// Frame vectors by the matrix route, with Ω̄ = A_z.
pub fn frame_vectors(sys: &SystemParams, d: &DriveParams, t: &TargetState) -> FrameVectors {
    let r = rotation_matrix(t);
    let drive = Vector3::new(d.rabi_re, d.rabi_im, 0.5 * d.qubit_detuning(sys));
    let a = r * drive;
    let rc = r.map(|x| C64::new(x, 0.0));
    let th = rc * Vector3::new(C64::new(0.5, 0.0), C64::new(0.0, -0.5), C64::new(0.0, 0.0));
    let i = C64::new(0.0, 1.0);
    let omega_bar = a[2];
    let delta_omega = d.resonator_detuning(sys);
    FrameVectors {
        omega_bar,
        a: [a[0], a[1], a[2]],
        theta: [th[0], th[1], th[2]],
        theta_plus: th[0] + i * th[1],
        theta_minus: th[0] - i * th[1],
        delta_omega,
        delta_minus: delta_omega - 2.0 * omega_bar,
        delta_plus: delta_omega + 2.0 * omega_bar,
    }
}

/// Result of [`design_drive`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveDesign {
    pub drive: DriveParams,
    /// System with the resonator retuned so that δω = 2Ω̄; ω_sc is kept.
    pub system: SystemParams,
    /// Target whose `|−⟩` the drive prepares.
    pub target: TargetState,
    /// The target as requested.
    pub requested: TargetState,
    /// True when the requested direction had cosθ < 0 and was remapped.
    pub remapped: bool,
    pub omega_bar: f64,
}

/// Design a drive for the target with effective Rabi frequency Ω̄ under the
/// matching condition δω = 2Ω̄.
///
/// The drive vector `(Re Ω, Im Ω, δϖ/2)` is chosen exactly parallel to the
/// target axis, which zeroes A_x and A_y. The qubit splitting is held fixed,
/// so ϖ_L = ω_sc − 2Ω̄cosθ and the returned system carries ω_c = ϖ_L + 2Ω̄.
/// Targets with cosθ < 0 are remapped to the antipodal parameterisation.
pub fn design_drive(target: &TargetState, omega_bar: f64, sys: &SystemParams) -> Result<DriveDesign> {
    if !(omega_bar.is_finite() && omega_bar > 0.0) {
        return Err(Error::InvalidArgument(format!("effective Rabi frequency must be > 0, got {omega_bar}")));
    }
    let (effective, remapped) = if target.theta.cos() < 0.0 {
        (target.antipode(), true)
    } else {
        (*target, false)
    };
    let n = effective.axis();
    let drive_freq = sys.omega_sc - 2.0 * omega_bar * n[2];
    let drive = DriveParams {
        rabi_re: omega_bar * n[0],
        rabi_im: omega_bar * n[1],
        counter_rotating: 0.0,
        drive_freq,
    };
    let system = SystemParams { omega_c: drive_freq + 2.0 * omega_bar, ..*sys };
    Ok(DriveDesign { drive, system, target: effective, requested: *target, remapped, omega_bar })
}

/// Default margin for the validity inequalities.
pub const RWA_MARGIN: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    /// Ordering holds but by less than the margin.
    Marginal,
    Fail,
}

/// One inequality `lhs ≪ rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct RwaCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs / lhs; infinite when lhs vanishes.
    pub ratio: f64,
    pub status: CheckStatus,
    pub pass: bool,
}

fn check(name: &str, lhs: f64, rhs: f64, margin: f64) -> RwaCheck {
    let ratio = if lhs == 0.0 { f64::INFINITY } else { rhs / lhs };
    // Ratios of values entered in 2π·MHz round a few ulps below integers.
    let slack = 1.0 - 1e-9;
    let status = if ratio >= margin * slack {
        CheckStatus::Pass
    } else if ratio >= slack {
        CheckStatus::Marginal
    } else {
        CheckStatus::Fail
    };
    RwaCheck {
        name: name.to_string(),
        lhs,
        rhs,
        ratio,
        status,
        pass: status == CheckStatus::Pass,
    }
}

/// Validity report with the default margin of 10.
pub fn rwa_report(sys: &SystemParams, d: &DriveParams, t: &TargetState) -> Vec<RwaCheck> {
    rwa_report_with_margin(sys, d, t, RWA_MARGIN)
}

pub fn rwa_report_with_margin(sys: &SystemParams, d: &DriveParams, t: &TargetState, margin: f64) -> Vec<RwaCheck> {
    let fv = frame_vectors(sys, d, t);
    let carriers = sys.omega_c.min(d.drive_freq).min(sys.omega_sc);
    let small = sys.g.max(sys.kappa).max(d.rabi_magnitude()).max(d.counter_rotating.abs());
    let fast = fv.delta_omega.abs().min((2.0 * fv.omega_bar).abs());
    let off_resonant = (sys.g * fv.theta[2].norm()).max(sys.g * fv.theta_minus.norm());
    let transverse = fv.a_plus().norm().max(fv.a_minus().norm());
    // Mode frequencies of the resonator-coupled terms.
    let modes = [(3, fv.delta_omega), (4, fv.delta_minus), (5, fv.delta_plus)];

    let mut out = vec![
        check("first_rwa", small, carriers, margin),
        check("second_rwa_kappa", sys.kappa, fast, margin),
        check("second_rwa_drive", transverse, fast, margin),
        check("second_rwa_coupling", off_resonant, fast, margin),
        check("matching_detuning", fv.delta_minus.abs(), fast, margin),
        check("bad_cavity", sys.g, sys.kappa, margin),
    ];
    for i in 0..modes.len() {
        for j in i + 1..modes.len() {
            let (a, wa) = modes[i];
            let (b, wb) = modes[j];
            out.push(check(&format!("cross_term_gap_{a}_{b}"), sys.kappa, (wa - wb).abs(), margin));
        }
    }
    out
}

/// Rotating-frame Hamiltonian
/// `g(a†σ₋ + aσ₊) + δω a†a + (δϖ/2)σ_z + Re(Ω)σ_x + Im(Ω)σ_y` on the joint space.
pub fn build_hamiltonian(sys: &SystemParams, d: &DriveParams) -> Result<Operator> {
    sys.validate()?;
    let cutoff = sys.fock;
    let a = annihilation(cutoff)?;
    let ad = a.dagger();
    let exchange = &kron(&pauli(Axis::Minus), &ad) + &kron(&pauli(Axis::Plus), &a);
    let number = lift_resonator(&(&ad * &a))?;
    let qubit = {
        let z = pauli(Axis::Z).scale_re(0.5 * d.qubit_detuning(sys));
        let x = pauli(Axis::X).scale_re(d.rabi_re);
        let y = pauli(Axis::Y).scale_re(d.rabi_im);
        lift_qubit(&(&(&z + &x) + &y), cutoff)
    };
    let h = &(&exchange.scale_re(sys.g) + &number.scale_re(d.resonator_detuning(sys))) + &qubit;
    h.with_space(crate::operators::Space::Joint(cutoff))
}
