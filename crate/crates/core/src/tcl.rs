//! Reduced second-order rate model of the qubit after eliminating the resonator.
//!
//! Populations are ordered `(P₋₁, P₊₁)`, i.e. target state first.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{frame_vectors, DriveParams, FrameVectors, SystemParams, TargetState};
use crate::operators::C64;
use crate::units::boltzmann_exponent;

/// Qubit factor of a mode, in the target frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitFactor {
    SigmaZ,
    SigmaPlus,
    SigmaMinus,
}

/// Resonator factor of a mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BathFactor {
    Identity,
    Annihilation,
}

impl fmt::Display for QubitFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QubitFactor::SigmaZ => "sigma_z",
            QubitFactor::SigmaPlus => "sigma_+",
            QubitFactor::SigmaMinus => "sigma_-",
        })
    }
}

impl fmt::Display for BathFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BathFactor::Identity => "I",
            BathFactor::Annihilation => "a",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeRow {
    pub alpha: usize,
    pub qubit: QubitFactor,
    pub bath: BathFactor,
    /// Oscillation frequency ω_α, rad/s.
    pub omega: f64,
    /// Coefficient C_α, rad/s.
    pub coeff: C64,
}

/// The five frequency components of the rotated-frame interaction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeTable {
    pub rows: [ModeRow; 5],
}

impl ModeTable {
    pub fn row(&self, alpha: usize) -> Option<&ModeRow> {
        self.rows.iter().find(|r| r.alpha == alpha)
    }

    /// |C₁| = |A_z − Ω̄|; zero when the drive is matched.
    pub fn convergence_residual(&self) -> f64 {
        self.rows[0].coeff.norm()
    }
}

/// Mode table with Ω̄ taken from the target-frame closed form.
pub fn mode_table(sys: &SystemParams, d: &DriveParams, t: &TargetState) -> ModeTable {
    let fv = frame_vectors(sys, d, t);
    mode_table_from(&fv, crate::model::effective_rabi(sys, d, t), sys.g)
}

fn mode_table_from(fv: &FrameVectors, omega_bar: f64, g: f64) -> ModeTable {
    use BathFactor::*;
    use QubitFactor::*;
    let row = |alpha, qubit, bath, omega, coeff| ModeRow { alpha, qubit, bath, omega, coeff };
    ModeTable {
        rows: [
            row(1, SigmaZ, Identity, 0.0, C64::new(fv.a[2] - omega_bar, 0.0)),
            row(2, SigmaPlus, Identity, 2.0 * omega_bar, fv.a_minus()),
            row(3, SigmaZ, Annihilation, fv.delta_omega, fv.theta[2] * g),
            row(4, SigmaMinus, Annihilation, fv.delta_minus, fv.theta_plus * g),
            row(5, SigmaPlus, Annihilation, fv.delta_plus, fv.theta_minus * g),
        ],
    }
}

/// Matched polarization rate `g²κ(1+cosθ)²/(κ²+4Δ²)`.
pub fn gamma_z(g: f64, kappa: f64, theta: f64, delta: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("κ must be > 0, got {kappa}")));
    }
    let c = 1.0 + theta.cos();
    Ok(g * g * kappa * c * c / (kappa * kappa + 4.0 * delta * delta))
}

/// Rate and Lamb shift of one mode:
/// `Γ = 4|C|²κ/(κ²+4ω²)`, `Ω = 4|C|²ω/(κ²+4ω²)`.
pub fn mode_rates(coeff: C64, omega: f64, kappa: f64) -> Result<(f64, f64)> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("κ must be > 0, got {kappa}")));
    }
    let c2 = 4.0 * coeff.norm_sqr();
    let den = kappa * kappa + 4.0 * omega * omega;
    Ok((c2 * kappa / den, c2 * omega / den))
}

/// Which resonator sideband feeds the populations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateMode {
    /// Stokes process pumping towards `|−⟩`.
    Mode4,
    /// Anti-Stokes process pumping towards `|+⟩`.
    Mode5,
}

pub type Mat2 = [[f64; 2]; 2];

pub fn rate_matrix(nbar: f64, mode: RateMode) -> Result<Mat2> {
    if !(nbar >= 0.0) {
        return Err(Error::InvalidArgument(format!("n̄ must be >= 0, got {nbar}")));
    }
    Ok(match mode {
        RateMode::Mode4 => [[-nbar, nbar + 1.0], [nbar, -(nbar + 1.0)]],
        RateMode::Mode5 => [[-(nbar + 1.0), nbar], [nbar + 1.0, -nbar]],
    })
}

/// Generator `Σ Γ_α M^α` written as `[[−a, b], [a, −b]]`; returns `(a, b)`.
fn generator_rates(terms: &[(f64, RateMode)], nbar: f64) -> Result<(f64, f64)> {
    let mut a = 0.0;
    let mut b = 0.0;
    for &(rate, mode) in terms {
        if !(rate >= 0.0) {
            return Err(Error::InvalidArgument(format!("mode rate must be >= 0, got {rate}")));
        }
        let m = rate_matrix(nbar, mode)?;
        a += rate * m[1][0];
        b += rate * m[0][1];
    }
    Ok((a, b))
}

/// `exp(t·Σ Γ_α M^α)·P0` in closed form.
pub fn populations(p0: [f64; 2], terms: &[(f64, RateMode)], nbar: f64, t: f64) -> Result<[f64; 2]> {
    if p0.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative initial probability in {p0:?}")));
    }
    if ((p0[0] + p0[1]) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("initial probabilities sum to {}", p0[0] + p0[1])));
    }
    let (a, b) = generator_rates(terms, nbar)?;
    let s = a + b;
    if s == 0.0 {
        return Ok(p0);
    }
    let decay = (-s * t).exp();
    let grown = -(-s * t).exp_m1();
    Ok([p0[0] * decay + (b / s) * grown, p0[1] * decay + (a / s) * grown])
}

/// Stationary populations of the generator; `None` when all rates vanish.
pub fn equilibrium_populations(terms: &[(f64, RateMode)], nbar: f64) -> Result<Option<[f64; 2]>> {
    let (a, b) = generator_rates(terms, nbar)?;
    let s = a + b;
    Ok(if s == 0.0 { None } else { Some([b / s, a / s]) })
}

/// `⟨σ_z⟩_eq = (e^{−x} − 1)/(e^{−x} + 1)`, `x = ħω_c/k_BT_c`.
pub fn equilibrium_sigma_z(omega_c: f64, t_c: f64) -> Result<f64> {
    if !(t_c >= 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be >= 0, got {t_c}")));
    }
    let w = (-boltzmann_exponent(omega_c, t_c)).exp();
    Ok((w - 1.0) / (w + 1.0))
}

/// Equilibrium populations `(1, e^{−x})/(e^{−x} + 1)`.
pub fn equilibrium_thermal_populations(omega_c: f64, t_c: f64) -> Result<[f64; 2]> {
    if !(t_c >= 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be >= 0, got {t_c}")));
    }
    let w = (-boltzmann_exponent(omega_c, t_c)).exp();
    Ok([1.0 / (w + 1.0), w / (w + 1.0)])
}

/// `T_z = 1/(Γ_z(2n̄+1))`.
pub fn polarization_time(g: f64, kappa: f64, theta: f64, delta: f64, nbar: f64) -> Result<f64> {
    if !(nbar >= 0.0) {
        return Err(Error::InvalidArgument(format!("n̄ must be >= 0, got {nbar}")));
    }
    let rate = gamma_z(g, kappa, theta, delta)?;
    if !(rate > 0.0) {
        return Err(Error::ZeroRate(format!(
            "polarization rate vanishes at θ = {theta}; match the anti-Stokes sideband (δω = −2Ω̄) \
             or design the drive for the antipodal direction"
        )));
    }
    Ok(1.0 / (rate * (2.0 * nbar + 1.0)))
}

/// Reduced model of one driven scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct RateModel {
    pub omega_bar: f64,
    pub nbar: f64,
    /// Matched rate evaluated at Δ = Δ₋.
    pub gamma_z: f64,
    pub table: ModeTable,
    /// `(Γ_α, Ω_α)` for α = 3, 4, 5.
    pub modes: [(f64, f64); 3],
    /// Lamb coefficient `|A₋|²/(2Ω̄)`; affects coherences only.
    pub d0: f64,
    pub m4: Mat2,
    pub m5: Mat2,
    pub p_inf: [f64; 2],
}

impl RateModel {
    pub fn new(sys: &SystemParams, d: &DriveParams, t: &TargetState) -> Result<Self> {
        sys.validate()?;
        let nbar = sys.nbar()?;
        let fv = frame_vectors(sys, d, t);
        let omega_bar = crate::model::effective_rabi(sys, d, t);
        let table = mode_table_from(&fv, omega_bar, sys.g);
        let mut modes = [(0.0, 0.0); 3];
        for (k, alpha) in (3..=5).enumerate() {
            let row = table.row(alpha).expect("five rows");
            modes[k] = mode_rates(row.coeff, row.omega, sys.kappa)?;
        }
        let d0 = if omega_bar != 0.0 { fv.a_minus().norm_sqr() / (2.0 * omega_bar) } else { 0.0 };
        let terms = [(modes[1].0, RateMode::Mode4), (modes[2].0, RateMode::Mode5)];
        let p_inf = equilibrium_populations(&terms, nbar)?.unwrap_or([0.5, 0.5]);
        Ok(RateModel {
            omega_bar,
            nbar,
            gamma_z: gamma_z(sys.g, sys.kappa, t.theta(), fv.delta_minus)?,
            table,
            modes,
            d0,
            m4: rate_matrix(nbar, RateMode::Mode4)?,
            m5: rate_matrix(nbar, RateMode::Mode5)?,
            p_inf,
        })
    }

    /// The population-feeding terms (modes 4 and 5).
    pub fn terms(&self) -> [(f64, RateMode); 2] {
        [(self.modes[1].0, RateMode::Mode4), (self.modes[2].0, RateMode::Mode5)]
    }

    pub fn populations(&self, p0: [f64; 2], t: f64) -> Result<[f64; 2]> {
        populations(p0, &self.terms(), self.nbar, t)
    }

    /// `⟨σ_z⟩` in the target frame, `P₊ − P₋`.
    pub fn sigma_z(&self, p0: [f64; 2], t: f64) -> Result<f64> {
        let p = self.populations(p0, t)?;
        Ok(p[1] - p[0])
    }

    /// 1/e time of the population relaxation with both sidebands.
    pub fn relaxation_time(&self) -> Result<f64> {
        let (a, b) = generator_rates(&self.terms(), self.nbar)?;
        if a + b > 0.0 {
            Ok(1.0 / (a + b))
        } else {
            Err(Error::ZeroRate("both sideband rates vanish".into()))
        }
    }
}
