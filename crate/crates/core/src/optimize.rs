//! Grid search over the dimensionless coupling η = g/2Ω̄ and linewidth
//! ζ = κ/2Ω̄ for the best steady-state fidelity.

use crate::error::{Error, Result};
use crate::lindblad::{batch_map, fidelity_target, scenario_liouvillian, steady_state, RelaxationBasis};
use crate::model::{design_drive, SystemParams, TargetState, Thermal};
use crate::units::mhz_2pi;

/// Optimization problem for one target and qubit dissipation level.
#[derive(Clone, Debug)]
pub struct Problem {
    pub target: TargetState,
    /// γ = Γ/2Ω̄ with Γ_s = Γ_p = Γ.
    pub gamma: f64,
    pub omega_bar: f64,
    pub eta_max: f64,
    pub zeta_max: f64,
    /// Points per axis; 1 evaluates only `(η_max, ζ_max)`.
    pub resolution: usize,
    pub nbar: f64,
    pub fock: usize,
    pub relaxation: RelaxationBasis,
    pub workers: usize,
}

impl Problem {
    pub fn new(target: TargetState, gamma: f64) -> Self {
        Problem {
            target,
            gamma,
            omega_bar: mhz_2pi(100.0),
            eta_max: 0.6,
            zeta_max: 0.6,
            resolution: 9,
            nbar: 0.0,
            fock: 8,
            relaxation: RelaxationBasis::Energy,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("Ω̄", self.omega_bar)?;
        positive("η_max", self.eta_max)?;
        positive("ζ_max", self.zeta_max)?;
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("γ must be >= 0, got {}", self.gamma)));
        }
        if !(self.nbar >= 0.0) {
            return Err(Error::InvalidArgument(format!("n̄ must be >= 0, got {}", self.nbar)));
        }
        if self.resolution == 0 || self.resolution == 2 {
            return Err(Error::InvalidArgument(format!(
                "grid resolution must be 1 or at least 3, got {}",
                self.resolution
            )));
        }
        Ok(())
    }

    /// System parameters for one (η, ζ) point; ω_c is retuned by the drive design.
    pub fn system(&self, eta: f64, zeta: f64) -> SystemParams {
        let two = 2.0 * self.omega_bar;
        SystemParams {
            g: two * eta,
            kappa: two * zeta,
            gamma_s: two * self.gamma,
            gamma_p: two * self.gamma,
            thermal: Thermal::Occupation(self.nbar),
            fock: self.fock,
            ..SystemParams::typical()
        }
    }
}

/// Steady-state fidelity for the designed drive at (η, ζ).
pub fn steady_fidelity(eta: f64, zeta: f64, problem: &Problem) -> Result<f64> {
    if !(eta > 0.0 && zeta > 0.0) {
        return Err(Error::InvalidArgument(format!("η and ζ must be > 0, got ({eta}, {zeta})")));
    }
    let dd = design_drive(&problem.target, problem.omega_bar, &problem.system(eta, zeta))?;
    let l = scenario_liouvillian(&dd.system, &dd.drive, &dd.target, problem.relaxation)?;
    let ss = steady_state(&l)?;
    fidelity_target(&ss.rho, &dd.target)
}

/// Fidelities on a rectangular (η, ζ) grid; failed points hold NaN.
#[derive(Clone, Debug)]
pub struct Surface {
    pub etas: Vec<f64>,
    pub zetas: Vec<f64>,
    /// `values[i][j]` at `(etas[i], zetas[j])`.
    pub values: Vec<Vec<f64>>,
}

impl Surface {
    pub fn max(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v.is_finite() && best.is_none_or(|(_, _, b)| v > b) {
                    best = Some((i, j, v));
                }
            }
        }
        best
    }
}

/// Incumbent after one search round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineStep {
    pub round: usize,
    pub eta: f64,
    pub zeta: f64,
    pub fidelity: f64,
    /// Grid spacing of the round along η and ζ.
    pub spacing: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct Optimum {
    pub eta: f64,
    pub zeta: f64,
    pub fidelity: f64,
    /// Coarse surface.
    pub surface: Surface,
    /// Round 0 is the coarse grid, followed by the refinements.
    pub trace: Vec<RefineStep>,
    /// Grid points whose solve failed, with the error text.
    pub failures: Vec<(f64, f64, String)>,
}

/// Number of zoom rounds after the coarse grid.
pub const REFINE_ROUNDS: usize = 2;
/// Window shrink factor per round.
pub const ZOOM: f64 = 3.0;

fn axis_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn evaluate(problem: &Problem, etas: &[f64], zetas: &[f64]) -> (Surface, Vec<(f64, f64, Error)>) {
    let jobs: Vec<(f64, f64)> = etas.iter().flat_map(|&e| zetas.iter().map(move |&z| (e, z))).collect();
    let results = batch_map(&jobs, problem.workers, |_, &(e, z)| steady_fidelity(e, z, problem));
    let mut values = vec![vec![f64::NAN; zetas.len()]; etas.len()];
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        let (i, j) = (k / zetas.len(), k % zetas.len());
        match r {
            Ok(f) => values[i][j] = f,
            Err(e) => failures.push((etas[i], zetas[j], e)),
        }
    }
    (Surface { etas: etas.to_vec(), zetas: zetas.to_vec(), values }, failures)
}

/// Better fidelity wins; exact ties go to smaller η, then smaller ζ.
fn better(candidate: (f64, f64, f64), incumbent: (f64, f64, f64)) -> bool {
    let (e, z, f) = candidate;
    let (ei, zi, fi) = incumbent;
    f > fi || (f == fi && (e < ei || (e == ei && z < zi)))
}

/// Coarse grid search followed by [`REFINE_ROUNDS`] zoomed grids around the incumbent.
pub fn optimize(problem: &Problem) -> Result<Optimum> {
    problem.validate()?;
    let n = problem.resolution;
    let etas = axis_points(problem.eta_max / n as f64, problem.eta_max, n);
    let zetas = axis_points(problem.zeta_max / n as f64, problem.zeta_max, n);
    let (surface, errs) = evaluate(problem, &etas, &zetas);
    let mut failures: Vec<(f64, f64, String)> = errs.iter().map(|(e, z, err)| (*e, *z, err.to_string())).collect();

    let mut best: Option<(f64, f64, f64)> = None;
    for (i, row) in surface.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let cand = (etas[i], zetas[j], v);
            if v.is_finite() && best.is_none_or(|b| better(cand, b)) {
                best = Some(cand);
            }
        }
    }
    let Some(mut best) = best else {
        let first = errs.into_iter().next().map(|(_, _, e)| e);
        return Err(Error::AllPointsFailed(Box::new(
            first.unwrap_or(Error::InvalidArgument("empty grid".into())),
        )));
    };
    let step = |lo: f64, hi: f64| if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    let mut spacing = (step(etas[0], problem.eta_max), step(zetas[0], problem.zeta_max));
    let mut trace = vec![RefineStep { round: 0, eta: best.0, zeta: best.1, fidelity: best.2, spacing }];

    if n > 1 {
        let mut width = (problem.eta_max - etas[0], problem.zeta_max - zetas[0]);
        for round in 1..=REFINE_ROUNDS {
            width = (width.0 / ZOOM, width.1 / ZOOM);
            let window = |c: f64, w: f64, max: f64| {
                let lo = (c - w / 2.0).max(w / (2.0 * (n - 1) as f64));
                let hi = (lo + w).min(max);
                axis_points(hi - w, hi, n).into_iter().filter(|v| *v > 0.0).collect::<Vec<_>>()
            };
            let re = window(best.0, width.0, problem.eta_max);
            let rz = window(best.1, width.1, problem.zeta_max);
            let (s, errs) = evaluate(problem, &re, &rz);
            failures.extend(errs.iter().map(|(e, z, err)| (*e, *z, err.to_string())));
            for (i, row) in s.values.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    let cand = (re[i], rz[j], v);
                    if v.is_finite() && better(cand, best) {
                        best = cand;
                    }
                }
            }
            spacing = (width.0 / (n - 1) as f64, width.1 / (n - 1) as f64);
            trace.push(RefineStep { round, eta: best.0, zeta: best.1, fidelity: best.2, spacing });
        }
    }
    Ok(Optimum { eta: best.0, zeta: best.1, fidelity: best.2, surface, trace, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let t = TargetState::new(0.0, 0.0).unwrap();
        let mut p = Problem::new(t, 0.0);
        p.resolution = 2;
        assert!(p.validate().is_err());
        p.resolution = 3;
        p.eta_max = 0.0;
        assert!(p.validate().is_err());
        assert!(steady_fidelity(0.0, 0.1, &Problem::new(t, 0.0)).is_err());
    }

    #[test]
    fn single_point_grid() {
        let t = TargetState::new(0.0, 0.0).unwrap();
        let p = Problem { resolution: 1, eta_max: 0.05, zeta_max: 0.2, fock: 4, ..Problem::new(t, 0.0) };
        let opt = optimize(&p).unwrap();
        assert_eq!((opt.eta, opt.zeta), (0.05, 0.2));
        let direct = steady_fidelity(0.05, 0.2, &p).unwrap();
        assert_eq!(opt.fidelity, direct);
        assert_eq!(opt.trace.len(), 1);
    }

    #[test]
    fn axis_points_span() {
        assert_eq!(axis_points(0.1, 0.5, 5), vec![0.1, 0.2, 0.30000000000000004, 0.4, 0.5]);
        assert_eq!(axis_points(0.1, 0.5, 1), vec![0.5]);
    }

    #[test]
    fn tie_breaking() {
        assert!(better((0.1, 0.2, 0.9), (0.2, 0.1, 0.9)));
        assert!(better((0.1, 0.1, 0.9), (0.1, 0.2, 0.9)));
        assert!(!better((0.3, 0.1, 0.9), (0.2, 0.1, 0.9)));
        assert!(better((0.3, 0.1, 0.91), (0.2, 0.1, 0.9)));
    }
}
