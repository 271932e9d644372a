//! Fusion table `(αβ) → α + β mod N` and the bound-state couplings `η`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{solve_fusion_angles, FusionAngles, MassSpectrum};
use crate::smatrix::{residue_at, Channel, ParticleType, SMatrixModel};
use crate::weaklocality::{ElementEvaluator, MatrixElementRequest};

/// Relative least-squares residual accepted by the η fit.
pub const CALIBRATION_TOL: f64 = 1e-3;

pub fn antiparticle(alpha: ParticleType) -> ParticleType {
    alpha.antiparticle()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionProcess {
    pub alpha: u32,
    pub beta: u32,
    pub gamma: u32,
    pub angles: FusionAngles,
    /// `η^γ_{αβ}`; zero until calibrated.
    pub eta: Complex64,
    pub s_pole: Complex64,
    /// Residue of `S^{αβ}` at the s-channel pole; zero when the component
    /// has no pole there.
    pub residue: Complex64,
}

/// Outcome of fitting `η = c·√|residue|` to the cancellation requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaFit {
    /// `|c|²`, expected to be `2π`.
    pub kappa: Complex64,
    /// Relative residual on the calibration family.
    pub residual: f64,
    /// Relative residual on held-out requests.
    pub holdout_residual: Option<f64>,
    /// Per-request relative residuals after the fit.
    pub curve: Vec<f64>,
    /// Whether `η^γ_{αβ} = η^γ_{βα}` for every pair present both ways.
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionTable {
    pub n: u32,
    processes: BTreeMap<(u32, u32), FusionProcess>,
    pub fit: Option<EtaFit>,
}

impl FusionTable {
    pub fn get(&self, alpha: u32, beta: u32) -> Option<&FusionProcess> {
        self.processes.get(&(alpha, beta))
    }

    pub fn processes(&self) -> impl Iterator<Item = &FusionProcess> {
        self.processes.values()
    }

    pub fn len(&self) -> usize {
        self.processes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.processes.is_empty()
    }

    /// Copy with every `η` set to zero.
    pub fn without_eta(&self) -> Self {
        let mut out = self.clone();
        for p in out.processes.values_mut() {
            p.eta = Complex64::new(0.0, 0.0);
        }
        out.fit = None;
        out
    }

    /// Copy with `η_p = scale · √|residue_p|`.
    pub fn with_eta_scale(&self, scale: Complex64) -> Self {
        let mut out = self.clone();
        for p in out.processes.values_mut() {
            p.eta = scale * p.residue.norm().sqrt();
        }
        out
    }

    /// Number of processes the mod-N rule predicts.
    pub fn expected_len(n: u32) -> usize {
        (1..n)
            .flat_map(|a| (1..n).map(move |b| (a, b)))
            .filter(|(a, b)| (a + b) % n != 0)
            .count()
    }
}

/// Angles for every `(α, β)` with `α + β ≢ 0 mod N`; residues and `η` zero.
pub fn build_fusion_table(n: u32, spectrum: &MassSpectrum) -> Result<FusionTable> {
    let mut processes = BTreeMap::new();
    for alpha in 1..n {
        for beta in 1..n {
            let gamma = (alpha + beta) % n;
            if gamma == 0 {
                continue;
            }
            let angles =
                solve_fusion_angles(spectrum.mass(alpha), spectrum.mass(beta), spectrum.mass(gamma)).map_err(|e| {
                    Error::FusionProcess {
                        alpha,
                        beta,
                        gamma,
                        source: Box::new(e),
                    }
                })?;
            processes.insert(
                (alpha, beta),
                FusionProcess {
                    alpha,
                    beta,
                    gamma,
                    angles,
                    eta: Complex64::new(0.0, 0.0),
                    s_pole: Complex64::new(0.0, angles.theta_sum),
                    residue: Complex64::new(0.0, 0.0),
                },
            );
        }
    }
    Ok(FusionTable {
        n,
        processes,
        fit: None,
    })
}

/// Fill in residues of the s-channel poles from the model.
pub fn attach_residues(table: &mut FusionTable, model: &SMatrixModel) -> Result<()> {
    for p in table.processes.values_mut() {
        let c = model.component(p.alpha, p.beta)?;
        p.residue = match c
            .poles()
            .iter()
            .find(|q| q.channel == Channel::S && (q.location - p.s_pole).norm() < 1e-8)
        {
            Some(q) => residue_at(c, q.location)?,
            None => Complex64::new(0.0, 0.0),
        };
    }
    Ok(())
}

/// Fusion table with residues attached, `η` still zero.
pub fn fusion_table_for(model: &SMatrixModel) -> Result<FusionTable> {
    let mut t = build_fusion_table(model.n, &model.spectrum)?;
    attach_residues(&mut t, model)?;
    Ok(t)
}

/// Fit `η_p = c·√|R_p|` so that `[φ(f),φ′(g)] + [χ(f),χ′(g)]` vanishes on the
/// calibration requests, then check the fit on the held-out ones.
///
/// With this ansatz the χ-commutator is `|c|²` times its value at `c = 1`,
/// so `κ = |c|²` is a linear least-squares fit. The phase of `c` drops out
/// of the commutator; `c = i√κ` is the one that makes `χ(f)` symmetric.
pub fn calibrate_eta(
    table: &FusionTable,
    evaluator: &ElementEvaluator<'_>,
    calibration: &[MatrixElementRequest],
    holdout: &[MatrixElementRequest],
) -> Result<FusionTable> {
    if table.processes().all(|p| p.residue == Complex64::new(0.0, 0.0)) {
        let mut out = table.without_eta();
        out.fit = Some(EtaFit {
            kappa: Complex64::new(0.0, 0.0),
            residual: 0.0,
            holdout_residual: None,
            curve: Vec::new(),
            symmetric: true,
        });
        return Ok(out);
    }
    let unit = table.with_eta_scale(Complex64::new(1.0, 0.0));
    let samples = |reqs: &[MatrixElementRequest]| -> Result<Vec<(Complex64, Complex64)>> {
        reqs.par_iter()
            .map(|r| Ok((evaluator.phi_commutator(r)?, evaluator.chi_commutator(&unit, r)?)))
            .collect()
    };
    let cal = samples(calibration)?;
    let num: Complex64 = cal.iter().map(|(d, c)| c.conj() * d).sum();
    let den: f64 = cal.iter().map(|(_, c)| c.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::CalibrationFailure {
            residual: f64::INFINITY,
            curve: Vec::new(),
        });
    }
    let kappa = -num / den;
    let residuals = |s: &[(Complex64, Complex64)]| -> (f64, Vec<f64>) {
        let curve: Vec<f64> = s
            .iter()
            .map(|(d, c)| (d + kappa * c).norm() / d.norm().max(1e-300))
            .collect();
        let total = s.iter().map(|(d, c)| (d + kappa * c).norm_sqr()).sum::<f64>().sqrt()
            / s.iter().map(|(d, _)| d.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        (total, curve)
    };
    let (residual, curve) = residuals(&cal);
    let gauge_ok = kappa.re > 0.0 && kappa.im.abs() <= CALIBRATION_TOL * kappa.re;
    if !(residual < CALIBRATION_TOL) || !gauge_ok {
        return Err(Error::CalibrationFailure { residual, curve });
    }
    let holdout_residual = if holdout.is_empty() {
        None
    } else {
        let (r, curve) = residuals(&samples(holdout)?);
        if !(r < CALIBRATION_TOL) {
            return Err(Error::CalibrationFailure { residual: r, curve });
        }
        Some(r)
    };
    let mut out = table.with_eta_scale(Complex64::new(0.0, kappa.re.sqrt()));
    let symmetric = out.processes().all(|p| {
        out.get(p.beta, p.alpha)
            .is_none_or(|q| (q.eta - p.eta).norm() <= 1e-12 * p.eta.norm().max(1.0))
    });
    out.fit = Some(EtaFit {
        kappa,
        residual,
        holdout_residual,
        curve,
        symmetric,
    });
    Ok(out)
}

/// `η_p = i√(2π |R_p|)`, the closed form the calibration reproduces.
pub fn eta_closed_form(table: &FusionTable) -> FusionTable {
    table.with_eta_scale(Complex64::new(0.0, (2.0 * PI).sqrt()))
}
