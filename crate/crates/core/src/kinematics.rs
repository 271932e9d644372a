//! Rapidity kinematics, fusion angles and the Z(N) mass spectrum.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smatrix::SinhProduct;

/// Relative distance from the triangle boundary below which a fusion is
/// treated as degenerate.
pub const THRESHOLD_MARGIN: f64 = 1e-9;

/// A complex rapidity (or rapidity difference).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rapidity(pub Complex64);

impl Rapidity {
    pub fn real(theta: f64) -> Self {
        Self(Complex64::new(theta, 0.0))
    }

    pub fn new(re: f64, im: f64) -> Self {
        Self(Complex64::new(re, im))
    }

    /// `0 < Im ζ < π`.
    pub fn in_physical_strip(&self) -> bool {
        self.0.im > 0.0 && self.0.im < PI
    }
}

impl From<Complex64> for Rapidity {
    fn from(z: Complex64) -> Self {
        Self(z)
    }
}

/// Two-momentum `(p⁰, p¹)`, complex after analytic continuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoMomentum {
    pub p0: Complex64,
    pub p1: Complex64,
}

impl TwoMomentum {
    /// Minkowski square `p⁰² − p¹²`.
    pub fn square(&self) -> Complex64 {
        self.p0 * self.p0 - self.p1 * self.p1
    }

    /// `p·x = p⁰x⁰ − p¹x¹`.
    pub fn dot(&self, x: [f64; 2]) -> Complex64 {
        self.p0 * x[0] - self.p1 * x[1]
    }
}

impl std::ops::Add for TwoMomentum {
    type Output = TwoMomentum;

    fn add(self, rhs: Self) -> Self {
        TwoMomentum {
            p0: self.p0 + rhs.p0,
            p1: self.p1 + rhs.p1,
        }
    }
}

/// `p_m(ζ) = (m cosh ζ, m sinh ζ)`.
pub fn mass_shell_momentum(m: f64, zeta: Rapidity) -> Result<TwoMomentum> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::NonPositiveMass(m));
    }
    Ok(TwoMomentum {
        p0: zeta.0.cosh() * m,
        p1: zeta.0.sinh() * m,
    })
}

/// Particle masses `m_1 … m_{N−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSpectrum {
    pub n: u32,
    pub base_mass: f64,
    masses: Vec<f64>,
}

impl MassSpectrum {
    /// Mass of particle type `alpha` (1-based).
    pub fn mass(&self, alpha: u32) -> f64 {
        self.masses[(alpha - 1) as usize]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// The single-species spectrum of the N = 2 (Ising) case.
    pub fn ising(base_mass: f64) -> Result<Self> {
        if !(base_mass > 0.0) {
            return Err(Error::NonPositiveMass(base_mass));
        }
        Ok(Self {
            n: 2,
            base_mass,
            masses: vec![base_mass],
        })
    }
}

/// Fusion angles `θ_(αβ)`, `θ_(βα)` and their sum `θ_αβ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionAngles {
    pub theta_ab: f64,
    pub theta_ba: f64,
    pub theta_sum: f64,
}

impl FusionAngles {
    fn new(theta_ab: f64, theta_ba: f64) -> Self {
        Self {
            theta_ab,
            theta_ba,
            theta_sum: theta_ab + theta_ba,
        }
    }

    /// Residual of `m_a e^{iθ_ab} + m_b e^{−iθ_ba} − m_c`.
    pub fn residual(&self, m_a: f64, m_b: f64, m_c: f64) -> f64 {
        (Complex64::from_polar(m_a, self.theta_ab) + Complex64::from_polar(m_b, -self.theta_ba) - m_c).norm()
    }
}

/// Solve `p_{m_a}(θ + iθ_ab) + p_{m_b}(θ − iθ_ba) = p_{m_c}(θ)`.
///
/// On light-cone components the θ dependence factors out, leaving the
/// complex equation `m_a e^{ia} + m_b e^{−ib} = m_c` in two real unknowns,
/// solved by damped Newton from the isosceles guess.
pub fn solve_fusion_angles(m_a: f64, m_b: f64, m_c: f64) -> Result<FusionAngles> {
    for m in [m_a, m_b, m_c] {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::NonPositiveMass(m));
        }
    }
    let upper = m_a + m_b;
    let lower = (m_a - m_b).abs();
    if m_c > upper || m_c < lower {
        return Err(Error::NoFusionSolution { m_a, m_b, m_c });
    }
    if m_c >= upper * (1.0 - THRESHOLD_MARGIN) || m_c <= lower * (1.0 + THRESHOLD_MARGIN) {
        return Err(Error::FusionThreshold { m_a, m_b, m_c });
    }

    // The mass triangle: m_a e^{ia} + m_b e^{-ib} = m_c. Heron's product
    // gives 2·(m_a m_c sin a) = 2·(m_b m_c sin b) = sqrt(P).
    let p = (m_a + m_b + m_c) * (-m_a + m_b + m_c) * (m_a - m_b + m_c) * (m_a + m_b - m_c);
    let h = p.max(0.0).sqrt();
    let a = h.atan2(m_a * m_a + m_c * m_c - m_b * m_b);
    let b = h.atan2(m_b * m_b + m_c * m_c - m_a * m_a);
    let angles = FusionAngles::new(a, b);
    if !(a > 0.0 && a < PI && b > 0.0 && b < PI) || angles.residual(m_a, m_b, m_c) > 1e-12 * m_c {
        return Err(Error::NoFusionSolution { m_a, m_b, m_c });
    }
    Ok(angles)
}

/// Z(N) masses from fusion-pole consistency.
///
/// Starting from the seed `S^{11}`, the s-channel pole `iu` of `S^{1α}`
/// fixes the bound-state mass `m_{α+1}² = m_1² + m_α² + 2 m_1 m_α cos u`;
/// the fusion angles of `(1α) → α+1` then build `S^{1,α+1}` by the
/// bootstrap, and so on up to `α = N − 1`.
pub fn zn_mass_spectrum(n: u32, base_mass: f64) -> Result<MassSpectrum> {
    if n < 3 {
        return Err(Error::InvalidN {
            n,
            reason: "the Z(N) spectrum needs N >= 3",
        });
    }
    if !(base_mass > 0.0) || !base_mass.is_finite() {
        return Err(Error::NonPositiveMass(base_mass));
    }
    let seed = SinhProduct::s11(n);
    let mut masses = vec![base_mass];
    let mut row = seed.clone();
    for alpha in 1..(n - 1) {
        let m_alpha = masses[(alpha - 1) as usize];
        let u = row
            .strip_poles()
            .into_iter()
            .map(|(z, _)| z.im)
            .filter(|&im| im > 0.0 && im < PI)
            .fold(f64::NAN, f64::max);
        if u.is_nan() {
            return Err(Error::InvalidN {
                n,
                reason: "bootstrap row lost its s-channel pole",
            });
        }
        let m_next = (base_mass * base_mass + m_alpha * m_alpha + 2.0 * base_mass * m_alpha * u.cos()).sqrt();
        let angles = solve_fusion_angles(base_mass, m_alpha, m_next).map_err(|e| Error::FusionProcess {
            alpha: 1,
            beta: alpha,
            gamma: alpha + 1,
            source: Box::new(e),
        })?;
        masses.push(m_next);
        // S^{1,α+1}(ζ) = S^{11}(ζ − iθ_(1α)) S^{1α}(ζ + iθ_(α1)).
        row = seed
            .shifted(-angles.theta_ab / PI)
            .mul(&row.shifted(angles.theta_ba / PI));
    }
    for alpha in 1..n {
        let (a, b) = (masses[(alpha - 1) as usize], masses[(n - alpha - 1) as usize]);
        if (a - b).abs() > 1e-9 * a {
            return Err(Error::InvalidN {
                n,
                reason: "derived spectrum violates antiparticle mass equality",
            });
        }
    }
    Ok(MassSpectrum { n, base_mass, masses })
}
