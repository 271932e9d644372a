//! Two-body S-matrix components of the Z(N)-Ising model.
//!
//! Components built from the seed `S^{11}` by the bootstrap are kept in
//! exact form, as products of `sinh ½(ζ + iπa)` factors, so that imaginary
//! shifts are exact and cancelling pole/zero pairs drop out. Arbitrary
//! closures are also accepted as components (free case, perturbed copies).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{solve_fusion_angles, zn_mass_spectrum, FusionAngles, MassSpectrum};
use crate::quad::circle_mean;

/// Distance to a pole below which evaluation is refused.
pub const POLE_PROXIMITY: f64 = 1e-12;
/// Pass threshold for unitarity and unit modulus on the real line.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Pass threshold for the crossing identity on the strip.
pub const CROSSING_TOL: f64 = 1e-8;
/// Pass threshold for bootstrap path-independence.
pub const BOOTSTRAP_TOL: f64 = 1e-8;

const MERGE_TOL: f64 = 1e-9;

/// Particle label `1 ≤ index ≤ N − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParticleType {
    index: u32,
    n: u32,
}

impl ParticleType {
    pub fn new(index: u32, n: u32) -> Result<Self> {
        if index == 0 || index >= n {
            return Err(Error::InvalidParticle { index, n });
        }
        Ok(Self { index, n })
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `ᾱ = N − α`.
    pub fn antiparticle(&self) -> Self {
        Self {
            index: self.n - self.index,
            n: self.n,
        }
    }
}

impl fmt::Display for ParticleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index)
    }
}

/// `c · Π_k sinh(½(ζ + iπ a_k))^{e_k}` with every `a_k` reduced to `(−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinhProduct {
    prefactor: Complex64,
    factors: Vec<(f64, i32)>,
}

impl SinhProduct {
    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self {
            prefactor: c,
            factors: Vec::new(),
        }
    }

    /// `sinh ½(ζ + iπx) / sinh ½(ζ − iπx)`.
    pub fn block(x: f64) -> Self {
        Self {
            prefactor: Complex64::new(1.0, 0.0),
            factors: vec![(x, 1), (-x, -1)],
        }
        .normalized()
    }

    /// The seed `S^{11}` with `x = 2/N`.
    pub fn s11(n: u32) -> Self {
        Self::block(2.0 / n as f64)
    }

    pub fn prefactor(&self) -> Complex64 {
        self.prefactor
    }

    pub fn factors(&self) -> &[(f64, i32)] {
        &self.factors
    }

    fn normalized(mut self) -> Self {
        let mut reduced: Vec<(f64, i32)> = Vec::with_capacity(self.factors.len());
        for &(a, e) in &self.factors {
            // sinh(w + iπ) = −sinh(w): moving a by 2 flips the factor's sign.
            let mut k = ((a - 1.0) / 2.0).ceil();
            let mut r = a - 2.0 * k;
            if r <= -1.0 + MERGE_TOL {
                r += 2.0;
                k -= 1.0;
            }
            if (r - 1.0).abs() < MERGE_TOL {
                r = 1.0;
            }
            if r.abs() < MERGE_TOL {
                r = 0.0;
            }
            if (k as i64 * e as i64).rem_euclid(2) == 1 {
                self.prefactor = -self.prefactor;
            }
            match reduced.iter_mut().find(|(b, _)| (b - r).abs() < MERGE_TOL) {
                Some(slot) => slot.1 += e,
                None => reduced.push((r, e)),
            }
        }
        reduced.retain(|&(_, e)| e != 0);
        reduced.sort_by(|x, y| x.0.total_cmp(&y.0));
        self.factors = reduced;
        self
    }

    /// `ζ ↦ self(ζ + iπ s)`.
    pub fn shifted(&self, s: f64) -> Self {
        Self {
            prefactor: self.prefactor,
            factors: self.factors.iter().map(|&(a, e)| (a + s, e)).collect(),
        }
        .normalized()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Self {
            prefactor: self.prefactor * other.prefactor,
            factors,
        }
        .normalized()
    }

    /// Value at `z`, refusing points within [`POLE_PROXIMITY`] of a pole.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        for &(a, e) in &self.factors {
            if e < 0 {
                let w = (z + Complex64::new(0.0, PI * a)) * 0.5;
                let k = (w.im / PI).round();
                let off = w - Complex64::new(0.0, PI * k);
                if 2.0 * off.norm() < POLE_PROXIMITY {
                    return Err(Error::PoleProximity {
                        at: z,
                        pole: z - off * 2.0,
                        radius: POLE_PROXIMITY,
                    });
                }
            }
        }
        Ok(self.value(z))
    }

    /// Value at `z` without the proximity check.
    pub fn value(&self, z: Complex64) -> Complex64 {
        let mut v = self.prefactor;
        for &(a, e) in &self.factors {
            let s = ((z + Complex64::new(0.0, PI * a)) * 0.5).sinh();
            v *= s.powi(e);
        }
        v
    }

    /// Poles in the closed strip `0 ≤ Im ζ ≤ π`, with their orders.
    pub fn strip_poles(&self) -> Vec<(Complex64, u32)> {
        let mut out = Vec::new();
        for &(a, e) in &self.factors {
            if e >= 0 {
                continue;
            }
            let order = (-e) as u32;
            if a <= 0.0 {
                out.push((Complex64::new(0.0, -PI * a), order));
            } else if a == 1.0 {
                out.push((Complex64::new(0.0, PI), order));
            }
        }
        out.sort_by(|x, y| x.0.im.total_cmp(&y.0.im));
        out
    }

    /// Distance from `z` to the nearest pole other than one at `z` itself.
    pub fn nearest_other_pole(&self, z: Complex64) -> f64 {
        let mut best = f64::INFINITY;
        for &(a, e) in &self.factors {
            if e >= 0 {
                continue;
            }
            let base = -PI * a;
            let k0 = ((z.im - base) / (2.0 * PI)).round();
            for k in [k0 - 1.0, k0, k0 + 1.0] {
                let p = Complex64::new(0.0, base + 2.0 * PI * k);
                let d = (p - z).norm();
                if d > 1e-9 {
                    best = best.min(d);
                }
            }
        }
        best
    }
}

/// Whether a strip pole is the fusion pole of the component's own process
/// (s), of its crossed process (t), or neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    S,
    T,
    Other,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::S => "s",
            Channel::T => "t",
            Channel::Other => "other",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub location: Complex64,
    pub order: u32,
    pub channel: Channel,
}

pub type ComponentFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Evaluator {
    Factors(SinhProduct),
    Function(ComponentFn),
}

/// A diagonal component `S^{αβ}_{βα}(ζ)` with its pole registry.
#[derive(Clone)]
pub struct SComponent {
    pub alpha: u32,
    pub beta: u32,
    evaluator: Evaluator,
    poles: Vec<Pole>,
}

impl fmt::Debug for SComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.evaluator {
            Evaluator::Factors(p) => format!("{p:?}"),
            Evaluator::Function(_) => "<closure>".to_string(),
        };
        f.debug_struct("SComponent")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("evaluator", &kind)
            .field("poles", &self.poles)
            .finish()
    }
}

impl SComponent {
    pub fn from_factors(alpha: u32, beta: u32, product: SinhProduct) -> Self {
        let poles = product
            .strip_poles()
            .into_iter()
            .map(|(location, order)| Pole {
                location,
                order,
                channel: Channel::Other,
            })
            .collect();
        Self {
            alpha,
            beta,
            evaluator: Evaluator::Factors(product),
            poles,
        }
    }

    pub fn from_fn<F>(alpha: u32, beta: u32, f: F, poles: Vec<Pole>) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            alpha,
            beta,
            evaluator: Evaluator::Function(Arc::new(f)),
            poles,
        }
    }

    /// `S ≡ 1`.
    pub fn free(alpha: u32, beta: u32) -> Self {
        Self::from_factors(alpha, beta, SinhProduct::one())
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    /// Registered poles in the open strip.
    pub fn open_strip_poles(&self) -> impl Iterator<Item = &Pole> {
        self.poles.iter().filter(|p| p.location.im > 0.0 && p.location.im < PI)
    }

    pub fn factors(&self) -> Option<&SinhProduct> {
        match &self.evaluator {
            Evaluator::Factors(p) => Some(p),
            Evaluator::Function(_) => None,
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match &self.evaluator {
            Evaluator::Factors(p) => p.eval(z),
            Evaluator::Function(f) => {
                if let Some(p) = self.poles.iter().find(|p| (p.location - z).norm() < POLE_PROXIMITY) {
                    return Err(Error::PoleProximity {
                        at: z,
                        pole: p.location,
                        radius: POLE_PROXIMITY,
                    });
                }
                Ok(f(z))
            }
        }
    }

    /// Value without the proximity check; for hot loops on the real line.
    pub fn value(&self, z: Complex64) -> Complex64 {
        match &self.evaluator {
            Evaluator::Factors(p) => p.value(z),
            Evaluator::Function(f) => f(z),
        }
    }

    fn nearest_other_pole(&self, z: Complex64) -> f64 {
        let registered = self
            .poles
            .iter()
            .map(|p| (p.location - z).norm())
            .filter(|&d| d > 1e-9)
            .fold(f64::INFINITY, f64::min);
        match &self.evaluator {
            Evaluator::Factors(p) => registered.min(p.nearest_other_pole(z)),
            Evaluator::Function(_) => registered,
        }
    }

    /// The same component plus a constant; a debugging negative control.
    pub fn perturbed(&self, eps: f64) -> Self {
        let base = self.clone();
        Self::from_fn(self.alpha, self.beta, move |z| base.value(z) + eps, self.poles.clone())
    }
}

/// `ζ ↦ left(ζ + i·left_shift) · right(ζ + i·right_shift)`, labelled
/// `(alpha, beta)`. Exact for factor components; closures are composed and
/// their registries shifted and merged.
pub fn shifted_product(
    alpha: u32,
    beta: u32,
    left: &SComponent,
    left_shift: f64,
    right: &SComponent,
    right_shift: f64,
) -> SComponent {
    if let (Some(a), Some(b)) = (left.factors(), right.factors()) {
        let product = a.shifted(left_shift / PI).mul(&b.shifted(right_shift / PI));
        return SComponent::from_factors(alpha, beta, product);
    }
    let (l, r) = (left.clone(), right.clone());
    let mut poles: Vec<Pole> = Vec::new();
    for (c, shift) in [(left, left_shift), (right, right_shift)] {
        for p in c.poles() {
            let location = p.location - Complex64::new(0.0, shift);
            if location.im >= 0.0 && location.im <= PI {
                poles.push(Pole {
                    location,
                    order: p.order,
                    channel: Channel::Other,
                });
            }
        }
    }
    SComponent::from_fn(
        alpha,
        beta,
        move |z| l.value(z + Complex64::new(0.0, left_shift)) * r.value(z + Complex64::new(0.0, right_shift)),
        poles,
    )
}

/// Which particle of `S^{δγ}` is the bound state being resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionSide {
    /// `S^{δγ}(ζ) = S^{δα}(ζ − iθ_(αβ)) S^{δβ}(ζ + iθ_(βα))`.
    Right,
    /// `S^{γδ}(ζ) = S^{αδ}(ζ + iθ_(αβ)) S^{βδ}(ζ − iθ_(βα))`.
    Left,
}

/// Bootstrap with explicitly supplied fusion angles.
pub fn bootstrap_with_angles(
    first: &SComponent,
    second: &SComponent,
    angles: FusionAngles,
    side: FusionSide,
    label: (u32, u32),
) -> SComponent {
    match side {
        FusionSide::Right => shifted_product(label.0, label.1, first, -angles.theta_ab, second, angles.theta_ba),
        FusionSide::Left => shifted_product(label.0, label.1, first, angles.theta_ab, second, -angles.theta_ba),
    }
}

/// Build `S^{δγ}` from `S^{δα}` and `S^{δβ}` for the fusion `(αβ) → γ`.
pub fn bootstrap_component(model: &SMatrixModel, delta: u32, process: (u32, u32)) -> Result<SComponent> {
    bootstrap_on_side(model, delta, process, FusionSide::Right)
}

/// As [`bootstrap_component`] with the bound state on either side.
pub fn bootstrap_on_side(
    model: &SMatrixModel,
    delta: u32,
    (alpha, beta): (u32, u32),
    side: FusionSide,
) -> Result<SComponent> {
    let gamma = model.fusion_product(alpha, beta).ok_or(Error::Unsupported(format!(
        "({alpha}{beta}) has no fusion in Z({})",
        model.n
    )))?;
    let angles = model
        .angles(alpha, beta)
        .ok_or(Error::DependencyMissing { alpha, beta })?;
    let (first, second, label) = match side {
        FusionSide::Right => (
            model.component(delta, alpha)?,
            model.component(delta, beta)?,
            (delta, gamma),
        ),
        FusionSide::Left => (
            model.component(alpha, delta)?,
            model.component(beta, delta)?,
            (gamma, delta),
        ),
    };
    Ok(bootstrap_with_angles(first, second, angles, side, label))
}

/// `S^{11}(ζ) = sinh ½(ζ + 2πi/N) / sinh ½(ζ − 2πi/N)`.
pub fn s11(n: u32, zeta: Complex64) -> Result<Complex64> {
    if n < 3 {
        return Err(Error::InvalidN {
            n,
            reason: "S^{11} is defined for N >= 3",
        });
    }
    let a = Complex64::new(0.0, 2.0 * PI / n as f64);
    if (zeta - a).norm() < POLE_PROXIMITY {
        return Err(Error::PoleProximity {
            at: zeta,
            pole: a,
            radius: POLE_PROXIMITY,
        });
    }
    SinhProduct::s11(n).eval(zeta)
}

/// The Z(N) S-matrix: spectrum, fusion angles and all components.
#[derive(Debug, Clone)]
pub struct SMatrixModel {
    pub n: u32,
    pub spectrum: MassSpectrum,
    angles: BTreeMap<(u32, u32), FusionAngles>,
    components: BTreeMap<(u32, u32), SComponent>,
}

impl SMatrixModel {
    /// Spectrum and angles only; components are inserted by the caller.
    pub fn bare(n: u32, spectrum: MassSpectrum) -> Result<Self> {
        let mut angles = BTreeMap::new();
        for alpha in 1..n {
            for beta in 1..n {
                let gamma = (alpha + beta) % n;
                if gamma == 0 {
                    continue;
                }
                let a = solve_fusion_angles(spectrum.mass(alpha), spectrum.mass(beta), spectrum.mass(gamma)).map_err(
                    |e| Error::FusionProcess {
                        alpha,
                        beta,
                        gamma,
                        source: Box::new(e),
                    },
                )?;
                angles.insert((alpha, beta), a);
            }
        }
        Ok(Self {
            n,
            spectrum,
            angles,
            components: BTreeMap::new(),
        })
    }

    /// The full Z(N)-Ising model from the seed `S^{11}`.
    ///
    /// Row 1 is built by fusing on the right along `(1, γ−1) → γ`, every
    /// further row `δ` by fusing on the left along `(1, δ−1) → δ`.
    pub fn zn(n: u32, base_mass: f64) -> Result<Self> {
        if n == 2 {
            let mut model = Self::bare(2, MassSpectrum::ising(base_mass)?)?;
            model.insert(SComponent::from_factors(1, 1, SinhProduct::block(1.0)));
            return Ok(model);
        }
        let mut model = Self::bare(n, zn_mass_spectrum(n, base_mass)?)?;
        model.insert(SComponent::from_factors(1, 1, SinhProduct::s11(n)));
        for gamma in 2..n {
            let c = bootstrap_on_side(&model, 1, (1, gamma - 1), FusionSide::Right)?;
            model.insert(c);
        }
        for delta in 2..n {
            for gamma in 1..n {
                let c = bootstrap_on_side(&model, gamma, (1, delta - 1), FusionSide::Left)?;
                model.insert(c);
            }
        }
        model.classify_channels();
        Ok(model)
    }

    /// Every component `S ≡ 1`, fusion data kept; the analytic case.
    pub fn pole_free(n: u32, base_mass: f64) -> Result<Self> {
        let spectrum = if n == 2 {
            MassSpectrum::ising(base_mass)?
        } else {
            zn_mass_spectrum(n, base_mass)?
        };
        let mut model = Self::bare(n, spectrum)?;
        for a in 1..n {
            for b in 1..n {
                model.insert(SComponent::free(a, b));
            }
        }
        Ok(model)
    }

    /// Every component shifted by `eps`; a debugging negative control.
    pub fn perturbed(&self, eps: f64) -> Self {
        let mut out = self.clone();
        for c in out.components.values_mut() {
            *c = c.perturbed(eps);
        }
        out
    }

    pub fn insert(&mut self, c: SComponent) {
        self.components.insert((c.alpha, c.beta), c);
    }

    pub fn component(&self, alpha: u32, beta: u32) -> Result<&SComponent> {
        self.components
            .get(&(alpha, beta))
            .ok_or(Error::DependencyMissing { alpha, beta })
    }

    pub fn components(&self) -> impl Iterator<Item = &SComponent> {
        self.components.values()
    }

    pub fn angles(&self, alpha: u32, beta: u32) -> Option<FusionAngles> {
        self.angles.get(&(alpha, beta)).copied()
    }

    /// `γ = α + β mod N`, absent for particle–antiparticle pairs.
    pub fn fusion_product(&self, alpha: u32, beta: u32) -> Option<u32> {
        let gamma = (alpha + beta) % self.n;
        (gamma != 0).then_some(gamma)
    }

    pub fn antiparticle(&self, alpha: u32) -> u32 {
        self.n - alpha
    }

    pub fn mass(&self, alpha: u32) -> f64 {
        self.spectrum.mass(alpha)
    }

    /// The labels `{1, N − 1}` the locality analysis is restricted to.
    pub fn edge_types(&self) -> Vec<u32> {
        if self.n == 2 {
            vec![1]
        } else {
            vec![1, self.n - 1]
        }
    }

    fn classify_channels(&mut self) {
        let n = self.n;
        let angles = self.angles.clone();
        for c in self.components.values_mut() {
            let (alpha, beta) = (c.alpha, c.beta);
            let s = angles.get(&(alpha, beta)).map(|a| a.theta_sum);
            let t = angles.get(&(n - beta, alpha)).map(|a| PI - a.theta_sum);
            for p in &mut c.poles {
                let u = p.location.im;
                p.channel = if p.location.re.abs() < 1e-12 && s.is_some_and(|s| (u - s).abs() < 1e-8) {
                    Channel::S
                } else if p.location.re.abs() < 1e-12 && t.is_some_and(|t| (u - t).abs() < 1e-8) {
                    Channel::T
                } else {
                    Channel::Other
                };
            }
        }
    }
}

/// Unitarity and unit-modulus defects on a real grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitarityReport {
    pub alpha: u32,
    pub beta: u32,
    pub max_product_defect: f64,
    pub max_modulus_defect: f64,
    pub points: usize,
    pub pass: bool,
}

/// `max |S(θ)S(−θ) − 1|` and `max ||S(θ)| − 1|` over `grid`.
pub fn check_unitarity(c: &SComponent, grid: &[f64]) -> UnitarityReport {
    let mut prod = 0.0f64;
    let mut modulus = 0.0f64;
    let mut points = 0;
    for &theta in grid {
        let (Ok(a), Ok(b)) = (c.eval(Complex64::new(theta, 0.0)), c.eval(Complex64::new(-theta, 0.0))) else {
            continue;
        };
        points += 1;
        prod = prod.max((a * b - 1.0).norm());
        modulus = modulus.max((a.norm() - 1.0).abs());
    }
    let pass = points == grid.len()
        && prod.is_finite()
        && modulus.is_finite()
        && prod < UNITARITY_TOL
        && modulus < UNITARITY_TOL;
    UnitarityReport {
        alpha: c.alpha,
        beta: c.beta,
        max_product_defect: prod,
        max_modulus_defect: modulus,
        points,
        pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub alpha: u32,
    pub beta: u32,
    pub max_defect: f64,
    pub points: usize,
    pub skipped: usize,
    pub pass: bool,
}

/// `max |S^{αβ}(iπ − ζ) − S^{β̄α}(ζ)|` over `grid`; points within 1e−3 of
/// a pole of either side are skipped.
pub fn check_crossing(model: &SMatrixModel, alpha: u32, beta: u32, grid: &[Complex64]) -> Result<CrossingReport> {
    let lhs = model.component(alpha, beta)?;
    let rhs = model.component(model.antiparticle(beta), alpha)?;
    let ipi = Complex64::new(0.0, PI);
    let near = |c: &SComponent, z: Complex64| c.poles().iter().any(|p| (p.location - z).norm() < 1e-3);
    let mut worst = 0.0f64;
    let (mut points, mut skipped) = (0, 0);
    for &z in grid {
        if near(lhs, ipi - z) || near(rhs, z) {
            skipped += 1;
            continue;
        }
        match (lhs.eval(ipi - z), rhs.eval(z)) {
            (Ok(a), Ok(b)) => {
                worst = worst.max((a - b).norm());
                points += 1;
            }
            _ => skipped += 1,
        }
    }
    Ok(CrossingReport {
        alpha,
        beta,
        max_defect: worst,
        points,
        skipped,
        pass: points > 0 && worst.is_finite() && worst < CROSSING_TOL,
    })
}

/// `n` equally spaced points on `[lo, hi]`.
pub fn real_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n.max(2) - 1) as f64)
        .collect()
}

/// A rectangular grid in the open strip, offset from the imaginary axis
/// and from rational multiples of `iπ` where Z(N) poles sit.
pub fn strip_grid(nx: usize, ny: usize, re_half: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        let re = -re_half + 2.0 * re_half * (i as f64 + 0.37) / nx as f64;
        for j in 0..ny {
            let im = PI * (j as f64 + 0.5 + 0.013) / ny as f64;
            out.push(Complex64::new(re, im));
        }
    }
    out
}

/// Sup-norm distance between two components over `grid`, skipping points
/// where either refuses evaluation.
pub fn sup_distance(a: &SComponent, b: &SComponent, grid: &[Complex64]) -> f64 {
    grid.iter()
        .filter_map(|&z| Some((a.eval(z).ok()? - b.eval(z).ok()?).norm()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub delta: u32,
    pub alpha: u32,
    pub beta: u32,
    pub gamma: u32,
    pub right_defect: f64,
    pub left_defect: f64,
    pub pass: bool,
}

/// For every fusion `(αβ) → γ` and spectator `δ`, rebuild `S^{δγ}` and
/// `S^{γδ}` by the bootstrap and compare with the stored components.
pub fn check_bootstrap(model: &SMatrixModel, grid: &[Complex64]) -> Result<Vec<BootstrapReport>> {
    let n = model.n;
    let mut out = Vec::new();
    for alpha in 1..n {
        for beta in 1..n {
            let Some(gamma) = model.fusion_product(alpha, beta) else {
                continue;
            };
            for delta in 1..n {
                let right = bootstrap_on_side(model, delta, (alpha, beta), FusionSide::Right)?;
                let left = bootstrap_on_side(model, delta, (alpha, beta), FusionSide::Left)?;
                let right_defect = sup_distance(&right, model.component(delta, gamma)?, grid);
                let left_defect = sup_distance(&left, model.component(gamma, delta)?, grid);
                out.push(BootstrapReport {
                    delta,
                    alpha,
                    beta,
                    gamma,
                    right_defect,
                    left_defect,
                    pass: right_defect < BOOTSTRAP_TOL && left_defect < BOOTSTRAP_TOL,
                });
            }
        }
    }
    Ok(out)
}

/// Rectangle searched for poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for StripRegion {
    fn default() -> Self {
        Self {
            re_min: -3.0,
            re_max: 3.0,
            im_min: 1e-3,
            im_max: PI - 1e-3,
            nx: 12,
            ny: 12,
        }
    }
}

const MIN_BOX: f64 = 0.02;

/// Poles inside `region` by argument-principle counting on a grid of
/// rectangles, bisection of boxes with negative winding, and Newton
/// refinement on `1/S`.
pub fn locate_poles(c: &SComponent, region: &StripRegion) -> Result<Vec<Complex64>> {
    let mut last_err = None;
    // An edge through a singularity spoils the count; nudge the grid.
    for attempt in 0..4 {
        let jitter = 0.0123 * attempt as f64;
        match locate_with_offset(c, region, jitter) {
            Ok(v) => return Ok(v),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn locate_with_offset(c: &SComponent, region: &StripRegion, jitter: f64) -> Result<Vec<Complex64>> {
    let hx = (region.re_max - region.re_min) / region.nx as f64;
    let hy = (region.im_max - region.im_min) / region.ny as f64;
    // Irrational-ish offsets keep box edges off rational multiples of iπ.
    let ox = hx * (0.137 + jitter);
    let oy = hy * (0.0719 + jitter);
    let mut poles: Vec<Complex64> = Vec::new();
    let mut stack = Vec::new();
    for i in 0..region.nx {
        for j in 0..region.ny {
            let x0 = (region.re_min + i as f64 * hx - ox).max(region.re_min);
            let x1 = (region.re_min + (i + 1) as f64 * hx - ox).min(region.re_max);
            let x1 = if i + 1 == region.nx { region.re_max } else { x1 };
            let y0 = if j == 0 {
                region.im_min
            } else {
                region.im_min + j as f64 * hy - oy
            };
            let y1 = if j + 1 == region.ny {
                region.im_max
            } else {
                region.im_min + (j + 1) as f64 * hy - oy
            };
            stack.push((x0, x1, y0, y1));
        }
    }
    while let Some((x0, x1, y0, y1)) = stack.pop() {
        let w = winding(c, x0, x1, y0, y1)?;
        if w >= 0 {
            // Zeros only (or nothing).
            continue;
        }
        if (x1 - x0).max(y1 - y0) > MIN_BOX {
            let (xm, ym) = (0.5 * (x0 + x1) + 1e-4 * (x1 - x0), 0.5 * (y0 + y1) + 1.3e-4 * (y1 - y0));
            stack.push((x0, xm, y0, ym));
            stack.push((xm, x1, y0, ym));
            stack.push((x0, xm, ym, y1));
            stack.push((xm, x1, ym, y1));
            continue;
        }
        let start = Complex64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let p = refine_pole(c, start, (-w) as u32, (x1 - x0).max(y1 - y0))?;
        if !poles.iter().any(|q| (q - p).norm() < 1e-7) {
            poles.push(p);
        }
    }
    poles.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    Ok(poles)
}

/// Winding number of `S` around a rectangle (zeros minus poles).
fn winding(c: &SComponent, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<i64> {
    let corners = [
        Complex64::new(x0, y0),
        Complex64::new(x1, y0),
        Complex64::new(x1, y1),
        Complex64::new(x0, y1),
    ];
    let mut total = 0.0;
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        total += arg_change(c, a, b, 0)?;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

fn arg_change(c: &SComponent, a: Complex64, b: Complex64, depth: u32) -> Result<f64> {
    const STEPS: usize = 16;
    let mut acc = 0.0;
    let mut prev = probe(c, a)?;
    for k in 1..=STEPS {
        let z = a + (b - a) * (k as f64 / STEPS as f64);
        let cur = probe(c, z)?;
        let d = (cur / prev).arg();
        if d.abs() > PI / 4.0 && depth < 24 {
            let za = a + (b - a) * ((k - 1) as f64 / STEPS as f64);
            acc += arg_change(c, za, z, depth + 1)?;
        } else {
            acc += d;
        }
        prev = cur;
    }
    Ok(acc)
}

fn probe(c: &SComponent, z: Complex64) -> Result<Complex64> {
    let v = c.eval(z)?;
    if !v.is_finite() || v.norm() == 0.0 {
        return Err(Error::PoleProximity {
            at: z,
            pole: z,
            radius: 0.0,
        });
    }
    Ok(v)
}

fn refine_pole(c: &SComponent, start: Complex64, order: u32, box_size: f64) -> Result<Complex64> {
    let g = |z: Complex64| -> Result<Complex64> { Ok(c.eval(z)?.inv()) };
    let mut z = start;
    let mut step = f64::INFINITY;
    for _ in 0..60 {
        let gz = match g(z) {
            Ok(v) => v,
            // Landed on the pole to within the proximity radius.
            Err(Error::PoleProximity { .. }) => return Ok(z),
            Err(e) => return Err(e),
        };
        if gz.norm() == 0.0 {
            return Ok(z);
        }
        let h = 1e-6 * z.norm().max(1.0);
        let dg = (g(z + h)? - g(z - h)?) / (2.0 * h);
        let dz = gz / dg * order as f64;
        z -= dz;
        step = dz.norm();
        if step < 1e-14 * z.norm().max(1.0) {
            break;
        }
    }
    if step > 1e-10 || (z - start).norm() > 2.0 * box_size {
        return Err(Error::PoleRefinementFailure { near: start, step });
    }
    Ok(z)
}

/// Residue of a registered simple pole by a trapezoid contour integral.
///
/// The radius is the largest value in `[1e−3, 1e−1]` that keeps every
/// other pole at least twice as far away; the rule is doubled until two
/// successive sums agree.
pub fn residue_at(c: &SComponent, pole: Complex64) -> Result<Complex64> {
    let registered = c
        .poles()
        .iter()
        .find(|p| (p.location - pole).norm() < 1e-8)
        .ok_or_else(|| Error::ContourConflict {
            pole,
            reason: "no registered pole at this location".into(),
        })?;
    if registered.order != 1 {
        return Err(Error::ContourConflict {
            pole,
            reason: format!("pole of order {} is not simple", registered.order),
        });
    }
    let center = registered.location;
    let radius = (0.5 * c.nearest_other_pole(center)).min(0.1);
    if radius < 1e-3 {
        return Err(Error::ContourConflict {
            pole,
            reason: format!("another pole within {:e}", 2.0 * radius),
        });
    }
    let f = |z: Complex64| c.value(z);
    let mut points = 32;
    let mut prev = circle_mean(center, radius, points, f);
    while points < 1 << 14 {
        points *= 2;
        let next = circle_mean(center, radius, points, f);
        if (next - prev).norm() <= 1e-12 * next.norm().max(1e-300) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: (prev - circle_mean(center, radius, points / 2, f)).norm(),
    })
}

/// One row of the exported pole/residue table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleRow {
    pub n: u32,
    pub alpha: u32,
    pub beta: u32,
    pub pole_re: f64,
    pub pole_im: f64,
    pub channel: Channel,
    pub residue_re: f64,
    pub residue_im: f64,
}

/// Open-strip poles and residues of every component with labels in `types`.
pub fn pole_table(model: &SMatrixModel, types: &[u32]) -> Result<Vec<PoleRow>> {
    let mut rows = Vec::new();
    for &alpha in types {
        for &beta in types {
            let c = model.component(alpha, beta)?;
            for p in c.open_strip_poles() {
                let r = if p.order == 1 {
                    residue_at(c, p.location)?
                } else {
                    Complex64::new(f64::NAN, f64::NAN)
                };
                rows.push(PoleRow {
                    n: model.n,
                    alpha,
                    beta,
                    pole_re: p.location.re,
                    pole_im: p.location.im,
                    channel: p.channel,
                    residue_re: r.re,
                    residue_im: r.im,
                });
            }
        }
    }
    Ok(rows)
}
