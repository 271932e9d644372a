//! Wedge-supported test functions and their on-shell transforms.
//!
//! A test function assigns to each particle type a finite sum of bumps
//! `A · exp(−1/(1 − |x − c|²/r²))` supported on discs. The transform
//!
//! ```text
//! f^±_α(ζ) = (1/2π) ∫ f_α(x) exp(±i p_{m_α}(ζ)·x) d²x,   p·x = p⁰x⁰ − p¹x¹,
//! ```
//!
//! is entire in `ζ`. For a disc the angular integral gives a Bessel function,
//! `f^± = A r² e^{±i p·c} B(r m √cosh 2ζ)` with `B(w) = ∫₀¹ b(ρ) J0(wρ) ρ dρ`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::special::bessel_j0_scaled;

/// Minimum distance between a support disc and the wedge boundary required
/// by the locality analysis, in units of `1/m`.
pub const SEPARATION_MARGIN: f64 = 0.1;

/// Relative agreement demanded of successive orders in the 2D quadrature.
pub const TRANSFORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WedgeSide {
    Left,
    Right,
}

/// `W_R + a = {x : (x − a)¹ > |(x − a)⁰|}` or its reflection `W_L + a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wedge {
    pub side: WedgeSide,
    pub translation: [f64; 2],
}

impl Wedge {
    pub fn left(translation: [f64; 2]) -> Self {
        Self {
            side: WedgeSide::Left,
            translation,
        }
    }

    pub fn right(translation: [f64; 2]) -> Self {
        Self {
            side: WedgeSide::Right,
            translation,
        }
    }

    /// Signed Euclidean distance from `x` to the wedge boundary, positive
    /// inside.
    pub fn depth(&self, x: [f64; 2]) -> f64 {
        let mut y = [x[0] - self.translation[0], x[1] - self.translation[1]];
        if self.side == WedgeSide::Left {
            y = [-y[0], -y[1]];
        }
        (y[1] - y[0]).min(y[1] + y[0]) * FRAC_1_SQRT_2
    }

    pub fn contains_disc(&self, center: [f64; 2], radius: f64) -> bool {
        self.depth(center) > radius
    }

    /// `W_R + a` and `W_L + b` are spacelike separated iff `b` lies in the
    /// closed left wedge at `a`.
    pub fn spacelike_to(&self, other: &Wedge) -> bool {
        let (l, r) = match (self.side, other.side) {
            (WedgeSide::Left, WedgeSide::Right) => (self, other),
            (WedgeSide::Right, WedgeSide::Left) => (other, self),
            _ => return false,
        };
        let d = [r.translation[0] - l.translation[0], r.translation[1] - l.translation[1]];
        d[1] >= d[0].abs()
    }

    pub fn translated(&self, a: [f64; 2]) -> Self {
        Self {
            side: self.side,
            translation: [self.translation[0] + a[0], self.translation[1] + a[1]],
        }
    }
}

/// `A · exp(−1/(1 − |x − c|²/r²))` on the open disc `|x − c| < r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: Complex64,
}

impl Bump {
    pub fn new(center: [f64; 2], radius: f64, amplitude: Complex64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidRequest(format!(
                "bump radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            center,
            radius,
            amplitude,
        })
    }

    pub fn real(center: [f64; 2], radius: f64, amplitude: f64) -> Result<Self> {
        Self::new(center, radius, Complex64::new(amplitude, 0.0))
    }

    pub fn value(&self, x: [f64; 2]) -> Complex64 {
        let d0 = x[0] - self.center[0];
        let d1 = x[1] - self.center[1];
        let rho2 = (d0 * d0 + d1 * d1) / (self.radius * self.radius);
        if rho2 >= 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.amplitude * profile(rho2)
    }

    /// `x ↦ conj(b(−x))`.
    pub fn reflected(&self) -> Self {
        Self {
            center: [-self.center[0], -self.center[1]],
            radius: self.radius,
            amplitude: self.amplitude.conj(),
        }
    }

    pub fn translated(&self, a: [f64; 2]) -> Self {
        Self {
            center: [self.center[0] + a[0], self.center[1] + a[1]],
            ..*self
        }
    }

    /// `x ↦ conj(b(x))`.
    pub fn conjugated(&self) -> Self {
        Self {
            amplitude: self.amplitude.conj(),
            ..*self
        }
    }

    /// The transform as `mantissa · exp(exponent)`, so that products of
    /// several transforms at complex rapidity never overflow midway.
    pub fn transform_parts(&self, mass: f64, sign: Sign, zeta: Complex64) -> (Complex64, Complex64) {
        let p0 = zeta.cosh() * mass;
        let p1 = zeta.sinh() * mass;
        let pc = p0 * self.center[0] - p1 * self.center[1];
        let w = (zeta * 2.0).cosh().sqrt() * (self.radius * mass);
        let phase = Complex64::i() * pc * sign.factor();
        let scaled = radial_profile_scaled(w);
        let mantissa = self.amplitude * (self.radius * self.radius) * scaled;
        (phase + w.im.abs(), mantissa)
    }

    pub fn transform(&self, mass: f64, sign: Sign, zeta: Complex64) -> Complex64 {
        let (e, m) = self.transform_parts(mass, sign, zeta);
        m * e.exp()
    }
}

fn profile(rho2: f64) -> f64 {
    if rho2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - rho2)).exp()
    }
}

/// `B(w) · exp(−|Im w|)`.
pub fn radial_profile_scaled(w: Complex64) -> Complex64 {
    // Nodes scale with the oscillation count of J0(wρ) on [0, 1].
    let order = (96.0 + 2.0 * w.norm()).min(4096.0) as usize;
    let order = order.div_ceil(32) * 32;
    let gl = GaussLegendre::cached(order);
    let s = w.im.abs();
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
        let rho = 0.5 * (x + 1.0);
        let b = profile(rho * rho);
        if b == 0.0 {
            continue;
        }
        acc += bessel_j0_scaled(w * rho) * (b * rho * (s * (rho - 1.0)).exp() * 0.5 * wt);
    }
    acc
}

/// `B(w) = ∫₀¹ exp(−1/(1 − ρ²)) J0(wρ) ρ dρ`.
pub fn radial_profile(w: Complex64) -> Complex64 {
    radial_profile_scaled(w) * w.im.abs().exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Test function with a finite list of bumps per particle type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    components: BTreeMap<u32, Vec<Bump>>,
}

impl TestFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(species: u32, bump: Bump) -> Self {
        Self::zero().with(species, bump)
    }

    pub fn with(mut self, species: u32, bump: Bump) -> Self {
        self.components.entry(species).or_default().push(bump);
        self
    }

    pub fn components(&self) -> &BTreeMap<u32, Vec<Bump>> {
        &self.components
    }

    pub fn bumps(&self, species: u32) -> &[Bump] {
        self.components.get(&species).map_or(&[], Vec::as_slice)
    }

    pub fn species(&self) -> impl Iterator<Item = u32> + '_ {
        self.components.keys().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.components
            .values()
            .flatten()
            .all(|b| b.amplitude == Complex64::new(0.0, 0.0))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for b in out.components.values_mut().flatten() {
            b.amplitude *= c;
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&s, bumps) in &other.components {
            out.components.entry(s).or_default().extend_from_slice(bumps);
        }
        out
    }

    pub fn translated(&self, a: [f64; 2]) -> Self {
        let mut out = self.clone();
        for b in out.components.values_mut().flatten() {
            *b = b.translated(a);
        }
        out
    }

    pub fn value(&self, species: u32, x: [f64; 2]) -> Complex64 {
        self.bumps(species).iter().map(|b| b.value(x)).sum()
    }

    /// Smallest support radius, used to size rapidity cutoffs.
    pub fn min_radius(&self) -> Option<f64> {
        self.components
            .values()
            .flatten()
            .map(|b| b.radius)
            .min_by(f64::total_cmp)
    }
}

/// `f^±_α(ζ)` by the radial reduction.
pub fn onshell_transform(f: &TestFunction, species: u32, mass: f64, sign: Sign, zeta: Complex64) -> Complex64 {
    f.bumps(species).iter().map(|b| b.transform(mass, sign, zeta)).sum()
}

/// `f^±_α(ζ)` by tensor-product Gauss–Legendre over each support square,
/// doubling the order until two successive orders agree to
/// [`TRANSFORM_TOL`] relative to the larger of the value and the bump's
/// zero-momentum transform.
pub fn onshell_transform_2d(
    f: &TestFunction,
    species: u32,
    mass: f64,
    sign: Sign,
    zeta: Complex64,
) -> Result<Complex64> {
    let p0 = zeta.cosh() * mass;
    let p1 = zeta.sinh() * mass;
    let mut total = Complex64::new(0.0, 0.0);
    for b in f.bumps(species) {
        let integrate = |order: usize| {
            let gl = GaussLegendre::cached(order);
            let mut acc = Complex64::new(0.0, 0.0);
            for (u, wu) in gl.nodes.iter().zip(&gl.weights) {
                let x0 = b.center[0] + b.radius * u;
                for (v, wv) in gl.nodes.iter().zip(&gl.weights) {
                    let x1 = b.center[1] + b.radius * v;
                    let rho2 = u * u + v * v;
                    if rho2 >= 1.0 {
                        continue;
                    }
                    let px = p0 * x0 - p1 * x1;
                    acc += (Complex64::i() * px * sign.factor()).exp() * (profile(rho2) * wu * wv);
                }
            }
            acc * (b.amplitude * b.radius * b.radius / (2.0 * PI))
        };
        let mut order = 32;
        let mut prev = integrate(order);
        loop {
            order *= 2;
            let next = integrate(order);
            let diff = (next - prev).norm();
            let floor = b.amplitude.norm() * b.radius * b.radius * radial_profile(Complex64::new(0.0, 0.0)).re;
            if diff <= TRANSFORM_TOL * next.norm().max(floor) {
                total += next;
                break;
            }
            if order >= 1024 {
                return Err(Error::QuadratureNonConvergence { estimate: diff });
            }
            prev = next;
        }
    }
    Ok(total)
}

/// `f^±_α` as a function of complex rapidity.
#[derive(Debug, Clone, PartialEq)]
pub struct OnShellFunction {
    pub test_function: TestFunction,
    pub species: u32,
    pub mass: f64,
    pub sign: Sign,
}

impl OnShellFunction {
    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        onshell_transform(&self.test_function, self.species, self.mass, self.sign, zeta)
    }
}

/// Whether every support disc lies strictly inside `w`.
pub fn wedge_support_check(f: &TestFunction, w: &Wedge) -> bool {
    wedge_clearance(f, w) > 0.0
}

/// Minimum over all discs of the distance from disc to wedge boundary;
/// negative when some disc pokes out. `+∞` for an empty function.
pub fn wedge_clearance(f: &TestFunction, w: &Wedge) -> f64 {
    f.components
        .values()
        .flatten()
        .map(|b| w.depth(b.center) - b.radius)
        .fold(f64::INFINITY, f64::min)
}

/// `(f̄)_α(x) = conj(f_ᾱ(x))`, the test function of the adjoint field.
pub fn charge_conjugate(f: &TestFunction, n: u32) -> TestFunction {
    let mut out = TestFunction::zero();
    for (&s, bumps) in &f.components {
        let anti = if s == 0 || s >= n { s } else { n - s };
        for b in bumps {
            out = out.with(anti, b.conjugated());
        }
    }
    out
}

/// `(g̃)_α(x) = conj(g_ᾱ(−x))`.
pub fn cpt_partner(f: &TestFunction, n: u32) -> TestFunction {
    let mut out = TestFunction::zero();
    for (&s, bumps) in &f.components {
        let anti = if s == 0 || s >= n { s } else { n - s };
        for b in bumps {
            out = out.with(anti, b.reflected());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // B(w) to 20 digits.
    const RADIAL_REFERENCE: &[((f64, f64), (f64, f64))] = &[
        ((0.0, 0.0), (0.07424775338796102396, 0.0)),
        ((3.0, 0.0), (0.03914425730628184640, 0.0)),
        ((20.0, 5.0), (-0.002918665799188905098, -0.009119329395198254208)),
        ((60.0, 0.0), (2.358741250513358524e-6, 0.0)),
    ];

    #[test]
    fn radial_profile_reference() {
        for &((wr, wi), (br, bi)) in RADIAL_REFERENCE {
            let got = radial_profile(c(wr, wi));
            let want = c(br, bi);
            assert!(
                (got - want).norm() < 1e-12 * RADIAL_REFERENCE[0].1 .0,
                "B({wr}+{wi}i) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn radial_matches_tensor_quadrature() {
        let f = TestFunction::single(1, Bump::new([0.3, -1.2], 0.6, c(0.7, -0.2)).unwrap());
        for z in [c(0.0, 0.0), c(1.3, 0.4), c(-2.0, 2.5), c(0.5, -1.0)] {
            for sign in [Sign::Plus, Sign::Minus] {
                let a = onshell_transform(&f, 1, 1.3, sign, z);
                let b = onshell_transform_2d(&f, 1, 1.3, sign, z).unwrap();
                assert!((a - b).norm() < 1e-9 * b.norm().max(1e-3), "{z} {sign:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn plus_at_i_pi_is_minus() {
        let f = TestFunction::single(2, Bump::real([0.2, -1.0], 0.4, 1.0).unwrap());
        for t in [-1.5, 0.0, 0.7] {
            let a = onshell_transform(&f, 2, 1.0, Sign::Plus, c(t, PI));
            let b = onshell_transform(&f, 2, 1.0, Sign::Minus, c(t, 0.0));
            assert!((a - b).norm() < 1e-12 * b.norm());
        }
    }

    #[test]
    fn narrow_bump_is_point_like() {
        let b = Bump::real([0.5, 2.0], 0.01, 1.0).unwrap();
        let f = TestFunction::single(1, b);
        let mass_integral = 2.0 * PI * b.radius * b.radius * radial_profile(c(0.0, 0.0)).re;
        for theta in [-1.0, 0.0, 0.8] {
            let z = c(theta, 0.0);
            let p = [theta.cosh(), theta.sinh()];
            let px = p[0] * b.center[0] - p[1] * b.center[1];
            let approx = c(0.0, px).exp() * (mass_integral / (2.0 * PI));
            let full = onshell_transform_2d(&f, 1, 1.0, Sign::Plus, z).unwrap();
            assert!((approx - full).norm() < 1e-3 * full.norm());
        }
    }

    #[test]
    fn wedge_geometry() {
        let left = Wedge::left([0.0, 0.0]);
        let right = Wedge::right([0.0, 0.0]);
        let disc = |x: [f64; 2], r: f64| TestFunction::single(1, Bump::real(x, r, 1.0).unwrap());
        assert!(wedge_support_check(&disc([0.0, -5.0], 1.0), &left));
        assert!(!wedge_support_check(&disc([0.0, 0.0], 1e-6), &left));
        assert!(!wedge_support_check(&disc([0.0, 0.0], 1e-6), &right));
        // Distance from (0, 5) to either edge of W_R is 5/√2.
        assert!(wedge_support_check(&disc([0.0, 5.0], 3.5355), &right));
        assert!(!wedge_support_check(&disc([0.0, 5.0], 3.5356), &right));
        assert!(left.spacelike_to(&right));
        assert!(!Wedge::left([0.0, 1.0]).spacelike_to(&right));
    }

    #[test]
    fn cpt_partner_reflects_and_swaps() {
        let f = TestFunction::single(1, Bump::new([0.2, -1.0], 0.5, c(1.0, 0.5)).unwrap());
        let g = cpt_partner(&f, 3);
        assert_eq!(g.bumps(1).len(), 0);
        let b = g.bumps(2)[0];
        assert_eq!(b.center, [-0.2, 1.0]);
        assert_eq!(b.amplitude, c(1.0, -0.5));
        assert_eq!(cpt_partner(&g, 3), f);
        assert!(wedge_support_check(&g, &Wedge::right([0.0, 0.0])));
    }

    #[test]
    fn left_wedge_transform_bounded_in_upper_strip() {
        let f = TestFunction::single(1, Bump::real([0.3, -1.5], 0.5, 1.0).unwrap());
        let at_axis = onshell_transform(&f, 1, 1.0, Sign::Plus, c(0.0, 0.0)).norm();
        let mut worst: f64 = 0.0;
        for i in 0..41 {
            for j in 1..20 {
                let z = c(-4.0 + 0.2 * i as f64, PI * j as f64 / 20.0);
                worst = worst.max(onshell_transform(&f, 1, 1.0, Sign::Plus, z).norm());
            }
        }
        assert!(worst < 10.0 * at_axis, "{worst} vs {at_axis}");
    }
}
