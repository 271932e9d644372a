//! Truncated S-symmetric Fock space with Zamolodchikov–Faddeev operators.
//!
//! Vectors hold closed-form wavefunctions: sums of products of analytic
//! atoms (Gaussians, on-shell transforms), so that the bound-state operator
//! can evaluate them at complex rapidity. Two-particle terms carry at most
//! one S-factor in the rapidity difference. Annihilating such a term leaves
//! an integral over the rule nodes (a contraction atom), which can only be
//! sampled on the real line.
//!
//! Conventions, with `h_f^β(θ) = conj f^−_{β̄}(θ)`:
//!
//! ```text
//! φ(f)      = z†(f^+) + z(h_f)
//! (z†(h)ψ)^{μν}(θ1,θ2) = [h^μ(θ1)ψ^ν(θ2) + S^{νμ}(θ2−θ1) h^ν(θ2)ψ^μ(θ1)] / √2
//! (z(h)Ψ)^ν(t)         = √2 Σ_μ ∫ conj h^μ(s) Ψ^{μν}(s,t) ds
//! (JΨ)^{ᾱ}(θ)          = conj Ψ^α(θ)
//! (JΨ)^{ν̄μ̄}(θ2,θ1)     = conj Ψ^{μν}(θ1,θ2)
//! φ′(g)     = J φ(g̃) J,    χ′(g) = J χ(g̃) J
//! (χ(f)ψ)^γ(θ) = Σ_{(αβ)→γ} −i η^γ_{αβ} f^+_α(θ + iθ_(αβ)) ψ^β(θ − iθ_(βα))
//! ```

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::SQRT_2;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FusionTable;
use crate::quad::LineRule;
use crate::smatrix::SMatrixModel;
use crate::testfn::{cpt_partner, Bump, Sign, TestFunction};

/// Highest particle number represented.
pub const N_MAX: usize = 2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `S^{αβ}(σ(θ2 − θ1) + shift)`, conjugated when `conj` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SFactor {
    pub alpha: u32,
    pub beta: u32,
    pub orientation: i8,
    pub shift: Complex64,
    pub conj: bool,
}

impl SFactor {
    pub fn eval(&self, model: &SMatrixModel, theta1: f64, theta2: f64) -> Result<Complex64> {
        let arg = Complex64::new(self.orientation as f64 * (theta2 - theta1), 0.0) + self.shift;
        let v = model.component(self.alpha, self.beta)?.value(arg);
        Ok(if self.conj { v.conj() } else { v })
    }

    fn reflected(&self) -> Self {
        Self {
            orientation: -self.orientation,
            conj: !self.conj,
            ..*self
        }
    }
}

/// `t ↦ Σ_k w_k · S(s_k, t)`: the first variable of an S-factor integrated
/// out against precomputed weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    pub nodes: Vec<f64>,
    pub weights: Vec<Complex64>,
    pub sfactor: SFactor,
}

impl Contraction {
    fn eval(&self, model: &SMatrixModel, t: f64) -> Result<Complex64> {
        let c = model.component(self.sfactor.alpha, self.sfactor.beta)?;
        let sigma = self.sfactor.orientation as f64;
        let mut acc = ZERO;
        for (&s, &w) in self.nodes.iter().zip(&self.weights) {
            let v = c.value(Complex64::new(sigma * (t - s), 0.0) + self.sfactor.shift);
            acc += w * if self.sfactor.conj { v.conj() } else { v };
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// `z^power · exp(−width (z − center)²)`.
    Gaussian {
        width: f64,
        center: f64,
        power: u32,
    },
    /// One bump's on-shell transform.
    OnShell {
        bump: Bump,
        mass: f64,
        sign: Sign,
    },
    Contraction(Arc<Contraction>),
}

/// `F(z + shift)`, or `conj F(conj z + shift)` when `conj` is set; both are
/// analytic in `z` whenever `F` is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub shape: Shape,
    pub shift: Complex64,
    pub conj: bool,
}

impl Atom {
    pub fn gaussian(width: f64, center: f64, power: u32) -> Self {
        Self::from_shape(Shape::Gaussian { width, center, power })
    }

    pub fn onshell(bump: Bump, mass: f64, sign: Sign) -> Self {
        Self::from_shape(Shape::OnShell { bump, mass, sign })
    }

    fn from_shape(shape: Shape) -> Self {
        Self {
            shape,
            shift: ZERO,
            conj: false,
        }
    }

    /// `z ↦ self(z + t)`.
    pub fn shifted(&self, t: Complex64) -> Self {
        let t = if self.conj { t.conj() } else { t };
        Self {
            shift: self.shift + t,
            ..self.clone()
        }
    }

    /// The analytic function equal to `conj self(θ)` on the real line.
    pub fn reflected(&self) -> Self {
        Self {
            conj: !self.conj,
            ..self.clone()
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.shape, Shape::Contraction(_))
    }

    /// Value as `(exponent, mantissa)`.
    fn eval_parts(&self, model: &SMatrixModel, z: Complex64) -> Result<(Complex64, Complex64)> {
        let arg = if self.conj { z.conj() } else { z } + self.shift;
        let (e, m) = match &self.shape {
            Shape::Gaussian { width, center, power } => {
                let d = arg - center;
                (-d * d * *width, arg.powu(*power))
            }
            Shape::OnShell { bump, mass, sign } => bump.transform_parts(*mass, *sign, arg),
            Shape::Contraction(c) => {
                if arg.im.abs() > 1e-14 {
                    return Err(Error::DomainError {
                        reason: format!("contracted S-factor term cannot be continued to Im θ = {}", arg.im),
                    });
                }
                (ZERO, c.eval(model, arg.re)?)
            }
        };
        Ok(if self.conj { (e.conj(), m.conj()) } else { (e, m) })
    }
}

fn product(atoms: &[Atom], model: &SMatrixModel, z: Complex64) -> Result<Complex64> {
    let mut e = ZERO;
    let mut m = ONE;
    for a in atoms {
        let (ae, am) = a.eval_parts(model, z)?;
        e += ae;
        m *= am;
    }
    if m == ZERO {
        return Ok(ZERO);
    }
    Ok(m * e.exp())
}

/// `coeff · Π atoms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Complex64,
    pub atoms: Vec<Atom>,
}

impl Term {
    pub fn new(coeff: Complex64, atoms: Vec<Atom>) -> Self {
        Self { coeff, atoms }
    }

    /// `c · z^k · exp(−a(z − z0)²)`.
    pub fn gaussian(coeff: Complex64, width: f64, center: f64, power: u32) -> Self {
        Self::new(coeff, vec![Atom::gaussian(width, center, power)])
    }

    pub fn eval(&self, model: &SMatrixModel, z: Complex64) -> Result<Complex64> {
        if self.coeff == ZERO {
            return Ok(ZERO);
        }
        Ok(self.coeff * product(&self.atoms, model, z)?)
    }

    pub fn shifted(&self, t: Complex64) -> Self {
        Self::new(self.coeff, self.atoms.iter().map(|a| a.shifted(t)).collect())
    }

    pub fn reflected(&self) -> Self {
        Self::new(self.coeff.conj(), self.atoms.iter().map(Atom::reflected).collect())
    }

    fn scaled(&self, c: Complex64) -> Self {
        Self::new(self.coeff * c, self.atoms.clone())
    }
}

/// A one-particle wavefunction: a finite sum of terms.
pub type Wavefunction = Vec<Term>;

/// Per-type one-particle data.
pub type OneParticle = BTreeMap<u32, Wavefunction>;

pub fn eval_wavefunction(wf: &[Term], model: &SMatrixModel, z: Complex64) -> Result<Complex64> {
    wf.iter().map(|t| t.eval(model, z)).sum()
}

/// `coeff · L(θ1) · R(θ2) · [S-factor]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub coeff: Complex64,
    pub left: Vec<Atom>,
    pub right: Vec<Atom>,
    pub sfactor: Option<SFactor>,
}

impl PairTerm {
    pub fn eval(&self, model: &SMatrixModel, theta1: f64, theta2: f64) -> Result<Complex64> {
        if self.coeff == ZERO {
            return Ok(ZERO);
        }
        let l = product(&self.left, model, Complex64::new(theta1, 0.0))?;
        let r = product(&self.right, model, Complex64::new(theta2, 0.0))?;
        let s = match &self.sfactor {
            Some(sf) => sf.eval(model, theta1, theta2)?,
            None => ONE,
        };
        Ok(self.coeff * l * r * s)
    }

    fn reflected(&self) -> Self {
        Self {
            coeff: self.coeff.conj(),
            left: self.right.iter().map(Atom::reflected).collect(),
            right: self.left.iter().map(Atom::reflected).collect(),
            sfactor: self.sfactor.map(|s| s.reflected()),
        }
    }
}

/// Which particle-number sectors an operation should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectorMask([bool; N_MAX + 1]);

impl SectorMask {
    pub const ALL: Self = Self([true; N_MAX + 1]);

    pub fn only(n: usize) -> Self {
        let mut m = [false; N_MAX + 1];
        m[n] = true;
        Self(m)
    }

    pub fn of(ns: &[usize]) -> Self {
        let mut m = [false; N_MAX + 1];
        for &n in ns {
            m[n] = true;
        }
        Self(m)
    }

    pub fn wants(&self, n: usize) -> bool {
        n <= N_MAX && self.0[n]
    }

    /// Sectors whose image under a number-changing map lands in `self`.
    fn preimage(&self, delta: &[i32]) -> Self {
        let mut m = [false; N_MAX + 1];
        for (n, slot) in m.iter_mut().enumerate() {
            *slot = delta.iter().any(|d| {
                let k = n as i32 + d;
                k >= 0 && self.wants(k as usize)
            });
        }
        Self(m)
    }
}

/// Vector in the Fock space truncated at two particles.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FockVector {
    pub vacuum: Complex64,
    pub one: OneParticle,
    pub two: BTreeMap<(u32, u32), Vec<PairTerm>>,
    /// Set when an operation produced a component above two particles and
    /// dropped it.
    pub truncated: bool,
}

impl FockVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn vacuum() -> Self {
        Self {
            vacuum: ONE,
            ..Self::default()
        }
    }

    pub fn one_particle(data: OneParticle) -> Self {
        Self {
            one: data,
            ..Self::default()
        }
    }

    /// A single-type Gaussian `c · exp(−a(θ − θ0)²)`.
    pub fn gaussian(species: u32, coeff: Complex64, width: f64, center: f64) -> Self {
        Self::one_particle(BTreeMap::from([(
            species,
            vec![Term::gaussian(coeff, width, center, 0)],
        )]))
    }

    /// Highest particle number with a nonzero term.
    pub fn max_particles(&self) -> usize {
        if self.two.values().any(|v| v.iter().any(|t| t.coeff != ZERO)) {
            2
        } else if self.one.values().any(|v| v.iter().any(|t| t.coeff != ZERO)) {
            1
        } else {
            0
        }
    }

    pub fn species(&self) -> impl Iterator<Item = u32> + '_ {
        self.one.keys().copied()
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.vacuum += other.vacuum;
        for (&s, terms) in &other.one {
            out.one.entry(s).or_default().extend(terms.iter().cloned());
        }
        for (&k, terms) in &other.two {
            out.two.entry(k).or_default().extend(terms.iter().cloned());
        }
        out.truncated |= other.truncated;
        out
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.vacuum *= c;
        for t in out.one.values_mut().flatten() {
            t.coeff *= c;
        }
        for t in out.two.values_mut().flatten() {
            t.coeff *= c;
        }
        out
    }

    pub fn one_component(&self, model: &SMatrixModel, species: u32, z: Complex64) -> Result<Complex64> {
        self.one
            .get(&species)
            .map_or(Ok(ZERO), |wf| eval_wavefunction(wf, model, z))
    }

    pub fn two_component(
        &self,
        model: &SMatrixModel,
        types: (u32, u32),
        theta1: f64,
        theta2: f64,
    ) -> Result<Complex64> {
        self.two.get(&types).map_or(Ok(ZERO), |terms| {
            terms.iter().map(|t| t.eval(model, theta1, theta2)).sum()
        })
    }

    /// The antiunitary CPT involution for Z(N).
    pub fn cpt(&self, n: u32) -> Self {
        let bar = |a: u32| n - a;
        let mut out = Self {
            vacuum: self.vacuum.conj(),
            truncated: self.truncated,
            ..Self::default()
        };
        for (&s, terms) in &self.one {
            out.one
                .entry(bar(s))
                .or_default()
                .extend(terms.iter().map(Term::reflected));
        }
        for (&(mu, nu), terms) in &self.two {
            out.two
                .entry((bar(nu), bar(mu)))
                .or_default()
                .extend(terms.iter().map(PairTerm::reflected));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("Fock vectors serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidRequest(format!("bad Fock vector: {e}")))
    }
}

type AtomSamples = Arc<Vec<(Complex64, Complex64)>>;

/// Model and real-line quadrature shared by every operation.
#[derive(Debug, Clone)]
pub struct FockContext<'a> {
    pub model: &'a SMatrixModel,
    pub rule: &'a LineRule,
    /// Node samples of on-shell and contraction atoms, keyed by their JSON.
    cache: Arc<Mutex<HashMap<String, AtomSamples>>>,
}

impl<'a> FockContext<'a> {
    pub fn new(model: &'a SMatrixModel, rule: &'a LineRule) -> Self {
        Self {
            model,
            rule,
            cache: Arc::default(),
        }
    }

    fn atom_samples(&self, atom: &Atom) -> Result<AtomSamples> {
        let compute = || -> Result<AtomSamples> {
            let v = self
                .rule
                .nodes
                .par_iter()
                .map(|&x| atom.eval_parts(self.model, Complex64::new(x, 0.0)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Arc::new(v))
        };
        if matches!(atom.shape, Shape::Gaussian { .. }) {
            return compute();
        }
        let key = serde_json::to_string(atom).expect("atoms serialize");
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v.clone());
        }
        let v = compute()?;
        self.cache.lock().expect("cache lock").insert(key, v.clone());
        Ok(v)
    }

    fn sample_atoms(&self, coeff: Complex64, atoms: &[Atom]) -> Result<Vec<Complex64>> {
        let n = self.rule.len();
        let mut e = vec![ZERO; n];
        let mut m = vec![coeff; n];
        for a in atoms {
            let parts = self.atom_samples(a)?;
            for ((ei, mi), (pe, pm)) in e.iter_mut().zip(m.iter_mut()).zip(parts.iter()) {
                *ei += pe;
                *mi *= pm;
            }
        }
        Ok(m.iter()
            .zip(&e)
            .map(|(m, e)| if *m == ZERO { ZERO } else { m * e.exp() })
            .collect())
    }

    /// A wavefunction at the rule nodes.
    pub fn sample(&self, wf: &[Term]) -> Result<Vec<Complex64>> {
        let mut acc = vec![ZERO; self.rule.len()];
        for t in wf {
            if t.coeff == ZERO {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(self.sample_atoms(t.coeff, &t.atoms)?) {
                *a += v;
            }
        }
        Ok(acc)
    }

    // Rows are summed in node order so results do not depend on scheduling.
    fn sfactor_matrix_sum(&self, sf: Option<SFactor>, left: &[Complex64], right: &[Complex64]) -> Result<Complex64> {
        let Some(sf) = sf else {
            return Ok(self.rule.sum(left) * self.rule.sum(right));
        };
        let nodes = &self.rule.nodes;
        let w = &self.rule.weights;
        (0..nodes.len())
            .into_par_iter()
            .map(|i| {
                let mut row = ZERO;
                for j in 0..nodes.len() {
                    row += sf.eval(self.model, nodes[i], nodes[j])? * right[j] * w[j];
                }
                Ok(row * left[i] * w[i])
            })
            .collect::<Result<Vec<_>>>()
            .map(|rows| rows.iter().sum())
    }

    /// `⟨Φ, Ψ⟩` with every sector integrated on the rule.
    pub fn inner(&self, a: &FockVector, b: &FockVector) -> Result<Complex64> {
        let mut total = a.vacuum.conj() * b.vacuum;
        for (s, wa) in &a.one {
            let Some(wb) = b.one.get(s) else { continue };
            let va = self.sample(wa)?;
            let vb = self.sample(wb)?;
            let prod: Vec<Complex64> = va.iter().zip(&vb).map(|(x, y)| x.conj() * y).collect();
            total += self.rule.sum(&prod);
        }
        for (k, ta) in &a.two {
            let Some(tb) = b.two.get(k) else { continue };
            for p in ta {
                let pl = self.sample_atoms(p.coeff, &p.left)?;
                let pr = self.sample_atoms(ONE, &p.right)?;
                for q in tb {
                    let ql = self.sample_atoms(q.coeff, &q.left)?;
                    let qr = self.sample_atoms(ONE, &q.right)?;
                    let l: Vec<_> = pl.iter().zip(&ql).map(|(x, y)| x.conj() * y).collect();
                    let r: Vec<_> = pr.iter().zip(&qr).map(|(x, y)| x.conj() * y).collect();
                    total += match (p.sfactor, q.sfactor) {
                        (None, None) => self.sfactor_matrix_sum(None, &l, &r)?,
                        (Some(s), None) => self.sfactor_matrix_sum(Some(s.reflected_conj()), &l, &r)?,
                        (None, Some(s)) => self.sfactor_matrix_sum(Some(s), &l, &r)?,
                        (Some(s), Some(t)) => self.pair_double_sum(s, t, &l, &r)?,
                    };
                }
            }
        }
        Ok(total)
    }

    fn pair_double_sum(&self, s: SFactor, t: SFactor, left: &[Complex64], right: &[Complex64]) -> Result<Complex64> {
        let nodes = &self.rule.nodes;
        let w = &self.rule.weights;
        (0..nodes.len())
            .into_par_iter()
            .map(|i| {
                let mut row = ZERO;
                for j in 0..nodes.len() {
                    let a = s.eval(self.model, nodes[i], nodes[j])?.conj();
                    let b = t.eval(self.model, nodes[i], nodes[j])?;
                    row += a * b * right[j] * w[j];
                }
                Ok(row * left[i] * w[i])
            })
            .collect::<Result<Vec<_>>>()
            .map(|rows| rows.iter().sum())
    }

    /// `z(h)Ψ`.
    pub fn zf_annihilate(&self, h: &OneParticle, psi: &FockVector, mask: SectorMask) -> Result<FockVector> {
        let mut out = FockVector {
            truncated: psi.truncated,
            ..FockVector::zero()
        };
        if mask.wants(0) {
            for (s, wf) in &psi.one {
                let Some(hs) = h.get(s) else { continue };
                let vh = self.sample(hs)?;
                let vp = self.sample(wf)?;
                let prod: Vec<_> = vh.iter().zip(&vp).map(|(x, y)| x.conj() * y).collect();
                out.vacuum += self.rule.sum(&prod);
            }
        }
        if mask.wants(1) {
            for (&(mu, nu), terms) in &psi.two {
                let Some(hs) = h.get(&mu) else { continue };
                let vh = self.sample(hs)?;
                for p in terms {
                    if p.coeff == ZERO {
                        continue;
                    }
                    let vl = self.sample_atoms(ONE, &p.left)?;
                    let weights: Vec<Complex64> = vh
                        .iter()
                        .zip(&vl)
                        .zip(&self.rule.weights)
                        .map(|((a, b), w)| a.conj() * b * w)
                        .collect();
                    let coeff = p.coeff * SQRT_2;
                    let term = match p.sfactor {
                        None => {
                            let scalar: Complex64 = weights.iter().sum();
                            Term::new(coeff * scalar, p.right.clone())
                        }
                        Some(sf) => {
                            let c = Contraction {
                                nodes: self.rule.nodes.clone(),
                                weights,
                                sfactor: sf,
                            };
                            let mut atoms = vec![Atom::from_shape(Shape::Contraction(Arc::new(c)))];
                            atoms.extend(p.right.iter().cloned());
                            Term::new(coeff, atoms)
                        }
                    };
                    out.one.entry(nu).or_default().push(term);
                }
            }
        }
        Ok(out)
    }

    /// `φ(f)Ψ`.
    pub fn apply_phi(&self, f: &TestFunction, psi: &FockVector, mask: SectorMask) -> Result<FockVector> {
        let create = zf_create(&creation_data(f, self.model), psi, mask);
        let annihilate = self.zf_annihilate(&annihilation_data(f, self.model), psi, mask)?;
        Ok(create.plus(&annihilate))
    }

    /// `φ′(g)Ψ = J φ(g̃) J Ψ`.
    pub fn apply_phi_reflected(&self, g: &TestFunction, psi: &FockVector, mask: SectorMask) -> Result<FockVector> {
        let n = self.model.n;
        let inner = self.apply_phi(&cpt_partner(g, n), &psi.cpt(n), mask)?;
        Ok(inner.cpt(n))
    }

    /// `χ(f)ψ` on the vacuum and one-particle sectors.
    pub fn apply_chi_1(&self, table: &FusionTable, f: &TestFunction, psi: &FockVector) -> Result<FockVector> {
        if psi.max_particles() > 1 {
            return Err(Error::Unsupported(
                "the bound-state operator is implemented on at most one particle".into(),
            ));
        }
        let mut out = FockVector::zero();
        for p in table.processes() {
            let Some(wf) = psi.one.get(&p.beta) else { continue };
            if p.eta == ZERO {
                continue;
            }
            let shift_f = Complex64::new(0.0, p.angles.theta_ab);
            let shift_psi = Complex64::new(0.0, -p.angles.theta_ba);
            for bump in f.bumps(p.alpha) {
                let fa = Atom::onshell(*bump, self.model.mass(p.alpha), Sign::Plus).shifted(shift_f);
                for t in wf {
                    if let Some(bad) = t.atoms.iter().find(|a| !a.is_analytic()) {
                        return Err(Error::DomainError {
                            reason: format!(
                                "type-{} wavefunction has a non-analytic factor ({:?}) that cannot be shifted by {}",
                                p.beta,
                                std::mem::discriminant(&bad.shape),
                                shift_psi
                            ),
                        });
                    }
                    let shifted = t.shifted(shift_psi);
                    let mut atoms = vec![fa.clone()];
                    atoms.extend(shifted.atoms);
                    out.one
                        .entry(p.gamma)
                        .or_default()
                        .push(Term::new(-Complex64::i() * p.eta * t.coeff, atoms));
                }
            }
        }
        Ok(out)
    }

    /// `χ′(g)ψ = J χ(g̃) J ψ`.
    pub fn apply_chi_reflected_1(&self, table: &FusionTable, g: &TestFunction, psi: &FockVector) -> Result<FockVector> {
        let n = self.model.n;
        Ok(self.apply_chi_1(table, &cpt_partner(g, n), &psi.cpt(n))?.cpt(n))
    }

    /// `max |Ψ^{αβ}(θ1,θ2) − S^{βα}(θ2−θ1) Ψ^{βα}(θ2,θ1)|` over `grid × grid`.
    pub fn s_symmetry_defect(&self, psi: &FockVector, grid: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut keys: Vec<(u32, u32)> = psi.two.keys().copied().collect();
        keys.extend(psi.two.keys().map(|&(a, b)| (b, a)));
        keys.sort_unstable();
        keys.dedup();
        for (a, b) in keys {
            let s = self.model.component(b, a)?;
            for &t1 in grid {
                for &t2 in grid {
                    let lhs = psi.two_component(self.model, (a, b), t1, t2)?;
                    let rhs = s.value(Complex64::new(t2 - t1, 0.0)) * psi.two_component(self.model, (b, a), t2, t1)?;
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
        Ok(worst)
    }
}

impl SFactor {
    /// The factor that makes `conj(self)` appear as the ket-side factor
    /// in an inner product, i.e. the same function conjugated.
    fn reflected_conj(&self) -> Self {
        Self {
            conj: !self.conj,
            ..*self
        }
    }
}

/// `z†(h)Ψ`, S-symmetrized; components above two particles are dropped and
/// flagged.
pub fn zf_create(h: &OneParticle, psi: &FockVector, mask: SectorMask) -> FockVector {
    let mut out = FockVector {
        truncated: psi.truncated,
        ..FockVector::zero()
    };
    if mask.wants(1) && psi.vacuum != ZERO {
        for (&s, wf) in h {
            out.one
                .entry(s)
                .or_default()
                .extend(wf.iter().map(|t| t.scaled(psi.vacuum)));
        }
    }
    if mask.wants(2) {
        let c = Complex64::new(1.0 / SQRT_2, 0.0);
        for (&a, hs) in h {
            for (&b, ps) in &psi.one {
                for ht in hs {
                    for pt in ps {
                        let coeff = c * ht.coeff * pt.coeff;
                        if coeff == ZERO {
                            continue;
                        }
                        out.two.entry((a, b)).or_default().push(PairTerm {
                            coeff,
                            left: ht.atoms.clone(),
                            right: pt.atoms.clone(),
                            sfactor: None,
                        });
                        out.two.entry((b, a)).or_default().push(PairTerm {
                            coeff,
                            left: pt.atoms.clone(),
                            right: ht.atoms.clone(),
                            sfactor: Some(SFactor {
                                alpha: a,
                                beta: b,
                                orientation: 1,
                                shift: ZERO,
                                conj: false,
                            }),
                        });
                    }
                }
            }
        }
    }
    // The three-particle image is dropped; flag it unless the caller
    // restricted the output to sectors it can see.
    if psi.max_particles() == N_MAX && !h.is_empty() && mask == SectorMask::ALL {
        out.truncated = true;
    }
    out
}

/// `f^+_α` for every type of `f`, one term per bump.
pub fn creation_data(f: &TestFunction, model: &SMatrixModel) -> OneParticle {
    let mut out = OneParticle::new();
    for (&s, bumps) in f.components() {
        let terms = bumps
            .iter()
            .map(|b| Term::new(ONE, vec![Atom::onshell(*b, model.mass(s), Sign::Plus)]))
            .collect();
        out.insert(s, terms);
    }
    out
}

/// `h_f^β = conj f^−_{β̄}`, one term per bump.
pub fn annihilation_data(f: &TestFunction, model: &SMatrixModel) -> OneParticle {
    let mut out = OneParticle::new();
    for (&s, bumps) in f.components() {
        let beta = model.antiparticle(s);
        let terms = bumps
            .iter()
            .map(|b| Term::new(ONE, vec![Atom::onshell(*b, model.mass(s), Sign::Minus).reflected()]))
            .collect();
        out.insert(beta, terms);
    }
    out
}

/// The sectors of `psi` that can reach `mask` under one number change of
/// `±1`.
pub fn phi_preimage(mask: SectorMask) -> SectorMask {
    mask.preimage(&[1, -1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::Bump;

    fn setup() -> (SMatrixModel, LineRule) {
        (SMatrixModel::zn(3, 1.0).unwrap(), LineRule::new(6.5, 40, 16))
    }

    fn gauss(s: u32, c: f64, a: f64, x0: f64) -> FockVector {
        FockVector::gaussian(s, Complex64::new(c, 0.3 * c), a, x0)
    }

    #[test]
    fn one_particle_inner_product() {
        let (model, rule) = setup();
        let ctx = FockContext::new(&model, &rule);
        let a = gauss(1, 1.0, 1.0, 0.0);
        let v = ctx.inner(&a, &a).unwrap();
        let exact = (1.0 + 0.09) * (std::f64::consts::PI / 2.0).sqrt();
        assert!((v - exact).norm() < 1e-12);
        let b = gauss(2, 1.0, 1.0, 0.0);
        assert_eq!(ctx.inner(&a, &b).unwrap(), ZERO);
    }

    #[test]
    fn creation_on_vacuum_and_symmetry() {
        let (model, rule) = setup();
        let ctx = FockContext::new(&model, &rule);
        let h = gauss(1, 1.0, 0.8, 0.2).one;
        let k = gauss(2, 0.7, 1.2, -0.4).one;
        let one = zf_create(&h, &FockVector::vacuum(), SectorMask::ALL);
        assert_eq!(one.one, h);
        let two = zf_create(
            &h,
            &zf_create(&k, &FockVector::vacuum(), SectorMask::ALL),
            SectorMask::ALL,
        );
        let grid: Vec<f64> = (0..10).map(|i| -2.0 + 0.43 * i as f64).collect();
        assert!(ctx.s_symmetry_defect(&two, &grid).unwrap() < 1e-8);
        assert!(!two.truncated);
        let three = zf_create(&h, &two, SectorMask::ALL);
        assert!(three.truncated);
    }

    #[test]
    fn annihilation_on_vacuum_and_one_particle() {
        let (model, rule) = setup();
        let ctx = FockContext::new(&model, &rule);
        let h = gauss(1, 1.0, 1.0, 0.0).one;
        let z = ctx.zf_annihilate(&h, &FockVector::vacuum(), SectorMask::ALL).unwrap();
        assert_eq!(z, FockVector::zero());
        let k = gauss(1, 2.0, 1.0, 0.0);
        let z = ctx.zf_annihilate(&h, &k, SectorMask::ALL).unwrap();
        let want = ctx.inner(&FockVector::one_particle(h), &k).unwrap();
        assert!((z.vacuum - want).norm() < 1e-14);
    }

    #[test]
    fn cpt_is_involutive_and_antiunitary() {
        let (model, rule) = setup();
        let ctx = FockContext::new(&model, &rule);
        let a = gauss(1, 1.0, 0.8, 0.2);
        let b = zf_create(&gauss(2, 0.5, 1.0, 0.1).one, &a, SectorMask::ALL);
        assert_eq!(b.cpt(3).cpt(3), b);
        let c = b.plus(&FockVector::vacuum().scaled(Complex64::new(0.2, 0.9)));
        let lhs = ctx.inner(&c.cpt(3), &b.cpt(3)).unwrap();
        let rhs = ctx.inner(&c, &b).unwrap().conj();
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn json_round_trip_with_contraction() {
        let (model, rule) = setup();
        let ctx = FockContext::new(&model, &rule);
        let f = TestFunction::single(1, Bump::real([0.0, -1.0], 0.5, 1.0).unwrap());
        let g = TestFunction::single(2, Bump::real([0.2, 1.1], 0.5, 1.0).unwrap());
        let psi = gauss(1, 1.0, 0.7, -0.2);
        let v = ctx.apply_phi_reflected(&g, &psi, SectorMask::ALL).unwrap();
        let w = ctx.apply_phi(&f, &v, SectorMask::only(1)).unwrap();
        assert!(w.one.values().flatten().any(|t| !t.atoms.iter().all(Atom::is_analytic)));
        let back = FockVector::from_json(&w.to_json()).unwrap();
        assert_eq!(back, w);
    }
}
