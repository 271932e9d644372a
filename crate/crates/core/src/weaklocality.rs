//! One-particle matrix elements of `[φ(f), φ′(g)]` and `[χ(f), χ′(g)]` for
//! wedge-separated test functions.
//!
//! Shifting the `θ` contour of the two-particle S-factor term in
//! `⟨ξ, [φ(f), φ′(g)] ψ⟩` up to the upper rim of the physical strip picks
//! up the strip poles of `S^{νβ}`; the remaining terms cancel because
//! `f^+(θ + iπ) = f^−(θ)` and `f^+` (resp. `g^−`) is bounded on the strip
//! when `f` (resp. `g`) is supported in the left (resp. right) wedge. The
//! result is
//!
//! ```text
//! ⟨ξ, [φ(f), φ′(g)] ψ⟩ = −2πi Σ_β Σ_ν Σ_p R^{νβ}_p
//!     ∫ conj ξ^β(t) ψ^β(t) f^+_ν(t + iθ_p) g^−_{ν̄}(t + iθ_p) dt,
//! ```
//!
//! with `iθ_p` the strip poles of `S^{νβ}` and `R_p` their residues. The
//! vacuum element vanishes: no S-factor enters it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{phi_preimage, Atom, FockContext, FockVector, SectorMask, Term};
use crate::fusion::FusionTable;
use crate::quad::LineRule;
use crate::smatrix::{residue_at, SMatrixModel};
use crate::testfn::{wedge_clearance, Bump, Sign, TestFunction, Wedge, SEPARATION_MARGIN};

/// `|total| ≤ CANCELLATION_TOL · scale` for a pass.
pub const CANCELLATION_TOL: f64 = 1e-3;
/// `|φ-commutator − residue formula| ≤ RESIDUE_AGREEMENT_TOL · scale`.
pub const RESIDUE_AGREEMENT_TOL: f64 = 2e-2;
/// Vacuum commutator bound relative to its scale.
pub const VACUUM_TOL: f64 = 1e-6;
/// Relative level below which refinement differences count as rounding.
pub const NOISE_FLOOR: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Composite Gauss–Legendre settings for the rapidity line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Half-width of the rapidity window; `None` sizes it from the bumps.
    pub half_width: Option<f64>,
    pub base_panels: usize,
    pub order: usize,
    pub level: u32,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            half_width: None,
            base_panels: 30,
            order: 16,
            level: 1,
        }
    }
}

impl QuadratureSettings {
    pub fn at_level(self, level: u32) -> Self {
        Self { level, ..self }
    }

    /// On-shell transforms of a bump of radius `r` decay once
    /// `r m cosh θ` reaches a few hundred.
    pub fn window_for(&self, model: &SMatrixModel, fs: &[&TestFunction]) -> f64 {
        if let Some(w) = self.half_width {
            return w;
        }
        let m = model.spectrum.masses().iter().copied().fold(f64::INFINITY, f64::min);
        let r = fs.iter().filter_map(|f| f.min_radius()).fold(f64::INFINITY, f64::min);
        if !r.is_finite() {
            return 6.0;
        }
        (600.0 / (r * m)).ln().clamp(4.0, 9.0)
    }

    pub fn rule(&self, half_width: f64) -> LineRule {
        LineRule::refined(half_width, self.base_panels, self.order, self.level)
    }
}

/// `⟨bra, [A(f), B(g)] ket⟩` for wedge-separated `f` (left) and `g`
/// (right), bra and ket with at most one particle of types `{1, N − 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixElementRequest {
    pub label: String,
    pub bra: FockVector,
    pub ket: FockVector,
    pub f: TestFunction,
    pub g: TestFunction,
    pub left: Wedge,
    pub right: Wedge,
}

impl MatrixElementRequest {
    /// A validated request.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: &SMatrixModel,
        label: impl Into<String>,
        bra: FockVector,
        ket: FockVector,
        f: TestFunction,
        g: TestFunction,
        left: Wedge,
        right: Wedge,
    ) -> Result<Self> {
        let r = Self::unchecked(label, bra, ket, f, g, left, right);
        r.validate(model)?;
        Ok(r)
    }

    /// A request that skips validation; for negative controls.
    pub fn unchecked(
        label: impl Into<String>,
        bra: FockVector,
        ket: FockVector,
        f: TestFunction,
        g: TestFunction,
        left: Wedge,
        right: Wedge,
    ) -> Self {
        Self {
            label: label.into(),
            bra,
            ket,
            f,
            g,
            left,
            right,
        }
    }

    pub fn validate(&self, model: &SMatrixModel) -> Result<()> {
        let edge = model.edge_types();
        for (name, v) in [("bra", &self.bra), ("ket", &self.ket)] {
            if v.max_particles() > 1 {
                return Err(Error::InvalidRequest(format!(
                    "{name} has two-particle components; only n <= 1 is supported"
                )));
            }
            if let Some(s) = v.species().find(|s| !edge.contains(s)) {
                return Err(Error::InvalidRequest(format!("{name} has type {s} outside {edge:?}")));
            }
        }
        for (name, t) in [("f", &self.f), ("g", &self.g)] {
            if let Some(s) = t.species().find(|s| !edge.contains(s)) {
                return Err(Error::InvalidRequest(format!("{name} has type {s} outside {edge:?}")));
            }
        }
        if self.left.side != crate::testfn::WedgeSide::Left || self.right.side != crate::testfn::WedgeSide::Right {
            return Err(Error::InvalidRequest("f needs a left wedge and g a right wedge".into()));
        }
        if !self.left.spacelike_to(&self.right) {
            return Err(Error::InvalidRequest("the wedges are not spacelike separated".into()));
        }
        let m = model.spectrum.masses().iter().copied().fold(f64::INFINITY, f64::min);
        let margin = SEPARATION_MARGIN / m;
        for (name, t, w) in [("f", &self.f, &self.left), ("g", &self.g, &self.right)] {
            let c = wedge_clearance(t, w);
            if c < margin {
                return Err(Error::InvalidRequest(format!(
                    "{name} keeps only {c:.4} from its wedge boundary; {margin} required"
                )));
            }
        }
        Ok(())
    }

    /// Translate both test functions and both wedges by `a`.
    pub fn translated(&self, a: [f64; 2]) -> Self {
        Self {
            f: self.f.translated(a),
            g: self.g.translated(a),
            left: self.left.translated(a),
            right: self.right.translated(a),
            ..self.clone()
        }
    }

    fn bra_mask(&self) -> SectorMask {
        let mut ns = Vec::new();
        if self.bra.vacuum != ZERO {
            ns.push(0);
        }
        if self.bra.max_particles() >= 1 {
            ns.push(1);
        }
        SectorMask::of(&ns)
    }
}

/// Both orderings of a commutator element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orderings {
    /// `⟨bra, A B ket⟩`.
    pub forward: Complex64,
    /// `⟨bra, B A ket⟩`.
    pub backward: Complex64,
    /// Whether any intermediate vector dropped a component.
    pub truncated: bool,
}

impl Orderings {
    pub fn commutator(&self) -> Complex64 {
        self.forward - self.backward
    }
}

/// Evaluates matrix elements on one quadrature rule.
#[derive(Debug, Clone)]
pub struct ElementEvaluator<'a> {
    pub ctx: FockContext<'a>,
}

impl<'a> ElementEvaluator<'a> {
    pub fn new(model: &'a SMatrixModel, rule: &'a LineRule) -> Self {
        Self {
            ctx: FockContext::new(model, rule),
        }
    }

    pub fn model(&self) -> &'a SMatrixModel {
        self.ctx.model
    }

    /// `⟨bra, φ(f)φ′(g) ket⟩` and `⟨bra, φ′(g)φ(f) ket⟩`.
    pub fn phi_orderings(&self, req: &MatrixElementRequest) -> Result<Orderings> {
        let out = req.bra_mask();
        let mid = phi_preimage(out);
        let c = &self.ctx;
        let a = c.apply_phi_reflected(&req.g, &req.ket, mid)?;
        let ab = c.apply_phi(&req.f, &a, out)?;
        let b = c.apply_phi(&req.f, &req.ket, mid)?;
        let ba = c.apply_phi_reflected(&req.g, &b, out)?;
        Ok(Orderings {
            forward: c.inner(&req.bra, &ab)?,
            backward: c.inner(&req.bra, &ba)?,
            truncated: a.truncated || ab.truncated || b.truncated || ba.truncated,
        })
    }

    pub fn phi_commutator(&self, req: &MatrixElementRequest) -> Result<Complex64> {
        Ok(self.phi_orderings(req)?.commutator())
    }

    /// `⟨bra, χ(f)χ′(g) ket⟩` and `⟨bra, χ′(g)χ(f) ket⟩`.
    pub fn chi_orderings(&self, table: &FusionTable, req: &MatrixElementRequest) -> Result<Orderings> {
        let c = &self.ctx;
        let a = c.apply_chi_reflected_1(table, &req.g, &req.ket)?;
        let ab = c.apply_chi_1(table, &req.f, &a)?;
        let b = c.apply_chi_1(table, &req.f, &req.ket)?;
        let ba = c.apply_chi_reflected_1(table, &req.g, &b)?;
        Ok(Orderings {
            forward: c.inner(&req.bra, &ab)?,
            backward: c.inner(&req.bra, &ba)?,
            truncated: false,
        })
    }

    pub fn chi_commutator(&self, table: &FusionTable, req: &MatrixElementRequest) -> Result<Complex64> {
        Ok(self.chi_orderings(table, req)?.commutator())
    }

    /// `⟨bra, [φ(f), χ′(g)] ket⟩`: identically zero by particle-number
    /// grading on one-particle bras and kets.
    pub fn cross_term(&self, table: &FusionTable, req: &MatrixElementRequest) -> Result<Complex64> {
        let c = &self.ctx;
        let out = req.bra_mask();
        let a = c.apply_chi_reflected_1(table, &req.g, &req.ket)?;
        let ab = c.apply_phi(&req.f, &a, out)?;
        let b = c.apply_phi(&req.f, &req.ket, phi_preimage(out))?;
        let b1 = FockVector {
            vacuum: ZERO,
            two: Default::default(),
            ..b
        };
        let ba = c.apply_chi_reflected_1(table, &req.g, &b1)?;
        Ok(c.inner(&req.bra, &ab)? - c.inner(&req.bra, &ba)?)
    }

    /// The defect as a sum over strip poles (see the module docs).
    pub fn residue_formula(&self, req: &MatrixElementRequest) -> Result<Complex64> {
        let model = self.ctx.model;
        let mut total = ZERO;
        for (&beta, bra_wf) in &req.bra.one {
            let Some(ket_wf) = req.ket.one.get(&beta) else { continue };
            let xi = self.ctx.sample(bra_wf)?;
            let psi = self.ctx.sample(ket_wf)?;
            for (&nu, f_bumps) in req.f.components() {
                let nubar = model.antiparticle(nu);
                let g_bumps = req.g.bumps(nubar);
                if g_bumps.is_empty() {
                    continue;
                }
                let s = model.component(nu, beta)?;
                for pole in s.open_strip_poles() {
                    let r = residue_at(s, pole.location)?;
                    let shift = Complex64::new(0.0, pole.location.im);
                    let mut kernel = Vec::new();
                    for fb in f_bumps {
                        for gb in g_bumps {
                            kernel.push(Term::new(
                                Complex64::new(1.0, 0.0),
                                vec![
                                    Atom::onshell(*fb, model.mass(nu), Sign::Plus).shifted(shift),
                                    Atom::onshell(*gb, model.mass(nubar), Sign::Minus).shifted(shift),
                                ],
                            ));
                        }
                    }
                    let k = self.ctx.sample(&kernel)?;
                    let prod: Vec<Complex64> = xi
                        .iter()
                        .zip(&psi)
                        .zip(&k)
                        .map(|((x, p), k)| x.conj() * p * k)
                        .collect();
                    total += Complex64::new(0.0, -2.0 * PI) * r * self.ctx.rule.sum(&prod);
                }
            }
        }
        Ok(total)
    }
}

/// All three elements and the verdict for one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub label: String,
    pub level: u32,
    pub phi_commutator: Complex64,
    pub chi_commutator: Complex64,
    pub residue_formula: Complex64,
    pub total: Complex64,
    pub phi: Option<Orderings>,
    pub chi: Option<Orderings>,
    pub scale: f64,
    /// `|φ-commutator − residue formula|`, the quadrature error indicator.
    pub residue_gap: f64,
    pub cancellation_tol: f64,
    pub residue_tol: f64,
    pub truncation_flagged: bool,
    pub complete: bool,
    pub error: Option<String>,
    pub pass: bool,
}

impl DefectReport {
    pub fn relative_total(&self) -> f64 {
        self.total.norm() / self.scale
    }

    pub fn relative_gap(&self) -> f64 {
        self.residue_gap / self.scale
    }

    fn incomplete(label: &str, level: u32, e: &Error) -> Self {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        Self {
            label: label.to_string(),
            level,
            phi_commutator: nan,
            chi_commutator: nan,
            residue_formula: nan,
            total: nan,
            phi: None,
            chi: None,
            scale: f64::NAN,
            residue_gap: f64::NAN,
            cancellation_tol: CANCELLATION_TOL,
            residue_tol: RESIDUE_AGREEMENT_TOL,
            truncation_flagged: false,
            complete: false,
            error: Some(e.to_string()),
            pass: false,
        }
    }
}

/// Assemble φ, χ and residue elements for `req`. Failures produce an
/// incomplete report, never a pass.
pub fn weak_locality_report(
    evaluator: &ElementEvaluator<'_>,
    table: &FusionTable,
    req: &MatrixElementRequest,
    level: u32,
) -> DefectReport {
    let run = || -> Result<DefectReport> {
        let phi = evaluator.phi_orderings(req)?;
        let chi = evaluator.chi_orderings(table, req)?;
        let residue = evaluator.residue_formula(req)?;
        let phi_c = phi.commutator();
        let chi_c = chi.commutator();
        let total = phi_c + chi_c;
        let scale = [phi.forward, phi.backward, chi.forward, chi.backward]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        let gap = (phi_c - residue).norm();
        let finite = total.is_finite() && residue.is_finite() && scale.is_finite();
        let pass = finite
            && !phi.truncated
            && total.norm() <= CANCELLATION_TOL * scale
            && gap <= RESIDUE_AGREEMENT_TOL * scale;
        Ok(DefectReport {
            label: req.label.clone(),
            level,
            phi_commutator: phi_c,
            chi_commutator: chi_c,
            residue_formula: residue,
            total,
            phi: Some(phi),
            chi: Some(chi),
            scale,
            residue_gap: gap,
            cancellation_tol: CANCELLATION_TOL,
            residue_tol: RESIDUE_AGREEMENT_TOL,
            truncation_flagged: phi.truncated,
            complete: finite,
            error: (!finite).then(|| "non-finite element".to_string()),
            pass,
        })
    };
    run().unwrap_or_else(|e| DefectReport::incomplete(&req.label, level, &e))
}

/// `⟨Ω, [φ(f), φ′(g)] Ω⟩` with its scale.
pub fn vacuum_commutator(
    evaluator: &ElementEvaluator<'_>,
    f: &TestFunction,
    g: &TestFunction,
) -> Result<(Complex64, f64)> {
    let req = MatrixElementRequest::unchecked(
        "vacuum",
        FockVector::vacuum(),
        FockVector::vacuum(),
        f.clone(),
        g.clone(),
        Wedge::left([0.0, 0.0]),
        Wedge::right([0.0, 0.0]),
    );
    let o = evaluator.phi_orderings(&req)?;
    Ok((o.commutator(), o.forward.norm().max(o.backward.norm())))
}

/// A rule sized for `reqs`.
pub fn rule_for(model: &SMatrixModel, settings: &QuadratureSettings, reqs: &[MatrixElementRequest]) -> LineRule {
    let fs: Vec<&TestFunction> = reqs.iter().flat_map(|r| [&r.f, &r.g]).collect();
    settings.rule(settings.window_for(model, &fs))
}

/// Reports at each refinement level in `levels`, on rules sized for `req`.
pub fn refinement_study(
    model: &SMatrixModel,
    table: &FusionTable,
    req: &MatrixElementRequest,
    settings: &QuadratureSettings,
    levels: &[u32],
) -> Vec<DefectReport> {
    levels
        .iter()
        .map(|&level| {
            let s = settings.at_level(level);
            let rule = rule_for(model, &s, std::slice::from_ref(req));
            weak_locality_report(&ElementEvaluator::new(model, &rule), table, req, level)
        })
        .collect()
}

/// Whether a sequence of relative errors never increases, counting values
/// below [`NOISE_FLOOR`] as converged.
pub fn is_monotone(errors: &[f64]) -> bool {
    errors.windows(2).all(|w| w[1] <= w[0] || w[1] <= NOISE_FLOOR)
}

fn bump(c: [f64; 2], r: f64, re: f64, im: f64) -> Bump {
    Bump::new(c, r, Complex64::new(re, im)).expect("positive radius")
}

/// Gaussian bra and ket on the edge types `{1, N − 1}` used by the built-in pairs.
pub fn edge_bra_ket(model: &SMatrixModel) -> (FockVector, FockVector) {
    let e = model.edge_types();
    let (a, b) = (e[0], *e.last().expect("nonempty"));
    let bra = FockVector::gaussian(a, Complex64::new(1.0, 0.0), 1.0, 0.3).plus(&FockVector::gaussian(
        b,
        Complex64::new(0.5, 0.2),
        0.8,
        -0.1,
    ));
    let ket = FockVector::gaussian(a, Complex64::new(0.9, -0.1), 0.7, -0.2).plus(&FockVector::gaussian(
        b,
        Complex64::new(0.6, 0.0),
        1.1,
        0.25,
    ));
    (bra, ket)
}

fn pair_specs(n: u32) -> Vec<(&'static str, TestFunction, TestFunction)> {
    let (a, b) = (1, n - 1);
    vec![
        (
            "single-types",
            TestFunction::single(a, bump([0.0, -1.0], 0.5, 1.0, 0.0)),
            TestFunction::single(b, bump([0.2, 1.1], 0.5, 1.0, 0.0)),
        ),
        (
            "swapped-types",
            TestFunction::single(b, bump([0.3, -1.4], 0.6, 1.0, 0.0)),
            TestFunction::single(a, bump([-0.1, 1.2], 0.45, 0.8, 0.0)),
        ),
        (
            "both-types",
            TestFunction::single(a, bump([-0.2, -1.1], 0.5, 1.0, 0.0)).with(b, bump([0.1, -1.3], 0.55, 0.7, 0.0)),
            TestFunction::single(a, bump([0.15, 1.2], 0.5, 0.9, 0.0)).with(b, bump([-0.3, 1.4], 0.6, 1.0, 0.0)),
        ),
        (
            "complex-amplitudes",
            TestFunction::single(a, bump([-0.4, -1.3], 0.5, 1.0, 0.5)),
            TestFunction::single(b, bump([0.5, 1.6], 0.6, 0.8, -0.3)),
        ),
        (
            "two-bumps",
            TestFunction::single(a, bump([0.0, -1.0], 0.4, 1.0, 0.0)).with(a, bump([0.6, -1.8], 0.5, -0.5, 0.2)),
            TestFunction::single(b, bump([0.3, 1.3], 0.5, 1.0, 0.0)).with(a, bump([-0.2, 1.5], 0.4, 0.6, 0.0)),
        ),
    ]
}

fn holdout_specs(n: u32) -> Vec<(&'static str, TestFunction, TestFunction)> {
    let (a, b) = (1, n - 1);
    vec![
        (
            "holdout-near",
            TestFunction::single(a, bump([0.1, -0.8], 0.35, 1.0, -0.2)),
            TestFunction::single(b, bump([0.0, 0.9], 0.4, 1.0, 0.0)),
        ),
        (
            "holdout-far",
            TestFunction::single(b, bump([-0.5, -2.0], 0.7, 0.6, 0.0)).with(a, bump([0.4, -1.6], 0.5, 0.4, 0.1)),
            TestFunction::single(a, bump([0.7, 2.1], 0.6, 1.0, 0.0)).with(b, bump([0.0, 1.2], 0.5, 0.5, 0.0)),
        ),
    ]
}

fn requests_from(
    model: &SMatrixModel,
    specs: Vec<(&'static str, TestFunction, TestFunction)>,
) -> Result<Vec<MatrixElementRequest>> {
    let (bra, ket) = edge_bra_ket(model);
    specs
        .into_iter()
        .map(|(label, f, g)| {
            MatrixElementRequest::new(
                model,
                label,
                bra.clone(),
                ket.clone(),
                f,
                g,
                Wedge::left([0.0, 0.0]),
                Wedge::right([0.0, 0.0]),
            )
        })
        .collect()
}

/// Five wedge-separated pairs with Gaussian bra and ket on `{1, N − 1}`.
pub fn default_requests(model: &SMatrixModel) -> Result<Vec<MatrixElementRequest>> {
    requests_from(model, pair_specs(model.n))
}

/// Two further pairs kept out of the η fit.
pub fn holdout_requests(model: &SMatrixModel) -> Result<Vec<MatrixElementRequest>> {
    requests_from(model, holdout_specs(model.n))
}

/// Supports poking across the wedge edges near the origin, small enough
/// that the growth of the continued transforms stays finite.
pub fn overlapping_request(model: &SMatrixModel) -> MatrixElementRequest {
    let (bra, ket) = edge_bra_ket(model);
    let (a, b) = (1, model.n - 1);
    MatrixElementRequest::unchecked(
        "control-overlap",
        bra,
        ket,
        TestFunction::single(a, bump([0.0, -0.25], 0.3, 1.0, 0.0)),
        TestFunction::single(b, bump([0.05, 0.25], 0.3, 1.0, 0.0)),
        Wedge::left([0.0, 0.0]),
        Wedge::right([0.0, 0.0]),
    )
}

/// Whether a negative-control report fails by the required margin.
pub fn control_fails(report: &DefectReport) -> bool {
    !report.complete || report.total.norm() > 10.0 * CANCELLATION_TOL * report.scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{eta_closed_form, fusion_table_for};

    #[test]
    fn validation_rejects_bad_requests() {
        let model = SMatrixModel::zn(3, 1.0).unwrap();
        let good = &default_requests(&model).unwrap()[0];
        let mut r = good.clone();
        r.f = r.f.translated([0.0, 1.0]);
        assert!(r.validate(&model).is_err());
        let mut r = good.clone();
        r.right = Wedge::right([0.0, -0.5]);
        assert!(r.validate(&model).is_err());
        assert!(overlapping_request(&model).validate(&model).is_err());
    }

    #[test]
    fn single_type_pair_cancels() {
        let model = SMatrixModel::zn(3, 1.0).unwrap();
        let table = eta_closed_form(&fusion_table_for(&model).unwrap());
        let req = &default_requests(&model).unwrap()[0];
        let rule = rule_for(&model, &QuadratureSettings::default(), std::slice::from_ref(req));
        let ev = ElementEvaluator::new(&model, &rule);
        let rep = weak_locality_report(&ev, &table, req, 1);
        assert!(rep.pass, "{rep:#?}");
        assert_eq!(ev.cross_term(&table, req).unwrap(), ZERO);
    }
}
