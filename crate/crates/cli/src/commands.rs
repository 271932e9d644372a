use std::collections::BTreeSet;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use znwedge::smatrix::{check_bootstrap, real_grid, strip_grid, BootstrapReport, CrossingReport, UnitarityReport};
use znwedge::weaklocality::{
    control_fails, edge_bra_ket, holdout_requests, is_monotone, overlapping_request, rule_for,
};
use znwedge::{
    calibrate_eta, check_crossing, check_unitarity, default_requests, eta_closed_form, fusion_table_for,
    onshell_transform, refinement_study, residue_at, weak_locality_report, DefectReport, ElementEvaluator, FusionTable,
    MatrixElementRequest, SMatrixModel, Sign, Wedge,
};

use crate::config::{EtaMode, RunConfig};
use crate::output::{num, re_im, write_csv, write_json};
use crate::{Common, Outcome};

const TRANSFORM_POINTS: usize = 41;
const TRANSFORM_HALF_WIDTH: f64 = 4.0;

fn model(cfg: &RunConfig, common: &Common) -> Result<SMatrixModel> {
    let m = SMatrixModel::zn(cfg.n, cfg.base_mass)?;
    Ok(match common.perturb_s {
        Some(eps) => m.perturbed(eps),
        None => m,
    })
}

/// The fusion table with couplings fixed by the configuration and flags.
fn coupled_table(cfg: &RunConfig, common: &Common, model: &SMatrixModel) -> Result<FusionTable> {
    let bare = fusion_table_for(model)?;
    if bare.is_empty() || common.zero_eta {
        return Ok(bare.without_eta());
    }
    Ok(match cfg.eta {
        EtaMode::ClosedForm => eta_closed_form(&bare),
        EtaMode::Calibrate => {
            let reqs = default_requests(model)?;
            let holdout = holdout_requests(model)?;
            let rule = rule_for(model, &cfg.quadrature, &reqs);
            let ev = ElementEvaluator::new(model, &rule);
            calibrate_eta(&bare, &ev, &reqs, &holdout)?
        }
    })
}

#[derive(Serialize)]
struct AxiomSummary {
    n: u32,
    pass: bool,
    unitarity: Vec<UnitarityReport>,
    crossing: Vec<CrossingReport>,
    bootstrap: Vec<BootstrapReport>,
}

pub fn axioms(cfg: &RunConfig, common: &Common) -> Result<Outcome> {
    let model = model(cfg, common)?;
    let real = real_grid(cfg.real_points, -cfg.real_half_width, cfg.real_half_width);
    let strip = strip_grid(cfg.strip_points, cfg.strip_points, cfg.strip_half_width);
    let unitarity: Vec<_> = model.components().map(|c| check_unitarity(c, &real)).collect();
    let edge = model.edge_types();
    let mut crossing = Vec::new();
    for &a in &edge {
        for &b in &edge {
            crossing.push(check_crossing(&model, a, b, &strip)?);
        }
    }
    let bootstrap = check_bootstrap(&model, &strip)?;
    let pass = unitarity.iter().all(|r| r.pass) && crossing.iter().all(|r| r.pass) && bootstrap.iter().all(|r| r.pass);

    let n = cfg.n.to_string();
    let mut rows = Vec::new();
    for r in &unitarity {
        let worst = r.max_product_defect.max(r.max_modulus_defect);
        rows.push(vec![
            "unitarity".into(),
            n.clone(),
            r.alpha.to_string(),
            r.beta.to_string(),
            String::new(),
            num(worst),
            r.points.to_string(),
            r.pass.to_string(),
        ]);
    }
    for r in &crossing {
        rows.push(vec![
            "crossing".into(),
            n.clone(),
            r.alpha.to_string(),
            r.beta.to_string(),
            String::new(),
            num(r.max_defect),
            r.points.to_string(),
            r.pass.to_string(),
        ]);
    }
    for r in &bootstrap {
        let worst = r.right_defect.max(r.left_defect);
        rows.push(vec![
            "bootstrap".into(),
            n.clone(),
            r.alpha.to_string(),
            r.beta.to_string(),
            r.delta.to_string(),
            num(worst),
            strip.len().to_string(),
            r.pass.to_string(),
        ]);
    }
    let dir = &cfg.output_dir;
    write_csv(
        &dir.join("axioms.csv"),
        &["check", "N", "alpha", "beta", "delta", "max_defect", "points", "pass"],
        &rows,
    )?;

    let mut poles = Vec::new();
    for c in model.components() {
        for p in c.open_strip_poles() {
            // Residues are only reported for simple poles.
            let [rr, ri] = match p.order {
                1 => re_im(residue_at(c, p.location)?),
                _ => [String::new(), String::new()],
            };
            poles.push(vec![
                cfg.n.to_string(),
                c.alpha.to_string(),
                c.beta.to_string(),
                num(p.location.re),
                num(p.location.im),
                p.channel.to_string(),
                rr,
                ri,
                p.order.to_string(),
            ]);
        }
    }
    write_csv(
        &dir.join("poles.csv"),
        &[
            "N",
            "alpha",
            "beta",
            "pole_re",
            "pole_im",
            "channel",
            "residue_re",
            "residue_im",
            "order",
        ],
        &poles,
    )?;
    write_json(
        &dir.join("axioms.json"),
        &AxiomSummary {
            n: cfg.n,
            pass,
            unitarity,
            crossing,
            bootstrap,
        },
    )?;
    eprintln!("axioms N={}: {}", cfg.n, if pass { "pass" } else { "FAIL" });
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

pub fn fusion(cfg: &RunConfig, common: &Common) -> Result<Outcome> {
    let model = model(cfg, common)?;
    let table = coupled_table(cfg, common, &model)?;
    let rows: Vec<Vec<String>> = table
        .processes()
        .map(|p| {
            let [rr, ri] = re_im(p.residue);
            let [er, ei] = re_im(p.eta);
            vec![
                cfg.n.to_string(),
                p.alpha.to_string(),
                p.beta.to_string(),
                p.gamma.to_string(),
                num(p.angles.theta_ab),
                num(p.angles.theta_ba),
                num(p.s_pole.im),
                rr,
                ri,
                er,
                ei,
            ]
        })
        .collect();
    let dir = &cfg.output_dir;
    write_csv(
        &dir.join("fusion.csv"),
        &[
            "N",
            "alpha",
            "beta",
            "gamma",
            "theta_ab",
            "theta_ba",
            "pole_im",
            "residue_re",
            "residue_im",
            "eta_re",
            "eta_im",
        ],
        &rows,
    )?;
    write_json(
        &dir.join("fusion.json"),
        &json!({ "n": table.n, "fit": table.fit, "processes": table.processes().collect::<Vec<_>>() }),
    )?;
    eprintln!("fusion N={}: {} processes", cfg.n, table.len());
    Ok(Outcome::Pass)
}

fn requests(cfg: &RunConfig, model: &SMatrixModel) -> Result<Vec<MatrixElementRequest>> {
    let mut out = if cfg.default_pairs {
        default_requests(model)?
    } else {
        Vec::new()
    };
    let (edge_bra, edge_ket) = edge_bra_ket(model);
    let bra = cfg.bra.clone().unwrap_or(edge_bra);
    let ket = cfg.ket.clone().unwrap_or(edge_ket);
    for p in &cfg.pairs {
        let r = MatrixElementRequest::new(
            model,
            p.label.clone(),
            bra.clone(),
            ket.clone(),
            p.f.clone(),
            p.g.clone(),
            Wedge::left(p.left),
            Wedge::right(p.right),
        )
        .with_context(|| format!("pair {}", p.label))?;
        out.push(r);
    }
    let mut seen = BTreeSet::new();
    for r in &out {
        if !seen.insert(r.label.clone()) {
            bail!("duplicate pair label {}", r.label);
        }
    }
    Ok(out)
}

/// On-shell transforms of every configured test function on a real rapidity grid.
fn transform_rows(model: &SMatrixModel, reqs: &[MatrixElementRequest]) -> Vec<Vec<String>> {
    let grid = real_grid(TRANSFORM_POINTS, -TRANSFORM_HALF_WIDTH, TRANSFORM_HALF_WIDTH);
    let mut rows = Vec::new();
    for req in reqs {
        for (name, f) in [("f", &req.f), ("g", &req.g)] {
            for species in f.species() {
                for (sign, tag) in [(Sign::Plus, "+"), (Sign::Minus, "-")] {
                    for &theta in &grid {
                        let v = onshell_transform(f, species, model.mass(species), sign, Complex64::new(theta, 0.0));
                        let [re, im] = re_im(v);
                        rows.push(vec![
                            req.label.clone(),
                            name.into(),
                            species.to_string(),
                            tag.into(),
                            num(theta),
                            re,
                            im,
                        ]);
                    }
                }
            }
        }
    }
    rows
}

fn summary_row(r: &DefectReport, monotone: bool, pass: bool) -> Vec<String> {
    let mut row = vec![r.label.clone(), r.level.to_string()];
    for z in [r.phi_commutator, r.chi_commutator, r.residue_formula, r.total] {
        row.extend(re_im(z));
    }
    row.extend([
        num(r.scale),
        num(r.relative_total()),
        num(r.relative_gap()),
        monotone.to_string(),
        r.complete.to_string(),
        pass.to_string(),
    ]);
    row
}

pub fn weak_commutator(cfg: &RunConfig, common: &Common) -> Result<Outcome> {
    let model = model(cfg, common)?;
    let reqs = requests(cfg, &model)?;
    let table = coupled_table(cfg, common, &model)?;
    let levels = cfg.levels();
    let level = cfg.quadrature.level;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir.join("reports"))?;

    let (mut summary, mut plot, mut verdicts) = (Vec::new(), Vec::new(), Vec::new());
    let (mut all_pass, mut all_complete) = (true, true);
    for req in &reqs {
        let reports = refinement_study(&model, &table, req, &cfg.quadrature, &levels);
        let totals: Vec<f64> = reports.iter().map(DefectReport::relative_total).collect();
        let gaps: Vec<f64> = reports.iter().map(DefectReport::relative_gap).collect();
        let monotone = is_monotone(&totals) && is_monotone(&gaps);
        let complete = reports.iter().all(|r| r.complete);
        let verdict = &reports[level as usize];
        let pass = complete && monotone && verdict.pass;
        all_pass &= pass;
        all_complete &= complete;
        eprintln!(
            "{}: total {:.2e}, gap {:.2e}, {}",
            req.label,
            verdict.relative_total(),
            verdict.relative_gap(),
            if pass { "pass" } else { "FAIL" }
        );
        summary.push(summary_row(verdict, monotone, pass));
        for r in &reports {
            plot.push(vec![
                r.label.clone(),
                r.level.to_string(),
                num(r.relative_total()),
                num(r.relative_gap()),
            ]);
        }
        write_json(&dir.join("reports").join(format!("{}.json", req.label)), &reports)?;
        verdicts.push(json!({ "label": req.label, "monotone": monotone, "complete": complete, "pass": pass }));
    }

    let overlap = overlapping_request(&model);
    let rule = rule_for(&model, &cfg.quadrature, std::slice::from_ref(&overlap));
    let overlap_report = weak_locality_report(&ElementEvaluator::new(&model, &rule), &table, &overlap, level);
    let first = default_requests(&model)?.swap_remove(0);
    let rule = rule_for(&model, &cfg.quadrature, std::slice::from_ref(&first));
    let mut zero_eta = weak_locality_report(
        &ElementEvaluator::new(&model, &rule),
        &table.without_eta(),
        &first,
        level,
    );
    zero_eta.label = "control-zero-eta".into();
    let controls: Vec<Vec<String>> = [&overlap_report, &zero_eta]
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                r.level.to_string(),
                num(r.relative_total()),
                r.complete.to_string(),
                control_fails(r).to_string(),
            ]
        })
        .collect();
    let controls_fail = control_fails(&overlap_report) && control_fails(&zero_eta);

    write_csv(
        &dir.join("summary.csv"),
        &[
            "label",
            "level",
            "phi_re",
            "phi_im",
            "chi_re",
            "chi_im",
            "residue_re",
            "residue_im",
            "total_re",
            "total_im",
            "scale",
            "rel_total",
            "rel_gap",
            "monotone",
            "complete",
            "pass",
        ],
        &summary,
    )?;
    write_csv(
        &dir.join("transforms.csv"),
        &["label", "function", "species", "sign", "theta", "value_re", "value_im"],
        &transform_rows(&model, &reqs),
    )?;
    write_csv(
        &dir.join("plot.csv"),
        &["label", "level", "rel_total", "rel_gap"],
        &plot,
    )?;
    write_csv(
        &dir.join("controls.csv"),
        &["label", "level", "rel_total", "complete", "fails"],
        &controls,
    )?;

    let outcome = if !all_complete {
        Outcome::Incomplete
    } else if all_pass && controls_fail {
        Outcome::Pass
    } else {
        Outcome::Fail
    };
    write_json(
        &dir.join("weak.json"),
        &json!({
            "n": cfg.n,
            "level": level,
            "levels": levels,
            "fit": table.fit,
            "pairs": verdicts,
            "controls": [overlap_report, zero_eta],
            "controls_fail": controls_fail,
            "pass": outcome == Outcome::Pass,
        }),
    )?;
    Ok(outcome)
}
