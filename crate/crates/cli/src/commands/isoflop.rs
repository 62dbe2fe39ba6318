//! `isoflop`: profiles and optimal-size laws, empirical and predicted.

use std::path::Path;

use ditscale::alloc::{
    empirical_nopt, exponent_bracket, predicted_nopt, slope_deviation, topt_law, AllocOptions,
    ConstraintTerm, IsoFlopProfile,
};
use ditscale::runs::{load_runs, observations, Observation};
use ditscale::{Error, Result};
use serde_json::json;

use crate::artifacts::csv_table;
use crate::commands::{resolve_surface, Ctx};
use crate::svg::{xy_plot, Series};

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn isoflop(
    ctx: &Ctx,
    runs_path: Option<&Path>,
    surface_arg: Option<&str>,
    budgets: &[f64],
    verbatim_constraint: bool,
) -> Result<()> {
    if runs_path.is_none() && surface_arg.is_none() {
        return Err(Error::Validation {
            path: String::new(),
            line: 0,
            msg: "isoflop needs --runs, --surface, or both".into(),
        });
    }
    let emitter = ctx.emitter()?;
    let mut empirical_law = None;
    let mut predicted_law = None;

    if let Some(path) = runs_path {
        let runs = load_runs(path)?;
        let obs = observations(&runs);
        let mut profiles = Vec::new();
        let mut profile_rows: Vec<Vec<String>> = Vec::new();
        for &budget in budgets {
            let members: Vec<Observation> = obs
                .iter()
                .filter(|o| (o.c / budget - 1.0).abs() <= 0.01)
                .cloned()
                .collect();
            if members.is_empty() {
                return Err(Error::Validation {
                    path: path.display().to_string(),
                    line: 0,
                    msg: format!("no observations within 1% of budget {budget:.3e}"),
                });
            }
            let profile = IsoFlopProfile::from_observations(budget, &members)?;
            for &(n, loss) in &profile.points {
                profile_rows.push(vec![fmt(budget), fmt(n), fmt(loss)]);
            }
            profiles.push(profile);
        }
        let fit = empirical_nopt(&profiles)?;
        emitter.write_text(
            "isoflop_points.csv",
            &csv_table("budget_c,n,loss", &profile_rows),
        )?;
        let raw = ditscale::units::UnitConvention::raw();
        let vertices: Vec<serde_json::Value> = profiles
            .iter()
            .map(|p| {
                json!({
                    "budget_c": p.budget_c,
                    "n_opt_empirical": p.n_opt_empirical,
                    "parabola": p.fit.to_law_json(raw, p.points.len()),
                })
            })
            .collect();
        emitter.write_json(
            "isoflop_empirical.json",
            json!({
                "law": fit.to_law_json(ditscale::units::UnitConvention::raw()),
                "profiles": vertices,
            }),
        )?;
        let series: Vec<Series> = profiles
            .iter()
            .map(|p| Series {
                label: "profile",
                points: p.points.clone(),
                line: false,
            })
            .collect();
        emitter.write_svg(
            "isoflop_points.svg",
            &xy_plot(
                "IsoFLOP profiles",
                "parameters",
                "loss",
                &series,
                true,
                false,
            ),
        )?;
        println!(
            "empirical law: N_opt = {:.6e} * C^{:.4}",
            fit.law.coef, fit.law.exponent
        );
        empirical_law = Some(fit.law);
    }

    if let Some(arg) = surface_arg {
        let surface = resolve_surface(arg)?;
        let cfg = ctx.config.compute_config();
        let opts = AllocOptions {
            width_ratio: ctx.config.width_ratio,
            term: if verbatim_constraint {
                ConstraintTerm::Verbatim
            } else {
                ConstraintTerm::Exponentiated
            },
            ..AllocOptions::default()
        };
        let alloc = predicted_nopt(&surface, budgets, &cfg, &opts)?;
        let t_law = topt_law(&alloc.law.law, alloc.q_ref)?;
        let (lo, hi) = exponent_bracket(&surface);
        let rows: Vec<Vec<String>> = alloc
            .budgets
            .iter()
            .map(|b| {
                vec![
                    fmt(b.budget_c),
                    b.n_layer_min.to_string(),
                    fmt(b.n_opt),
                    fmt(b.t_opt),
                    fmt(b.loss_min),
                ]
            })
            .collect();
        emitter.write_text(
            "isoflop_predicted.csv",
            &csv_table("budget_c,n_layer_min,n_opt,t_opt,loss_min", &rows),
        )?;
        emitter.write_json(
            "isoflop_predicted.json",
            json!({
                "law": alloc.law.to_law_json(ditscale::units::UnitConvention::raw()),
                "topt_law": { "coef": t_law.coef, "exponent": t_law.exponent },
                "q_ref": alloc.q_ref,
                "reference_shape": alloc.reference_shape,
                "exponent_bracket": [lo, hi],
                "budgets": alloc.budgets,
            }),
        )?;
        let pts: Vec<(f64, f64)> = alloc
            .budgets
            .iter()
            .map(|b| (b.budget_c, b.n_opt))
            .collect();
        let curve: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(c, _)| (c, alloc.law.law.eval(c)))
            .collect();
        emitter.write_svg(
            "isoflop_predicted.svg",
            &xy_plot(
                "predicted optimal size vs budget",
                "compute (FLOPs)",
                "parameters",
                &[
                    Series {
                        label: "vertices",
                        points: pts,
                        line: false,
                    },
                    Series {
                        label: "power-law fit",
                        points: curve,
                        line: true,
                    },
                ],
                true,
                true,
            ),
        )?;
        println!(
            "predicted law: N_opt = {:.6e} * C^{:.4} (bracket {:.4}..{:.4})",
            alloc.law.law.coef, alloc.law.law.exponent, lo, hi
        );
        predicted_law = Some(alloc.law.law);
    }

    if let (Some(emp), Some(pred)) = (empirical_law, predicted_law) {
        let (abs_err, rel_err) = slope_deviation(&emp, &pred)?;
        emitter.write_json(
            "isoflop_comparison.json",
            json!({
                "empirical": { "coef": emp.coef, "exponent": emp.exponent },
                "predicted": { "coef": pred.coef, "exponent": pred.exponent },
                "slope_abs_err": abs_err,
                "slope_rel_err": rel_err,
            }),
        )?;
        println!(
            "slope deviation: {:.4} absolute, {:.2}%",
            abs_err,
            rel_err * 100.0
        );
    }
    Ok(())
}
