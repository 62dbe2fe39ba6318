//! `fit-hparams` and `fit-loss`: run files in, fitted laws out.

use std::collections::HashMap;
use std::path::Path;

use ditscale::powerlaw::fit_powerlaw2;
use ditscale::runs::{load_runs, observations, select_near_optimal, to_units, Observation};
use ditscale::surface::{fit_loss_surface, FitOptions};
use ditscale::{Error, Result};
use serde_json::json;

use crate::artifacts::csv_table;
use crate::commands::{Ctx, Format};
use crate::svg::{xy_plot, Series};

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Selected observations in fitting units, the substrate both fitters use.
fn load_selected(ctx: &Ctx, runs_path: &Path, rel_tol: f64) -> Result<Vec<Observation>> {
    let runs = load_runs(runs_path)?;
    let obs = observations(&runs);
    let scaled: Vec<Observation> = obs.iter().map(|o| to_units(o, &ctx.config.units)).collect();
    Ok(select_near_optimal(&scaled, rel_tol))
}

fn observation_table(kept: &[Observation]) -> Vec<Vec<String>> {
    kept.iter()
        .map(|o| {
            vec![
                fmt(o.t),
                fmt(o.n),
                fmt(o.b),
                fmt(o.eta),
                fmt(o.loss),
                fmt(o.c),
            ]
        })
        .collect()
}

fn predicted_observed_plot(
    emitter: &crate::artifacts::Emitter,
    stem: &str,
    title: &str,
    pairs: &[(f64, f64)],
) -> Result<()> {
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let identity: Vec<(f64, f64)> = sorted.iter().map(|&(p, _)| (p, p)).collect();
    let svg = xy_plot(
        title,
        "predicted",
        "observed",
        &[
            Series {
                label: "observations",
                points: sorted.clone(),
                line: false,
            },
            Series {
                label: "identity",
                points: identity,
                line: true,
            },
        ],
        true,
        true,
    );
    emitter.write_svg(&format!("{stem}.svg"), &svg)?;
    let rows: Vec<Vec<String>> = sorted.iter().map(|&(p, o)| vec![fmt(p), fmt(o)]).collect();
    emitter.write_text(
        &format!("{stem}.csv"),
        &csv_table("predicted,observed", &rows),
    )?;
    Ok(())
}

pub fn fit_hparams(ctx: &Ctx, runs_path: &Path, rel_tol: f64) -> Result<()> {
    let kept = load_selected(ctx, runs_path, rel_tol)?;
    if kept.len() < 3 {
        return Err(Error::Validation {
            path: runs_path.display().to_string(),
            line: 0,
            msg: format!(
                "only {} observations survive selection; need >= 3",
                kept.len()
            ),
        });
    }
    let b_pts: Vec<(f64, f64, f64)> = kept.iter().map(|o| (o.t, o.n, o.b)).collect();
    let e_pts: Vec<(f64, f64, f64)> = kept.iter().map(|o| (o.t, o.n, o.eta)).collect();
    let fit_b = fit_powerlaw2(&b_pts, ctx.config.units)?;
    let fit_e = fit_powerlaw2(&e_pts, ctx.config.units)?;

    let emitter = ctx.emitter()?;
    emitter.write_json(
        "hparams_bopt.json",
        json!({ "law": fit_b.to_law_json(), "rel_tol": rel_tol }),
    )?;
    emitter.write_json(
        "hparams_eta.json",
        json!({ "law": fit_e.to_law_json(), "rel_tol": rel_tol }),
    )?;

    match ctx.format {
        Format::Csv => {
            emitter.write_text(
                "hparams_observations.csv",
                &csv_table("t,n,b,eta,loss,c", &observation_table(&kept)),
            )?;
        }
        Format::Json => {
            emitter.write_json("hparams_observations.json", json!({ "observations": kept }))?;
        }
    }

    let b_pairs: Vec<(f64, f64)> = kept
        .iter()
        .map(|o| (fit_b.law.eval(o.t, o.n), o.b))
        .collect();
    predicted_observed_plot(
        &emitter,
        "hparams_bopt_fit",
        "optimal batch size fit",
        &b_pairs,
    )?;
    let e_pairs: Vec<(f64, f64)> = kept
        .iter()
        .map(|o| (fit_e.law.eval(o.t, o.n), o.eta))
        .collect();
    predicted_observed_plot(
        &emitter,
        "hparams_eta_fit",
        "optimal learning rate fit",
        &e_pairs,
    )?;

    println!(
        "batch law: {:.6} * T^{:.4} * N^{:.4} (r2 {:.6})",
        fit_b.law.alpha, fit_b.law.beta, fit_b.law.gamma, fit_b.r2
    );
    println!(
        "lr law:    {:.6e} * T^{:.4} * N^{:.4} (r2 {:.6})",
        fit_e.law.alpha, fit_e.law.beta, fit_e.law.gamma, fit_e.r2
    );
    Ok(())
}

pub fn fit_loss(ctx: &Ctx, runs_path: &Path, rel_tol: f64) -> Result<()> {
    let kept = load_selected(ctx, runs_path, rel_tol)?;
    // best observed loss per (T, N) cell, first-appearance order
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    for o in &kept {
        let key = (o.t.to_bits(), o.n.to_bits());
        match index.get(&key) {
            None => {
                index.insert(key, points.len());
                points.push((o.t, o.n, o.loss));
            }
            Some(&i) => {
                if o.loss < points[i].2 {
                    points[i].2 = o.loss;
                }
            }
        }
    }

    let opts = FitOptions {
        units: ctx.config.units,
        ..FitOptions::default()
    };
    let fit = fit_loss_surface(&points, &opts)?;

    let emitter = ctx.emitter()?;
    emitter.write_json("loss_surface.json", json!({ "law": fit.to_law_json() }))?;

    let rows: Vec<Vec<String>> = points
        .iter()
        .zip(&fit.residuals)
        .map(|(&(t, n, loss), &r)| vec![fmt(t), fmt(n), fmt(loss), fmt(loss - r), fmt(r)])
        .collect();
    emitter.write_text(
        "loss_residuals.csv",
        &csv_table("t,n,observed,fitted,residual", &rows),
    )?;
    let pairs: Vec<(f64, f64)> = points
        .iter()
        .zip(&fit.residuals)
        .map(|(&(_, _, loss), &r)| (loss - r, loss))
        .collect();
    predicted_observed_plot(&emitter, "loss_surface_fit", "loss surface fit", &pairs)?;

    println!(
        "surface: T_c {:.6} a_T {:.4} N_c {:.6} a_N {:.4} L_inf {:.6} (mse {:.4e})",
        fit.surface.t_c,
        fit.surface.alpha_t,
        fit.surface.n_c,
        fit.surface.alpha_n,
        fit.surface.l_inf,
        fit.mse
    );
    for note in &fit.unconstrained {
        println!("note: {note}");
    }
    Ok(())
}
