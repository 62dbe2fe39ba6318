//! `simulate`: the SGD oracle behind a JSON spec file.
//!
//! Three modes: a single trajectory, a batch-size/learning-rate sweep at a
//! fixed token budget, and synthetic run generation from known laws. Sweep
//! and synthetic outputs use the run-store CSV schema so they feed the
//! fitters without adapters.

use std::fs;
use std::path::Path;

use ditscale::compute::{ComputeConfig, ModelShape};
use ditscale::powerlaw::PowerLaw2;
use ditscale::runs::{observations_to_runs, runs_to_csv_string};
use ditscale::sgd::{run_sgd, sweep_hyperparams, synth_runs, QuadraticObjective, SgdConfig};
use ditscale::surface::LossSurface;
use ditscale::units::UnitConvention;
use ditscale::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

use crate::artifacts::csv_table;
use crate::commands::Ctx;
use crate::svg::{xy_plot, Series};

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum SimSpec {
    Trajectory {
        objective: ObjectiveSpec,
        eta: f64,
        batch: u64,
        steps: u64,
    },
    Sweep {
        objective: ObjectiveSpec,
        token_budget: u64,
        b_grid: Vec<u64>,
        eta_grid: Vec<f64>,
    },
    Synth {
        surface: SurfaceRef,
        law_b: LawRef,
        law_eta: LawRef,
        /// Parameter counts, raw.
        n_list: Vec<f64>,
        /// Token counts, raw.
        t_list: Vec<f64>,
        noise_sigma: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveSpec {
    h_eigs: Vec<f64>,
    sigma_eigs: Vec<f64>,
    #[serde(default)]
    theta0: Option<Vec<f64>>,
    #[serde(default)]
    theta0_norm: Option<f64>,
    #[serde(default)]
    l_star: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SurfaceRef {
    Preset(String),
    Inline {
        t_c: f64,
        alpha_t: f64,
        n_c: f64,
        alpha_n: f64,
        l_inf: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LawRef {
    Preset(String),
    Inline { alpha: f64, beta: f64, gamma: f64 },
}

impl ObjectiveSpec {
    /// Builds the objective; the orthogonal bases and any random starting
    /// point derive from the invocation seed.
    fn build(&self, seed: u64) -> Result<QuadraticObjective> {
        let dim = self.h_eigs.len();
        let theta0 = match (&self.theta0, self.theta0_norm) {
            (Some(t), _) => t.clone(),
            (None, norm) => {
                let norm = norm.unwrap_or(1.0);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(2);
                let q = ditscale_random_direction(dim, &mut rng);
                q.into_iter().map(|v| v * norm).collect()
            }
        };
        QuadraticObjective::from_spectra(&self.h_eigs, &self.sigma_eigs, theta0, self.l_star, seed)
    }
}

/// Unit vector from Gaussian draws.
fn ditscale_random_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    use rand::Rng;
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn resolve_surface_ref(s: &SurfaceRef) -> Result<LossSurface> {
    match s {
        SurfaceRef::Preset(name) => crate::commands::resolve_surface(name),
        SurfaceRef::Inline {
            t_c,
            alpha_t,
            n_c,
            alpha_n,
            l_inf,
        } => LossSurface::new(
            *t_c,
            *alpha_t,
            *n_c,
            *alpha_n,
            *l_inf,
            UnitConvention::billions(),
        ),
    }
}

fn resolve_law_ref(l: &LawRef, which: &str) -> Result<PowerLaw2> {
    match l {
        LawRef::Preset(name) => match name.as_str() {
            "video-samples" => Ok(ditscale::presets::bopt_video_samples()),
            "video-tokens" => Ok(ditscale::presets::bopt_video_tokens()),
            "image-tokens" => Ok(ditscale::presets::bopt_image_tokens()),
            "video" => Ok(ditscale::presets::eta_opt_video()),
            "image" => Ok(ditscale::presets::eta_opt_image()),
            other => Err(Error::Validation {
                path: String::new(),
                line: 0,
                msg: format!("unknown {which} preset '{other}'"),
            }),
        },
        LawRef::Inline { alpha, beta, gamma } => {
            PowerLaw2::new(*alpha, *beta, *gamma, UnitConvention::billions())
        }
    }
}

pub fn simulate(ctx: &Ctx, spec_path: &Path) -> Result<()> {
    let text = fs::read_to_string(spec_path)?;
    let spec: SimSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: spec_path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    let emitter = ctx.emitter()?;

    match spec {
        SimSpec::Trajectory {
            objective,
            eta,
            batch,
            steps,
        } => {
            let obj = objective.build(ctx.seed)?;
            let traj = run_sgd(
                &obj,
                &SgdConfig {
                    eta,
                    batch,
                    steps,
                    seed: ctx.seed,
                },
            )?;
            let rows: Vec<Vec<String>> = traj
                .samples
                .iter()
                .map(|s| {
                    vec![
                        s.step.to_string(),
                        format!("{}", s.loss),
                        format!("{}", s.grad_norm_sq),
                    ]
                })
                .collect();
            emitter.write_text(
                "trajectory.csv",
                &csv_table("step,loss,grad_norm_sq", &rows),
            )?;
            let pts: Vec<(f64, f64)> = traj
                .samples
                .iter()
                .map(|s| (s.step as f64 + 1.0, s.loss))
                .collect();
            emitter.write_svg(
                "trajectory.svg",
                &xy_plot(
                    "SGD trajectory",
                    "step",
                    "loss",
                    &[Series {
                        label: "loss",
                        points: pts,
                        line: true,
                    }],
                    false,
                    true,
                ),
            )?;
            if traj.lr_exceeds_smoothness {
                println!("warning: learning rate exceeds 1/lambda_max; updates may diverge");
            }
            println!("final loss {:.6e} after {steps} steps", traj.final_loss());
        }
        SimSpec::Sweep {
            objective,
            token_budget,
            b_grid,
            eta_grid,
        } => {
            let obj = objective.build(ctx.seed)?;
            let grid = sweep_hyperparams(&obj, token_budget, &b_grid, &eta_grid, ctx.seed)?;
            let mut rows = Vec::new();
            for (bi, &b) in grid.b_grid.iter().enumerate() {
                for (ei, &e) in grid.eta_grid.iter().enumerate() {
                    rows.push(vec![
                        b.to_string(),
                        format!("{e}"),
                        grid.steps[bi].to_string(),
                        format!("{}", grid.cell(bi, ei)),
                    ]);
                }
            }
            emitter.write_text(
                "sweep_grid.csv",
                &csv_table("batch,eta,steps,final_loss", &rows),
            )?;
            let shape = ModelShape::from_layers(1, ctx.config.width_ratio)?;
            let cfg = ComputeConfig::new(1, 0)?;
            let runs = grid.to_training_runs(shape, cfg)?;
            emitter.write_text("sweep_runs.csv", &runs_to_csv_string(&runs))?;
            emitter.write_json(
                "sweep_summary.json",
                json!({
                    "token_budget": token_budget,
                    "b_grid": grid.b_grid,
                    "eta_grid": grid.eta_grid,
                    "final_loss": grid.final_loss,
                }),
            )?;
            println!(
                "swept {} cells at token budget {token_budget}",
                grid.final_loss.len()
            );
        }
        SimSpec::Synth {
            surface,
            law_b,
            law_eta,
            n_list,
            t_list,
            noise_sigma,
        } => {
            let surface = resolve_surface_ref(&surface)?;
            let law_b = resolve_law_ref(&law_b, "batch law")?;
            let law_eta = resolve_law_ref(&law_eta, "learning-rate law")?;
            let cfg = ctx.config.compute_config();
            let obs = synth_runs(
                &law_b,
                &law_eta,
                &surface,
                &n_list,
                &t_list,
                &cfg,
                ctx.config.width_ratio,
                noise_sigma,
                ctx.seed,
            )?;
            let runs = observations_to_runs(&obs, ctx.config.width_ratio)?;
            emitter.write_text("synth_runs.csv", &runs_to_csv_string(&runs))?;
            println!(
                "generated {} observations over a {}x{} grid",
                obs.len(),
                n_list.len(),
                t_list.len()
            );
        }
    }
    Ok(())
}
