//! `plan`: a complete training configuration for a compute budget.

use ditscale::alloc::{predicted_nopt, AllocOptions};
use ditscale::compute::{compute_per_token, layers_at_least, ModelShape};
use ditscale::presets;
use ditscale::units::BatchUnit;
use ditscale::Result;
use serde_json::json;

use crate::artifacts::csv_table;
use crate::commands::{Ctx, Format};
use crate::config::Preset;

pub fn plan(ctx: &Ctx, budget: f64) -> Result<()> {
    let cfg = ctx.config.compute_config();

    // optimal size: the published empirical law for video; for image the
    // constrained minimum of the published image surface (no allocation
    // law was published for that family)
    let (n_opt, n_opt_source, surface, law_b, law_eta) = match ctx.config.preset {
        Preset::Video => (
            presets::nopt_empirical_video().eval(budget),
            "empirical-law",
            presets::surface_video_optimal(),
            presets::bopt_video_samples(),
            presets::eta_opt_video(),
        ),
        Preset::Image => {
            let opts = AllocOptions {
                width_ratio: ctx.config.width_ratio,
                ..AllocOptions::default()
            };
            // bracket the requested budget so the fitted law is local
            let budgets = [budget / 2.0, budget, budget * 2.0];
            let alloc = predicted_nopt(&presets::surface_image(), &budgets, &cfg, &opts)?;
            (
                alloc.budgets[1].n_opt,
                "surface-minimum",
                presets::surface_image(),
                presets::bopt_image_tokens(),
                presets::eta_opt_image(),
            )
        }
    };

    // the realized shape is the smallest depth meeting the predicted size
    let n_layer = layers_at_least(n_opt, ctx.config.width_ratio)?;
    let shape = ModelShape::from_layers(n_layer, ctx.config.width_ratio)?;
    let params = shape.params() as f64;
    let tokens = budget / compute_per_token(&shape, &cfg);

    let t_u = tokens / ctx.config.units.token_unit;
    let n_u = params / ctx.config.units.param_unit;
    let batch = law_b.eval(t_u, n_u);
    let (batch_samples, batch_tokens) = match law_b.units.batch_unit {
        BatchUnit::Samples => (batch, batch * cfg.tokens_per_sample as f64),
        BatchUnit::Tokens => (batch / cfg.tokens_per_sample as f64, batch),
    };
    let eta = law_eta.eval(t_u, n_u);
    let predicted_loss = surface.eval(
        tokens / surface.units.token_unit,
        params / surface.units.param_unit,
    )?;

    let reference = match ctx.config.preset {
        Preset::Video => {
            let r = presets::PLAN_REFERENCE;
            json!({
                "budget_c": presets::PLAN_BUDGET,
                "batch_samples": r.batch_samples,
                "learning_rate": r.learning_rate,
                "n_opt_billions": r.n_opt_billions,
                "n_layer": r.n_layer,
                "params": r.params,
            })
        }
        Preset::Image => serde_json::Value::Null,
    };

    let emitter = ctx.emitter()?;
    emitter.write_json(
        "plan.json",
        json!({
            "budget_c": budget,
            "n_opt": n_opt,
            "n_opt_source": n_opt_source,
            "n_layer": shape.n_layer,
            "d": shape.d,
            "params": shape.params(),
            "tokens": tokens,
            "batch_samples": batch_samples,
            "batch_tokens": batch_tokens,
            "learning_rate": eta,
            "predicted_loss": predicted_loss,
            "published_plan": reference,
        }),
    )?;
    if ctx.format == Format::Csv {
        let rows = vec![
            vec!["budget_c".into(), format!("{budget}")],
            vec!["n_opt".into(), format!("{n_opt}")],
            vec!["n_layer".into(), shape.n_layer.to_string()],
            vec!["params".into(), shape.params().to_string()],
            vec!["tokens".into(), format!("{tokens}")],
            vec!["batch_samples".into(), format!("{batch_samples}")],
            vec!["learning_rate".into(), format!("{eta}")],
            vec!["predicted_loss".into(), format!("{predicted_loss}")],
        ];
        emitter.write_text("plan.csv", &csv_table("field,value", &rows))?;
    }

    println!("budget:        {budget:.4e} FLOPs");
    println!(
        "optimal size:  {:.4e} params ({:.4}B, {n_opt_source})",
        n_opt,
        n_opt / 1e9
    );
    println!(
        "shape:         {} layers, width {}, {:.4e} params",
        shape.n_layer,
        shape.d,
        shape.params() as f64
    );
    println!("tokens:        {tokens:.4e} ({:.2}B)", tokens / 1e9);
    println!("batch:         {batch_samples:.1} samples ({batch_tokens:.4e} tokens)");
    println!("learning rate: {eta:.4e}");
    println!("loss estimate: {predicted_loss:.4}");
    if ctx.config.preset == Preset::Video {
        let r = presets::PLAN_REFERENCE;
        println!(
            "published plan at {:.3e}: batch {}, lr {:.1e}, {}-layer model ({} params)",
            presets::PLAN_BUDGET,
            r.batch_samples,
            r.learning_rate,
            r.n_layer,
            r.params
        );
    }
    Ok(())
}
