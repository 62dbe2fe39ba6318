//! Parameter and FLOP accounting for the Cross-DiT architecture family.
//!
//! Shapes scale proportionally: width `d = width_ratio * n_layer` and one
//! attention head per layer. Non-embedding parameters total
//! `16 * n_layer * d^2`, and the training cost per token is
//! `C_token = (3/4) * N * (7 + n_ctx / d)` (three times the forward pass).
//! Parameter counts use exact integer arithmetic; FLOPs are `f64`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A Cross-DiT shape under proportional scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    /// Transformer depth.
    pub n_layer: u32,
    /// Model width, `width_ratio * n_layer`.
    pub d: u32,
    /// Attention heads, equal to `n_layer`.
    pub n_head: u32,
    /// Width-to-depth ratio (default 128).
    pub width_ratio: u32,
}

impl ModelShape {
    /// Builds the proportionally scaled shape for a given depth.
    pub fn from_layers(n_layer: u32, width_ratio: u32) -> Result<Self> {
        if n_layer == 0 || width_ratio == 0 {
            return Err(Error::domain("n_layer and width_ratio must be >= 1"));
        }
        let d = width_ratio
            .checked_mul(n_layer)
            .ok_or_else(|| Error::domain("width overflows u32"))?;
        Ok(ModelShape {
            n_layer,
            d,
            n_head: n_layer,
            width_ratio,
        })
    }

    /// Non-embedding parameter count `16 * n_layer * d^2`, exact.
    pub fn params(&self) -> u64 {
        16 * self.n_layer as u64 * (self.d as u64) * (self.d as u64)
    }
}

/// Context configuration entering the FLOP accounting.
///
/// `n_ctx` is the latent context length (`f * h * w` in patch units) and is
/// deliberately a required config value rather than a constant: every
/// context-dependent result in this crate must stay reproducible if the
/// value is corrected. `tokens_per_sample` converts sample batches to token
/// batches and defaults to `n_ctx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComputeConfig {
    pub n_ctx: u32,
    /// Text-condition token count; only enters the itemized FLOP table.
    pub n_text: u32,
    pub tokens_per_sample: u32,
}

impl ComputeConfig {
    pub fn new(n_ctx: u32, n_text: u32) -> Result<Self> {
        if n_ctx == 0 {
            return Err(Error::domain("n_ctx must be >= 1"));
        }
        Ok(ComputeConfig {
            n_ctx,
            n_text,
            tokens_per_sample: n_ctx,
        })
    }
}

impl Default for ComputeConfig {
    fn default() -> Self {
        ComputeConfig {
            n_ctx: 1280,
            n_text: 0,
            tokens_per_sample: 1280,
        }
    }
}

/// `16 * n_layer * (width_ratio * n_layer)^2`, exact integer arithmetic.
pub fn params_from_layers(n_layer: u32, width_ratio: u32) -> Result<u64> {
    let shape = ModelShape::from_layers(n_layer, width_ratio)?;
    let d = shape.d as u64;
    16u64
        .checked_mul(n_layer as u64)
        .and_then(|v| v.checked_mul(d))
        .and_then(|v| v.checked_mul(d))
        .ok_or_else(|| Error::domain("parameter count overflows u64"))
}

/// Depth whose parameter count is closest to `n_target` in log space.
///
/// Ties break toward the smaller layer count. Always returns at least one
/// layer.
pub fn layers_for_params(n_target: f64, width_ratio: u32) -> Result<u32> {
    if !(n_target > 0.0) || width_ratio == 0 {
        return Err(Error::domain("target parameter count must be positive"));
    }
    // N(n) = 16 * wr^2 * n^3 is monotone, so only the two depths bracketing
    // the real-valued solution are candidates.
    let wr = width_ratio as f64;
    let n_cont = (n_target / (16.0 * wr * wr)).cbrt();
    let lo = n_cont.floor().max(1.0) as u32;
    let hi = lo.saturating_add(1);
    let dist = |n: u32| -> f64 {
        let p = params_from_layers(n, width_ratio).map(|p| p as f64);
        match p {
            Ok(p) => (p.ln() - n_target.ln()).abs(),
            Err(_) => f64::INFINITY,
        }
    };
    let (dlo, dhi) = (dist(lo), dist(hi));
    if !dlo.is_finite() && !dhi.is_finite() {
        return Err(Error::domain(format!(
            "no representable shape reaches {n_target:.3e} parameters"
        )));
    }
    Ok(if dlo <= dhi { lo } else { hi })
}

/// Smallest depth whose parameter count meets or exceeds `n_target`.
///
/// Used by the planner: when a predicted size falls between two discrete
/// shapes, training the next size up keeps the realized model at least as
/// large as the prediction.
pub fn layers_at_least(n_target: f64, width_ratio: u32) -> Result<u32> {
    if !(n_target > 0.0) || width_ratio == 0 {
        return Err(Error::domain("target parameter count must be positive"));
    }
    let wr = width_ratio as f64;
    let n_cont = (n_target / (16.0 * wr * wr)).cbrt();
    let mut n = n_cont.floor().max(1.0) as u32;
    while (params_from_layers(n, width_ratio)? as f64) < n_target {
        n += 1;
    }
    Ok(n)
}

/// Training FLOPs per token: `(3/4) * N * (7 + n_ctx / d)`.
pub fn compute_per_token(shape: &ModelShape, cfg: &ComputeConfig) -> f64 {
    let n = shape.params() as f64;
    0.75 * n * (7.0 + cfg.n_ctx as f64 / shape.d as f64)
}

/// Total training compute `C = C_token * T` for a token budget `T`.
pub fn total_compute(shape: &ModelShape, cfg: &ComputeConfig, tokens: f64) -> Result<f64> {
    if !(tokens > 0.0) {
        return Err(Error::domain("token budget must be positive"));
    }
    Ok(compute_per_token(shape, cfg) * tokens)
}

/// One row of the per-operation accounting table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlopRow {
    pub operation: &'static str,
    /// Parameters contributed by the operation (0 for parameter-free ones).
    pub params: u64,
    /// Forward-pass FLOPs per token.
    pub flops_per_token: f64,
}

/// Per-operation parameter counts and forward FLOPs per token.
///
/// The parameter column sums to `16 * n_layer * d^2` exactly. With
/// `n_text = 0` the FLOP column sums to one forward pass, a third of
/// [`compute_per_token`]. The cross-attention KV row amortizes its cost per
/// context token (`n_text / n_ctx` factor) and is reproduced verbatim.
pub fn itemized_flops(shape: &ModelShape, cfg: &ComputeConfig) -> Vec<FlopRow> {
    let nl = shape.n_layer as u64;
    let d = shape.d as u64;
    let d2 = d * d;
    let nlf = nl as f64;
    let df = d as f64;
    let d2f = d2 as f64;
    let n_ctx = cfg.n_ctx as f64;
    let n_text = cfg.n_text as f64;
    vec![
        FlopRow {
            operation: "Self-Attention:QKV",
            params: 3 * nl * d2,
            flops_per_token: 2.0 * nlf * 3.0 * d2f,
        },
        FlopRow {
            operation: "Self-Attention:No Mask",
            params: 0,
            flops_per_token: 4.0 * nlf * n_ctx * df,
        },
        FlopRow {
            operation: "Self-Attention:Project",
            params: nl * d2,
            flops_per_token: 2.0 * nlf * d2f,
        },
        FlopRow {
            operation: "Cross-Attention:Q",
            params: nl * d2,
            flops_per_token: 2.0 * nlf * d2f,
        },
        FlopRow {
            operation: "Cross-Attention:KV",
            params: 2 * nl * d2,
            flops_per_token: 2.0 * nlf * 2.0 * (n_text / n_ctx) * d2f,
        },
        FlopRow {
            operation: "Cross-Attention:No Mask",
            params: 0,
            flops_per_token: 4.0 * nlf * n_text * df,
        },
        FlopRow {
            operation: "Cross-Attention:Project",
            params: nl * d2,
            flops_per_token: 2.0 * nlf * d2f,
        },
        FlopRow {
            operation: "FeedForward(SwiGLU)",
            params: 8 * nl * d2,
            flops_per_token: 16.0 * nlf * d2f,
        },
    ]
}
