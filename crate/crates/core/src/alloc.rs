//! Compute-optimal model-size allocation.
//!
//! Two routes to the optimal size at a budget:
//!
//! - *empirical*: parabola minima of measured IsoFLOP profiles,
//!   power-law fitted against the budget;
//! - *predicted*: minimize a fitted loss surface along the compute
//!   constraint `C = C_token * T` over the discrete shape family.
//!
//! The predicted route scans depths, quadratic-fits the loss near the
//! minimum on the compute-normalized size axis `log10(C_token / q_ref)`
//! (token cost per parameter held at a reference shape), and takes the
//! vertex. Working on that axis keeps the fitted `N_opt` and `T_opt`
//! exponents complementary (`x + (1 - x) = 1`), the convention the
//! published allocation laws follow, and makes the exponent respect the
//! pure-regime bounds of the cost model: `C_token` scales like `N^(2/3)`
//! when attention dominates (`n_ctx/d >> 7`) and like `N` when the MLP
//! does, so the exponent lives between
//! `(2/3)a_T / ((2/3)a_T + a_N)` and `a_T / (a_T + a_N)`.

use serde::Serialize;

use crate::compute::{compute_per_token, ComputeConfig, ModelShape};
use crate::powerlaw::{fit_parabola_min, fit_powerlaw1, ParabolaFit, PowerLaw1, PowerLaw1Fit};
use crate::runs::Observation;
use crate::surface::LossSurface;
use crate::{Error, Result};

/// Loss versus model size at one fixed compute budget.
#[derive(Debug, Clone, Serialize)]
pub struct IsoFlopProfile {
    pub budget_c: f64,
    /// `(N, loss)` pairs, N in parameters.
    pub points: Vec<(f64, f64)>,
    pub fit: ParabolaFit,
    pub n_opt_empirical: f64,
}

impl IsoFlopProfile {
    /// Builds a profile from `(N, loss)` points at a stated budget.
    pub fn from_points(budget_c: f64, points: Vec<(f64, f64)>) -> Result<Self> {
        if !(budget_c > 0.0) {
            return Err(Error::domain("budget must be positive"));
        }
        let log_pts: Vec<(f64, f64)> = points.iter().map(|&(n, l)| (n.log10(), l)).collect();
        let fit = fit_parabola_min(&log_pts).map_err(|e| match e {
            Error::NoInteriorMinimum(msg) => {
                Error::NoInteriorMinimum(format!("budget {budget_c:.3e}: {msg}"))
            }
            other => other,
        })?;
        let n_opt_empirical = 10f64.powf(fit.x_min);
        Ok(IsoFlopProfile {
            budget_c,
            points,
            fit,
            n_opt_empirical,
        })
    }

    /// Builds a profile from observations, requiring every observation's
    /// compute to sit within 1% of the stated budget.
    pub fn from_observations(budget_c: f64, obs: &[Observation]) -> Result<Self> {
        for o in obs {
            if (o.c / budget_c - 1.0).abs() > 0.01 {
                return Err(Error::domain(format!(
                    "observation at C={:.3e} is not within 1% of budget {budget_c:.3e}",
                    o.c
                )));
            }
        }
        Self::from_points(budget_c, obs.iter().map(|o| (o.n, o.loss)).collect())
    }
}

/// Power-law fit of empirical profile minima against budget.
pub fn empirical_nopt(profiles: &[IsoFlopProfile]) -> Result<PowerLaw1Fit> {
    if profiles.len() < 2 {
        return Err(Error::Singular(format!(
            "need at least 2 profiles, got {}",
            profiles.len()
        )));
    }
    let pts: Vec<(f64, f64)> = profiles
        .iter()
        .map(|p| (p.budget_c, p.n_opt_empirical))
        .collect();
    fit_powerlaw1(&pts)
}

/// How the data term behaves after the compute-constraint substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstraintTerm {
    /// `(T_c * C_token / C)^{a_T}`: the substitution applied inside the
    /// exponentiated data term. The default.
    Exponentiated,
    /// `T_c * C_token / C` with no exponent, reproducing the printed form
    /// of the constrained loss verbatim. Available for comparison only.
    Verbatim,
}

/// Loss of the surface at the shape of the given depth when the whole
/// budget `c` is spent on it. Returns `(N, T, loss)` in raw parameters and
/// tokens.
pub fn loss_along_constraint(
    surface: &LossSurface,
    c: f64,
    cfg: &ComputeConfig,
    n_layer: u32,
    width_ratio: u32,
    term: ConstraintTerm,
) -> Result<(f64, f64, f64)> {
    if !(c > 0.0) {
        return Err(Error::domain("budget must be positive"));
    }
    let shape = ModelShape::from_layers(n_layer, width_ratio)?;
    let n = shape.params() as f64;
    let c_token = compute_per_token(&shape, cfg);
    let t = c / c_token;
    let t_u = t / surface.units.token_unit;
    let n_u = n / surface.units.param_unit;
    let loss = match term {
        ConstraintTerm::Exponentiated => surface.eval(t_u, n_u)?,
        ConstraintTerm::Verbatim => {
            surface.t_c / t_u + (surface.n_c / n_u).powf(surface.alpha_n) + surface.l_inf
        }
    };
    Ok((n, t, loss))
}

#[derive(Debug, Clone)]
pub struct AllocOptions {
    pub layer_min: u32,
    pub layer_max: u32,
    /// Fraction of the scan's min-to-max loss spread admitted into the
    /// quadratic fit around the minimum.
    pub window_frac: f64,
    pub term: ConstraintTerm,
    pub width_ratio: u32,
}

impl Default for AllocOptions {
    fn default() -> Self {
        AllocOptions {
            layer_min: 1,
            layer_max: 64,
            window_frac: 0.02,
            term: ConstraintTerm::Exponentiated,
            width_ratio: 128,
        }
    }
}

/// Per-budget outcome of the predicted-size minimization.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetAllocation {
    pub budget_c: f64,
    /// Depth at the scan minimum.
    pub n_layer_min: u32,
    /// Vertex of the quadratic on the compute-normalized axis.
    pub n_opt: f64,
    /// Token budget at the vertex, `C / C_token_opt`.
    pub t_opt: f64,
    pub loss_min: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictedAllocation {
    pub law: PowerLaw1Fit,
    /// Token cost per parameter at the reference shape.
    pub q_ref: f64,
    pub reference_shape: ModelShape,
    pub budgets: Vec<BudgetAllocation>,
}

/// Minimizes the surface along the compute constraint at each budget and
/// power-law fits the optimal size against the budget.
pub fn predicted_nopt(
    surface: &LossSurface,
    budgets: &[f64],
    cfg: &ComputeConfig,
    opts: &AllocOptions,
) -> Result<PredictedAllocation> {
    if budgets.len() < 2 {
        return Err(Error::Singular(format!(
            "need at least 2 budgets, got {}",
            budgets.len()
        )));
    }
    if opts.layer_min == 0 || opts.layer_max <= opts.layer_min + 1 {
        return Err(Error::domain(
            "layer scan range must span at least 3 depths",
        ));
    }

    // scan every budget once; the reference shape for the token-to-size
    // conversion is the scan minimum of the median budget
    struct Scan {
        budget: f64,
        xs: Vec<f64>, // log10 C_token
        losses: Vec<f64>,
        argmin: usize,
    }
    let mut scans = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let mut xs = Vec::new();
        let mut losses = Vec::new();
        for n_layer in opts.layer_min..=opts.layer_max {
            let shape = ModelShape::from_layers(n_layer, opts.width_ratio)?;
            let c_token = compute_per_token(&shape, cfg);
            let (_, _, loss) =
                loss_along_constraint(surface, budget, cfg, n_layer, opts.width_ratio, opts.term)?;
            xs.push(c_token.log10());
            losses.push(loss);
        }
        let argmin = losses
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .expect("nonempty scan");
        if argmin == 0 || argmin == losses.len() - 1 {
            return Err(Error::NoInteriorMinimum(format!(
                "budget {budget:.3e}: scan minimum sits at the {} of the layer range",
                if argmin == 0 { "bottom" } else { "top" }
            )));
        }
        scans.push(Scan {
            budget,
            xs,
            losses,
            argmin,
        });
    }

    let mut order: Vec<usize> = (0..scans.len()).collect();
    order.sort_by(|&i, &j| scans[i].budget.partial_cmp(&scans[j].budget).unwrap());
    let mid = &scans[order[order.len() / 2]];
    let ref_layer = opts.layer_min + mid.argmin as u32;
    let reference_shape = ModelShape::from_layers(ref_layer, opts.width_ratio)?;
    let q_ref = compute_per_token(&reference_shape, cfg) / reference_shape.params() as f64;

    let mut per_budget = Vec::with_capacity(scans.len());
    for scan in &scans {
        let lo = scan.losses.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scan
            .losses
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let cutoff = lo + opts.window_frac * (hi - lo);
        let mut pts = Vec::new();
        for i in 0..scan.losses.len() {
            let near_min = i + 1 >= scan.argmin && i <= scan.argmin + 1;
            if scan.losses[i] <= cutoff || near_min {
                pts.push((scan.xs[i], scan.losses[i]));
            }
        }
        let fit = fit_parabola_min(&pts).map_err(|e| match e {
            Error::NoInteriorMinimum(msg) => {
                Error::NoInteriorMinimum(format!("budget {:.3e}: {msg}", scan.budget))
            }
            other => other,
        })?;
        let x_first = scan.xs.first().copied().expect("nonempty");
        let x_last = scan.xs.last().copied().expect("nonempty");
        if fit.x_min < x_first || fit.x_min > x_last {
            return Err(Error::NoInteriorMinimum(format!(
                "budget {:.3e}: quadratic vertex falls outside the scanned range",
                scan.budget
            )));
        }
        let c_token_opt = 10f64.powf(fit.x_min);
        per_budget.push(BudgetAllocation {
            budget_c: scan.budget,
            n_layer_min: opts.layer_min + scan.argmin as u32,
            n_opt: c_token_opt / q_ref,
            t_opt: scan.budget / c_token_opt,
            loss_min: lo,
        });
    }

    let pts: Vec<(f64, f64)> = per_budget.iter().map(|b| (b.budget_c, b.n_opt)).collect();
    let law = fit_powerlaw1(&pts)?;
    Ok(PredictedAllocation {
        law,
        q_ref,
        reference_shape,
        budgets: per_budget,
    })
}

/// Pure-regime bounds on the predicted `N_opt` exponent for a surface:
/// `(2/3)a_T / ((2/3)a_T + a_N)` when attention cost dominates through
/// `a_T / (a_T + a_N)` when the MLP cost does.
pub fn exponent_bracket(surface: &LossSurface) -> (f64, f64) {
    let at = surface.alpha_t;
    let an = surface.alpha_n;
    ((2.0 / 3.0) * at / ((2.0 / 3.0) * at + an), at / (at + an))
}

/// Token budget when all of `c` is spent on the given shape.
pub fn topt(c: f64, cfg: &ComputeConfig, shape: &ModelShape) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain("budget must be positive"));
    }
    Ok(c / compute_per_token(shape, cfg))
}

/// `T_opt(C)` law derived from an `N_opt(C)` law under `C = q * N * T`
/// with the token cost per parameter `q` held fixed; exponents are
/// complementary by construction.
pub fn topt_law(nopt: &PowerLaw1, q: f64) -> Result<PowerLaw1> {
    if !(q > 0.0) {
        return Err(Error::domain("token cost per parameter must be positive"));
    }
    PowerLaw1::new(1.0 / (q * nopt.coef), 1.0 - nopt.exponent)
}

/// Absolute and relative deviation between two fitted exponents, relative
/// to the empirical one.
pub fn slope_deviation(empirical: &PowerLaw1, predicted: &PowerLaw1) -> Result<(f64, f64)> {
    if empirical.exponent == 0.0 {
        return Err(Error::domain("empirical exponent must be nonzero"));
    }
    let abs_err = (empirical.exponent - predicted.exponent).abs();
    Ok((abs_err, abs_err / empirical.exponent))
}

/// Empirical and predicted allocation laws with their deviation metrics.
#[derive(Debug, Clone, Serialize)]
pub struct AllocationLaw {
    pub empirical: PowerLaw1,
    pub predicted: PowerLaw1,
    pub slope_abs_err: f64,
    pub slope_rel_err: f64,
}

impl AllocationLaw {
    pub fn compare(empirical: PowerLaw1, predicted: PowerLaw1) -> Result<Self> {
        let (abs_err, rel_err) = slope_deviation(&empirical, &predicted)?;
        Ok(AllocationLaw {
            empirical,
            predicted,
            slope_abs_err: abs_err,
            slope_rel_err: rel_err,
        })
    }
}
