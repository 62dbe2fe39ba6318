//! The two-term-plus-constant loss surface and its nonlinear fitter.
//!
//! `L(T, N) = (T_c/T)^{a_T} + (N_c/N)^{a_N} + L_inf` decays toward the
//! irreducible loss `L_inf` as both data and model size grow. Fitting
//! minimizes squared residuals on raw loss values (Huber optional) over the
//! five parameters, reparameterized in logs so positivity holds by
//! construction, from a deterministic grid of multi-start initializations:
//! both exponents over {0.1, ..., 0.7}, `L_inf` at {0.5, 0.9} of the
//! minimum observed loss, and the scale constants solved by an inner
//! linear fit at fixed exponents.

use serde::{Deserialize, Serialize};

use crate::powerlaw::LawJson;
use crate::simplex::nelder_mead;
use crate::units::UnitConvention;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSurface {
    pub t_c: f64,
    pub alpha_t: f64,
    pub n_c: f64,
    pub alpha_n: f64,
    pub l_inf: f64,
    pub units: UnitConvention,
}

impl LossSurface {
    pub fn new(
        t_c: f64,
        alpha_t: f64,
        n_c: f64,
        alpha_n: f64,
        l_inf: f64,
        units: UnitConvention,
    ) -> Result<Self> {
        for (name, v) in [
            ("T_c", t_c),
            ("alpha_T", alpha_t),
            ("N_c", n_c),
            ("alpha_N", alpha_n),
            ("L_inf", l_inf),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!(
                    "loss surface parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(LossSurface {
            t_c,
            alpha_t,
            n_c,
            alpha_n,
            l_inf,
            units,
        })
    }

    /// `(T_c/T)^{a_T} + (N_c/N)^{a_N} + L_inf` at `(t, n)` in this
    /// surface's units.
    pub fn eval(&self, t: f64, n: f64) -> Result<f64> {
        if !(t > 0.0 && n > 0.0) {
            return Err(Error::domain("T and N must be positive"));
        }
        Ok(self.eval_unchecked(t, n))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64, n: f64) -> f64 {
        (self.t_c / t).powf(self.alpha_t) + (self.n_c / n).powf(self.alpha_n) + self.l_inf
    }

    /// Partial derivatives of the loss with respect to the five raw
    /// parameters, in declaration order. Backs the finite-difference check
    /// and any gradient-based polish.
    pub fn grad_params(&self, t: f64, n: f64) -> Result<[f64; 5]> {
        if !(t > 0.0 && n > 0.0) {
            return Err(Error::domain("T and N must be positive"));
        }
        let term_t = (self.t_c / t).powf(self.alpha_t);
        let term_n = (self.n_c / n).powf(self.alpha_n);
        Ok([
            self.alpha_t * term_t / self.t_c,
            term_t * (self.t_c / t).ln(),
            self.alpha_n * term_n / self.n_c,
            term_n * (self.n_c / n).ln(),
            1.0,
        ])
    }

    fn from_log_params(theta: &[f64], units: UnitConvention) -> Self {
        LossSurface {
            t_c: theta[0].exp(),
            alpha_t: theta[1].exp(),
            n_c: theta[2].exp(),
            alpha_n: theta[3].exp(),
            l_inf: theta[4].exp(),
            units,
        }
    }
}

/// Mean squared error `(1/n) * sum (y_i - yhat_i)^2`.
pub fn mse(observed: &[f64], fitted: &[f64]) -> Result<f64> {
    if observed.len() != fitted.len() || observed.is_empty() {
        return Err(Error::dimension(format!(
            "mse needs equal nonzero lengths, got {} and {}",
            observed.len(),
            fitted.len()
        )));
    }
    let n = observed.len() as f64;
    Ok(observed
        .iter()
        .zip(fitted)
        .map(|(y, f)| (y - f) * (y - f))
        .sum::<f64>()
        / n)
}

/// Percent reduction from `base` to `improved`.
pub fn reduction_percent(base: f64, improved: f64) -> Result<f64> {
    if base == 0.0 {
        return Err(Error::domain("reduction base must be nonzero"));
    }
    Ok((base - improved) / base * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// Sum of squared residuals on raw loss values (the default).
    LeastSquares,
    /// Huber loss with the given transition threshold.
    Huber(f64),
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub objective: Objective,
    /// Iteration budget per start (default 10_000).
    pub max_iters: usize,
    /// Relative objective-change tolerance (default 1e-12).
    pub rel_tol: f64,
    /// Exponent grid for both `a_T` and `a_N` starts.
    pub exponent_grid: Vec<f64>,
    /// `L_inf` start fractions of the minimum observed loss.
    pub linf_fracs: Vec<f64>,
    /// Additional raw-parameter starts appended after the grid, e.g. a
    /// previous fit for idempotent refitting.
    pub extra_starts: Vec<[f64; 5]>,
    pub units: UnitConvention,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            objective: Objective::LeastSquares,
            max_iters: 10_000,
            rel_tol: 1e-12,
            exponent_grid: (1..=7).map(|i| i as f64 * 0.1).collect(),
            linf_fracs: vec![0.5, 0.9],
            extra_starts: Vec::new(),
            units: UnitConvention::billions(),
        }
    }
}

/// One multi-start record.
#[derive(Debug, Clone, Serialize)]
pub struct StartTrace {
    pub start: usize,
    /// Raw parameters the start was initialized with.
    pub init: [f64; 5],
    pub objective: f64,
    pub iters: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceFit {
    pub surface: LossSurface,
    /// Final value of the fitting objective.
    pub objective: f64,
    /// Observed minus fitted, input order.
    pub residuals: Vec<f64>,
    pub mse: f64,
    /// Asymptotic standard errors of `(T_c, a_T, N_c, a_N, L_inf)` from
    /// the Gauss-Newton covariance at the solution; `None` for Huber fits,
    /// with fewer than 6 points, or when the information matrix is
    /// singular. Parameters whose error bar is wide are reported by the
    /// fit but not determined by the data.
    pub stderr: Option<[f64; 5]>,
    pub trace: Vec<StartTrace>,
    /// Terms whose variation over the data is below 1e-6 of the loss
    /// range; their parameters are reported, not constrained.
    pub unconstrained: Vec<String>,
    pub n_points: usize,
}

impl SurfaceFit {
    pub fn to_law_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Params {
            t_c: f64,
            alpha_t: f64,
            n_c: f64,
            alpha_n: f64,
            l_inf: f64,
        }
        #[derive(Serialize)]
        struct Diag<'a> {
            objective: f64,
            mse: f64,
            n_points: usize,
            stderr: Option<Vec<f64>>,
            unconstrained: &'a [String],
            n_starts: usize,
        }
        serde_json::to_value(LawJson {
            form: "loss_surface",
            params: Params {
                t_c: self.surface.t_c,
                alpha_t: self.surface.alpha_t,
                n_c: self.surface.n_c,
                alpha_n: self.surface.alpha_n,
                l_inf: self.surface.l_inf,
            },
            units: self.surface.units,
            diagnostics: Diag {
                objective: self.objective,
                mse: self.mse,
                n_points: self.n_points,
                stderr: self.stderr.map(|s| s.to_vec()),
                unconstrained: &self.unconstrained,
                n_starts: self.trace.len(),
            },
        })
        .expect("law serialization is infallible")
    }
}

impl LossSurface {
    /// Parses the `form: "loss_surface"` law JSON produced by
    /// [`SurfaceFit::to_law_json`] or written by hand.
    pub fn from_law_json(value: &serde_json::Value) -> Result<Self> {
        let form = value.get("form").and_then(|f| f.as_str()).unwrap_or("");
        if form != "loss_surface" {
            return Err(Error::domain(format!(
                "expected a loss_surface law, got form '{form}'"
            )));
        }
        let params = value
            .get("params")
            .ok_or_else(|| Error::domain("law JSON has no params object"))?;
        let field = |name: &str| -> Result<f64> {
            params
                .get(name)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| Error::domain(format!("law params missing numeric '{name}'")))
        };
        let units: UnitConvention = match value.get("units") {
            Some(u) => serde_json::from_value(u.clone())?,
            None => UnitConvention::billions(),
        };
        LossSurface::new(
            field("t_c")?,
            field("alpha_t")?,
            field("n_c")?,
            field("alpha_n")?,
            field("l_inf")?,
            units,
        )
    }
}

fn objective_value(points: &[(f64, f64, f64)], theta: &[f64], obj: Objective) -> f64 {
    let t_c = theta[0].exp();
    let a_t = theta[1].exp();
    let n_c = theta[2].exp();
    let a_n = theta[3].exp();
    let l_inf = theta[4].exp();
    let mut acc = 0.0;
    for &(t, n, loss) in points {
        let pred = (t_c / t).powf(a_t) + (n_c / n).powf(a_n) + l_inf;
        if !pred.is_finite() {
            return f64::INFINITY;
        }
        let r = loss - pred;
        acc += match obj {
            Objective::LeastSquares => r * r,
            Objective::Huber(delta) => {
                if r.abs() <= delta {
                    0.5 * r * r
                } else {
                    delta * (r.abs() - 0.5 * delta)
                }
            }
        };
    }
    if acc.is_finite() {
        acc
    } else {
        f64::INFINITY
    }
}

/// Scale constants from a linear fit of `loss - l_inf` on
/// `(T^-a_T, N^-a_N)` at fixed exponents.
fn inner_scale_solve(points: &[(f64, f64, f64)], a_t: f64, a_n: f64, l_inf: f64) -> (f64, f64) {
    let mut suu = 0.0;
    let mut svv = 0.0;
    let mut suv = 0.0;
    let mut sur = 0.0;
    let mut svr = 0.0;
    for &(t, n, loss) in points {
        let u = t.powf(-a_t);
        let v = n.powf(-a_n);
        let r = loss - l_inf;
        suu += u * u;
        svv += v * v;
        suv += u * v;
        sur += u * r;
        svr += v * r;
    }
    let det = suu * svv - suv * suv;
    let (mut a, mut b) = if det.abs() > 1e-14 * suu * svv {
        ((svv * sur - suv * svr) / det, (suu * svr - suv * sur) / det)
    } else {
        // collinear regressors; split the residual evenly
        let denom = suu + 2.0 * suv + svv;
        let shared = if denom > 0.0 {
            (sur + svr) / denom
        } else {
            0.0
        };
        (shared, shared)
    };
    let floor = 1e-12;
    if !(a > floor) {
        a = floor;
    }
    if !(b > floor) {
        b = floor;
    }
    (a.powf(1.0 / a_t), b.powf(1.0 / a_n))
}

/// Fits the five-parameter surface to `(T, N, loss)` points.
pub fn fit_loss_surface(points: &[(f64, f64, f64)], opts: &FitOptions) -> Result<SurfaceFit> {
    if points.len() < 8 {
        return Err(Error::Singular(format!(
            "surface fit needs >= 8 points, got {}",
            points.len()
        )));
    }
    let mut ts: Vec<u64> = points.iter().map(|p| p.0.to_bits()).collect();
    ts.sort_unstable();
    ts.dedup();
    let mut ns: Vec<u64> = points.iter().map(|p| p.1.to_bits()).collect();
    ns.sort_unstable();
    ns.dedup();
    if ts.len() < 2 || ns.len() < 2 {
        return Err(Error::Singular(
            "surface fit needs at least 2 distinct T and 2 distinct N values".into(),
        ));
    }
    for &(t, n, loss) in points {
        if !(t > 0.0 && n > 0.0 && loss > 0.0) {
            return Err(Error::domain("all T, N, loss must be positive"));
        }
    }

    let min_loss = points.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    let max_loss = points.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let obj_floor = 1e-22 * points.iter().map(|p| p.2 * p.2).sum::<f64>();

    let mut starts: Vec<[f64; 5]> = Vec::new();
    for &a_t in &opts.exponent_grid {
        for &a_n in &opts.exponent_grid {
            for &frac in &opts.linf_fracs {
                let l_inf = frac * min_loss;
                let (t_c, n_c) = inner_scale_solve(points, a_t, a_n, l_inf);
                starts.push([t_c.ln(), a_t.ln(), n_c.ln(), a_n.ln(), l_inf.ln()]);
            }
        }
    }
    for extra in &opts.extra_starts {
        starts.push([
            extra[0].ln(),
            extra[1].ln(),
            extra[2].ln(),
            extra[3].ln(),
            extra[4].ln(),
        ]);
    }

    let mut trace = Vec::with_capacity(starts.len());
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut any_converged = false;
    for (idx, theta0) in starts.iter().enumerate() {
        let f = |theta: &[f64]| objective_value(points, theta, opts.objective);
        let mut x = theta0.to_vec();
        let mut fx = f(&x);
        let mut iters_left = opts.max_iters;
        let mut iters_total = 0;
        let mut converged = false;
        for &scale in &[0.25, 0.05, 0.01] {
            if iters_left == 0 {
                break;
            }
            let r = nelder_mead(f, &x, scale, iters_left, opts.rel_tol, obj_floor);
            iters_left = iters_left.saturating_sub(r.iters);
            iters_total += r.iters;
            if r.fx <= fx {
                x = r.x;
                fx = r.fx;
            }
            converged = r.converged;
        }
        any_converged |= converged;
        trace.push(StartTrace {
            start: idx,
            init: {
                let s = LossSurface::from_log_params(theta0, opts.units);
                [s.t_c, s.alpha_t, s.n_c, s.alpha_n, s.l_inf]
            },
            objective: fx,
            iters: iters_total,
            converged,
        });
        let better = match &best {
            None => true,
            Some((bf, _, _)) => fx < *bf,
        };
        if better {
            best = Some((fx, idx, x));
        }
    }

    let (best_obj, _best_idx, best_theta) = best.expect("at least one start");
    let surface = LossSurface::from_log_params(&best_theta, opts.units);
    if !any_converged {
        return Err(Error::NonConvergence {
            starts: starts.len(),
            objective: best_obj,
            best: Box::new(surface),
        });
    }

    let fitted: Vec<f64> = points
        .iter()
        .map(|&(t, n, _)| surface.eval_unchecked(t, n))
        .collect();
    let residuals: Vec<f64> = points
        .iter()
        .zip(&fitted)
        .map(|(&(_, _, loss), f)| loss - f)
        .collect();
    let mse_val = mse(&points.iter().map(|p| p.2).collect::<Vec<_>>(), &fitted)?;
    let stderr = match opts.objective {
        Objective::LeastSquares => gauss_newton_stderr(points, &surface, &residuals),
        Objective::Huber(_) => None,
    };

    // identifiability: a term whose spread over the data is negligible
    // against the loss range carries no information about its parameters;
    // the range is floored at 0.1% of the loss scale so constant data
    // still flags both terms
    let range_eff = (max_loss - min_loss).max(1e-3 * max_loss.abs());
    let mut unconstrained = Vec::new();
    let term_range = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
        let vals: Vec<f64> = points.iter().map(|&(t, n, _)| f(t, n)).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let data_term = term_range(&|t, _| (surface.t_c / t).powf(surface.alpha_t));
    let model_term = term_range(&|_, n| (surface.n_c / n).powf(surface.alpha_n));
    if data_term < 1e-6 * range_eff {
        unconstrained.push("data term (T_c, alpha_T) unconstrained by data".to_string());
    }
    if model_term < 1e-6 * range_eff {
        unconstrained.push("model term (N_c, alpha_N) unconstrained by data".to_string());
    }

    Ok(SurfaceFit {
        surface,
        objective: best_obj,
        residuals,
        mse: mse_val,
        stderr,
        trace,
        unconstrained,
        n_points: points.len(),
    })
}

/// Standard errors from `sigma^2 (J^T J)^-1` with the Jacobian of the
/// prediction taken in the raw parameters.
fn gauss_newton_stderr(
    points: &[(f64, f64, f64)],
    surface: &LossSurface,
    residuals: &[f64],
) -> Option<[f64; 5]> {
    let n = points.len();
    if n <= 5 {
        return None;
    }
    let mut jtj = vec![0.0; 25];
    for &(t, nn, _) in points {
        let g = surface.grad_params(t, nn).ok()?;
        for i in 0..5 {
            for j in 0..5 {
                jtj[i * 5 + j] += g[i] * g[j];
            }
        }
    }
    let inv = crate::linalg::invert_small(&jtj, 5)?;
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma2 = sse / (n - 5) as f64;
    let mut se = [0.0; 5];
    for i in 0..5 {
        let v = sigma2 * inv[i * 5 + i];
        if !(v >= 0.0) {
            return None;
        }
        se[i] = v.sqrt();
    }
    Some(se)
}
