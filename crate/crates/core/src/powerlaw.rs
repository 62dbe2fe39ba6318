//! Log-space power-law regression.
//!
//! Everything here is ordinary least squares on logarithms: the estimator
//! behind the optimal-batch-size and optimal-learning-rate laws, the
//! empirical optimal-model-size law, and the IsoFLOP parabola minima.
//! Fits are closed-form (centered normal equations), report standard
//! errors from the OLS covariance, and fail loudly on degenerate designs.

use serde::Serialize;

use crate::units::UnitConvention;
use crate::{Error, Result};

/// Two-predictor power law `y = alpha * T^beta * N^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLaw2 {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub units: UnitConvention,
}

impl PowerLaw2 {
    pub fn new(alpha: f64, beta: f64, gamma: f64, units: UnitConvention) -> Result<Self> {
        if !(alpha > 0.0) || !beta.is_finite() || !gamma.is_finite() {
            return Err(Error::domain(
                "power law needs alpha > 0 and finite exponents",
            ));
        }
        Ok(PowerLaw2 {
            alpha,
            beta,
            gamma,
            units,
        })
    }

    /// Evaluates at `(t, n)` given in this law's units.
    pub fn eval(&self, t: f64, n: f64) -> f64 {
        self.alpha * t.powf(self.beta) * n.powf(self.gamma)
    }
}

/// Single-predictor power law `y = coef * x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLaw1 {
    pub coef: f64,
    pub exponent: f64,
}

impl PowerLaw1 {
    pub fn new(coef: f64, exponent: f64) -> Result<Self> {
        if !(coef > 0.0) || !exponent.is_finite() {
            return Err(Error::domain(
                "power law needs coef > 0 and a finite exponent",
            ));
        }
        Ok(PowerLaw1 { coef, exponent })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coef * x.powf(self.exponent)
    }

    /// Parses the `form: "powerlaw1"` law JSON written by
    /// [`PowerLaw1Fit::to_law_json`].
    pub fn from_law_json(value: &serde_json::Value) -> Result<Self> {
        let form = value.get("form").and_then(|f| f.as_str()).unwrap_or("");
        if form != "powerlaw1" {
            return Err(Error::domain(format!(
                "expected a powerlaw1 law, got form '{form}'"
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
        PowerLaw1::new(field("coef")?, field("exponent")?)
    }
}

/// Least-squares quadratic over `x = log10 N` with an interior minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParabolaFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x_min: f64,
    pub y_min: f64,
}

/// Fit of [`PowerLaw2`] with residual diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct PowerLaw2Fit {
    pub law: PowerLaw2,
    pub r2: f64,
    /// Standard errors of `(ln alpha, beta, gamma)`; `None` with zero
    /// residual degrees of freedom.
    pub stderr: Option<[f64; 3]>,
    /// Per-point residuals in log space, input order.
    pub residuals: Vec<f64>,
    pub n_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerLaw1Fit {
    pub law: PowerLaw1,
    pub r2: f64,
    /// Standard errors of `(ln coef, exponent)`.
    pub stderr: Option<[f64; 2]>,
    pub residuals: Vec<f64>,
    pub n_points: usize,
}

/// OLS of `log y` on `(1, log T, log N)`.
pub fn fit_powerlaw2(points: &[(f64, f64, f64)], units: UnitConvention) -> Result<PowerLaw2Fit> {
    if points.len() < 3 {
        return Err(Error::Singular(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    for &(t, n, y) in points {
        if !(t > 0.0 && n > 0.0 && y > 0.0) {
            return Err(Error::domain("all T, N, y must be positive"));
        }
    }
    let m = points.len() as f64;
    let lt: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ln_: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.2.ln()).collect();
    let tbar = lt.iter().sum::<f64>() / m;
    let nbar = ln_.iter().sum::<f64>() / m;
    let ybar = ly.iter().sum::<f64>() / m;

    let mut stt = 0.0;
    let mut snn = 0.0;
    let mut stn = 0.0;
    let mut sty = 0.0;
    let mut sny = 0.0;
    let mut syy = 0.0;
    for i in 0..points.len() {
        let dt = lt[i] - tbar;
        let dn = ln_[i] - nbar;
        let dy = ly[i] - ybar;
        stt += dt * dt;
        snn += dn * dn;
        stn += dt * dn;
        sty += dt * dy;
        sny += dn * dy;
        syy += dy * dy;
    }
    let scale = (stt.max(snn)).max(1.0);
    if stt <= 1e-24 * scale {
        return Err(Error::Singular(
            "design is rank-deficient: predictor T takes a single value".into(),
        ));
    }
    if snn <= 1e-24 * scale {
        return Err(Error::Singular(
            "design is rank-deficient: predictor N takes a single value".into(),
        ));
    }
    let det = stt * snn - stn * stn;
    if det <= 1e-20 * stt * snn {
        return Err(Error::Singular(
            "design is rank-deficient: predictors T and N are collinear".into(),
        ));
    }

    let beta = (snn * sty - stn * sny) / det;
    let gamma = (stt * sny - stn * sty) / det;
    let intercept = ybar - beta * tbar - gamma * nbar;
    let law = PowerLaw2::new(intercept.exp(), beta, gamma, units)?;

    let residuals: Vec<f64> = (0..points.len())
        .map(|i| ly[i] - (intercept + beta * lt[i] + gamma * ln_[i]))
        .collect();
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let stderr = if points.len() > 3 {
        let sigma2 = ssr / (m - 3.0);
        let var_beta = sigma2 * snn / det;
        let var_gamma = sigma2 * stt / det;
        let var_int = sigma2
            * (1.0 / m + (tbar * tbar * snn - 2.0 * tbar * nbar * stn + nbar * nbar * stt) / det);
        Some([var_int.sqrt(), var_beta.sqrt(), var_gamma.sqrt()])
    } else {
        None
    };

    Ok(PowerLaw2Fit {
        law,
        r2,
        stderr,
        residuals,
        n_points: points.len(),
    })
}

/// OLS of `log y` on `(1, log x)`.
pub fn fit_powerlaw1(points: &[(f64, f64)]) -> Result<PowerLaw1Fit> {
    if points.len() < 2 {
        return Err(Error::Singular(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    for &(x, y) in points {
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::domain("all x, y must be positive"));
        }
    }
    let m = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xbar = lx.iter().sum::<f64>() / m;
    let ybar = ly.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..points.len() {
        let dx = lx[i] - xbar;
        let dy = ly[i] - ybar;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 1e-24 * sxx.max(1.0) {
        return Err(Error::Singular(
            "fewer than 2 distinct x values in power-law fit".into(),
        ));
    }
    let exponent = sxy / sxx;
    let intercept = ybar - exponent * xbar;
    let law = PowerLaw1::new(intercept.exp(), exponent)?;
    let residuals: Vec<f64> = (0..points.len())
        .map(|i| ly[i] - (intercept + exponent * lx[i]))
        .collect();
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let stderr = if points.len() > 2 {
        let sigma2 = ssr / (m - 2.0);
        Some([
            (sigma2 * (1.0 / m + xbar * xbar / sxx)).sqrt(),
            (sigma2 / sxx).sqrt(),
        ])
    } else {
        None
    };
    Ok(PowerLaw1Fit {
        law,
        r2,
        stderr,
        residuals,
        n_points: points.len(),
    })
}

/// Least-squares parabola through `(x, loss)` points, rejecting fits
/// without an interior minimum.
pub fn fit_parabola_min(points: &[(f64, f64)]) -> Result<ParabolaFit> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    if points.len() < 3 || xs.len() < 3 {
        return Err(Error::Singular(format!(
            "parabola fit needs >= 3 distinct abscissae, got {}",
            xs.len()
        )));
    }
    let m = points.len() as f64;
    let xbar = points.iter().map(|p| p.0).sum::<f64>() / m;
    // centered design (u^2, u, 1), u = x - xbar, for conditioning
    let mut s = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &(x, y) in points {
        let u = x - xbar;
        let row = [u * u, u, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * y;
        }
    }
    let sol = solve3(s, rhs)
        .ok_or_else(|| Error::Singular("parabola normal equations are singular".into()))?;
    let (a, bu, cu) = (sol[0], sol[1], sol[2]);
    // back to uncentered coefficients
    let b = bu - 2.0 * a * xbar;
    let c = cu - bu * xbar + a * xbar * xbar;

    let x_span = xs[xs.len() - 1] - xs[0];
    let y_lo = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_hi = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let curv_floor = 1e-10 * ((y_hi - y_lo).abs() / (x_span * x_span)).max(f64::MIN_POSITIVE);
    if a <= curv_floor {
        return Err(Error::NoInteriorMinimum(format!(
            "quadratic coefficient {a:.3e} is not positive"
        )));
    }
    let x_min = -b / (2.0 * a);
    let y_min = c - b * b / (4.0 * a);
    Ok(ParabolaFit {
        a,
        b,
        c,
        x_min,
        y_min,
    })
}

/// 3x3 linear solve with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv =
            (col..3).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for col in (0..3).rev() {
        let mut acc = b[col];
        for k in (col + 1)..3 {
            acc -= m[col][k] * x[k];
        }
        x[col] = acc / m[col][col];
    }
    Some(x)
}

/// JSON envelope shared by all serialized laws.
#[derive(Debug, Serialize)]
pub struct LawJson<P: Serialize, D: Serialize> {
    pub form: &'static str,
    pub params: P,
    pub units: UnitConvention,
    pub diagnostics: D,
}

#[derive(Debug, Serialize)]
pub struct FitDiagnostics {
    pub r2: f64,
    pub stderr: Option<Vec<f64>>,
    pub n_points: usize,
}

impl PowerLaw2Fit {
    pub fn to_law_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Params {
            alpha: f64,
            beta: f64,
            gamma: f64,
        }
        serde_json::to_value(LawJson {
            form: "powerlaw2",
            params: Params {
                alpha: self.law.alpha,
                beta: self.law.beta,
                gamma: self.law.gamma,
            },
            units: self.law.units,
            diagnostics: FitDiagnostics {
                r2: self.r2,
                stderr: self.stderr.map(|s| s.to_vec()),
                n_points: self.n_points,
            },
        })
        .expect("law serialization is infallible")
    }
}

impl ParabolaFit {
    pub fn to_law_json(&self, units: UnitConvention, n_points: usize) -> serde_json::Value {
        #[derive(Serialize)]
        struct Params {
            a: f64,
            b: f64,
            c: f64,
            x_min: f64,
            y_min: f64,
        }
        #[derive(Serialize)]
        struct Diag {
            n_points: usize,
        }
        serde_json::to_value(LawJson {
            form: "parabola",
            params: Params {
                a: self.a,
                b: self.b,
                c: self.c,
                x_min: self.x_min,
                y_min: self.y_min,
            },
            units,
            diagnostics: Diag { n_points },
        })
        .expect("law serialization is infallible")
    }
}

impl PowerLaw1Fit {
    pub fn to_law_json(&self, units: UnitConvention) -> serde_json::Value {
        #[derive(Serialize)]
        struct Params {
            coef: f64,
            exponent: f64,
        }
        serde_json::to_value(LawJson {
            form: "powerlaw1",
            params: Params {
                coef: self.law.coef,
                exponent: self.law.exponent,
            },
            units,
            diagnostics: FitDiagnostics {
                r2: self.r2,
                stderr: self.stderr.map(|s| s.to_vec()),
                n_points: self.n_points,
            },
        })
        .expect("law serialization is infallible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_two_predictor_recovery() {
        let mut pts = Vec::new();
        for &t in &[1.0f64, 3.0, 10.0, 30.0] {
            for &n in &[0.5f64, 1.0, 2.0] {
                pts.push((t, n, 2.0 * t.powf(0.5) * n.powf(-0.25)));
            }
        }
        let fit = fit_powerlaw2(&pts, UnitConvention::billions()).unwrap();
        assert!((fit.law.alpha - 2.0).abs() < 1e-10 * 2.0);
        assert!((fit.law.beta - 0.5).abs() < 1e-10);
        assert!((fit.law.gamma + 0.25).abs() < 1e-10);
        assert!(fit.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn published_learning_rate_law_evaluates() {
        let law = PowerLaw2::new(0.0002, -0.0453, -0.1619, UnitConvention::billions()).unwrap();
        let eta = law.eval(140.0, 0.7193);
        // frozen direct evaluation; rounds to the published 1.6e-4 plan value
        assert!((eta - 1.686462376428782e-4).abs() < 1e-16);
        assert!((eta / 1.6e-4 - 1.0).abs() < 0.10);
    }

    #[test]
    fn published_batch_law_evaluates() {
        let law = PowerLaw2::new(17.0287, 0.8080, 0.1906, UnitConvention::billions()).unwrap();
        let b = law.eval(140.0, 0.7193);
        // frozen direct evaluation; the published plan used 832 samples
        assert!((b - 866.9219611253891).abs() < 1e-9);
        assert!((b / 832.0 - 1.0).abs() < 0.10);
    }

    #[test]
    fn rank_deficiency_names_the_predictor() {
        let pts: Vec<(f64, f64, f64)> = vec![(1.0, 2.0, 1.0), (3.0, 2.0, 1.5), (9.0, 2.0, 2.0)];
        let err = fit_powerlaw2(&pts, UnitConvention::billions()).unwrap_err();
        assert!(err.to_string().contains("N"), "got: {err}");
        let pts: Vec<(f64, f64, f64)> = vec![
            (1.0, 1.0, 1.0),
            (2.0, 2.0, 1.5),
            (4.0, 4.0, 2.0),
            (8.0, 8.0, 2.5),
        ];
        let err = fit_powerlaw2(&pts, UnitConvention::billions()).unwrap_err();
        assert!(err.to_string().contains("collinear"), "got: {err}");
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut pts = Vec::new();
        for _ in 0..40 {
            let t = 10f64.powf(rng.gen::<f64>() * 2.0);
            let n = 10f64.powf(rng.gen::<f64>() * 2.0 - 1.0);
            let y = 3.0 * t.powf(0.8) * n.powf(0.2) * (1.0 + 0.05 * (rng.gen::<f64>() - 0.5));
            pts.push((t, n, y));
        }
        let fit = fit_powerlaw2(&pts, UnitConvention::billions()).unwrap();
        let mut dot1 = 0.0;
        let mut dot_t = 0.0;
        let mut dot_n = 0.0;
        for (i, &(t, n, _)) in pts.iter().enumerate() {
            dot1 += fit.residuals[i];
            dot_t += fit.residuals[i] * t.ln();
            dot_n += fit.residuals[i] * n.ln();
        }
        assert!(dot1.abs() < 1e-8);
        assert!(dot_t.abs() < 1e-8);
        assert!(dot_n.abs() < 1e-8);
    }

    #[test]
    fn single_predictor_recovery_and_published_sizes() {
        let pts: Vec<(f64, f64)> = (1..=6)
            .map(|i| (i as f64, 3.0 * (i as f64).powi(2)))
            .collect();
        let fit = fit_powerlaw1(&pts).unwrap();
        assert!((fit.law.coef - 3.0).abs() < 1e-10 * 3.0);
        assert!((fit.law.exponent - 2.0).abs() < 1e-10);

        // self-consistency on the published budget grid
        let law = PowerLaw1::new(1.5787, 0.4146).unwrap();
        let pts: Vec<(f64, f64)> = [3e17, 6e17, 1e18, 3e18, 6e18]
            .iter()
            .map(|&c| (c, law.eval(c)))
            .collect();
        let fit = fit_powerlaw1(&pts).unwrap();
        assert!((fit.law.coef - 1.5787).abs() < 1e-6 * 1.5787);
        assert!((fit.law.exponent - 0.4146).abs() < 1e-6);

        // the extrapolated optimal size at the validation budget
        let n = law.eval(5.85e20);
        assert!((n / 1e9 - 0.64).abs() < 0.01, "got {n:.4e}");
    }

    #[test]
    fn single_predictor_rejects_degenerate_x() {
        let pts = vec![(2.0, 1.0), (2.0, 3.0), (2.0, 5.0)];
        assert!(matches!(fit_powerlaw1(&pts), Err(Error::Singular(_))));
        assert!(matches!(
            fit_powerlaw1(&[(1.0, 1.0)]),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn parabola_symmetric_points() {
        let fit = fit_parabola_min(&[(0.0, 1.0), (1.0, 0.0), (2.0, 1.0)]).unwrap();
        assert!((fit.x_min - 1.0).abs() < 1e-12);
        assert!(fit.y_min.abs() < 1e-12);
    }

    #[test]
    fn parabola_exact_quadratic() {
        let pts: Vec<(f64, f64)> = [1.0, 1.5, 2.5, 3.0]
            .iter()
            .map(|&x: &f64| (x, (x - 2.0) * (x - 2.0) + 0.5))
            .collect();
        let fit = fit_parabola_min(&pts).unwrap();
        assert!((fit.x_min - 2.0).abs() < 1e-10);
        assert!((fit.y_min - 0.5).abs() < 1e-10);
    }

    #[test]
    fn parabola_rejects_monotone_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 10.0 - i as f64)).collect();
        assert!(matches!(
            fit_parabola_min(&pts),
            Err(Error::NoInteriorMinimum(_))
        ));
    }

    #[test]
    fn parabola_rejects_too_few_distinct_points() {
        let pts = vec![(1.0, 2.0), (1.0, 2.1), (2.0, 3.0)];
        assert!(matches!(fit_parabola_min(&pts), Err(Error::Singular(_))));
    }

    #[test]
    fn parabola_vertex_shift_invariance() {
        let base: Vec<(f64, f64)> = [0.5, 1.0, 2.0, 3.5]
            .iter()
            .map(|&x: &f64| (x, 2.0 * (x - 1.7) * (x - 1.7) + 0.3))
            .collect();
        let shifted: Vec<(f64, f64)> = base.iter().map(|&(x, y)| (x, y + 5.0)).collect();
        let f0 = fit_parabola_min(&base).unwrap();
        let f1 = fit_parabola_min(&shifted).unwrap();
        assert!((f0.x_min - f1.x_min).abs() < 1e-10);
        assert!((f1.y_min - f0.y_min - 5.0).abs() < 1e-9);
    }

    // Noisy recovery: fitted exponents stay within 3 standard errors of the
    // truth in at least 95% of seeded trials.
    #[test]
    fn noisy_exponent_coverage() {
        let mut covered = 0;
        let trials = 200;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pts = Vec::with_capacity(50);
            for _ in 0..50 {
                let t = 10f64.powf(rng.gen::<f64>() * 1.5);
                let n = 10f64.powf(rng.gen::<f64>() * 1.5 - 1.0);
                let noise = (0.01 * crate::linalg::normal01(&mut rng)).exp();
                pts.push((t, n, 5.0 * t.powf(0.8) * n.powf(0.19) * noise));
            }
            let fit = fit_powerlaw2(&pts, UnitConvention::billions()).unwrap();
            let se = fit.stderr.unwrap();
            if (fit.law.beta - 0.8).abs() <= 3.0 * se[1]
                && (fit.law.gamma - 0.19).abs() <= 3.0 * se[2]
            {
                covered += 1;
            }
        }
        assert!(
            covered as f64 >= 0.95 * trials as f64,
            "covered {covered}/{trials}"
        );
    }
}
