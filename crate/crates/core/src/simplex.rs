//! Plain Nelder-Mead simplex minimizer.

pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of the
/// given per-coordinate scale. Stops when the relative spread of simplex
/// values drops below `tol`, the best value reaches `abs_floor`, or the
/// iteration budget runs out.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    scale: f64,
    max_iters: usize,
    tol: f64,
    abs_floor: f64,
) -> SimplexResult {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += scale;
        pts.push(p);
    }
    let mut fvals: Vec<f64> = pts.iter().map(|p| f(p)).collect();

    let mut iters = 0;
    let mut converged = false;
    while iters < max_iters {
        iters += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| {
            fvals[i]
                .partial_cmp(&fvals[j])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = (fvals[worst] - fvals[best]).abs();
        if fvals[best] <= abs_floor || spread <= tol * (fvals[best].abs().max(1e-30)) {
            converged = true;
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for (c, p) in centroid.iter_mut().zip(&pts[i]) {
                *c += p / n as f64;
            }
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&pts[worst])
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let f_reflect = f(&reflect);

        if f_reflect < fvals[best] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&pts[worst])
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            let f_expand = f(&expand);
            if f_expand < f_reflect {
                pts[worst] = expand;
                fvals[worst] = f_expand;
            } else {
                pts[worst] = reflect;
                fvals[worst] = f_reflect;
            }
        } else if f_reflect < fvals[second_worst] {
            pts[worst] = reflect;
            fvals[worst] = f_reflect;
        } else {
            let contract: Vec<f64> = if f_reflect < fvals[worst] {
                centroid
                    .iter()
                    .zip(&reflect)
                    .map(|(c, r)| c + rho * (r - c))
                    .collect()
            } else {
                centroid
                    .iter()
                    .zip(&pts[worst])
                    .map(|(c, w)| c + rho * (w - c))
                    .collect()
            };
            let f_contract = f(&contract);
            if f_contract < fvals[worst].min(f_reflect) {
                pts[worst] = contract;
                fvals[worst] = f_contract;
            } else {
                // shrink toward the best vertex
                let best_pt = pts[best].clone();
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    for (p, b) in pts[i].iter_mut().zip(&best_pt) {
                        *p = b + sigma * (*p - b);
                    }
                    fvals[i] = f(&pts[i]);
                }
            }
        }
    }

    let (mut bi, mut bf) = (0, fvals[0]);
    for (i, &v) in fvals.iter().enumerate() {
        if v < bf {
            bi = i;
            bf = v;
        }
    }
    SimplexResult {
        x: pts[bi].clone(),
        fx: bf,
        iters,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_shifted_quadratic() {
        let f = |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2) + 2.0;
        let r = nelder_mead(f, &[0.0, 0.0], 0.5, 2000, 1e-14, 0.0);
        assert!(r.converged);
        assert!((r.x[0] - 1.5).abs() < 1e-6);
        assert!((r.x[1] + 0.5).abs() < 1e-6);
        assert!((r.fx - 2.0).abs() < 1e-10);
    }

    #[test]
    fn minimizes_rosenbrock_with_restarts() {
        let f = |x: &[f64]| {
            let a = 1.0 - x[0];
            let b = x[1] - x[0] * x[0];
            a * a + 100.0 * b * b
        };
        let mut best = nelder_mead(f, &[-1.2, 1.0], 0.5, 4000, 1e-15, 0.0);
        for _ in 0..3 {
            let r = nelder_mead(f, &best.x, 0.05, 4000, 1e-15, 0.0);
            if r.fx < best.fx {
                best = r;
            }
        }
        assert!((best.x[0] - 1.0).abs() < 1e-5, "{:?}", best.x);
        assert!((best.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn absolute_floor_stops_early() {
        let f = |x: &[f64]| (x[0] - 2.0).powi(2);
        let r = nelder_mead(f, &[0.0], 0.5, 10_000, 1e-300, 1e-6);
        assert!(r.converged);
        assert!(r.fx <= 1e-6);
        assert!(r.iters < 10_000);
    }
}
