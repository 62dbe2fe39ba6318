//! Small dense linear-algebra helpers for the SGD oracle.
//!
//! Matrices are row-major `Vec<f64>` of a stated dimension; everything is
//! sized for dimensions in the tens, not thousands.

use rand::Rng;

pub(crate) fn matvec(m: &[f64], dim: usize, v: &[f64], out: &mut [f64]) {
    for i in 0..dim {
        let row = &m[i * dim..(i + 1) * dim];
        out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn quadratic_form(m: &[f64], dim: usize, v: &[f64]) -> f64 {
    let mut mv = vec![0.0; dim];
    matvec(m, dim, v, &mut mv);
    dot(v, &mv)
}

/// trace(A * B) for symmetric row-major matrices.
pub(crate) fn trace_product(a: &[f64], b: &[f64], dim: usize) -> f64 {
    let mut tr = 0.0;
    for i in 0..dim {
        for k in 0..dim {
            tr += a[i * dim + k] * b[k * dim + i];
        }
    }
    tr
}

pub(crate) fn is_symmetric(m: &[f64], dim: usize, tol: f64) -> bool {
    for i in 0..dim {
        for j in (i + 1)..dim {
            if (m[i * dim + j] - m[j * dim + i]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored as
/// row-major columns (`v[i*dim + j]` is component `i` of eigenvector `j`),
/// eigenvalues ascending.
pub(crate) fn eigh(m: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = m.to_vec();
    let mut v = vec![0.0; dim * dim];
    for i in 0..dim {
        v[i * dim + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..dim {
            for j in (i + 1)..dim {
                off += a[i * dim + j] * a[i * dim + j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&a, dim)) {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p * dim + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - s * vkq;
                    v[k * dim + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| a[i * dim + i].partial_cmp(&a[j * dim + j]).unwrap());
    let eigvals: Vec<f64> = order.iter().map(|&i| a[i * dim + i]).collect();
    let mut eigvecs = vec![0.0; dim * dim];
    for (jnew, &jold) in order.iter().enumerate() {
        for i in 0..dim {
            eigvecs[i * dim + jnew] = v[i * dim + jold];
        }
    }
    (eigvals, eigvecs)
}

fn frobenius(m: &[f64], dim: usize) -> f64 {
    m.iter().take(dim * dim).map(|x| x * x).sum::<f64>().sqrt()
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
pub(crate) fn invert_small(m: &[f64], dim: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; dim * dim];
    for i in 0..dim {
        inv[i * dim + i] = 1.0;
    }
    for col in 0..dim {
        let piv = (col..dim).max_by(|&i, &j| {
            a[i * dim + col]
                .abs()
                .partial_cmp(&a[j * dim + col].abs())
                .unwrap()
        })?;
        if a[piv * dim + col].abs() < 1e-300 {
            return None;
        }
        for k in 0..dim {
            a.swap(col * dim + k, piv * dim + k);
            inv.swap(col * dim + k, piv * dim + k);
        }
        let diag = a[col * dim + col];
        for k in 0..dim {
            a[col * dim + k] /= diag;
            inv[col * dim + k] /= diag;
        }
        for row in 0..dim {
            if row == col {
                continue;
            }
            let f = a[row * dim + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..dim {
                a[row * dim + k] -= f * a[col * dim + k];
                inv[row * dim + k] -= f * inv[col * dim + k];
            }
        }
    }
    Some(inv)
}

/// Random orthogonal matrix via Gram-Schmidt on a Gaussian matrix.
pub(crate) fn random_orthogonal<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for _ in 0..dim {
        loop {
            let mut c: Vec<f64> = (0..dim).map(|_| normal01(rng)).collect();
            for prev in &cols {
                let proj = dot(&c, prev);
                for (ci, pi) in c.iter_mut().zip(prev) {
                    *ci -= proj * pi;
                }
            }
            let norm = dot(&c, &c).sqrt();
            if norm > 1e-8 {
                for ci in &mut c {
                    *ci /= norm;
                }
                cols.push(c);
                break;
            }
        }
    }
    let mut q = vec![0.0; dim * dim];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..dim {
            q[i * dim + j] = col[i];
        }
    }
    q
}

/// Standard normal draw via the Box-Muller transform.
///
/// Uses two uniform draws per sample; with a counter-based generator the
/// stream stays reproducible regardless of call pattern.
pub(crate) fn normal01<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_recovers_diagonal() {
        let m = vec![3.0, 0.0, 0.0, 1.0];
        let (vals, _) = eigh(&m, 2);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dim = 6;
        let q = random_orthogonal(dim, &mut rng);
        let eigs: Vec<f64> = (0..dim).map(|i| (i + 1) as f64 * 0.5).collect();
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = 0.0;
                for k in 0..dim {
                    acc += q[i * dim + k] * eigs[k] * q[j * dim + k];
                }
                m[i * dim + j] = acc;
            }
        }
        let (vals, vecs) = eigh(&m, dim);
        for (i, v) in vals.iter().enumerate() {
            assert!((v - eigs[i]).abs() < 1e-9, "eig {i}: {v} vs {}", eigs[i]);
        }
        // V diag(vals) V^T reproduces m
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = 0.0;
                for k in 0..dim {
                    acc += vecs[i * dim + k] * vals[k] * vecs[j * dim + k];
                }
                assert!((acc - m[i * dim + j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dim = 8;
        let q = random_orthogonal(dim, &mut rng);
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = 0.0;
                for k in 0..dim {
                    acc += q[k * dim + i] * q[k * dim + j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((acc - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invert_small_round_trip() {
        let m = vec![2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.5];
        let inv = invert_small(&m, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += m[i * 3 + k] * inv[k * 3 + j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((acc - expect).abs() < 1e-12);
            }
        }
        let singular = vec![1.0, 2.0, 2.0, 4.0];
        assert!(invert_small(&singular, 2).is_none());
    }

    #[test]
    fn normal_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let z = normal01(&mut rng);
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
