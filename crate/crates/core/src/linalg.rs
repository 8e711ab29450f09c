//! Dense symmetric eigensolver and Hermitian matrix functions.
//!
//! The real solver is the classic two-stage scheme: Householder reduction to
//! tridiagonal form followed by the implicitly shifted QL iteration
//! (EISPACK `tred2`/`tql2`). Complex Hermitian matrices `A + iB` are handled
//! through the real symmetric embedding `[[A, -B], [B, A]]`, whose spectrum is
//! that of the Hermitian matrix with every eigenvalue doubled and whose matrix
//! functions embed the Hermitian matrix functions.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default cap on QL sweeps spent on a single eigenvalue.
pub const DEFAULT_QL_ITERATIONS: usize = 60;

#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Row `k` is the unit eigenvector of `values[k]`.
    pub vectors: Array2<f64>,
}

impl SymmetricEigen {
    /// Decompose a row-major `n x n` symmetric matrix.
    pub fn new(matrix: &[f64], n: usize) -> Result<Self> {
        Self::with_iteration_cap(matrix, n, DEFAULT_QL_ITERATIONS)
    }

    pub fn with_iteration_cap(matrix: &[f64], n: usize, max_iterations: usize) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: matrix.len(),
            });
        }
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: Array2::zeros((0, 0)),
            });
        }
        let mut v = matrix.to_vec();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        tred2(&mut v, &mut d, &mut e, n);

        // rows of `z` are the accumulated columns of the transformation
        let mut z = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                z[c * n + r] = v[r * n + c];
            }
        }
        tql2(&mut z, &mut d, &mut e, n, max_iterations)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let values = order.iter().map(|&k| d[k]).collect();
        let mut vectors = Array2::zeros((n, n));
        for (row, &k) in order.iter().enumerate() {
            vectors
                .row_mut(row)
                .iter_mut()
                .zip(&z[k * n..(k + 1) * n])
                .for_each(|(dst, &src)| *dst = src);
        }
        Ok(Self { values, vectors })
    }
}

fn tred2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    let at = |r: usize, c: usize| r * n + c;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].fill(0.0);

            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(z: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize, max_iterations: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iterations {
                    return Err(Error::NoConvergence {
                        index: l,
                        iterations: max_iterations,
                        residual: e[l].abs(),
                    });
                }

                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[l + 2..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn embed(m: &Array2<Complex64>) -> (Vec<f64>, usize) {
    let n = m.nrows();
    let w = 2 * n;
    let mut r = vec![0.0; w * w];
    for i in 0..n {
        for j in 0..n {
            let z = m[[i, j]];
            r[i * w + j] = z.re;
            r[(i + n) * w + j + n] = z.re;
            r[i * w + j + n] = -z.im;
            r[(i + n) * w + j] = z.im;
        }
    }
    (r, w)
}

fn is_real(m: &Array2<Complex64>) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn check_square(m: &Array2<Complex64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &Array2<Complex64>) -> Result<Vec<f64>> {
    check_square(m)?;
    let n = m.nrows();
    if is_real(m) {
        let dense: Vec<f64> = m.iter().map(|z| z.re).collect();
        return Ok(SymmetricEigen::new(&dense, n)?.values);
    }
    let (r, w) = embed(m);
    let vals = SymmetricEigen::new(&r, w)?.values;
    // doubled spectrum: average each adjacent pair
    Ok(vals.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// `f(M)` for Hermitian `M`, applied through its eigendecomposition.
pub fn hermitian_function(m: &Array2<Complex64>, f: impl Fn(f64) -> f64) -> Result<Array2<Complex64>> {
    check_square(m)?;
    let n = m.nrows();
    if is_real(m) {
        let dense: Vec<f64> = m.iter().map(|z| z.re).collect();
        let eig = SymmetricEigen::new(&dense, n)?;
        let fv: Vec<f64> = eig.values.iter().map(|&x| f(x)).collect();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| eig.vectors[[k, i]] * fv[k] * eig.vectors[[k, j]]).sum();
                out[[i, j]] = Complex64::new(s, 0.0);
            }
        }
        return Ok(out);
    }
    let (r, w) = embed(m);
    let eig = SymmetricEigen::new(&r, w)?;
    let fv: Vec<f64> = eig.values.iter().map(|&x| f(x)).collect();
    let entry = |i: usize, j: usize| -> f64 { (0..w).map(|k| eig.vectors[[k, i]] * fv[k] * eig.vectors[[k, j]]).sum() };
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = Complex64::new(entry(i, j), entry(i + n, j));
        }
    }
    Ok(out)
}
