//! Symmetric eigensolver: Householder reduction to tridiagonal form followed
//! by the implicit-shift QL iteration.
//!
//! Follows the classic `tred2` / `tqli` pair (Numerical Recipes, 11.2-11.3),
//! with eigenvector accumulation optional.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

const MAX_QL_ITERATIONS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// All eigenvalues of a symmetric matrix, ascending. Only the lower
/// triangle is read.
pub fn symmetric_eigenvalues(m: &SquareMatrix) -> Result<Vec<f64>> {
    let (mut values, _) = solve(m, false)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Eigenvalues (ascending) with their eigenvectors.
pub fn symmetric_eigen(m: &SquareMatrix) -> Result<SymmetricEigen> {
    let (values, z) = solve(m, true)?;
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(SymmetricEigen {
        values: order.iter().map(|&k| values[k]).collect(),
        vectors: order.iter().map(|&k| (0..n).map(|row| z[row][k]).collect()).collect(),
    })
}

fn solve(m: &SquareMatrix, vectors: bool) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.size();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut a = m.rows();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut a, &mut d, &mut e, vectors);
    tridiagonal_ql(&mut d, &mut e, &mut a, vectors)?;
    Ok((d, a))
}

/// Householder reduction. On return `d` holds the diagonal, `e[1..]` the
/// sub-diagonal, and `a` the orthogonal transform when `vectors` is set.
fn tridiagonalize(a: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64], vectors: bool) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = a[i][..=l].iter().map(|v| v.abs()).sum();
            if scale == 0.0 {
                e[i] = a[i][l];
            } else {
                for k in 0..=l {
                    a[i][k] /= scale;
                    h += a[i][k] * a[i][k];
                }
                let f = a[i][l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i][l] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    if vectors {
                        a[j][i] = a[i][j] / h;
                    }
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j][k] * a[i][k];
                    }
                    for k in (j + 1)..=l {
                        g += a[k][j] * a[i][k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i][j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i][j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j][k] -= f * e[k] + g * a[i][k];
                    }
                }
            }
        } else {
            e[i] = a[i][l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if vectors {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += a[i][k] * a[k][j];
                    }
                    for k in 0..i {
                        let aki = a[k][i];
                        a[k][j] -= g * aki;
                    }
                }
            }
            d[i] = a[i][i];
            a[i][i] = 1.0;
            for j in 0..i {
                a[j][i] = 0.0;
                a[i][j] = 0.0;
            }
        } else {
            d[i] = a[i][i];
        }
    }
}

/// Implicit QL on the tridiagonal `(d, e)`; eigenvalues land in `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [Vec<f64>], vectors: bool) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence(MAX_QL_ITERATIONS));
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if vectors {
                    for row in z.iter_mut() {
                        let f = row[i + 1];
                        row[i + 1] = s * row[i] + c * f;
                        row[i] = c * row[i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
