use num_complex::Complex64 as C;

use super::{log_spd, Mat, SymMat};
use crate::error::{Error, Result};

/// Largest accepted condition number of the eigenvector matrix.
pub const MAX_EIGENVECTOR_CONDITION: f64 = 1e8;

/// Eigenvalues within this distance (relative to the spectral radius) of
/// the closed negative real axis are rejected.
const BRANCH_CUT_TOL: f64 = 1e-10;

/// Eigenvalues closer than this (relative to the spectral radius) are
/// treated as one repeated eigenvalue.
const CLUSTER_TOL: f64 = 1e-5;

/// `M - lambda I` counts as zero below this (relative to `||M||_F`).
const SCALAR_TOL: f64 = 1e-10;

/// Ratio of the second to the first singular value of `M - lambda I` below
/// which it counts as rank one.
const RANK_TOL: f64 = 1e-8;

type CMat = [[C; 3]; 3];

/// Principal logarithm of a real matrix that is diagonalizable over the
/// complex numbers and has no eigenvalue on the closed negative real axis.
///
/// Symmetric input goes through the symmetric eigensolver. Otherwise the
/// eigenvalues come from the characteristic polynomial, polished by Newton
/// steps, and `log M = V diag(log lambda) V^-1` is evaluated in complex
/// arithmetic. Conjugate eigenpairs make the result real up to rounding.
pub fn log_real_diagonalizable(m: &Mat) -> Result<Mat> {
    let n = m.dim();
    let norm = m.frobenius();
    if norm == 0.0 {
        return Err(Error::domain("zero matrix has no logarithm"));
    }
    if m.is_symmetric(1e-14) {
        return log_spd(&SymMat::from_upper(m))
            .map(Mat::from)
            .map_err(|_| Error::domain("symmetric matrix with a non-positive eigenvalue has no real principal logarithm"));
    }

    let mut lambda = eigenvalues(m);
    let rho = lambda[..n].iter().map(|l| l.norm()).fold(0.0, f64::max);
    for l in &lambda[..n] {
        if l.norm() <= 1e-14 * norm {
            return Err(Error::domain(format!("matrix is singular (eigenvalue {l})")));
        }
        if l.im.abs() <= BRANCH_CUT_TOL * rho && l.re <= 0.0 {
            return Err(Error::domain(format!("eigenvalue {l} lies on the closed negative real axis")));
        }
    }

    let v = eigenvectors(m, &mut lambda[..n])?;
    let vinv = cinverse(&v, n).ok_or_else(|| Error::domain("eigenvector matrix is singular (defective matrix)"))?;
    let cond = cfrob(&v, n) * cfrob(&vinv, n);
    if !(cond <= MAX_EIGENVECTOR_CONDITION) {
        return Err(Error::domain(format!(
            "eigenvector matrix condition {cond:e} exceeds {MAX_EIGENVECTOR_CONDITION:e} (defective or nearly defective)"
        )));
    }

    let logs: Vec<C> = lambda[..n].iter().map(|l| l.ln()).collect();
    let mut out = Mat::zeros(n)?;
    let mut imag = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let s: C = (0..n).map(|k| v[i][k] * logs[k] * vinv[k][j]).sum();
            out.a[i][j] = s.re;
            imag = imag.max(s.im.abs());
        }
    }
    if imag > 1e-8 * out.frobenius().max(1.0) {
        return Err(Error::domain(format!("logarithm has an imaginary part of size {imag:e}")));
    }
    Ok(out)
}

fn poly_eval(coef: &[f64], x: C) -> (C, C) {
    // Horner with derivative; coefficients highest degree first.
    let mut p = C::new(0.0, 0.0);
    let mut dp = C::new(0.0, 0.0);
    for &c in coef {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn polish(coef: &[f64], mut x: C) -> C {
    for _ in 0..8 {
        let (p, dp) = poly_eval(coef, x);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let next = x - step;
        if !(next.norm().is_finite()) || poly_eval(coef, next).0.norm() > p.norm() {
            break;
        }
        x = next;
        if step.norm() <= f64::EPSILON * x.norm() {
            break;
        }
    }
    x
}

fn quadratic_roots(b: f64, c: f64) -> [C; 2] {
    // x^2 + b x + c
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [C::new(0.0, 0.0), C::new(0.0, 0.0)];
        }
        [C::new(q, 0.0), C::new(c / q, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [C::new(-0.5 * b, im), C::new(-0.5 * b, -im)]
    }
}

/// Eigenvalues from the characteristic polynomial. Complex roots come in
/// exact conjugate pairs.
fn eigenvalues(m: &Mat) -> [C; 3] {
    let zero = C::new(0.0, 0.0);
    if m.dim() == 2 {
        let [r0, r1] = quadratic_roots(-m.trace(), m.det());
        let coef = [1.0, -m.trace(), m.det()];
        if r0.im == 0.0 {
            return [polish(&coef, r0), polish(&coef, r1), zero];
        }
        return [r0, r1, zero];
    }
    let coef = [1.0, -m.trace(), m.cof().trace(), -m.det()];
    let bound = 1.0 + coef[1..].iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    // A real cubic has a real root; bracket it and bisect.
    let f = |x: f64| ((x + coef[1]) * x + coef[2]) * x + coef[3];
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = polish(&coef, C::new(0.5 * (lo + hi), 0.0)).re;
    let b = r + coef[1];
    let c = coef[2] + r * b;
    let [q0, q1] = quadratic_roots(b, c);
    if q0.im == 0.0 {
        [C::new(r, 0.0), polish(&coef, q0), polish(&coef, q1)]
    } else {
        let p = polish(&coef, q0);
        [C::new(r, 0.0), p, p.conj()]
    }
}

fn shifted(m: &Mat, l: C) -> CMat {
    let mut b = [[C::new(0.0, 0.0); 3]; 3];
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            b[i][j] = C::new(m.a[i][j], 0.0) - if i == j { l } else { C::new(0.0, 0.0) };
        }
    }
    b
}

fn cross(u: &[C; 3], v: &[C; 3]) -> [C; 3] {
    [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
}

fn vnorm(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Real orthonormal basis of the complement of `r` (3D).
fn complement(r: &[f64; 3]) -> [[f64; 3]; 2] {
    let k = (0..3).min_by(|&i, &j| r[i].abs().total_cmp(&r[j].abs())).expect("three entries");
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let rn = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u = [r[0] / rn, r[1] / rn, r[2] / rn];
    let c1 = [u[1] * e[2] - u[2] * e[1], u[2] * e[0] - u[0] * e[2], u[0] * e[1] - u[1] * e[0]];
    let n1 = c1.iter().map(|x| x * x).sum::<f64>().sqrt();
    let c1 = c1.map(|x| x / n1);
    let c2 = [u[1] * c1[2] - u[2] * c1[1], u[2] * c1[0] - u[0] * c1[2], u[0] * c1[1] - u[1] * c1[0]];
    [c1, c2]
}

/// Replaces each cluster of nearly equal real eigenvalues by its mean and
/// returns the cluster sizes. The mean of a cluster is accurate even when
/// the individual roots of a multiple root are not.
fn snap_clusters(lambda: &mut [C]) -> Vec<usize> {
    let n = lambda.len();
    let rho = lambda.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let mut group: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if (lambda[i] - lambda[j]).norm() <= CLUSTER_TOL * rho {
                group[i] = group[j];
                break;
            }
        }
    }
    let mut sizes = vec![0; n];
    for g in 0..n {
        let members: Vec<usize> = (0..n).filter(|&k| group[k] == g).collect();
        if members.is_empty() {
            continue;
        }
        let mean = members.iter().map(|&k| lambda[k]).sum::<C>() / members.len() as f64;
        for &k in &members {
            if members.len() > 1 {
                lambda[k] = C::new(mean.re, 0.0);
            }
            sizes[k] = members.len();
        }
    }
    sizes
}

fn defective() -> Error {
    Error::domain("matrix is defective: a repeated eigenvalue has too few eigenvectors")
}

fn unit(n: usize, k: usize) -> Vec<C> {
    let mut e = vec![C::new(0.0, 0.0); n];
    e[k] = C::new(1.0, 0.0);
    e
}

/// Eigenvector columns for the given eigenvalues.
fn eigenvectors(m: &Mat, lambda: &mut [C]) -> Result<CMat> {
    let n = m.dim();
    let zero = C::new(0.0, 0.0);
    let mut v = [[zero; 3]; 3];
    let scale = m.frobenius();
    let sizes = snap_clusters(lambda);
    for k in 0..n {
        let l = lambda[k];
        // Position of this eigenvalue within its cluster.
        let pos = lambda[..k].iter().filter(|&&o| o == l).count();
        let b = shifted(m, l);
        let rows: Vec<[C; 3]> = b[..n].to_vec();
        let row_max = rows.iter().map(|r| vnorm(&r[..n])).fold(0.0, f64::max);
        let vanishes = row_max <= SCALAR_TOL * scale;
        let col: Vec<C> = match (n, sizes[k]) {
            (_, s) if s == n => {
                if !vanishes {
                    return Err(defective());
                }
                unit(n, pos)
            }
            (2, _) => {
                let c0 = [-b[0][1], b[0][0]];
                let c1 = [-b[1][1], b[1][0]];
                if vnorm(&c0) >= vnorm(&c1) { c0.to_vec() } else { c1.to_vec() }
            }
            (_, size) => {
                let crosses = [cross(&rows[0], &rows[1]), cross(&rows[0], &rows[2]), cross(&rows[1], &rows[2])];
                let best = crosses
                    .iter()
                    .max_by(|x, y| vnorm(&x[..]).total_cmp(&vnorm(&y[..])))
                    .expect("three candidates");
                let rank_two = vnorm(&best[..]) > RANK_TOL * row_max * row_max;
                if size == 1 {
                    best.to_vec()
                } else if rank_two {
                    return Err(defective());
                } else {
                    // Two-dimensional eigenspace orthogonal to the dominant row.
                    let r = rows
                        .iter()
                        .max_by(|x, y| vnorm(&x[..]).total_cmp(&vnorm(&y[..])))
                        .expect("three rows");
                    let basis = complement(&[r[0].re, r[1].re, r[2].re]);
                    basis[pos.min(1)].iter().map(|&x| C::new(x, 0.0)).collect()
                }
            }
        };
        let nrm = vnorm(&col);
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::domain("could not compute an eigenvector"));
        }
        for i in 0..n {
            v[i][k] = col[i] / nrm;
        }
    }
    Ok(v)
}

fn cfrob(m: &CMat, n: usize) -> f64 {
    (0..n).flat_map(|i| (0..n).map(move |j| m[i][j].norm_sqr())).sum::<f64>().sqrt()
}

fn cinverse(m: &CMat, n: usize) -> Option<CMat> {
    let zero = C::new(0.0, 0.0);
    let mut a = *m;
    let mut inv = [[zero; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate().take(n) {
        row[i] = C::new(1.0, 0.0);
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].norm().total_cmp(&a[s][col].norm()))?;
        if a[pivot][col].norm() <= 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                for j in 0..n {
                    let (ac, ic) = (a[col][j], inv[col][j]);
                    a[r][j] -= f * ac;
                    inv[r][j] -= f * ic;
                }
            }
        }
    }
    Some(inv)
}
