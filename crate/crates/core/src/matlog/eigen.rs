use serde::Serialize;

use super::{Mat, SymMat};

const MAX_SWEEPS: usize = 60;

/// Eigenvalues sorted non-increasing, with orthonormal eigenvectors stored
/// as the columns of `vectors`. Entries of `values` past `dim` are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenDecomp {
    pub values: [f64; 3],
    pub vectors: Mat,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values[..self.dim()]
    }

    /// `V diag(f(lambda)) V^T`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let n = self.dim();
        let v = &self.vectors;
        let fl: Vec<f64> = self.eigenvalues().iter().map(|&l| f(l)).collect();
        let mut out = Mat::zeros(n).expect("valid dim");
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n).map(|k| v.a[i][k] * fl[k] * v.a[j][k]).sum();
                out.a[i][j] = s;
            }
        }
        SymMat::from_upper(&out)
    }
}

/// A pair is negligible when it cannot change either diagonal entry in
/// relative terms; this gives small eigenvalues full relative accuracy on
/// positive definite input.
fn negligible(a: &[[f64; 3]; 3], p: usize, q: usize, norm: f64) -> bool {
    let apq = a[p][q].abs();
    apq <= f64::EPSILON * 0.5 * (a[p][p].abs() * a[q][q].abs()).sqrt() || apq <= 1e-300_f64.max(norm * 1e-30)
}

/// `a + b` as an unevaluated pair `(hi, lo)`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Compensated `sum_i x_i y_i`, accurate to about `eps^2 sum |x_i y_i|`.
fn dot2(x: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (mut hi, mut lo) = (0.0, 0.0);
    for (a, b) in x {
        let p = a * b;
        let e = a.mul_add(b, -p);
        let (s, c) = two_sum(hi, p);
        hi = s;
        lo += c + e;
    }
    hi + lo
}

/// Rayleigh quotient `v^T S v / v^T v` for column `k` of `v`, evaluated in
/// compensated arithmetic. Its error is second order in the eigenvector
/// error, which keeps small eigenvalues of ill-conditioned matrices
/// accurate to near working precision.
fn rayleigh(s: &[[f64; 3]; 3], v: &[[f64; 3]; 3], k: usize, n: usize) -> f64 {
    let mut hi = 0.0;
    let mut lo = 0.0;
    for i in 0..n {
        for j in 0..n {
            // s_ij v_ik v_jk with both roundings carried into `lo`.
            let p = s[i][j] * v[i][k];
            let pe = s[i][j].mul_add(v[i][k], -p);
            let q = p * v[j][k];
            let qe = p.mul_add(v[j][k], -q) + pe * v[j][k];
            let (t, c) = two_sum(hi, q);
            hi = t;
            lo += c + qe;
        }
    }
    let norm = dot2((0..n).map(|i| (v[i][k], v[i][k])));
    (hi + lo) / norm
}

/// Cyclic Jacobi eigendecomposition, with each eigenvalue refined as a
/// compensated Rayleigh quotient of its eigenvector.
///
/// Eigenvalues are sorted non-increasing. Each eigenvector is signed so that
/// its largest-magnitude component is positive (first such index on ties).
pub fn sym_eig(s: &SymMat) -> EigenDecomp {
    let n = s.dim();
    let mut a = s.as_mat().a;
    let mut v = Mat::identity(n).expect("valid dim").a;
    let norm = s.as_mat().frobenius();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                if negligible(&a, p, q, norm) {
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    continue;
                }
                rotated = true;
                let apq = a[p][q];
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                a[p][p] -= t * apq;
                a[q][q] += t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let (arp, arq) = (a[r][p], a[r][q]);
                        a[r][p] = c * arp - sn * arq;
                        a[p][r] = a[r][p];
                        a[r][q] = sn * arp + c * arq;
                        a[q][r] = a[r][q];
                    }
                }
                for row in v.iter_mut().take(n) {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - sn * vq;
                    row[q] = sn * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let s0 = s.as_mat().a;
    for k in 0..n {
        a[k][k] = rayleigh(&s0, &v, k, n);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let mut values = [0.0; 3];
    let mut vectors = Mat::zeros(n).expect("valid dim");
    for (col, &k) in order.iter().enumerate() {
        values[col] = a[k][k];
        let mut lead = 0;
        for i in 1..n {
            if v[i][k].abs() > v[lead][k].abs() {
                lead = i;
            }
        }
        let sign = if v[lead][k] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors.a[i][col] = sign * v[i][k];
        }
    }
    EigenDecomp { values, vectors }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::symtuple::elem_sym_all;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Rotation from a unit quaternion built out of arbitrary components.
    pub(crate) fn rotation(q: [f64; 4]) -> Mat {
        crate::matlog::rotation_from_quaternion(q).unwrap()
    }

    /// Roots of `x^3 - c1 x^2 + c2 x - c3` for a real-rooted cubic, by the
    /// trigonometric formula, sorted non-increasing.
    fn cubic_roots(c1: f64, c2: f64, c3: f64) -> [f64; 3] {
        let shift = c1 / 3.0;
        let p = c2 - c1 * c1 / 3.0;
        let q = -2.0 * c1.powi(3) / 27.0 + c1 * c2 / 3.0 - c3;
        // depressed: t^3 + p t + q = 0 with x = t + shift
        let m = 2.0 * (-p / 3.0).max(0.0).sqrt();
        let arg = if m == 0.0 { 0.0 } else { (3.0 * q / (p * m)).clamp(-1.0, 1.0) };
        let theta = arg.acos() / 3.0;
        let mut r = [0.0; 3];
        for (k, v) in r.iter_mut().enumerate() {
            *v = shift + m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
        }
        r.sort_by(|x, y| y.total_cmp(x));
        r
    }

    pub(crate) fn random_spd(rng: &mut impl Rng, log_range: f64) -> (SymMat, [f64; 3]) {
        let mut lam = [0.0; 3];
        for l in lam.iter_mut() {
            *l = rng.random_range(-log_range..log_range).exp();
        }
        let q = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, 0.5];
        (SymMat::diag(&lam).unwrap().congruence(&rotation(q)), lam)
    }

    fn check_decomp(s: &SymMat, eig: &EigenDecomp) {
        let n = s.dim();
        let v = eig.vectors;
        assert!(v.orthogonality_defect() <= 1e-12, "V^T V - I = {:e}", v.orthogonality_defect());
        let rec = *eig.reconstruct(|l| l).as_mat() - *s.as_mat();
        assert!(rec.frobenius() <= 1e-12 * s.as_mat().frobenius().max(f64::MIN_POSITIVE));
        for w in eig.eigenvalues().windows(2) {
            assert!(w[0] >= w[1]);
        }
        for col in 0..n {
            let lead = (0..n).map(|i| v.get(i, col)).fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn identity_and_diagonal() {
        let eig = sym_eig(&SymMat::identity(3).unwrap());
        assert_eq!(eig.eigenvalues(), &[1.0, 1.0, 1.0]);
        assert_eq!(eig.vectors, Mat::identity(3).unwrap());
        let eig = sym_eig(&SymMat::diag(&[0.25, 4.0, 1.0]).unwrap());
        assert_eq!(eig.eigenvalues(), &[4.0, 1.0, 0.25]);
        let eig = sym_eig(&SymMat::diag(&[3.0, -2.0]).unwrap());
        assert_eq!(eig.eigenvalues(), &[3.0, -2.0]);
    }

    #[test]
    fn random_spd_matches_cubic_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let (s, _) = random_spd(&mut rng, 1.5);
            let eig = sym_eig(&s);
            check_decomp(&s, &eig);
            let m = s.as_mat();
            let roots = cubic_roots(m.trace(), m.cof().trace(), m.det());
            for (got, want) in eig.eigenvalues().iter().zip(roots) {
                assert!((got - want).abs() <= 1e-10 * want.abs(), "{got} vs {want}");
            }
        }
    }

    #[test]
    fn relative_accuracy_on_ill_conditioned_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..2000 {
            let (s, mut lam) = random_spd(&mut rng, 0.5 * (1e6f64).ln());
            lam.sort_by(|x, y| y.total_cmp(x));
            let eig = sym_eig(&s);
            check_decomp(&s, &eig);
            for (got, want) in eig.eigenvalues().iter().zip(lam) {
                assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn spectral_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let (s, _) = random_spd(&mut rng, 3.0);
            let eig = sym_eig(&s);
            let e = elem_sym_all(eig.eigenvalues());
            let m = s.as_mat();
            for (got, want) in [m.trace(), m.cof().trace(), m.det()].iter().zip(&e[1..]) {
                assert!((got - want).abs() <= 1e-10 * want.abs());
            }
        }
    }

    #[test]
    fn repeated_and_indefinite_spectra() {
        let q = rotation([0.3, -0.2, 0.9, 0.1]);
        for lam in [[2.0, 2.0, 2.0], [5.0, 1.0, 1.0], [-1.0, 0.0, 3.0], [0.0, 0.0, 0.0]] {
            let s = SymMat::diag(&lam).unwrap().congruence(&q);
            let eig = sym_eig(&s);
            check_decomp(&s, &eig);
        }
    }

    proptest! {
        #[test]
        fn arbitrary_symmetric(upper in prop::array::uniform6(-10.0f64..10.0)) {
            let m = Mat::from_rows3([
                [upper[0], upper[1], upper[2]],
                [0.0, upper[3], upper[4]],
                [0.0, 0.0, upper[5]],
            ]);
            let s = SymMat::from_upper(&m);
            check_decomp(&s, &sym_eig(&s));
        }

        #[test]
        fn arbitrary_symmetric_2d(upper in prop::array::uniform3(-10.0f64..10.0)) {
            let s = SymMat::from_upper(&Mat::from_rows2([[upper[0], upper[1]], [0.0, upper[2]]]));
            check_decomp(&s, &sym_eig(&s));
        }
    }
}
