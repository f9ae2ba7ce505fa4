use serde::Serialize;

use super::{dev3, sym_part, EigenDecomp, Mat, SymMat};
use crate::error::{Error, Result};
use crate::formulation::{Formulation, HypothesisReport, ReportBuilder, Tolerance};

/// Principal logarithm of a symmetric positive definite matrix.
pub fn log_spd(p: &SymMat) -> Result<SymMat> {
    Ok(p.spd_certificate()?.reconstruct(f64::ln))
}

/// Positive definite square root.
pub fn sqrt_spd(p: &SymMat) -> Result<SymMat> {
    Ok(p.spd_certificate()?.reconstruct(f64::sqrt))
}

/// Factors of `Z = U H` with `U` orthogonal and `H` positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Polar {
    pub u: Mat,
    pub h: SymMat,
}

impl Polar {
    /// `||U^T U - I||_F`.
    pub fn orthogonality_residual(&self) -> f64 {
        self.u.orthogonality_defect()
    }

    /// `||U H - Z||_F / ||Z||_F`.
    pub fn reconstruction_residual(&self, z: &Mat) -> f64 {
        (self.u * *self.h.as_mat() - *z).frobenius() / z.frobenius()
    }
}

const POLAR_MAX_ITER: usize = 100;

/// Polar decomposition by the scaled Newton iteration
/// `X <- (g X + X^-T / g) / 2`, then `H = sym(U^T Z)`.
///
/// Forming `sqrt(Z^T Z)` squares the condition number; the iteration works
/// on `Z` directly and keeps the residuals at rounding level up to
/// condition numbers around 1e6 and beyond.
pub fn polar(z: &Mat) -> Result<Polar> {
    let norm = z.frobenius();
    let det = z.det();
    if !(det.abs() > 1e-12 * norm.powi(3)) {
        let cond = z.inverse().map(|inv| norm * inv.frobenius()).unwrap_or(f64::INFINITY);
        return Err(Error::domain(format!(
            "matrix is numerically singular: det = {det:e}, ||Z||_F = {norm:e}, Frobenius condition estimate {cond:e}"
        )));
    }

    let mut x = *z;
    let mut scaling = true;
    let mut converged = false;
    for _ in 0..POLAR_MAX_ITER {
        let inv_t = x.inverse()?.transpose();
        let g = if scaling { (inv_t.frobenius() / x.frobenius()).sqrt() } else { 1.0 };
        let next = (x.scale(g) + inv_t.scale(1.0 / g)).scale(0.5);
        let delta = (next - x).frobenius() / next.frobenius();
        x = next;
        if delta < 1e-2 {
            scaling = false;
        }
        if converged {
            break;
        }
        // One extra unscaled step once the update is at rounding level.
        if delta < 1e-13 {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::domain("polar iteration did not converge"));
    }

    let h = sym_part(&(x.transpose() * *z));
    h.spd_certificate()?;
    Ok(Polar { u: x, h })
}

/// Logarithmic strain `log sqrt(F^T F)`, computed as `log H` from the polar
/// factor of `F`.
pub fn hencky(f: &Mat) -> Result<SymMat> {
    log_spd(&polar(f)?.h)
}

/// Squared geodesic distance of `F / det(F)^(1/3)` to the rotations,
/// `||dev3 log sqrt(F^T F)||_F^2`.
pub fn geodesic_dist_iso_sq(f: &Mat) -> Result<f64> {
    let det = f.det();
    if !(det > 0.0) {
        return Err(Error::domain(format!("geodesic distance needs det F > 0, got {det:e}")));
    }
    Ok(dev3(hencky(f)?.as_mat())?.frobenius_sq())
}

/// Rotation matrix of the quaternion `q = (w, x, y, z)` after normalisation.
pub fn rotation_from_quaternion(q: [f64; 4]) -> Result<Mat> {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::arg("quaternion must be finite and non-zero"));
    }
    let [w, x, y, z] = q.map(|v| v / n);
    Ok(Mat::from_rows3([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]))
}

struct SpdData {
    mat: Mat,
    eig: EigenDecomp,
    det: f64,
    log_sq: f64,
}

fn spd_data(p: &SymMat) -> Result<SpdData> {
    let eig = p.spd_certificate()?;
    let det = eig.eigenvalues().iter().product();
    let log_sq = eig.reconstruct(f64::ln).as_mat().frobenius_sq();
    Ok(SpdData { mat: *p.as_mat(), eig, det, log_sq })
}

fn spd_pair(p1: &SymMat, p2: &SymMat) -> Result<(SpdData, SpdData)> {
    if p1.dim() != p2.dim() {
        return Err(Error::arg(format!("dimension mismatch: {} vs {}", p1.dim(), p2.dim())));
    }
    Ok((spd_data(p1)?, spd_data(p2)?))
}

/// Trace, cofactor trace and determinant dominance for positive definite
/// matrices, concluding `||log P1||_F^2 >= ||log P2||_F^2`.
///
/// In two dimensions the cofactor trace equals the determinant, so only the
/// trace line is reported.
pub fn check_charpol(p1: &SymMat, p2: &SymMat, tol: Tolerance) -> Result<HypothesisReport> {
    let (d1, d2) = spd_pair(p1, p2)?;
    let mut b = ReportBuilder::new(Formulation::CharPol, tol).at_least(d1.mat.trace(), d2.mat.trace());
    if p1.dim() == 3 {
        b = b.at_least(d1.mat.cof().trace(), d2.mat.cof().trace());
    }
    Ok(b.equal(d1.det, d2.det).conclude(d1.log_sq, d2.log_sq))
}

/// Frobenius norm dominance of `P` and `P^-1` for positive definite
/// matrices with equal determinants.
pub fn check_frobenius(p1: &SymMat, p2: &SymMat, tol: Tolerance) -> Result<HypothesisReport> {
    let (d1, d2) = spd_pair(p1, p2)?;
    let inv_sq = |d: &SpdData| d.eig.reconstruct(|l| 1.0 / l).as_mat().frobenius_sq();
    Ok(ReportBuilder::new(Formulation::FrobNorm, tol)
        .at_least(d1.mat.frobenius_sq(), d2.mat.frobenius_sq())
        .at_least(inv_sq(&d1), inv_sq(&d2))
        .equal(d1.det, d2.det)
        .conclude(d1.log_sq, d2.log_sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{check_squared, check_tuple3};
    use crate::matlog::eigen::tests::{random_spd, rotation};
    use crate::matlog::{expm, sym_eig};
    use crate::symtuple::PositiveTuple;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn rel(a: &Mat, b: &Mat) -> f64 {
        (*a - *b).frobenius() / b.frobenius().max(f64::MIN_POSITIVE)
    }

    fn random_rotation(rng: &mut impl Rng) -> Mat {
        rotation([rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5])
    }

    fn random_mat(rng: &mut impl Rng) -> Mat {
        let mut m = [[0.0; 3]; 3];
        for v in m.iter_mut().flatten() {
            *v = rng.random_range(-2.0..2.0);
        }
        Mat::from_rows3(m)
    }

    #[test]
    fn log_examples() {
        assert_eq!(log_spd(&SymMat::identity(3).unwrap()).unwrap().as_mat().frobenius_sq(), 0.0);
        let l = log_spd(&SymMat::diag(&[E * E, E, (-3.0f64).exp()]).unwrap()).unwrap();
        assert!(rel(l.as_mat(), &Mat::diag(&[2.0, 1.0, -3.0]).unwrap()) < 1e-15);
        assert!(log_spd(&SymMat::diag(&[1.0, 0.0, 2.0]).unwrap()).is_err());
        assert!(log_spd(&SymMat::diag(&[1.0, -1.0, 2.0]).unwrap()).is_err());
    }

    #[test]
    fn log_spd_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..2000 {
            let (p, lam) = random_spd(&mut rng, 3.0);
            let l = log_spd(&p).unwrap();
            assert!(rel(&expm(l.as_mat()), p.as_mat()) <= 1e-10);
            let want: f64 = lam.iter().map(|x| x.ln().powi(2)).sum();
            assert!((l.as_mat().frobenius_sq() - want).abs() <= 1e-10 * want);
            let inv = sym_eig(&p).reconstruct(|x| 1.0 / x);
            let linv = log_spd(&inv).unwrap();
            assert!((*linv.as_mat() + *l.as_mat()).frobenius() <= 1e-10 * l.as_mat().frobenius());
        }
    }

    #[test]
    fn polar_examples() {
        let q = rotation([0.2, 0.4, -0.1, 0.8]);
        let pq = polar(&q).unwrap();
        assert!(rel(&pq.u, &q) < 1e-14);
        assert!(rel(pq.h.as_mat(), &Mat::identity(3).unwrap()) < 1e-14);

        let (s, _) = random_spd(&mut ChaCha8Rng::seed_from_u64(3), 2.0);
        let ps = polar(s.as_mat()).unwrap();
        assert!(rel(&ps.u, &Mat::identity(3).unwrap()) < 1e-13);
        assert!(rel(ps.h.as_mat(), s.as_mat()) < 1e-13);

        let singular = Mat::from_rows3([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]]);
        let err = polar(&singular).unwrap_err().to_string();
        assert!(err.contains("singular"), "{err}");

        let refl = Mat::diag(&[1.0, 1.0, -1.0]).unwrap();
        let pr = polar(&refl).unwrap();
        assert!(rel(&pr.u, &refl) < 1e-15);
    }

    #[test]
    fn polar_residuals_up_to_condition_1e6() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for i in 0..2000 {
            let log_range = if i % 2 == 0 { 1.0 } else { 0.5 * 1e6f64.ln() };
            let (h, _) = random_spd(&mut rng, log_range);
            let z = random_rotation(&mut rng) * *h.as_mat();
            let p = polar(&z).unwrap();
            assert!(p.orthogonality_residual() <= 1e-10);
            assert!(p.reconstruction_residual(&z) <= 1e-10);
            p.h.spd_certificate().unwrap();
            assert!(rel(p.h.as_mat(), h.as_mat()) <= 1e-9);
        }
        for _ in 0..500 {
            let z = random_mat(&mut rng);
            if z.det().abs() < 1e-3 {
                continue;
            }
            let p = polar(&z).unwrap();
            assert!(p.orthogonality_residual() <= 1e-12);
            assert!(p.reconstruction_residual(&z) <= 1e-12);
        }
    }

    #[test]
    fn hencky_examples() {
        assert!(hencky(&Mat::identity(3).unwrap()).unwrap().as_mat().frobenius_sq() < 1e-30);
        let h = hencky(&Mat::diag(&[2.0, 0.5, 3.0]).unwrap()).unwrap();
        assert!(rel(h.as_mat(), &Mat::diag(&[2.0f64.ln(), 0.5f64.ln(), 3.0f64.ln()]).unwrap()) < 1e-14);
        assert!(hencky(&Mat::zeros(3).unwrap()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..500 {
            let f = random_mat(&mut rng);
            if f.det().abs() < 1e-2 {
                continue;
            }
            let h = hencky(&f).unwrap();
            let half = log_spd(&SymMat::from_upper(&(f.transpose() * f))).unwrap().as_mat().scale(0.5);
            assert!(rel(h.as_mat(), &half) <= 1e-10);
            let rotated = hencky(&(random_rotation(&mut rng) * f)).unwrap();
            let (a, b) = (rotated.as_mat().frobenius_sq(), h.as_mat().frobenius_sq());
            assert!((a - b).abs() <= 1e-10 * b.max(1e-300));
        }
    }

    #[test]
    fn geodesic_examples() {
        assert!(geodesic_dist_iso_sq(&Mat::identity(3).unwrap()).unwrap() < 1e-30);
        let q = rotation([0.1, 0.7, -0.3, 0.2]);
        assert!(geodesic_dist_iso_sq(&q).unwrap() < 1e-28);
        assert!(geodesic_dist_iso_sq(&Mat::diag(&[E, E, E]).unwrap()).unwrap() < 1e-28);
        let d = geodesic_dist_iso_sq(&Mat::diag(&[E, 1.0, 1.0 / E]).unwrap()).unwrap();
        assert!((d - 2.0).abs() <= 1e-12);
        assert!(geodesic_dist_iso_sq(&Mat::diag(&[1.0, 1.0, -1.0]).unwrap()).is_err());
        assert!(geodesic_dist_iso_sq(&Mat::identity(2).unwrap()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..300 {
            let f = random_mat(&mut rng);
            if f.det() < 1e-2 {
                continue;
            }
            let base = geodesic_dist_iso_sq(&f).unwrap();
            for alpha in [0.1, 10.0] {
                let scaled = geodesic_dist_iso_sq(&f.scale(alpha)).unwrap();
                assert!((scaled - base).abs() <= 1e-10 * base.max(1e-12));
            }
        }
    }

    #[test]
    fn quaternion_rotations_are_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..1000 {
            let q = random_rotation(&mut rng);
            assert!(q.orthogonality_defect() < 1e-14);
            assert!((q.det() - 1.0).abs() < 1e-14);
        }
        assert!(rotation_from_quaternion([0.0; 4]).is_err());
    }

    #[test]
    fn charpol_examples() {
        let tol = Tolerance::default();
        let p = SymMat::diag(&[2.0, 3.0, 0.5]).unwrap();
        let r = check_charpol(&p, &p, tol).unwrap();
        assert!(r.margins.iter().all(|&m| m == 0.0));
        assert_eq!(r.equality_defects, vec![0.0]);
        assert_eq!(r.conclusion_margin, 0.0);
        assert!(r.hypotheses_hold && r.conclusion_holds);

        let q = rotation([0.3, -0.5, 0.2, 0.6]);
        let p1 = SymMat::diag(&[6f64.exp(), 1.0, (-6f64).exp()]).unwrap().congruence(&q);
        let p2 = SymMat::diag(&[4f64.exp(), 4f64.exp(), (-8f64).exp()]).unwrap();
        let r = check_charpol(&p1, &p2, tol).unwrap();
        assert!(r.margins[0] > 0.0 && r.margins[1] < 0.0);
        assert!(!r.hypotheses_hold);
        assert!((r.conclusion_margin - (72.0 - 96.0)).abs() < 1e-10);

        let d2 = check_charpol(&SymMat::diag(&[4.0, 1.0]).unwrap(), &SymMat::diag(&[2.0, 2.0]).unwrap(), tol).unwrap();
        assert_eq!(d2.margins.len(), 1);
        assert!(d2.hypotheses_hold && d2.conclusion_holds);

        assert!(check_charpol(&p, &SymMat::identity(2).unwrap(), tol).is_err());
        assert!(check_charpol(&SymMat::diag(&[1.0, -1.0, 1.0]).unwrap(), &p, tol).is_err());
    }

    #[test]
    fn charpol_agrees_with_eigenvalue_checker() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..2000 {
            let (p1, l1) = random_spd(&mut rng, 2.0);
            let (p2, l2) = random_spd(&mut rng, 2.0);
            let m = check_charpol(&p1, &p2, tol).unwrap();
            let t = check_tuple3(&PositiveTuple::new(l1.to_vec()).unwrap(), &PositiveTuple::new(l2.to_vec()).unwrap(), tol)
                .unwrap();
            for (a, b) in m.margins.iter().zip(&t.margins).chain([(&m.conclusion_margin, &t.conclusion_margin)]) {
                assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0), "{a} vs {b}");
            }
            assert!((m.equality_defects[0] - t.equality_defects[0]).abs() <= 1e-10);
        }
    }

    #[test]
    fn frobenius_agrees_with_squared_checker() {
        // ||P^-1||^2 = e2(x^2) / e3(x^2), so with equal determinants the
        // second lines have the same sign but different scales.
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..2000 {
            let (p1, l1) = random_spd(&mut rng, 1.5);
            let (p2, l2) = random_spd(&mut rng, 1.5);
            let k = (l1.iter().product::<f64>() / l2.iter().product::<f64>()).cbrt();
            let p2 = SymMat::from_upper(&p2.as_mat().scale(k));
            let l2 = l2.map(|v| v * k);
            let m = check_frobenius(&p1, &p2, tol).unwrap();
            let s = check_squared(&PositiveTuple::new(l1.to_vec()).unwrap(), &PositiveTuple::new(l2.to_vec()).unwrap(), tol)
                .unwrap();
            for (a, b) in [(m.margins[0], s.margins[0]), (m.conclusion_margin, s.conclusion_margin)] {
                assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0), "{a} vs {b}");
            }
            let [r1, r2] = [m.relative_margins()[1], s.relative_margins()[1]];
            if r1.abs() > 1e-9 && r2.abs() > 1e-9 {
                assert_eq!(r1 > 0.0, r2 > 0.0);
            }
        }
        let p = SymMat::diag(&[2.0, 0.5, 1.0]).unwrap();
        let r = check_frobenius(&p, &p, tol).unwrap();
        assert!(r.margins.iter().all(|&m| m == 0.0) && r.conclusion_margin == 0.0);
    }
}
