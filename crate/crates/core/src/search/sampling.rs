//! Seed derivation and the random draws used by the campaigns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matlog::{rotation_from_quaternion, sym_eig, Mat, SymMat};
use crate::symtuple::{elem_sym_all, PositiveTuple};

/// SplitMix64 output function.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for stream `index` of a campaign seeded with `seed`:
/// `splitmix64(seed ^ splitmix64(index))`.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Generator for one trial. Every trial owns its stream, so results do not
/// depend on how trials are grouped into shards or threads.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, trial))
}

fn centered_logs(n: usize, rng: &mut impl Rng, spread: f64) -> Vec<f64> {
    let mut z: Vec<f64> = (0..n)
        .map(|_| spread * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();
    let mean = z.iter().sum::<f64>() / n as f64;
    for v in &mut z {
        *v -= mean;
    }
    z
}

/// Two tuples of length `n` whose logarithms are independent
/// `Normal(0, spread)` draws shifted to mean zero, so both products are 1.
pub fn sample_equal_product_pair(n: usize, rng: &mut impl Rng, spread: f64) -> Result<(PositiveTuple, PositiveTuple)> {
    if n < 2 {
        return Err(Error::arg(format!("tuple length must be at least 2, got {n}")));
    }
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(Error::arg(format!("spread must be positive and finite, got {spread}")));
    }
    let y = PositiveTuple::from_logs(&centered_logs(n, rng, spread))?;
    let a = PositiveTuple::from_logs(&centered_logs(n, rng, spread))?;
    Ok((y, a))
}

/// Attempts per trial before the premise-respecting sampler gives up and
/// returns its last candidate.
pub const THEOREM3_ATTEMPTS: usize = 8;

fn dominates_e1_e2(y: &[f64], a: &[f64]) -> bool {
    let (ey, ea) = (elem_sym_all(y), elem_sym_all(a));
    ey[1] >= ea[1] && ey[2] >= ea[2]
}

/// Pair `(y, a)` of positive triples with equal products where `y` is
/// built from `a` to make `e1(y) >= e1(a)` and `e2(y) >= e2(a)` likely.
///
/// `a` has mean-zero `Normal(0, spread)` logs. Each attempt either pushes
/// the extreme log-coordinates of `a` apart (largest up by `d1`, smallest
/// down by `d2`, the middle one absorbing the difference so the sum of logs
/// is unchanged) or, with probability 1/4, adds a generic mean-zero
/// perturbation. Step sizes are `|Normal(0, spread)|` scaled by a
/// log-uniform factor in `[1e-3, 1]`, which also exercises near-equality.
/// The first attempt meeting both dominance conditions is returned.
pub fn sample_theorem3_pair(rng: &mut impl Rng, spread: f64) -> Result<(PositiveTuple, PositiveTuple)> {
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(Error::arg(format!("spread must be positive and finite, got {spread}")));
    }
    let la = centered_logs(3, rng, spread);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| la[i].total_cmp(&la[j]));
    let [lo, mid, hi] = order;
    let a_vals: Vec<f64> = la.iter().map(|v| v.exp()).collect();
    let total: f64 = la.iter().sum();

    let mut ly = la.clone();
    for _ in 0..THEOREM3_ATTEMPTS {
        let size = spread * 10f64.powf(rng.random_range(-3.0..0.0));
        let generic = rng.random_bool(0.25);
        let mut normal = || size * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        ly = la.clone();
        if generic {
            let d = [normal(), normal(), normal()];
            let mean = (d[0] + d[1] + d[2]) / 3.0;
            for (v, dv) in ly.iter_mut().zip(d) {
                *v += dv - mean;
            }
        } else {
            ly[hi] += normal().abs();
            ly[lo] -= normal().abs();
            ly[mid] = total - ly[hi] - ly[lo];
        }
        let y_vals: Vec<f64> = ly.iter().map(|v| v.exp()).collect();
        if dominates_e1_e2(&y_vals, &a_vals) {
            break;
        }
    }
    Ok((PositiveTuple::from_logs(&ly)?, PositiveTuple::new(a_vals)?))
}

/// Rotation drawn uniformly from SO(3): a normalised vector of four
/// standard normals read as a unit quaternion.
pub fn random_rotation(rng: &mut impl Rng) -> Mat {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        if let Ok(r) = rotation_from_quaternion(q) {
            return r;
        }
    }
}

/// Spectral condition number `sigma_max / sigma_min`.
pub fn condition_number(z: &Mat) -> f64 {
    let eig = sym_eig(&SymMat::from_upper(&(z.transpose() * *z)));
    let v = eig.eigenvalues();
    let (hi, lo) = (v[0], v[v.len() - 1]);
    if lo > 0.0 {
        (hi / lo).sqrt()
    } else {
        f64::INFINITY
    }
}

/// Draws for a random matrix before giving up on the condition bound.
const MATRIX_ATTEMPTS: usize = 1000;

/// 3x3 matrix with standard normal entries, first column negated when
/// needed so that `det > 0`, redrawn until its condition number is at most
/// `max_cond`.
pub fn random_invertible(rng: &mut impl Rng, max_cond: f64) -> Result<Mat> {
    for _ in 0..MATRIX_ATTEMPTS {
        let mut z = Mat::from_rows3(std::array::from_fn(|_| std::array::from_fn(|_| StandardNormal.sample(rng))));
        if z.det() < 0.0 {
            for i in 0..3 {
                z.set(i, 0, -z.get(i, 0));
            }
        }
        if z.det() > 0.0 && condition_number(&z) <= max_cond {
            return Ok(z);
        }
    }
    Err(Error::arg(format!("no matrix with condition <= {max_cond} after {MATRIX_ATTEMPTS} draws")))
}
