use super::Mat;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant. Used mainly to check logarithms.
pub fn expm(m: &Mat) -> Mat {
    let n = m.dim();
    let id = Mat::identity(n).expect("valid dim");
    let norm = m.norm1();
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = m.scale(0.5f64.powi(s));
    let b = &PADE13;

    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let u_inner = a6 * (a6 * b[13] + a4 * b[11] + a2 * b[9]) + a6 * b[7] + a4 * b[5] + a2 * b[3] + id * b[1];
    let u = a * u_inner;
    let v = a6 * (a6 * b[12] + a4 * b[10] + a2 * b[8]) + a6 * b[6] + a4 * b[4] + a2 * b[2] + id * b[0];

    let mut r = (v - u).solve(&(v + u)).expect("Padé denominator is invertible after scaling");
    for _ in 0..s {
        r = r * r;
    }
    r
}
