use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::array::{Array, Scalar};

/// Scaled-uniform fan-in init: U(-gain/sqrt(fan_in), +gain/sqrt(fan_in)).
pub fn fan_in_uniform<T: Scalar>(
    rng: &mut ChaCha8Rng,
    shape: &[usize],
    fan_in: usize,
    gain: f64,
) -> Array<T> {
    let bound = gain / (fan_in.max(1) as f64).sqrt();
    let data: Vec<T> =
        (0..shape.iter().product()).map(|_| T::from_f64(rng.gen_range(-bound..bound))).collect();
    Array::from_vec(shape, data)
}

/// Square-or-wide orthogonal init via Gram-Schmidt on a Gaussian matrix,
/// computed in f64 regardless of target precision.
pub fn orthogonal<T: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, gain: f64) -> Array<T> {
    assert!(rows <= cols || cols <= rows, "orthogonal init needs a 2-d shape");
    // Orthonormalize the smaller dimension's vectors.
    let (n, m, transpose) = if rows <= cols { (rows, cols, false) } else { (cols, rows, true) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..m).map(|_| gaussian(rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // degenerate draw, resample
        }
        for vi in &mut v {
            *vi /= norm;
        }
        basis.push(v);
    }
    let mut data = vec![T::zero(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let v = if transpose { basis[c][r] } else { basis[r][c] };
            data[r * cols + c] = T::from_f64(gain * v);
        }
    }
    Array::from_vec(&[rows, cols], data)
}

/// Box-Muller standard normal.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen::<f64>();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let u2: f64 = rng.gen::<f64>();
        return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    }
}
