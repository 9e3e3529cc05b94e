//! Cached rustfft plans plus the chirp-z evaluator used for off-grid interpolation.

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type Pair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn cache() -> &'static Mutex<HashMap<usize, Pair>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Pair>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Forward and inverse plans for length `n` (unnormalized, rustfft sign convention).
pub fn plans(n: usize) -> Pair {
    let mut map = cache().lock().unwrap();
    map.entry(n)
        .or_insert_with(|| {
            let mut p = FftPlanner::new();
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        })
        .clone()
}

/// In-place forward DFT: X_j = sum_k x_k e^{-2 pi i jk/n}.
pub fn forward(buf: &mut [C64]) {
    plans(buf.len()).0.process(buf);
}

/// In-place inverse DFT without the 1/n factor.
pub fn inverse(buf: &mut [C64]) {
    plans(buf.len()).1.process(buf);
}

/// e^{i phase} with phase = k * base computed after reducing k*base mod 2 pi in two parts,
/// which keeps large integer multiples accurate.
#[inline]
pub fn cis_mul(k: f64, base: f64) -> C64 {
    let two_pi = std::f64::consts::TAU;
    let ph = (k * base) % two_pi;
    C64::from_polar(1.0, ph)
}

/// Evaluate sum_{m=-n/2}^{n/2-1} c[m + n/2] e^{i m j theta} for j = 0..count (Bluestein).
pub fn chirp_sum(c: &[C64], theta: f64, count: usize) -> Vec<C64> {
    let n = c.len();
    if count == 0 {
        return Vec::new();
    }
    let half = (n / 2) as i64;
    let half_theta = 0.5 * theta;
    let chirp = |k: i64| cis_mul((k * k) as f64, half_theta);
    let d_min = half + 1 - n as i64;
    let len_b = n + count - 1;
    let p = len_b.next_power_of_two();
    let mut a = vec![C64::new(0.0, 0.0); p];
    for (idx, cv) in c.iter().enumerate() {
        let m = idx as i64 - half;
        a[idx] = cv * chirp(m);
    }
    let mut b = vec![C64::new(0.0, 0.0); p];
    for (i, bv) in b.iter_mut().enumerate().take(len_b) {
        *bv = chirp(d_min + i as i64).conj();
    }
    forward(&mut a);
    forward(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inverse(&mut a);
    let scale = 1.0 / p as f64;
    (0..count)
        .map(|j| a[j + n - 1] * scale * chirp(j as i64))
        .collect()
}

/// sum_k c_k e^{i sign (w0 + j dw)(x0 + k dx)} for j = 0..count, by one chirp-z transform.
pub fn dtft(c: &[C64], x0: f64, dx: f64, w0: f64, dw: f64, count: usize, sign: f64) -> Vec<C64> {
    let n = c.len();
    if n == 0 {
        return vec![C64::new(0.0, 0.0); count];
    }
    let half = n / 2;
    let pre: Vec<C64> = c
        .iter()
        .enumerate()
        .map(|(k, v)| v * cis_mul(k as f64, sign * w0 * dx))
        .collect();
    let sums = chirp_sum(&pre, sign * dw * dx, count);
    sums.into_iter()
        .enumerate()
        .map(|(j, s)| {
            let outer = sign * (w0 + j as f64 * dw) * x0;
            s * C64::from_polar(1.0, outer % std::f64::consts::TAU)
                * cis_mul((j * half) as f64, sign * dw * dx)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dtft_matches_direct_sum() {
        let c: Vec<C64> = (0..37)
            .map(|k| C64::new((k as f64 * 0.3).sin(), 1.0 / (1.0 + k as f64)))
            .collect();
        let (x0, dx, w0, dw) = (-1.7, 0.11, 3.2, -0.45);
        for sign in [1.0, -1.0] {
            let fast = dtft(&c, x0, dx, w0, dw, 23, sign);
            for (j, f) in fast.iter().enumerate() {
                let w = w0 + j as f64 * dw;
                let direct: C64 = c
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * C64::from_polar(1.0, sign * w * (x0 + k as f64 * dx)))
                    .sum();
                assert!((f - direct).norm() < 1e-12, "{j} {f} {direct}");
            }
        }
    }
}
