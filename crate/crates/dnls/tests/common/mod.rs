#![allow(dead_code)]

use dnls::grid::{fourier, inverse_fourier};
use dnls::{ComplexField, C64};

/// Strang split-step for i u_t = -u_xx / 2 + lambda |u|^2 u with the standard FFT.
pub fn free_split_step(u0: &ComplexField, lambda: f64, dt: f64, t: f64) -> ComplexField {
    let steps = (t / dt).round() as usize;
    let g = u0.grid;
    let phase = |u: &mut ComplexField, tau: f64| {
        for v in u.values.iter_mut() {
            *v *= C64::from_polar(1.0, -lambda * tau * v.norm_sqr());
        }
    };
    let mut u = u0.clone();
    for _ in 0..steps {
        phase(&mut u, 0.5 * dt);
        let f = fourier(&u)
            .unwrap()
            .map(|j, v| v * C64::from_polar(1.0, -0.5 * dt * g.xi(j).powi(2)));
        u = inverse_fourier(&f).unwrap();
        phase(&mut u, 0.5 * dt);
    }
    u
}

/// One-sided fourth-order derivative at node `k` looking in direction `dir` (+1 or -1),
/// using every `stride`-th node.
pub fn one_sided_derivative(u: &ComplexField, k: usize, dir: i64, stride: usize) -> C64 {
    let c = [-25.0, 48.0, -36.0, 16.0, -3.0];
    let h = u.grid.dx() * stride as f64;
    let s: C64 = (0..5)
        .map(|m| u.values[(k as i64 + dir * (m * stride) as i64) as usize] * c[m])
        .sum();
    s * (dir as f64) / (12.0 * h)
}
