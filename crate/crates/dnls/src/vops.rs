//! The operators V(t) = D(t)^{-1} M(t)^{-1} F_q^{-1} e^{-it xi^2/2} and V(t)^{-1}, a direct
//! kernel quadrature for checking them, and their stationary-phase approximants.
//!
//! The fast path evaluates F_q^{-1} at the dilated points x = t y through the split
//! K(x, xi) = e^{ix xi} + R(|xi|) e^{i|x||xi|}: one full-line and one half-line trapezoid sum
//! on a refined symmetric grid, each computed by a single chirp-z transform. The half-line sum
//! has a jump at the origin, so it carries the first Euler-Maclaurin endpoint term.

use crate::error::{Error, Result};
use crate::fft::dtft;
use crate::fresnel::fr_unchecked;
use crate::grid::{eval_equispaced, ComplexField, GridSpec, Norm, Space};
use crate::scattering::ScatteringCoeffs;
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_PI_4, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    FastComposition,
    KernelOracle,
    Approximant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VApplication {
    pub t: f64,
    pub mode: Mode,
}

impl VApplication {
    pub fn new(t: f64, mode: Mode) -> Self {
        Self { t, mode }
    }
}

/// Inputs whose magnitude is below this fraction of the peak are ignored by the oracle guard.
const SUPPORT_FLOOR: f64 = 1e-14;
/// psi(0) counts as zero below this fraction of ||psi||_{H^1}.
const ZERO_AT_ORIGIN: f64 = 1e-8;

/// Samples of a position field on the symmetric grid s_i = (i - k) h, zero outside the box.
struct Fine {
    h: f64,
    k: usize,
    vals: Vec<C64>,
}

impl Fine {
    fn new(f: &ComplexField, h: f64) -> Result<Self> {
        let l = f.grid.half_length();
        let k = (l / h).ceil() as usize;
        let mut vals = eval_equispaced(f, -(k as f64) * h, h, 2 * k + 1)?;
        for (i, v) in vals.iter_mut().enumerate() {
            if (i as f64 - k as f64).abs() * h >= l {
                *v = C64::new(0.0, 0.0);
            }
        }
        Ok(Self { h, k, vals })
    }

    fn s(&self, i: usize) -> f64 {
        (i as f64 - self.k as f64) * self.h
    }

    fn at_zero(&self) -> C64 {
        self.vals[self.k]
    }

    /// f(s) + f(-s) for s = j h, j = 0..=k, with half weight folded into j = 0.
    fn even_half(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.k + 1);
        out.push(self.vals[self.k]);
        for j in 1..=self.k {
            out.push(self.vals[self.k + j] + self.vals[self.k - j]);
        }
        out
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "t must be positive and finite, got {t}"
        )));
    }
    Ok(())
}

fn check_input(f: &ComplexField) -> Result<()> {
    f.expect_space(Space::Position)?;
    f.check_finite()?;
    f.check_boundary(1e-8)
}

/// |x_j| = |j - N/2| dx on `g`, as an index into a table over m = 0..=N/2.
fn abs_index(g: &GridSpec, j: usize) -> usize {
    (j as i64 - g.zero_index() as i64).unsigned_abs() as usize
}

#[derive(Debug, Clone, Copy)]
pub struct VOperators {
    coeffs: ScatteringCoeffs,
}

impl VOperators {
    pub fn new(coeffs: ScatteringCoeffs) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &ScatteringCoeffs {
        &self.coeffs
    }

    fn fine_step(&self, t: f64, input: &GridSpec, out: &GridSpec) -> f64 {
        let reach = input.half_length().max(out.half_length());
        (input.dx() / 4.0)
            .min(1.0 / (4.0 * t * reach))
            .min(self.coeffs.q() / 4.0)
    }

    pub fn apply_v(&self, app: VApplication, psi: &ComplexField) -> Result<ComplexField> {
        match app.mode {
            Mode::FastComposition => self.v_on(app.t, psi, psi.grid),
            Mode::KernelOracle => {
                let ys = psi.grid.xs();
                let vals = self.v_oracle_at(app.t, psi, &ys)?;
                ComplexField::new(psi.grid, vals, Space::Position)
            }
            Mode::Approximant => self.approx_v(app.t, psi),
        }
    }

    pub fn apply_vinv(&self, app: VApplication, phi: &ComplexField) -> Result<ComplexField> {
        match app.mode {
            Mode::FastComposition => self.vinv_on(app.t, phi, phi.grid),
            Mode::KernelOracle => {
                let xis = phi.grid.xs();
                let vals = self.vinv_oracle_at(app.t, phi, &xis)?;
                ComplexField::new(phi.grid, vals, Space::Position)
            }
            Mode::Approximant => self.approx_vinv(app.t, phi),
        }
    }

    /// V(t) psi sampled on the nodes of `out`.
    pub fn v_on(&self, t: f64, psi: &ComplexField, out: GridSpec) -> Result<ComplexField> {
        check_time(t)?;
        check_input(psi)?;
        let c = &self.coeffs;
        let fine = Fine::new(psi, self.fine_step(t, &psi.grid, &out))?;
        let h = fine.h;
        let a: Vec<C64> = (0..fine.vals.len())
            .map(|i| {
                let s = fine.s(i);
                fine.vals[i] * C64::from_polar(1.0, (-0.5 * t * s * s) % (2.0 * PI))
            })
            .collect();
        let dy = out.dx();
        let full = dtft(&a, fine.s(0), h, t * out.x(0), t * dy, out.len(), 1.0);
        let b: Vec<C64> = fine
            .even_half()
            .into_iter()
            .enumerate()
            .map(|(j, v)| {
                let s = j as f64 * h;
                v * c.reflection(s) * C64::from_polar(1.0, (-0.5 * t * s * s) % (2.0 * PI))
            })
            .collect();
        let half = dtft(&b, 0.0, h, 0.0, t * dy, out.len() / 2 + 1, 1.0);
        let psi0 = fine.at_zero();
        let pre = (t / (2.0 * PI)).sqrt() * C64::from_polar(1.0, FRAC_PI_4);
        let vals = (0..out.len())
            .map(|j| {
                let y = out.x(j);
                let m = abs_index(&out, j);
                let em = h * h / 12.0 * C64::new(0.0, -t * y.abs() - 1.0 / c.q()) * 2.0 * psi0;
                let phase = C64::from_polar(1.0, (-0.5 * t * y * y) % (2.0 * PI));
                pre * phase * (h * (full[j] + half[m]) + em)
            })
            .collect();
        ComplexField::new(out, vals, Space::Position)
    }

    /// V(t)^{-1} phi sampled on the nodes of `out`.
    pub fn vinv_on(&self, t: f64, phi: &ComplexField, out: GridSpec) -> Result<ComplexField> {
        check_time(t)?;
        check_input(phi)?;
        let c = &self.coeffs;
        let fine = Fine::new(phi, self.fine_step(t, &phi.grid, &out))?;
        let h = fine.h;
        let chirp = |s: f64| C64::from_polar(1.0, (0.5 * t * s * s) % (2.0 * PI));
        let b: Vec<C64> = (0..fine.vals.len())
            .map(|i| fine.vals[i] * chirp(fine.s(i)))
            .collect();
        let dxi = out.dx();
        let full = dtft(&b, fine.s(0), h, t * out.x(0), t * dxi, out.len(), -1.0);
        let e: Vec<C64> = fine
            .even_half()
            .into_iter()
            .enumerate()
            .map(|(j, v)| v * chirp(j as f64 * h))
            .collect();
        let half = dtft(&e, 0.0, h, 0.0, t * dxi, out.len() / 2 + 1, -1.0);
        let phi0 = fine.at_zero();
        let pre = (t / (2.0 * PI)).sqrt() * C64::from_polar(1.0, -FRAC_PI_4);
        let vals = (0..out.len())
            .map(|j| {
                let xi = out.x(j);
                let m = abs_index(&out, j);
                let em = h * h / 12.0 * C64::new(0.0, -t * xi.abs()) * 2.0 * phi0;
                let r = c.reflection(xi.abs()).conj();
                pre * chirp(xi) * (h * full[j] + r * (h * half[m] + em))
            })
            .collect();
        ComplexField::new(out, vals, Space::Position)
    }

    fn guard(&self, t: f64, f: &ComplexField, points: &[f64]) -> Result<()> {
        let floor = SUPPORT_FLOOR * f.max_abs();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (k, v) in f.values.iter().enumerate() {
            if v.norm() > floor {
                lo = lo.min(f.grid.x(k));
                hi = hi.max(f.grid.x(k));
            }
        }
        if lo > hi {
            return Ok(());
        }
        let spread = points
            .iter()
            .map(|&p| (p - lo).abs().max((p - hi).abs()))
            .fold(0.0, f64::max);
        let step = t * f.grid.dx() * spread;
        if step > FRAC_PI_4 {
            return Err(Error::OracleResolution { step });
        }
        Ok(())
    }

    /// Trapezoid quadrature of the V(t) kernel over the input nodes, at the points `ys`.
    pub fn v_oracle_at(&self, t: f64, psi: &ComplexField, ys: &[f64]) -> Result<Vec<C64>> {
        check_time(t)?;
        check_input(psi)?;
        self.guard(t, psi, ys)?;
        let g = psi.grid;
        let pre = (t / (2.0 * PI)).sqrt() * C64::from_polar(1.0, FRAC_PI_4) * g.dx();
        let refl: Vec<C64> = (0..g.len())
            .map(|k| self.coeffs.reflection(g.x(k).abs()))
            .collect();
        Ok(ys
            .iter()
            .map(|&y| {
                let s: C64 = (0..g.len())
                    .map(|k| {
                        let xi = g.x(k);
                        let d1 = y - xi;
                        let d2 = y.abs() - xi.abs();
                        (C64::from_polar(1.0, -0.5 * t * d1 * d1)
                            + refl[k] * C64::from_polar(1.0, -0.5 * t * d2 * d2))
                            * psi.values[k]
                    })
                    .sum();
                pre * s
            })
            .collect())
    }

    /// Trapezoid quadrature of the V(t)^{-1} kernel over the input nodes, at the points `xis`.
    pub fn vinv_oracle_at(&self, t: f64, phi: &ComplexField, xis: &[f64]) -> Result<Vec<C64>> {
        check_time(t)?;
        check_input(phi)?;
        self.guard(t, phi, xis)?;
        let g = phi.grid;
        let pre = (t / (2.0 * PI)).sqrt() * C64::from_polar(1.0, -FRAC_PI_4) * g.dx();
        Ok(xis
            .iter()
            .map(|&xi| {
                let r = self.coeffs.reflection(xi.abs()).conj();
                let s: C64 = (0..g.len())
                    .map(|k| {
                        let y = g.x(k);
                        let d1 = y - xi;
                        let d2 = y.abs() - xi.abs();
                        (C64::from_polar(1.0, 0.5 * t * d1 * d1)
                            + r * C64::from_polar(1.0, 0.5 * t * d2 * d2))
                            * phi.values[k]
                    })
                    .sum();
                pre * s
            })
            .collect())
    }

    /// T(|y|) psi(y) + R(|y|) psi(-y) + 2 Fr(sqrt t |y|) psi(0).
    pub fn approx_v(&self, t: f64, psi: &ComplexField) -> Result<ComplexField> {
        check_time(t)?;
        psi.expect_space(Space::Position)?;
        let g = psi.grid;
        let psi0 = psi.values[g.zero_index()];
        let st = t.sqrt();
        Ok(psi.map(|k, v| {
            let y = g.x(k).abs();
            self.coeffs.transmission(y) * v
                + self.coeffs.reflection(y) * psi.values[g.mirror(k)]
                + 2.0 * fr_unchecked(st * y) * psi0
        }))
    }

    /// conj(T) phi(xi) + conj(R) phi(-xi) + 2 conj(Fr(sqrt t |xi|)) phi(0).
    pub fn approx_vinv(&self, t: f64, phi: &ComplexField) -> Result<ComplexField> {
        check_time(t)?;
        phi.expect_space(Space::Position)?;
        let g = phi.grid;
        let phi0 = phi.values[g.zero_index()];
        let st = t.sqrt();
        Ok(phi.map(|k, v| {
            let xi = g.x(k).abs();
            self.coeffs.transmission(xi).conj() * v
                + self.coeffs.reflection(xi).conj() * phi.values[g.mirror(k)]
                + 2.0 * fr_unchecked(st * xi).conj() * phi0
        }))
    }

    /// ||V(t) psi||_{H^1-dot} / ||psi||_{H^1}; psi must vanish at the origin.
    pub fn h1_growth_v(&self, t: f64, psi: &ComplexField) -> Result<f64> {
        let h1 = psi.norm(Norm::H1)?;
        let psi0 = psi.values[psi.grid.zero_index()].norm();
        if psi0 > ZERO_AT_ORIGIN * h1 {
            return Err(Error::Precondition(format!(
                "psi(0) = {psi0:.3e} is not zero (||psi||_H1 = {h1:.3e})"
            )));
        }
        let v = self.v_on(t, psi, psi.grid)?;
        Ok(v.norm(Norm::H1dot)? / h1)
    }

    /// ||V(t)^{-1} phi||_{H^1-dot} / (sqrt t |phi(0)| + ||phi||_{H^1}), on an output grid fine
    /// enough to resolve the e^{it xi^2/2} oscillation across the box.
    pub fn h1_growth_vinv(&self, t: f64, phi: &ComplexField) -> Result<f64> {
        let w = self.vinv_h1dot(t, phi)?;
        let phi0 = phi.values[phi.grid.zero_index()].norm();
        Ok(w / (t.sqrt() * phi0 + phi.norm(Norm::H1)?))
    }

    /// ||V(t)^{-1} phi||_{H^1-dot} on the resolved output grid.
    pub fn vinv_h1dot(&self, t: f64, phi: &ComplexField) -> Result<f64> {
        check_time(t)?;
        let l = phi.grid.half_length();
        let need = (8.0 * t * l * l / PI).ceil() as usize;
        let out = GridSpec::new(l, need.next_power_of_two().max(phi.grid.len()))?;
        self.vinv_on(t, phi, out)?.norm(Norm::H1dot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(q: f64) -> VOperators {
        VOperators::new(ScatteringCoeffs::new(q).unwrap())
    }

    fn gaussian(g: GridSpec) -> ComplexField {
        ComplexField::from_fn(g, |x| C64::new((-x * x / 2.0).exp(), 0.0))
    }

    fn odd(g: GridSpec) -> ComplexField {
        ComplexField::from_fn(g, |x| {
            C64::new(x * (-x * x).exp(), 0.3 * x * (-x * x / 2.0).exp())
        })
    }

    fn inner(g: &GridSpec, r: f64) -> Vec<usize> {
        (0..g.len()).filter(|&k| g.x(k).abs() <= r).collect()
    }

    #[test]
    fn fast_path_matches_oracle() {
        let g = GridSpec::new(8.0, 4096).unwrap();
        let o = ops(1.0);
        for f in [gaussian(g), odd(g)] {
            for t in [1.0, 10.0] {
                let idx = inner(&g, 3.0);
                let pts: Vec<f64> = idx.iter().map(|&k| g.x(k)).collect();
                let fast = o.v_on(t, &f, g).unwrap();
                let orc = o.v_oracle_at(t, &f, &pts).unwrap();
                let e = idx
                    .iter()
                    .zip(&orc)
                    .map(|(&k, v)| (fast.values[k] - v).norm())
                    .fold(0.0, f64::max);
                assert!(e < 1e-4, "V t={t} err {e:.2e}");
                let fast = o.vinv_on(t, &f, g).unwrap();
                let orc = o.vinv_oracle_at(t, &f, &pts).unwrap();
                let e = idx
                    .iter()
                    .zip(&orc)
                    .map(|(&k, v)| (fast.values[k] - v).norm())
                    .fold(0.0, f64::max);
                assert!(e < 1e-4, "Vinv t={t} err {e:.2e}");
            }
        }
    }

    #[test]
    fn oracle_refuses_unresolved_phase() {
        let g = GridSpec::new(8.0, 512).unwrap();
        let f = gaussian(g);
        let r = ops(1.0).v_oracle_at(100.0, &f, &g.xs());
        assert!(matches!(r, Err(Error::OracleResolution { step }) if step > FRAC_PI_4));
        assert!(ops(1.0).v_oracle_at(0.5, &f, &[0.0, 1.0]).is_ok());
    }

    #[test]
    fn inverse_vanishes_at_zero_and_inverts() {
        let g = GridSpec::new(8.0, 1024).unwrap();
        let o = ops(1.0);
        for t in [1.0, 10.0, 100.0] {
            let f = gaussian(g);
            let w = o.vinv_on(t, &f, g).unwrap();
            assert!(w.values[g.zero_index()].norm() < 1e-12, "t={t}");
        }
        let f = odd(g);
        let t = 3.0;
        let back = o.vinv_on(t, &o.v_on(t, &f, g).unwrap(), g).unwrap();
        let e = back.max_diff(&f);
        assert!(e < 1e-6, "{e:.2e}");
    }

    #[test]
    fn norm_preserved_for_input_vanishing_at_zero() {
        let g = GridSpec::new(8.0, 1024).unwrap();
        let o = ops(2.0);
        let f = odd(g);
        for t in [1.0, 10.0, 100.0] {
            let v = o.v_on(t, &f, g).unwrap();
            let rel = (v.l2() - f.l2()).abs() / f.l2();
            assert!(rel < 1e-6, "t={t} {rel:.2e}");
        }
    }

    #[test]
    fn approximants_improve_with_time() {
        let g = GridSpec::new(8.0, 1024).unwrap();
        let o = ops(1.0);
        let f = gaussian(g);
        let err = |t: f64| {
            o.v_on(t, &f, g)
                .unwrap()
                .max_diff(&o.approx_v(t, &f).unwrap())
        };
        let erri = |t: f64| {
            o.vinv_on(t, &f, g)
                .unwrap()
                .max_diff(&o.approx_vinv(t, &f).unwrap())
        };
        assert!(err(1000.0) < 0.5 * err(10.0));
        assert!(erri(1000.0) < 0.5 * erri(10.0));
    }

    #[test]
    fn growth_checks() {
        let g = GridSpec::new(8.0, 1024).unwrap();
        let o = ops(1.0);
        assert!(matches!(
            o.h1_growth_v(1.0, &gaussian(g)),
            Err(Error::Precondition(_))
        ));
        for t in [1.0, 10.0, 100.0] {
            let r = o.h1_growth_v(t, &odd(g)).unwrap();
            assert!(r < 3.0, "t={t} {r}");
            let r = o.h1_growth_vinv(t, &gaussian(g)).unwrap();
            assert!(r < 3.0, "t={t} {r}");
        }
    }

    #[test]
    fn rejects_bad_time() {
        let g = GridSpec::new(8.0, 256).unwrap();
        let f = gaussian(g);
        assert!(matches!(ops(1.0).v_on(0.0, &f, g), Err(Error::Domain(_))));
        assert!(matches!(
            ops(1.0).vinv_on(f64::NAN, &f, g),
            Err(Error::Domain(_))
        ));
    }
}
