//! Long-time analysis of a stored run: the diagonalised 2x2 system for (w, w(-.)), the
//! phase-corrected variables g_j, the asymptotic profile W and its residuals.
//!
//! All fields here live on the velocity grid (the dual of the run grid, as a position
//! field). V(t) w(t) is never recomputed from w: it is read off the solution through
//! [V w](y) = (it)^{1/2} e^{-ity^2/2} u(ty).

use crate::dft::DistortedPlan;
use crate::error::{Error, Result};
use crate::grid::{eval_equispaced, ComplexField, GridSpec, Norm, Space};
use crate::propagator::{dilation_factor, StoredSnapshot};
use crate::rates::{fit_rate, RateFit};
use crate::scattering::ScatteringCoeffs;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

/// Residuals are taken over |y| <= REGION * (half-length of the valid box).
pub const REGION: f64 = 0.8;
pub const MIN_PROFILE_TIME: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SMatrixField {
    pub grid: GridSpec,
    pub s1: Vec<C64>,
    pub s2: Vec<C64>,
}

impl SMatrixField {
    pub fn new(grid: GridSpec, coeffs: &ScatteringCoeffs) -> Self {
        let (s1, s2) = (0..grid.len()).map(|k| coeffs.s_vector(grid.x(k))).unzip();
        Self { grid, s1, s2 }
    }

    /// B = (S1, conj S2; -S2, conj S1) at node k.
    pub fn b(&self, k: usize) -> [[C64; 2]; 2] {
        let (a, b) = (self.s1[k], self.s2[k]);
        [[a, b.conj()], [-b, a.conj()]]
    }

    /// max over nodes of the entrywise deviation of B*B from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| {
                let p = mul(&adjoint(&self.b(k)), &self.b(k));
                max_entry(&[[p[0][0] - 1.0, p[0][1]], [p[1][0], p[1][1] - 1.0]])
            })
            .fold(0.0, f64::max)
    }
}

type M2 = [[C64; 2]; 2];

fn adjoint(m: &M2) -> M2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

fn mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn max_entry(m: &M2) -> f64 {
    m.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AMatrixField {
    pub grid: GridSpec,
    pub a11: Vec<C64>,
    pub a12: Vec<C64>,
    pub a21: Vec<C64>,
    pub a22: Vec<C64>,
}

impl AMatrixField {
    pub fn at(&self, k: usize) -> M2 {
        [[self.a11[k], self.a12[k]], [self.a21[k], self.a22[k]]]
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| {
                (self.a21[k] - self.a12[k].conj())
                    .norm()
                    .max(self.a11[k].im.abs())
                    .max(self.a22[k].im.abs())
            })
            .fold(0.0, f64::max)
    }

    /// B* A B at node k.
    pub fn diagonalized(&self, s: &SMatrixField, k: usize) -> M2 {
        let b = s.b(k);
        mul(&adjoint(&b), &mul(&self.at(k), &b))
    }
}

fn check_velocity(s: &SMatrixField, w: &ComplexField) -> Result<()> {
    w.expect_space(Space::Position)?;
    s.grid.check(&w.grid)
}

pub fn assemble_a(s: &SMatrixField, w: &ComplexField) -> Result<AMatrixField> {
    check_velocity(s, w)?;
    let g = s.grid;
    let n = g.len();
    let (mut a11, mut a12, mut a21, mut a22) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for k in 0..n {
        let (s1, s2) = (s.s1[k], s.s2[k]);
        let (w0, wr) = (w.values[k], w.values[g.mirror(k)]);
        let p = (s1 * w0 + s2 * wr).norm_sqr();
        let m = (s1 * wr + s2 * w0).norm_sqr();
        a11.push(C64::from(p * s1.norm_sqr() + m * s2.norm_sqr()));
        a12.push(p * s1.conj() * s2 + m * s2.conj() * s1);
        a21.push(p * s1 * s2.conj() + m * s2 * s1.conj());
        a22.push(C64::from(p * s2.norm_sqr() + m * s1.norm_sqr()));
    }
    Ok(AMatrixField {
        grid: g,
        a11,
        a12,
        a21,
        a22,
    })
}

/// (f1, f2) = B* (w, w(-.)) nodewise.
pub fn to_f(s: &SMatrixField, w: &ComplexField) -> Result<(ComplexField, ComplexField)> {
    check_velocity(s, w)?;
    let g = s.grid;
    let f1 = w.map(|k, v| s.s1[k].conj() * v - s.s2[k].conj() * w.values[g.mirror(k)]);
    let f2 = w.map(|k, v| s.s2[k] * v + s.s1[k] * w.values[g.mirror(k)]);
    Ok((f1, f2))
}

/// Inverse of `to_f`: (w, w(-.)) = B f.
pub fn from_f(
    s: &SMatrixField,
    f1: &ComplexField,
    f2: &ComplexField,
) -> Result<(ComplexField, ComplexField)> {
    check_velocity(s, f1)?;
    check_velocity(s, f2)?;
    let w = f1.map(|k, a| s.s1[k] * a + s.s2[k].conj() * f2.values[k]);
    let wr = f1.map(|k, a| -s.s2[k] * a + s.s1[k].conj() * f2.values[k]);
    Ok((w, wr))
}

/// g_j(t_k) = exp(i lambda int_{t_0}^{t_k} |f_j|^2 ds/s) f_j(t_k), trapezoid in log s.
pub fn accumulate_g(
    lambda: f64,
    times: &[f64],
    f: &[(ComplexField, ComplexField)],
) -> Result<Vec<(ComplexField, ComplexField)>> {
    if times.len() != f.len() {
        return Err(Error::Precondition(format!(
            "{} times for {} fields",
            times.len(),
            f.len()
        )));
    }
    if let Some(&t0) = times.first() {
        if !(t0 >= 1.0) {
            return Err(Error::Domain(format!(
                "phase integral starts at t = {t0} < 1"
            )));
        }
    }
    for k in 1..times.len() {
        if !(times[k] > times[k - 1]) {
            return Err(Error::NonMonotoneTimes(k));
        }
    }
    let mut out = Vec::with_capacity(f.len());
    let Some(first) = f.first() else {
        return Ok(out);
    };
    let n = first.0.len();
    let mut phase = [vec![0.0; n], vec![0.0; n]];
    for k in 0..f.len() {
        if k > 0 {
            let dl = (times[k] / times[k - 1]).ln();
            for (j, ph) in phase.iter_mut().enumerate() {
                let (cur, prev) = (pick(&f[k], j), pick(&f[k - 1], j));
                for i in 0..n {
                    ph[i] += 0.5 * dl * (cur.values[i].norm_sqr() + prev.values[i].norm_sqr());
                }
            }
        }
        let rot = |j: usize| {
            let fj = pick(&f[k], j);
            fj.map(|i, v| v * C64::from_polar(1.0, lambda * phase[j][i]))
        };
        out.push((rot(0), rot(1)));
    }
    Ok(out)
}

fn pick(p: &(ComplexField, ComplexField), j: usize) -> &ComplexField {
    if j == 0 {
        &p.0
    } else {
        &p.1
    }
}

/// [V(t) w](y) on the nodes of `vgrid`, read off u; also returns the radius |y| <= r on
/// which the values are trustworthy (REGION of both the velocity box and L/t).
pub fn vw_from_u(u: &ComplexField, t: f64, vgrid: GridSpec) -> Result<(ComplexField, f64)> {
    u.expect_space(Space::Position)?;
    let l = u.grid.half_length();
    let pts = eval_equispaced(u, t * vgrid.x(0), t * vgrid.dx(), vgrid.len())?;
    let amp = 1.0 / dilation_factor(t);
    let values = pts
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            let y = vgrid.x(k);
            if (t * y).abs() >= l {
                C64::new(0.0, 0.0)
            } else {
                amp * C64::from_polar(1.0, (-0.5 * t * y * y) % (2.0 * PI)) * v
            }
        })
        .collect();
    let radius = REGION * vgrid.half_length().min(l / t);
    Ok((ComplexField::new(vgrid, values, Space::Position)?, radius))
}

fn sup_within(f: &ComplexField, radius: f64) -> f64 {
    (0..f.len())
        .filter(|&k| f.grid.x(k).abs() <= radius)
        .map(|k| f.values[k].norm())
        .fold(0.0, f64::max)
}

fn log_rotated(w: &ComplexField, lambda: f64, t: f64) -> ComplexField {
    let lt = t.ln();
    w.map(|_, v| v * C64::from_polar(1.0, -lambda * v.norm_sqr() * lt))
}

/// One analysed frame at t >= 1.
#[derive(Debug, Clone)]
pub struct FrameAnalysis {
    pub t: f64,
    pub u: ComplexField,
    /// w on the velocity grid.
    pub w: ComplexField,
    pub f: (ComplexField, ComplexField),
    pub g: (ComplexField, ComplexField),
    pub vw: ComplexField,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub q: f64,
    pub lambda: f64,
    pub s: SMatrixField,
    pub frames: Vec<FrameAnalysis>,
}

impl Analysis {
    /// Frames with t < 1 are skipped; the rest must share one grid and increase in time.
    pub fn new(run: &[StoredSnapshot]) -> Result<Self> {
        let first = run
            .first()
            .ok_or_else(|| Error::InsufficientRun("no snapshots".into()))?;
        let (q, lambda) = (first.q, first.lambda);
        let coeffs = ScatteringCoeffs::new(q)?;
        let vgrid = first.u.grid.dual();
        let s = SMatrixField::new(vgrid, &coeffs);
        let late: Vec<&StoredSnapshot> = run.iter().filter(|f| f.t >= 1.0).collect();
        let times: Vec<f64> = late.iter().map(|f| f.t).collect();
        let mut ws = Vec::with_capacity(late.len());
        let mut fs = Vec::with_capacity(late.len());
        for fr in &late {
            first.u.grid.check(&fr.u.grid)?;
            let w = fr.w.to_velocity()?;
            fs.push(to_f(&s, &w)?);
            ws.push(w);
        }
        let gs = accumulate_g(lambda, &times, &fs)?;
        let mut frames = Vec::with_capacity(late.len());
        for (((fr, w), f), g) in late.into_iter().zip(ws).zip(fs).zip(gs) {
            let (vw, radius) = vw_from_u(&fr.u, fr.t, vgrid)?;
            frames.push(FrameAnalysis {
                t: fr.t,
                u: fr.u.clone(),
                w,
                f,
                g,
                vw,
                radius,
            });
        }
        Ok(Self {
            q,
            lambda,
            s,
            frames,
        })
    }

    pub fn frame_at(&self, t: f64) -> Result<&FrameAnalysis> {
        self.frames
            .iter()
            .find(|f| (f.t - t).abs() <= 1e-9 * t.max(1.0))
            .ok_or_else(|| Error::InsufficientRun(format!("no snapshot at t = {t}")))
    }

    /// sup over j and |y| <= radius of |g_j(t_k) - g_j(t_{k-1})|, for k >= 1.
    pub fn g_cauchy(&self) -> Vec<(f64, f64)> {
        self.frames
            .windows(2)
            .map(|p| {
                let r = p[1].radius.max(p[0].radius);
                let d1 = sup_within(&p[1].g.0.sub(&p[0].g.0), r);
                let d2 = sup_within(&p[1].g.1.sub(&p[0].g.1), r);
                (p[1].t, d1.max(d2))
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ProfileResult {
    pub w: ComplexField,
    pub t_final: f64,
    /// (t, r(t)) with r(t) = sup |V(t)w(t) - e^{-i lambda |W|^2 log t} W| over the region.
    pub residuals: Vec<(f64, f64)>,
    pub fit: RateFit,
}

/// phi_1 = e^{i lambda |f_1(T)|^2 log T} f_1(T) and W = (S1 + S2) phi_1.
pub fn extract_profile(a: &Analysis, t_final: f64) -> Result<ProfileResult> {
    if t_final < MIN_PROFILE_TIME {
        return Err(Error::InsufficientRun(format!(
            "profile needs T >= {MIN_PROFILE_TIME}, got {t_final}"
        )));
    }
    let fr = a.frame_at(t_final)?;
    let lt = t_final.ln();
    let w = fr.f.0.map(|k, v| {
        let phi = v * C64::from_polar(1.0, a.lambda * v.norm_sqr() * lt);
        (a.s.s1[k] + a.s.s2[k]) * phi
    });
    let residuals: Vec<(f64, f64)> = a
        .frames
        .iter()
        .filter(|f| f.t <= t_final)
        .map(|f| {
            (
                f.t,
                sup_within(&f.vw.sub(&log_rotated(&w, a.lambda, f.t)), f.radius),
            )
        })
        .collect();
    let fit = fit_rate(&residuals, (t_final / 16.0, t_final))?;
    Ok(ProfileResult {
        w,
        t_final,
        residuals,
        fit,
    })
}

/// sup over |x| <= REGION L of |u(t) - M(t) D(t)[e^{-i lambda |W|^2 log t} W]| for each frame.
pub fn theorem_residual_series(a: &Analysis, w: &ComplexField) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(a.frames.len());
    for f in &a.frames {
        let g = f.u.grid;
        let vl = w.grid.half_length();
        let wt = eval_equispaced(w, g.x(0) / f.t, g.dx() / f.t, g.len())?;
        let lt = f.t.ln();
        let amp = dilation_factor(f.t);
        let bound = REGION * g.half_length();
        let mut sup: f64 = 0.0;
        for k in 0..g.len() {
            let x = g.x(k);
            if x.abs() > bound {
                continue;
            }
            let y = x / f.t;
            let wv = if y.abs() >= vl {
                C64::new(0.0, 0.0)
            } else {
                wt[k]
            };
            let model = amp
                * C64::from_polar(1.0, (0.5 * x * x / f.t) % (2.0 * PI))
                * wv
                * C64::from_polar(1.0, -a.lambda * wv.norm_sqr() * lt);
            sup = sup.max((f.u.values[k] - model).norm());
        }
        out.push((f.t, sup));
    }
    Ok(out)
}

pub fn theorem_residual(a: &Analysis, w: &ComplexField, window: (f64, f64)) -> Result<RateFit> {
    fit_rate(&theorem_residual_series(a, w)?, window)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundMonitors {
    pub beta: f64,
    pub epsilon: f64,
    /// sup_t ||w||_inf / epsilon
    pub w_inf: f64,
    /// sup_t <t>^{-beta} ||w||_{H^1} / epsilon
    pub w_h1: f64,
    /// sup_t <t>^{1/2} ||u||_inf / epsilon
    pub u_decay: f64,
}

impl BoundMonitors {
    pub fn max_ratio(&self) -> f64 {
        self.w_inf.max(self.w_h1).max(self.u_decay)
    }
}

/// Monitors from (t, ||u||_inf, ||w||_inf, ||w||_{H^1}) rows. Zero data give zero ratios.
pub fn bound_monitors(rows: &[(f64, f64, f64, f64)], epsilon: f64, beta: f64) -> BoundMonitors {
    let scale = if epsilon > 0.0 { 1.0 / epsilon } else { 0.0 };
    let mut m = BoundMonitors {
        beta,
        epsilon,
        w_inf: 0.0,
        w_h1: 0.0,
        u_decay: 0.0,
    };
    for &(t, u_inf, w_inf, w_h1) in rows {
        let jt = (1.0 + t * t).sqrt();
        m.w_inf = m.w_inf.max(w_inf * scale);
        m.w_h1 = m.w_h1.max(jt.powf(-beta) * w_h1 * scale);
        m.u_decay = m.u_decay.max(jt.sqrt() * u_inf * scale);
    }
    m
}

/// F_q U(-t)(|u|^2 u) = e^{it xi^2/2} F_q(|u|^2 u), in frequency order.
pub fn duhamel_term(plan: &DistortedPlan, u: &ComplexField, t: f64) -> Result<ComplexField> {
    let cubic = u.map(|_, v| v * v.norm_sqr());
    crate::propagator::to_w(plan, &cubic, t)
}

/// Relative L^2 mismatch between (w(t+h) - w(t-h)) / 2h and -i lambda F_q U(-t)(|u|^2 u).
pub fn ode_mismatch(
    plan: &DistortedPlan,
    u: &ComplexField,
    t: f64,
    lambda: f64,
    w_minus: &ComplexField,
    w_plus: &ComplexField,
    h: f64,
) -> Result<f64> {
    let rhs = duhamel_term(plan, u, t)?.map(|_, v| C64::new(0.0, -lambda) * v);
    let fd = w_plus.sub(w_minus).map(|_, v| v / (2.0 * h));
    let denom = rhs.l2();
    if denom == 0.0 {
        return Ok(fd.l2());
    }
    Ok(fd.sub(&rhs).l2() / denom)
}

/// (measured ||V^{-1}(|Vw|^2 Vw)||_{H^1-dot}, the right side of the nonlinear estimate).
pub fn nonlinear_estimate(
    plan: &DistortedPlan,
    u: &ComplexField,
    w: &ComplexField,
    t: f64,
) -> Result<(f64, f64)> {
    let term = duhamel_term(plan, u, t)?.to_velocity()?.map(|_, v| v * t);
    let measured = term.norm(Norm::H1dot)?;
    let wv = w.to_velocity()?;
    let h1 = wv.norm(Norm::H1)?;
    let q = t.powf(-0.25);
    let rhs = q * h1.powi(3) + (wv.max_abs() + q * h1).powi(2) * h1;
    Ok((measured, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub t: f64,
    pub norm_u_inf: f64,
    pub norm_w_inf: f64,
    pub norm_w_h1: f64,
    pub w_at_zero_abs: f64,
    pub g_cauchy_inf: Option<f64>,
    pub residual_vw: Option<f64>,
    pub residual_thm: Option<f64>,
}

pub const CSV_HEADER: &str = "t,norm_u_inf,sqrt_t_times_norm_u_inf,norm_w_inf,norm_w_h1,w_at_zero_abs,g_cauchy_inf,residual_vw,residual_thm";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render_csv(rows: &[CsvRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push_str("\r\n");
    for r in rows {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{}\r\n",
            r.t,
            r.norm_u_inf,
            r.t.sqrt() * r.norm_u_inf,
            r.norm_w_inf,
            r.norm_w_h1,
            r.w_at_zero_abs,
            opt(r.g_cauchy_inf),
            opt(r.residual_vw),
            opt(r.residual_thm)
        );
    }
    s
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    std::fs::write(path, render_csv(rows))?;
    Ok(())
}

/// Header names and rows; empty cells are `None`.
pub type CsvTable = (Vec<String>, Vec<Vec<Option<f64>>>);

/// Parse a file written by `write_csv` back into (header, rows of optional numbers).
pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{} is empty", path.display())))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<Option<f64>> = line
            .split(',')
            .map(|c| {
                let c = c.trim();
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse::<f64>()
                        .map(Some)
                        .map_err(|_| Error::Format(format!("line {}: bad number {c:?}", i + 2)))
                }
            })
            .collect::<Result<_>>()?;
        if cells.len() != header.len() {
            return Err(Error::Format(format!(
                "line {}: {} fields, header has {}",
                i + 2,
                cells.len(),
                header.len()
            )));
        }
        rows.push(cells);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vgrid() -> GridSpec {
        GridSpec::new(6.0, 256).unwrap()
    }

    fn field(g: GridSpec, re: &[f64], im: &[f64]) -> ComplexField {
        let vals = (0..g.len())
            .map(|k| C64::new(re[k % re.len()], im[k % im.len()]) * (-(g.x(k) / 2.0).powi(2)).exp())
            .collect();
        ComplexField::new(g, vals, Space::Position).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn algebra_holds_nodewise(
            q in 0.05f64..5.0,
            re in proptest::collection::vec(-1.0f64..1.0, 7),
            im in proptest::collection::vec(-1.0f64..1.0, 5),
        ) {
            let g = vgrid();
            let s = SMatrixField::new(g, &ScatteringCoeffs::new(q).unwrap());
            prop_assert!(s.unitarity_defect() < 1e-12);
            let w = field(g, &re, &im);
            let a = assemble_a(&s, &w).unwrap();
            prop_assert!(a.hermiticity_defect() < 1e-12);
            let (f1, f2) = to_f(&s, &w).unwrap();
            for k in 0..g.len() {
                let (s1, s2) = (s.s1[k], s.s2[k]);
                prop_assert!(((s1 + s2).norm() - 1.0).abs() < 1e-12);
                let wr = w.values[g.mirror(k)];
                prop_assert!(((s1 * w.values[k] + s2 * wr).norm() - f1.values[k].norm()).abs() < 1e-12);
                prop_assert!(((s1 * wr + s2 * w.values[k]).norm() - f2.values[k].norm()).abs() < 1e-12);
                let d = a.diagonalized(&s, k);
                prop_assert!(d[0][1].norm() < 1e-10 && d[1][0].norm() < 1e-10);
                prop_assert!((d[0][0] - f1.values[k].norm_sqr()).norm() < 1e-10);
                prop_assert!((d[1][1] - f2.values[k].norm_sqr()).norm() < 1e-10);
            }
            let (back, back_r) = from_f(&s, &f1, &f2).unwrap();
            prop_assert!(back.max_diff(&w) < 1e-12);
            prop_assert!(back_r.max_diff(&w.reflect()) < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_match_brute_force() {
        let g = vgrid();
        let s = SMatrixField::new(g, &ScatteringCoeffs::new(0.7).unwrap());
        let w = field(g, &[0.3, -0.8, 0.1], &[0.5, 0.2]);
        let a = assemble_a(&s, &w).unwrap();
        let (f1, f2) = to_f(&s, &w).unwrap();
        for k in (0..g.len()).step_by(17) {
            let m = a.at(k);
            // eigenvalues of a 2x2 hermitian matrix
            let tr = (m[0][0] + m[1][1]).re;
            let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).re;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let mut ev = [tr / 2.0 - disc, tr / 2.0 + disc];
            let mut want = [f1.values[k].norm_sqr(), f2.values[k].norm_sqr()];
            ev.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            assert!((ev[0] - want[0]).abs() < 1e-10 && (ev[1] - want[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn even_input_gives_modulus_preserving_f2() {
        let g = vgrid();
        let s = SMatrixField::new(g, &ScatteringCoeffs::new(1.3).unwrap());
        let w = ComplexField::from_fn(g, |y| C64::new(0.4, -0.2) * (-y * y).exp());
        let (_, f2) = to_f(&s, &w).unwrap();
        for k in 0..g.len() {
            let want = (s.s1[k].conj() + s.s2[k].conj()) * w.values[k];
            assert!((f2.values[k].norm() - want.norm()).abs() < 1e-14);
            assert!((f2.values[k].norm() - w.values[k].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_gives_zero_matrix() {
        let g = vgrid();
        let s = SMatrixField::new(g, &ScatteringCoeffs::new(1.0).unwrap());
        let a = assemble_a(&s, &ComplexField::zeros(g, Space::Position)).unwrap();
        assert!(a
            .a11
            .iter()
            .chain(&a.a12)
            .chain(&a.a21)
            .chain(&a.a22)
            .all(|v| v.norm() == 0.0));
        let other = ComplexField::zeros(GridSpec::new(6.0, 128).unwrap(), Space::Position);
        assert!(matches!(
            assemble_a(&s, &other),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn phase_accumulation() {
        let g = vgrid();
        let f = ComplexField::from_fn(g, |y| C64::new(0.5, 0.5) * (1.0 + 0.1 * y.cos()));
        let times: Vec<f64> = (0..=32).map(|k| 2f64.powf(k as f64 / 4.0)).collect();
        let fs: Vec<_> = times.iter().map(|_| (f.clone(), f.clone())).collect();
        let g0 = accumulate_g(0.0, &times, &fs).unwrap();
        assert!(g0
            .iter()
            .all(|(a, b)| a.max_diff(&f) == 0.0 && b.max_diff(&f) == 0.0));
        let lambda = 1.7;
        let gs = accumulate_g(lambda, &times, &fs).unwrap();
        for (t, (g1, _)) in times.iter().zip(&gs) {
            for k in 0..g.len() {
                let v = f.values[k];
                let want = v * C64::from_polar(1.0, lambda * v.norm_sqr() * t.ln());
                assert!((g1.values[k] - want).norm() < 1e-6);
                assert!((g1.values[k].norm() - v.norm()).abs() < 1e-14);
            }
        }
        let bad = [1.0, 2.0, 2.0];
        assert_eq!(
            accumulate_g(1.0, &bad, &fs[..3]).unwrap_err(),
            Error::NonMonotoneTimes(2)
        );
    }

    #[test]
    fn monitors_scale() {
        assert_eq!(
            bound_monitors(&[(0.0, 0.0, 0.0, 0.0), (4.0, 0.0, 0.0, 0.0)], 0.1, 0.1).max_ratio(),
            0.0
        );
        let m = bound_monitors(&[(3.0, 0.01, 0.02, 0.5)], 0.1, 0.1);
        assert!((m.u_decay - 10f64.powf(0.25) * 0.1).abs() < 1e-12);
        assert!((m.w_inf - 0.2).abs() < 1e-12);
        assert!((m.w_h1 - 10f64.powf(-0.05) * 5.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            CsvRow {
                t: 0.0,
                norm_u_inf: 0.05,
                norm_w_inf: 0.1,
                norm_w_h1: 0.3,
                w_at_zero_abs: 0.0,
                g_cauchy_inf: None,
                residual_vw: None,
                residual_thm: None,
            },
            CsvRow {
                t: 4.0,
                norm_u_inf: 0.025,
                norm_w_inf: 0.1,
                norm_w_h1: 0.31,
                w_at_zero_abs: 1e-18,
                g_cauchy_inf: Some(1e-3),
                residual_vw: Some(0.01),
                residual_thm: Some(0.004),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.csv");
        write_csv(&p, &rows).unwrap();
        let (h, back) = read_csv(&p).unwrap();
        assert_eq!(h.join(","), CSV_HEADER);
        assert_eq!(back[1][2], Some(0.05));
        assert_eq!(back[0][6], None);
        assert_eq!(back[1][8], Some(0.004));
        std::fs::write(&p, "a,b\n1\n").unwrap();
        assert!(matches!(read_csv(&p), Err(Error::Format(_))));
    }
}
