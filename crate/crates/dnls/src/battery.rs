//! A fixed ten-function test battery and the verification suites built on it.

use crate::dft::DistortedPlan;
use crate::error::Result;
use crate::grid::{fourier, resample, ComplexField, GridSpec, Norm};
use crate::rates::{fit_rate, RateFit};
use crate::scattering::ScatteringCoeffs;
use crate::vops::VOperators;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

pub const BATTERY_SIZE: usize = 10;

pub const UNITARITY_TOL: f64 = 1e-8;
pub const ROUND_TRIP_TOL: f64 = 1e-7;
pub const ORACLE_TOL: f64 = 1e-7;
pub const ORIGIN_TOL: f64 = 1e-6;
pub const WEAK_Q: f64 = 1e-3;
pub const WEAK_FACTOR: f64 = 5.0;

pub const VOPS_ORACLE_TOL: f64 = 1e-4;
pub const VOPS_SLOPE_MAX: f64 = -0.2;
pub const GROWTH_SLOPE: (f64, f64) = (0.4, 0.6);
/// Recorded constant for the H1-dot growth ratios over t in [1, 1000].
pub const H1_RATIO_BOUND: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct BatteryMember {
    pub name: &'static str,
    pub field: ComplexField,
}

fn gaussian_sum(seed: u64) -> Vec<(f64, f64, C64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..4)
        .map(|_| {
            let c = rng.gen_range(-2.0..2.0);
            let w = rng.gen_range(0.5..1.2);
            let a = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            (c, w, a)
        })
        .collect()
}

/// Smooth, rapidly decaying functions; every member passes the 1e-8 boundary check for
/// half-lengths L >= 8. The last member is a seeded sum of Gaussians.
pub fn battery(grid: GridSpec, seed: u64) -> Vec<BatteryMember> {
    let g = |f: &dyn Fn(f64) -> C64| ComplexField::from_fn(grid, f);
    let re = |v: f64| C64::new(v, 0.0);
    let bumps = gaussian_sum(seed);
    vec![
        BatteryMember {
            name: "gauss",
            field: g(&|x| re((-x * x / 2.0).exp())),
        },
        BatteryMember {
            name: "shifted",
            field: g(&|x| re((-(x - 1.5).powi(2)).exp())),
        },
        BatteryMember {
            name: "narrow",
            field: g(&|x| re((-4.0 * x * x).exp())),
        },
        BatteryMember {
            name: "odd",
            field: g(&|x| re(x * (-x * x).exp())),
        },
        BatteryMember {
            name: "modulated",
            field: g(&|x| C64::from_polar((-x * x / 2.0).exp(), 2.0 * x)),
        },
        BatteryMember {
            name: "sech2",
            field: g(&|x| re((2.0 * x).cosh().recip().powi(2))),
        },
        BatteryMember {
            name: "x2gauss",
            field: g(&|x| re(x * x * (-x * x).exp())),
        },
        BatteryMember {
            name: "tanhgauss",
            field: g(&|x| re((2.0 * x).tanh() * (-x * x).exp())),
        },
        BatteryMember {
            name: "chirped",
            field: g(&|x| C64::new(1.0, x) * (-(x + 1.0).powi(2) / 2.0).exp()),
        },
        BatteryMember {
            name: "random",
            field: g(&|x| {
                bumps
                    .iter()
                    .map(|&(c, w, a)| a * (-((x - c) / w).powi(2)).exp())
                    .sum()
            }),
        },
    ]
}

fn weighted_l2(f: &ComplexField) -> f64 {
    let g = f.grid;
    ((0..g.len())
        .map(|k| (1.0 + g.x(k).powi(2)) * f.values[k].norm_sqr())
        .sum::<f64>()
        * g.dx())
    .sqrt()
}

/// ||xi psi||_2 for a frequency field.
fn xi_l2(psi: &ComplexField) -> f64 {
    let g = psi.grid;
    (g.xis()
        .iter()
        .zip(&psi.values)
        .map(|(xi, v)| xi * xi * v.norm_sqr())
        .sum::<f64>()
        * g.dxi())
    .sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformRow {
    pub function: String,
    pub q: f64,
    /// | ||F_q phi|| / ||phi|| - 1 |
    pub norm_defect: f64,
    /// L-inf of F_q^{-1} F_q phi - phi.
    pub round_trip: f64,
    /// L-inf of F_q F_q^{-1} psi - psi with psi = F_q phi.
    pub round_trip_dual: f64,
    /// L-inf of the raw fast path against the dense quadrature.
    pub oracle_raw: f64,
    /// Same for the orthonormalised pair; reported only.
    pub oracle_corrected: f64,
    /// |F_q phi(0)| / ||<x> phi||_2
    pub origin_ratio: f64,
    /// ||d/dxi F_q phi||_2 / ||<x> phi||_2
    pub c_df: f64,
    /// ||xi F_q phi||_2 / (|phi(0)| + ||phi'||_2)
    pub c_xf: f64,
}

impl TransformRow {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut chk = |what: &str, v: f64, tol: f64| {
            if !(v < tol) {
                out.push(format!(
                    "{} q={}: {what} {v:.3e} >= {tol:.0e}",
                    self.function, self.q
                ));
            }
        };
        chk("norm defect", self.norm_defect, UNITARITY_TOL);
        chk("round trip", self.round_trip, ROUND_TRIP_TOL);
        chk("dual round trip", self.round_trip_dual, ROUND_TRIP_TOL);
        chk("fast vs oracle", self.oracle_raw, ORACLE_TOL);
        chk("origin ratio", self.origin_ratio, ORIGIN_TOL);
        if !self.c_df.is_finite() || !self.c_xf.is_finite() {
            out.push(format!(
                "{} q={}: mapping constant not finite",
                self.function, self.q
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakLimitRow {
    pub function: String,
    /// ||F_q phi - F_0 phi||_2 at q = WEAK_Q.
    pub diff: f64,
    /// WEAK_FACTOR q ||phi||_2
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformReport {
    pub l: f64,
    pub n: usize,
    pub seed: u64,
    pub rows: Vec<TransformRow>,
    pub weak_limit: Vec<WeakLimitRow>,
}

impl TransformReport {
    pub fn failures(&self) -> Vec<String> {
        self.rows.iter().flat_map(|r| r.failures()).collect()
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "# grid L={} N={} seed={}\n{:<10} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>8} {:>8}\n",
            self.l, self.n, self.seed, "function", "q", "unitarity", "roundtrip", "dual", "oracle", "oracle_c",
            "origin", "C_DF", "C_XF"
        );
        for r in &self.rows {
            s += &format!(
                "{:<10} {:>6} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>8.3} {:>8.3}\n",
                r.function, r.q, r.norm_defect, r.round_trip, r.round_trip_dual, r.oracle_raw,
                r.oracle_corrected, r.origin_ratio, r.c_df, r.c_xf
            );
        }
        s += &format!(
            "# weak potential q={WEAK_Q}: ||F_q phi - F_0 phi|| vs {WEAK_FACTOR} q ||phi||\n"
        );
        for w in &self.weak_limit {
            let mark = if w.diff <= w.bound { "ok" } else { "exceeds" };
            s += &format!(
                "{:<10} {:>10.3e} {:>10.3e} {mark}\n",
                w.function, w.diff, w.bound
            );
        }
        s
    }
}

fn transform_row(plan: &DistortedPlan, name: &str, phi: &ComplexField) -> Result<TransformRow> {
    let q = plan.coeffs().q();
    let psi = plan.forward(phi)?;
    let back = plan.inverse(&psi)?;
    let again = plan.forward(&plan.inverse(&psi)?)?;
    let raw = plan.forward_raw(phi)?;
    let oracle = plan.forward_oracle(phi)?;
    let g = phi.grid;
    let wl2 = weighted_l2(phi);
    let phi0 = phi.values[g.zero_index()].norm();
    let origin = psi.values[psi.grid.index_of_mode(0)].norm();
    Ok(TransformRow {
        function: name.to_string(),
        q,
        norm_defect: (psi.l2() / phi.l2() - 1.0).abs(),
        round_trip: back.max_diff(phi),
        round_trip_dual: again.max_diff(&psi),
        oracle_raw: raw.max_diff(&oracle),
        oracle_corrected: psi.max_diff(&oracle),
        origin_ratio: origin / wl2,
        c_df: psi.to_velocity()?.norm(Norm::H1dot)? / wl2,
        c_xf: xi_l2(&psi) / (phi0 + phi.norm(Norm::H1dot)?),
    })
}

/// Unitarity, both round trips, fast-vs-dense agreement, the null at the origin and the
/// mapping constants for every battery member and every q; plus the weak-potential limit.
pub fn transform_suite(l: f64, n: usize, qs: &[f64], seed: u64) -> Result<TransformReport> {
    let grid = GridSpec::new(l, n)?;
    let members = battery(grid, seed);
    let mut rows = Vec::new();
    for &q in qs {
        let plan = DistortedPlan::new(grid, ScatteringCoeffs::new(q)?)?;
        let chunk: Vec<Result<TransformRow>> = std::thread::scope(|sc| {
            let handles: Vec<_> = members
                .iter()
                .map(|m| {
                    let plan = &plan;
                    sc.spawn(move || transform_row(plan, m.name, &m.field))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        for r in chunk {
            rows.push(r?);
        }
    }
    let weak = DistortedPlan::new(grid, ScatteringCoeffs::new(WEAK_Q)?)?;
    let mut weak_limit = Vec::new();
    for m in &members {
        let diff = weak.forward(&m.field)?.sub(&fourier(&m.field)?).l2();
        weak_limit.push(WeakLimitRow {
            function: m.name.to_string(),
            diff,
            bound: WEAK_FACTOR * WEAK_Q * m.field.l2(),
        });
    }
    Ok(TransformReport {
        l,
        n,
        seed,
        rows,
        weak_limit,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleRow {
    pub function: String,
    pub t: f64,
    pub v_err: f64,
    pub vinv_err: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxSeries {
    pub function: String,
    pub psi_at_zero: f64,
    /// (t, ||V psi - approx||_inf)
    pub v: Vec<(f64, f64)>,
    pub vinv: Vec<(f64, f64)>,
    pub v_fit: RateFit,
    pub vinv_fit: RateFit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthRow {
    pub t: f64,
    /// ||V psi||_{H1-dot} / ||psi||_{H1} for the odd input.
    pub v_ratio: f64,
    /// ||V^{-1} phi||_{H1-dot} / (sqrt t |phi(0)| + ||phi||_{H1}) for the Gaussian.
    pub vinv_ratio: f64,
    /// ||V^{-1} phi||_{H1-dot} for the Gaussian.
    pub vinv_h1dot: f64,
    /// |V psi(0)| / (|psi(0)| + t^{-1/4} ||psi||_{H1}), sup over both inputs.
    pub c_origin: f64,
    /// ||V psi||_inf / (||psi||_inf + t^{-1/4} ||psi||_{H1})
    pub c_sup: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VopsReport {
    pub q: f64,
    pub l: f64,
    pub n: usize,
    pub oracle: Vec<OracleRow>,
    pub approx: Vec<ApproxSeries>,
    pub growth: Vec<GrowthRow>,
    /// Fit of ||V^{-1} phi||_{H1-dot} against t for the Gaussian over [10, 1000].
    pub growth_fit: RateFit,
    /// |V^{-1} phi(0)| / ||phi||_{H1}, sup over the battery and t in {1, 10, 100}.
    pub vinv_origin: f64,
}

impl VopsReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.oracle {
            if !(r.v_err <= VOPS_ORACLE_TOL && r.vinv_err <= VOPS_ORACLE_TOL) {
                out.push(format!(
                    "{} t={}: fast vs oracle {:.2e} / {:.2e}",
                    r.function, r.t, r.v_err, r.vinv_err
                ));
            }
        }
        for a in &self.approx {
            for (op, f) in [("V", &a.v_fit), ("V^-1", &a.vinv_fit)] {
                if !(f.slope <= VOPS_SLOPE_MAX) {
                    out.push(format!(
                        "{} {op}: approximant slope {:.3}",
                        a.function, f.slope
                    ));
                }
            }
        }
        for g in &self.growth {
            if !(g.v_ratio < H1_RATIO_BOUND && g.vinv_ratio < H1_RATIO_BOUND) {
                out.push(format!(
                    "t={}: H1-dot ratios {:.3} / {:.3}",
                    g.t, g.v_ratio, g.vinv_ratio
                ));
            }
        }
        let s = self.growth_fit.slope;
        if !(s >= GROWTH_SLOPE.0 && s <= GROWTH_SLOPE.1) {
            out.push(format!("H1-dot growth slope {s:.3}"));
        }
        if !(self.vinv_origin < ORIGIN_TOL) {
            out.push(format!("V^-1 phi(0) ratio {:.2e}", self.vinv_origin));
        }
        out
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "# q={} L={} N={}\n# fast vs oracle (L-inf)\n",
            self.q, self.l, self.n
        );
        for r in &self.oracle {
            s += &format!(
                "{:<10} t={:<6} V {:.2e}  V^-1 {:.2e}\n",
                r.function, r.t, r.v_err, r.vinv_err
            );
        }
        s += "# approximant errors\n";
        for a in &self.approx {
            s += &format!("{} (|psi(0)| = {:.3})\n", a.function, a.psi_at_zero);
            for ((t, e), (_, ei)) in a.v.iter().zip(&a.vinv) {
                s += &format!("  t={t:<10.4} V {e:.4e}  V^-1 {ei:.4e}\n");
            }
            s += &format!(
                "  slope V {:.3} (resid {:.2e})  V^-1 {:.3} (resid {:.2e})\n",
                a.v_fit.slope, a.v_fit.max_residual, a.vinv_fit.slope, a.vinv_fit.max_residual
            );
        }
        s += "# H1 growth\n";
        for g in &self.growth {
            s += &format!(
                "  t={:<6} V {:.4}  V^-1 {:.4}  |V^-1 phi|_H1dot {:.4e}  C_origin {:.3}  C_sup {:.3}\n",
                g.t, g.v_ratio, g.vinv_ratio, g.vinv_h1dot, g.c_origin, g.c_sup
            );
        }
        s += &format!("  growth slope {:.3}\n", self.growth_fit.slope);
        s += &format!(
            "# sup |V^-1 phi(0)| / ||phi||_H1 = {:.2e}\n",
            self.vinv_origin
        );
        s
    }
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64))
        .collect()
}

/// Fast path against the dense quadrature at points |y| <= 3 (every 4th node). The input is
/// refined at least fourfold, and further until the quadrature phase step stays below the
/// oracle's limit; the plain trapezoid loses O(t dx^2) at the kink of the kernel at the origin.
fn oracle_row(ops: &VOperators, name: &str, f: &ComplexField, t: f64) -> Result<OracleRow> {
    let g = f.grid;
    let l = g.half_length();
    let reach = l + 3.0;
    let mut fine = GridSpec::new(l, 4 * g.len())?;
    while t * fine.dx() * reach >= 0.9 * FRAC_PI_4 || fine.dx() > 2e-3 / t.sqrt() {
        fine = GridSpec::new(l, 2 * fine.len())?;
    }
    let input = resample(f, fine)?;
    let idx: Vec<usize> = (0..g.len())
        .filter(|&k| g.x(k).abs() <= 3.0 && k % 4 == 0)
        .collect();
    let pts: Vec<f64> = idx.iter().map(|&k| g.x(k)).collect();
    let err = |fast: &ComplexField, orc: &[C64]| {
        idx.iter()
            .zip(orc)
            .map(|(&k, v)| (fast.values[k] - v).norm())
            .fold(0.0, f64::max)
    };
    let v_err = err(&ops.v_on(t, f, g)?, &ops.v_oracle_at(t, &input, &pts)?);
    let vinv_err = err(
        &ops.vinv_on(t, f, g)?,
        &ops.vinv_oracle_at(t, &input, &pts)?,
    );
    Ok(OracleRow {
        function: name.to_string(),
        t,
        v_err,
        vinv_err,
    })
}

/// Oracle agreement on the battery at t in {1, 10, 100}, approximant rates over [10, 1000]
/// for a Gaussian (psi(0) != 0) and an odd input, and the H1-dot growth checks.
pub fn vops_suite(q: f64, l: f64, n: usize, seed: u64) -> Result<VopsReport> {
    let grid = GridSpec::new(l, n)?;
    let ops = VOperators::new(ScatteringCoeffs::new(q)?);
    let members = battery(grid, seed);
    let oracle: Vec<Result<OracleRow>> = std::thread::scope(|sc| {
        let handles: Vec<_> = members
            .iter()
            .map(|m| {
                let ops = &ops;
                sc.spawn(move || {
                    [1.0, 10.0, 100.0]
                        .into_iter()
                        .map(|t| oracle_row(ops, m.name, &m.field, t))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let oracle = oracle.into_iter().collect::<Result<Vec<_>>>()?;

    let mut vinv_origin: f64 = 0.0;
    for m in &members {
        let h1 = m.field.norm(Norm::H1)?;
        for t in [1.0, 10.0, 100.0] {
            let w = ops.vinv_on(t, &m.field, grid)?;
            vinv_origin = vinv_origin.max(w.values[grid.zero_index()].norm() / h1);
        }
    }

    let gauss = members[0].field.clone();
    let odd = members[3].field.clone();
    let ts = logspace(10.0, 1000.0, 9);
    let mut approx = Vec::new();
    for (name, f) in [("gauss", &gauss), ("odd", &odd)] {
        let mut v = Vec::new();
        let mut vinv = Vec::new();
        for &t in &ts {
            v.push((t, ops.v_on(t, f, grid)?.max_diff(&ops.approx_v(t, f)?)));
            vinv.push((
                t,
                ops.vinv_on(t, f, grid)?.max_diff(&ops.approx_vinv(t, f)?),
            ));
        }
        approx.push(ApproxSeries {
            function: name.to_string(),
            psi_at_zero: f.values[grid.zero_index()].norm(),
            v_fit: fit_rate(&v, (10.0, 1000.0))?,
            vinv_fit: fit_rate(&vinv, (10.0, 1000.0))?,
            v,
            vinv,
        });
    }

    let mut growth = Vec::new();
    for t in [1.0, 10.0, 100.0, 1000.0] {
        let mut c_origin: f64 = 0.0;
        let mut c_sup: f64 = 0.0;
        for f in [&gauss, &odd] {
            let vf = ops.v_on(t, f, grid)?;
            let tail = t.powf(-0.25) * f.norm(Norm::H1)?;
            c_origin = c_origin.max(
                vf.values[grid.zero_index()].norm() / (f.values[grid.zero_index()].norm() + tail),
            );
            c_sup = c_sup.max(vf.max_abs() / (f.max_abs() + tail));
        }
        growth.push(GrowthRow {
            t,
            v_ratio: ops.h1_growth_v(t, &odd)?,
            vinv_ratio: ops.h1_growth_vinv(t, &gauss)?,
            vinv_h1dot: ops.vinv_h1dot(t, &gauss)?,
            c_origin,
            c_sup,
        });
    }
    let mut series: Vec<(f64, f64)> = growth.iter().map(|g| (g.t, g.vinv_h1dot)).collect();
    for t in [20.0, 50.0, 200.0, 500.0] {
        series.push((t, ops.vinv_h1dot(t, &gauss)?));
    }
    series.sort_by(|a, b| a.0.total_cmp(&b.0));
    let growth_fit = fit_rate(&series, (10.0, 1000.0))?;

    Ok(VopsReport {
        q,
        l,
        n,
        oracle,
        approx,
        growth,
        growth_fit,
        vinv_origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Space;

    #[test]
    fn battery_is_admissible() {
        for (l, n) in [(8.0, 1024), (40.0, 4096)] {
            let g = GridSpec::new(l, n).unwrap();
            let b = battery(g, 3);
            assert_eq!(b.len(), BATTERY_SIZE);
            for m in &b {
                assert_eq!(m.field.space, Space::Position);
                m.field
                    .check_boundary(1e-8)
                    .unwrap_or_else(|e| panic!("{} L={l}: {e}", m.name));
            }
        }
    }

    #[test]
    fn seed_changes_only_the_random_member() {
        let g = GridSpec::new(8.0, 256).unwrap();
        let (a, b) = (battery(g, 1), battery(g, 2));
        for k in 0..BATTERY_SIZE - 1 {
            assert_eq!(a[k].field, b[k].field);
        }
        assert_ne!(a[9].field, b[9].field);
        assert_eq!(battery(g, 1)[9].field, a[9].field);
    }

    #[test]
    fn small_transform_suite() {
        let r = transform_suite(40.0, 1024, &[1.0], 0).unwrap();
        assert_eq!(r.rows.len(), BATTERY_SIZE);
        for row in &r.rows {
            assert!(row.norm_defect < UNITARITY_TOL, "{row:?}");
            assert!(row.oracle_raw < ORACLE_TOL, "{row:?}");
        }
        assert!(r.render().contains("tanhgauss"));
    }
}
