//! Orchestration: evolve a configured run, store snapshots, analyse and fit, emit reports.

use crate::config::SimConfig;
use crate::dft::DistortedPlan;
use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::modscat::{
    bound_monitors, extract_profile, nonlinear_estimate, ode_mismatch, read_csv,
    theorem_residual_series, write_csv, Analysis, BoundMonitors, CsvRow, MIN_PROFILE_TIME,
};
use crate::propagator::{
    read_snapshot, to_w, write_snapshot, EvolutionState, IndexEntry, SnapshotIndex, StoredSnapshot,
};
use crate::rates::{fit_rate, RateFit};
use crate::scattering::ScatteringCoeffs;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const CSV_FILE: &str = "run.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.txt";

/// sup over t >= 1 of sqrt(t) ||u||_inf may exceed its value at t = 1 by this factor.
pub const DECAY_FACTOR: f64 = 2.0;
pub const MONITOR_MAX: f64 = 5.0;
pub const ODE_TOL: f64 = 0.1;
pub const LEMMA_FACTOR: f64 = 10.0;
pub const W_ORIGIN_TOL: f64 = 1e-5;
/// Finite-difference half step of the ODE check, in time steps.
pub const ODE_STEPS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub at_one: f64,
    /// sup over every step with t >= 1.
    pub sup: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeCheck {
    pub t: f64,
    pub h: f64,
    /// Relative L^2 mismatch of the centred difference of w against the Duhamel term.
    pub mismatch: f64,
    /// ||V^{-1}(|Vw|^2 Vw)||_{H1-dot} and the right side of its estimate.
    pub nonlinear: f64,
    pub nonlinear_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub t_final: f64,
    pub g_cauchy: RateFit,
    pub profile: RateFit,
    pub theorem: RateFit,
    /// sup |W_{T/2} - W_T| over the trusted velocity region at T; needs T/2 >= MIN_PROFILE_TIME.
    pub w_shift: Option<f64>,
    /// Profile residual r(T/2).
    pub r_half: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub q: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub l: f64,
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    pub snapshots: usize,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub decay: Option<DecayCheck>,
    pub monitors: BoundMonitors,
    /// max over snapshots of |w(t, 0)| / ||w(t)||_{H^1}.
    pub w_origin: f64,
    pub ode_checks: Vec<OdeCheck>,
    pub fits: Option<FitSummary>,
    pub fit_note: Option<String>,
    pub violations: Vec<String>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// ODE fields carry the index of their spot time.
#[derive(Debug, Default, Clone, Copy)]
struct Event {
    snapshot: bool,
    ode_minus: Option<usize>,
    ode_centre: Option<usize>,
    ode_plus: Option<usize>,
}

/// Spot times T/128, T/64, ..., T/8 for the ODE check; those with t - h <= 0 are dropped.
pub fn ode_spot_times(cfg: &SimConfig) -> Vec<f64> {
    let h = ODE_STEPS * cfg.dt;
    (3..=7)
        .rev()
        .map(|k| cfg.t_max / 2f64.powi(k))
        .filter(|&t| t - h > 0.0)
        .collect()
}

fn schedule(cfg: &SimConfig) -> Vec<(f64, Event)> {
    let mut ev: Vec<(f64, Event)> = Vec::new();
    let mut add = |t: f64, f: &dyn Fn(&mut Event)| {
        if let Some(e) = ev
            .iter_mut()
            .find(|(s, _)| (s - t).abs() <= 1e-9 * t.max(1.0))
        {
            f(&mut e.1);
        } else {
            let mut e = Event::default();
            f(&mut e);
            ev.push((t, e));
        }
    };
    for t in cfg.snapshot_times() {
        add(t, &|e| e.snapshot = true);
    }
    let h = ODE_STEPS * cfg.dt;
    for (i, t) in ode_spot_times(cfg).into_iter().enumerate() {
        add(t - h, &|e| e.ode_minus = Some(i));
        add(t, &|e| e.ode_centre = Some(i));
        if t + h <= cfg.t_max {
            add(t + h, &|e| e.ode_plus = Some(i));
        }
    }
    ev.sort_by(|a, b| a.0.total_cmp(&b.0));
    ev
}

struct DecayTracker {
    at_one: Option<f64>,
    sup: f64,
}

impl DecayTracker {
    fn see(&mut self, t: f64, u: &ComplexField) {
        if t < 1.0 - 1e-12 {
            return;
        }
        let v = t.sqrt() * u.max_abs();
        if self.at_one.is_none() {
            self.at_one = Some(v);
        }
        self.sup = self.sup.max(v);
    }
}

/// Same stepping rule as `EvolutionState::advance_to`, watching sqrt(t) ||u||_inf after each step.
fn advance(
    state: &mut EvolutionState,
    t_end: f64,
    dt: f64,
    decay: &mut DecayTracker,
) -> Result<()> {
    while t_end - state.t > 1e-12 * t_end.max(1.0) {
        let left = t_end - state.t;
        if left <= dt * (1.0 + 1e-9) {
            state.step_strang(left)?;
            state.t = t_end;
        } else {
            state.step_strang(dt)?;
        }
        decay.see(state.t, &state.u);
    }
    Ok(())
}

fn snapshot_file(k: usize) -> String {
    format!("snap_{k:04}.bin")
}

type Series = Vec<(f64, f64)>;

/// Profile, g-series and theorem fits from stored frames, for the profile extracted at `t_final`.
pub fn analyze(
    frames: &[StoredSnapshot],
    t_final: f64,
) -> Result<(Analysis, FitSummary, Series, Series)> {
    let a = Analysis::new(frames)?;
    let window = (t_final / 16.0, t_final);
    let g_series: Vec<(f64, f64)> = a
        .g_cauchy()
        .into_iter()
        .filter(|(t, _)| *t <= t_final)
        .collect();
    let g_fit = fit_rate(&g_series, window)?;
    let prof = extract_profile(&a, t_final)?;
    let thm = theorem_residual_series(&a, &prof.w)?;
    let thm: Vec<(f64, f64)> = thm.into_iter().filter(|(t, _)| *t <= t_final).collect();
    let thm_fit = fit_rate(&thm, window)?;
    let (w_shift, r_half) = if t_final / 2.0 >= MIN_PROFILE_TIME {
        let half = extract_profile(&a, t_final / 2.0)?;
        let radius = a.frame_at(t_final)?.radius;
        let d = half.w.sub(&prof.w);
        let w_shift = (0..d.len())
            .filter(|&k| d.grid.x(k).abs() <= radius)
            .map(|k| d.values[k].norm())
            .fold(0.0, f64::max);
        let r_half = prof
            .residuals
            .iter()
            .find(|(t, _)| (t - t_final / 2.0).abs() <= 1e-9 * t_final)
            .map(|p| p.1)
            .ok_or_else(|| {
                Error::InsufficientRun(format!("no snapshot at t = {}", t_final / 2.0))
            })?;
        (Some(w_shift), Some(r_half))
    } else {
        (None, None)
    };
    let summary = FitSummary {
        t_final,
        g_cauchy: g_fit,
        profile: prof.fit,
        theorem: thm_fit,
        w_shift,
        r_half,
    };
    Ok((a, summary, prof.residuals, thm))
}

fn lookup(series: &[(f64, f64)], t: f64) -> Option<f64> {
    series
        .iter()
        .find(|(s, _)| (s - t).abs() <= 1e-9 * t.max(1.0))
        .map(|p| p.1)
}

/// Evolve `cfg`, writing snapshots, `index.json`, `run.csv`, `summary.json` and `config.txt`
/// into its output directory. Monitor violations are collected in the summary; errors that
/// make the run meaningless (wrap-around, mass drift, non-finite values) abort it.
pub fn run_experiment(cfg: &SimConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join(CONFIG_FILE), cfg.to_text())?;
    let grid = cfg.grid()?;
    let plan = Arc::new(DistortedPlan::new(grid, ScatteringCoeffs::new(cfg.q)?)?);
    let u0 = cfg.profile.sample(grid, cfg.epsilon)?;
    let mut state = EvolutionState::new(plan.clone(), u0, cfg.lambda)?;
    let e0 = state.energy()?;

    let mut index = SnapshotIndex::default();
    let mut frames = Vec::new();
    let mut decay = DecayTracker {
        at_one: None,
        sup: 0.0,
    };
    let mut violations = Vec::new();
    let mut w_origin: f64 = 0.0;
    let mut ode_checks = Vec::new();
    let spots = ode_spot_times(cfg).len();
    let mut w_minus: Vec<Option<ComplexField>> = vec![None; spots];
    let mut centre: Vec<Option<(f64, ComplexField, ComplexField)>> = vec![None; spots];
    let h = ODE_STEPS * cfg.dt;

    for (t, ev) in schedule(cfg) {
        advance(&mut state, t, cfg.dt, &mut decay)?;
        if let Some(i) = ev.ode_minus {
            w_minus[i] = Some(to_w(&plan, &state.u, state.t)?);
        }
        if let Some(i) = ev.ode_centre {
            centre[i] = Some((state.t, state.u.clone(), to_w(&plan, &state.u, state.t)?));
        }
        if let Some(i) = ev.ode_plus {
            let w_plus = to_w(&plan, &state.u, state.t)?;
            if let (Some(wm), Some((tc, uc, wc))) = (w_minus[i].take(), centre[i].take()) {
                let mismatch = ode_mismatch(&plan, &uc, tc, cfg.lambda, &wm, &w_plus, h)?;
                let (nonlinear, nonlinear_bound) = nonlinear_estimate(&plan, &uc, &wc, tc)?;
                if cfg.epsilon > 0.0 && !(mismatch <= ODE_TOL) {
                    violations.push(format!("ODE mismatch {mismatch:.3e} at t = {tc}"));
                }
                if !(nonlinear <= LEMMA_FACTOR * nonlinear_bound) {
                    violations.push(format!(
                        "nonlinear estimate {nonlinear:.3e} > {LEMMA_FACTOR} x {nonlinear_bound:.3e} at t = {tc}"
                    ));
                }
                ode_checks.push(OdeCheck {
                    t: tc,
                    h,
                    mismatch,
                    nonlinear,
                    nonlinear_bound,
                });
            }
        }
        if ev.snapshot {
            let snap = state.snapshot()?;
            let file = snapshot_file(index.entries.len());
            write_snapshot(&dir.join(&file), &snap)?;
            if snap.norms.w_h1 > 0.0 {
                w_origin = w_origin.max(snap.norms.w_at_zero / snap.norms.w_h1);
            }
            index.entries.push(IndexEntry {
                file,
                t: snap.t,
                norms: snap.norms,
            });
            frames.push(StoredSnapshot {
                t: snap.t,
                q: snap.q,
                lambda: snap.lambda,
                u: snap.u,
                w: snap.w,
            });
        }
    }
    index.write(&dir)?;

    let rows: Vec<(f64, f64, f64, f64)> = index
        .entries
        .iter()
        .map(|e| (e.t, e.norms.u_inf, e.norms.w_inf, e.norms.w_h1))
        .collect();
    let monitors = bound_monitors(&rows, cfg.epsilon, cfg.beta);
    if !(monitors.max_ratio() <= MONITOR_MAX) {
        violations.push(format!(
            "bound monitor ratio {:.3} > {MONITOR_MAX}",
            monitors.max_ratio()
        ));
    }
    let decay = decay.at_one.map(|at_one| DecayCheck {
        at_one,
        sup: decay.sup,
        ratio: if at_one > 0.0 {
            decay.sup / at_one
        } else {
            0.0
        },
    });
    if let Some(d) = decay {
        if !(d.ratio <= DECAY_FACTOR) {
            violations.push(format!(
                "sqrt(t) ||u||_inf grew by {:.3} over its value at t = 1",
                d.ratio
            ));
        }
    }
    if !(w_origin < W_ORIGIN_TOL) {
        violations.push(format!("|w(t, 0)| / ||w||_H1 reached {w_origin:.3e}"));
    }

    let (fits, fit_note, g_series, residual_vw, residual_thm) = if cfg.epsilon == 0.0 {
        (None, Some("zero data".to_string()), vec![], vec![], vec![])
    } else if cfg.t_max < MIN_PROFILE_TIME {
        (
            None,
            Some(format!("t_max < {MIN_PROFILE_TIME}")),
            vec![],
            vec![],
            vec![],
        )
    } else {
        match analyze(&frames, cfg.t_max) {
            Ok((a, s, r, thm)) => (Some(s), None, a.g_cauchy(), r, thm),
            Err(e) => (None, Some(e.to_string()), vec![], vec![], vec![]),
        }
    };

    let csv: Vec<CsvRow> = index
        .entries
        .iter()
        .map(|e| CsvRow {
            t: e.t,
            norm_u_inf: e.norms.u_inf,
            norm_w_inf: e.norms.w_inf,
            norm_w_h1: e.norms.w_h1,
            w_at_zero_abs: e.norms.w_at_zero,
            g_cauchy_inf: lookup(&g_series, e.t),
            residual_vw: lookup(&residual_vw, e.t),
            residual_thm: lookup(&residual_thm, e.t),
        })
        .collect();
    write_csv(&dir.join(CSV_FILE), &csv)?;

    let e1 = state.energy()?;
    let summary = RunSummary {
        config_hash: cfg.hash(),
        q: cfg.q,
        lambda: cfg.lambda,
        epsilon: cfg.epsilon,
        beta: cfg.beta,
        l: cfg.l,
        n: cfg.n,
        dx: grid.dx(),
        dt: cfg.dt,
        t_max: cfg.t_max,
        seed: cfg.seed,
        snapshots: index.entries.len(),
        mass_drift: state.mass_drift(),
        energy_drift: if e0 != 0.0 {
            ((e1 - e0) / e0).abs()
        } else {
            (e1 - e0).abs()
        },
        decay,
        monitors,
        w_origin,
        ode_checks,
        fits,
        fit_note,
        violations,
    };
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_summary(dir: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(dir.join(SUMMARY_FILE))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
}

pub fn load_frames(dir: &Path) -> Result<Vec<StoredSnapshot>> {
    let index = SnapshotIndex::read(dir)?;
    index
        .entries
        .iter()
        .map(|e| read_snapshot(&dir.join(&e.file)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub q: f64,
    pub lambda: f64,
    pub t_final: f64,
    pub fits: FitSummary,
    /// (t, r(t)) for the profile at t_final.
    pub residuals: Vec<(f64, f64)>,
    pub w_inf: f64,
}

/// Extract W from a stored run at `t_final` (default: its last snapshot) and fit the residuals.
pub fn profile_report(dir: &Path, t_final: Option<f64>) -> Result<ProfileReport> {
    let frames = load_frames(dir)?;
    let last = frames
        .last()
        .ok_or_else(|| Error::InsufficientRun(format!("{} holds no snapshots", dir.display())))?;
    let t_final = t_final.unwrap_or(last.t);
    let (a, fits, residuals, _) = analyze(&frames, t_final)?;
    let w = extract_profile(&a, t_final)?.w;
    Ok(ProfileReport {
        q: a.q,
        lambda: a.lambda,
        t_final,
        fits,
        residuals,
        w_inf: w.max_abs(),
    })
}

/// One `plot_<column>.dat` per CSV column: "t value" lines, empty cells skipped, with the
/// config hash, grid and beta in `#` header lines when a summary is present.
pub fn write_report(dir: &Path) -> Result<Vec<PathBuf>> {
    let csv = dir.join(CSV_FILE);
    if !csv.is_file() {
        return Err(Error::Io(format!("no {CSV_FILE} in {}", dir.display())));
    }
    let (header, rows) = read_csv(&csv)?;
    let mut preamble = String::new();
    if let Ok(s) = read_summary(dir) {
        preamble = format!(
            "# config {}\n# grid L={} N={} dt={}\n# q={} lambda={} epsilon={} beta={}\n",
            s.config_hash, s.l, s.n, s.dt, s.q, s.lambda, s.epsilon, s.beta
        );
    }
    let mut written = Vec::new();
    for (c, name) in header.iter().enumerate().skip(1) {
        let mut text = preamble.clone();
        text += &format!("# t {name}\n");
        for r in &rows {
            if let (Some(Some(t)), Some(Some(v))) = (r.first(), r.get(c)) {
                text += &format!("{t} {v}\n");
            }
        }
        let path = dir.join(format!("plot_{name}.dat"));
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
