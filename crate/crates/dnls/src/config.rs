//! Run configuration: flat `key = value` text with `#` comments.

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, Norm};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    Gaussian,
    Modulated,
    Odd,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Gaussian => "gaussian",
            ProfileKind::Modulated => "modulated",
            ProfileKind::Odd => "odd",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(ProfileKind::Gaussian),
            "modulated" => Some(ProfileKind::Modulated),
            "odd" => Some(ProfileKind::Odd),
            _ => None,
        }
    }
}

/// Initial data a e^{-(x-x0)^2/sigma^2}, times e^{i v x} for `Modulated`, or
/// a x e^{-x^2/sigma^2} for `Odd`; a is fixed by the Sigma-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialProfile {
    pub kind: ProfileKind,
    pub sigma: f64,
    pub x0: f64,
    pub velocity: f64,
}

impl InitialProfile {
    fn shape(&self, x: f64) -> C64 {
        let s2 = self.sigma * self.sigma;
        match self.kind {
            ProfileKind::Gaussian => C64::new((-(x - self.x0).powi(2) / s2).exp(), 0.0),
            ProfileKind::Modulated => {
                C64::from_polar((-(x - self.x0).powi(2) / s2).exp(), self.velocity * x)
            }
            ProfileKind::Odd => C64::new(x * (-x * x / s2).exp(), 0.0),
        }
    }

    /// Samples scaled so that ||u0||_Sigma = epsilon.
    pub fn sample(&self, grid: GridSpec, epsilon: f64) -> Result<ComplexField> {
        let f = ComplexField::from_fn(grid, |x| self.shape(x));
        if epsilon == 0.0 {
            return Ok(f.map(|_, _| C64::new(0.0, 0.0)));
        }
        let s = f.norm(Norm::Sigma)?;
        Ok(f.map(|_, v| v * (epsilon / s)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub q: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub profile: InitialProfile,
    pub l: f64,
    pub n: usize,
    pub dt: f64,
    pub t_max: f64,
    /// Snapshots at t = 0 and t = 2^{k/snapshots_per_octave}.
    pub snapshots_per_octave: u32,
    pub beta: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            q: 1.0,
            lambda: 1.0,
            epsilon: 0.1,
            profile: InitialProfile {
                kind: ProfileKind::Gaussian,
                sigma: 2.0,
                x0: 0.0,
                velocity: 0.0,
            },
            l: 1024.0,
            n: 1 << 15,
            dt: 0.01,
            t_max: 256.0,
            snapshots_per_octave: 4,
            beta: 0.1,
            seed: 0,
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

pub const MAX_DT: f64 = 0.1;

fn bad(field: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        msg: msg.into(),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| bad(key, format!("not a number: {v:?}")))
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>()
        .map_err(|_| bad(key, format!("not a non-negative integer: {v:?}")))
}

impl SimConfig {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.l, self.n)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |k: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(bad(k, "must be finite"))
            }
        };
        finite("q", self.q)?;
        finite("lambda", self.lambda)?;
        finite("epsilon", self.epsilon)?;
        finite("sigma", self.profile.sigma)?;
        finite("x0", self.profile.x0)?;
        finite("velocity", self.profile.velocity)?;
        if !(self.q > 0.0) {
            return Err(bad("q", "must be > 0"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(bad("epsilon", "must be >= 0"));
        }
        if !(self.profile.sigma > 0.0) {
            return Err(bad("sigma", "must be > 0"));
        }
        if !(self.l > 0.0) || !self.l.is_finite() {
            return Err(bad("l", "must be positive and finite"));
        }
        if self.n < 16 || !self.n.is_power_of_two() {
            return Err(bad("n", "must be a power of two >= 16"));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(bad("dt", format!("must lie in (0, {MAX_DT}]")));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(bad("t_max", "must be positive and finite"));
        }
        if self.snapshots_per_octave == 0 {
            return Err(bad("snapshots_per_octave", "must be >= 1"));
        }
        if !(self.beta > 0.0 && self.beta < 0.125) {
            return Err(bad("beta", "must lie in (0, 1/8)"));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.profile;
        let _ = writeln!(s, "q = {}", self.q);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "profile = {}", p.kind.name());
        let _ = writeln!(s, "sigma = {}", p.sigma);
        let _ = writeln!(s, "x0 = {}", p.x0);
        let _ = writeln!(s, "velocity = {}", p.velocity);
        let _ = writeln!(s, "l = {}", self.l);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "t_max = {}", self.t_max);
        let _ = writeln!(s, "snapshots_per_octave = {}", self.snapshots_per_octave);
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        s
    }

    /// Keys missing from `text` keep their default values.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = SimConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(&format!("line {}", i + 1), "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(bad(key, "given twice"));
            }
            c.set(key, value)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "q" => self.q = parse_f64(key, value)?,
            "lambda" => self.lambda = parse_f64(key, value)?,
            "epsilon" => self.epsilon = parse_f64(key, value)?,
            "profile" => {
                self.profile.kind = ProfileKind::parse(value).ok_or_else(|| {
                    bad(
                        key,
                        format!("unknown profile {value:?} (gaussian, modulated, odd)"),
                    )
                })?
            }
            "sigma" => self.profile.sigma = parse_f64(key, value)?,
            "x0" => self.profile.x0 = parse_f64(key, value)?,
            "velocity" => self.profile.velocity = parse_f64(key, value)?,
            "l" => self.l = parse_f64(key, value)?,
            "n" => self.n = parse_int(key, value)?,
            "dt" => self.dt = parse_f64(key, value)?,
            "t_max" => self.t_max = parse_f64(key, value)?,
            "snapshots_per_octave" => self.snapshots_per_octave = parse_int(key, value)?,
            "beta" => self.beta = parse_f64(key, value)?,
            "seed" => self.seed = parse_int(key, value)?,
            "output_dir" => {
                if value.is_empty() {
                    return Err(bad(key, "must not be empty"));
                }
                self.output_dir = PathBuf::from(value)
            }
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// SHA-256 of the serialized form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Snapshot times: 0, then 2^{k/d} for k >= 0 up to t_max, then t_max itself.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let d = self.snapshots_per_octave as f64;
        let mut out = vec![0.0];
        let mut k = 0;
        loop {
            let t = 2f64.powf(k as f64 / d);
            if t > self.t_max * (1.0 + 1e-12) {
                break;
            }
            out.push(t);
            k += 1;
        }
        if (out.last().copied().unwrap_or(0.0) - self.t_max).abs() > 1e-9 * self.t_max {
            out.push(self.t_max);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_round_trips() {
        let c = SimConfig::default();
        c.validate().unwrap();
        let back = SimConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn comments_and_defaults() {
        let c = SimConfig::parse("# focusing\nlambda = -1   # sign\n\n  n=4096\n").unwrap();
        assert_eq!(c.lambda, -1.0);
        assert_eq!(c.n, 4096);
        assert_eq!(c.q, 1.0);
    }

    #[test]
    fn field_level_errors() {
        let field = |text: &str| match SimConfig::parse(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field("q = 0"), "q");
        assert_eq!(field("n = 1000"), "n");
        assert_eq!(field("dt = 0.2"), "dt");
        assert_eq!(field("beta = 0.125"), "beta");
        assert_eq!(field("beta = 0"), "beta");
        assert_eq!(field("profile = box"), "profile");
        assert_eq!(field("colour = red"), "colour");
        assert_eq!(field("q = 1\nq = 2"), "q");
        assert_eq!(field("q 1"), "line 1");
        assert_eq!(field("lambda = nan"), "lambda");
    }

    #[test]
    fn snapshot_policy() {
        let mut c = SimConfig::default();
        let t = c.snapshot_times();
        assert_eq!(t.len(), 34);
        assert_eq!((t[0], t[1], t[5], t[33]), (0.0, 1.0, 2.0, 256.0));
        c.t_max = 3.0;
        assert_eq!(*c.snapshot_times().last().unwrap(), 3.0);
    }

    #[test]
    fn profiles_have_requested_norm() {
        let g = GridSpec::new(40.0, 1024).unwrap();
        for kind in [
            ProfileKind::Gaussian,
            ProfileKind::Modulated,
            ProfileKind::Odd,
        ] {
            let p = InitialProfile {
                kind,
                sigma: 1.5,
                x0: 0.5,
                velocity: 1.0,
            };
            let f = p.sample(g, 0.1).unwrap();
            assert!((f.norm(Norm::Sigma).unwrap() - 0.1).abs() < 1e-12);
            assert_eq!(p.sample(g, 0.0).unwrap().max_abs(), 0.0);
        }
    }

    proptest! {
        #[test]
        fn text_round_trip(
            q in 1e-3f64..10.0, lambda in -2.0f64..2.0, eps in 0.0f64..1.0,
            kind in 0usize..3, sigma in 0.1f64..5.0, x0 in -3.0f64..3.0, v in -2.0f64..2.0,
            l in 1.0f64..2000.0, logn in 4u32..20, dt in 1e-4f64..0.1, t_max in 0.5f64..1000.0,
            spo in 1u32..8, beta in 0.001f64..0.124, seed in any::<u64>(),
        ) {
            let c = SimConfig {
                q, lambda, epsilon: eps,
                profile: InitialProfile {
                    kind: [ProfileKind::Gaussian, ProfileKind::Modulated, ProfileKind::Odd][kind],
                    sigma, x0, velocity: v,
                },
                l, n: 1 << logn, dt, t_max, snapshots_per_octave: spo, beta, seed,
                output_dir: PathBuf::from("out/x y"),
            };
            let back = SimConfig::parse(&c.to_text()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
