//! Symmetric periodic grids and complex samples on them.

use crate::error::{Error, Result};
use crate::fft;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Uniform periodic grid on [-L, L) with N nodes; x = 0 sits at index N/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    l: f64,
    n: usize,
}

impl GridSpec {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive, got {l}"
            )));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "N must be even and >= 8, got {n}"
            )));
        }
        Ok(Self { l, n })
    }

    pub fn half_length(&self) -> f64 {
        self.l
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        PI / self.l
    }

    pub fn xi_max(&self) -> f64 {
        PI * self.n as f64 / (2.0 * self.l)
    }

    pub fn zero_index(&self) -> usize {
        self.n / 2
    }

    pub fn x(&self, k: usize) -> f64 {
        -self.l + k as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    /// Signed mode number of FFT-order index j.
    pub fn mode(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Frequency at FFT-order index j.
    pub fn xi(&self, j: usize) -> f64 {
        self.mode(j) as f64 * self.dxi()
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.xi(j)).collect()
    }

    /// FFT-order index holding mode m (m taken mod N).
    pub fn index_of_mode(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    /// Index of the mirror node of x_k; the node -L maps to itself.
    pub fn mirror(&self, k: usize) -> usize {
        (self.n - k) % self.n
    }

    /// The grid whose nodes (natural order) are this grid's frequencies.
    pub fn dual(&self) -> GridSpec {
        GridSpec {
            l: self.xi_max(),
            n: self.n,
        }
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.n == other.n && (self.l - other.l).abs() <= 1e-12 * self.l
    }

    pub fn check(&self, other: &GridSpec) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(L={}, N={}) vs (L={}, N={})",
                self.l, self.n, other.l, other.n
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Position,
    /// Frequency samples in FFT order.
    Frequency,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Position => "position",
            Space::Frequency => "frequency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    Linf,
    H1dot,
    H1,
    Sigma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: GridSpec,
    pub values: Vec<C64>,
    pub space: Space,
}

impl ComplexField {
    pub fn new(grid: GridSpec, values: Vec<C64>, space: Space) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for N = {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            space,
        })
    }

    pub fn zeros(grid: GridSpec, space: Space) -> Self {
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.len()],
            space,
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> C64) -> Self {
        Self {
            grid,
            values: grid.xs().into_iter().map(f).collect(),
            space: Space::Position,
        }
    }

    /// Frequency field sampled from `f(xi)` in FFT order.
    pub fn from_fn_freq(grid: GridSpec, f: impl Fn(f64) -> C64) -> Self {
        Self {
            grid,
            values: grid.xis().into_iter().map(f).collect(),
            space: Space::Frequency,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn expect_space(&self, s: Space) -> Result<()> {
        if self.space == s {
            Ok(())
        } else {
            Err(Error::WrongSpace {
                expected: s.name(),
                got: self.space.name(),
            })
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            Some(i) => Err(Error::NonFinite(i)),
            None => Ok(()),
        }
    }

    /// Quadrature weight: dx in position, dxi in frequency.
    pub fn weight(&self) -> f64 {
        match self.space {
            Space::Position => self.grid.dx(),
            Space::Frequency => self.grid.dxi(),
        }
    }

    /// Coordinate of sample i (x_k, or xi in FFT order).
    pub fn coord(&self, i: usize) -> f64 {
        match self.space {
            Space::Position => self.grid.x(i),
            Space::Frequency => self.grid.xi(i),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.weight()).sqrt()
    }

    pub fn norm(&self, which: Norm) -> Result<f64> {
        self.check_finite()?;
        match which {
            Norm::L2 => Ok(self.l2()),
            Norm::Linf => Ok(self.max_abs()),
            Norm::H1dot => {
                self.expect_space(Space::Position)?;
                Ok(self.h1dot_unchecked())
            }
            Norm::H1 => {
                self.expect_space(Space::Position)?;
                Ok(self.l2().hypot(self.h1dot_unchecked()))
            }
            Norm::Sigma => {
                self.expect_space(Space::Position)?;
                let xf: f64 = self
                    .values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| (self.grid.x(k) * v.norm()).powi(2))
                    .sum::<f64>()
                    * self.grid.dx();
                Ok((self.l2().powi(2) + self.h1dot_unchecked().powi(2) + xf).sqrt())
            }
        }
    }

    fn h1dot_unchecked(&self) -> f64 {
        let g = &self.grid;
        let mut buf = self.values.clone();
        fft::forward(&mut buf);
        let s: f64 = buf
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != g.len() / 2)
            .map(|(j, v)| g.xi(j).powi(2) * v.norm_sqr())
            .sum();
        (s * g.dx() / g.len() as f64).sqrt()
    }

    /// Spectral derivative; the Nyquist mode is dropped.
    pub fn derivative(&self) -> Result<ComplexField> {
        self.expect_space(Space::Position)?;
        let g = self.grid;
        let mut buf = self.values.clone();
        fft::forward(&mut buf);
        for (j, v) in buf.iter_mut().enumerate() {
            *v = if j == g.len() / 2 {
                C64::new(0.0, 0.0)
            } else {
                *v * C64::new(0.0, g.xi(j))
            };
        }
        fft::inverse(&mut buf);
        let s = 1.0 / g.len() as f64;
        buf.iter_mut().for_each(|v| *v *= s);
        Ok(ComplexField {
            grid: g,
            values: buf,
            space: Space::Position,
        })
    }

    pub fn reflect(&self) -> ComplexField {
        let g = self.grid;
        let values = match self.space {
            Space::Position => (0..g.len()).map(|k| self.values[g.mirror(k)]).collect(),
            // FFT order: -m lives at index (N - j) mod N as well.
            Space::Frequency => (0..g.len())
                .map(|j| self.values[(g.len() - j) % g.len()])
                .collect(),
        };
        ComplexField {
            grid: g,
            values,
            space: self.space,
        }
    }

    pub fn value_at_zero(&self) -> Result<C64> {
        self.expect_space(Space::Position)?;
        Ok(self.values[self.grid.zero_index()])
    }

    /// Sample at xi = 0 for frequency fields.
    pub fn value_at_origin(&self) -> C64 {
        match self.space {
            Space::Position => self.values[self.grid.zero_index()],
            Space::Frequency => self.values[0],
        }
    }

    /// max(|f(-L)|, |f(L - dx)|) / max|f|, zero for the zero field.
    pub fn boundary_ratio(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let n = self.len();
        self.values[0].norm().max(self.values[n - 1].norm()) / m
    }

    pub fn check_boundary(&self, tol: f64) -> Result<()> {
        let r = self.boundary_ratio();
        if r < tol {
            Ok(())
        } else {
            Err(Error::BoundaryMass { ratio: r, tol })
        }
    }

    /// Frequency field (FFT order) relabelled as a position field on the dual grid.
    pub fn to_velocity(&self) -> Result<ComplexField> {
        self.expect_space(Space::Frequency)?;
        let n = self.len();
        let values = (0..n).map(|i| self.values[(i + n / 2) % n]).collect();
        Ok(ComplexField {
            grid: self.grid.dual(),
            values,
            space: Space::Position,
        })
    }

    /// Inverse of `to_velocity`: `primal` is the grid whose dual carries this field.
    pub fn from_velocity(&self, primal: GridSpec) -> Result<ComplexField> {
        self.expect_space(Space::Position)?;
        self.grid.check(&primal.dual())?;
        let n = self.len();
        let values = (0..n).map(|j| self.values[(j + n / 2) % n]).collect();
        Ok(ComplexField {
            grid: primal,
            values,
            space: Space::Frequency,
        })
    }

    pub fn map(&self, f: impl Fn(usize, C64) -> C64) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| f(i, *v))
                .collect(),
            space: self.space,
        }
    }

    pub fn sub(&self, other: &ComplexField) -> ComplexField {
        self.map(|i, v| v - other.values[i])
    }

    pub fn max_diff(&self, other: &ComplexField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

/// Standard transform with continuum normalization:
/// (F0 f)(xi_m) = (2 pi)^{-1/2} sum_k e^{-i x_k xi_m} f_k dx, FFT order.
pub fn fourier(f: &ComplexField) -> Result<ComplexField> {
    f.expect_space(Space::Position)?;
    let g = f.grid;
    let mut buf = f.values.clone();
    fft::forward(&mut buf);
    let s = g.dx() / (2.0 * PI).sqrt();
    for (j, v) in buf.iter_mut().enumerate() {
        let sign = if j % 2 == 0 { s } else { -s };
        *v *= sign;
    }
    Ok(ComplexField {
        grid: g,
        values: buf,
        space: Space::Frequency,
    })
}

/// Inverse of `fourier`.
pub fn inverse_fourier(f: &ComplexField) -> Result<ComplexField> {
    f.expect_space(Space::Frequency)?;
    let g = f.grid;
    let s = g.dxi() / (2.0 * PI).sqrt();
    let mut buf: Vec<C64> = f
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| if j % 2 == 0 { v * s } else { -v * s })
        .collect();
    fft::inverse(&mut buf);
    Ok(ComplexField {
        grid: g,
        values: buf,
        space: Space::Position,
    })
}

/// Trigonometric interpolant of position samples evaluated at a + j h, j < count.
/// The interpolant is periodic; callers decide what happens outside [-L, L).
pub fn eval_equispaced(f: &ComplexField, a: f64, h: f64, count: usize) -> Result<Vec<C64>> {
    f.expect_space(Space::Position)?;
    let g = f.grid;
    let n = g.len();
    let mut buf = f.values.clone();
    fft::forward(&mut buf);
    // p(x) = (1/N) sum_m F_m e^{i xi_m (x + L)}
    let shift = a + g.half_length();
    let c: Vec<C64> = (0..n)
        .map(|i| {
            let m = i as i64 - (n / 2) as i64;
            let j = g.index_of_mode(m);
            buf[j] * fft::cis_mul(m as f64, g.dxi() * shift) / n as f64
        })
        .collect();
    Ok(fft::chirp_sum(&c, g.dxi() * h, count))
}

/// Band-limited resampling onto `target`; nodes outside the source box get zero.
pub fn resample(f: &ComplexField, target: GridSpec) -> Result<ComplexField> {
    f.expect_space(Space::Position)?;
    f.check_finite()?;
    f.check_boundary(1e-8)?;
    interpolate_zero_extended(f, target.x(0), target.dx(), target)
}

/// Periodic band-limited interpolation onto `target` with no decay check.
pub fn interpolate_periodic(f: &ComplexField, target: GridSpec) -> Result<ComplexField> {
    let values = eval_equispaced(f, target.x(0), target.dx(), target.len())?;
    ComplexField::new(target, values, Space::Position)
}

pub(crate) fn interpolate_zero_extended(
    f: &ComplexField,
    a: f64,
    h: f64,
    target: GridSpec,
) -> Result<ComplexField> {
    let l = f.grid.half_length();
    let mut values = eval_equispaced(f, a, h, target.len())?;
    for (j, v) in values.iter_mut().enumerate() {
        let x = a + j as f64 * h;
        if x < -l || x >= l {
            *v = C64::new(0.0, 0.0);
        }
    }
    ComplexField::new(target, values, Space::Position)
}
