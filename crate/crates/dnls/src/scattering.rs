//! Scattering data of H = -1/2 d^2/dx^2 + q delta for q > 0.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringCoeffs {
    q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JostSign {
    Plus,
    Minus,
}

impl ScatteringCoeffs {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_finite() && q > 0.0 {
            Ok(Self { q })
        } else {
            Err(Error::Domain(format!("q must be > 0, got {q}")))
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// T(xi) = i xi / (i xi - q)
    pub fn transmission(&self, xi: f64) -> C64 {
        C64::new(0.0, xi) / C64::new(-self.q, xi)
    }

    /// R(xi) = q / (i xi - q)
    pub fn reflection(&self, xi: f64) -> C64 {
        C64::new(self.q, 0.0) / C64::new(-self.q, xi)
    }

    /// dT/dxi = dR/dxi = -i q / (i xi - q)^2
    pub fn d_transmission(&self, xi: f64) -> C64 {
        let d = C64::new(-self.q, xi);
        C64::new(0.0, -self.q) / (d * d)
    }

    /// (S1, S2) = (T(|x|), R(|x|))
    pub fn s_vector(&self, x: f64) -> (C64, C64) {
        let a = x.abs();
        (self.transmission(a), self.reflection(a))
    }

    /// Jost solutions normalized by f(0, xi) = 1.
    pub fn jost(&self, sign: JostSign, x: f64, xi: f64) -> C64 {
        let x = match sign {
            JostSign::Plus => x,
            JostSign::Minus => -x,
        };
        if x >= 0.0 {
            C64::from_polar(1.0, x * xi)
        } else {
            let t = self.transmission(xi);
            let r = self.reflection(xi);
            (C64::from_polar(1.0, x * xi) + r * C64::from_polar(1.0, -x * xi)) / t
        }
    }

    /// Distorted Fourier kernel K(x, xi).
    pub fn kernel(&self, x: f64, xi: f64) -> C64 {
        if xi > 0.0 {
            let t = self.transmission(xi);
            if x >= 0.0 {
                t * C64::from_polar(1.0, x * xi)
            } else {
                C64::from_polar(1.0, x * xi) + self.reflection(xi) * C64::from_polar(1.0, -x * xi)
            }
        } else if xi < 0.0 {
            self.kernel(-x, -xi)
        } else {
            C64::new(0.0, 0.0)
        }
    }

    /// Expanded kernel e^{i x xi} + R(|xi|) e^{i |x| |xi|}.
    pub fn kernel_expanded(&self, x: f64, xi: f64) -> C64 {
        if xi == 0.0 {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(1.0, x * xi)
            + self.reflection(xi.abs()) * C64::from_polar(1.0, x.abs() * xi.abs())
    }
}
