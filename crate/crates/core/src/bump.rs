//! Polynomial cutoff profiles on the line.

use serde::{Deserialize, Serialize};

use crate::diffeo::Support;
use crate::error::{Error, Result};

/// Degree-7 smoothstep: 0 below 0, 1 above 1, three continuous derivatives at both ends.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let x4 = x * x * x * x;
        x4 * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)))
    }
}

/// `chi = 1` on `[lo, hi]`, falling to 0 over `width` on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaperProfile {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
    /// Polynomial degree of the transition.
    pub order: u32,
}

impl TaperProfile {
    pub fn new(lo: f64, hi: f64, width: f64) -> Result<Self> {
        if !(lo <= hi && width > 0.0 && hi - lo + 2.0 * width < 1.0) {
            return Err(Error::Input(format!(
                "bad taper: plateau [{lo}, {hi}], width {width}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            width,
            order: 7,
        })
    }

    /// Value at `b`, read on the lift nearest the plateau.
    pub fn chi(&self, b: f64) -> f64 {
        let mid = 0.5 * (self.lo + self.hi);
        let b = mid + crate::grid::lift(b - mid);
        if b < self.lo {
            smoothstep((b - (self.lo - self.width)) / self.width)
        } else if b > self.hi {
            smoothstep(((self.hi + self.width) - b) / self.width)
        } else {
            1.0
        }
    }

    pub fn plateau(&self) -> Support {
        Support {
            lo: self.lo,
            hi: self.hi,
        }
    }

    /// Closed set outside which `chi` vanishes.
    pub fn support(&self) -> Support {
        Support {
            lo: self.lo - self.width,
            hi: self.hi + self.width,
        }
    }

    /// Profile whose plateau is `support`.
    pub fn around(support: Support, width: f64) -> Result<Self> {
        Self::new(support.lo, support.hi, width)
    }
}
