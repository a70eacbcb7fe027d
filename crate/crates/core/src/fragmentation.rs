//! Splitting a near-identity map of T^2 into two factors, each supported in one
//! of two annuli covering the torus.
//!
//! Chart `c` is `(offset_c, offset_c + 1) x T^1` in the first coordinate, with
//! offsets 0 and 1/2. With `X` the displacement of `f`, the factors are
//! `f_1 = id + lambda_1 X` and `f_2 = f_1^{-1} o f`, so `f = f_1 o f_2`.

use serde::{Deserialize, Serialize};

use crate::bump::TaperProfile;
use crate::diffeo::{compose_inverse, Support, TorusDiffeo};
use crate::error::{Error, Result};
use crate::grid::{DisplacementField, GridSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusCover {
    /// Left end of each chart in the first torus coordinate.
    pub offsets: [f64; 2],
}

impl Default for AnnulusCover {
    fn default() -> Self {
        Self { offsets: [0.0, 0.5] }
    }
}

impl AnnulusCover {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The open chart as an arc, shrunk by `margin` on both ends.
    pub fn chart_arc(&self, chart: usize, margin: f64) -> Support {
        let o = self.offsets[chart];
        Support {
            lo: o + margin,
            hi: o + 1.0 - margin,
        }
    }

    /// True if `x1` lies in the open chart.
    pub fn in_chart(&self, chart: usize, x1: f64) -> bool {
        let r = (x1 - self.offsets[chart]).rem_euclid(1.0);
        r > 0.0 && r < 1.0
    }

    /// Every node lies in some chart.
    pub fn covers(&self, grid: GridSpec) -> bool {
        (0..grid.len()).all(|idx| {
            let x1 = grid.point(idx)[0];
            (0..self.len()).any(|c| self.in_chart(c, x1))
        })
    }

    fn node_shift(&self, chart: usize, grid: GridSpec) -> Result<usize> {
        let s = self.offsets[chart] * grid.n() as f64;
        if s.fract() != 0.0 {
            return Err(Error::GridMismatch(format!(
                "chart offset {} is not on the grid",
                self.offsets[chart]
            )));
        }
        Ok(s as usize % grid.n())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    /// `lambda_1`; `lambda_2 = 1 - lambda_1`.
    pub first: TaperProfile,
}

impl Default for PartitionOfUnity {
    fn default() -> Self {
        Self {
            first: TaperProfile::new(0.3, 0.7, 0.1).expect("static profile"),
        }
    }
}

impl PartitionOfUnity {
    pub fn lambda(&self, chart: usize, x1: f64) -> f64 {
        let l1 = self.first.chi(x1);
        if chart == 0 {
            l1
        } else {
            1.0 - l1
        }
    }

    /// Closed support of `lambda_c` as an arc of the first coordinate.
    pub fn support(&self, chart: usize) -> Support {
        if chart == 0 {
            self.first.support()
        } else {
            Support {
                lo: self.first.hi,
                hi: self.first.lo + 1.0,
            }
        }
    }

    /// Supports sit strictly inside their charts.
    pub fn subordinate_to(&self, cover: &AnnulusCover) -> bool {
        (0..2).all(|c| self.support(c).within(&cover.chart_arc(c, 1e-9)))
    }
}

/// `(f_1, f_2)` with `f = f_1 o f_2` and `supp f_c` inside `supp lambda_c`.
pub fn fragment(
    f: &TorusDiffeo,
    cover: &AnnulusCover,
    pou: &PartitionOfUnity,
) -> Result<(TorusDiffeo, TorusDiffeo)> {
    let grid = f.grid();
    if grid.dim() != 2 {
        return Err(Error::GridMismatch("fragmentation acts on T^2".into()));
    }
    if !pou.subordinate_to(cover) {
        return Err(Error::Support("partition not subordinate to the cover".into()));
    }
    let (s1, s2) = (pou.support(0), pou.support(1));
    if f.is_identity() {
        let id = TorusDiffeo::identity(grid).with_interp(f.interp());
        return Ok((id.clone().masked(s1), id.masked(s2)));
    }
    let x1 = f.field().map(|idx, u| {
        let l = pou.lambda(0, grid.point(idx)[0]);
        [l * u[0], l * u[1]]
    });
    let f1 = TorusDiffeo::new(x1, f.interp())
        .map_err(|e| Error::ChartViolation(format!("partial field 1 outside W': {e}")))?
        .masked(s1);
    let f2 = compose_inverse(&f1, f)
        .map_err(|e| Error::ChartViolation(format!("partial field 2 outside W': {e}")))?;
    // f_2(x) = x exactly where lambda_1(x) = 1 or X(x) = 0
    let fixed = f2.field().map(|idx, u| {
        if f.field().get(idx) == [0.0, 0.0] {
            [0.0, 0.0]
        } else {
            u
        }
    });
    let f2 = TorusDiffeo::with_class(fixed, f2.interp(), f2.class())?.masked(s2);
    Ok((f1, f2))
}

/// Moves a map supported in `chart` into that chart's standard annulus coordinates.
pub fn chart_transport(f: &TorusDiffeo, cover: &AnnulusCover, chart: usize) -> Result<TorusDiffeo> {
    shift_chart(f, cover, chart, true)
}

/// Inverse of [`chart_transport`].
pub fn chart_untransport(f: &TorusDiffeo, cover: &AnnulusCover, chart: usize) -> Result<TorusDiffeo> {
    shift_chart(f, cover, chart, false)
}

fn shift_chart(f: &TorusDiffeo, cover: &AnnulusCover, chart: usize, forward: bool) -> Result<TorusDiffeo> {
    let grid = f.grid();
    let n = grid.n();
    let shift = cover.node_shift(chart, grid)?;
    let offset = cover.offsets[chart];
    let (from, delta) = if forward {
        (offset, -offset)
    } else {
        (0.0, offset)
    };
    let frame = Support {
        lo: from,
        hi: from + 1.0,
    };
    // the chart is open: its boundary row must not move
    if let Some(node) = (0..n).map(|i1| grid.flat(shift_index(from, n), i1)).find(|&idx| f.field().get(idx) != [0.0, 0.0]) {
        return Err(Error::Support(format!(
            "node {node} on the boundary of chart {chart} moves"
        )));
    }
    let src = f.field();
    let field = DisplacementField::zeros(grid).map(|idx, _| {
        let [i0, i1] = grid.indices(idx);
        let j0 = if forward { (i0 + shift) % n } else { (i0 + n - shift) % n };
        src.get(grid.flat(j0, i1))
    });
    let support = f.support().map(|s| {
        let lo = frame.lo + (s.lo - frame.lo).rem_euclid(1.0);
        Support {
            lo: lo + delta,
            hi: lo + s.length() + delta,
        }
    });
    let mut out = TorusDiffeo::with_class(field, f.interp(), f.class())?;
    if let Some(s) = support {
        if s.hi > frame.hi + delta {
            return Err(Error::Support(format!("support leaves chart {chart}")));
        }
        out = out.with_support(s)?;
    }
    Ok(out)
}

fn shift_index(x1: f64, n: usize) -> usize {
    ((x1.rem_euclid(1.0) * n as f64).round() as usize) % n
}
