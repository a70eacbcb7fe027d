//! Diffeomorphisms of T^n held as displacement fields: validation, composition,
//! Newton inversion, commutators and the C^0 / C^1 metrics.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{lift, DisplacementField, GridSpec, Vec2};
use crate::interp::{Interp, Interpolant};

/// Raw validity bound on `sup |Du|` for near-identity maps.
pub const CHART_C1_BOUND: f64 = 1.0;

const NEWTON_MAX_ITER: usize = 60;
const NEWTON_TOL: f64 = 1e-15;
const NEWTON_ACCEPT: f64 = 1e-11;

/// How a map was admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffeoClass {
    /// Inside the chart around the identity: `sup |Du| < 1` and `det(I + Du) > 0`.
    NearIdentity,
    /// Injective by construction (shears, leafwise circle maps, their conjugates);
    /// only finiteness is checked.
    Structured,
}

/// Closed arc `[lo, hi]` of the first coordinate, stored as a lift with `0 <= hi - lo < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(hi >= lo && hi - lo < 1.0) {
            return Err(Error::Support(format!("bad arc [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.lo).rem_euclid(1.0) <= self.hi - self.lo
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn dilate(&self, r: f64) -> Option<Self> {
        Self::new(self.lo - r, self.hi + r).ok()
    }

    /// Smallest arc containing both, or `None` if that is the whole circle.
    pub fn hull(&self, other: &Self) -> Option<Self> {
        let best = [-1.0, 0.0, 1.0]
            .iter()
            .map(|&k| {
                let lo = self.lo.min(other.lo + k);
                let hi = self.hi.max(other.hi + k);
                (hi - lo, lo, hi)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))?;
        Self::new(best.1, best.2).ok()
    }

    /// True if `self` lies inside `outer`.
    pub fn within(&self, outer: &Self) -> bool {
        let shift = (self.lo - outer.lo).rem_euclid(1.0);
        shift + self.length() <= outer.length()
    }
}

#[derive(Debug, Clone)]
pub struct TorusDiffeo {
    field: DisplacementField,
    c1_bound: f64,
    interp: Interp,
    class: DiffeoClass,
    support: Option<Support>,
    identity: bool,
    cache: OnceLock<Interpolant>,
}

impl PartialEq for TorusDiffeo {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
    }
}

/// Validates a near-identity displacement field with the default interpolation.
pub fn make_diffeo(field: DisplacementField) -> Result<TorusDiffeo> {
    TorusDiffeo::new(field, Interp::default())
}

fn op_norm(m: &[[f64; 2]; 2], dim: usize) -> f64 {
    if dim == 1 {
        return m[0][0].abs();
    }
    let t = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
    let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    ((t + (t * t - 4.0 * d * d).max(0.0).sqrt()) / 2.0).sqrt()
}

fn det_plus_identity(m: &[[f64; 2]; 2], dim: usize) -> f64 {
    if dim == 1 {
        1.0 + m[0][0]
    } else {
        (1.0 + m[0][0]) * (1.0 + m[1][1]) - m[0][1] * m[1][0]
    }
}

impl TorusDiffeo {
    pub fn new(field: DisplacementField, interp: Interp) -> Result<Self> {
        Self::validated(field, interp, DiffeoClass::NearIdentity)
    }

    pub fn structured(field: DisplacementField, interp: Interp) -> Result<Self> {
        Self::validated(field, interp, DiffeoClass::Structured)
    }

    pub fn with_class(field: DisplacementField, interp: Interp, class: DiffeoClass) -> Result<Self> {
        Self::validated(field, interp, class)
    }

    fn validated(field: DisplacementField, interp: Interp, class: DiffeoClass) -> Result<Self> {
        field.check_finite()?;
        let dim = field.grid().dim();
        let identity = field.is_zero();
        let (c1_bound, worst_det) = if identity {
            (0.0, (0, 1.0))
        } else {
            let jac = match class {
                DiffeoClass::NearIdentity => field.jacobian(),
                DiffeoClass::Structured => field.jacobian_fd(),
            };
            let c1 = jac.iter().map(|m| op_norm(m, dim)).fold(0.0, f64::max);
            let worst = jac
                .iter()
                .enumerate()
                .map(|(i, m)| (i, det_plus_identity(m, dim)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((0, 1.0));
            (c1, worst)
        };
        if class == DiffeoClass::NearIdentity && worst_det.1 <= 0.0 {
            return Err(Error::Orientation {
                node: worst_det.0,
                det: worst_det.1,
            });
        }
        if class == DiffeoClass::NearIdentity && c1_bound >= CHART_C1_BOUND {
            return Err(Error::ChartViolation(format!(
                "sup |Du| = {c1_bound:.4} >= {CHART_C1_BOUND}"
            )));
        }
        Ok(Self {
            field,
            c1_bound,
            interp,
            class,
            support: None,
            identity,
            cache: OnceLock::new(),
        })
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self {
            field: DisplacementField::zeros(grid),
            c1_bound: 0.0,
            interp: Interp::default(),
            class: DiffeoClass::NearIdentity,
            support: None,
            identity: true,
            cache: OnceLock::new(),
        }
    }

    /// Rigid translation `x -> x + a`.
    pub fn translation(grid: GridSpec, a: Vec2) -> Self {
        let a = [lift(a[0]), lift(a[1])];
        let mut t = Self::identity(grid);
        t.field = DisplacementField::from_fn(grid, |_| a);
        t.class = DiffeoClass::Structured;
        t.identity = a == [0.0, 0.0];
        t
    }

    pub fn with_interp(mut self, interp: Interp) -> Self {
        if interp != self.interp {
            self.interp = interp;
            self.cache = OnceLock::new();
        }
        self
    }

    /// Zeroes the displacement at every node outside `support` and records it.
    pub fn masked(mut self, support: Support) -> Self {
        let grid = self.grid();
        let mut changed = false;
        for idx in 0..grid.len() {
            if !support.contains(grid.point(idx)[0]) && self.field.get(idx) != [0.0, 0.0] {
                self.field.set(idx, [0.0, 0.0]);
                changed = true;
            }
        }
        if changed {
            self.cache = OnceLock::new();
            self.identity = self.field.is_zero();
        }
        self.support = Some(support);
        self
    }

    /// Records a support without masking; fails if some node outside it moves.
    pub fn with_support(self, support: Support) -> Result<Self> {
        if let Some(node) = self.first_node_outside(&support) {
            return Err(Error::Support(format!(
                "node {node} moves outside declared support [{}, {}]",
                support.lo, support.hi
            )));
        }
        Ok(Self {
            support: Some(support),
            ..self
        })
    }

    /// First node outside `support` whose displacement is not bitwise zero.
    pub fn first_node_outside(&self, support: &Support) -> Option<usize> {
        let grid = self.grid();
        (0..grid.len())
            .find(|&idx| !support.contains(grid.point(idx)[0]) && self.field.get(idx) != [0.0, 0.0])
    }

    pub fn grid(&self) -> GridSpec {
        self.field.grid()
    }

    pub fn field(&self) -> &DisplacementField {
        &self.field
    }

    pub fn into_field(self) -> DisplacementField {
        self.field
    }

    pub fn c1_bound(&self) -> f64 {
        self.c1_bound
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn class(&self) -> DiffeoClass {
        self.class
    }

    pub fn support(&self) -> Option<Support> {
        self.support
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn interpolant(&self) -> &Interpolant {
        self.cache
            .get_or_init(|| Interpolant::new(&self.field, self.interp))
    }

    /// Interpolated displacement at an arbitrary point.
    pub fn displacement_at(&self, x: Vec2) -> Vec2 {
        if self.is_identity() {
            return [0.0, 0.0];
        }
        self.interpolant().value(x)
    }

    /// `f(x)` as a lift near `x`.
    pub fn apply(&self, x: Vec2) -> Vec2 {
        let u = self.displacement_at(x);
        [x[0] + u[0], x[1] + u[1]]
    }

    fn combined_class(a: &Self, b: &Self) -> DiffeoClass {
        if a.class == DiffeoClass::NearIdentity && b.class == DiffeoClass::NearIdentity {
            DiffeoClass::NearIdentity
        } else {
            DiffeoClass::Structured
        }
    }
}

/// `h = f o g`, with `f` evaluated by interpolation at the nodes' images under `g`.
pub fn compose(f: &TorusDiffeo, g: &TorusDiffeo) -> Result<TorusDiffeo> {
    f.grid().ensure_same(&g.grid())?;
    if f.is_identity() {
        return Ok(g.clone());
    }
    let grid = g.grid();
    let support = match (f.support, g.support) {
        (Some(a), Some(b)) => a.hull(&b),
        _ => None,
    };
    if g.is_identity() {
        let mut out = f.clone();
        out.support = support;
        return Ok(out);
    }
    let it = f.interpolant();
    let field = DisplacementField::from_par_fn(grid, |idx| {
        let x = grid.point(idx);
        let ug = g.field.get(idx);
        if let Some(s) = &support {
            if !s.contains(x[0]) {
                return [0.0, 0.0];
            }
        }
        let uf = it.value([x[0] + ug[0], x[1] + ug[1]]);
        [lift(ug[0] + uf[0]), lift(ug[1] + uf[1])]
    });
    let class = TorusDiffeo::combined_class(f, g);
    let mut h = TorusDiffeo::with_class(field, f.interp, class).map_err(|e| match e {
        Error::ChartViolation(m) => Error::ChartViolation(format!("composition left the chart: {m}")),
        other => other,
    })?;
    h.support = support;
    Ok(h)
}

/// Newton solve of `x + u(x) = y` at every node `y`.
pub fn invert(f: &TorusDiffeo) -> Result<TorusDiffeo> {
    if f.is_identity() {
        return Ok(f.clone());
    }
    let grid = f.grid();
    let dim = grid.dim();
    let it = f.interpolant();
    let support = f.support;
    let sols: Vec<Result<Vec2>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let y = grid.point(idx);
            if let Some(s) = &support {
                if !s.contains(y[0]) {
                    return Ok([0.0, 0.0]);
                }
            }
            let u0 = f.field.get(idx);
            let x0 = [y[0] - u0[0], y[1] - u0[1]];
            let x = newton_preimage(it, dim, y, x0).map_err(|residual| Error::InversionFailed {
                node: idx,
                residual,
            })?;
            Ok([lift(x[0] - y[0]), lift(x[1] - y[1])])
        })
        .collect();
    let mut field = DisplacementField::zeros(grid);
    for (idx, s) in sols.into_iter().enumerate() {
        field.set(idx, s?);
    }
    let mut inv = TorusDiffeo::with_class(field, f.interp, f.class)?;
    inv.support = support;
    Ok(inv)
}

/// `f^-1 o g`, solving `y + u_f(y) = g(x)` at every node so that
/// `compose(f, compose_inverse(f, g))` reproduces `g` to Newton tolerance.
pub fn compose_inverse(f: &TorusDiffeo, g: &TorusDiffeo) -> Result<TorusDiffeo> {
    f.grid().ensure_same(&g.grid())?;
    if f.is_identity() {
        return Ok(g.clone());
    }
    let grid = g.grid();
    let dim = grid.dim();
    let it = f.interpolant();
    let sols: Vec<Result<Vec2>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.point(idx);
            let (ug, uf) = (g.field.get(idx), f.field.get(idx));
            if ug == [0.0, 0.0] && uf == [0.0, 0.0] {
                return Ok([0.0, 0.0]);
            }
            let z = [x[0] + ug[0], x[1] + ug[1]];
            let y = newton_preimage(it, dim, z, [z[0] - uf[0], z[1] - uf[1]]).map_err(|residual| {
                Error::InversionFailed { node: idx, residual }
            })?;
            Ok([lift(y[0] - x[0]), lift(y[1] - x[1])])
        })
        .collect();
    let mut field = DisplacementField::zeros(grid);
    for (idx, s) in sols.into_iter().enumerate() {
        field.set(idx, s?);
    }
    let mut h = TorusDiffeo::with_class(field, f.interp, TorusDiffeo::combined_class(f, g))?;
    h.support = match (f.support, g.support) {
        (Some(a), Some(b)) => a.hull(&b),
        _ => None,
    };
    Ok(h)
}

/// Damped Newton for `x + u(x) = y` on the lift; returns the residual on failure.
pub(crate) fn newton_preimage(
    it: &Interpolant,
    dim: usize,
    y: Vec2,
    mut x: Vec2,
) -> std::result::Result<Vec2, f64> {
    let resid = |x: Vec2, v: Vec2| -> Vec2 {
        let mut r = [0.0; 2];
        for a in 0..dim {
            r[a] = lift(x[a] + v[a] - y[a]);
        }
        r
    };
    let norm = |r: Vec2| r[0].abs().max(r[1].abs());
    let (mut v, mut jac) = it.eval(x);
    let mut r = resid(x, v);
    let mut rn = norm(r);
    for _ in 0..NEWTON_MAX_ITER {
        if rn <= NEWTON_TOL {
            return Ok(x);
        }
        let step = if dim == 1 {
            [r[0] / (1.0 + jac[0][0]), 0.0]
        } else {
            let (a, b, c, d) = (1.0 + jac[0][0], jac[0][1], jac[1][0], 1.0 + jac[1][1]);
            let det = a * d - b * c;
            [(d * r[0] - b * r[1]) / det, (a * r[1] - c * r[0]) / det]
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let xn = [x[0] - t * step[0], x[1] - t * step[1]];
            let (vn, jn) = it.eval(xn);
            let rnew = resid(xn, vn);
            let nn = norm(rnew);
            if nn < rn || (nn == rn && t == 1.0 && nn <= NEWTON_ACCEPT) {
                x = xn;
                v = vn;
                jac = jn;
                r = rnew;
                let stalled = nn == rn;
                rn = nn;
                accepted = !stalled;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let _ = v;
    if rn <= NEWTON_ACCEPT {
        Ok(x)
    } else {
        Err(rn)
    }
}

/// `[g, h] = g o h o g^-1 o h^-1`.
///
/// The two inverses are solved by Newton at the points where they are needed, so the
/// result is the commutator of the interpolated maps; in particular `[q, q]` is the
/// identity to solver precision.
pub fn commutator(g: &TorusDiffeo, h: &TorusDiffeo) -> Result<TorusDiffeo> {
    g.grid().ensure_same(&h.grid())?;
    let grid = g.grid();
    let support = match (g.support, h.support) {
        (Some(a), Some(b)) => a.hull(&b),
        _ => None,
    };
    if g.is_identity() || h.is_identity() || g.field == h.field {
        let mut id = TorusDiffeo::identity(grid).with_interp(g.interp);
        id.support = support;
        return Ok(id);
    }
    let dim = grid.dim();
    let (ig, ih) = (g.interpolant(), h.interpolant());
    let vals: Vec<Result<Vec2>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let z = grid.point(idx);
            if let Some(s) = &support {
                if !s.contains(z[0]) {
                    return Ok([0.0, 0.0]);
                }
            }
            let fail = |residual| Error::InversionFailed { node: idx, residual };
            let uh = h.field.get(idx);
            let p1 = newton_preimage(ih, dim, z, [z[0] - uh[0], z[1] - uh[1]]).map_err(fail)?;
            let ug = ig.value(p1);
            let p0 = newton_preimage(ig, dim, p1, [p1[0] - ug[0], p1[1] - ug[1]]).map_err(fail)?;
            let v = ih.value(p0);
            let p3 = [p0[0] + v[0], p0[1] + v[1]];
            let w = ig.value(p3);
            Ok([lift(p3[0] + w[0] - z[0]), lift(p3[1] + w[1] - z[1])])
        })
        .collect();
    let mut field = DisplacementField::zeros(grid);
    for (idx, v) in vals.into_iter().enumerate() {
        field.set(idx, v?);
    }
    let class = TorusDiffeo::combined_class(g, h);
    let mut c = TorusDiffeo::with_class(field, g.interp, class)?;
    c.support = support;
    Ok(c)
}

/// Max over nodes of the toroidal distance `|f(x) - g(x)|`.
pub fn c0_distance(f: &TorusDiffeo, g: &TorusDiffeo) -> f64 {
    field_distance(f.field(), g.field())
}

pub(crate) fn field_distance(a: &DisplacementField, b: &DisplacementField) -> f64 {
    let grid = a.grid();
    let dim = grid.dim();
    (0..grid.len())
        .map(|idx| {
            let (ua, ub) = (a.get(idx), b.get(idx));
            (0..dim)
                .map(|c| lift(ua[c] - ub[c]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Sup over nodes of the operator norm of `Du`.
pub fn c1_norm(f: &TorusDiffeo) -> f64 {
    f.c1_bound
}

/// Sup-norm of the derivative of the difference `u_f - u_g` (lifted node-wise).
pub fn c1_distance(f: &TorusDiffeo, g: &TorusDiffeo) -> f64 {
    let grid = f.grid();
    let diff = DisplacementField::zeros(grid).map(|idx, _| {
        let (a, b) = (f.field.get(idx), g.field.get(idx));
        [lift(a[0] - b[0]), lift(a[1] - b[1])]
    });
    diff.jacobian()
        .iter()
        .map(|m| op_norm(m, grid.dim()))
        .fold(0.0, f64::max)
}
