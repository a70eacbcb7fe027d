//! Leaf-preserving maps of `B x T^1` as families of circle maps, and their
//! factorization into two commutators.
//!
//! Rows of a 2D grid are the leaves: the first coordinate `b` is the leaf label
//! and the second is the circle coordinate `t`. A leaf-preserving `F` with
//! `F_b = R_{lambda(b)} o [R_gamma, h_b]` is written as `[G, H] o [G~, H~]`, where
//! `G~` is a shear by `gamma` tapered off outside the family support, `H~` is the
//! uncurried `h` family, and `(G, H)` realizes the rotations `R_{lambda(b)}` through
//! Möbius pairs that contract to the identity along `hyperbolic(sigma s0)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::TaperProfile;
use crate::cohomology::DiophantineVector;
use crate::diffeo::{Support, TorusDiffeo};
use crate::error::{Error, Result};
use crate::foliation::FoliationSpec;
use crate::grid::{lift, DisplacementField, GridSpec};
use crate::herman::{herman_solve, HermanConfig};
use crate::interp::{Interp, Interpolant};
use crate::mobius::{boundary_displacement, hyperbolic, mobius_pair, Mat2};

pub const DEFAULT_LEAF_TOL: f64 = 1e-8;
/// Adjacent leaves may differ by at most this over the number of leaves.
pub const VARIATION_CONSTANT: f64 = 1.0;

/// A family of circle maps indexed by the rows of a 2D grid.
#[derive(Debug, Clone)]
pub struct LeafFamily {
    grid: GridSpec,
    leaves: Vec<TorusDiffeo>,
    support: Support,
}

impl LeafFamily {
    /// Checks that every leaf outside `support` is the identity.
    pub fn new(grid: GridSpec, leaves: Vec<TorusDiffeo>, support: Support) -> Result<Self> {
        if grid.dim() != 2 || leaves.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} leaves for a {}-point base",
                leaves.len(),
                grid.n()
            )));
        }
        let leaf_grid = GridSpec::new(1, grid.n())?;
        for (j, leaf) in leaves.iter().enumerate() {
            leaf.grid().ensure_same(&leaf_grid)?;
            if !support.contains(base_point(grid, j)) && !leaf.is_identity() {
                return Err(Error::Support(format!(
                    "leaf {j} moves outside the family support"
                )));
            }
        }
        Ok(Self { grid, leaves, support })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn leaves(&self) -> &[TorusDiffeo] {
        &self.leaves
    }

    pub fn leaf(&self, j: usize) -> &TorusDiffeo {
        &self.leaves[j]
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn base_points(&self) -> Vec<f64> {
        (0..self.len()).map(|j| base_point(self.grid, j)).collect()
    }

    /// `max_j c0(leaf_j, leaf_{j+1})`.
    pub fn max_adjacent_variation(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|j| {
                let (a, b) = (self.leaves[j].field(), self.leaves[(j + 1) % n].field());
                a.component(0)
                    .iter()
                    .zip(b.component(0))
                    .map(|(x, y)| lift(x - y).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

fn base_point(grid: GridSpec, j: usize) -> f64 {
    grid.point(grid.flat(j, 0))[0]
}

/// Smallest arc containing every row on which `f` moves, or the declared support of `f`.
fn row_support(f: &TorusDiffeo) -> Result<Support> {
    if let Some(s) = f.support() {
        return Ok(s);
    }
    let grid = f.grid();
    let n = grid.n();
    let moving: Vec<bool> = (0..n)
        .map(|j| (0..n).any(|k| f.field().get(grid.flat(j, k)) != [0.0, 0.0]))
        .collect();
    let Some(first) = moving.iter().position(|&m| m) else {
        return Support::new(0.0, 0.0);
    };
    // longest run of still rows, walking around the circle from a moving row
    let (mut best, mut best_start) = (0, 0);
    let mut run = 0;
    for step in 1..=n {
        let j = (first + step) % n;
        if moving[j] {
            if run > best {
                best = run;
                best_start = (j + n - run) % n;
            }
            run = 0;
        } else {
            run += 1;
        }
    }
    if best == 0 {
        return Err(Error::Support("every leaf moves; no compact support".into()));
    }
    let h = grid.spacing();
    let lo = ((best_start + best) % n) as f64 * h;
    let len = (n - best - 1) as f64 * h;
    Support::new(lo, lo + len)
}

/// Reads each row of a leaf-preserving `f` as a circle map.
pub fn curry(f: &TorusDiffeo, leaf_tol: f64) -> Result<LeafFamily> {
    let grid = f.grid();
    if grid.dim() != 2 {
        return Err(Error::GridMismatch("leaf families live on a 2D grid".into()));
    }
    let n = grid.n();
    if let Some(idx) = (0..grid.len()).find(|&idx| f.field().get(idx)[0].abs() > leaf_tol) {
        return Err(Error::NotLeafPreserving(format!(
            "node {idx} moves the base coordinate by {:.3e}",
            f.field().get(idx)[0]
        )));
    }
    let support = row_support(f)?;
    let leaf_grid = GridSpec::new(1, n)?;
    let leaves = (0..n)
        .into_par_iter()
        .map(|j| {
            let row = &f.field().component(1)[grid.flat(j, 0)..grid.flat(j, 0) + n];
            if row.iter().all(|&v| v == 0.0) {
                return Ok(TorusDiffeo::identity(leaf_grid).with_interp(f.interp()));
            }
            let field = DisplacementField::from_components(leaf_grid, vec![row.to_vec()])?;
            TorusDiffeo::new(field, f.interp()).map_err(|e| Error::Leaf {
                leaf: j,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LeafFamily::new(grid, leaves, support)
}

/// `(b, t) -> (b, leaf_b(t))`; the base coordinate is untouched.
pub fn uncurry(family: &LeafFamily) -> Result<TorusDiffeo> {
    let bound = VARIATION_CONSTANT / family.len() as f64;
    let var = family.max_adjacent_variation();
    if var > bound {
        return Err(Error::Input(format!(
            "adjacent leaves differ by {var:.3e}, more than {bound:.3e}"
        )));
    }
    let grid = family.grid;
    let n = grid.n();
    let mut t = Vec::with_capacity(grid.len());
    for leaf in &family.leaves {
        t.extend_from_slice(leaf.field().component(0));
    }
    let field = DisplacementField::from_components(grid, vec![vec![0.0; n * n], t])?;
    let interp = family.leaves.first().map(|l| l.interp()).unwrap_or_default();
    TorusDiffeo::structured(field, interp)?.with_support(family.support)
}

/// Per-leaf Herman data.
#[derive(Debug, Clone)]
pub struct LeafHerman {
    pub lambda: Vec<f64>,
    pub h: Vec<TorusDiffeo>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
}

impl LeafHerman {
    pub fn worst_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Independent Herman solves on every leaf.
pub fn leafwise_herman(
    family: &LeafFamily,
    gamma: &DiophantineVector,
    cfg: &HermanConfig,
) -> Result<LeafHerman> {
    if gamma.dim() != 1 {
        return Err(Error::GridMismatch("leaf rotations are one-dimensional".into()));
    }
    let sols = family
        .leaves
        .par_iter()
        .enumerate()
        .map(|(j, leaf)| {
            if leaf.is_identity() {
                let id = TorusDiffeo::identity(leaf.grid()).with_interp(leaf.interp());
                return Ok((0.0, id, 0.0, 0));
            }
            let sol = herman_solve(leaf, gamma, cfg).map_err(|e| Error::Leaf {
                leaf: j,
                source: Box::new(e),
            })?;
            Ok((sol.lambda[0], sol.h, sol.residual, sol.iterations))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = LeafHerman {
        lambda: Vec::with_capacity(sols.len()),
        h: Vec::with_capacity(sols.len()),
        residuals: Vec::with_capacity(sols.len()),
        iterations: Vec::with_capacity(sols.len()),
    };
    for (l, h, r, it) in sols {
        out.lambda.push(l);
        out.h.push(h);
        out.residuals.push(r);
        out.iterations.push(it);
    }
    Ok(out)
}

/// `(b, t) -> (b, t + gamma chi(b))` with `chi = 1` on `family_support`.
pub fn taper_rotation_gamma(
    grid: GridSpec,
    gamma: f64,
    family_support: Support,
    width: f64,
) -> Result<TorusDiffeo> {
    let profile = TaperProfile::around(family_support, width)?;
    let g = lift(gamma);
    let field = DisplacementField::from_fn(grid, |p| [0.0, g * profile.chi(p[0])]);
    Ok(TorusDiffeo::structured(field, Interp::default())?.masked(profile.support()))
}

/// Fiberwise Möbius pairs with `[G_b, H_b] = R_{lambda(b)}` on the family support,
/// contracting to the identity through `hyperbolic(sigma s0)` outside it.
#[derive(Debug, Clone)]
pub struct RotationFamily {
    pub lambda: Vec<f64>,
    pub support: Support,
    pub path: TaperProfile,
    pub s0: f64,
    pub cap: f64,
    interp: Interpolant,
}

impl RotationFamily {
    pub fn new(lambda: Vec<f64>, support: Support, width: f64, s0: f64, cap: f64) -> Result<Self> {
        let n = lambda.len();
        let base = GridSpec::new(1, n)?;
        let worst = lambda.iter().map(|l| l.abs()).fold(0.0, f64::max);
        // probe the largest rotation once so the error names the needed s0
        if worst > 0.0 {
            mobius_pair(worst, s0, cap)?;
        }
        for (j, &l) in lambda.iter().enumerate() {
            if l != 0.0 && !support.contains(j as f64 / n as f64) {
                return Err(Error::Support(format!("rotation at leaf {j} outside the family support")));
            }
        }
        let field = DisplacementField::from_components(base, vec![lambda.clone()])?;
        Ok(Self {
            interp: Interpolant::new(&field, Interp::default()),
            lambda,
            support,
            path: TaperProfile::around(support, width)?,
            s0,
            cap,
        })
    }

    pub fn lambda_at(&self, b: f64) -> f64 {
        if !self.support.contains(b) {
            return 0.0;
        }
        let n = self.lambda.len() as f64;
        let j = b.rem_euclid(1.0) * n;
        if j.fract() == 0.0 {
            return self.lambda[j as usize % self.lambda.len()];
        }
        self.interp.value([b, 0.0])[0]
    }

    /// `(G_b, H_b)`.
    pub fn matrices(&self, b: f64) -> Result<(Mat2, Mat2)> {
        let sigma = self.path.chi(b);
        if sigma == 0.0 {
            return Ok((Mat2::identity(), Mat2::identity()));
        }
        if sigma < 1.0 {
            let m = hyperbolic(sigma * self.s0);
            return Ok((m, m));
        }
        let p = mobius_pair(self.lambda_at(b), self.s0, self.cap)?;
        Ok((p.a, p.b))
    }

    pub fn outer_support(&self) -> Support {
        self.path.support()
    }
}

fn circle_displacement(m: &Mat2, t: f64) -> f64 {
    if *m == Mat2::identity() {
        0.0
    } else {
        lift(boundary_displacement(m, t))
    }
}

/// The sampled pair `(G, H)` on the `(b, t)` grid.
pub fn rotation_family_commutator(grid: GridSpec, family: &RotationFamily) -> Result<(TorusDiffeo, TorusDiffeo)> {
    let dec_g = sample_conjugated(grid, None, family.outer_support(), |b, t| {
        Ok(circle_displacement(&family.matrices(b)?.0, t))
    })?;
    let dec_h = sample_conjugated(grid, None, family.outer_support(), |b, t| {
        Ok(circle_displacement(&family.matrices(b)?.1, t))
    })?;
    Ok((dec_g, dec_h))
}

/// Samples `phi o psi o phi^{-1}` on `grid` for a leafwise `psi` moving `t` by `disp(b, t)`.
fn sample_conjugated(
    grid: GridSpec,
    spec: Option<&FoliationSpec>,
    support: Support,
    disp: impl Fn(f64, f64) -> Result<f64> + Sync,
) -> Result<TorusDiffeo> {
    let vals = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let [y, t] = grid.point(idx);
            if !support.contains(y) {
                return Ok([0.0, 0.0]);
            }
            match spec {
                Some(s) => {
                    let d = disp(y - s.h(t), t)?;
                    Ok(s.conjugate_displacement(t, d))
                }
                None => Ok([0.0, disp(y, t)?]),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut field = DisplacementField::zeros(grid);
    for (idx, v) in vals.into_iter().enumerate() {
        field.set(idx, v);
    }
    Ok(TorusDiffeo::structured(field, Interp::default())?.masked(support))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafwiseConfig {
    pub herman: HermanConfig,
    pub leaf_tol: f64,
    /// Width of the taper and of the Möbius contraction band.
    pub width: f64,
    pub s0: f64,
    pub theta_cap: f64,
}

impl Default for LeafwiseConfig {
    fn default() -> Self {
        Self {
            herman: HermanConfig {
                trust_region: 0.2,
                ..HermanConfig::default()
            },
            leaf_tol: DEFAULT_LEAF_TOL,
            width: 0.06,
            s0: 0.25,
            theta_cap: crate::mobius::DEFAULT_THETA_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeafFactor {
    RotationG,
    RotationH,
    Taper,
    Herman,
}

/// `F = [G, H] o [G~, H~]` with every factor known off the grid.
#[derive(Debug, Clone)]
pub struct LeafwiseDecomposition {
    pub grid: GridSpec,
    pub gamma: f64,
    pub family_support: Support,
    pub taper: TaperProfile,
    pub rotation: RotationFamily,
    pub herman: LeafHerman,
    /// Uncurried `h` family.
    pub h: TorusDiffeo,
}

impl LeafwiseDecomposition {
    /// Displacement of the leaf map of `factor` at `(b, t)`.
    pub fn leaf_displacement(&self, factor: LeafFactor, b: f64, t: f64) -> Result<f64> {
        Ok(match factor {
            LeafFactor::RotationG => circle_displacement(&self.rotation.matrices(b)?.0, t),
            LeafFactor::RotationH => circle_displacement(&self.rotation.matrices(b)?.1, t),
            LeafFactor::Taper => lift(self.gamma) * self.taper.chi(b),
            LeafFactor::Herman => {
                if self.h.is_identity() || !self.family_support.contains(b) {
                    return Ok(0.0);
                }
                let n = self.grid.n() as f64;
                let (jb, jt) = (b.rem_euclid(1.0) * n, t.rem_euclid(1.0) * n);
                if jb.fract() == 0.0 && jt.fract() == 0.0 {
                    let n = self.grid.n();
                    self.h.field().get(self.grid.flat(jb as usize % n, jt as usize % n))[1]
                } else {
                    self.h.displacement_at([b, t])[1]
                }
            }
        })
    }

    /// Support in the base coordinate, widened by `spread` for a conjugated chart.
    pub fn declared_support(&self, factor: LeafFactor, spread: f64) -> Option<Support> {
        match factor {
            LeafFactor::Herman => self.family_support.dilate(spread),
            _ => self.taper.support().dilate(spread),
        }
    }

    /// `factor` conjugated into the straightened chart of `spec`, or on the leaf grid itself.
    pub fn sample(&self, factor: LeafFactor, spec: Option<&FoliationSpec>) -> Result<TorusDiffeo> {
        let spread = match spec {
            Some(s) if s.i != 1 => s.c,
            _ => 0.0,
        };
        let support = self
            .declared_support(factor, spread)
            .ok_or_else(|| Error::Support("factor support covers the whole circle".into()))?;
        if factor == LeafFactor::Herman && self.h.is_identity() {
            return Ok(TorusDiffeo::identity(self.grid).masked(support));
        }
        let spec = spec.filter(|s| s.i != 1);
        sample_conjugated(self.grid, spec, support, |b, t| self.leaf_displacement(factor, b, t))
    }

    /// `[(G, H), (G~, H~)]`: the rotation pair first so that the product is `F`.
    pub fn pairs(&self, spec: Option<&FoliationSpec>) -> Result<[(TorusDiffeo, TorusDiffeo); 2]> {
        Ok([
            (self.sample(LeafFactor::RotationG, spec)?, self.sample(LeafFactor::RotationH, spec)?),
            (self.sample(LeafFactor::Taper, spec)?, self.sample(LeafFactor::Herman, spec)?),
        ])
    }
}

/// Splits a leaf-preserving `f` on the `(b, t)` grid into two commutators.
pub fn decompose_leafwise(
    f: &TorusDiffeo,
    gamma: &DiophantineVector,
    cfg: &LeafwiseConfig,
) -> Result<LeafwiseDecomposition> {
    let family = curry(f, cfg.leaf_tol)?;
    let herman = leafwise_herman(&family, gamma, &cfg.herman)?;
    let grid = f.grid();
    let h_family = LeafFamily::new(grid, herman.h.clone(), family.support())?;
    let h = uncurry(&h_family)?;
    let rotation = RotationFamily::new(herman.lambda.clone(), family.support(), cfg.width, cfg.s0, cfg.theta_cap)?;
    Ok(LeafwiseDecomposition {
        grid,
        gamma: gamma.gamma[0],
        family_support: family.support(),
        taper: TaperProfile::around(family.support(), cfg.width)?,
        rotation,
        herman,
        h,
    })
}
