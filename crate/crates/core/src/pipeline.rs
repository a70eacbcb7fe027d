//! End-to-end factorization of a near-identity map of T^2 into commutators.
//!
//! `f` is fragmented into two chart factors; each is split along three
//! foliations, and each leaf-preserving piece becomes a rotation bracket followed
//! by a Herman bracket. Listing the pairs chart by chart and foliation by
//! foliation gives twelve pairs whose brackets compose, left to right, to `f`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohomology::{certify_diophantine, DiophantineVector, GOLDEN};
use crate::diffeo::{c0_distance, c1_distance, c1_norm, commutator, compose, TorusDiffeo};
use crate::error::{Error, Result};
use crate::foliation::{foliation_factors, leaf_preservation_error, FoliationSpec};
use crate::fragmentation::{chart_transport, chart_untransport, fragment, AnnulusCover, PartitionOfUnity};
use crate::grid::{DisplacementField, GridSpec};
use crate::herman::HermanConfig;
use crate::leafwise::{decompose_leafwise, LeafwiseConfig};

pub const CHARTS: usize = 2;
pub const FOLIATIONS: usize = 3;
pub const PAIRS: usize = CHARTS * FOLIATIONS * 2;

/// Commutator-length bounds reported next to the achieved count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderBounds {
    /// `9 (n + 1)` for T^n, here `n = 2`.
    pub dimension_bound: usize,
    /// `9 cov(T^2) = 18`.
    pub cover_bound: usize,
    /// Per chart of the cover.
    pub per_chart: usize,
}

impl Default for OrderBounds {
    fn default() -> Self {
        Self {
            dimension_bound: 27,
            cover_bound: 18,
            per_chart: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub grid: usize,
    /// Leaf rotation number.
    pub gamma: f64,
    pub tau: f64,
    pub k_scan: u64,
    /// Largest accepted end-to-end residual.
    pub tol: f64,
    /// Largest accepted `c1_norm(f)`.
    pub trust_region: f64,
    pub foliation_amplitude: f64,
    pub step_radius: f64,
    pub leafwise: LeafwiseConfig,
    pub cover: AnnulusCover,
    pub partition: PartitionOfUnity,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid: 256,
            gamma: GOLDEN,
            tau: 2.0,
            k_scan: 10_000,
            tol: 1e-6,
            trust_region: 0.05,
            foliation_amplitude: 0.04,
            step_radius: 0.02,
            leafwise: LeafwiseConfig {
                herman: HermanConfig {
                    tol: 1e-12,
                    max_iter: 8,
                    trust_region: 0.2,
                    stall_tol: 1e-7,
                },
                s0: 0.5,
                ..LeafwiseConfig::default()
            },
            cover: AnnulusCover::default(),
            partition: PartitionOfUnity::default(),
        }
    }
}

impl PipelineConfig {
    pub fn certify(&self) -> Result<DiophantineVector> {
        certify_diophantine(&[self.gamma], self.tau, self.k_scan)
    }

    /// Geometry margin left inside a chart once every factor support is dilated.
    pub fn chart_slack(&self) -> f64 {
        let spread = self.step_radius + 2.0 * self.foliation_amplitude + self.leafwise.width;
        (0..CHARTS)
            .map(|c| {
                let s = self.partition.support(c);
                let arc = self.cover.chart_arc(c, 0.0);
                (s.lo - arc.lo).min(arc.hi - s.hi) - spread
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BracketStage {
    HermanBracket,
    RotationBracket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub chart: usize,
    pub foliation: usize,
    pub stage: BracketStage,
}

#[derive(Debug, Clone)]
pub struct CommutatorPair {
    pub g: TorusDiffeo,
    pub h: TorusDiffeo,
    pub provenance: Provenance,
}

impl CommutatorPair {
    /// `[g, h]` is the identity by inspection.
    pub fn is_trivial(&self) -> bool {
        self.g.is_identity() || self.h.is_identity() || self.g.field() == self.h.field()
    }
}

#[derive(Debug, Clone)]
pub struct CommutatorList {
    pub pairs: Vec<CommutatorPair>,
}

impl CommutatorList {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Drops pairs whose bracket is trivially the identity.
    pub fn pruned(&self) -> Self {
        Self {
            pairs: self.pairs.iter().filter(|p| !p.is_trivial()).cloned().collect(),
        }
    }

    /// The same list with pair `i` and `j` exchanged.
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.swap(i, j);
        Self { pairs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResidual {
    pub stage: String,
    pub chart: Option<usize>,
    pub foliation: Option<usize>,
    pub residual: f64,
}

/// Herman residual of every leaf, leaf `j` sitting at base point `j / len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafCurve {
    pub chart: usize,
    pub foliation: usize,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub residual_c0: f64,
    pub residual_c1: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamp {
    pub unix_seconds: u64,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub grid: usize,
    pub config: PipelineConfig,
    pub gamma: DiophantineVector,
    pub m: usize,
    pub bounds: OrderBounds,
    pub stages: Vec<StageResidual>,
    /// Worst per-leaf Herman residual for every chart and foliation.
    pub leaf_residuals: Vec<Vec<f64>>,
    pub leaf_curves: Vec<LeafCurve>,
    pub verification: Verification,
    pub tol: f64,
    pub passed: bool,
    pub probe: Option<ProbeTable>,
    pub warnings: Vec<String>,
    /// Wall-clock data; the only part of the report that differs between identical runs.
    pub timestamp: Timestamp,
}

fn stage(name: &str, chart: Option<usize>, foliation: Option<usize>, residual: f64) -> StageResidual {
    StageResidual {
        stage: name.to_string(),
        chart,
        foliation,
        residual,
    }
}

fn wrap(chart: usize, foliation: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Stage {
        chart,
        foliation,
        source: Box::new(e),
    }
}

struct ChartOutput {
    pairs: Vec<CommutatorPair>,
    stages: Vec<StageResidual>,
    leaf_residuals: Vec<Vec<f64>>,
    leaf_curves: Vec<LeafCurve>,
}

fn decompose_chart(
    piece: &TorusDiffeo,
    chart: usize,
    gamma: &DiophantineVector,
    cfg: &PipelineConfig,
) -> Result<ChartOutput> {
    let cover = &cfg.cover;
    let local = chart_transport(piece, cover, chart).map_err(wrap(chart, 0))?;
    let dec = foliation_factors(&local, cfg.foliation_amplitude, cfg.step_radius).map_err(wrap(chart, 0))?;
    let [g1, g2, g3] = &dec.factors;
    let rebuilt = compose(g1, &compose(g2, g3)?)?;
    let mut stages = vec![stage("foliation", Some(chart), None, c0_distance(&rebuilt, &local))];
    let per_foliation = (1..=FOLIATIONS)
        .into_par_iter()
        .map(|i| -> Result<(Vec<CommutatorPair>, Vec<StageResidual>, LeafCurve)> {
            let err = wrap(chart, i);
            let spec = FoliationSpec::new(i, cfg.foliation_amplitude)?;
            let g = &dec.factors[i - 1];
            let psi = dec.leaf_map(i).map_err(&err)?;
            let lw = decompose_leafwise(&psi, gamma, &cfg.leafwise).map_err(&err)?;
            let [(ga, ha), (gb, hb)] = lw.pairs(Some(&spec)).map_err(&err)?;
            let bracket = compose(&commutator(&ga, &ha)?, &commutator(&gb, &hb)?).map_err(&err)?;
            let stages = vec![
                stage("leaf-preservation", Some(chart), Some(i), leaf_preservation_error(g, &spec)),
                stage("leafwise-herman", Some(chart), Some(i), lw.herman.worst_residual()),
                stage("leafwise", Some(chart), Some(i), c0_distance(&bracket, g)),
            ];
            let mut pairs = Vec::with_capacity(2);
            for ((g, h), kind) in [(ga, ha), (gb, hb)].into_iter().zip([BracketStage::RotationBracket, BracketStage::HermanBracket]) {
                pairs.push(CommutatorPair {
                    g: chart_untransport(&g, cover, chart).map_err(&err)?,
                    h: chart_untransport(&h, cover, chart).map_err(&err)?,
                    provenance: Provenance {
                        chart,
                        foliation: i,
                        stage: kind,
                    },
                });
            }
            let curve = LeafCurve {
                chart,
                foliation: i,
                residuals: lw.herman.residuals.clone(),
            };
            Ok((pairs, stages, curve))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::with_capacity(2 * FOLIATIONS);
    let mut leaf = Vec::with_capacity(FOLIATIONS);
    let mut leaf_curves = Vec::with_capacity(FOLIATIONS);
    for (p, s, curve) in per_foliation {
        pairs.extend(p);
        stages.extend(s);
        leaf.push(curve.residuals.iter().copied().fold(0.0, f64::max));
        leaf_curves.push(curve);
    }
    Ok(ChartOutput {
        pairs,
        stages,
        leaf_residuals: vec![leaf],
        leaf_curves,
    })
}

/// Factors `f` into [`PAIRS`] commutator pairs and verifies the product.
pub fn decompose(f: &TorusDiffeo, cfg: &PipelineConfig) -> Result<(CommutatorList, RunReport)> {
    let start = Instant::now();
    let grid = f.grid();
    if grid.dim() != 2 {
        return Err(Error::GridMismatch("the pipeline acts on T^2".into()));
    }
    if cfg.chart_slack() <= 0.0 {
        return Err(Error::Input(format!(
            "factor supports do not fit in the charts (slack {:.3})",
            cfg.chart_slack()
        )));
    }
    let c1 = c1_norm(f);
    if c1 > cfg.trust_region {
        return Err(Error::TrustRegion(format!(
            "c1_norm(f) = {c1:.4e} exceeds {:.4e}",
            cfg.trust_region
        )));
    }
    let gamma = cfg.certify()?;
    let (f1, f2) = fragment(f, &cfg.cover, &cfg.partition)?;
    let mut stages = vec![stage("fragmentation", None, None, c0_distance(&compose(&f1, &f2)?, f))];
    let charts = [f1, f2]
        .par_iter()
        .enumerate()
        .map(|(chart, piece)| decompose_chart(piece, chart, &gamma, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::with_capacity(PAIRS);
    let mut leaf_residuals = Vec::new();
    let mut leaf_curves = Vec::new();
    for out in charts {
        pairs.extend(out.pairs);
        stages.extend(out.stages);
        leaf_residuals.extend(out.leaf_residuals);
        leaf_curves.extend(out.leaf_curves);
    }
    let list = CommutatorList { pairs };
    let verification = verify(f, &list)?;
    let mut warnings = Vec::new();
    for s in &stages {
        if s.residual > cfg.tol {
            warnings.push(format!(
                "stage {} (chart {:?}, foliation {:?}) residual {:.3e} above tolerance",
                s.stage, s.chart, s.foliation, s.residual
            ));
        }
    }
    let report = RunReport {
        grid: grid.n(),
        config: cfg.clone(),
        gamma,
        m: list.len(),
        bounds: OrderBounds::default(),
        stages,
        leaf_residuals,
        leaf_curves,
        passed: verification.residual_c0 <= cfg.tol,
        verification,
        tol: cfg.tol,
        probe: None,
        warnings,
        timestamp: Timestamp::since(start),
    };
    Ok((list, report))
}

impl Timestamp {
    pub fn since(start: Instant) -> Self {
        Self {
            unix_seconds: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            elapsed_ms: start.elapsed().as_millis(),
        }
    }
}

/// Product of the brackets, left to right.
pub fn bracket_product(list: &CommutatorList, grid: GridSpec) -> Result<TorusDiffeo> {
    let brackets = list
        .pairs
        .par_iter()
        .map(|p| commutator(&p.g, &p.h))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = TorusDiffeo::identity(grid);
    for b in &brackets {
        acc = compose(&acc, b)?;
    }
    Ok(acc)
}

/// Residuals of the bracket product against `f`.
pub fn verify(f: &TorusDiffeo, list: &CommutatorList) -> Result<Verification> {
    let prod = bracket_product(list, f.grid())?;
    Ok(Verification {
        residual_c0: c0_distance(&prod, f),
        residual_c1: c1_distance(&prod, f),
        pairs: list.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTable {
    pub deltas: Vec<f64>,
    /// `c0(factor(f + delta w), factor(f)) / delta`, one row per delta, `g` then `h` per pair.
    pub ratios: Vec<Vec<f64>>,
    /// Worst relative change between consecutive rows.
    pub drift: Vec<f64>,
    pub max_drift: f64,
    pub stable: bool,
}

pub const PROBE_DELTAS: [f64; 3] = [1e-4, 5e-5, 2.5e-5];
pub const PROBE_GRID: usize = 128;
pub const PROBE_DRIFT: f64 = 0.2;

/// Finite-difference stability of every factor of `f` in direction `w`.
pub fn smoothness_probe(
    f: &TorusDiffeo,
    w: &DisplacementField,
    deltas: &[f64],
    cfg: &PipelineConfig,
) -> Result<ProbeTable> {
    let (base, _) = decompose(f, cfg)?;
    let factors = |list: &CommutatorList| -> Vec<TorusDiffeo> {
        list.pairs.iter().flat_map(|p| [p.g.clone(), p.h.clone()]).collect()
    };
    let base = factors(&base);
    let mut ratios = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let field = f.field().axpby(1.0, w, delta)?;
        let moved = TorusDiffeo::with_class(field, f.interp(), f.class())?;
        let (list, _) = decompose(&moved, cfg)?;
        let row = factors(&list)
            .iter()
            .zip(&base)
            .map(|(a, b)| c0_distance(a, b) / delta)
            .collect::<Vec<_>>();
        ratios.push(row);
    }
    let scale = ratios.iter().flatten().copied().fold(0.0, f64::max);
    let drift: Vec<f64> = ratios
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .filter(|(a, b)| a.max(**b) > 1e-3 * scale)
                .map(|(a, b)| (a - b).abs() / a.max(*b))
                .fold(0.0, f64::max)
        })
        .collect();
    let max_drift = drift.iter().copied().fold(0.0, f64::max);
    Ok(ProbeTable {
        deltas: deltas.to_vec(),
        ratios,
        drift,
        max_drift,
        stable: max_drift <= PROBE_DRIFT,
    })
}
