//! Splitting of each level into a small part fitting an `L^q` budget and a
//! sparse large part, and the resulting sparsity exponent δ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::par;
use crate::wavelet::{CoefficientPyramid, Scale};

/// Default budget constant.
pub const DEFAULT_BUDGET: f64 = 1.0;

/// Split of one level. Positions index the level's interior coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSplit {
    pub j: Scale,
    /// Small set `K_j`, in ascending-magnitude order.
    pub small: Vec<usize>,
    /// Large set `L_j`, in ascending-magnitude order.
    pub large: Vec<usize>,
    /// `M_j`: interior coefficients at the level.
    pub total: usize,
    /// `N_j = |K_j|`.
    pub absorbed: usize,
    /// `C·2^j / j^{2q}`.
    pub budget: f64,
    /// `Σ_{k∈K_j} |c|^q`.
    pub small_sum: f64,
}

impl LevelSplit {
    pub fn excess(&self) -> usize {
        self.total - self.absorbed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsitySplit {
    pub q: f64,
    pub budget_constant: f64,
    pub levels: Vec<LevelSplit>,
    /// Estimated δ; `-inf` when every level is fully absorbed.
    pub delta: f64,
    /// Levels that entered the δ regression.
    pub delta_scales: Vec<Scale>,
}

impl SparsitySplit {
    pub fn level(&self, j: Scale) -> Option<&LevelSplit> {
        self.levels.iter().find(|l| l.j == j)
    }
}

/// Splits every level and estimates δ over all of them.
pub fn sparsity_split(pyramid: &CoefficientPyramid, q: f64, c: f64) -> Result<SparsitySplit> {
    sparsity_split_over(pyramid, q, c, None)
}

/// Splits every level; δ is regressed over `scales` when given.
///
/// Per level, interior coefficients are ordered by magnitude with ties
/// broken by position, and `N_j` is the longest prefix whose `|c|^q` sum stays
/// within `C·2^j / j^{2q}`.
pub fn sparsity_split_over(
    pyramid: &CoefficientPyramid,
    q: f64,
    c: f64,
    scales: Option<(Scale, Scale)>,
) -> Result<SparsitySplit> {
    if !(q > 0.0) || !q.is_finite() || !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need q > 0 and C > 0, got q = {q}, C = {c}"
        )));
    }
    if let Some((j1, j2)) = scales {
        if j1 > j2 || j1 < pyramid.j_coarse() || j2 > pyramid.j_fine() {
            return Err(Error::ScaleRangeTooNarrow {
                j1,
                j2,
                reason: format!("pyramid spans [{}, {}]", pyramid.j_coarse(), pyramid.j_fine()),
            });
        }
    }
    let levels = par::map(pyramid.levels(), |level| {
        let coeffs = level.interior_coeffs();
        let mut order: Vec<usize> = (0..coeffs.len()).collect();
        // stable: equal magnitudes keep position order
        order.sort_by(|&a, &b| coeffs[a].abs().total_cmp(&coeffs[b].abs()));
        let jf = level.j as f64;
        let budget = c * jf.exp2() / jf.powf(2.0 * q);
        let mut sum = 0.0;
        let mut absorbed = 0;
        for &k in &order {
            let next = sum + coeffs[k].abs().powf(q);
            if next > budget {
                break;
            }
            sum = next;
            absorbed += 1;
        }
        let large = order.split_off(absorbed);
        LevelSplit {
            j: level.j,
            small: order,
            large,
            total: coeffs.len(),
            absorbed,
            budget,
            small_sum: sum,
        }
    });
    let (j1, j2) = scales.unwrap_or((pyramid.j_coarse(), pyramid.j_fine()));
    let points: Vec<(Scale, f64)> = levels
        .iter()
        .filter(|l| l.j >= j1 && l.j <= j2 && l.excess() > 0)
        .map(|l| (l.j, (l.excess() as f64).log2()))
        .collect();
    let (delta, delta_scales) = upper_envelope_slope(&points);
    Ok(SparsitySplit {
        q,
        budget_constant: c,
        levels,
        delta,
        delta_scales,
    })
}

/// Slope of `y` against `j`. A non-monotone sequence is refitted on the
/// points whose residual from the first fit is at least the median residual.
fn upper_envelope_slope(points: &[(Scale, f64)]) -> (f64, Vec<Scale>) {
    match points.len() {
        0 => return (f64::NEG_INFINITY, Vec::new()),
        1 => {
            let (j, y) = points[0];
            return (y / j as f64, vec![j]);
        }
        _ => {}
    }
    let fit = |pts: &[(Scale, f64)]| {
        let x: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        line_fit(&x, &y).expect("distinct scales")
    };
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let monotone = ys.windows(2).all(|w| w[1] >= w[0]) || ys.windows(2).all(|w| w[1] <= w[0]);
    let first = fit(points);
    if monotone || points.len() < 4 {
        return (first.slope, points.iter().map(|p| p.0).collect());
    }
    let resid: Vec<f64> = points
        .iter()
        .map(|&(j, y)| y - (first.slope * j as f64 + first.intercept))
        .collect();
    let mut sorted = resid.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[(sorted.len() - 1) / 2];
    let upper: Vec<(Scale, f64)> = points
        .iter()
        .zip(&resid)
        .filter(|(_, &r)| r >= median)
        .map(|(p, _)| *p)
        .collect();
    if upper.len() < 2 {
        return (first.slope, points.iter().map(|p| p.0).collect());
    }
    (fit(&upper).slope, upper.iter().map(|p| p.0).collect())
}

/// Range of p for which fractional integration can make p-leaders usable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PBound {
    /// `H_min >= 0` (or δ = -inf): the signal is locally bounded and every p works.
    AllAdmissible,
    /// Admissible for `p < bound`.
    Below { bound: f64 },
}

/// `p < (1 - δ)/(-H_min)` when `H_min < 0`.
pub fn admissible_p_bound(delta: f64, hmin: f64) -> Result<PBound> {
    if delta.is_nan() || delta >= 1.0 {
        return Err(Error::DeltaOutOfRange(delta));
    }
    if hmin.is_nan() {
        return Err(Error::InvalidParameter("H_min is NaN".into()));
    }
    if hmin >= 0.0 || delta == f64::NEG_INFINITY {
        return Ok(PBound::AllAdmissible);
    }
    Ok(PBound::Below {
        bound: (1.0 - delta) / (-hmin),
    })
}
