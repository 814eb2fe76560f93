//! Structure functions, scaling-function regression and uniform regularity.
//!
//! All logarithms are base 2. A scaling exponent is the weighted
//! least-squares slope of `log2 S(j,q)` against `-j` over a user-chosen
//! octave range, with weights equal to the number of summed positions.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{line_fit, weighted_line_fit, LineFit};
use crate::multiscale::{FieldKind, MultiscaleField};
use crate::par;
use crate::wavelet::{CoefficientPyramid, Scale};

/// A level is unreliable for negative moments when more than this fraction
/// of its quantities are exactly zero.
pub const ZERO_FRACTION_LIMIT: f64 = 0.01;

/// Sorted, finite moment orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentGrid(Vec<f64>);

impl MomentGrid {
    pub fn new(mut q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidParameter("moment grid is empty".into()));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("moment grid holds non-finite values".into()));
        }
        q.sort_by(f64::total_cmp);
        q.dedup();
        Ok(MomentGrid(q))
    }

    /// `count` evenly spaced orders on `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 || !(hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "moment grid needs hi > lo and at least 2 points (lo={lo}, hi={hi}, n={count})"
            )));
        }
        let step = (hi - lo) / (count - 1) as f64;
        Self::new((0..count).map(|i| lo + step * i as f64).collect())
    }

    /// 64 points on `[-8, 8]`.
    pub fn default_all_q() -> Self {
        Self::linspace(-8.0, 8.0, 64).expect("static grid")
    }

    /// 64 points on `[0.1, 8]`.
    pub fn default_positive() -> Self {
        Self::linspace(0.1, 8.0, 64).expect("static grid")
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positive_part(&self) -> Option<Self> {
        let q: Vec<f64> = self.0.iter().copied().filter(|&v| v > 0.0).collect();
        if q.is_empty() {
            None
        } else {
            Some(MomentGrid(q))
        }
    }
}

/// `log2 S(j,q)` over the valid scales of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunctions {
    pub kind: FieldKind,
    pub scales: Vec<Scale>,
    pub q: Vec<f64>,
    /// Indexed `[scale][q]`; `None` marks an undefined entry.
    pub log2_values: Vec<Vec<Option<f64>>>,
    /// Positions summed at each scale (regression weights).
    pub counts: Vec<usize>,
    /// Exactly-zero quantities at each scale.
    pub zero_counts: Vec<usize>,
    /// Scales flagged unreliable for q < 0.
    pub unreliable_negative: Vec<bool>,
}

impl StructureFunctions {
    pub fn value(&self, j: Scale, q_index: usize) -> Option<f64> {
        let i = self.scales.iter().position(|&s| s == j)?;
        self.log2_values[i][q_index].map(f64::exp2)
    }

    pub fn log2_value(&self, j: Scale, q_index: usize) -> Option<f64> {
        let i = self.scales.iter().position(|&s| s == j)?;
        self.log2_values[i][q_index]
    }
}

/// `S(j,q) = (1/n_j) Σ quantity^q` over the usable positions of each valid
/// scale.
///
/// `n_j` is the number of positions actually summed. For (θ,ω)-leaders this
/// is the count of strided positions, which equals the `ω(j)·2^{-j}`
/// prefactor up to a scale-independent constant. At `q < 0` exact zeros are
/// left out of both the sum and `n_j`.
pub fn structure_functions(field: &MultiscaleField, grid: &MomentGrid) -> Result<StructureFunctions> {
    if !field.kind.supports_negative_moments() {
        if let Some(&q) = grid.values().iter().find(|&&q| q <= 0.0) {
            return Err(Error::NegativeMomentOnCoefficients(q));
        }
    }
    let levels: Vec<_> = field.valid_levels().filter(|l| l.usable > 0).collect();
    if levels.is_empty() {
        return Err(Error::EmptyField);
    }
    let q = grid.values().to_vec();

    struct Row {
        log2: Vec<Option<f64>>,
        count: usize,
        zeros: usize,
        unreliable: bool,
    }
    let rows: Vec<Result<Row>> = par::map(&levels, |level| {
        let values = level.usable_values();
        let logs: Vec<f64> = values.iter().filter(|&&v| v > 0.0).map(|v| v.log2()).collect();
        let zeros = values.len() - logs.len();
        let unreliable = zeros as f64 > ZERO_FRACTION_LIMIT * values.len() as f64;
        let mut log2 = Vec::with_capacity(q.len());
        for &qi in &q {
            let entry = if qi < 0.0 {
                if logs.is_empty() {
                    return Err(Error::AllZeroAtNegativeQ { j: level.j, q: qi });
                }
                Some(log2_mean_pow(&logs, qi, logs.len()))
            } else if qi == 0.0 {
                Some(0.0)
            } else if logs.is_empty() {
                // every quantity is zero: S = 0 is not representable in log2
                None
            } else {
                // zeros add nothing to Σ v^q but count in the normalizer
                Some(log2_mean_pow(&logs, qi, values.len()))
            };
            log2.push(entry);
        }
        Ok(Row {
            log2,
            count: values.len(),
            zeros,
            unreliable,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    for (level, row) in levels.iter().zip(&rows) {
        if row.unreliable {
            log::debug!(
                "scale {}: {} of {} quantities are zero; unreliable for q < 0",
                level.j,
                row.zeros,
                row.count
            );
        }
    }
    Ok(StructureFunctions {
        kind: field.kind,
        scales: levels.iter().map(|l| l.j).collect(),
        q,
        counts: rows.iter().map(|r| r.count).collect(),
        zero_counts: rows.iter().map(|r| r.zeros).collect(),
        unreliable_negative: rows.iter().map(|r| r.unreliable).collect(),
        log2_values: rows.into_iter().map(|r| r.log2).collect(),
    })
}

/// `log2((1/n) Σ 2^{q·x_i})` evaluated stably in the log domain.
fn log2_mean_pow(log2_values: &[f64], q: f64, n: usize) -> f64 {
    let max = log2_values.iter().map(|&x| q * x).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log2_values.iter().map(|&x| (q * x - max).exp2()).sum();
    max + sum.log2() - (n as f64).log2()
}

/// Per-q regression of one scaling function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingEstimate {
    pub q: f64,
    /// The scaling exponent ζ(q) (or η(q) for leaders).
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub scales: Vec<Scale>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFunction {
    pub kind: FieldKind,
    pub j1: Scale,
    pub j2: Scale,
    pub estimates: Vec<ScalingEstimate>,
}

impl ScalingFunction {
    pub fn q(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.q).collect()
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.exponent).collect()
    }

    /// Builds a scaling function from a (q, ζ(q)) table, e.g. one read from
    /// disk or an ensemble average.
    pub fn from_table(kind: FieldKind, q: &[f64], zeta: &[f64]) -> Result<Self> {
        if q.len() != zeta.len() || q.is_empty() {
            return Err(Error::InvalidParameter(
                "scaling table must be non-empty with matching columns".into(),
            ));
        }
        if q.iter().chain(zeta).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("scaling table holds non-finite values".into()));
        }
        let mut estimates: Vec<ScalingEstimate> = q
            .iter()
            .zip(zeta)
            .map(|(&q, &z)| ScalingEstimate {
                q,
                exponent: z,
                intercept: 0.0,
                r_squared: f64::NAN,
                scales: Vec::new(),
                weights: Vec::new(),
            })
            .collect();
        estimates.sort_by(|a, b| a.q.total_cmp(&b.q));
        Ok(ScalingFunction {
            kind,
            j1: 0,
            j2: 0,
            estimates,
        })
    }
}

/// Regresses `log2 S(j,q)` on `-j` over `j ∈ [j1, j2]` for every q.
///
/// Undefined entries, and scales flagged unreliable at negative q, are left
/// out; at least three scales must remain for each q.
pub fn scaling_function(sf: &StructureFunctions, j1: Scale, j2: Scale) -> Result<ScalingFunction> {
    if j2 - j1 < 2 {
        return Err(Error::ScaleRangeTooNarrow {
            j1,
            j2,
            reason: "need j2 - j1 >= 2".into(),
        });
    }
    let (Some(&lo), Some(&hi)) = (sf.scales.first(), sf.scales.last()) else {
        return Err(Error::EmptyField);
    };
    if j1 < lo || j2 > hi {
        return Err(Error::ScaleRangeTooNarrow {
            j1,
            j2,
            reason: format!("valid scales are [{lo}, {hi}]"),
        });
    }
    let mut estimates = Vec::with_capacity(sf.q.len());
    for (qi, &q) in sf.q.iter().enumerate() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut w = Vec::new();
        let mut scales = Vec::new();
        for (si, &j) in sf.scales.iter().enumerate() {
            if j < j1 || j > j2 {
                continue;
            }
            if q < 0.0 && sf.unreliable_negative[si] {
                continue;
            }
            if let Some(v) = sf.log2_values[si][qi] {
                x.push(-(j as f64));
                y.push(v);
                w.push(sf.counts[si] as f64);
                scales.push(j);
            }
        }
        if x.len() < 3 {
            return Err(Error::ScaleRangeTooNarrow {
                j1,
                j2,
                reason: format!("only {} usable scales at q = {q}", x.len()),
            });
        }
        let LineFit {
            slope,
            intercept,
            r_squared,
        } = weighted_line_fit(&x, &y, &w).expect("three distinct scales");
        estimates.push(ScalingEstimate {
            q,
            exponent: slope,
            intercept,
            r_squared,
            scales,
            weights: w,
        });
    }
    Ok(ScalingFunction {
        kind: sf.kind,
        j1,
        j2,
        estimates,
    })
}

/// `[max(3, j_fine - 8), j_fine - 2]` intersected with the field's valid
/// scales; the result must span at least three octaves.
pub fn default_scale_range(j_fine: Scale, valid: Option<&RangeInclusive<Scale>>) -> Result<(Scale, Scale)> {
    let mut j1 = (j_fine - 8).max(3);
    let mut j2 = j_fine - 2;
    if let Some(r) = valid {
        j1 = j1.max(*r.start());
        j2 = j2.min(*r.end());
    }
    if j2 - j1 < 2 {
        return Err(Error::ScaleRangeTooNarrow {
            j1,
            j2,
            reason: format!("default range for finest scale {j_fine} is too short"),
        });
    }
    Ok((j1, j2))
}

/// Uniform Hölder exponent: slope of `log2 sup_k |c_{j,k}|` against `-j`
/// over `[j1, j2]`, uniform weights. Negative values mean the signal is not
/// locally bounded.
pub fn estimate_hmin(pyramid: &CoefficientPyramid, j1: Scale, j2: Scale) -> Result<f64> {
    if j2 - j1 < 2 || j1 < pyramid.j_coarse() || j2 > pyramid.j_fine() {
        return Err(Error::ScaleRangeTooNarrow {
            j1,
            j2,
            reason: format!(
                "need j2 - j1 >= 2 within [{}, {}]",
                pyramid.j_coarse(),
                pyramid.j_fine()
            ),
        });
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for j in j1..=j2 {
        let level = pyramid.level(j).expect("scale within pyramid");
        let sup = level.interior_coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if sup == 0.0 {
            return Err(Error::AllZeroLevel(j));
        }
        x.push(-(j as f64));
        y.push(sup.log2());
    }
    Ok(line_fit(&x, &y).expect("distinct scales").slope)
}

/// Outcome of the `ζ(p) > 0` admissibility test for p-leaders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// Some grid q > 0 has ζ(q) > 0.
    pub exists_positive: bool,
    /// argmax of ζ(q)/q over admissible q.
    pub best_p: Option<f64>,
    /// Finite-difference slope of ζ at the two smallest positive grid points.
    pub slope_at_zero: f64,
}

/// Smallest positive q must not exceed this for the 0⁺ slope to be meaningful.
pub const SMALL_Q_LIMIT: f64 = 1.0;

pub fn p_admissibility(zeta: &ScalingFunction) -> Result<AdmissibilityReport> {
    let positive: Vec<&ScalingEstimate> = zeta.estimates.iter().filter(|e| e.q > 0.0).collect();
    if positive.len() < 2 || positive[0].q > SMALL_Q_LIMIT {
        return Err(Error::GridLacksSmallPositiveQ);
    }
    let (a, b) = (positive[0], positive[1]);
    let slope_at_zero = (b.exponent - a.exponent) / (b.q - a.q);
    let best = positive
        .iter()
        .filter(|e| e.exponent > 0.0)
        .max_by(|x, y| (x.exponent / x.q).total_cmp(&(y.exponent / y.q)));
    Ok(AdmissibilityReport {
        exists_positive: best.is_some(),
        best_p: best.map(|e| e.q),
        slope_at_zero,
    })
}
