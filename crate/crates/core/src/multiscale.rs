//! Multiscale quantities built from a coefficient pyramid: wavelet leaders,
//! p-leaders and (θ,ω)-leaders.
//!
//! Neighbourhoods wrap periodically, consistent with the periodic transform.
//! Boundary coefficients of the pyramid are read as zero.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::wavelet::{CoefficientPyramid, PyramidLevel, PyramidShape, Scale};

/// Number of levels (the level itself included) that must lie at or below a
/// scale for its leaders or p-leaders to count as valid.
pub const MIN_LEADER_LEVELS: usize = 4;

/// Default depth exponent: `θ(j) = j + ⌈j^{1/4}⌉`.
pub const DEFAULT_BETA: f64 = 0.25;

/// Default width exponent: `ω(j) = j`.
pub const DEFAULT_OMEGA_EXPONENT: f64 = 1.0;

/// Depth growth `θ(j)` of a (θ,ω)-neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ThetaGrowth {
    /// `θ(j) = j + c`.
    Offset { c: u32 },
    /// `θ(j) = j + ⌈j^β⌉`, `β ∈ (0, 1)`.
    Power { beta: f64 },
}

/// The (θ,ω) pair defining weak-scaling neighbourhoods.
///
/// `θ` has sub-polynomial growth when `β < 1`; `ω(j) = max(1, ⌈j^a⌉)` has
/// sub-exponential growth for any finite `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPair {
    pub theta: ThetaGrowth,
    pub omega_exponent: f64,
}

impl Default for GrowthPair {
    fn default() -> Self {
        GrowthPair {
            theta: ThetaGrowth::Power { beta: DEFAULT_BETA },
            omega_exponent: DEFAULT_OMEGA_EXPONENT,
        }
    }
}

/// Checks performed on a growth pair over a scale range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub checked_scales: (Scale, Scale),
    /// θ(j+1) ≥ θ(j) ≥ j held on every checked scale.
    pub theta_monotone: bool,
    /// β < 1 (or a constant offset).
    pub sub_polynomial: bool,
    /// log(ω(j))/j → 0; always true for power laws.
    pub sub_exponential: bool,
    /// ω(j) → ∞, false for the degenerate `a = 0` choice.
    pub omega_unbounded: bool,
}

impl GrowthPair {
    pub fn new(theta: ThetaGrowth, omega_exponent: f64) -> Result<Self> {
        let pair = GrowthPair { theta, omega_exponent };
        pair.validate()?;
        Ok(pair)
    }

    /// `θ(j) = j + ⌈j^β⌉`, `ω(j) = max(1, ⌈j^a⌉)`. Constant depth offsets go
    /// through [`offset`](Self::offset).
    pub fn power(beta: f64, omega_exponent: f64) -> Result<Self> {
        Self::new(ThetaGrowth::Power { beta }, omega_exponent)
    }

    pub fn offset(c: u32, omega_exponent: f64) -> Result<Self> {
        Self::new(ThetaGrowth::Offset { c }, omega_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        if let ThetaGrowth::Power { beta } = self.theta {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidParameter(format!(
                    "theta exponent beta must lie in [0, 1), got {beta}"
                )));
            }
        }
        if !(self.omega_exponent >= 0.0 && self.omega_exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega exponent must be finite and >= 0, got {}",
                self.omega_exponent
            )));
        }
        Ok(())
    }

    pub fn theta(&self, j: Scale) -> Scale {
        match self.theta {
            ThetaGrowth::Offset { c } => j + c as Scale,
            ThetaGrowth::Power { beta } => j + (j.max(0) as f64).powf(beta).ceil() as Scale,
        }
    }

    pub fn omega(&self, j: Scale) -> usize {
        let v = (j.max(0) as f64).powf(self.omega_exponent).ceil();
        (v as usize).max(1)
    }

    /// Subsampling stride `[2·ω(j)]` of the strided structure-function sum.
    pub fn stride(&self, j: Scale) -> usize {
        (2.0 * self.omega(j) as f64).floor() as usize
    }

    pub fn certify(&self, j_lo: Scale, j_hi: Scale) -> GrowthCertificate {
        let theta_monotone = (j_lo..=j_hi).all(|j| self.theta(j + 1) >= self.theta(j) && self.theta(j) >= j);
        GrowthCertificate {
            checked_scales: (j_lo, j_hi),
            theta_monotone,
            sub_polynomial: match self.theta {
                ThetaGrowth::Offset { .. } => true,
                ThetaGrowth::Power { beta } => beta < 1.0,
            },
            sub_exponential: self.omega_exponent.is_finite(),
            omega_unbounded: self.omega_exponent > 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldKind {
    /// Raw |c_{j,k}|; only positive moments are meaningful.
    Coefficients,
    Leaders,
    PLeaders {
        p: f64,
    },
    ThetaOmegaLeaders {
        growth: GrowthPair,
    },
}

impl FieldKind {
    pub fn name(&self) -> String {
        match self {
            FieldKind::Coefficients => "coefficients".into(),
            FieldKind::Leaders => "leaders".into(),
            FieldKind::PLeaders { p } => format!("{p}-leaders"),
            FieldKind::ThetaOmegaLeaders { .. } => "theta-omega-leaders".into(),
        }
    }

    pub fn supports_negative_moments(&self) -> bool {
        !matches!(self, FieldKind::Coefficients)
    }
}

/// Quantities of one scale, sampled at positions `0, stride, 2·stride, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldLevel {
    pub j: Scale,
    pub stride: usize,
    pub values: Vec<f64>,
    /// Leading entries whose own position is an interior coefficient; only
    /// these enter structure functions.
    pub usable: usize,
}

impl FieldLevel {
    pub fn usable_values(&self) -> &[f64] {
        &self.values[..self.usable]
    }

    pub fn position(&self, i: usize) -> usize {
        i * self.stride
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleField {
    pub kind: FieldKind,
    pub levels: Vec<FieldLevel>,
    /// Scales whose quantities are considered statistically valid.
    pub valid_range: Option<RangeInclusive<Scale>>,
}

impl MultiscaleField {
    pub fn level(&self, j: Scale) -> Option<&FieldLevel> {
        self.levels.iter().find(|l| l.j == j)
    }

    pub fn valid_levels(&self) -> impl Iterator<Item = &FieldLevel> {
        let range = self.valid_range.clone();
        self.levels
            .iter()
            .filter(move |l| range.as_ref().is_some_and(|r| r.contains(&l.j)))
    }

    /// Multiplies every quantity by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for l in &mut out.levels {
            for v in &mut l.values {
                *v *= factor;
            }
        }
        out
    }
}

fn leader_valid_range(pyramid: &CoefficientPyramid) -> Option<RangeInclusive<Scale>> {
    let hi = pyramid.j_fine() - MIN_LEADER_LEVELS as Scale + 1;
    if hi < pyramid.j_coarse() {
        None
    } else {
        Some(pyramid.j_coarse()..=hi)
    }
}

fn require_depth(pyramid: &CoefficientPyramid) -> Result<()> {
    if pyramid.num_levels() < 3 {
        return Err(Error::InsufficientScales(format!(
            "leaders need at least 3 levels, pyramid has {}",
            pyramid.num_levels()
        )));
    }
    Ok(())
}

/// Distinct indices `{k-1, k, k+1}` modulo `n`.
fn tripled(k: usize, n: usize) -> impl Iterator<Item = usize> {
    let idx = [k, (k + 1) % n, (k + n - 1) % n];
    // for n < 3 the three cells collapse onto n distinct ones
    idx.into_iter().take(n.min(3))
}

/// Raw |c_{j,k}| viewed as a field.
pub fn coefficient_field(pyramid: &CoefficientPyramid) -> MultiscaleField {
    let levels = pyramid
        .levels()
        .iter()
        .map(|l| FieldLevel {
            j: l.j,
            stride: 1,
            values: (0..l.len()).map(|k| l.masked_abs(k)).collect(),
            usable: l.interior,
        })
        .collect();
    MultiscaleField {
        kind: FieldKind::Coefficients,
        levels,
        valid_range: Some(pyramid.j_coarse()..=pyramid.j_fine()),
    }
}

/// `l(j,k) = sup{|c_λ'| : λ' ⊂ 3λ_{j,k}}`, finer scales truncated at `j_fine`.
pub fn wavelet_leaders(pyramid: &CoefficientPyramid) -> Result<MultiscaleField> {
    require_depth(pyramid)?;
    // sup over dyadic descendants of each λ (λ itself included), fine to coarse
    let mut below: Vec<Vec<f64>> = Vec::with_capacity(pyramid.num_levels());
    let mut finer: Option<Vec<f64>> = None;
    for level in pyramid.levels().iter().rev() {
        let cur: Vec<f64> = (0..level.len())
            .map(|k| {
                let own = level.masked_abs(k);
                match &finer {
                    Some(f) => own.max(f[2 * k]).max(f[2 * k + 1]),
                    None => own,
                }
            })
            .collect();
        below.push(cur.clone());
        finer = Some(cur);
    }
    below.reverse();

    let levels = par::map_range(pyramid.num_levels(), |i| {
        let level = &pyramid.levels()[i];
        let m = &below[i];
        let n = m.len();
        FieldLevel {
            j: level.j,
            stride: 1,
            values: (0..n)
                .map(|k| tripled(k, n).map(|x| m[x]).fold(0.0, f64::max))
                .collect(),
            usable: level.interior,
        }
    });
    Ok(MultiscaleField {
        kind: FieldKind::Leaders,
        levels,
        valid_range: leader_valid_range(pyramid),
    })
}

/// `ℓ^(p)(j,k) = (Σ_{λ'⊂3λ} |c_λ'|^p 2^{-(j'-j)})^{1/p}` over all available
/// finer scales.
pub fn p_leaders(pyramid: &CoefficientPyramid, p: f64) -> Result<MultiscaleField> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::NonPositiveP(p));
    }
    require_depth(pyramid)?;
    let mut below: Vec<Vec<f64>> = Vec::with_capacity(pyramid.num_levels());
    let mut finer: Option<Vec<f64>> = None;
    for level in pyramid.levels().iter().rev() {
        let cur: Vec<f64> = (0..level.len())
            .map(|k| {
                let own = level.masked_abs(k).powf(p);
                match &finer {
                    Some(f) => own + 0.5 * (f[2 * k] + f[2 * k + 1]),
                    None => own,
                }
            })
            .collect();
        below.push(cur.clone());
        finer = Some(cur);
    }
    below.reverse();

    let inv_p = 1.0 / p;
    let levels = par::map_range(pyramid.num_levels(), |i| {
        let level = &pyramid.levels()[i];
        let m = &below[i];
        let n = m.len();
        FieldLevel {
            j: level.j,
            stride: 1,
            values: (0..n)
                .map(|k| tripled(k, n).map(|x| m[x]).sum::<f64>().powf(inv_p))
                .collect(),
            usable: level.interior,
        }
    });
    Ok(MultiscaleField {
        kind: FieldKind::PLeaders { p },
        levels,
        valid_range: leader_valid_range(pyramid),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub j: Scale,
    pub k: usize,
}

/// Per-scale slice of a (θ,ω)-neighbourhood: `k' ∈ [lo, hi]` taken modulo the
/// level size, or the whole level when `full` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Window {
    j: Scale,
    lo: i64,
    hi: i64,
    full: bool,
}

fn windows(index: DyadicIndex, growth: &GrowthPair, shape: &PyramidShape) -> (Vec<Window>, bool) {
    let top = growth.theta(index.j);
    let clipped_depth = top > shape.j_fine();
    let mut out = Vec::new();
    for jp in index.j..=top.min(shape.j_fine()) {
        let Some(n) = shape.count(jp) else { continue };
        let m = (jp - index.j) as u32;
        let center = (index.k as i64) << m;
        let half = (growth.omega(jp) as i64) << m;
        let full = 2 * half + 1 >= n as i64;
        out.push(Window {
            j: jp,
            lo: center - half,
            hi: center + half,
            full,
        });
    }
    (out, clipped_depth)
}

/// Explicit (θ,ω)-neighbourhood of one dyadic index.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub members: BTreeSet<DyadicIndex>,
    /// θ(j) reached past the finest available scale.
    pub depth_clipped: bool,
    /// Some window wrapped around the periodic seam.
    pub wrapped: bool,
}

/// Indices `(j',k')` with `j ≤ j' ≤ θ(j)` and `|k/2^j − k'/2^{j'}| ≤ ω(j')/2^j`,
/// clipped to the available scales and wrapped periodically in position.
pub fn theta_omega_neighborhood(index: DyadicIndex, growth: &GrowthPair, shape: &PyramidShape) -> Neighborhood {
    let (wins, depth_clipped) = windows(index, growth, shape);
    let mut members = BTreeSet::new();
    let mut wrapped = false;
    for w in wins {
        let n = shape.count(w.j).unwrap_or(0) as i64;
        if w.full {
            wrapped |= w.lo < 0 || w.hi >= n;
            members.extend((0..n as usize).map(|k| DyadicIndex { j: w.j, k }));
        } else {
            for kp in w.lo..=w.hi {
                wrapped |= kp < 0 || kp >= n;
                members.insert(DyadicIndex {
                    j: w.j,
                    k: kp.rem_euclid(n) as usize,
                });
            }
        }
    }
    if depth_clipped || wrapped {
        log::trace!(
            "neighbourhood of ({}, {}) clipped: depth={depth_clipped} wrapped={wrapped}",
            index.j,
            index.k
        );
    }
    Neighborhood {
        members,
        depth_clipped,
        wrapped,
    }
}

fn window_sup(level: &PyramidLevel, w: &Window) -> f64 {
    let n = level.len() as i64;
    if w.full {
        return (0..level.len()).map(|k| level.masked_abs(k)).fold(0.0, f64::max);
    }
    (w.lo..=w.hi)
        .map(|kp| level.masked_abs(kp.rem_euclid(n) as usize))
        .fold(0.0, f64::max)
}

/// `d_{j,k} = sup |c_{j',k'}|` over the (θ,ω)-neighbourhood, evaluated at
/// `k = 0, s, 2s, …` with `s = [2·ω(j)]`.
pub fn theta_omega_leaders(pyramid: &CoefficientPyramid, growth: &GrowthPair) -> Result<MultiscaleField> {
    growth.validate()?;
    let shape = pyramid.shape();
    let levels = par::map(pyramid.levels(), |level| {
        let stride = growth.stride(level.j).max(1);
        let positions: Vec<usize> = (0..level.len()).step_by(stride).collect();
        let values = positions
            .iter()
            .map(|&k| {
                let (wins, _) = windows(DyadicIndex { j: level.j, k }, growth, &shape);
                wins.iter()
                    .map(|w| window_sup(pyramid.level(w.j).expect("window within pyramid"), w))
                    .fold(0.0, f64::max)
            })
            .collect();
        FieldLevel {
            j: level.j,
            stride,
            values,
            usable: level.interior.div_ceil(stride),
        }
    });
    let hi = (pyramid.j_coarse()..=pyramid.j_fine())
        .filter(|&j| growth.theta(j) <= pyramid.j_fine())
        .max();
    let valid_range = hi.map(|hi| pyramid.j_coarse()..=hi);
    if valid_range.is_none() {
        return Err(Error::InsufficientScales(format!(
            "theta({}) = {} exceeds the finest scale {}",
            pyramid.j_coarse(),
            growth.theta(pyramid.j_coarse()),
            pyramid.j_fine()
        )));
    }
    Ok(MultiscaleField {
        kind: FieldKind::ThetaOmegaLeaders { growth: *growth },
        levels,
        valid_range,
    })
}
