//! Legendre spectra, wavelet large-deviation spectra and closed-form
//! reference spectra of the synthetic models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::multiscale::{theta_omega_leaders, FieldKind, GrowthPair, MultiscaleField};
use crate::par;
use crate::scaling::{scaling_function, structure_functions, MomentGrid, ScalingFunction, StructureFunctions};
use crate::synth::{Atom, Model, SynthesisConfig};
use crate::wavelet::{CoefficientPyramid, Scale};

/// Default floor below which spectrum values become `-inf`.
pub const DEFAULT_FLOOR: f64 = -0.5;

/// Default number of H samples.
pub const DEFAULT_H_POINTS: usize = 512;

/// Margin added on each side of the slope range of ζ.
pub const H_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QRestriction {
    PositiveOnly,
    AllQ,
}

/// Sampled `(H, D(H))` curve. `-inf` marks empty dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreSpectrum {
    pub h: Vec<f64>,
    pub d: Vec<f64>,
    pub mode_h: f64,
    /// Extreme moment orders that entered the infimum, if any.
    pub q_range: Option<(f64, f64)>,
    pub source: String,
}

impl LegendreSpectrum {
    /// Builds a spectrum from samples; the mode is the centre of the set of
    /// grid points attaining the maximum.
    pub fn from_samples(
        h: Vec<f64>,
        d: Vec<f64>,
        q_range: Option<(f64, f64)>,
        source: impl Into<String>,
    ) -> Result<Self> {
        if h.is_empty() || h.len() != d.len() {
            return Err(Error::InvalidParameter(
                "spectrum needs equally many H and D samples".into(),
            ));
        }
        let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::EmptySpectrum);
        }
        let at_max = |v: f64| v >= max - 1e-12;
        let first = d.iter().position(|&v| at_max(v)).expect("max exists");
        let last = d.iter().rposition(|&v| at_max(v)).expect("max exists");
        Ok(LegendreSpectrum {
            mode_h: 0.5 * (h[first] + h[last]),
            h,
            d,
            q_range,
            source: source.into(),
        })
    }

    pub fn max_d(&self) -> f64 {
        self.d.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest and largest H with finite D.
    pub fn support(&self) -> Option<(f64, f64)> {
        let first = self.d.iter().position(|v| v.is_finite())?;
        let last = self.d.iter().rposition(|v| v.is_finite())?;
        Some((self.h[first], self.h[last]))
    }

    /// Linear interpolation of D at `h`; `-inf` outside finite samples.
    pub fn value_at(&self, h: f64) -> f64 {
        let i = self.h.partition_point(|&x| x < h);
        if i < self.h.len() && self.h[i] == h {
            return self.d[i];
        }
        if i == 0 || i == self.h.len() {
            return f64::NEG_INFINITY;
        }
        let (h0, h1, d0, d1) = (self.h[i - 1], self.h[i], self.d[i - 1], self.d[i]);
        if !d0.is_finite() || !d1.is_finite() {
            return f64::NEG_INFINITY;
        }
        d0 + (d1 - d0) * (h - h0) / (h1 - h0)
    }

    /// H values where D crosses `level` on each side of the mode.
    pub fn crossings(&self, level: f64) -> Option<(f64, f64)> {
        let mode = self.h.partition_point(|&x| x < self.mode_h).min(self.h.len() - 1);
        if !(self.d[mode] >= level) {
            return None;
        }
        let cross = |i: usize, j: usize| {
            let (hi, hj, di, dj) = (self.h[i], self.h[j], self.d[i], self.d[j]);
            if di.is_finite() && dj.is_finite() && dj != di {
                hi + (level - di) * (hj - hi) / (dj - di)
            } else {
                // the outer sample was floored; take the last finite one
                hi
            }
        };
        let left = (0..mode).rev().find(|&i| self.d[i] < level).map(|i| cross(i + 1, i))?;
        let right = (mode + 1..self.h.len())
            .find(|&i| self.d[i] < level)
            .map(|i| cross(i - 1, i))?;
        Some((left, right))
    }

    /// Half the width of `{D >= level}`.
    pub fn half_width_at(&self, level: f64) -> Option<f64> {
        self.crossings(level).map(|(l, r)| 0.5 * (r - l))
    }

    /// Translates every H by `shift`.
    pub fn offset(&self, shift: f64) -> Self {
        LegendreSpectrum {
            h: self.h.iter().map(|h| h + shift).collect(),
            d: self.d.clone(),
            mode_h: self.mode_h + shift,
            q_range: self.q_range,
            source: self.source.clone(),
        }
    }

    /// Largest second difference of D over consecutive finite samples.
    pub fn max_second_difference(&self) -> f64 {
        self.d
            .windows(3)
            .filter(|w| w.iter().all(|v| v.is_finite()))
            .map(|w| w[0] - 2.0 * w[1] + w[2])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `count` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

/// 512 points over `[min slope - 0.5, max slope + 0.5]` of ζ, slopes taken
/// between consecutive moment orders.
pub fn default_h_grid(zeta: &ScalingFunction) -> Vec<f64> {
    let e = &zeta.estimates;
    let slopes: Vec<f64> = if e.len() >= 2 {
        e.windows(2)
            .map(|w| (w[1].exponent - w[0].exponent) / (w[1].q - w[0].q))
            .collect()
    } else {
        e.iter().filter(|x| x.q != 0.0).map(|x| x.exponent / x.q).collect()
    };
    let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    linspace(lo - H_MARGIN, hi + H_MARGIN, DEFAULT_H_POINTS)
}

/// `D(H) = min(1, min_q 1 + Hq - ζ(q))` with values below [`DEFAULT_FLOOR`]
/// mapped to `-inf`. The constant 1 is the `q = 0` term, present in every
/// scaling function since `S(j, 0) = 1`.
pub fn legendre_transform(
    zeta: &ScalingFunction,
    h_grid: &[f64],
    restriction: QRestriction,
) -> Result<LegendreSpectrum> {
    legendre_transform_with_floor(zeta, h_grid, restriction, DEFAULT_FLOOR)
}

pub fn legendre_transform_with_floor(
    zeta: &ScalingFunction,
    h_grid: &[f64],
    restriction: QRestriction,
    floor: f64,
) -> Result<LegendreSpectrum> {
    check_restriction(&zeta.kind, restriction)?;
    if h_grid.is_empty() {
        return Err(Error::InvalidParameter("H grid is empty".into()));
    }
    let pairs: Vec<(f64, f64)> = zeta
        .estimates
        .iter()
        .filter(|e| restriction == QRestriction::AllQ || e.q > 0.0)
        .map(|e| (e.q, e.exponent))
        .collect();
    if pairs.is_empty() {
        return Err(Error::InvalidParameter(
            "no moment order survives the q restriction".into(),
        ));
    }
    let d = par::map(h_grid, |&h| {
        let v = pairs.iter().fold(1.0f64, |m, &(q, z)| m.min(1.0 + h * q - z));
        if v < floor {
            f64::NEG_INFINITY
        } else {
            v
        }
    });
    let q_lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let q_hi = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    LegendreSpectrum::from_samples(h_grid.to_vec(), d, Some((q_lo, q_hi)), zeta.kind.name())
}

/// Every intermediate of a field → spectrum run.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    pub structure: StructureFunctions,
    pub scaling: ScalingFunction,
    pub spectrum: LegendreSpectrum,
}

/// Structure functions, scaling function and Legendre spectrum of a field.
/// A missing H grid defaults to [`default_h_grid`].
pub fn field_spectrum(
    field: &MultiscaleField,
    grid: &MomentGrid,
    scales: (Scale, Scale),
    restriction: QRestriction,
    h_grid: Option<&[f64]>,
) -> Result<SpectrumEstimate> {
    let structure = structure_functions(field, grid)?;
    let scaling = scaling_function(&structure, scales.0, scales.1)?;
    let spectrum = match h_grid {
        Some(h) => legendre_transform(&scaling, h, restriction)?,
        None => legendre_transform(&scaling, &default_h_grid(&scaling), restriction)?,
    };
    Ok(SpectrumEstimate {
        structure,
        scaling,
        spectrum,
    })
}

/// Weak-scaling spectrum: (θ,ω)-leaders, structure functions, scaling
/// function and an all-q Legendre transform.
pub fn ws_spectrum_pipeline(
    pyramid: &CoefficientPyramid,
    growth: &GrowthPair,
    grid: &MomentGrid,
    scales: (Scale, Scale),
) -> Result<LegendreSpectrum> {
    let field = theta_omega_leaders(pyramid, growth)?;
    Ok(field_spectrum(&field, grid, scales, QRestriction::AllQ, None)?.spectrum)
}

/// Empirical wavelet large-deviation spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeDeviationSpectrum {
    /// Bin centres, spaced by `2·epsilon`.
    pub alpha: Vec<f64>,
    pub rho: Vec<f64>,
    pub epsilon: f64,
    /// ρ(+∞) from exactly-zero coefficients; `None` when there are none.
    pub rho_infinity: Option<f64>,
    pub scales: (Scale, Scale),
}

impl LargeDeviationSpectrum {
    pub fn includes_infinity_bin(&self) -> bool {
        self.rho_infinity.is_some()
    }

    /// ρ at the bin nearest to `alpha`.
    pub fn rho_at(&self, alpha: f64) -> f64 {
        self.alpha
            .iter()
            .zip(&self.rho)
            .min_by(|a, b| (a.0 - alpha).abs().total_cmp(&(b.0 - alpha).abs()))
            .map_or(f64::NEG_INFINITY, |(_, &r)| r)
    }
}

/// Minimum number of non-empty levels for a finite ρ.
pub const MIN_HISTOGRAM_LEVELS: usize = 3;

/// Upper half of the pyramid's levels, the default range for histograms.
pub fn default_histogram_scales(pyramid: &CoefficientPyramid) -> (Scale, Scale) {
    let hi = pyramid.j_fine();
    let lo = pyramid.j_coarse() + (hi - pyramid.j_coarse()) / 2;
    (lo, hi)
}

/// `ρ(α)` as the slope in `j` of `log2(2^j · ρ_j([α-ε, α+ε)))` with
/// `ρ_j` the fraction of interior coefficients at level `j` whose exponent
/// `-log2|c|/j` falls in the bin. Bins empty at all but fewer than three
/// levels give `-inf`; slopes are capped at 1.
pub fn rws_large_deviation(
    pyramid: &CoefficientPyramid,
    epsilon: f64,
    scales: Option<(Scale, Scale)>,
) -> Result<LargeDeviationSpectrum> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bin half-width must be positive, got {epsilon}"
        )));
    }
    let (j1, j2) = scales.unwrap_or_else(|| default_histogram_scales(pyramid));
    if j1 < 1 || j1 < pyramid.j_coarse() || j2 > pyramid.j_fine() || ((j2 - j1 + 1) as usize) < MIN_HISTOGRAM_LEVELS {
        return Err(Error::ScaleRangeTooNarrow {
            j1,
            j2,
            reason: format!("need {MIN_HISTOGRAM_LEVELS} levels with j >= 1 inside the pyramid"),
        });
    }
    struct LevelHist {
        j: Scale,
        n: usize,
        exps: Vec<f64>,
        zeros: usize,
    }
    let hists: Vec<LevelHist> = (j1..=j2)
        .map(|j| {
            let c = pyramid.level(j).expect("scale inside pyramid").interior_coeffs();
            let mut exps: Vec<f64> = c
                .iter()
                .filter(|v| **v != 0.0)
                .map(|v| -v.abs().log2() / j as f64)
                .collect();
            exps.sort_by(f64::total_cmp);
            LevelHist {
                j,
                n: c.len(),
                zeros: c.len() - exps.len(),
                exps,
            }
        })
        .collect();
    let lo = hists
        .iter()
        .filter_map(|h| h.exps.first())
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = hists
        .iter()
        .filter_map(|h| h.exps.last())
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let any_zero = hists.iter().any(|h| h.zeros > 0);
    if !lo.is_finite() && !any_zero {
        return Err(Error::DegenerateHistogram("no interior coefficients in range".into()));
    }
    // slope over levels with a non-empty bin
    let slope = |count: &dyn Fn(&LevelHist) -> usize| -> f64 {
        let (x, y): (Vec<f64>, Vec<f64>) = hists
            .iter()
            .filter(|h| h.n > 0)
            .filter_map(|h| {
                let c = count(h);
                (c > 0).then(|| (h.j as f64, (c as f64).log2() + h.j as f64 - (h.n as f64).log2()))
            })
            .unzip();
        if x.len() < MIN_HISTOGRAM_LEVELS {
            return f64::NEG_INFINITY;
        }
        line_fit(&x, &y).map_or(f64::NEG_INFINITY, |f| f.slope.min(1.0))
    };
    let (alpha, rho) = if lo.is_finite() {
        let bins = ((hi - lo) / (2.0 * epsilon)).floor() as usize + 1;
        let alpha: Vec<f64> = (0..bins).map(|i| lo + 2.0 * epsilon * i as f64).collect();
        let rho = par::map(&alpha, |&a| {
            slope(&|h: &LevelHist| {
                let start = h.exps.partition_point(|&x| x < a - epsilon);
                let end = h.exps.partition_point(|&x| x < a + epsilon);
                end - start
            })
        });
        (alpha, rho)
    } else {
        (Vec::new(), Vec::new())
    };
    let rho_infinity = any_zero.then(|| slope(&|h: &LevelHist| h.zeros));
    Ok(LargeDeviationSpectrum {
        alpha,
        rho,
        epsilon,
        rho_infinity,
        scales: (j1, j2),
    })
}

/// Formalism of a reference spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TheoryFormalism {
    WeakScaling,
    /// p-exponent spectrum; `p = inf` is the Hölder case.
    PExponent {
        p: f64,
    },
}

/// Atoms of an RWS-type model with ρ(α_i) = η_i.
fn model_atoms(model: &Model) -> Option<Vec<Atom>> {
    match model {
        Model::Rws { atoms, .. } => Some(atoms.clone()),
        Model::Lacunary { alpha, eta } => Some(vec![Atom {
            alpha: *alpha,
            eta: *eta,
        }]),
        _ => None,
    }
}

/// Closed-form reference spectrum of a synthetic model on `h_grid`
/// (default: 512 points spanning the support with a 0.5 margin).
///
/// * fBm(H), fGn(α): a single point of dimension 1 at the exponent.
/// * RWS: `ρ(H)·1_W(H)` for weak scaling, with `W` the atoms of `η >= 0`;
///   `(H + 1/p)·sup_{α<=H} ρ(α)/(α + 1/p)` on `[H_min, 1/s - 1/p]` for
///   p-exponents, `s = sup ρ(α)/(α + 1/p)`.
/// * MRW(H, λ): the parabola `1 - (H - c1)²/(2 c2)`, `c1 = H + λ²/2`,
///   `c2 = λ²`, for either formalism.
///
/// Point spectra are placed on the nearest grid sample.
pub fn theoretical_spectrum(
    config: &SynthesisConfig,
    formalism: TheoryFormalism,
    h_grid: Option<&[f64]>,
) -> Result<LegendreSpectrum> {
    config.validate()?;
    if let TheoryFormalism::PExponent { p } = formalism {
        if !(p > 0.0) {
            return Err(Error::NonPositiveP(p));
        }
    }
    let source = format!("theory:{}", model_name(&config.model));
    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        h_grid.map_or_else(
            || linspace(lo - H_MARGIN, hi + H_MARGIN, DEFAULT_H_POINTS),
            |g| g.to_vec(),
        )
    };
    let point = |at: f64| {
        let h = grid(at, at);
        let mut d = vec![f64::NEG_INFINITY; h.len()];
        let i = nearest(&h, at);
        d[i] = 1.0;
        LegendreSpectrum::from_samples(h, d, None, source.clone())
    };
    match &config.model {
        Model::Fbm { hurst } => point(*hurst),
        Model::Fgn { alpha } => point(*alpha),
        Model::Mrw { hurst, lambda } => {
            let c2 = lambda * lambda;
            let c1 = hurst + c2 / 2.0;
            let half = (2.0 * c2 * (1.0 - DEFAULT_FLOOR)).sqrt();
            let h = grid(c1 - half, c1 + half);
            let d = h
                .iter()
                .map(|x| {
                    let v = 1.0 - (x - c1).powi(2) / (2.0 * c2);
                    if v < DEFAULT_FLOOR {
                        f64::NEG_INFINITY
                    } else {
                        v
                    }
                })
                .collect();
            LegendreSpectrum::from_samples(h, d, None, source)
        }
        model => {
            let atoms = model_atoms(model).expect("remaining models are atomic");
            match formalism {
                TheoryFormalism::WeakScaling => {
                    let live: Vec<&Atom> = atoms.iter().filter(|a| a.eta >= 0.0).collect();
                    if live.is_empty() {
                        return Err(Error::UnsupportedModel("every atom has eta < 0; W is empty".into()));
                    }
                    let lo = live.iter().map(|a| a.alpha).fold(f64::INFINITY, f64::min);
                    let hi = live.iter().map(|a| a.alpha).fold(f64::NEG_INFINITY, f64::max);
                    let h = grid(lo, hi);
                    let mut d = vec![f64::NEG_INFINITY; h.len()];
                    for a in live {
                        let i = nearest(&h, a.alpha);
                        d[i] = d[i].max(a.eta);
                    }
                    LegendreSpectrum::from_samples(h, d, None, source)
                }
                TheoryFormalism::PExponent { p } => {
                    let inv = 1.0 / p;
                    let live: Vec<&Atom> = atoms.iter().filter(|a| a.eta >= 0.0).collect();
                    if live.iter().any(|a| a.eta >= p * a.alpha + 1.0) {
                        return Err(Error::UnsupportedModel(format!(
                            "law violates rho(alpha) < p alpha + 1 at p = {p}"
                        )));
                    }
                    let ratio = |a: &Atom| a.eta / (a.alpha + inv);
                    let sup = live.iter().map(|a| ratio(a)).fold(f64::NEG_INFINITY, f64::max);
                    if !(sup > 0.0) {
                        return Err(Error::UnsupportedModel("rho has no positive value".into()));
                    }
                    let h_min = live.iter().map(|a| a.alpha).fold(f64::INFINITY, f64::min);
                    let h_max = 1.0 / sup - inv;
                    let h = grid(h_min, h_max);
                    let d = h
                        .iter()
                        .map(|&x| {
                            if x < h_min - 1e-12 || x > h_max + 1e-12 {
                                return f64::NEG_INFINITY;
                            }
                            let s = live
                                .iter()
                                .filter(|a| a.alpha <= x + 1e-12)
                                .map(|a| ratio(a))
                                .fold(f64::NEG_INFINITY, f64::max);
                            ((x + inv) * s).min(1.0)
                        })
                        .collect();
                    LegendreSpectrum::from_samples(h, d, None, source)
                }
            }
        }
    }
}

fn nearest(grid: &[f64], x: f64) -> usize {
    (0..grid.len())
        .min_by(|&a, &b| (grid[a] - x).abs().total_cmp(&(grid[b] - x).abs()))
        .expect("grid is non-empty")
}

fn model_name(model: &Model) -> &'static str {
    match model {
        Model::Fbm { .. } => "fbm",
        Model::Fgn { .. } => "fgn",
        Model::Rws { .. } => "rws",
        Model::Lacunary { .. } => "lacunary",
        Model::Mrw { .. } => "mrw",
    }
}

/// Rejects all-q transforms of fields without negative moments.
pub fn check_restriction(kind: &FieldKind, restriction: QRestriction) -> Result<()> {
    if restriction == QRestriction::AllQ && !kind.supports_negative_moments() {
        return Err(Error::IncompatibleQRestriction(kind.name()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiscale::FieldKind;

    fn table(kind: FieldKind, q: &[f64], f: impl Fn(f64) -> f64) -> ScalingFunction {
        let z: Vec<f64> = q.iter().map(|&q| f(q)).collect();
        ScalingFunction::from_table(kind, q, &z).unwrap()
    }

    fn leaders() -> FieldKind {
        FieldKind::Leaders
    }

    #[test]
    fn linear_zeta_gives_point_spectrum() {
        let q = MomentGrid::default_all_q();
        let z = table(leaders(), q.values(), |q| 0.3 * q);
        let h = linspace(-1.0, 2.0, 601);
        let s = legendre_transform(&z, &h, QRestriction::AllQ).unwrap();
        assert!((s.mode_h - 0.3).abs() < 1e-9);
        assert!((s.max_d() - 1.0).abs() < 1e-12);
        // D = 1 - 8|H - 0.3| down to the floor
        for (hh, d) in s.h.iter().zip(&s.d) {
            let exact = 1.0 - 8.0 * (hh - 0.3).abs();
            if exact < DEFAULT_FLOOR {
                assert_eq!(*d, f64::NEG_INFINITY);
            } else {
                assert!((d - exact).abs() < 1e-9);
            }
        }
        // wider grids concentrate the spectrum
        let wide = MomentGrid::linspace(-64.0, 64.0, 129).unwrap();
        let zw = table(leaders(), wide.values(), |q| 0.3 * q);
        let sw = legendre_transform(&zw, &h, QRestriction::AllQ).unwrap();
        let (a, b) = sw.support().unwrap();
        // support is |H - 0.3| <= (1 - floor)/64
        assert!(b - a <= 2.0 * 1.5 / 64.0 + 1e-9);
        let (a8, b8) = s.support().unwrap();
        assert!(b8 - a8 > 4.0 * (b - a));
    }

    #[test]
    fn white_noise_zeta_peaks_at_minus_half() {
        let q = MomentGrid::default_all_q();
        let z = table(leaders(), q.values(), |q| -q / 2.0);
        let s = legendre_transform(&z, &default_h_grid(&z), QRestriction::AllQ).unwrap();
        assert!((s.mode_h + 0.5).abs() < 0.01);
    }

    #[test]
    fn parabola_matches_closed_form() {
        let (c1, c2) = (0.645, 0.09);
        let q = MomentGrid::linspace(-40.0, 40.0, 8001).unwrap();
        let z = table(leaders(), q.values(), |q| c1 * q - c2 / 2.0 * q * q);
        let h = linspace(0.3, 1.0, 141);
        let s = legendre_transform(&z, &h, QRestriction::AllQ).unwrap();
        for (hh, d) in s.h.iter().zip(&s.d) {
            let exact = 1.0 - (hh - c1).powi(2) / (2.0 * c2);
            if exact > DEFAULT_FLOOR + 0.05 {
                assert!((d - exact).abs() < 0.01, "H={hh}: {d} vs {exact}");
            }
        }
        let hw = s.half_width_at(0.5).unwrap();
        assert!((hw - c2.sqrt()).abs() < 0.01, "{hw}");
        assert!(s.max_second_difference() <= 1e-9);
    }

    #[test]
    fn positive_only_is_nondecreasing_and_coefficients_reject_all_q() {
        let q = MomentGrid::default_positive();
        let z = table(FieldKind::Coefficients, q.values(), |q| 0.5 * q - 0.02 * q * q);
        let s = legendre_transform(&z, &default_h_grid(&z), QRestriction::PositiveOnly).unwrap();
        assert!(s.d.windows(2).all(|w| w[1] >= w[0] || (w[0] == f64::NEG_INFINITY)));
        assert!(s.d.iter().all(|&d| d <= 1.0));
        assert!(matches!(
            legendre_transform(&z, &s.h, QRestriction::AllQ),
            Err(Error::IncompatibleQRestriction(_))
        ));
    }

    #[test]
    fn spectrum_helpers() {
        let s = LegendreSpectrum::from_samples(
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![f64::NEG_INFINITY, 0.0, 1.0, 0.0, f64::NEG_INFINITY],
            None,
            "t",
        )
        .unwrap();
        assert_eq!(s.mode_h, 2.0);
        assert_eq!(s.support(), Some((1.0, 3.0)));
        assert_eq!(s.crossings(0.5), Some((1.5, 2.5)));
        assert_eq!(s.value_at(1.25), 0.25);
        assert_eq!(s.value_at(0.5), f64::NEG_INFINITY);
        assert_eq!(s.offset(-1.0).mode_h, 1.0);
    }

    #[test]
    fn constant_exponent_pyramid_histogram() {
        let levels = (2..=12).map(|j| vec![(-0.4 * j as f64).exp2(); 1 << j]).collect();
        let p = CoefficientPyramid::from_levels(2, levels).unwrap();
        let ld = rws_large_deviation(&p, 0.05, None).unwrap();
        assert_eq!(ld.alpha.len(), 1);
        assert!((ld.rho_at(0.4) - 1.0).abs() < 1e-9);
        assert!(!ld.includes_infinity_bin());
        assert!(matches!(
            rws_large_deviation(&p, 0.0, None),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn p_spectrum_single_atom_matches_formula() {
        let (a0, e0, p) = (0.5, 0.6, 2.0);
        let c = SynthesisConfig::new(Model::Lacunary { alpha: a0, eta: e0 }, 1 << 12, 0);
        let s = theoretical_spectrum(&c, TheoryFormalism::PExponent { p }, None).unwrap();
        let h_max = (a0 + 0.5) / e0 - 0.5;
        for (h, d) in s.h.iter().zip(&s.d) {
            if *h >= a0 && *h <= h_max {
                let expect = e0 * (h + 0.5) / (a0 + 0.5);
                assert!((d - expect).abs() < 1e-9);
                // brute-force sup over a fine alpha grid with rho = e0 at a0 only
                let brute = (0..=1000)
                    .map(|i| a0 - 1.0 + 2.0 * i as f64 / 1000.0)
                    .filter(|&a| a <= *h && (a - a0).abs() < 1e-9)
                    .map(|a| e0 * (h + 0.5) / (a + 0.5))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((d - brute).abs() < 1e-9 || brute == f64::NEG_INFINITY);
            } else if *h < a0 - 0.01 || *h > h_max + 0.01 {
                assert_eq!(*d, f64::NEG_INFINITY);
            }
        }
        assert!((s.max_d() - 1.0).abs() < 0.01);
    }

    #[test]
    fn ws_theory_examples() {
        let fgn = SynthesisConfig::new(Model::Fgn { alpha: -0.25 }, 1 << 12, 0);
        let s = theoretical_spectrum(&fgn, TheoryFormalism::WeakScaling, None).unwrap();
        assert!((s.mode_h + 0.25).abs() < 0.005);
        assert_eq!(s.d.iter().filter(|d| d.is_finite()).count(), 1);
        let rws = SynthesisConfig::new(
            Model::Rws {
                atoms: vec![Atom { alpha: 0.3, eta: 0.4 }, Atom { alpha: 0.8, eta: 1.0 }],
                uniform_bound: 0.3,
            },
            1 << 12,
            0,
        );
        let s = theoretical_spectrum(&rws, TheoryFormalism::WeakScaling, None).unwrap();
        assert!((s.value_at_nearest(0.3) - 0.4).abs() < 1e-12);
        assert!((s.value_at_nearest(0.8) - 1.0).abs() < 1e-12);
        let mrw = SynthesisConfig::new(
            Model::Mrw {
                hurst: 0.6,
                lambda: 0.3,
            },
            1 << 12,
            0,
        );
        let s = theoretical_spectrum(&mrw, TheoryFormalism::WeakScaling, None).unwrap();
        assert!((s.mode_h - 0.645).abs() < 0.005);
        assert!((s.half_width_at(0.5).unwrap() - 0.3).abs() < 0.005);
    }

    impl LegendreSpectrum {
        fn value_at_nearest(&self, h: f64) -> f64 {
            self.d[nearest(&self.h, h)]
        }
    }
}
