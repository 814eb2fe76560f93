//! Periodic dyadic wavelet decomposition and pyramid-level transforms.
//!
//! Scale indices follow the "larger j = finer" convention: for a signal of
//! length `2^J`, level `j` carries `2^j` coefficients and the finest level is
//! `J - 1`. Coefficients are stored with L¹ normalization,
//! `c_{j,k} = 2^{j/2} d_{j,k}` where `d_{j,k}` is the orthonormal
//! (L²-normalized) transform output, so that `c_{j,k} = 2^j ∫ f ψ(2^j x - k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dyadic scale index; larger is finer.
pub type Scale = i32;

/// A labelled, finite-valued 1-D sample sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    label: String,
    samples: Vec<f64>,
}

impl Signal {
    pub fn new(label: impl Into<String>, samples: Vec<f64>) -> Result<Self> {
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(Signal {
            label: label.into(),
            samples,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Finest scale index available for this length (`floor(log2 N) - 1`).
    pub fn finest_scale(&self) -> Option<Scale> {
        if self.samples.len() < 2 {
            None
        } else {
            Some(self.samples.len().ilog2() as Scale - 1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletFamily {
    /// Extremal-phase compactly supported orthonormal wavelets.
    Daubechies,
}

/// Orthonormal compactly supported wavelet with `r` vanishing moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletSpec {
    pub family: WaveletFamily,
    pub vanishing_moments: usize,
}

impl Default for WaveletSpec {
    fn default() -> Self {
        WaveletSpec {
            family: WaveletFamily::Daubechies,
            vanishing_moments: 3,
        }
    }
}

impl WaveletSpec {
    pub const MAX_VANISHING_MOMENTS: usize = 8;

    pub fn daubechies(vanishing_moments: usize) -> Result<Self> {
        let spec = WaveletSpec {
            family: WaveletFamily::Daubechies,
            vanishing_moments,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vanishing_moments == 0 || self.vanishing_moments > Self::MAX_VANISHING_MOMENTS {
            return Err(Error::InvalidWavelet(format!(
                "vanishing moments must lie in 1..={}, got {}",
                Self::MAX_VANISHING_MOMENTS,
                self.vanishing_moments
            )));
        }
        Ok(())
    }

    /// Low-pass (scaling) filter taps; they sum to √2.
    pub fn scaling_filter(&self) -> &'static [f64] {
        match self.vanishing_moments {
            1 => &DB1,
            2 => &DB2,
            3 => &DB3,
            4 => &DB4,
            5 => &DB5,
            6 => &DB6,
            7 => &DB7,
            8 => &DB8,
            r => panic!("unsupported number of vanishing moments {r}"),
        }
    }

    /// High-pass filter `g[t] = (-1)^t h[L-1-t]`.
    pub fn wavelet_filter(&self) -> Vec<f64> {
        let h = self.scaling_filter();
        let len = h.len();
        (0..len)
            .map(|t| {
                let v = h[len - 1 - t];
                if t % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect()
    }

    pub fn filter_len(&self) -> usize {
        2 * self.vanishing_moments
    }
}

/// One scale of a coefficient pyramid.
///
/// Coefficients at positions `interior..` have filter support crossing the
/// periodic seam and are excluded from every downstream statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidLevel {
    pub j: Scale,
    pub coeffs: Vec<f64>,
    pub interior: usize,
}

impl PyramidLevel {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_interior(&self, k: usize) -> bool {
        k < self.interior
    }

    pub fn interior_coeffs(&self) -> &[f64] {
        &self.coeffs[..self.interior]
    }

    /// |c_{j,k}| with boundary coefficients read as zero.
    pub fn masked_abs(&self, k: usize) -> f64 {
        if k < self.interior {
            self.coeffs[k].abs()
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    L1,
}

/// L¹-normalized wavelet coefficients for scales `j_coarse..=j_fine`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPyramid {
    levels: Vec<PyramidLevel>,
    origin_length: usize,
    normalization: Normalization,
}

/// Level sizes of a pyramid, enough to reason about dyadic neighbourhoods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PyramidShape {
    pub j_coarse: Scale,
    pub counts: Vec<usize>,
}

impl PyramidShape {
    pub fn j_fine(&self) -> Scale {
        self.j_coarse + self.counts.len() as Scale - 1
    }

    pub fn count(&self, j: Scale) -> Option<usize> {
        if j < self.j_coarse {
            return None;
        }
        self.counts.get((j - self.j_coarse) as usize).copied()
    }
}

impl CoefficientPyramid {
    /// Builds a pyramid whose coefficients are all interior. `levels[0]` is
    /// scale `j_coarse`; each level must hold twice as many coefficients as
    /// the previous one.
    pub fn from_levels(j_coarse: Scale, levels: Vec<Vec<f64>>) -> Result<Self> {
        let with_interior = levels
            .into_iter()
            .map(|c| {
                let n = c.len();
                (c, n)
            })
            .collect();
        Self::from_levels_with_interior(j_coarse, with_interior)
    }

    /// Like [`from_levels`](Self::from_levels) with explicit interior counts.
    pub fn from_levels_with_interior(j_coarse: Scale, levels: Vec<(Vec<f64>, usize)>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InconsistentPyramid("no levels".into()));
        }
        if j_coarse < 0 {
            return Err(Error::InconsistentPyramid(format!(
                "coarsest scale must be non-negative, got {j_coarse}"
            )));
        }
        let mut out = Vec::with_capacity(levels.len());
        for (i, (coeffs, interior)) in levels.into_iter().enumerate() {
            if coeffs.is_empty() {
                return Err(Error::InconsistentPyramid(format!("level {i} is empty")));
            }
            if interior > coeffs.len() {
                return Err(Error::InconsistentPyramid(format!(
                    "interior count {interior} exceeds level size {}",
                    coeffs.len()
                )));
            }
            if let Some(prev) = out.last() {
                let prev: &PyramidLevel = prev;
                if coeffs.len() != 2 * prev.len() {
                    return Err(Error::InconsistentPyramid(format!(
                        "level sizes must double from coarse to fine ({} then {})",
                        prev.len(),
                        coeffs.len()
                    )));
                }
            }
            if let Some(index) = coeffs.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteInput { index });
            }
            out.push(PyramidLevel {
                j: j_coarse + i as Scale,
                coeffs,
                interior,
            });
        }
        let origin_length = 2 * out.last().map(|l| l.len()).unwrap_or(0);
        Ok(CoefficientPyramid {
            levels: out,
            origin_length,
            normalization: Normalization::L1,
        })
    }

    pub fn levels(&self) -> &[PyramidLevel] {
        &self.levels
    }

    pub fn level(&self, j: Scale) -> Option<&PyramidLevel> {
        if j < self.j_coarse() {
            return None;
        }
        self.levels.get((j - self.j_coarse()) as usize)
    }

    pub fn j_coarse(&self) -> Scale {
        self.levels[0].j
    }

    pub fn j_fine(&self) -> Scale {
        self.levels[self.levels.len() - 1].j
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn origin_length(&self) -> usize {
        self.origin_length
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn shape(&self) -> PyramidShape {
        PyramidShape {
            j_coarse: self.j_coarse(),
            counts: self.levels.iter().map(|l| l.len()).collect(),
        }
    }

    /// Applies `f(j, c)` to every coefficient, keeping the structure.
    pub fn map_coefficients(&self, f: impl Fn(Scale, f64) -> f64) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|l| PyramidLevel {
                j: l.j,
                coeffs: l.coeffs.iter().map(|&c| f(l.j, c)).collect(),
                interior: l.interior,
            })
            .collect();
        CoefficientPyramid {
            levels,
            origin_length: self.origin_length,
            normalization: self.normalization,
        }
    }
}

/// Decomposes `signal` over scales `j_coarse..=j_fine` with periodic
/// extension.
///
/// The signal is truncated to a multiple of `2^(J - j_coarse)` where
/// `J = floor(log2 N)`. The coarsest level must keep at least four
/// coefficients.
pub fn decompose(signal: &Signal, spec: &WaveletSpec, j_fine: Scale, j_coarse: Scale) -> Result<CoefficientPyramid> {
    spec.validate()?;
    if j_coarse < 1 || j_fine <= j_coarse {
        return Err(Error::InvalidParameter(format!(
            "need j_fine > j_coarse >= 1, got j_fine = {j_fine}, j_coarse = {j_coarse}"
        )));
    }
    let n = signal.len();
    let big_j = match signal.finest_scale() {
        Some(f) => f + 1,
        None => {
            return Err(Error::SignalTooShort {
                len: n,
                reason: "need at least two samples".into(),
            })
        }
    };
    if j_fine > big_j - 1 {
        return Err(Error::SignalTooShort {
            len: n,
            reason: format!("finest available scale is {}, requested {j_fine}", big_j - 1),
        });
    }
    let octaves = (big_j - j_coarse) as usize;
    let block = 1usize << octaves;
    let n_used = n / block * block;
    if n_used >> octaves < 4 {
        return Err(Error::SignalTooShort {
            len: n,
            reason: format!("scale {j_coarse} would hold fewer than 4 coefficients"),
        });
    }

    let h = spec.scaling_filter();
    let g = spec.wavelet_filter();
    let taps = h.len();
    let mut approx = signal.samples()[..n_used].to_vec();
    let mut levels = Vec::with_capacity((j_fine - j_coarse + 1) as usize);
    for octave in 1..=octaves {
        let (a, d) = analysis_step(&approx, h, &g);
        let j = big_j - octave as Scale;
        if j <= j_fine {
            let scale = (j as f64 / 2.0).exp2();
            let coeffs: Vec<f64> = d.iter().map(|x| x * scale).collect();
            let interior = interior_count(n_used, octave, taps).min(coeffs.len());
            levels.push((coeffs, interior));
        }
        approx = a;
    }
    levels.reverse();
    let mut pyramid = CoefficientPyramid::from_levels_with_interior(j_coarse, levels)?;
    pyramid.origin_length = n;
    Ok(pyramid)
}

/// Decomposes over every scale from 2 to the finest available one.
pub fn decompose_full(signal: &Signal, spec: &WaveletSpec) -> Result<CoefficientPyramid> {
    let j_fine = signal.finest_scale().ok_or_else(|| Error::SignalTooShort {
        len: signal.len(),
        reason: "need at least two samples".into(),
    })?;
    decompose(signal, spec, j_fine, 2)
}

/// Number of coefficients at `octave` whose support `[2^o k, 2^o k + (L-1)(2^o - 1)]`
/// stays inside `[0, n)`.
fn interior_count(n: usize, octave: usize, taps: usize) -> usize {
    let span = (taps - 1) * ((1usize << octave) - 1);
    if span >= n {
        return 0;
    }
    (n - 1 - span) / (1usize << octave) + 1
}

fn analysis_step(x: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for k in 0..half {
        let mut sa = 0.0;
        let mut sd = 0.0;
        for (t, (&ht, &gt)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * k + t) % n];
            sa += ht * v;
            sd += gt * v;
        }
        a[k] = sa;
        d[k] = sd;
    }
    (a, d)
}

fn synthesis_step(a: &[f64], d: &[f64], h: &[f64], g: &[f64]) -> Vec<f64> {
    let n = 2 * a.len();
    let mut x = vec![0.0; n];
    for k in 0..a.len() {
        for (t, (&ht, &gt)) in h.iter().zip(g).enumerate() {
            x[(2 * k + t) % n] += ht * a[k] + gt * d[k];
        }
    }
    x
}

/// Inverse transform with a zero coarse approximation.
///
/// The pyramid's finest level must sit one octave below the signal length
/// (`2·count(j_fine)` samples are produced).
pub fn reconstruct(pyramid: &CoefficientPyramid, spec: &WaveletSpec, label: &str) -> Result<Signal> {
    spec.validate()?;
    let h = spec.scaling_filter();
    let g = spec.wavelet_filter();
    let mut approx = vec![0.0; pyramid.levels()[0].len()];
    for level in pyramid.levels() {
        let scale = (-(level.j as f64) / 2.0).exp2();
        let d: Vec<f64> = level.coeffs.iter().map(|c| c * scale).collect();
        approx = synthesis_step(&approx, &d, h, &g);
    }
    Signal::new(label, approx)
}

/// Multiplies every coefficient by `2^{-s j}`; negative `s` differentiates.
pub fn pseudo_fractional_integrate(pyramid: &CoefficientPyramid, s: f64) -> Result<CoefficientPyramid> {
    if !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "fractional order must be finite, got {s}"
        )));
    }
    Ok(pyramid.map_coefficients(|j, c| c * (-s * j as f64).exp2()))
}

const DB1: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
// published to 17 digits; the excess rounds away
#[allow(clippy::excessive_precision)]
const DB2: [f64; 4] = [
    0.48296291314453414,
    0.83651630373780791,
    0.22414386804201338,
    -0.12940952255126038,
];
#[allow(clippy::excessive_precision)]
const DB3: [f64; 6] = [
    0.33267055295008262,
    0.80689150931109258,
    0.45987750211849157,
    -0.13501102001025459,
    -0.085441273882026662,
    0.035226291885709537,
];
#[allow(clippy::excessive_precision)]
const DB4: [f64; 8] = [
    0.2303778133088965,
    0.71484657055291565,
    0.63088076792985891,
    -0.027983769416859854,
    -0.18703481171909308,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];
#[allow(clippy::excessive_precision)]
const DB5: [f64; 10] = [
    0.16010239797419291,
    0.60382926979718967,
    0.72430852843777293,
    0.13842814590132073,
    -0.24229488706638203,
    -0.032244869584638375,
    0.077571493840045714,
    -0.0062414902127982743,
    -0.012580751999081999,
    0.0033357252854737713,
];
#[allow(clippy::excessive_precision)]
const DB6: [f64; 12] = [
    0.11154074335010946,
    0.49462389039845309,
    0.75113390802109535,
    0.31525035170919763,
    -0.22626469396543982,
    -0.12976686756726194,
    0.097501605587323049,
    0.027522865530305729,
    -0.03158203931748603,
    0.00055384220116149614,
    0.0047772575109455106,
    -0.0010773010853084796,
];
#[allow(clippy::excessive_precision)]
const DB7: [f64; 14] = [
    0.077852054085009179,
    0.39653931948191731,
    0.72913209084623512,
    0.46978228740519312,
    -0.14390600392856498,
    -0.22403618499387498,
    0.071309219266830265,
    0.080612609151083072,
    -0.038029936935014414,
    -0.016574541630666881,
    0.012550998556099841,
    0.00042957797292136652,
    -0.0018016407040474909,
    0.00035371379997452025,
];
#[allow(clippy::excessive_precision)]
const DB8: [f64; 16] = [
    0.05441584224310401,
    0.31287159091429997,
    0.67563073629728981,
    0.58535468365420671,
    -0.015829105256349306,
    -0.28401554296154693,
    0.00047248457391328277,
    0.12874742662047846,
    -0.017369301001807546,
    -0.044088253930794752,
    0.013981027917398282,
    0.0087460940474057767,
    -0.0048703529934515743,
    -0.00039174037337694705,
    0.00067544940645056937,
    -0.00011747678412476953,
];
