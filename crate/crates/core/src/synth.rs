//! Reproducible synthetic models: fBm, fGn, random wavelet series and MRW.
//!
//! Every generator draws from a ChaCha8 stream seeded with the config seed,
//! so a config fully determines its output bits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::{reconstruct, CoefficientPyramid, Scale, Signal, WaveletSpec};

/// Smallest accepted sample count.
pub const MIN_LENGTH: usize = 1 << 10;

/// Upper bound on λ² for MRW.
pub const MRW_MAX_LAMBDA_SQ: f64 = 0.5;

/// One component of an atomic RWS law: magnitude `2^{-alpha j}` drawn with
/// probability `2^{(eta - 1) j}` at level `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub alpha: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    Fbm {
        hurst: f64,
    },
    Fgn {
        alpha: f64,
    },
    /// `uniform_bound` is the exponent `A` of `|c_{j,k}| <= 2^{-A j}`.
    Rws {
        atoms: Vec<Atom>,
        uniform_bound: f64,
    },
    Lacunary {
        alpha: f64,
        eta: f64,
    },
    Mrw {
        hurst: f64,
        lambda: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub model: Model,
    pub n: usize,
    pub seed: u64,
}

impl SynthesisConfig {
    pub fn new(model: Model, n: usize, seed: u64) -> Self {
        SynthesisConfig { model, n, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_LENGTH || !self.n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "length must be a power of two >= {MIN_LENGTH}, got {}",
                self.n
            )));
        }
        let unit = |name: &str, v: f64, lo: f64, hi: f64| {
            if v > lo && v < hi {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} = {v} must lie in ({lo}, {hi})"
                )))
            }
        };
        match &self.model {
            Model::Fbm { hurst } => unit("H", *hurst, 0.0, 1.0),
            Model::Fgn { alpha } => unit("alpha", *alpha, -1.0, 0.0),
            Model::Mrw { hurst, lambda } => {
                unit("H", *hurst, 0.0, 1.0)?;
                if !(*lambda > 0.0) || lambda * lambda >= MRW_MAX_LAMBDA_SQ {
                    return Err(Error::InvalidParameter(format!(
                        "lambda = {lambda} must satisfy 0 < lambda^2 < {MRW_MAX_LAMBDA_SQ}"
                    )));
                }
                Ok(())
            }
            Model::Lacunary { alpha, eta } => validate_atoms(
                &[Atom {
                    alpha: *alpha,
                    eta: *eta,
                }],
                *alpha,
            ),
            Model::Rws { atoms, uniform_bound } => validate_atoms(atoms, *uniform_bound),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Atoms and bound of the RWS-type models.
    pub fn rws_law(&self) -> Option<(Vec<Atom>, f64)> {
        match &self.model {
            Model::Rws { atoms, uniform_bound } => Some((atoms.clone(), *uniform_bound)),
            Model::Lacunary { alpha, eta } => Some((
                vec![Atom {
                    alpha: *alpha,
                    eta: *eta,
                }],
                *alpha,
            )),
            _ => None,
        }
    }
}

fn validate_atoms(atoms: &[Atom], bound: f64) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::InvalidParameter("RWS law needs at least one atom".into()));
    }
    if !bound.is_finite() {
        return Err(Error::LawViolatesUniformBound(format!("A = {bound} is not finite")));
    }
    for a in atoms {
        if !a.alpha.is_finite() || !a.eta.is_finite() || a.eta > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "atom (alpha = {}, eta = {}) needs finite values and eta <= 1",
                a.alpha, a.eta
            )));
        }
        if a.alpha < bound {
            return Err(Error::LawViolatesUniformBound(format!(
                "atom exponent {} is below A = {bound}",
                a.alpha
            )));
        }
    }
    Ok(())
}

/// Autocovariance of unit-variance fGn with Hurst `h` at lag `k`.
pub fn fgn_autocovariance(h: f64, k: usize) -> f64 {
    let k = k as f64;
    let e = 2.0 * h;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Negative eigenvalues above this fraction of the largest are clipped.
const EIGEN_CLIP: f64 = 1e-8;

/// Draws `n` samples of a stationary Gaussian sequence with autocovariance
/// `cov` by circulant embedding. The embedding is doubled once if the first
/// circulant is not positive semi-definite.
pub fn circulant_gaussian<R: Rng>(cov: impl Fn(usize) -> f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let mut m = n.next_power_of_two();
    let mut worst = 0.0;
    for _ in 0..2 {
        let size = 2 * m;
        let mut row: Vec<Complex<f64>> = (0..size).map(|t| Complex::new(cov(t.min(size - t)), 0.0)).collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(size);
        fft.process(&mut row);
        let max = row.iter().map(|c| c.re).fold(0.0f64, f64::max);
        let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        if min < -EIGEN_CLIP * max {
            worst = min;
            m *= 2;
            continue;
        }
        let scale = 1.0 / size as f64;
        let mut xi: Vec<Complex<f64>> = row
            .iter()
            .map(|lam| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                Complex::new(a, b) * (lam.re.max(0.0) * scale).sqrt()
            })
            .collect();
        fft.process(&mut xi);
        return Ok(xi[..n].iter().map(|c| c.re).collect());
    }
    Err(Error::EmbeddingNotPsd { min_eigenvalue: worst })
}

fn fgn_increments<R: Rng>(h: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    circulant_gaussian(|k| fgn_autocovariance(h, k), n, rng)
}

fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for v in increments {
        acc += v;
        out.push(acc);
    }
    out
}

/// Fractional Brownian motion: zero start followed by the running sum of
/// unit-variance fGn increments.
pub fn gen_fbm(config: &SynthesisConfig) -> Result<Signal> {
    config.validate()?;
    let Model::Fbm { hurst } = config.model else {
        return Err(Error::UnsupportedModel("gen_fbm expects an Fbm model".into()));
    };
    let mut rng = config.rng();
    let inc = fgn_increments(hurst, config.n - 1, &mut rng)?;
    Signal::new(format!("fbm_H{hurst}"), cumulative(&inc))
}

/// Fractional Gaussian noise of Hurst exponent `alpha ∈ (-1, 0)`: the first
/// difference of an fBm path with Hurst `alpha + 1`.
pub fn gen_fgn(config: &SynthesisConfig) -> Result<Signal> {
    config.validate()?;
    let Model::Fgn { alpha } = config.model else {
        return Err(Error::UnsupportedModel("gen_fgn expects an Fgn model".into()));
    };
    let mut rng = config.rng();
    // differencing the running sum returns these increments unchanged
    let inc = fgn_increments(alpha + 1.0, config.n, &mut rng)?;
    Signal::new(format!("fgn_alpha{alpha}"), inc)
}

/// Covariance `λ² ln⁺(L / (|τ| + 1))` of the MRW log-volatility.
pub fn mrw_log_covariance(lambda_sq: f64, integral_scale: f64, lag: usize) -> f64 {
    (lambda_sq * (integral_scale / (lag as f64 + 1.0)).ln()).max(0.0)
}

/// Multifractal random walk with integral scale `N`: running sum of
/// `ε_k e^{ω_k}` with `ε` unit fGn(H) and `ω` log-correlated Gaussian with
/// `E[e^{2ω}] = 1`.
pub fn gen_mrw(config: &SynthesisConfig) -> Result<Signal> {
    config.validate()?;
    let Model::Mrw { hurst, lambda } = config.model else {
        return Err(Error::UnsupportedModel("gen_mrw expects an Mrw model".into()));
    };
    let n = config.n;
    let lambda_sq = lambda * lambda;
    let integral = n as f64;
    let mut rng = config.rng();
    let eps = fgn_increments(hurst, n - 1, &mut rng)?;
    let omega = circulant_gaussian(|k| mrw_log_covariance(lambda_sq, integral, k), n - 1, &mut rng)?;
    let mean = -lambda_sq * integral.ln();
    let inc: Vec<f64> = eps.iter().zip(&omega).map(|(e, w)| e * (w + mean).exp()).collect();
    Signal::new(format!("mrw_H{hurst}_lambda{lambda}"), cumulative(&inc))
}

/// Coarsest level of a synthesized pyramid, matching a full decomposition.
pub const RWS_COARSEST: Scale = 2;

/// Random wavelet series populated directly in the wavelet domain.
///
/// Levels `2..=log2(N) - 1` carry `2^j` IID coefficients with random signs.
/// At each position one uniform draw selects atom `i` when it falls in the
/// `i`-th slice of cumulative probabilities `2^{(eta_i - 1) j}` (clamped at
/// one); otherwise the coefficient is zero.
pub fn gen_rws(config: &SynthesisConfig) -> Result<CoefficientPyramid> {
    config.validate()?;
    let (atoms, _) = config
        .rws_law()
        .ok_or_else(|| Error::UnsupportedModel("gen_rws expects an Rws or Lacunary model".into()))?;
    let big_j = config.n.trailing_zeros() as Scale;
    let mut rng = config.rng();
    let mut levels = Vec::with_capacity((big_j - RWS_COARSEST) as usize);
    for j in RWS_COARSEST..big_j {
        let jf = j as f64;
        let mut cuts = Vec::with_capacity(atoms.len());
        let mut acc = 0.0f64;
        for a in &atoms {
            acc = (acc + ((a.eta - 1.0) * jf).exp2()).min(1.0);
            cuts.push((acc, (-a.alpha * jf).exp2()));
        }
        let level = (0..1usize << j)
            .map(|_| {
                let u: f64 = rng.random();
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                cuts.iter().find(|(cut, _)| u < *cut).map_or(0.0, |(_, mag)| sign * mag)
            })
            .collect();
        levels.push(level);
    }
    CoefficientPyramid::from_levels(RWS_COARSEST, levels)
}

/// Time-domain signal of a random wavelet series.
pub fn gen_rws_signal(config: &SynthesisConfig, spec: &WaveletSpec) -> Result<Signal> {
    let pyramid = gen_rws(config)?;
    reconstruct(&pyramid, spec, "rws")
}

/// Dispatches on the model; RWS-type models are reconstructed with `spec`.
pub fn synthesize(config: &SynthesisConfig, spec: &WaveletSpec) -> Result<Signal> {
    match config.model {
        Model::Fbm { .. } => gen_fbm(config),
        Model::Fgn { .. } => gen_fgn(config),
        Model::Mrw { .. } => gen_mrw(config),
        Model::Rws { .. } | Model::Lacunary { .. } => gen_rws_signal(config, spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::estimate_hmin;
    use crate::wavelet::decompose_full;

    fn moments(x: &[f64]) -> (f64, f64, f64) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let skew = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n / var.powf(1.5);
        let kurt = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n / (var * var);
        (var, skew, kurt)
    }

    fn diff(x: &[f64]) -> Vec<f64> {
        x.windows(2).map(|w| w[1] - w[0]).collect()
    }

    #[test]
    fn determinism() {
        for model in [
            Model::Fbm { hurst: 0.7 },
            Model::Fgn { alpha: -0.25 },
            Model::Mrw {
                hurst: 0.6,
                lambda: 0.3,
            },
            Model::Lacunary { alpha: 0.5, eta: 0.6 },
        ] {
            let c = SynthesisConfig::new(model, 1 << 12, 99);
            let spec = WaveletSpec::default();
            let a = synthesize(&c, &spec).unwrap();
            let b = synthesize(&c, &spec).unwrap();
            assert!(a
                .samples()
                .iter()
                .zip(b.samples())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
            let other = synthesize(&SynthesisConfig { seed: 100, ..c }, &spec).unwrap();
            assert_ne!(a.samples(), other.samples());
        }
    }

    #[test]
    fn validation() {
        let bad = [
            SynthesisConfig::new(Model::Fbm { hurst: 1.0 }, 1 << 12, 0),
            SynthesisConfig::new(Model::Fgn { alpha: 0.1 }, 1 << 12, 0),
            SynthesisConfig::new(Model::Fbm { hurst: 0.5 }, 1000, 0),
            SynthesisConfig::new(Model::Fbm { hurst: 0.5 }, 512, 0),
            SynthesisConfig::new(
                Model::Mrw {
                    hurst: 0.6,
                    lambda: 0.8,
                },
                1 << 12,
                0,
            ),
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::InvalidParameter(_))), "{c:?}");
        }
        let law = SynthesisConfig::new(
            Model::Rws {
                atoms: vec![Atom { alpha: 0.3, eta: 0.4 }],
                uniform_bound: 0.5,
            },
            1 << 12,
            0,
        );
        assert!(matches!(gen_rws(&law), Err(Error::LawViolatesUniformBound(_))));
        let wrong = SynthesisConfig::new(Model::Fbm { hurst: 0.5 }, 1 << 12, 0);
        assert!(matches!(gen_mrw(&wrong), Err(Error::UnsupportedModel(_))));
    }

    #[test]
    fn brownian_increments_are_uncorrelated() {
        let n = 1 << 16;
        let x = gen_fbm(&SynthesisConfig::new(Model::Fbm { hurst: 0.5 }, n, 5)).unwrap();
        let d = diff(x.samples());
        let (var, _, _) = moments(&d);
        let r1 = d.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (d.len() - 1) as f64 / var;
        assert!(r1.abs() <= 3.0 / (n as f64).sqrt(), "r1 = {r1}");
    }

    #[test]
    fn fgn_marginals_are_gaussian() {
        let n = 1 << 16;
        for (seed, alpha) in [(1, -0.5), (2, -0.25), (3, -0.8)] {
            let x = gen_fgn(&SynthesisConfig::new(Model::Fgn { alpha }, n, seed)).unwrap();
            let (var, skew, kurt) = moments(x.samples());
            assert!((var - 1.0).abs() < 0.1, "var {var}");
            assert!(skew.abs() <= 0.1, "skew {skew}");
            assert!((kurt - 3.0).abs() <= 0.2, "kurt {kurt}");
        }
    }

    #[test]
    fn fbm_increment_variance_scales_as_lag_to_2h() {
        let n = 1 << 14;
        let lags: Vec<usize> = (0..=8).map(|i| 1 << i).collect();
        let mut acc = vec![0.0; lags.len()];
        for seed in 0..20 {
            let x = gen_fbm(&SynthesisConfig::new(Model::Fbm { hurst: 0.7 }, n, seed)).unwrap();
            let s = x.samples();
            for (i, &tau) in lags.iter().enumerate() {
                let v = (tau..n).map(|t| (s[t] - s[t - tau]).powi(2)).sum::<f64>() / (n - tau) as f64;
                acc[i] += v / 20.0;
            }
        }
        let xs: Vec<f64> = lags.iter().map(|&t| (t as f64).log2()).collect();
        let ys: Vec<f64> = acc.iter().map(|v| v.log2()).collect();
        let slope = crate::fit::line_fit(&xs, &ys).unwrap().slope;
        assert!((slope - 1.4).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn fbm_uniform_regularity() {
        let x = gen_fbm(&SynthesisConfig::new(Model::Fbm { hurst: 0.7 }, 1 << 16, 8)).unwrap();
        let p = decompose_full(&x, &WaveletSpec::default()).unwrap();
        let h = estimate_hmin(&p, 7, 13).unwrap();
        assert!((h - 0.7).abs() < 0.1, "hmin {h}");
    }

    #[test]
    fn mrw_increments_are_stationary() {
        // the log-volatility correlates over the whole path, so halves are
        // compared through ensemble-averaged variances
        let n = 1 << 16;
        let (mut first, mut second) = (0.0, 0.0);
        for seed in 0..20 {
            let x = gen_mrw(&SynthesisConfig::new(
                Model::Mrw {
                    hurst: 0.6,
                    lambda: 0.3,
                },
                n,
                seed,
            ))
            .unwrap();
            let d = diff(x.samples());
            let (a, b) = d.split_at(d.len() / 2);
            first += moments(a).0;
            second += moments(b).0;
        }
        let ratio = first / second;
        assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn mrw_log_covariance_is_embeddable() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in [1usize << 10, 1 << 14, 1 << 17] {
            let w = circulant_gaussian(|k| mrw_log_covariance(0.09, n as f64, k), n, &mut rng).unwrap();
            assert_eq!(w.len(), n);
        }
    }

    #[test]
    fn rws_respects_uniform_bound_and_density() {
        let c = SynthesisConfig::new(
            Model::Rws {
                atoms: vec![Atom { alpha: 0.3, eta: 0.4 }, Atom { alpha: 0.8, eta: 1.0 }],
                uniform_bound: 0.3,
            },
            1 << 14,
            4,
        );
        let p = gen_rws(&c).unwrap();
        assert_eq!(p.j_coarse(), 2);
        assert_eq!(p.j_fine(), 13);
        for level in p.levels() {
            let j = level.j as f64;
            let bound = (-0.3 * j).exp2();
            assert!(level.coeffs.iter().all(|c| c.abs() <= bound));
            let rare = level.coeffs.iter().filter(|c| c.abs() == bound).count() as f64;
            let expected = (0.4 * j).exp2();
            assert!(
                (rare - expected).abs() <= 5.0 * expected.sqrt() + 1.0,
                "j={j} {rare} vs {expected}"
            );
            assert!(level
                .coeffs
                .iter()
                .all(|c| c.abs() == bound || c.abs() == (-0.8 * j).exp2()));
        }
    }

    #[test]
    fn lacunary_pyramid_reconstructs_to_signal_length() {
        let c = SynthesisConfig::new(Model::Lacunary { alpha: 0.5, eta: 0.6 }, 1 << 12, 4);
        let s = gen_rws_signal(&c, &WaveletSpec::default()).unwrap();
        assert_eq!(s.len(), 1 << 12);
    }
}
