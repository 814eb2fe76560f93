//! Analysis configuration: TOML file with one table per module, every key
//! optional, overridable from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::InputFormat;
use crate::multiscale::{FieldKind, GrowthPair, DEFAULT_BETA, DEFAULT_OMEGA_EXPONENT};
use crate::scaling::MomentGrid;
use crate::spectrum::{linspace, DEFAULT_FLOOR};
use crate::wavelet::{Scale, WaveletSpec};

/// Octave range `[10, 14]` used for long MEG recordings.
pub const MEG_PRESET: (Scale, Scale) = (10, 14);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Formalism {
    Leaders,
    PLeaders { p: f64 },
    ThetaOmega { beta: f64, omega_exponent: f64 },
}

impl Default for Formalism {
    fn default() -> Self {
        Formalism::ThetaOmega {
            beta: DEFAULT_BETA,
            omega_exponent: DEFAULT_OMEGA_EXPONENT,
        }
    }
}

impl Formalism {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Formalism::Leaders => Ok(()),
            Formalism::PLeaders { p } if p > 0.0 && p.is_finite() => Ok(()),
            Formalism::PLeaders { p } => Err(Error::NonPositiveP(p)),
            Formalism::ThetaOmega { beta, omega_exponent } => GrowthPair::power(beta, omega_exponent).map(|_| ()),
        }
    }

    pub fn field_kind(&self) -> Result<FieldKind> {
        Ok(match *self {
            Formalism::Leaders => FieldKind::Leaders,
            Formalism::PLeaders { p } => FieldKind::PLeaders { p },
            Formalism::ThetaOmega { beta, omega_exponent } => FieldKind::ThetaOmegaLeaders {
                growth: GrowthPair::power(beta, omega_exponent)?,
            },
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    pub path: Option<PathBuf>,
    pub format: Option<InputFormat>,
    /// 0-based channel indices; all channels when absent.
    pub channels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveletSection {
    pub vanishing_moments: usize,
}

impl Default for WaveletSection {
    fn default() -> Self {
        WaveletSection {
            vanishing_moments: WaveletSpec::default().vanishing_moments,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiscaleSection {
    pub formalism: Formalism,
    /// Pseudo-fractional integration order applied before the formalism.
    pub fractional_order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub j1: Option<Scale>,
    pub j2: Option<Scale>,
    /// Named scale range; `"meg"` selects `[10, 14]`.
    pub preset: Option<String>,
    pub q_min: f64,
    pub q_max: f64,
    pub q_count: usize,
    /// Explicit moment orders; override the linear grid when present.
    pub q: Option<Vec<f64>>,
    /// Minimum r² a channel's fits should reach; reported, never enforced.
    pub min_r_squared: Option<f64>,
}

impl Default for ScalingSection {
    fn default() -> Self {
        ScalingSection {
            j1: None,
            j2: None,
            preset: None,
            q_min: -8.0,
            q_max: 8.0,
            q_count: 64,
            q: None,
            min_r_squared: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub h_count: usize,
    pub floor: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            h_min: None,
            h_max: None,
            h_count: crate::spectrum::DEFAULT_H_POINTS,
            floor: DEFAULT_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparsitySection {
    pub enabled: bool,
    pub q: f64,
    pub budget: f64,
}

impl Default for SparsitySection {
    fn default() -> Self {
        SparsitySection {
            enabled: false,
            q: 2.0,
            budget: crate::sparsity::DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub json: Option<PathBuf>,
    pub tsv_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub input: InputSection,
    pub wavelet: WaveletSection,
    pub multiscale: MultiscaleSection,
    pub scaling: ScalingSection,
    pub spectrum: SpectrumSection,
    pub sparsity: SparsitySection,
    pub output: OutputSection,
}

impl AnalysisConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn wavelet_spec(&self) -> Result<WaveletSpec> {
        WaveletSpec::daubechies(self.wavelet.vanishing_moments)
    }

    /// Explicit `[j1, j2]` (from keys or preset); `None` means data-driven.
    pub fn scale_range(&self) -> Result<Option<(Scale, Scale)>> {
        let preset = match self.scaling.preset.as_deref() {
            None => None,
            Some("meg") => Some(MEG_PRESET),
            Some(other) => return Err(Error::Config(format!("unknown scale preset '{other}'"))),
        };
        match (self.scaling.j1, self.scaling.j2, preset) {
            (Some(a), Some(b), _) => Ok(Some((a, b))),
            (None, None, p) => Ok(p),
            (Some(a), None, Some((_, b))) | (None, Some(b), Some((a, _))) => Ok(Some((a, b))),
            _ => Err(Error::Config("set both j1 and j2, or a preset".into())),
        }
    }

    pub fn moment_grid(&self) -> Result<MomentGrid> {
        match &self.scaling.q {
            Some(q) => MomentGrid::new(q.clone()),
            None => MomentGrid::linspace(self.scaling.q_min, self.scaling.q_max, self.scaling.q_count),
        }
    }

    /// Explicit H grid when both bounds are configured.
    pub fn h_grid(&self) -> Result<Option<Vec<f64>>> {
        match (self.spectrum.h_min, self.spectrum.h_max) {
            (None, None) => Ok(None),
            (Some(lo), Some(hi)) if hi > lo && self.spectrum.h_count >= 2 => {
                Ok(Some(linspace(lo, hi, self.spectrum.h_count)))
            }
            _ => Err(Error::Config("H grid needs h_min < h_max and h_count >= 2".into())),
        }
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.wavelet_spec()?;
        self.multiscale.formalism.validate()?;
        if !self.multiscale.fractional_order.is_finite() {
            return Err(Error::Config("fractional_order must be finite".into()));
        }
        if let Some((j1, j2)) = self.scale_range()? {
            if j2 - j1 < 2 || j1 < 1 {
                return Err(Error::ScaleRangeTooNarrow {
                    j1,
                    j2,
                    reason: "need 1 <= j1 and j2 - j1 >= 2".into(),
                });
            }
        }
        self.moment_grid()?;
        self.h_grid()?;
        if !self.spectrum.floor.is_finite() || self.spectrum.floor > 1.0 {
            return Err(Error::Config("spectrum floor must be finite and <= 1".into()));
        }
        if self.sparsity.enabled && (!(self.sparsity.q > 0.0) || !(self.sparsity.budget > 0.0)) {
            return Err(Error::InvalidParameter("sparsity q and budget must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_parse_and_default() {
        let c = AnalysisConfig::from_toml_str(
            r#"
            [input]
            path = "x.csv"
            channels = [0, 2]

            [multiscale]
            formalism = { kind = "p_leaders", p = 2.0 }
            fractional_order = 1.0

            [scaling]
            preset = "meg"
            "#,
        )
        .unwrap();
        assert_eq!(c.input.channels, Some(vec![0, 2]));
        assert_eq!(c.multiscale.formalism, Formalism::PLeaders { p: 2.0 });
        assert_eq!(c.scale_range().unwrap(), Some((10, 14)));
        assert_eq!(c.wavelet.vanishing_moments, 3);
        assert_eq!(c.moment_grid().unwrap().len(), 64);
        c.validate().unwrap();
        let back = AnalysisConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn defaults_are_theta_omega() {
        let c = AnalysisConfig::default();
        assert_eq!(
            c.multiscale.formalism,
            Formalism::ThetaOmega {
                beta: 0.25,
                omega_exponent: 1.0
            }
        );
        assert_eq!(c.scale_range().unwrap(), None);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(AnalysisConfig::from_toml_str("[scaling]\nbogus = 1").is_err());
        let mut c = AnalysisConfig::default();
        c.scaling.j1 = Some(5);
        c.scaling.j2 = Some(6);
        assert!(matches!(c.validate(), Err(Error::ScaleRangeTooNarrow { .. })));
        c.scaling.j2 = None;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = AnalysisConfig::default();
        c.multiscale.formalism = Formalism::PLeaders { p: -1.0 };
        assert!(matches!(c.validate(), Err(Error::NonPositiveP(_))));
        c.multiscale.formalism = Formalism::Leaders;
        c.wavelet.vanishing_moments = 9;
        assert!(matches!(c.validate(), Err(Error::InvalidWavelet(_))));
    }
}
