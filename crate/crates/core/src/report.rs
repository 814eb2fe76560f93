//! Analysis reports and their JSON/TSV serialization.
//!
//! Floats are written with 17 significant digits in exponent form so equal
//! reports give equal bytes. Non-finite values become JSON `null` and read
//! back as `-inf`; TSV files spell them `-inf`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::wavelet::Scale;

pub mod num {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    pub fn format(v: f64) -> String {
        format!("{v:.16e}")
    }

    fn raw(v: f64) -> Box<RawValue> {
        RawValue::from_string(format(v)).expect("exponent notation is valid JSON")
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            raw(*v).serialize(s)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let items: Vec<Option<Box<RawValue>>> = v.iter().map(|x| x.is_finite().then(|| raw(*x))).collect();
            items.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<Option<f64>>::deserialize(d)?
                .into_iter()
                .map(|x| x.unwrap_or(f64::NEG_INFINITY))
                .collect())
        }
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            v.filter(|x| x.is_finite()).map(raw).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<f64>::deserialize(d)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    #[serde(with = "num")]
    pub q: f64,
    #[serde(with = "num")]
    pub exponent: f64,
    #[serde(with = "num")]
    pub intercept: f64,
    #[serde(with = "num")]
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub j: Scale,
    pub count: usize,
    pub zeros: usize,
    pub unreliable_negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    #[serde(with = "num")]
    pub mode_h: f64,
    /// Shift already applied to `h` (`-s` for integration order `s`).
    #[serde(with = "num")]
    pub offset: f64,
    #[serde(with = "num::opt")]
    pub q_min: Option<f64>,
    #[serde(with = "num::opt")]
    pub q_max: Option<f64>,
    #[serde(with = "num::vec")]
    pub h: Vec<f64>,
    #[serde(with = "num::vec")]
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityRow {
    pub exists_positive: bool,
    #[serde(with = "num::opt")]
    pub best_p: Option<f64>,
    #[serde(with = "num")]
    pub slope_at_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityLevelRow {
    pub j: Scale,
    pub total: usize,
    pub absorbed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    #[serde(with = "num")]
    pub q: f64,
    #[serde(with = "num")]
    pub budget: f64,
    /// `null` when every level is fully absorbed.
    #[serde(with = "num")]
    pub delta: f64,
    /// Upper bound on admissible p; `null` when every p is admissible.
    #[serde(with = "num::opt")]
    pub p_bound: Option<f64>,
    pub levels: Vec<SparsityLevelRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub label: String,
    pub samples: usize,
    pub formalism: String,
    #[serde(with = "num")]
    pub fractional_order: f64,
    pub scales: (Scale, Scale),
    #[serde(with = "num")]
    pub hmin: f64,
    pub scaling: Vec<ScalingRow>,
    pub levels: Vec<LevelRow>,
    #[serde(with = "num")]
    pub min_r_squared: f64,
    /// Whether every fit reached the configured r² threshold.
    pub meets_fit_threshold: Option<bool>,
    pub spectrum: SpectrumReport,
    pub admissibility: AdmissibilityRow,
    pub sparsity: Option<SparsityReport>,
}

/// Output row of the `hmin` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HminRow {
    pub label: String,
    pub scales: (Scale, Scale),
    #[serde(with = "num")]
    pub hmin: f64,
    pub admissibility: AdmissibilityRow,
}

/// Output row of the `split` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub label: String,
    pub scales: (Scale, Scale),
    #[serde(with = "num")]
    pub hmin: f64,
    pub sparsity: SparsityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub input: Option<String>,
    pub seed: Option<u64>,
    pub config: AnalysisConfig,
}

impl Provenance {
    /// Echoes `config` without its `[output]` table, so the report does not
    /// depend on where it is written.
    pub fn new(config: &AnalysisConfig) -> Self {
        let mut config = config.clone();
        config.output = Default::default();
        Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            input: config.input.path.as_ref().map(|p| p.display().to_string()),
            seed: None,
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub channels: Vec<ChannelReport>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// `H\tD` table with `-inf` for empty dimensions.
pub fn spectrum_tsv(h: &[f64], d: &[f64]) -> String {
    let mut out = String::from("H\tD\n");
    for (h, d) in h.iter().zip(d) {
        let dv = if d.is_finite() {
            num::format(*d)
        } else {
            "-inf".to_string()
        };
        out.push_str(&format!("{}\t{}\n", num::format(*h), dv));
    }
    out
}

/// Label reduced to characters safe in a file name.
pub fn file_stem(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.starts_with('.') {
        format!("ch{s}")
    } else {
        s
    }
}

/// Writes the JSON report and one `<label>.tsv` per channel.
pub fn emit_report(report: &AnalysisReport, json_path: Option<&Path>, tsv_dir: Option<&Path>) -> Result<()> {
    if let Some(path) = json_path {
        fs::write(path, report.to_json()?).map_err(|e| Error::io(path, e))?;
    }
    if let Some(dir) = tsv_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for ch in &report.channels {
            let path = dir.join(format!("{}.tsv", file_stem(&ch.label)));
            fs::write(&path, spectrum_tsv(&ch.spectrum.h, &ch.spectrum.d)).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}
