//! End-to-end analysis of one or more channels.

use crate::config::{AnalysisConfig, Formalism};
use crate::error::{Error, Result};
use crate::io::ingest;
use crate::multiscale::{
    coefficient_field, p_leaders, theta_omega_leaders, wavelet_leaders, GrowthPair, MultiscaleField,
};
use crate::par;
use crate::report::{
    AdmissibilityRow, AnalysisReport, ChannelReport, HminRow, LevelRow, Provenance, ScalingRow, SparsityLevelRow,
    SparsityReport, SpectrumReport, SplitRow,
};
use crate::scaling::{
    default_scale_range, estimate_hmin, p_admissibility, scaling_function, structure_functions, MomentGrid,
    SMALL_Q_LIMIT,
};
use crate::sparsity::{admissible_p_bound, sparsity_split_over, PBound};
use crate::spectrum::{default_h_grid, legendre_transform_with_floor, QRestriction};
use crate::wavelet::{decompose_full, pseudo_fractional_integrate, CoefficientPyramid, Scale, Signal};

/// Builds the configured multiscale field.
pub fn formalism_field(pyramid: &CoefficientPyramid, formalism: &Formalism) -> Result<MultiscaleField> {
    match *formalism {
        Formalism::Leaders => wavelet_leaders(pyramid),
        Formalism::PLeaders { p } => p_leaders(pyramid, p),
        Formalism::ThetaOmega { beta, omega_exponent } => {
            theta_omega_leaders(pyramid, &GrowthPair::power(beta, omega_exponent)?)
        }
    }
}

/// Reads the configured input and analyzes every selected channel.
pub fn run_analysis(config: &AnalysisConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let path = config
        .input
        .path
        .as_deref()
        .ok_or_else(|| Error::Config("no input path configured".into()))?;
    let signals = ingest(path, config.input.format, config.input.channels.as_deref())?;
    analyze_signals(&signals, config)
}

/// Analyzes in-memory signals; channels run concurrently, the report keeps
/// their input order.
pub fn analyze_signals(signals: &[Signal], config: &AnalysisConfig) -> Result<AnalysisReport> {
    config.validate()?;
    for s in signals {
        check_depth(s, config).map_err(|e| e.in_channel(s.label()))?;
    }
    let channels = par::try_map(signals, |s| {
        analyze_channel(s, config).map_err(|e| e.in_channel(s.label()))
    })?;
    Ok(AnalysisReport {
        provenance: Provenance::new(config),
        channels,
    })
}

/// Rejects explicit scale ranges the signal cannot resolve.
fn check_depth(signal: &Signal, config: &AnalysisConfig) -> Result<()> {
    let Some(j_fine) = signal.finest_scale() else {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            reason: "need at least two samples".into(),
        });
    };
    if let Some((j1, j2)) = config.scale_range()? {
        if j2 > j_fine || j1 < 2 {
            return Err(Error::ScaleRangeTooNarrow {
                j1,
                j2,
                reason: format!("signal of length {} resolves scales 2..={j_fine}", signal.len()),
            });
        }
    }
    Ok(())
}

/// Scale range and pyramid shared by every per-channel step.
struct Prepared {
    original: CoefficientPyramid,
    scales: (Scale, Scale),
}

fn prepare(signal: &Signal, config: &AnalysisConfig) -> Result<Prepared> {
    let original = decompose_full(signal, &config.wavelet_spec()?)?;
    let scales = match config.scale_range()? {
        Some(r) => r,
        None => {
            let field = formalism_field(&original, &config.multiscale.formalism)?;
            default_scale_range(original.j_fine(), field.valid_range.as_ref())?
        }
    };
    Ok(Prepared { original, scales })
}

/// Sign test on the coefficient scaling function near `q = 0+`.
fn admissibility(
    pyramid: &CoefficientPyramid,
    grid: &MomentGrid,
    (j1, j2): (Scale, Scale),
) -> Result<AdmissibilityRow> {
    // the 0+ slope needs two positive orders, the smallest at most SMALL_Q_LIMIT
    let positive = grid
        .positive_part()
        .filter(|g| g.len() >= 2 && g.values()[0] <= SMALL_Q_LIMIT)
        .unwrap_or_else(MomentGrid::default_positive);
    let sf = structure_functions(&coefficient_field(pyramid), &positive)?;
    let report = p_admissibility(&scaling_function(&sf, j1, j2)?)?;
    Ok(AdmissibilityRow {
        exists_positive: report.exists_positive,
        best_p: report.best_p,
        slope_at_zero: report.slope_at_zero,
    })
}

fn sparsity(
    pyramid: &CoefficientPyramid,
    config: &AnalysisConfig,
    scales: (Scale, Scale),
    hmin: f64,
) -> Result<SparsityReport> {
    let split = sparsity_split_over(pyramid, config.sparsity.q, config.sparsity.budget, Some(scales))?;
    let p_bound = if split.delta < 1.0 {
        match admissible_p_bound(split.delta, hmin)? {
            PBound::AllAdmissible => None,
            PBound::Below { bound } => Some(bound),
        }
    } else {
        None
    };
    Ok(SparsityReport {
        q: split.q,
        budget: split.budget_constant,
        delta: split.delta,
        p_bound,
        levels: split
            .levels
            .iter()
            .map(|l| SparsityLevelRow {
                j: l.j,
                total: l.total,
                absorbed: l.absorbed,
            })
            .collect(),
    })
}

pub fn analyze_channel(signal: &Signal, config: &AnalysisConfig) -> Result<ChannelReport> {
    let Prepared { original, scales } = prepare(signal, config)?;
    let (j1, j2) = scales;
    let s = config.multiscale.fractional_order;
    let pyramid = if s == 0.0 {
        original.clone()
    } else {
        pseudo_fractional_integrate(&original, s)?
    };
    let field = formalism_field(&pyramid, &config.multiscale.formalism)?;
    let grid = config.moment_grid()?;
    let sf = structure_functions(&field, &grid)?;
    let zeta = scaling_function(&sf, j1, j2)?;
    let h_grid = match config.h_grid()? {
        Some(h) => h,
        None => default_h_grid(&zeta),
    };
    let spectrum = legendre_transform_with_floor(&zeta, &h_grid, QRestriction::AllQ, config.spectrum.floor)?.offset(-s);

    let hmin = estimate_hmin(&original, j1, j2)?;
    let admissibility = admissibility(&pyramid, &grid, scales)?;
    let sparsity = if config.sparsity.enabled {
        Some(sparsity(&original, config, scales, hmin)?)
    } else {
        None
    };

    let min_r_squared = zeta
        .estimates
        .iter()
        .filter(|e| e.q != 0.0)
        .map(|e| e.r_squared)
        .fold(1.0f64, f64::min);
    let meets_fit_threshold = config.scaling.min_r_squared.map(|t| min_r_squared >= t);
    let levels = sf
        .scales
        .iter()
        .enumerate()
        .map(|(i, &j)| LevelRow {
            j,
            count: sf.counts[i],
            zeros: sf.zero_counts[i],
            unreliable_negative: sf.unreliable_negative[i],
        })
        .collect();

    Ok(ChannelReport {
        label: signal.label().to_string(),
        samples: signal.len(),
        formalism: field.kind.name(),
        fractional_order: s,
        scales,
        hmin,
        scaling: zeta
            .estimates
            .iter()
            .map(|e| ScalingRow {
                q: e.q,
                exponent: e.exponent,
                intercept: e.intercept,
                r_squared: e.r_squared,
            })
            .collect(),
        levels,
        min_r_squared,
        meets_fit_threshold,
        spectrum: SpectrumReport {
            mode_h: spectrum.mode_h,
            offset: -s,
            q_min: spectrum.q_range.map(|r| r.0),
            q_max: spectrum.q_range.map(|r| r.1),
            h: spectrum.h,
            d: spectrum.d,
        },
        admissibility,
        sparsity,
    })
}

/// `H_min` and the admissibility test per channel, on the un-integrated signal.
pub fn hmin_signals(signals: &[Signal], config: &AnalysisConfig) -> Result<Vec<HminRow>> {
    config.validate()?;
    for s in signals {
        check_depth(s, config).map_err(|e| e.in_channel(s.label()))?;
    }
    let grid = config.moment_grid()?;
    par::try_map(signals, |signal| {
        let run = || {
            let Prepared { original, scales } = prepare(signal, config)?;
            Ok(HminRow {
                label: signal.label().to_string(),
                scales,
                hmin: estimate_hmin(&original, scales.0, scales.1)?,
                admissibility: admissibility(&original, &grid, scales)?,
            })
        };
        run().map_err(|e: Error| e.in_channel(signal.label()))
    })
}

/// Sparsity split per channel, whatever `sparsity.enabled` says.
pub fn split_signals(signals: &[Signal], config: &AnalysisConfig) -> Result<Vec<SplitRow>> {
    let mut config = config.clone();
    config.sparsity.enabled = true;
    config.validate()?;
    for s in signals {
        check_depth(s, &config).map_err(|e| e.in_channel(s.label()))?;
    }
    par::try_map(signals, |signal| {
        let run = || {
            let Prepared { original, scales } = prepare(signal, &config)?;
            let hmin = estimate_hmin(&original, scales.0, scales.1)?;
            Ok(SplitRow {
                label: signal.label().to_string(),
                scales,
                hmin,
                sparsity: sparsity(&original, &config, scales, hmin)?,
            })
        };
        run().map_err(|e: Error| e.in_channel(signal.label()))
    })
}

/// Scale range an analysis of `signal` would use by default.
pub fn default_range_for(signal: &Signal, config: &AnalysisConfig) -> Result<(Scale, Scale)> {
    let mut config = config.clone();
    config.scaling.j1 = None;
    config.scaling.j2 = None;
    config.scaling.preset = None;
    Ok(prepare(signal, &config)?.scales)
}
