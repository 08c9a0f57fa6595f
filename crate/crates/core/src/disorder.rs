//! Static multiplicative disorder `J_i → J_i (1 + a ξ_i)` and the
//! statistics of the transferred population over realizations.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{project_hamiltonian, ChainParameters, CouplingDistribution};
use crate::ecd_file::format_float;
use crate::error::{Error, Result};
use crate::optimizer::SweepRecord;
use crate::rng;
use crate::spectral::{endpoint_spectrum, TransferSpectrum};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Zero-mean, unit-variance law of `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLaw {
    /// Uniform on `[-√3, √3]`.
    #[default]
    Uniform,
    Gaussian,
}

impl NoiseLaw {
    pub fn name(self) -> &'static str {
        match self {
            NoiseLaw::Uniform => "uniform",
            NoiseLaw::Gaussian => "gaussian",
        }
    }

    fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            NoiseLaw::Uniform => SQRT_3 * (2.0 * rng.random::<f64>() - 1.0),
            NoiseLaw::Gaussian => rng.sample(StandardNormal),
        }
    }
}

impl FromStr for NoiseLaw {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(NoiseLaw::Uniform),
            "gaussian" => Ok(NoiseLaw::Gaussian),
            other => Err(format!("unknown noise law {other:?} (expected uniform or gaussian)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub amplitude: f64,
    pub realizations: usize,
    pub rng_seed: u64,
    pub noise_law: NoiseLaw,
}

impl DisorderSpec {
    pub fn new(amplitude: f64, realizations: usize, rng_seed: u64) -> Self {
        Self {
            amplitude,
            realizations,
            rng_seed,
            noise_law: NoiseLaw::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        Error::check_finite("disorder amplitude", self.amplitude)?;
        if self.amplitude < 0.0 {
            return Err(Error::Domain {
                name: "disorder amplitude",
                value: self.amplitude,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("at least one disorder realization is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderStatistics {
    pub mean: f64,
    pub minimum: f64,
    pub std_dev: f64,
    pub realizations_used: usize,
}

/// Realization `realization_index` (one-based) of the perturbed chain.
///
/// Each of the `N-1` couplings gets its own draw, so the result is in general
/// not centro-symmetric. Draws depend only on `(seed, realization, i)`.
pub fn perturb(ecd: &CouplingDistribution, spec: &DisorderSpec, realization_index: usize) -> CouplingDistribution {
    if spec.amplitude == 0.0 {
        return ecd.clone();
    }
    let mut stream = rng::stream(spec.rng_seed, 0x5d15_0d3e, realization_index as u64);
    let couplings = ecd
        .couplings()
        .iter()
        .map(|&j| j * (1.0 + spec.amplitude * spec.noise_law.sample(&mut stream)))
        .collect();
    CouplingDistribution::new(couplings).expect("finite couplings stay finite under finite noise")
}

fn population(params: &ChainParameters, ecd: &CouplingDistribution, t: f64) -> Result<f64> {
    let h = project_hamiltonian(params, ecd)?;
    Ok(endpoint_spectrum(&h)?.transferred_population(t))
}

/// Reduce samples in order: mean, minimum, and population standard deviation.
pub fn summarize(samples: &[f64]) -> DisorderStatistics {
    let n = samples.len() as f64;
    let minimum = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let maximum = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = if minimum == maximum {
        minimum
    } else {
        // Rounding can push the sum a hair outside the sample range.
        (samples.iter().sum::<f64>() / n).clamp(minimum, maximum)
    };
    let var = samples.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
    DisorderStatistics {
        mean,
        minimum,
        std_dev: var.sqrt(),
        realizations_used: samples.len(),
    }
}

/// Per-realization populations, in realization order.
pub fn disorder_samples(
    params: &ChainParameters,
    ecd: &CouplingDistribution,
    arrival_time: f64,
    spec: &DisorderSpec,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.amplitude == 0.0 {
        let p = population(params, ecd, arrival_time)?;
        return Ok(vec![p; spec.realizations]);
    }
    (1..=spec.realizations)
        .into_par_iter()
        .map(|j| population(params, &perturb(ecd, spec, j), arrival_time))
        .collect()
}

pub fn disorder_statistics(
    params: &ChainParameters,
    ecd: &CouplingDistribution,
    arrival_time: f64,
    spec: &DisorderSpec,
) -> Result<DisorderStatistics> {
    Ok(summarize(&disorder_samples(params, ecd, arrival_time, spec)?))
}

/// One grid cell: a sweep record's chain at one amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub j_max: f64,
    pub amplitude: f64,
    pub stats: DisorderStatistics,
}

/// Statistics for every (sweep record, amplitude) pair; rows follow the
/// sweep, columns the amplitudes.
pub fn disorder_grid(
    params: &ChainParameters,
    sweep: &[SweepRecord],
    arrival_time: f64,
    amplitudes: &[f64],
    realizations: usize,
    seed: u64,
    law: NoiseLaw,
) -> Result<Vec<Vec<GridCell>>> {
    if sweep.is_empty() || amplitudes.is_empty() {
        return Err(Error::InvalidConfig("disorder grid needs records and amplitudes".into()));
    }
    sweep
        .iter()
        .map(|record| {
            amplitudes
                .iter()
                .map(|&amplitude| {
                    let spec = DisorderSpec {
                        amplitude,
                        realizations,
                        rng_seed: seed,
                        noise_law: law,
                    };
                    let stats = disorder_statistics(params, &record.ecd, arrival_time, &spec)?;
                    Ok(GridCell {
                        j_max: record.j_max,
                        amplitude,
                        stats,
                    })
                })
                .collect()
        })
        .collect()
}

pub fn stats_header(seed: u64, realizations: usize, law: NoiseLaw) -> String {
    format!("# seed={seed} n_r={realizations} law={}\n", law.name())
}

/// `j_max,a,mean,min,std` table.
pub fn grid_csv(grid: &[Vec<GridCell>], seed: u64, realizations: usize, law: NoiseLaw) -> String {
    let mut out = stats_header(seed, realizations, law);
    out.push_str("j_max,a,mean,min,std\n");
    for cell in grid.iter().flatten() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_float(cell.j_max),
            format_float(cell.amplitude),
            format_float(cell.stats.mean),
            format_float(cell.stats.minimum),
            format_float(cell.stats.std_dev)
        );
    }
    out
}

/// `a,mean,min,std` table for one chain.
pub fn line_scan_csv(rows: &[(f64, DisorderStatistics)], seed: u64, realizations: usize, law: NoiseLaw) -> String {
    let mut out = stats_header(seed, realizations, law);
    out.push_str("a,mean,min,std\n");
    for (a, stats) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_float(*a),
            format_float(stats.mean),
            format_float(stats.minimum),
            format_float(stats.std_dev)
        );
    }
    out
}
