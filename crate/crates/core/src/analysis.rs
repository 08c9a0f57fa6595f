//! Studies built on top of the sweep: minimal cube side for a target
//! population, the exponential law of that side versus arrival time,
//! scaled-time peak extraction and distribution divergences.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{check_distribution, project_hamiltonian, ChainParameters, CouplingDistribution};
use crate::ecd_file::format_float;
use crate::error::{Error, Result};
use crate::optimizer::{hypercube_sweep, OptimizerConfig, SweepPlan, SweepRecord};
use crate::rng::child_seed;
use crate::spectral::{endpoint_spectrum, TransferSpectrum};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[a, b]`, down to an
/// interval width of `tolerance`. The returned point never leaves `[a, b]`.
pub fn golden_maximize<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tolerance: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tolerance {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    let candidates = [(x1, f1), (x2, f2), (mid, f(mid))];
    candidates
        .into_iter()
        .fold((mid, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JminPoint {
    pub n_sites: usize,
    pub arrival_time: f64,
    pub j_min: f64,
    pub achieved_population: f64,
    pub record: SweepRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JminOutcome {
    Reached(JminPoint),
    /// The sweep ended below the target; carries its best record.
    Unreached { best: SweepRecord },
}

impl JminOutcome {
    pub fn reached(&self) -> Option<&JminPoint> {
        match self {
            JminOutcome::Reached(p) => Some(p),
            JminOutcome::Unreached { .. } => None,
        }
    }
}

/// Smallest cube side of the sweep whose optimized population reaches
/// `target`. The resolution is the sweep step.
pub fn find_jmin(
    params: &ChainParameters,
    arrival_time: f64,
    target: f64,
    plan: &SweepPlan,
    config: &OptimizerConfig,
) -> Result<JminOutcome> {
    if !(0.0..1.0).contains(&target) {
        return Err(Error::Domain {
            name: "target",
            value: target,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let plan = SweepPlan {
        target: Some(target),
        ..*plan
    };
    let records = hypercube_sweep(params, arrival_time, &plan, config)?;
    let last = records.last().expect("a validated sweep has at least one cube");
    if last.population >= target {
        return Ok(JminOutcome::Reached(JminPoint {
            n_sites: params.n_sites(),
            arrival_time,
            j_min: last.j_max,
            achieved_population: last.population,
            record: last.clone(),
        }));
    }
    let best = records
        .iter()
        .fold(last, |b, r| if r.population > b.population { r } else { b })
        .clone();
    Ok(JminOutcome::Unreached { best })
}

/// [`find_jmin`] repeated over `restarts` independent sweeps, keeping the
/// smallest side reached. Restart `r > 0` runs with seed
/// `child_seed(config.rng_seed, r)` and stops at the best side found so far.
pub fn find_jmin_best_of(
    params: &ChainParameters,
    arrival_time: f64,
    target: f64,
    plan: &SweepPlan,
    config: &OptimizerConfig,
    restarts: usize,
) -> Result<JminOutcome> {
    if restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    let mut best = find_jmin(params, arrival_time, target, plan, config)?;
    for r in 1..restarts {
        let j_end = match &best {
            JminOutcome::Reached(p) => p.j_min,
            JminOutcome::Unreached { .. } => plan.j_end,
        };
        if j_end < plan.j_start {
            break;
        }
        let plan_r = SweepPlan { j_end, ..*plan };
        let config_r = config.clone().with_seed(child_seed(config.rng_seed, r as u64));
        let candidate = find_jmin(params, arrival_time, target, &plan_r, &config_r)?;
        best = match (best, candidate) {
            (JminOutcome::Reached(a), JminOutcome::Reached(b)) => {
                if b.j_min < a.j_min || (b.j_min == a.j_min && b.achieved_population > a.achieved_population) {
                    JminOutcome::Reached(b)
                } else {
                    JminOutcome::Reached(a)
                }
            }
            (JminOutcome::Reached(a), JminOutcome::Unreached { .. }) => JminOutcome::Reached(a),
            (JminOutcome::Unreached { .. }, JminOutcome::Reached(b)) => JminOutcome::Reached(b),
            (JminOutcome::Unreached { best: a }, JminOutcome::Unreached { best: b }) => JminOutcome::Unreached {
                best: if b.population > a.population { b } else { a },
            },
        };
    }
    Ok(best)
}

pub fn jmin_csv(points: &[JminPoint]) -> String {
    let mut out = String::from("N,T,j_min,P\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.n_sites,
            format_float(p.arrival_time),
            format_float(p.j_min),
            format_float(p.achieved_population)
        );
    }
    out
}

/// `J(T) = A + B exp(-C T / N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    #[serde(rename = "A")]
    pub a_coef: f64,
    #[serde(rename = "B")]
    pub b_coef: f64,
    #[serde(rename = "C")]
    pub c_coef: f64,
    #[serde(rename = "rms")]
    pub rms_residual: f64,
}

impl ExponentialFit {
    pub fn evaluate(&self, arrival_time: f64, n_sites: usize) -> f64 {
        self.a_coef + self.b_coef * (-self.c_coef * arrival_time / n_sites as f64).exp()
    }
}

fn sum_squares(points: &[(f64, f64)], n: f64, p: [f64; 3]) -> f64 {
    points
        .iter()
        .map(|&(t, y)| {
            let r = p[0] + p[1] * (-p[2] * t / n).exp() - y;
            r * r
        })
        .sum()
}

/// Solve a 3×3 system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Levenberg–Marquardt fit of `A + B exp(-C T/N)` to `(T, j_min)` pairs.
pub fn fit_exponential(points: &[(f64, f64)], n_sites: usize) -> Result<ExponentialFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateData(format!(
            "three parameters need at least 3 points, got {}",
            points.len()
        )));
    }
    if n_sites == 0 {
        return Err(Error::DegenerateData("chain length must be positive".into()));
    }
    if points.iter().any(|(t, y)| !t.is_finite() || !y.is_finite()) {
        return Err(Error::DegenerateData("non-finite data point".into()));
    }
    let mut data = points.to_vec();
    data.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if data.first().map(|p| p.0) == data.last().map(|p| p.0) {
        return Err(Error::DegenerateData("all arrival times are equal".into()));
    }

    let n = n_sites as f64;
    let y_min = data.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_max = data.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut p = [y_min, y_max - y_min, 1.0];
    let mut sse = sum_squares(&data, n, p);
    let mut lambda = 1e-3;

    for _ in 0..10_000 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for &(t, y) in &data {
            let e = (-p[2] * t / n).exp();
            let r = p[0] + p[1] * e - y;
            let grad = [1.0, e, -p[1] * t / n * e];
            for i in 0..3 {
                jtr[i] += grad[i] * r;
                for j in 0..3 {
                    jtj[i][j] += grad[i] * grad[j];
                }
            }
        }

        let mut accepted = false;
        let mut converged = false;
        while lambda < 1e20 {
            let mut damped = jtj;
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-12);
            }
            let Some(step) = solve3(damped, [-jtr[0], -jtr[1], -jtr[2]]) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            let trial_sse = sum_squares(&data, n, trial);
            let change = step.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
            if trial_sse.is_finite() && trial_sse <= sse {
                p = trial;
                sse = trial_sse;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                converged = change < 1e-10;
                break;
            }
            if change < 1e-14 {
                converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if converged || !accepted {
            break;
        }
    }

    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("fit diverged".into()));
    }
    Ok(ExponentialFit {
        a_coef: p[0],
        b_coef: p[1],
        c_coef: p[2],
        rms_residual: (sse / data.len() as f64).sqrt(),
    })
}

/// Peak positions in units of `κN` and their heights.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakSet {
    pub scaled_times: Vec<f64>,
    pub heights: Vec<f64>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.scaled_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled_times.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scaled_time,height\n");
        for (t, h) in self.scaled_times.iter().zip(&self.heights) {
            let _ = writeln!(out, "{},{}", format_float(*t), format_float(*h));
        }
        out
    }
}

const PEAK_THRESHOLD: f64 = 0.5;
const PEAK_TIME_TOLERANCE: f64 = 1e-6;

/// Local maxima of `P(t)` above one half, on `(0, 2·max_peaks·κN]`, each
/// refined by golden-section search. Times are reported as `t / (κN)`.
pub fn scaled_peaks<S: TransferSpectrum + Sync>(
    spectrum: &S,
    kappa: f64,
    max_peaks: usize,
    grid_step: f64,
) -> Result<PeakSet> {
    if !(grid_step > 0.0) {
        return Err(Error::InvalidConfig(format!("grid step must be positive, got {grid_step}")));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidConfig(format!("kappa must be positive, got {kappa}")));
    }
    let unit = kappa * spectrum.n_sites() as f64;
    let mut peaks = PeakSet::default();
    if max_peaks == 0 {
        return Ok(peaks);
    }
    let horizon = 2.0 * max_peaks as f64 * unit;
    let samples = (horizon / grid_step).floor() as usize;
    let values: Vec<f64> = (0..=samples)
        .into_par_iter()
        .map(|i| spectrum.transferred_population(i as f64 * grid_step))
        .collect();

    for i in 1..samples {
        if peaks.len() == max_peaks {
            break;
        }
        let (prev, here, next) = (values[i - 1], values[i], values[i + 1]);
        if here > PEAK_THRESHOLD && here > prev && here >= next {
            let (t, height) = golden_maximize(
                |t| spectrum.transferred_population(t),
                (i - 1) as f64 * grid_step,
                (i + 1) as f64 * grid_step,
                PEAK_TIME_TOLERANCE,
            );
            let scaled = t / unit;
            if peaks.scaled_times.last().is_some_and(|&last| scaled <= last) {
                continue;
            }
            peaks.scaled_times.push(scaled);
            peaks.heights.push(height.clamp(0.0, 1.0));
        }
    }
    Ok(peaks)
}

/// [`scaled_peaks`] for a chain given by its couplings.
pub fn chain_peaks(
    params: &ChainParameters,
    ecd: &CouplingDistribution,
    kappa: f64,
    max_peaks: usize,
    grid_step: f64,
) -> Result<PeakSet> {
    let spectrum = endpoint_spectrum(&project_hamiltonian(params, ecd)?)?;
    scaled_peaks(&spectrum, kappa, max_peaks, grid_step)
}

/// Rényi divergence of order one half, `-2 ln Σ √(p_m q_m)`; infinite for
/// disjoint supports.
pub fn renyi_half_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    check_distribution(p)?;
    check_distribution(q)?;
    if p == q {
        return Ok(0.0);
    }
    let overlap: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    if overlap == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((-2.0 * overlap.ln()).max(0.0))
}
