//! Box-constrained global search for coupling distributions.
//!
//! [`pivot_optimize`] keeps a population of probe points; every generation
//! the worse half is relocated near randomly chosen survivors ("pivots")
//! with a shrinking displacement radius. [`gradient_refine`] polishes the
//! result by bound-constrained quasi-Newton ascent, and [`hypercube_sweep`] runs both
//! over a growing succession of hypercubes `[0, J_max^(k)]^M`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{free_dimension, project_hamiltonian, ChainParameters, CouplingDistribution};
use crate::error::{Error, Result};
use crate::rng;
use crate::spectral::{endpoint_spectrum, TransferSpectrum};

const IMPROVEMENT_THRESHOLD: f64 = 1e-8;
const MAX_REFINE_ITERATIONS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypercube {
    pub side_length: f64,
    pub dimension: usize,
}

impl Hypercube {
    pub fn new(side_length: f64, dimension: usize) -> Result<Self> {
        if !(side_length > 0.0) || !side_length.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "hypercube side must be positive, got {side_length}"
            )));
        }
        if dimension == 0 {
            return Err(Error::InvalidConfig("hypercube dimension must be positive".into()));
        }
        Ok(Self {
            side_length,
            dimension,
        })
    }

    /// Cube over the free couplings of a chain.
    pub fn for_chain(side_length: f64, n_sites: usize, centro_symmetric: bool) -> Result<Self> {
        Self::new(side_length, free_dimension(n_sites, centro_symmetric))
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dimension
            && point.iter().all(|&x| (0.0..=self.side_length).contains(&x))
    }

    /// Reflect a coordinate back into `[0, side]`.
    pub fn reflect(&self, x: f64) -> f64 {
        let side = self.side_length;
        let period = 2.0 * side;
        let y = x.rem_euclid(period);
        let y = if y > side { period - y } else { y };
        y.clamp(0.0, side)
    }

    pub fn clip(&self, x: f64) -> f64 {
        x.clamp(0.0, self.side_length)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Lower bound on the probe population; the effective size is
    /// `max(population_size, 2M)`.
    pub population_size: usize,
    pub max_generations: usize,
    /// Initial relocation radius as a fraction of the cube side.
    pub relocation_scale: f64,
    /// Per-generation shrink factor of the relocation radius.
    pub anneal_factor: f64,
    pub stall_generations: usize,
    pub gradient_tolerance: f64,
    /// How many distinct top probes of the final population get polished.
    pub refine_candidates: usize,
    pub rng_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            max_generations: 5000,
            relocation_scale: 0.3,
            anneal_factor: 0.995,
            stall_generations: 200,
            gradient_tolerance: 1e-10,
            refine_candidates: 4,
            rng_seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population_size < 2 {
            return fail(format!("population_size must be at least 2, got {}", self.population_size));
        }
        if self.max_generations == 0 || self.stall_generations == 0 || self.refine_candidates == 0 {
            return fail("generation counts must be positive".into());
        }
        if !(self.relocation_scale > 0.0 && self.relocation_scale <= 1.0) {
            return fail(format!("relocation_scale must lie in (0, 1], got {}", self.relocation_scale));
        }
        if !(self.anneal_factor > 0.0 && self.anneal_factor < 1.0) {
            return fail(format!("anneal_factor must lie in (0, 1), got {}", self.anneal_factor));
        }
        if !(self.gradient_tolerance >= 0.0) {
            return fail(format!("gradient_tolerance must be nonnegative, got {}", self.gradient_tolerance));
        }
        Ok(())
    }

    pub fn effective_population(&self, dimension: usize) -> usize {
        self.population_size.max(2 * dimension)
    }
}

/// Best point found and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub generations: usize,
    /// Final probe population, best first.
    pub population: Vec<(Vec<f64>, f64)>,
}

fn random_point<R: Rng>(rng: &mut R, cube: &Hypercube) -> Vec<f64> {
    (0..cube.dimension)
        .map(|_| rng.random::<f64>() * cube.side_length)
        .collect()
}

/// Uniform displacement inside the `dimension`-ball of the given radius.
fn ball_displacement<R: Rng>(rng: &mut R, dimension: usize, radius: f64) -> Vec<f64> {
    let mut dir: Vec<f64> = (0..dimension).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; dimension];
    }
    let r = radius * rng.random::<f64>().powf(1.0 / dimension as f64);
    for x in &mut dir {
        *x *= r / norm;
    }
    dir
}

fn sanitize(value: f64) -> f64 {
    if value.is_nan() {
        f64::NEG_INFINITY
    } else {
        value
    }
}

/// Maximize `cost` over the cube with the pivot method.
///
/// The warm start, when given, is the first probe evaluated, so the result
/// is never worse than it.
pub fn pivot_optimize<F>(
    cost: &F,
    cube: &Hypercube,
    config: &OptimizerConfig,
    warm_start: Option<&[f64]>,
) -> Result<Optimum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if let Some(start) = warm_start {
        if !cube.contains(start) {
            return Err(Error::WarmStartOutside {
                side: cube.side_length,
                dimension: cube.dimension,
            });
        }
    }
    let size = config.effective_population(cube.dimension);
    let seed = config.rng_seed;

    let mut probes: Vec<Vec<f64>> = (0..size)
        .map(|i| match (i, warm_start) {
            (0, Some(start)) => start.to_vec(),
            _ => random_point(&mut rng::stream(seed, 0, i as u64), cube),
        })
        .collect();
    let mut values: Vec<f64> = probes.par_iter().map(|p| sanitize(cost(p))).collect();

    let mut best_index = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best_index] {
            best_index = i;
        }
    }
    let mut best = Optimum {
        point: probes[best_index].clone(),
        value: values[best_index],
        generations: 0,
        population: Vec::new(),
    };

    let survivors = size.div_ceil(2);
    let mut radius = config.relocation_scale * cube.side_length;
    let mut stall = 0;
    for generation in 1..=config.max_generations {
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let pivots: Vec<Vec<f64>> = order[..survivors].iter().map(|&i| probes[i].clone()).collect();

        let relocated: Vec<(usize, Vec<f64>, f64)> = order[survivors..]
            .par_iter()
            .enumerate()
            .map(|(slot, &target)| {
                let mut stream = rng::stream(seed, generation as u64, slot as u64);
                let pivot = &pivots[stream.random_range(0..pivots.len())];
                let step = ball_displacement(&mut stream, cube.dimension, radius);
                let point: Vec<f64> = pivot
                    .iter()
                    .zip(&step)
                    .map(|(&x, &dx)| cube.reflect(x + dx))
                    .collect();
                let value = sanitize(cost(&point));
                (target, point, value)
            })
            .collect();

        let previous = best.value;
        for (target, point, value) in relocated {
            if value > best.value {
                best.value = value;
                best.point.clone_from(&point);
            }
            probes[target] = point;
            values[target] = value;
        }
        best.generations = generation;

        if best.value - previous >= IMPROVEMENT_THRESHOLD {
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.stall_generations {
                break;
            }
        }
        radius *= config.anneal_factor;
    }
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    best.population = order
        .into_iter()
        .map(|i| (std::mem::take(&mut probes[i]), values[i]))
        .collect();
    Ok(best)
}

/// The best point followed by the next-best distinct probes of the final
/// population, up to `count` points in total.
pub fn refine_candidates(found: &Optimum, cube: &Hypercube, count: usize) -> Vec<Vec<f64>> {
    let min_separation = 1e-6 * cube.side_length;
    let mut picked = vec![found.point.clone()];
    for (point, _) in &found.population {
        if picked.len() >= count {
            break;
        }
        let distinct = picked.iter().all(|p| {
            p.iter().zip(point).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() > min_separation
        });
        if distinct {
            picked.push(point.clone());
        }
    }
    picked
}

fn gradient<F>(cost: &F, point: &[f64], cube: &Hypercube, h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    (0..point.len())
        .into_par_iter()
        .map(|i| {
            let mut probe = point.to_vec();
            let hi = cube.clip(point[i] + h);
            let lo = cube.clip(point[i] - h);
            if hi == lo {
                return 0.0;
            }
            probe[i] = hi;
            let up = cost(&probe);
            probe[i] = lo;
            let down = cost(&probe);
            let g = (up - down) / (hi - lo);
            if g.is_finite() {
                g
            } else {
                0.0
            }
        })
        .collect()
}

fn project_gradient(g: &mut [f64], x: &[f64], cube: &Hypercube) {
    for (gi, &xi) in g.iter_mut().zip(x) {
        if (xi <= 0.0 && *gi < 0.0) || (xi >= cube.side_length && *gi > 0.0) {
            *gi = 0.0;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bound-constrained quasi-Newton ascent with central finite differences.
///
/// Coordinates pinned at a face with the gradient pointing outward are held
/// fixed; the rest follow a BFGS direction with a backtracking line search
/// on the clipped path. Steps are only accepted when they strictly increase
/// the cost, so the returned value is never below the starting one.
pub fn gradient_refine<F>(cost: &F, point: &[f64], cube: &Hypercube, tolerance: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = point.len();
    let scale = cube.side_length.max(1.0);
    let h = 1e-6 * scale;
    let mut x: Vec<f64> = point.iter().map(|&v| cube.clip(v)).collect();
    let mut value = sanitize(cost(&x));
    if x.as_slice() != point {
        let original = sanitize(cost(point));
        if original >= value {
            x = point.to_vec();
            value = original;
        }
    }

    let identity = |n: usize| -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        m
    };
    // Inverse Hessian approximation of -cost, row-major.
    let mut inv_hessian = identity(dim);
    let mut g = gradient(cost, &x, cube, h);
    project_gradient(&mut g, &x, cube);

    for _ in 0..MAX_REFINE_ITERATIONS {
        let norm = dot(&g, &g).sqrt();
        if norm <= tolerance || norm == 0.0 {
            break;
        }
        let free: Vec<bool> = g.iter().map(|&gi| gi != 0.0).collect();
        let mut direction: Vec<f64> = (0..dim)
            .map(|i| {
                if !free[i] {
                    return 0.0;
                }
                (0..dim)
                    .filter(|&j| free[j])
                    .map(|j| inv_hessian[i * dim + j] * g[j])
                    .sum()
            })
            .collect();
        if !(dot(&direction, &g) > 0.0) {
            inv_hessian = identity(dim);
            direction.clone_from(&g);
        }
        // Cap the first trial step at the cube side.
        let step_norm = dot(&direction, &direction).sqrt();
        let mut alpha = if step_norm > cube.side_length { cube.side_length / step_norm } else { 1.0 };

        let mut accepted = None;
        while alpha * step_norm > 1e-15 * scale {
            let trial: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(&xi, &di)| cube.clip(xi + alpha * di))
                .collect();
            let trial_value = sanitize(cost(&trial));
            if trial_value > value {
                accepted = Some((trial, trial_value));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            if inv_hessian == identity(dim) {
                break;
            }
            inv_hessian = identity(dim);
            continue;
        };

        let mut next_g = gradient(cost, &next, cube, h);
        project_gradient(&mut next_g, &next, cube);
        let s: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        // Gradient change of the minimized function -cost.
        let y: Vec<f64> = g.iter().zip(&next_g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..dim)
                .map(|i| (0..dim).map(|j| inv_hessian[i * dim + j] * y[j]).sum())
                .collect();
            let yhy = dot(&y, &hy);
            for i in 0..dim {
                for j in 0..dim {
                    inv_hessian[i * dim + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        x = next;
        value = next_value;
        g = next_g;
    }
    (x, value)
}

/// Cost `P(T)` as a function of the free couplings.
#[derive(Debug, Clone, Copy)]
pub struct ArrivalCost {
    pub params: ChainParameters,
    pub arrival_time: f64,
    pub centro_symmetric: bool,
}

impl ArrivalCost {
    pub fn evaluate(&self, free: &[f64]) -> f64 {
        let Ok(ecd) = CouplingDistribution::from_free(free, self.params.n_sites(), self.centro_symmetric)
        else {
            return 0.0;
        };
        project_hamiltonian(&self.params, &ecd)
            .and_then(|h| endpoint_spectrum(&h))
            .map(|s| s.transferred_population(self.arrival_time))
            .unwrap_or(0.0)
    }
}

/// One hypercube of the succession.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub k: usize,
    pub j_max: f64,
    pub ecd: CouplingDistribution,
    pub population: f64,
}

/// Range and stepping of a hypercube succession.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub j_start: f64,
    pub j_end: f64,
    pub delta_j: f64,
    pub centro_symmetric: bool,
    /// Stop after the first record reaching this population.
    pub target: Option<f64>,
}

impl SweepPlan {
    pub fn new(j_start: f64, j_end: f64) -> Self {
        Self {
            j_start,
            j_end,
            delta_j: 0.5,
            centro_symmetric: true,
            target: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j_start > 0.0 && self.j_start <= self.j_end && self.j_end.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < j_start <= j_end, got {} and {}",
                self.j_start, self.j_end
            )));
        }
        if !(self.delta_j > 0.0) {
            return Err(Error::InvalidConfig(format!("delta_j must be positive, got {}", self.delta_j)));
        }
        Ok(())
    }

    /// Side lengths `j_start + (k-1) δJ` up to `j_end`.
    pub fn sides(&self) -> Vec<f64> {
        let count = ((self.j_end - self.j_start) / self.delta_j + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| self.j_start + k as f64 * self.delta_j)
            .collect()
    }
}

/// Optimize `P(arrival_time)` over the succession of hypercubes in `plan`.
///
/// The first cube starts from all couplings equal to one (clipped to the
/// cube); each later cube starts from the previous optimum.
pub fn hypercube_sweep(
    params: &ChainParameters,
    arrival_time: f64,
    plan: &SweepPlan,
    config: &OptimizerConfig,
) -> Result<Vec<SweepRecord>> {
    plan.validate()?;
    config.validate()?;
    Error::check_finite("arrival time", arrival_time)?;
    let cost_fn = ArrivalCost {
        params: *params,
        arrival_time,
        centro_symmetric: plan.centro_symmetric,
    };
    let cost = |x: &[f64]| cost_fn.evaluate(x);
    let dimension = free_dimension(params.n_sites(), plan.centro_symmetric);

    let mut warm = vec![1.0; dimension];
    let mut records = Vec::new();
    for (index, side) in plan.sides().into_iter().enumerate() {
        let k = index + 1;
        let cube = Hypercube::new(side, dimension)?;
        for x in &mut warm {
            *x = cube.clip(*x);
        }
        let cube_config = OptimizerConfig {
            rng_seed: rng::child_seed(config.rng_seed, k as u64),
            ..config.clone()
        };
        let found = pivot_optimize(&cost, &cube, &cube_config, Some(&warm))?;
        let (point, population) = refine_candidates(&found, &cube, config.refine_candidates)
            .iter()
            .map(|start| gradient_refine(&cost, start, &cube, config.gradient_tolerance))
            .fold((found.point.clone(), found.value), |best, next| {
                if next.1 > best.1 {
                    next
                } else {
                    best
                }
            });
        let ecd = CouplingDistribution::from_free(&point, params.n_sites(), plan.centro_symmetric)?;
        records.push(SweepRecord {
            k,
            j_max: side,
            ecd,
            population,
        });
        warm = point;
        if plan.target.is_some_and(|target| population >= target) {
            break;
        }
    }
    Ok(records)
}
