use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use spinweave::analysis::{chain_peaks, find_jmin_best_of, fit_exponential, jmin_csv, renyi_half_divergence, JminOutcome};
use spinweave::disorder::{disorder_grid, disorder_statistics, grid_csv, line_scan_csv, DisorderSpec, NoiseLaw};
use spinweave::ecd_file::format_float;
use spinweave::optimizer::{hypercube_sweep, OptimizerConfig, SweepPlan, SweepRecord};
use spinweave::{
    averaged_fidelity, chain_spectrum, endpoint_spectrum, inverse_participation_ratio, project_hamiltonian,
    ChainParameters, EcdFile, EnergyScale, TransferSpectrum,
};

use crate::error::{CliError, CliResult};
use crate::manifest::RunContext;
use crate::time_spec::TimeSpec;
use crate::{OptimizerArgs, SweepArgs};

type Map = BTreeMap<String, Value>;

fn read_ecd(path: &Path) -> CliResult<EcdFile> {
    EcdFile::read(path).map_err(|e| CliError::in_file(path, e))
}

fn chain_for(file: &EcdFile, delta: Option<f64>, scale: EnergyScale) -> CliResult<ChainParameters> {
    Ok(ChainParameters::with_scale(file.n_sites, delta.unwrap_or(file.anisotropy), scale)?)
}

fn base_parameters(scale: EnergyScale) -> Map {
    let mut map = Map::new();
    map.insert("scale".into(), json!(scale.name()));
    map
}

fn population_row(t: f64, p: f64) -> CliResult<String> {
    Ok(format!("{},{},{}", format_float(t), format_float(p), format_float(averaged_fidelity(p)?)))
}

pub fn evaluate_once(path: &Path, delta: Option<f64>, time: TimeSpec, scale: EnergyScale) -> CliResult<()> {
    let file = read_ecd(path)?;
    let params = chain_for(&file, delta, scale)?;
    let t = time.resolve(file.n_sites);
    let spectrum = endpoint_spectrum(&project_hamiltonian(&params, &file.ecd)?)?;
    println!("{}", population_row(t, spectrum.transferred_population(t))?);
    Ok(())
}

pub fn evaluate_grid(
    mut ctx: RunContext,
    path: &Path,
    delta: Option<f64>,
    start: TimeSpec,
    end: TimeSpec,
    step: f64,
    scale: EnergyScale,
) -> CliResult<()> {
    let file = read_ecd(path)?;
    let params = chain_for(&file, delta, scale)?;
    let (t0, t1) = (start.resolve(file.n_sites), end.resolve(file.n_sites));
    if !(step > 0.0) || !(t1 >= t0) {
        return Err(CliError::Usage(format!("empty time grid: {t0} to {t1} step {step}")));
    }
    let count = ((t1 - t0) / step + 1e-9).floor() as usize + 1;
    let spectrum = endpoint_spectrum(&project_hamiltonian(&params, &file.ecd)?)?;
    let rows: Vec<String> = (0..count)
        .into_par_iter()
        .map(|i| {
            let t = t0 + i as f64 * step;
            population_row(t, spectrum.transferred_population(t))
        })
        .collect::<CliResult<_>>()?;
    let mut csv = String::from("t,P,F\n");
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    ctx.write_artifact("evaluate.csv", &csv)?;

    let mut parameters = base_parameters(scale);
    parameters.insert("ecd".into(), json!(path.display().to_string()));
    parameters.insert("delta".into(), json!(params.anisotropy()));
    parameters.insert("t_start".into(), json!(t0));
    parameters.insert("t_end".into(), json!(t1));
    parameters.insert("t_step".into(), json!(step));
    ctx.finish("evaluate", parameters, Map::new())?;
    Ok(())
}

fn optimizer_config(args: &OptimizerArgs, seed: u64) -> OptimizerConfig {
    let defaults = OptimizerConfig::default();
    OptimizerConfig {
        population_size: args.population.unwrap_or(defaults.population_size),
        max_generations: args.max_generations.unwrap_or(defaults.max_generations),
        relocation_scale: args.relocation_scale.unwrap_or(defaults.relocation_scale),
        anneal_factor: args.anneal.unwrap_or(defaults.anneal_factor),
        stall_generations: args.stall.unwrap_or(defaults.stall_generations),
        gradient_tolerance: args.gradient_tolerance.unwrap_or(defaults.gradient_tolerance),
        refine_candidates: args.refine_candidates.unwrap_or(defaults.refine_candidates),
        rng_seed: seed,
    }
}

fn sweep_plan(args: &SweepArgs, target: Option<f64>) -> SweepPlan {
    SweepPlan {
        delta_j: args.jmax_step,
        centro_symmetric: !args.full_chain,
        target,
        ..SweepPlan::new(args.jmax_start, args.jmax_end)
    }
}

fn sweep_parameters(map: &mut Map, n: usize, delta: f64, args: &SweepArgs) {
    map.insert("n".into(), json!(n));
    map.insert("delta".into(), json!(delta));
    map.insert("jmax_start".into(), json!(args.jmax_start));
    map.insert("jmax_end".into(), json!(args.jmax_end));
    map.insert("jmax_step".into(), json!(args.jmax_step));
    map.insert("centro_symmetric".into(), json!(!args.full_chain));
}

pub fn ecd_file_name(n: usize, delta: f64, t: f64, k: usize) -> String {
    format!("ecd_N{n}_d{delta}_T{t}_k{k}.csv")
}

#[allow(clippy::too_many_arguments)]
pub fn design(
    mut ctx: RunContext,
    n: usize,
    delta: f64,
    time: TimeSpec,
    sweep: &SweepArgs,
    target: Option<f64>,
    optimizer: &OptimizerArgs,
    scale: EnergyScale,
) -> CliResult<()> {
    let params = ChainParameters::with_scale(n, delta, scale)?;
    let t = time.resolve(n);
    if let Some(target) = target {
        if !(0.0..=1.0).contains(&target) {
            return Err(CliError::Usage(format!("target must lie in [0, 1], got {target}")));
        }
    }
    let config = optimizer_config(optimizer, ctx.seed);
    let records = hypercube_sweep(&params, t, &sweep_plan(sweep, target), &config)?;

    let mut summary = Vec::new();
    for record in &records {
        let file = EcdFile {
            arrival_time: Some(t),
            j_max: Some(record.j_max),
            population: Some(record.population),
            ..EcdFile::new(record.ecd.clone(), delta)
        };
        ctx.write_artifact(&ecd_file_name(n, delta, t, record.k), &file.to_csv_string())?;
        println!("k={} j_max={} P={}", record.k, record.j_max, format_float(record.population));
        summary.push(json!({"k": record.k, "j_max": record.j_max, "P": record.population}));
    }

    let mut parameters = base_parameters(scale);
    sweep_parameters(&mut parameters, n, delta, sweep);
    parameters.insert("time".into(), json!(t));
    parameters.insert("target".into(), json!(target));
    let mut extra = Map::new();
    extra.insert("seed".into(), json!(ctx.seed));
    extra.insert("config".into(), serde_json::to_value(&config).expect("config serializes"));
    extra.insert("records".into(), Value::Array(summary));
    ctx.finish("design", parameters, extra)?;

    let best = records.iter().map(|r| r.population).fold(f64::NEG_INFINITY, f64::max);
    match target {
        Some(target) if best < target => Err(CliError::TargetUnreached(format!(
            "best P = {best} below {target} by J_max = {}",
            sweep.jmax_end
        ))),
        _ => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn disorder(
    mut ctx: RunContext,
    paths: &[std::path::PathBuf],
    delta: Option<f64>,
    time: Option<TimeSpec>,
    amplitudes: &[f64],
    realizations: Option<usize>,
    law: NoiseLaw,
    scale: EnergyScale,
) -> CliResult<()> {
    let files: Vec<EcdFile> = paths.iter().map(|p| read_ecd(p)).collect::<CliResult<_>>()?;
    let first = &files[0];
    if let Some(other) = files.iter().find(|f| f.n_sites != first.n_sites) {
        return Err(CliError::Usage(format!(
            "all chains must share N: found {} and {}",
            first.n_sites, other.n_sites
        )));
    }
    let params = chain_for(first, delta, scale)?;
    let t = match time {
        Some(spec) => spec.resolve(first.n_sites),
        None => first
            .arrival_time
            .filter(|t| t.is_finite())
            .ok_or_else(|| CliError::Usage("no --time given and the first file has no arrival time".into()))?,
    };
    if amplitudes.is_empty() {
        return Err(CliError::Usage("at least one amplitude is required".into()));
    }

    let single = files.len() == 1;
    let n_r = realizations.unwrap_or(if single { 10_000 } else { 1000 });
    let seed = ctx.seed;
    if single {
        let rows = amplitudes
            .iter()
            .map(|&a| {
                let spec = DisorderSpec {
                    noise_law: law,
                    ..DisorderSpec::new(a, n_r, seed)
                };
                Ok((a, disorder_statistics(&params, &first.ecd, t, &spec)?))
            })
            .collect::<CliResult<Vec<_>>>()?;
        ctx.write_artifact("disorder_line.csv", &line_scan_csv(&rows, seed, n_r, law))?;
    } else {
        let records: Vec<SweepRecord> = files
            .iter()
            .enumerate()
            .map(|(index, file)| {
                let h = project_hamiltonian(&params, &file.ecd)?;
                Ok(SweepRecord {
                    k: index + 1,
                    j_max: file.j_max.filter(|j| j.is_finite()).unwrap_or_else(|| file.ecd.max_coupling()),
                    ecd: file.ecd.clone(),
                    population: endpoint_spectrum(&h)?.transferred_population(t),
                })
            })
            .collect::<CliResult<_>>()?;
        let grid = disorder_grid(&params, &records, t, amplitudes, n_r, seed, law)?;
        ctx.write_artifact("disorder_grid.csv", &grid_csv(&grid, seed, n_r, law))?;
    }

    let mut parameters = base_parameters(scale);
    parameters.insert(
        "ecd".into(),
        json!(paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>()),
    );
    parameters.insert("delta".into(), json!(params.anisotropy()));
    parameters.insert("time".into(), json!(t));
    parameters.insert("amplitudes".into(), json!(amplitudes));
    parameters.insert("realizations".into(), json!(n_r));
    parameters.insert("law".into(), json!(law.name()));
    ctx.finish("disorder", parameters, Map::new())?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn jmin(
    mut ctx: RunContext,
    n: usize,
    delta: f64,
    times: &[TimeSpec],
    target: f64,
    sweep: &SweepArgs,
    restarts: usize,
    optimizer: &OptimizerArgs,
    scale: EnergyScale,
) -> CliResult<()> {
    let params = ChainParameters::with_scale(n, delta, scale)?;
    let config = optimizer_config(optimizer, ctx.seed);
    let plan = sweep_plan(sweep, None);
    let mut reached = Vec::new();
    let mut unreached = Vec::new();
    for spec in times {
        let t = spec.resolve(n);
        match find_jmin_best_of(&params, t, target, &plan, &config, restarts)? {
            JminOutcome::Reached(point) => reached.push(point),
            JminOutcome::Unreached { best } => {
                unreached.push(json!({"T": t, "best_j_max": best.j_max, "best_P": best.population}));
            }
        }
    }
    let csv = jmin_csv(&reached);
    print!("{csv}");
    ctx.write_artifact("jmin.csv", &csv)?;

    let mut parameters = base_parameters(scale);
    sweep_parameters(&mut parameters, n, delta, sweep);
    parameters.insert(
        "times".into(),
        json!(times.iter().map(|s| s.resolve(n)).collect::<Vec<_>>()),
    );
    parameters.insert("target".into(), json!(target));
    parameters.insert("restarts".into(), json!(restarts));
    let mut extra = Map::new();
    extra.insert("config".into(), serde_json::to_value(&config).expect("config serializes"));
    extra.insert("unreached".into(), Value::Array(unreached.clone()));
    ctx.finish("jmin", parameters, extra)?;
    if unreached.is_empty() {
        Ok(())
    } else {
        Err(CliError::TargetUnreached(format!(
            "{} arrival time(s) below {target} by J_max = {}",
            unreached.len(),
            sweep.jmax_end
        )))
    }
}

/// Rows of a `N,T,j_min,P` table.
fn read_jmin_table(path: &Path) -> CliResult<Vec<(usize, f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("N,") {
            continue;
        }
        let bad = |what: &str| CliError::Usage(format!("{}:{}: {what}", path.display(), index + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(bad("expected N,T,j_min[,P]"));
        }
        let n = fields[0].parse().map_err(|_| bad("invalid N"))?;
        let t: f64 = fields[1].parse().map_err(|_| bad("invalid T"))?;
        let j: f64 = fields[2].parse().map_err(|_| bad("invalid j_min"))?;
        if !t.is_finite() || !j.is_finite() {
            return Err(bad("non-finite value"));
        }
        rows.push((n, t, j));
    }
    Ok(rows)
}

pub fn fit(mut ctx: RunContext, input: &Path, n: Option<usize>) -> CliResult<()> {
    let rows = read_jmin_table(input)?;
    let n_sites = match n {
        Some(n) => n,
        None => {
            let first = rows.first().map(|r| r.0).ok_or_else(|| CliError::Usage("empty table".into()))?;
            if rows.iter().any(|r| r.0 != first) {
                return Err(CliError::Usage("rows mix chain lengths; pass --n".into()));
            }
            first
        }
    };
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.1, r.2)).collect();
    let result = fit_exponential(&points, n_sites)?;
    let mut text = serde_json::to_string_pretty(&result).expect("fit serializes");
    text.push('\n');
    print!("{text}");
    ctx.write_artifact("fit.json", &text)?;

    let mut parameters = Map::new();
    parameters.insert("input".into(), json!(input.display().to_string()));
    parameters.insert("n".into(), json!(n_sites));
    ctx.finish("fit", parameters, Map::new())?;
    Ok(())
}

pub fn peaks(
    mut ctx: RunContext,
    path: &Path,
    delta: Option<f64>,
    kappa: Option<f64>,
    max_peaks: usize,
    grid_step: f64,
    scale: EnergyScale,
) -> CliResult<()> {
    let file = read_ecd(path)?;
    let params = chain_for(&file, delta, scale)?;
    let kappa = match kappa {
        Some(k) => k,
        None => file
            .arrival_time
            .filter(|t| t.is_finite())
            .map(|t| t / file.n_sites as f64)
            .ok_or_else(|| CliError::Usage("no --kappa given and the file has no arrival time".into()))?,
    };
    let found = chain_peaks(&params, &file.ecd, kappa, max_peaks, grid_step)?;
    let csv = found.to_csv();
    print!("{csv}");
    ctx.write_artifact("peaks.csv", &csv)?;

    let mut parameters = base_parameters(scale);
    parameters.insert("ecd".into(), json!(path.display().to_string()));
    parameters.insert("delta".into(), json!(params.anisotropy()));
    parameters.insert("kappa".into(), json!(kappa));
    parameters.insert("max_peaks".into(), json!(max_peaks));
    parameters.insert("grid_step".into(), json!(grid_step));
    ctx.finish("peaks", parameters, Map::new())?;
    Ok(())
}

pub fn divergence(
    mut ctx: RunContext,
    first_path: &Path,
    second_path: &Path,
    delta: Option<f64>,
    time: TimeSpec,
    scale: EnergyScale,
) -> CliResult<()> {
    let first = read_ecd(first_path)?;
    let second = read_ecd(second_path)?;
    if first.n_sites != second.n_sites {
        return Err(CliError::Usage(format!(
            "chains differ in length: {} and {}",
            first.n_sites, second.n_sites
        )));
    }
    let n = first.n_sites;
    let t = time.resolve(n);
    let matrix = |file: &EcdFile| -> CliResult<Vec<Vec<f64>>> {
        let params = chain_for(file, delta, scale)?;
        Ok(chain_spectrum(&params, &file.ecd)?.site_population_matrix(t))
    };
    let (a, b) = (matrix(&first)?, matrix(&second)?);

    let mut csv = String::from("from_site,divergence,ipr_first,ipr_second\n");
    for (m, (row_a, row_b)) in a.iter().zip(&b).enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            m + 1,
            format_float(renyi_half_divergence(row_a, row_b)?),
            format_float(inverse_participation_ratio(row_a)?),
            format_float(inverse_participation_ratio(row_b)?)
        );
    }
    let flatten = |rows: &[Vec<f64>]| -> Vec<f64> { rows.iter().flatten().map(|p| p / n as f64).collect() };
    let (all_a, all_b) = (flatten(&a), flatten(&b));
    let _ = writeln!(
        csv,
        "all,{},{},{}",
        format_float(renyi_half_divergence(&all_a, &all_b)?),
        format_float(inverse_participation_ratio(&all_a)?),
        format_float(inverse_participation_ratio(&all_b)?)
    );
    print!("{csv}");
    ctx.write_artifact("divergence.csv", &csv)?;

    let mut parameters = base_parameters(scale);
    parameters.insert(
        "ecd".into(),
        json!([first_path.display().to_string(), second_path.display().to_string()]),
    );
    parameters.insert("delta".into(), json!(delta));
    parameters.insert("time".into(), json!(t));
    ctx.finish("divergence", parameters, Map::new())?;
    Ok(())
}
