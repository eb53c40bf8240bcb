//! One function per subcommand. Each computes its full result first and
//! writes files only afterwards, so a failed precondition leaves no partial
//! output. The returned JSON lands in the run record on stdout.

use serde_json::{json, Value};

use sievedim::birkhoff::{
    basin_fraction_mc, nontypical_stability, sample_nontypical, time_average_return,
    time_average_sieve, SampleDomain, Sampling, TestFunction,
};
use sievedim::dynamics::{ReturnState, SieveState};
use sievedim::rng::CounterRng;
use sievedim::cantor::{enumerate_rank, interval_length, survivor_measure};
use sievedim::dimension::{
    box_count_intervals, cloud_series, count_rank_intervals, effective_dimension, fit_dimension,
    midpoint_grid, product_cloud, BoxCountSeries, SeriesEntry,
};
use sievedim::dynamics::{escape_time_mc, MapKind};
use sievedim::regularity::{certify, dimension_lower_bound, validate_certificate};
use sievedim::Scalar;

use crate::config::{ArithMode, DimSource, Domain, ExperimentConfig};
use crate::output::{cloud_rows, read_cloud, OutputWriter};
use crate::CliError;

fn input_err(e: sievedim::Error) -> CliError {
    CliError::Input(e.to_string())
}

/// Per-rank lengths and survivor measures, plus an optional interval dump.
pub fn run_cantor(cfg: &ExperimentConfig, out: &OutputWriter) -> Result<Value, CliError> {
    let mut rows = Vec::with_capacity(cfg.depth + 1);
    let mut final_survivor = String::new();
    match cfg.mode {
        ArithMode::Exact => {
            let seq = cfg.exact_sequence()?;
            for n in 0..=cfg.depth {
                let lambda = interval_length(&seq, n).map_err(input_err)?;
                let survivor = survivor_measure(&seq, n).map_err(input_err)?;
                if n == cfg.depth {
                    final_survivor = survivor.to_string();
                }
                rows.push(format!("{n},{lambda},{survivor}"));
            }
        }
        ArithMode::Float => {
            let seq = cfg.float_sequence()?;
            for n in 0..=cfg.depth {
                let lambda = interval_length(&seq, n).map_err(input_err)?;
                let survivor = survivor_measure(&seq, n).map_err(input_err)?;
                if n == cfg.depth {
                    final_survivor = survivor.to_string();
                }
                rows.push(format!("{n},{lambda},{survivor}"));
            }
        }
    }
    let table = out.csv("cantor.csv", "n,lambda_n,survivor_measure", rows)?;
    let mut outputs = vec![table.display().to_string()];

    if let Some(rank) = cfg.dump_rank {
        let mut rows = Vec::with_capacity(1usize << rank);
        match cfg.mode {
            ArithMode::Exact => {
                let seq = cfg.exact_sequence()?;
                for iv in enumerate_rank(&seq, rank).map_err(input_err)? {
                    rows.push(format!("{},{},{},{}", iv.rank, iv.address, iv.lo, iv.hi));
                }
            }
            ArithMode::Float => {
                let seq = cfg.float_sequence()?;
                for iv in enumerate_rank(&seq, rank).map_err(input_err)? {
                    rows.push(format!("{},{},{},{}", iv.rank, iv.address, iv.lo, iv.hi));
                }
            }
        }
        let dump = out.csv("intervals.csv", "rank,address,lo,hi", rows)?;
        outputs.push(dump.display().to_string());
    }
    Ok(json!({
        "rows": cfg.depth + 1,
        "survivor_at_depth": final_survivor,
        "outputs": outputs,
    }))
}

/// Certificates (or data-level failures) per gamma, with round-trip
/// validation baked in.
pub fn run_regularity(cfg: &ExperimentConfig, out: &OutputWriter) -> Result<Value, CliError> {
    let mut entries = Vec::new();
    let mut best: Option<f64> = None;
    for &gamma in &cfg.gamma {
        let outcome = match cfg.mode {
            ArithMode::Exact => {
                let seq = cfg.exact_sequence()?;
                certify(&seq, gamma, cfg.rank_max).map_err(input_err)?
            }
            ArithMode::Float => {
                let seq = cfg.float_sequence()?;
                certify(&seq, gamma, cfg.rank_max).map_err(input_err)?
            }
        };
        match outcome {
            Ok(cert) => {
                let valid = match cfg.mode {
                    ArithMode::Exact => {
                        validate_certificate(&cert, &cfg.exact_sequence()?).map_err(input_err)?
                    }
                    ArithMode::Float => {
                        validate_certificate(&cert, &cfg.float_sequence()?).map_err(input_err)?
                    }
                };
                if let Err(problems) = valid {
                    return Err(CliError::Internal(anyhow::anyhow!(
                        "certificate for gamma={gamma} failed its own replay: {problems:?}"
                    )));
                }
                let bound = dimension_lower_bound(&cert);
                best = Some(best.map_or(gamma, |b: f64| b.max(gamma)));
                entries.push(json!({
                    "gamma": gamma,
                    "outcome": "certified",
                    "certificate": serde_json::to_value(&cert).unwrap(),
                    "dimension_lower_bound": bound.gamma,
                    "cover_mass_floor": bound.cover_mass_floor,
                    "validated": true,
                }));
            }
            Err(failure) => {
                entries.push(json!({
                    "gamma": gamma,
                    "outcome": "failed",
                    "failure": serde_json::to_value(&failure).unwrap(),
                }));
            }
        }
    }
    let path = out.json(
        "regularity.json",
        json!({ "rank_max": cfg.rank_max, "results": entries, "best_certified_gamma": best }),
    )?;
    match best {
        Some(gamma) => println!("best certified dimension lower bound: {gamma}"),
        None => println!("no gamma in the grid certified"),
    }
    Ok(json!({
        "best_certified_gamma": best,
        "gammas": cfg.gamma,
        "outputs": [path.display().to_string()],
    }))
}

/// Escape-time Monte Carlo on the square or cube map: per-depth survival
/// table plus the escape-time histogram.
pub fn run_map_mc(
    cfg: &ExperimentConfig,
    out: &OutputWriter,
    map: MapKind,
) -> Result<Value, CliError> {
    let stats =
        escape_time_mc(map, cfg.p0, cfg.depth, cfg.samples, cfg.seed).map_err(input_err)?;
    let prefix = match map {
        MapKind::Sieve => "sieve",
        MapKind::Return => "return",
    };
    let mut survival_rows = Vec::with_capacity(cfg.depth);
    for n in 1..=cfg.depth {
        let survivors = stats.survivors_at(n);
        let fraction = survivors as f64 / cfg.samples as f64;
        let se = (fraction * (1.0 - fraction) / cfg.samples as f64).sqrt();
        survival_rows.push(format!("{n},{survivors},{fraction},{se}"));
    }
    let survival = out.csv(
        &format!("{prefix}_survival.csv"),
        "n,survivors,fraction,std_error",
        survival_rows,
    )?;
    let hist_rows = (1..=cfg.depth)
        .map(|t| format!("{t},{}", stats.escape_counts[t]))
        .collect::<Vec<_>>();
    let hist = out.csv(&format!("{prefix}_escape_hist.csv"), "step,count", hist_rows)?;
    Ok(json!({
        "map": prefix,
        "p0": cfg.p0,
        "depth": cfg.depth,
        "samples": cfg.samples,
        "survivors": stats.alive,
        "fraction": stats.survivor_fraction(),
        "std_error": stats.std_error(),
        "outputs": [survival.display().to_string(), hist.display().to_string()],
    }))
}

/// Basin fraction, depth-stability of the nontypical classification, and
/// the sampled nontypical cloud for the dimension subcommand.
pub fn run_birkhoff(cfg: &ExperimentConfig, out: &OutputWriter) -> Result<Value, CliError> {
    let tf = TestFunction::with_cutoff(cfg.d0).map_err(input_err)?;
    let basin = basin_fraction_mc(
        cfg.map, &tf, cfg.p0, cfg.tau, cfg.depth, cfg.samples, cfg.seed,
    )
    .map_err(input_err)?;

    let stability = if cfg.depth >= 2 {
        let n_low = if cfg.depth > 100 { 100 } else { cfg.depth / 2 };
        Some(
            nontypical_stability(
                cfg.map, &tf, cfg.alpha, cfg.p0, n_low, cfg.depth, cfg.samples, cfg.seed,
            )
            .map_err(input_err)?,
        )
    } else {
        None
    };

    if cfg.alpha >= 1.0 {
        eprintln!(
            "warning: alpha = {} >= 1 classifies nothing as nontypical (phi <= 1); the cloud will be empty",
            cfg.alpha
        );
    }
    // `grid` is the total point budget; multi-axis domains take roots.
    let (domain, sampling) = match cfg.domain {
        Domain::Level => (
            SampleDomain::SieveLevel { p0: cfg.p0 },
            Sampling::Grid { per_axis: cfg.grid },
        ),
        Domain::Square => (
            SampleDomain::SieveSquare { p_max: cfg.p_max },
            Sampling::Grid { per_axis: (cfg.grid as f64).sqrt().round().max(4.0) as usize },
        ),
        Domain::Cube => (
            SampleDomain::ReturnCube { p_max: cfg.p_max },
            Sampling::Grid { per_axis: (cfg.grid as f64).cbrt().round().max(4.0) as usize },
        ),
    };
    let cloud =
        sample_nontypical(domain, sampling, &tf, cfg.alpha, cfg.depth, cfg.seed)
            .map_err(input_err)?;
    let (header, rows) = cloud_rows(&cloud);
    let cloud_path = out.csv("nontypical.csv", &header, rows)?;

    // Partial-average traces for a few labelled orbits: the sink, the
    // always-surviving left edge, and the first seeded sample.
    let mut trace_rows = Vec::new();
    let trace_depth = cfg.depth.min(1000);
    let seeded_x: f64 = CounterRng::new(cfg.seed).unit_f64(0);
    let traces = match cfg.map {
        MapKind::Sieve => vec![
            ("sink", time_average_sieve(&tf, &SieveState { x: 0.5, p: 1.0 }, trace_depth)),
            ("left-edge", time_average_sieve(&tf, &SieveState { x: 0.0, p: cfg.p0 }, trace_depth)),
            ("sample-0", time_average_sieve(&tf, &SieveState { x: seeded_x, p: cfg.p0 }, trace_depth)),
        ],
        MapKind::Return => vec![
            ("left-edge", time_average_return(&tf, &ReturnState { x: 0.0, p: cfg.p0, h: 0.5 }, trace_depth)),
            ("sample-0", time_average_return(&tf, &ReturnState { x: seeded_x, p: cfg.p0, h: 0.5 }, trace_depth)),
        ],
    };
    for (label, trace) in &traces {
        let escape = trace.escape_step.map(|t| t.to_string()).unwrap_or_else(|| "alive".into());
        for (k, phi) in trace.partials.iter().enumerate() {
            trace_rows.push(format!("{label},{},{phi},{escape}", k + 1));
        }
    }
    let traces_path = out.csv("traces.csv", "orbit,n,phi_n,outcome", trace_rows)?;
    let summary = out.json(
        "birkhoff.json",
        json!({
            "map": match cfg.map { MapKind::Sieve => "sieve", MapKind::Return => "return" },
            "p0": cfg.p0,
            "depth": cfg.depth,
            "tau": cfg.tau,
            "alpha": cfg.alpha,
            "d0": cfg.d0,
            "samples": cfg.samples,
            "basin_fraction": basin.fraction,
            "basin_std_error": basin.std_error,
            "in_basin": basin.in_basin,
            "stability": stability.map(|s| serde_json::to_value(s).unwrap()),
            "nontypical_points": cloud.len(),
        }),
    )?;
    Ok(json!({
        "basin_fraction": basin.fraction,
        "basin_std_error": basin.std_error,
        "nontypical_points": cloud.len(),
        "outputs": [
            summary.display().to_string(),
            cloud_path.display().to_string(),
            traces_path.display().to_string(),
        ],
    }))
}

/// Box-count series and log-log fit for rank families or point clouds.
pub fn run_dimension(cfg: &ExperimentConfig, out: &OutputWriter) -> Result<Value, CliError> {
    let (series, fit, provenance) = match cfg.source {
        DimSource::Exact => {
            let series = match cfg.mode {
                ArithMode::Exact => exact_pair_series(&cfg.exact_sequence()?, cfg)?,
                ArithMode::Float => exact_pair_series(&cfg.float_sequence()?, cfg)?,
            };
            let fit = fit_dimension(&series, 0..series.len()).map_err(input_err)?;
            (series, fit, format!("exact pairs, ranks {}..={}", cfg.rank_lo, cfg.rank_hi))
        }
        DimSource::Intervals => {
            let series = match cfg.mode {
                ArithMode::Exact => ladder_series(&cfg.exact_sequence()?, cfg)?,
                ArithMode::Float => ladder_series(&cfg.float_sequence()?, cfg)?,
            };
            let fit = fit_dimension(&series, 0..series.len()).map_err(input_err)?;
            (
                series,
                fit,
                format!(
                    "rank-{} family on its lambda ladder, scales {}..={}",
                    cfg.rank_hi, cfg.rank_lo, cfg.rank_hi
                ),
            )
        }
        DimSource::Cloud => {
            let path = cfg.cloud.as_ref().expect("validated");
            let mut cloud = read_cloud(std::path::Path::new(path))?;
            if cloud.is_empty() {
                return Err(CliError::Input(format!("cloud {path} has no points")));
            }
            if cfg.product_h > 0 {
                cloud = product_cloud(&cloud, &midpoint_grid(cfg.product_h)).map_err(input_err)?;
            }
            let series =
                cloud_series(&cloud, cfg.octave_lo..cfg.octave_hi + 1).map_err(input_err)?;
            let fit = fit_dimension(&series, series.default_fit_range()).map_err(input_err)?;
            (series, fit, cloud.provenance.clone())
        }
    };
    let rows = series
        .entries
        .iter()
        .map(|e| format!("{},{},{},{}", e.eps, e.count, e.ln_inv_eps(), e.ln_count()))
        .collect::<Vec<_>>();
    let series_path =
        out.csv("dimension_series.csv", "epsilon,count,log_inv_eps,log_count", rows)?;
    let finest = series.entries.last().expect("nonempty series");
    let fit_path = out.json(
        "dimension_fit.json",
        json!({
            "provenance": provenance,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "residual_rms": fit.residual_rms,
            "range": [fit.range.0, fit.range.1],
            "effective_dimension_at_finest": effective_dimension(finest.eps, finest.count),
        }),
    )?;
    Ok(json!({
        "slope": fit.slope,
        "residual_rms": fit.residual_rms,
        "entries": series.len(),
        "outputs": [series_path.display().to_string(), fit_path.display().to_string()],
    }))
}

fn exact_pair_series<S: Scalar>(
    seq: &sievedim::cantor::DeletionSequence<S>,
    cfg: &ExperimentConfig,
) -> Result<BoxCountSeries, CliError> {
    let mut entries = Vec::new();
    for n in cfg.rank_lo..=cfg.rank_hi {
        let (lambda, count) = count_rank_intervals(seq, n).map_err(input_err)?;
        entries.push(SeriesEntry { eps: lambda.to_f64_lossy(), count });
    }
    BoxCountSeries::new(entries).map_err(input_err)
}

/// Counts the rank-`rank_hi` family at the family's own scales
/// `lambda_k`, `k = rank_lo..=rank_hi`, through the grid counter.
fn ladder_series<S: Scalar>(
    seq: &sievedim::cantor::DeletionSequence<S>,
    cfg: &ExperimentConfig,
) -> Result<BoxCountSeries, CliError> {
    if cfg.rank_hi > 22 {
        return Err(CliError::Input(format!(
            "interval source materializes 2^rank_hi intervals; rank_hi = {} is too deep",
            cfg.rank_hi
        )));
    }
    let family: Vec<_> = enumerate_rank(seq, cfg.rank_hi).map_err(input_err)?.collect();
    let mut entries = Vec::new();
    for k in cfg.rank_lo..=cfg.rank_hi {
        let eps = interval_length(seq, k).map_err(input_err)?;
        let count = box_count_intervals(&family, &eps).map_err(input_err)?;
        entries.push(SeriesEntry { eps: eps.to_f64_lossy(), count: count as u128 });
    }
    BoxCountSeries::new(entries).map_err(input_err)
}
