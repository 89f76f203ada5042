use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{quantile, rate_fit, CellSummary, Diagnostics, ErrorRow, HitRecord, Metadata, SeriesSummary};
use super::{ConvergenceReport, ExperimentConfig, HarnessError, Prepared};
use crate::dynamics::{simulate_ensemble_on, PathEnsemble};
use crate::estimation::{hausdorff_error_1d, hull_estimate, pointwise_error};
use crate::oracle::{hit_frequency, step1_bound_check};

/// Seed of replication `r` at copy count `n`: the first word of the ChaCha
/// stream `n` of `master`, taken at block offset `r`.
pub fn replication_seed(master: u64, n: usize, r: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(n as u64);
    rng.set_word_pos(16 * r as u128);
    rng.next_u64()
}

/// Runs every `(N, replication)` cell, evaluates the errors at each requested
/// time index and aggregates them. Deterministic given the config, apart from
/// the timing fields of the metadata.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ConvergenceReport, HarnessError> {
    let started = Instant::now();
    let started_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let prepared = config.prepare()?;
    let cells: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.replications).map(move |r| (n, r)))
        .collect();
    let per_cell: Vec<Vec<ErrorRow>> = cells
        .par_iter()
        .map(|&(n, r)| evaluate_cell(config, &prepared, n, r))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<ErrorRow> = per_cell.into_iter().flatten().collect();
    rows.sort_by_key(|row| (row.n, row.replication, row.j, row.probe_index));

    let series = summarize(config, &prepared, &rows);
    let diagnostics = diagnostics(config, &prepared)?;
    Ok(ConvergenceReport {
        config: config.clone(),
        rows,
        series,
        diagnostics,
        metadata: Metadata {
            master_seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_ms,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

fn simulate(prepared: &Prepared, n: usize, seed: u64, keep_h: bool) -> Result<PathEnsemble, crate::dynamics::DynamicsError> {
    simulate_ensemble_on(&prepared.model, &prepared.bodies, &prepared.grid, n, seed, keep_h)
}

fn evaluate_cell(config: &ExperimentConfig, prepared: &Prepared, n: usize, r: usize) -> Result<Vec<ErrorRow>, HarnessError> {
    let seed = replication_seed(config.seed, n, r);
    let at = |j: usize| move |e: String| HarnessError::Run {
        n,
        replication: r,
        j,
        message: e,
    };
    let ensemble = simulate(prepared, n, seed, false).map_err(|e| at(0)(e.to_string()))?;
    let mut rows = Vec::new();
    for (slot, &j) in config.time_indices.iter().enumerate() {
        let estimate = hull_estimate(&ensemble, j).map_err(|e| at(j)(e.to_string()))?;
        if config.dim() == 1 {
            let error = hausdorff_error_1d(&estimate, &prepared.bodies[j]).map_err(|e| at(j)(e.to_string()))?;
            rows.push(ErrorRow {
                n,
                replication: r,
                j,
                probe_index: -1,
                error,
                scaled_error: Some(n as f64 * error),
                seed,
            });
        } else {
            for (k, probe) in prepared.probes[slot].iter().enumerate() {
                let error = pointwise_error(&estimate, probe, config.hull_tol).map_err(|e| at(j)(e.to_string()))?;
                rows.push(ErrorRow {
                    n,
                    replication: r,
                    j,
                    probe_index: k as i64,
                    error,
                    scaled_error: None,
                    seed,
                });
            }
        }
    }
    Ok(rows)
}

fn summarize(config: &ExperimentConfig, prepared: &Prepared, rows: &[ErrorRow]) -> Vec<SeriesSummary> {
    let mut keys: Vec<(usize, usize, i64)> = Vec::new();
    for (slot, &j) in config.time_indices.iter().enumerate() {
        if config.dim() == 1 {
            keys.push((slot, j, -1));
        } else {
            keys.extend((0..prepared.probes[slot].len()).map(|k| (slot, j, k as i64)));
        }
    }
    keys.into_iter()
        .map(|(slot, j, probe_index)| {
            let cells: Vec<CellSummary> = config
                .n_grid
                .iter()
                .map(|&n| {
                    let mut errors: Vec<f64> = rows
                        .iter()
                        .filter(|row| row.n == n && row.j == j && row.probe_index == probe_index)
                        .map(|row| row.error)
                        .collect();
                    errors.sort_by(f64::total_cmp);
                    let median = quantile(&errors, 0.5);
                    CellSummary {
                        n,
                        q10: quantile(&errors, 0.1),
                        median,
                        q90: quantile(&errors, 0.9),
                        scaled_median: (probe_index < 0).then(|| {
                            let mut scaled: Vec<f64> = errors.iter().map(|e| e * n as f64).collect();
                            scaled.sort_by(f64::total_cmp);
                            quantile(&scaled, 0.5)
                        }),
                    }
                })
                .collect();
            let medians: Vec<f64> = cells.iter().map(|c| c.median).collect();
            let (fit, fit_error) = match rate_fit(&config.n_grid, &medians) {
                Ok(fit) => (Some(fit), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SeriesSummary {
                j,
                probe_index,
                probe: (probe_index >= 0).then(|| prepared.probes[slot][probe_index as usize].as_slice().to_vec()),
                cells,
                fit,
                fit_error,
            }
        })
        .collect()
}

fn diagnostics(config: &ExperimentConfig, prepared: &Prepared) -> Result<Diagnostics, HarnessError> {
    if !config.keep_h {
        return Ok(Diagnostics::default());
    }
    let n = config.diagnostic_copies;
    let seed = replication_seed(config.seed, n, 0);
    let fail = |j: usize, e: String| HarnessError::Run {
        n,
        replication: 0,
        j,
        message: e,
    };
    let ensemble = simulate(prepared, n, seed, true).map_err(|e| fail(0, e.to_string()))?;
    let mut hits = Vec::new();
    for (slot, &j) in config.time_indices.iter().enumerate() {
        let probes = if config.dim() == 1 {
            vec![prepared.bodies[j].center()]
        } else {
            prepared.probes[slot].clone()
        };
        for (k, probe) in probes.iter().enumerate() {
            let report = hit_frequency(&ensemble, &prepared.bodies[j], j, probe, config.hit_radius)
                .map_err(|e| fail(j, e.to_string()))?;
            hits.push(HitRecord {
                j,
                probe_index: k,
                probe: probe.as_slice().to_vec(),
                radius: config.hit_radius,
                report,
            });
        }
    }
    let step1 = if config.step1_check {
        let mut probes: Vec<_> = prepared.probes.iter().flatten().cloned().collect();
        if probes.is_empty() {
            probes.push(prepared.bodies.last().expect("grid has nodes").center());
        }
        let probes: Vec<_> = probes
            .into_iter()
            .filter(|p| prepared.bodies.iter().skip(1).all(|b| b.is_member(p, crate::geometry::GEOMETRIC_TOL)))
            .collect();
        Some(step1_bound_check(&prepared.model, &ensemble, &prepared.mf, &probes, 1e-10).map_err(|e| fail(0, e.to_string()))?)
    } else {
        None
    };
    Ok(Diagnostics { step1, hits })
}
