mod config;
mod output;
mod par;

use clap::{Parser, Subcommand};
use config::{load_file_cfg, require_seed, resolve_measure, resolve_state, MeasureOpts, StateOpts};
use genfv::dual::FnTable;
use genfv::rates::{check_consistency, check_consistency_sym, named_rates};
use genfv::spde::{heat_oracle_error, normal_cdf, spde_duality_n1, spde_duality_n2, GridField};
use genfv::stationary::{golden_obstruction, reversibility_verdict, stationary_moments, theta_necessary};
use genfv::stats::path_rng;
use output::{now, write_artifact, Artifact};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

/// Coalescents with simultaneous multiple collisions, their dual
/// measure-valued processes, and exact reversibility analysis.
#[derive(Parser, Debug)]
#[command(name = "genfv", version)]
struct Cli {
    /// TOML config file; command-line flags take precedence over its keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the artifact here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Artifact format: json (default) or csv
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// The 23 named collision rates of a measure, for 2 to 6 blocks
    Rates {
        #[command(flatten)]
        measure: MeasureOpts,
    },
    /// Verify the consistency recursion between levels b and b+1
    Consistency {
        #[command(flatten)]
        measure: MeasureOpts,
        /// Largest left-hand level checked
        #[arg(long)]
        b_max: Option<usize>,
        /// Residual tolerance in numeric mode
        #[arg(long)]
        tol: Option<f64>,
        /// Check the identities exactly as rational functions
        #[arg(long)]
        symbolic: bool,
    },
    /// Simulate coalescent paths and list their collision events
    Coalescent {
        #[command(flatten)]
        measure: MeasureOpts,
        /// Number of initial lineages
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        paths: Option<u64>,
        /// Stop a path at this time even if blocks remain
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Stationary moments m_1..m_p of the reference-type mass
    Moments {
        #[command(flatten)]
        measure: MeasureOpts,
        /// Total parent-independent mutation rate
        #[arg(long)]
        theta: Option<f64>,
        /// Reference-type mass under the mutant distribution
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        p_max: Option<usize>,
        /// Estimate the same moments by dual absorption sampling
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the function-valued dual and report <x0^M_t, Z_t>
    Dual {
        #[command(flatten)]
        measure: MeasureOpts,
        #[command(flatten)]
        state: StateOpts,
        /// Moment order (number of starting lineages)
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Forward simulation of the process on a finite type space
    Fv {
        #[command(flatten)]
        measure: MeasureOpts,
        #[command(flatten)]
        state: StateOpts,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare forward moments with the dual representation
    Duality {
        #[command(flatten)]
        measure: MeasureOpts,
        #[command(flatten)]
        state: StateOpts,
        /// Single moment order; overrides --orders
        #[arg(long)]
        n: Option<usize>,
        /// Comma-separated moment orders (default 2,3)
        #[arg(long)]
        orders: Option<String>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fail (exit 3) when any |z| exceeds this
        #[arg(long)]
        z_max: Option<f64>,
    },
    /// Exact reversibility verdict for a closed-form family
    Reversibility {
        #[command(flatten)]
        measure: MeasureOpts,
    },
    /// Grid solver for the spatial version: heat oracle or duality checks
    Spde {
        #[command(flatten)]
        measure: MeasureOpts,
        /// oracle | duality
        #[arg(long)]
        mode: Option<String>,
        /// Half-width of the grid
        #[arg(long)]
        l: Option<f64>,
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        /// Noise strata in the sampling level
        #[arg(long)]
        strata: Option<usize>,
        /// Frequency of the cosine test function
        #[arg(long)]
        omega: Option<f64>,
        /// Variance of the Gaussian initial condition
        #[arg(long)]
        s0: Option<f64>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        z_max: Option<f64>,
    },
}

/// Path-parallel equivalent of the library's moment duality check: forward
/// paths are shared across the orders, the dual is re-run per order, and the
/// per-path random streams match the sequential version.
#[allow(clippy::too_many_arguments)]
fn duality_checks(
    m: &genfv::XiMeasure,
    mutation: Option<&genfv::mutation::MutationGenerator>,
    x0: &[f64],
    orders: &[usize],
    t: f64,
    dt: f64,
    paths: u64,
    seed: u64,
) -> Result<Vec<genfv::fv::DualityCheck>, Failure> {
    let sampler = genfv::fv::jump_sampler(m)?;
    let forward = par::map_paths(
        paths,
        || (),
        |_, path| {
            let mut rng = path_rng(seed, path);
            let x = genfv::fv::simulate_fv_with(m, sampler.as_ref(), mutation, x0, t, dt, &mut rng)?;
            Ok(x[0])
        },
    )?;
    let mut checks = Vec::new();
    for (i, &n) in orders.iter().enumerate() {
        let mut fw = genfv::stats::Welford::new();
        for &v in &forward {
            fw.push(v.powi(n as i32));
        }
        let f0 = FnTable::product_indicator(x0.len(), n, 0);
        let values = par::map_paths(paths, Vec::new, |catalogs, path| {
            let mut rng = path_rng(seed, (1 + i as u64) * paths + path);
            let ds = genfv::dual::simulate_dual_with(m, mutation, &f0, t, catalogs, &mut rng)?;
            ds.function.integrate_product(x0)
        })?;
        let mut dual = genfv::stats::Welford::new();
        for v in values {
            dual.push(v);
        }
        checks.push(genfv::fv::DualityCheck {
            n,
            t,
            paths,
            forward_mean: fw.mean(),
            forward_se: fw.se(),
            dual_mean: dual.mean(),
            dual_se: dual.se(),
            z: genfv::stats::z_score(fw.mean(), fw.se(), dual.mean(), dual.se()),
        });
    }
    Ok(checks)
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            msg: msg.into(),
        }
    }
    fn numerical(msg: impl Into<String>) -> Self {
        Failure {
            code: 3,
            msg: msg.into(),
        }
    }
    fn verdict(msg: impl Into<String>) -> Self {
        Failure {
            code: 4,
            msg: msg.into(),
        }
    }
}

impl From<genfv::Error> for Failure {
    fn from(e: genfv::Error) -> Self {
        Failure::numerical(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn emit<C: Serialize, R: Serialize>(
    cli_output: Option<&PathBuf>,
    format: &str,
    command: &str,
    config: C,
    results: R,
) -> Result<(), Failure> {
    let artifact = Artifact {
        command: command.to_string(),
        timestamp: now(),
        config,
        results,
    };
    write_artifact(&artifact, format, cli_output.map(|p| p.as_path())).map_err(Failure::config)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = load_file_cfg(cli.config.as_deref()).map_err(Failure::config)?;
    let format = cli
        .format
        .clone()
        .or_else(|| file.format.clone())
        .unwrap_or_else(|| "json".into());
    let out = cli.output.as_ref();

    match &cli.command {
        Cmd::Rates { measure } => {
            let (mcfg, m) = resolve_measure(measure, &file).map_err(Failure::config)?;
            let table = named_rates(&m)?;
            let rows: Vec<_> = table
                .entries()
                .iter()
                .map(|(sig, v)| {
                    json!({
                        "name": sig.name(),
                        "signature": format!("{sig}"),
                        "rate": v,
                    })
                })
                .collect();
            emit(out, &format, "rates", json!({ "measure": mcfg }), rows)
        }
        Cmd::Consistency {
            measure,
            b_max,
            tol,
            symbolic,
        } => {
            let (mcfg, m) = resolve_measure(measure, &file).map_err(Failure::config)?;
            let b_max = b_max.or(file.b_max).unwrap_or(6);
            let tol = tol.or(file.tol).unwrap_or(1e-10);
            let config = json!({
                "measure": mcfg, "b_max": b_max, "tol": tol, "symbolic": symbolic,
            });
            let (results, ok) = if *symbolic {
                let failures = check_consistency_sym(&m, b_max)?;
                let ok = failures.is_empty();
                (
                    json!({
                        "mode": "symbolic",
                        "failures": failures.iter().map(|s| format!("{s}")).collect::<Vec<_>>(),
                    }),
                    ok,
                )
            } else {
                let report = check_consistency(&m, b_max, tol)?;
                let ok = report.failures.is_empty();
                (serde_json::to_value(&report).unwrap(), ok)
            };
            emit(out, &format, "consistency", config, results)?;
            if ok {
                Ok(())
            } else {
                Err(Failure::numerical("consistency recursion violated"))
            }
        }
        Cmd::Coalescent {
            measure,
            n,
            paths,
            t_max,
            seed,
        } => {
            let (mcfg, m) = resolve_measure(measure, &file).map_err(Failure::config)?;
            let n = n.or(file.n).unwrap_or(8);
            let paths = paths.or(file.paths).unwrap_or(1);
            let t_max = t_max.or(file.t_max);
            let seed = require_seed(*seed, &file).map_err(Failure::config)?;
            let config = json!({
                "measure": mcfg, "n": n, "paths": paths, "t_max": t_max, "seed": seed,
            });
            let per_path = par::map_paths(
                paths,
                Vec::new,
                |catalogs, path| {
                    let mut rng = path_rng(seed, path);
                    let run = genfv::coalescent::simulate_coalescent_with(
                        &m, n, t_max, catalogs, &mut rng,
                    )?;
                    let rows: Vec<_> = run
                        .events
                        .iter()
                        .map(|ev| {
                            json!({
                                "path": path,
                                "time": ev.time,
                                "blocks": ev.state.num_blocks(),
                                "signature": ev.signature.as_ref().map(|s| format!("{s}")),
                                "state": format!("{}", ev.state),
                            })
                        })
                        .collect();
                    Ok(rows)
                },
            )?;
            let rows: Vec<_> = per_path.into_iter().flatten().collect();
            emit(out, &format, "coalescent", config, rows)
        }
        Cmd::Moments {
            measure,
            theta,
            alpha,
            p_max,
            paths,
            seed,
        } => {
            let (mcfg, m) = resolve_measure(measure, &file).map_err(Failure::config)?;
            let theta = theta
                .or(file.theta)
                .ok_or_else(|| Failure::config("moments needs --theta"))?;
            let alpha = alpha.or(file.alpha).unwrap_or(0.5);
            let p_max = p_max.or(file.p_max).unwrap_or(6);
            let table = named_rates(&m)?;
            let ms = stationary_moments(&table, &theta, &alpha, p_max)?;
            let theta_nec = theta_necessary(&table).ok();
            let mc = match (paths.or(file.paths), *seed) {
                (Some(paths), seed) => {
                    let seed = require_seed(seed, &file).map_err(Failure::config)?;
                    Some((paths, seed))
                }
                _ => None,
            };
            let config = json!({
                "measure": mcfg, "theta": theta, "alpha": alpha, "p_max": p_max,
                "paths": mc.map(|c| c.0), "seed": mc.map(|c| c.1),
            });
            let mut rows = Vec::new();
            for (p, v) in ms.iter().enumerate() {
                let mut row = json!({ "p": p, "m": v });
                if let Some((paths, seed)) = mc {
                    if p >= 1 {
                        let values = par::map_paths(paths, Vec::new, |catalogs, path| {
                            let mut rng = path_rng(seed, path);
                            genfv::dual::absorption_sample(&m, theta, alpha, p, catalogs, &mut rng)
                        })?;
                        let mut w = genfv::stats::Welford::new();
                        for v in values {
                            w.push(v);
                        }
                        row["mc_mean"] = json!(w.mean());
                        row["mc_se"] = json!(w.se());
                    }
                }
                rows.push(row);
            }
            let results = json!({
                "theta_necessary": theta_nec,
                "moments": rows,
            });
            emit(out, &format, "moments", config, results)
        }
        Cmd::Dual {
            measure,
            state,
            n,
            t,
            paths,
            seed,
        } => {
            let (mcfg, m) = resolve_measure(measure, &file).map_err(Failure::config)?;
            let scfg = resolve_state(state, &file).map_err(Failure::config)?;
            let n = n.or(file.n).unwrap_or(2);
            let t = t.or(file.t).unwrap_or(1.0);
            let paths = paths.or(file.paths).unwrap_or(10_000);
            let seed = require_seed(*seed, &file).map_err(Failure::config)?;
            let mutation = scfg.mutation().map_err(Failure::config)?;
            let f0 = FnTable::product_indicator(scfg.types, n, 0);
            let values = par::map_paths(paths, Vec::new, |catalogs, path| {
                let mut rng = path_rng(seed, path);
                let ds = genfv::dual::simulate_dual_with(
                    &m, mutation.as_ref(), &f0, t, catalogs, &mut rng,
                )?;
                ds.function.integrate_product(&scfg.x0)
            })?;
            let mut w = genfv::stats::Welford::new();
            for v in values {
                w.push(v);
            }
            let config = json!({
                "measure": mcfg, "state": scfg, "n": n, "t": t, "paths": paths, "seed": seed,
            });
            emit(
                out,
                &format,
                "dual",
                config,
                json!({ "mean": w.mean(), "se": w.se() }),
            )
        }
        Cmd::Fv {
            measure,
            state,
            t,
            dt,
            paths,
            seed,
        } => {
            let (mcfg, m) = resolve_measure(measure, &file).map_err(Failure::config)?;
            let scfg = resolve_state(state, &file).map_err(Failure::config)?;
            let t = t.or(file.t).unwrap_or(1.0);
            let dt = dt.or(file.dt).unwrap_or(1e-3);
            let paths = paths.or(file.paths).unwrap_or(10_000);
            let seed = require_seed(*seed, &file).map_err(Failure::config)?;
            let mutation = scfg.mutation().map_err(Failure::config)?;
            let sampler = genfv::fv::jump_sampler(&m)?;
            let states = par::map_paths(
                paths,
                || (),
                |_, path| {
                    let mut rng = path_rng(seed, path);
                    genfv::fv::simulate_fv_with(
                        &m, sampler.as_ref(), mutation.as_ref(), &scfg.x0, t, dt, &mut rng,
                    )
                },
            )?;
            let mut per_type: Vec<genfv::stats::Welford> =
                (0..scfg.types).map(|_| genfv::stats::Welford::new()).collect();
            for x in &states {
                for (w, v) in per_type.iter_mut().zip(x) {
                    w.push(*v);
                }
            }
            let config = json!({
                "measure": mcfg, "state": scfg, "t": t, "dt": dt, "paths": paths, "seed": seed,
            });
            let rows: Vec<_> = per_type
                .iter()
                .enumerate()
                .map(|(i, w)| json!({ "type": i, "mean": w.mean(), "se": w.se() }))
                .collect();
            emit(out, &format, "fv", config, rows)
        }
        Cmd::Duality {
            measure,
            state,
            n,
            orders,
            t,
            dt,
            paths,
            seed,
            z_max,
        } => {
            let (mcfg, m) = resolve_measure(measure, &file).map_err(Failure::config)?;
            let scfg = resolve_state(state, &file).map_err(Failure::config)?;
            let orders: Vec<usize> = match (n, orders) {
                (Some(n), _) => vec![*n],
                (None, Some(s)) => s
                    .split(',')
                    .map(|v| v.trim().parse::<usize>().map_err(|e| e.to_string()))
                    .collect::<Result<_, String>>()
                    .map_err(Failure::config)?,
                (None, None) => file.orders.clone().unwrap_or_else(|| vec![2, 3]),
            };
            let t = t.or(file.t).unwrap_or(1.0);
            let dt = dt.or(file.dt).unwrap_or(1e-3);
            let paths = paths.or(file.paths).unwrap_or(10_000);
            let seed = require_seed(*seed, &file).map_err(Failure::config)?;
            let z_max = z_max.or(file.z_max);
            let mutation = scfg.mutation().map_err(Failure::config)?;
            let checks = duality_checks(&m, mutation.as_ref(), &scfg.x0, &orders, t, dt, paths, seed)?;
            let config = json!({
                "measure": mcfg, "state": scfg, "orders": orders, "t": t, "dt": dt,
                "paths": paths, "seed": seed, "z_max": z_max,
            });
            let worst = checks.iter().map(|c| c.z.abs()).fold(0.0f64, f64::max);
            emit(out, &format, "duality", config, &checks)?;
            match z_max {
                Some(zm) if worst > zm => Err(Failure::numerical(format!(
                    "duality violated: max |z| = {worst:.2} > {zm}"
                ))),
                _ => Ok(()),
            }
        }
        Cmd::Reversibility { measure } => {
            // The verdict is symbolic over the whole family, so a numeric
            // parameter is optional; supply a placeholder when absent.
            let mut measure = measure.clone();
            match measure
                .family
                .clone()
                .or_else(|| file.family.clone())
                .as_deref()
            {
                Some("beta") => measure.beta = measure.beta.or(file.beta).or(Some(1.5)),
                Some("power-law") | Some("powerlaw") => {
                    measure.gamma = measure.gamma.or(file.gamma).or(Some(0.5))
                }
                Some("poisson-dirichlet") | Some("pd") => {
                    measure.epsilon = measure.epsilon.or(file.epsilon).or(Some(1.0))
                }
                _ => {}
            }
            let (mcfg, m) = resolve_measure(&measure, &file).map_err(Failure::config)?;
            let mcfg = json!({ "family": mcfg.family, "sigma2": mcfg.sigma2 });
            let report = reversibility_verdict(&m)?;
            let reference = golden_obstruction(&report.family);
            let constant = reference
                .as_ref()
                .and_then(|g| report.obstruction_ratfun.proportionality_constant(g));
            let matched = reference.is_none() || constant.is_some();
            let config = json!({ "measure": mcfg });
            let results = json!({
                "report": report,
                "matched_reference": matched,
                "reference_constant": constant.as_ref().map(|c| c.to_string()),
            });
            emit(out, &format, "reversibility", config, results)?;
            if !matched {
                return Err(Failure::verdict(
                    "obstruction does not match the reference expression",
                ));
            }
            if report.reversible {
                return Err(Failure::verdict(format!(
                    "expected a non-reversibility verdict, got: {}",
                    report.verdict
                )));
            }
            Ok(())
        }
        Cmd::Spde {
            measure,
            mode,
            l,
            cells,
            dt,
            t,
            strata,
            omega,
            s0,
            paths,
            seed,
            z_max,
        } => {
            let mode = mode.clone().unwrap_or_else(|| "duality".into());
            let l = l.or(file.l).unwrap_or(10.0);
            let cells = cells.or(file.cells).unwrap_or(256);
            let h = 2.0 * l / cells as f64;
            // Well inside the h^2/2 stability bound; the sort/clip projection
            // after each step also leaves a dt-dependent bias, so the default
            // is deliberately conservative.
            let dt = dt.or(file.dt).unwrap_or(h * h / 8.0);
            let t = t.or(file.t).unwrap_or(0.5);
            let s0 = s0.or(file.s0).unwrap_or(1.0);
            match mode.as_str() {
                "oracle" => {
                    let err = heat_oracle_error(l, cells, s0, t, dt)?;
                    let config = json!({
                        "mode": mode, "l": l, "cells": cells, "dt": dt, "t": t, "s0": s0,
                    });
                    emit(out, &format, "spde", config, json!({ "max_error": err }))
                }
                "duality" => {
                    let (mcfg, m) = resolve_measure(measure, &file).map_err(Failure::config)?;
                    let strata = strata.or(file.strata).unwrap_or(64);
                    let omega = omega.or(file.omega).unwrap_or(1.0);
                    let paths = paths.or(file.paths).unwrap_or(1_000);
                    let seed = require_seed(*seed, &file).map_err(Failure::config)?;
                    let z_max = z_max.or(file.z_max);
                    let u0 = GridField::from_cdf(l, cells, |x| normal_cdf(x / s0.sqrt()))?;
                    let c1 =
                        spde_duality_n1(&m, &u0, omega, t, dt, strata, paths, seed)?;
                    let c2 =
                        spde_duality_n2(&m, &u0, omega, t, dt, strata, paths, seed + 1)?;
                    let config = json!({
                        "mode": mode, "measure": mcfg, "l": l, "cells": cells, "dt": dt,
                        "t": t, "s0": s0, "strata": strata, "omega": omega,
                        "paths": paths, "seed": seed, "z_max": z_max,
                    });
                    let worst = c1.z.abs().max(c2.z.abs());
                    emit(out, &format, "spde", config, json!([c1, c2]))?;
                    match z_max {
                        Some(zm) if worst > zm => Err(Failure::numerical(format!(
                            "spde duality violated: max |z| = {worst:.2} > {zm}"
                        ))),
                        _ => Ok(()),
                    }
                }
                "snapshot" => {
                    let (mcfg, m) = resolve_measure(measure, &file).map_err(Failure::config)?;
                    let strata = strata.or(file.strata).unwrap_or(64);
                    let seed = require_seed(*seed, &file).map_err(Failure::config)?;
                    let u0 = GridField::from_cdf(l, cells, |x| normal_cdf(x / s0.sqrt()))?;
                    let mut rng = path_rng(seed, 0);
                    let field =
                        genfv::spde::simulate_spde(&m, &u0, t, dt, strata, &mut rng)?;
                    let config = json!({
                        "mode": mode, "measure": mcfg, "l": l, "cells": cells, "dt": dt,
                        "t": t, "s0": s0, "strata": strata, "seed": seed,
                    });
                    let rows: Vec<_> = (0..=cells)
                        .map(|i| json!({ "x": field.x(i), "u": field.u[i] }))
                        .collect();
                    emit(out, &format, "spde", config, rows)
                }
                other => Err(Failure::config(format!(
                    "unknown spde mode `{other}` (expected oracle, duality or snapshot)"
                ))),
            }
        }
    }
}
