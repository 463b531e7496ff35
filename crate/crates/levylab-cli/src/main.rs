//! levylab command line: exponent tables, Gaussian-field probes, path
//! statistics and the named verification suites.
//!
//! Seeds resolve as --seed, else LEVYLAB_SEED, else 12345. Outputs are CSV
//! plus structured-text summaries; reruns with the same config and seed are
//! byte-identical.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use levylab::config::resolve_model;
use levylab::exponent::ExponentTable;
use levylab::gaussian::{self, GaussianField};
use levylab::pathlab::{self, StepKind};
use levylab::report::{fmt_f64, svg_lines};
use levylab::suites::{self, SuiteOpts};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "levylab", version, about = "numerical laboratory for symmetric Levy processes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate psi/pi over lambda and sigma0²/sigma-hat²/phi/H over x as CSV.
    Expfn {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// decades each side of 1 for both grids
        #[arg(long, default_value_t = 4)]
        grid_decades: u32,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        plot: bool,
    },
    /// Gaussian-field probes: maxloc | upper | lower | cm.
    Gauss {
        #[arg(long)]
        field_model: String,
        /// half_width:sites_per_side
        #[arg(long, default_value = "1.0:256")]
        grid: String,
        #[arg(long, default_value_t = 10_000)]
        paths: u64,
        #[arg(long)]
        probe: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Path-simulation statistics: rayknight | upper | lower | favorite | polarity.
    Path {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// jump cutoff; omit for exact stable increments
        #[arg(long)]
        eps_jump: Option<f64>,
        #[arg(long, default_value_t = 2.5e-4)]
        dt: f64,
        /// occupation bin width
        #[arg(long, default_value_t = 0.03125)]
        bins: f64,
        #[arg(long, default_value_t = 2000)]
        paths: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        stat: String,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run a named verification suite (or `all`).
    Run {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value = "stable15")]
        model: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// run suites in parallel
        #[arg(long, default_value_t = 1)]
        jobs: u64,
        /// scale ensemble sizes (1.0 = acceptance-grade)
        #[arg(long, default_value_t = 1.0)]
        paths_factor: f64,
        /// admissible-regime threshold for lemma-3.4
        #[arg(long, default_value_t = 1e-3)]
        regime_threshold: f64,
        /// also emit SVG line charts next to the CSVs
        #[arg(long)]
        plot: bool,
    },
    /// Print the suite catalog.
    ListSuites,
}

fn seed_or_env(seed: Option<u64>) -> u64 {
    seed.or_else(|| {
        std::env::var("LEVYLAB_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(12345)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join(name);
    std::fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
    eprintln!("wrote {}", p.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Expfn {
            model,
            tol,
            grid_decades,
            out_dir,
            plot,
        } => expfn(&model, tol, grid_decades, &out_dir, plot),
        Cmd::Gauss {
            field_model,
            grid,
            paths,
            probe,
            seed,
            out_dir,
        } => gauss(&field_model, &grid, paths, &probe, seed_or_env(seed), &out_dir),
        Cmd::Path {
            model,
            horizon,
            eps_jump,
            dt,
            bins,
            paths,
            seed,
            stat,
            out_dir,
        } => path_stats(
            &model,
            horizon,
            eps_jump,
            dt,
            bins,
            paths,
            seed_or_env(seed),
            &stat,
            &out_dir,
        ),
        Cmd::Run {
            suite,
            model,
            seed,
            out_dir,
            jobs,
            paths_factor,
            regime_threshold,
            plot,
        } => run_suites(
            &suite,
            &model,
            seed_or_env(seed),
            &out_dir,
            jobs,
            paths_factor,
            regime_threshold,
            plot,
        ),
        Cmd::ListSuites => {
            for s in suites::list_suites() {
                println!("{:<16} {}", s.id, s.description);
            }
            Ok(())
        }
    }
}

fn expfn(model_arg: &str, tol: f64, decades: u32, out_dir: &Path, plot: bool) -> Result<()> {
    let model = resolve_model(model_arg)?;
    let d = decades as f64;
    let table = ExponentTable::build(&model, 10f64.powf(-d), 10f64.powf(d), 16, tol)?;
    let mut csv = String::from("lambda,psi,pi\n");
    for i in 0..table.lambda.len() {
        writeln!(
            csv,
            "{},{},{}",
            fmt_f64(table.lambda[i]),
            fmt_f64(table.psi[i]),
            fmt_f64(table.pi[i])
        )?;
    }
    write_file(out_dir, "expfn_lambda.csv", &csv)?;
    let vario = table.build_variogram(10f64.powf(-d), 10f64.powf(d), 16)?;
    let mut csv = String::from("x,sigma0_sq,sigma0_hat_sq,phi,H\n");
    for i in 0..vario.x.len() {
        writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(vario.x[i]),
            fmt_f64(vario.sigma0_sq[i]),
            fmt_f64(vario.sigma0_hat_sq[i]),
            fmt_f64(vario.phi[i]),
            fmt_f64(vario.h[i])
        )?;
    }
    write_file(out_dir, "expfn_x.csv", &csv)?;
    if plot {
        let psi_series = vec![
            (
                "psi".to_string(),
                table.lambda.iter().zip(&table.psi).map(|(&a, &b)| (a, b)).collect(),
            ),
            (
                "pi".to_string(),
                table.lambda.iter().zip(&table.pi).map(|(&a, &b)| (a, b)).collect(),
            ),
        ];
        write_file(out_dir, "expfn_lambda.svg", &svg_lines("psi and pi", &psi_series, true, true))?;
        let x_series = vec![
            (
                "sigma0_sq".to_string(),
                vario.x.iter().zip(&vario.sigma0_sq).map(|(&a, &b)| (a, b)).collect(),
            ),
            (
                "phi".to_string(),
                vario.x.iter().zip(&vario.phi).map(|(&a, &b)| (a, b)).collect(),
            ),
            (
                "H".to_string(),
                vario.x.iter().zip(&vario.h).map(|(&a, &b)| (a, b)).collect(),
            ),
        ];
        write_file(out_dir, "expfn_x.svg", &svg_lines("variogram family", &x_series, true, true))?;
    }
    Ok(())
}

fn parse_grid(grid: &str) -> Result<(f64, usize)> {
    let (w, n) = grid
        .split_once(':')
        .context("grid must be half_width:sites_per_side")?;
    Ok((w.parse()?, n.parse()?))
}

fn gauss(
    model_arg: &str,
    grid: &str,
    paths: u64,
    probe: &str,
    seed: u64,
    out_dir: &Path,
) -> Result<()> {
    let model = resolve_model(model_arg)?;
    let (half_width, per_side) = parse_grid(grid)?;
    let table = ExponentTable::build(&model, 1e-6, 1e6, 16, 1e-8)?;
    let field = GaussianField::uniform(&table, half_width, per_side)?;
    let mut csv = String::from("parameter,estimate,ci_lo,ci_hi,bound\n");
    match probe {
        "maxloc" => {
            let mut rng = levylab::stream_rng(seed, "cli-maxloc", 0);
            let mut path = vec![0.0; field.len()];
            let mut taus = Vec::with_capacity(paths as usize);
            for _ in 0..paths {
                field.sample(&mut rng, &mut path);
                taus.push(gaussian::leftmost_max(&path, &field.sites, 0.0, half_width).tau);
            }
            let bins = 20;
            let width = half_width / bins as f64;
            for k in 0..bins {
                let lo = k as f64 * width;
                let hi = lo + width;
                let c = taus.iter().filter(|&&x| x >= lo && x < hi).count() as u64;
                let (ci_lo, ci_hi) = levylab::stats::wilson_interval(c, paths);
                let t = lo + 0.5 * width;
                let bound = (1.0 / t).max(1.0 / (half_width - t).max(1e-12));
                writeln!(
                    csv,
                    "{},{},{},{},{}",
                    fmt_f64(t),
                    fmt_f64(c as f64 / paths as f64 / width),
                    fmt_f64(ci_lo / width),
                    fmt_f64(ci_hi / width),
                    fmt_f64(bound)
                )?;
            }
        }
        "upper" => {
            let mut rng = levylab::stream_rng(seed, "cli-upper", 0);
            let sig = field.sigma0_hat_sq_grid(half_width).sqrt();
            let us: Vec<f64> = (1..=8).map(|k| 0.5 * k as f64 * sig).collect();
            let rep = gaussian::upper_tail_probe(&field, half_width, &us, paths, &mut rng);
            for (u, p, lo, hi) in rep.per_u {
                writeln!(
                    csv,
                    "{},{},{},{},",
                    fmt_f64(u),
                    fmt_f64(p),
                    fmt_f64(lo),
                    fmt_f64(hi)
                )?;
            }
        }
        "lower" => {
            let mut rng = levylab::stream_rng(seed, "cli-lower", 0);
            let hs: Vec<f64> = (1..=6).map(|k| 2f64.powi(-k)).collect();
            let rep = gaussian::lower_tail_probe(&field, half_width, &hs, paths, &mut rng);
            for (h, p, lo, hi) in rep.per_h {
                writeln!(
                    csv,
                    "{},{},{},{},",
                    fmt_f64(h),
                    fmt_f64(p),
                    fmt_f64(lo),
                    fmt_f64(hi)
                )?;
            }
            eprintln!("gamma_hat = {:.4} (se {:.4})", rep.gamma_hat, rep.gamma_se);
        }
        "cm" => {
            let bump = gaussian::BumpProfile;
            let g: Vec<f64> = field
                .sites
                .iter()
                .map(|&x| 0.4 * (1.0 - bump.eval(x / (0.6 * half_width))))
                .collect();
            let mut rng = levylab::stream_rng(seed, "cli-cm", 0);
            let rep = gaussian::cameron_martin_check(
                &field,
                &g,
                field.sigma0_hat_sq_grid(half_width).sqrt(),
                (-half_width, half_width),
                paths,
                &mut rng,
            )?;
            writeln!(
                csv,
                "shifted,{},{},{},",
                fmt_f64(rep.shifted_estimate),
                fmt_f64(rep.shifted_estimate - 1.96 * rep.shifted_se),
                fmt_f64(rep.shifted_estimate + 1.96 * rep.shifted_se)
            )?;
            writeln!(
                csv,
                "weighted,{},{},{},",
                fmt_f64(rep.weighted_estimate),
                fmt_f64(rep.weighted_estimate - 1.96 * rep.weighted_se),
                fmt_f64(rep.weighted_estimate + 1.96 * rep.weighted_se)
            )?;
            writeln!(
                csv,
                "exp_moment,{},,,{}",
                fmt_f64(rep.exp_moment),
                fmt_f64(rep.exp_moment_expected)
            )?;
            eprintln!(
                "agreement within 3 SE: {} (norm² = {:.4})",
                rep.agrees_3se, rep.shift_norm_sq
            );
        }
        other => bail!("unknown probe: {other} (expected maxloc|upper|lower|cm)"),
    }
    write_file(out_dir, &format!("gauss_{probe}.csv"), &csv)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn path_stats(
    model_arg: &str,
    horizon: f64,
    eps_jump: Option<f64>,
    dt: f64,
    bins: f64,
    paths: u64,
    seed: u64,
    stat: &str,
    out_dir: &Path,
) -> Result<()> {
    let model = resolve_model(model_arg)?;
    let kind = match eps_jump {
        Some(e) => StepKind::CompoundPoisson { eps_jump: e },
        None => StepKind::ExactStable,
    };
    let table = ExponentTable::build(&model, 1e-6, 1e6, 16, 1e-8)?;
    let mut csv = String::from("t,statistic,median,q10,q90,n_censored\n");
    let trend_rows = |csv: &mut String, name: &str, levels: &[pathlab::TrendLevel]| {
        for l in levels {
            writeln!(
                csv,
                "{},{name},{},{},{},{}",
                fmt_f64(l.t),
                fmt_f64(l.median),
                fmt_f64(l.q10),
                fmt_f64(l.q90),
                l.n_censored + l.n_excluded
            )
            .unwrap();
        }
    };
    match stat {
        "rayknight" => {
            let mut cfg = pathlab::RunCfg::new(dt, bins);
            cfg.far_radius = 4.0;
            cfg.time_cap = 2e5;
            let rep = pathlab::verify_rayknight(
                &model,
                &table,
                kind,
                &[0.0, -0.5, -0.25, 0.25, 0.5],
                horizon,
                paths,
                &cfg,
                seed,
                0.1,
                0.05,
            )?;
            for s in &rep.sites {
                writeln!(
                    csv,
                    "{},ks-x={},{},,,{}",
                    fmt_f64(horizon),
                    s.x,
                    fmt_f64(s.ks),
                    rep.n_censored
                )?;
                writeln!(
                    csv,
                    "{},mean-x={},{},,,{}",
                    fmt_f64(horizon),
                    s.x,
                    fmt_f64(s.mean_local_time),
                    rep.n_censored
                )?;
            }
            eprintln!(
                "rayknight: passed = {}, censored = {:.3}%",
                rep.passed(),
                100.0 * rep.censored_frac
            );
        }
        "upper" => {
            let vario = table.build_variogram(1e-9, 1e2, 12)?;
            let levels = pathlab::upper_statistic(
                &model, &vario, kind, 1.0, 0.0, &[0.5, 0.25, 0.125], paths, seed, 0.002,
            )?;
            trend_rows(&mut csv, "windowed-overshoot", &levels);
        }
        "lower" => {
            let vario = table.build_variogram(1e-9, 1e2, 12)?;
            let levels = pathlab::lower_statistic(
                &model, &vario, kind, 2.0, &[0.5, 0.25, 0.125], paths, seed,
            )?;
            trend_rows(&mut csv, "max-local-time", &levels);
        }
        "favorite" => {
            let vario = table.build_variogram(1e-9, 1e2, 12)?;
            let levels = pathlab::favorite_ratio(
                &model,
                &vario,
                kind,
                3.0,
                &[0.125, 0.0625, 0.03125, 0.015625],
                paths,
                seed,
            )?;
            trend_rows(&mut csv, "favorite-ratio", &levels);
        }
        "polarity" => {
            let rep = pathlab::polarity_ratio_check(&table, 64, 2..=64)?;
            for (k, w) in rep.ks.iter().zip(&rep.weighted_sup) {
                writeln!(csv, "{k},weighted-sup,{},,,0", fmt_f64(*w))?;
            }
            eprintln!("monotone decreasing: {}", rep.monotone_decreasing);
        }
        other => bail!("unknown stat: {other} (expected rayknight|upper|lower|favorite|polarity)"),
    }
    write_file(out_dir, &format!("path_{stat}.csv"), &csv)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_suites(
    suite: &str,
    model_arg: &str,
    seed: u64,
    out_dir: &Path,
    jobs: u64,
    paths_factor: f64,
    regime_threshold: f64,
    plot: bool,
) -> Result<()> {
    let model = resolve_model(model_arg)?;
    let opts = SuiteOpts {
        paths_factor,
        regime_threshold,
    };
    let ids: Vec<&'static str> = if suite == "all" {
        suites::list_suites().iter().map(|s| s.id).collect()
    } else {
        let id = suites::list_suites()
            .iter()
            .find(|s| s.id == suite)
            .map(|s| s.id)
            .ok_or_else(|| anyhow::anyhow!("unknown suite `{suite}`; see list-suites"))?;
        vec![id]
    };
    std::fs::create_dir_all(out_dir)?;
    let reports = levylab::run_streams(jobs.max(1).min(ids.len() as u64), |j| {
        let mut out = Vec::new();
        let mut i = j as usize;
        while i < ids.len() {
            out.push((ids[i], suites::run_suite(ids[i], &model, seed, &opts)));
            i += jobs.max(1) as usize;
        }
        out
    });
    let mut all_ok = true;
    let mut flat: Vec<(&str, levylab::Result<levylab::report::ExperimentReport>)> =
        reports.into_iter().flatten().collect();
    flat.sort_by_key(|(id, _)| ids.iter().position(|x| x == id).unwrap());
    for (id, res) in flat {
        match res {
            Ok(rep) => {
                let fname = id.replace('.', "-");
                write_file(out_dir, &format!("{fname}.csv"), &rep.to_csv())?;
                write_file(out_dir, &format!("{fname}.summary.txt"), &rep.to_summary())?;
                if plot {
                    let series: Vec<(String, Vec<(f64, f64)>)> = rep
                        .records
                        .iter()
                        .enumerate()
                        .filter_map(|(i, r)| {
                            r.values
                                .first()
                                .map(|(k, v)| (format!("{}:{k}", r.name), vec![(i as f64, *v)]))
                        })
                        .collect();
                    write_file(out_dir, &format!("{fname}.svg"), &svg_lines(id, &series, false, false))?;
                }
                eprint!("{}", rep.console_lines());
                eprintln!(
                    "suite {id}: {} ({:.1}s)",
                    if rep.all_passed() { "PASS" } else { "FAIL" },
                    rep.runtime_secs
                );
                all_ok &= rep.all_passed();
            }
            Err(e) => {
                let mut rep = levylab::report::ExperimentReport::new(id, &model.label, seed);
                rep.push(
                    levylab::report::CheckRecord::new("error", "")
                        .note(&e.to_string())
                        .passed(false),
                );
                let fname = id.replace('.', "-");
                write_file(out_dir, &format!("{fname}.summary.txt"), &rep.to_summary())?;
                eprintln!("suite {id}: ERROR: {e}");
                all_ok = false;
            }
        }
    }
    if !all_ok {
        std::process::exit(1);
    }
    Ok(())
}
