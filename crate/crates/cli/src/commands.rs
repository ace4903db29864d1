//! Command implementations. Each returns `CliError` carrying the exit code:
//! 2 for configuration/validation problems, 3 for runtime numeric failures.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use conformal_batch::{
    build_aux_selector, effective_ranks, recalibrated_set, ConformalModel, Score,
    SelectorMechanism,
};
use experiments::online::{run_coma_baseline, OnlineConfig, OnlineTraceRow};
use experiments::{
    heterogeneous_models, load_csv_dataset, run_batch_scenario, run_online_scenario,
    ExperimentError,
};
use selection_core::{
    ada_minse, expected_size, exponential_select, laplace_select, minse, Prior, SizeProfile,
};

use crate::config::{load_toml, OnlineRunConfig, RecalibrateConfig, RunConfig};
use crate::{fmt12, CliError};

fn runtime(e: ExperimentError) -> CliError {
    match e {
        ExperimentError::BadScenario(_)
        | ExperimentError::NonStationary(_)
        | ExperimentError::EmptyTrainingData
        | ExperimentError::BadCsvShape => CliError::Config(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

fn parse_floats(field: &str, raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{field}: '{s}' is not a number")))
        })
        .collect()
}

/// `stabsel select`: one-shot selection over a size profile, printed as a
/// structured record.
#[allow(clippy::too_many_arguments)]
pub fn cmd_select(
    sizes: &str,
    prior: Option<&str>,
    mechanism: &str,
    eta: Option<f64>,
    tau: Option<f64>,
    alpha: Option<f64>,
    alpha_prime: Option<f64>,
    seed: Option<u64>,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let sizes = parse_floats("sizes", sizes)?;
    let k = sizes.len();
    let prior = match prior {
        None => Prior::uniform(k),
        Some(raw) => Prior::new(parse_floats("prior", raw)?)
            .map_err(|e| CliError::Config(format!("prior: {e}")))?,
    };
    let scale = sizes.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| CliError::Config(format!("{name}: required for mechanism '{mechanism}'")))
    };
    let mut chosen: Option<usize> = None;
    let (dist, xi) = match mechanism {
        "minse" => {
            let xi = SizeProfile::new(sizes).map_err(|e| CliError::Config(format!("sizes: {e}")))?;
            let d = minse(&xi, &prior, need(eta, "eta")?, tau.unwrap_or(0.0))
                .map_err(|e| CliError::Config(format!("budget: {e}")))?;
            (d, xi)
        }
        "ada_minse" => {
            let xi = SizeProfile::new(sizes).map_err(|e| CliError::Config(format!("sizes: {e}")))?;
            let d = ada_minse(&xi, &prior, need(alpha, "alpha")?, need(alpha_prime, "alpha_prime")?)
                .map_err(|e| CliError::Config(format!("budget: {e}")))?;
            (d, xi)
        }
        "exponential" => {
            let xi = SizeProfile::with_scale(sizes, scale)
                .map_err(|e| CliError::Config(format!("sizes: {e}")))?;
            let d = exponential_select(&xi, need(eta, "eta")?)
                .map_err(|e| CliError::Config(format!("budget: {e}")))?;
            (d, xi)
        }
        "laplace" => {
            let xi = SizeProfile::with_scale(sizes, scale)
                .map_err(|e| CliError::Config(format!("sizes: {e}")))?;
            let mut rng = ChaCha12Rng::seed_from_u64(seed.unwrap_or(0));
            let i = laplace_select(&xi, need(eta, "eta")?, &mut rng)
                .map_err(|e| CliError::Config(format!("budget: {e}")))?;
            chosen = Some(i);
            let mut p = vec![0.0; k];
            p[i] = 1.0;
            writeln_record(out, mechanism, &p, f64::NAN, f64::NAN, f64::NAN, f64::NAN, chosen)?;
            return Ok(());
        }
        other => return Err(CliError::Config(format!("mechanism: unknown mechanism '{other}'"))),
    };
    let bu = dist.budget_used();
    let slack = dist.certificate_slack(&prior, bu.gamma.ln());
    writeln_record(
        out,
        mechanism,
        dist.probabilities(),
        bu.gamma,
        bu.tau,
        slack,
        expected_size(&dist, &xi),
        chosen,
    )
}

#[allow(clippy::too_many_arguments)]
fn writeln_record(
    out: &mut impl Write,
    mechanism: &str,
    p: &[f64],
    gamma: f64,
    tau: f64,
    slack: f64,
    expected: f64,
    chosen: Option<usize>,
) -> Result<(), CliError> {
    let ps: Vec<String> = p.iter().map(|&v| fmt12(v)).collect();
    let mut line = format!(
        "mechanism={mechanism} k={} p=({}) gamma_used={} tau_used={} certificate_slack={} expected_size={}",
        p.len(),
        ps.join(","),
        fmt12(gamma),
        fmt12(tau),
        fmt12(slack),
        fmt12(expected),
    );
    if let Some(i) = chosen {
        line.push_str(&format!(" chosen={i}"));
    }
    writeln!(out, "{line}").map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_output(out_dir: Option<&Path>, name: &str, content: &str) -> Result<(), CliError> {
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Runtime(format!("output dir: {e}")))?;
            std::fs::write(dir.join(name), content)
                .map_err(|e| CliError::Runtime(format!("writing {name}: {e}")))
        }
        None => {
            print!("# {name}\n{content}");
            Ok(())
        }
    }
}

/// `stabsel run`: batch scenario, per-seed CSV plus summary.
pub fn cmd_run(
    config_path: &Path,
    seed_override: Option<u64>,
    out_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg: RunConfig = load_toml(config_path)?;
    let method = cfg.method()?;
    let budget = cfg.budget.build()?;
    let seeds = cfg.seeds(seed_override)?;
    let scenario = cfg.scenario.build();
    let metrics = run_batch_scenario(&scenario, method, &budget, &seeds).map_err(runtime)?;

    let mut per_seed = String::from("seed,method,scenario,coverage,mean_length,n_test\n");
    for (i, &seed) in seeds.iter().enumerate() {
        per_seed.push_str(&format!(
            "{seed},{},{},{},{},{}\n",
            method.name(),
            cfg.scenario.name(),
            fmt12(metrics.per_seed_coverage[i]),
            fmt12(metrics.per_seed_length[i]),
            cfg.scenario.n_test(),
        ));
    }
    let mut summary = String::from(
        "method,scenario,n_seeds,coverage_mean,coverage_se,length_mean,length_se\n",
    );
    summary.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        method.name(),
        cfg.scenario.name(),
        seeds.len(),
        fmt12(metrics.coverage_mean),
        fmt12(metrics.coverage_se),
        fmt12(metrics.length_mean),
        fmt12(metrics.length_se),
    ));
    write_output(out_dir.as_deref(), "results.csv", &per_seed)?;
    write_output(out_dir.as_deref(), "summary.csv", &summary)
}

fn render_trace(trace: &[OnlineTraceRow]) -> String {
    let mut out = String::from("t,chosen,covered,length,weights,p_star\n");
    for r in trace {
        let w: Vec<String> = r.weights.iter().map(|&v| fmt12(v)).collect();
        let p: Vec<String> = r.p_star.iter().map(|&v| fmt12(v)).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.t,
            r.chosen.map(|i| i as i64).unwrap_or(-1),
            r.covered as u8,
            fmt12(r.length),
            w.join(";"),
            p.join(";"),
        ));
    }
    out
}

/// `stabsel online`: AdaCOMA trace plus a COMA/AdaCOMA summary side by side.
pub fn cmd_online(
    config_path: &Path,
    seed_override: Option<u64>,
    out_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg: OnlineRunConfig = load_toml(config_path)?;
    let option = cfg.option()?;
    let seeds = cfg.seeds(seed_override)?;
    let run_cfg = OnlineConfig {
        t_len: cfg.t_len,
        ar: cfg.ar,
        ma: cfg.ma,
        noise_sd: cfg.noise_sd,
        alpha_prime: cfg.alpha_prime,
        gamma: cfg.gamma,
        eta: cfg.eta,
        tau: cfg.tau,
        scale: cfg.scale,
        option,
    };
    let summary_header = "method,t_len,n_seeds,coverage_mean,coverage_se,length_mean\n";
    if cfg.t_len == 0 {
        // Degenerate run: header-only trace, summary flagged as empty.
        eprintln!("warning: t_len = 0 produces an empty trace and summary");
        write_output(out_dir.as_deref(), "trace_adacoma.csv", "t,chosen,covered,length,weights,p_star\n")?;
        let summary = format!("{summary_header}adacoma,0,{},nan,nan,nan\ncoma,0,{},nan,nan,nan\n", seeds.len(), seeds.len());
        return write_output(out_dir.as_deref(), "summary.csv", &summary);
    }
    let adacoma = run_online_scenario(&run_cfg, &seeds).map_err(runtime)?;
    let coma_trace = run_coma_baseline(&run_cfg, seeds[0]).map_err(runtime)?;
    let coma_cov =
        coma_trace.iter().filter(|r| r.covered).count() as f64 / coma_trace.len() as f64;
    let coma_finite: Vec<f64> =
        coma_trace.iter().filter(|r| r.length >= 0.0).map(|r| r.length).collect();
    let coma_len = coma_finite.iter().sum::<f64>() / (coma_finite.len().max(1)) as f64;

    write_output(out_dir.as_deref(), "trace_adacoma.csv", &render_trace(&adacoma.first_seed_trace))?;
    write_output(out_dir.as_deref(), "trace_coma.csv", &render_trace(&coma_trace))?;
    let mut summary = String::from(summary_header);
    summary.push_str(&format!(
        "adacoma,{},{},{},{},{}\n",
        cfg.t_len,
        seeds.len(),
        fmt12(adacoma.coverage_mean),
        fmt12(adacoma.coverage_se),
        fmt12(adacoma.length_mean),
    ));
    summary.push_str(&format!(
        "coma,{},1,{},{},{}\n",
        cfg.t_len,
        fmt12(coma_cov),
        fmt12(0.0),
        fmt12(coma_len),
    ));
    write_output(out_dir.as_deref(), "summary.csv", &summary)
}

/// `stabsel recalibrate`: the post-selection recalibration pipeline on a
/// user-supplied CSV dataset.
pub fn cmd_recalibrate(
    config_path: &Path,
    seed_override: Option<u64>,
    out_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg: RecalibrateConfig = load_toml(config_path)?;
    cfg.validate()?;
    let seed = seed_override.unwrap_or(0);
    let data = load_csv_dataset(&cfg.data).map_err(runtime)?;
    let n = data.len();
    let n_train = (n as f64 * cfg.train_frac) as usize;
    let n_cal = (n as f64 * cfg.cal_frac) as usize;
    let n_aux = (n as f64 * cfg.aux_frac) as usize;
    if n_train < cfg.k * 3 || n_cal < 10 || n_aux < 10 || n_train + n_cal + n_aux >= n {
        return Err(CliError::Config(format!(
            "data: {n} rows are too few for the requested splits (train {n_train}, cal {n_cal}, aux {n_aux})"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows = data;
    // Fisher-Yates with the seeded generator: the split is reproducible.
    for i in (1..rows.len()).rev() {
        let j = rand::Rng::random_range(&mut rng, 0..=i);
        rows.swap(i, j);
    }
    let train = &rows[..n_train];
    let cal = rows[n_train..n_train + n_cal].to_vec();
    let aux = rows[n_train + n_cal..n_train + n_cal + n_aux].to_vec();
    let test = &rows[n_train + n_cal + n_aux..];

    let pairs = heterogeneous_models(train, cfg.k).map_err(runtime)?;
    let calibrate = |split: &[(Vec<f64>, f64)]| -> Result<Vec<ConformalModel>, CliError> {
        pairs
            .iter()
            .map(|(f, g)| {
                ConformalModel::calibrate(
                    Score::ScaledResidual { f: f.clone(), g: g.clone() },
                    split,
                )
                .map_err(|e| CliError::Runtime(e.to_string()))
            })
            .collect()
    };
    let cal_models = calibrate(&cal)?;
    let aux_models = calibrate(&aux)?;
    let selector = build_aux_selector(
        aux_models,
        cfg.alpha,
        SelectorMechanism::MinSe { eta: cfg.eta, tau: cfg.tau },
    );
    let eff = effective_ranks(&cal_models, &selector, &cal, &mut rng);
    let (mut covered, mut total_len) = (0.0, 0.0);
    for (x, y) in test {
        let set = recalibrated_set(&cal_models, &selector, &eff, x, &mut rng, cfg.alpha)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        if set.contains(*y) {
            covered += 1.0;
        }
        total_len += set.measure();
    }
    let n_test = test.len() as f64;
    let mut summary =
        String::from("seed,k,alpha,n_train,n_cal,n_aux,n_test,coverage,mean_length\n");
    summary.push_str(&format!(
        "{seed},{},{},{n_train},{n_cal},{n_aux},{},{},{}\n",
        cfg.k,
        fmt12(cfg.alpha),
        test.len(),
        fmt12(covered / n_test),
        fmt12(total_len / n_test),
    ));
    write_output(out_dir.as_deref(), "recalibrate_summary.csv", &summary)
}
