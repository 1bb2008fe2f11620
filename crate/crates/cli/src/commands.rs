use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use ergm_lasso::estimator::{Estimator, SgdConfig};
use ergm_lasso::graph::{dyad_count, AttributeTable, Network};
use ergm_lasso::io::{
    fmt_f64, load_dataset, read_attributes, read_edge_list, write_attributes, write_edge_list, write_table,
    Dataset, SpecFile,
};
use ergm_lasso::oracle::ExactModel;
use ergm_lasso::plot::path_svg;
use ergm_lasso::sampler::{sample_networks, ChainInit, SamplerConfig};
use ergm_lasso::selector::{
    compute_path, inference_at, lambda_max, rank, select_threshold, BridgeConfig, Criterion, InferenceConfig,
    LambdaGrid, PathConfig, PathResult,
};
use ergm_lasso::simulate::{self, Setup};
use ergm_lasso::statistics::{standardize as standardize_spec, Model, ModelSpec};
use ergm_lasso::Error;

use crate::{
    CriterionArg, ExactArgs, FitArgs, InputArgs, OutputArgs, PathArgs, SelectArgs, SimulateArgs, StandardizeArgs,
    TuningArgs,
};

/// Process exit status for an error: 2 input, 3 non-convergence, 4 numerical.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::NonConvergence { .. }) => 3,
        Some(err) if err.is_input_error() => 2,
        Some(_) => 4,
        None => 2,
    }
}

/// Independent seed number `k` derived from the master seed.
fn sub_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn prepare_out(o: &OutputArgs) -> Result<PathBuf> {
    if o.out.exists() {
        let non_empty = fs::read_dir(&o.out)
            .with_context(|| format!("cannot read {}", o.out.display()))?
            .next()
            .is_some();
        if non_empty && !o.force {
            return Err(Error::Usage(format!(
                "output directory {} is not empty; pass --force to overwrite",
                o.out.display()
            ))
            .into());
        }
    }
    fs::create_dir_all(&o.out).map_err(|e| Error::Io {
        path: o.out.clone(),
        source: e,
    })?;
    Ok(o.out.clone())
}

fn write_manifest(out: &Path, command: &str, seed: u64, config: Value, outputs: &[&str]) -> Result<()> {
    let m = json!({
        "tool": "ergm-lasso",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "config": config,
        "outputs": outputs,
    });
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn inputs_json(i: &InputArgs) -> Value {
    json!({
        "edges": i.edges,
        "attrs": i.attrs,
        "spec": i.spec,
    })
}

fn sgd_config(t: &TuningArgs, seed: u64) -> SgdConfig {
    let mut c = SgdConfig {
        seed,
        ..SgdConfig::default()
    };
    if let Some(v) = t.m_per_iter {
        c.m_per_iter = v;
    }
    if let Some(v) = t.max_iters {
        c.max_iters = v;
    }
    if let Some(v) = t.tol {
        c.tol = v;
    }
    if let Some(p) = t.preconditioner {
        c.preconditioner = p.into();
    }
    if let Some(v) = t.chains {
        c.chains = v;
    }
    c.eta0 = t.eta0;
    c.thin = t.thin;
    c
}

fn inference_config(t: &TuningArgs, seed: u64) -> InferenceConfig {
    let mut c = InferenceConfig {
        sgd: sgd_config(t, sub_seed(seed, 3)),
        thin: t.thin,
        bridge: BridgeConfig {
            seed: sub_seed(seed, 4),
            thin: t.thin,
            ..BridgeConfig::default()
        },
        ..InferenceConfig::default()
    };
    if let Some(v) = t.cov_draws {
        c.cov_draws = v;
    }
    if let Some(v) = t.bridge_points {
        c.bridge.points = v;
    }
    if let Some(v) = t.bridge_draws {
        c.bridge.m = v;
    }
    c
}

/// Standardized spec (or the file's own scales) and the reference SDs.
fn prepared_spec(ds: &Dataset, t: &TuningArgs, seed: u64) -> Result<(ModelSpec, Value)> {
    if t.no_standardize {
        return Ok((ds.spec.clone(), json!(null)));
    }
    let st = standardize_spec(&ds.spec, &ds.network, &ds.attributes, t.standardize_draws, sub_seed(seed, 0))?;
    for d in &st.dropped {
        eprintln!("warning: term '{d}' is constant under the reference model and was dropped");
    }
    let info = json!({
        "draws": t.standardize_draws,
        "sd": ds.spec.labels().into_iter().zip(st.sd.iter().map(|&s| fmt_f64(s))).collect::<Vec<_>>(),
        "dropped": st.dropped,
    });
    Ok((st.spec, info))
}

fn write_prepared_spec(out: &Path, ds: &Dataset, spec: &ModelSpec) -> Result<()> {
    SpecFile::from_model_spec(spec, ds.spec_file.attributes.clone()).write(&out.join("spec.standardized.json"))?;
    Ok(())
}

pub fn fit(a: FitArgs) -> Result<ExitCode> {
    let ds = load_dataset(&a.input.edges, a.input.attrs.as_deref(), &a.input.spec)?;
    let out = prepare_out(&a.output)?;
    let seed = a.output.seed;
    let (spec, std_info) = prepared_spec(&ds, &a.tuning, seed)?;
    write_prepared_spec(&out, &ds, &spec)?;
    let model = Model::new(&spec, &ds.attributes, ds.network.n_nodes())?;
    let sgd = sgd_config(&a.tuning, sub_seed(seed, 2));
    let icfg = inference_config(&a.tuning, seed);
    let fit = Estimator::mcmc(&model, &ds.network, sgd.clone())?.fit_mle()?;
    fit.trace.write_csv(&out.join("trace.csv"), &spec.labels())?;
    let report = inference_at(&model, &ds.network, &fit, &icfg)?;
    report.write_json(&out.join("report.json"))?;
    write_manifest(
        &out,
        "fit",
        seed,
        json!({"inputs": inputs_json(&a.input), "standardization": std_info, "sgd": sgd, "inference": icfg}),
        &["spec.standardized.json", "trace.csv", "report.json"],
    )?;
    if !fit.converged {
        eprintln!("error: SGD did not converge in {} iterations; see trace.csv", fit.iterations);
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

struct PathRun {
    ds: Dataset,
    spec: ModelSpec,
    path: PathResult,
    config: Value,
    outputs: Vec<&'static str>,
}

fn run_path(a: &PathArgs, out: &Path) -> Result<PathRun> {
    let ds = load_dataset(&a.input.edges, a.input.attrs.as_deref(), &a.input.spec)?;
    let seed = a.output.seed;
    let (spec, std_info) = prepared_spec(&ds, &a.tuning, seed)?;
    write_prepared_spec(out, &ds, &spec)?;
    let model = Model::new(&spec, &ds.attributes, ds.network.n_nodes())?;
    let lmax = lambda_max(&model, &ds.network, a.tuning.standardize_draws.max(2), sub_seed(seed, 1))?;
    let grid = LambdaGrid::parse(&a.lambda_grid, Some(lmax))?;
    let cfg = PathConfig {
        sgd: sgd_config(&a.tuning, sub_seed(seed, 2)),
        ..PathConfig::default()
    };
    let path = compute_path(&model, &ds.network, &grid, &cfg)?;
    path.write_csv(&out.join("path.csv"), false)?;
    path.write_csv(&out.join("path_raw.csv"), true)?;
    path.write_ranking(&out.join("ranking.csv"))?;
    let mut outputs = vec!["spec.standardized.json", "path.csv", "path_raw.csv", "ranking.csv"];
    if a.plot {
        let svg = out.join("path.svg");
        fs::write(&svg, path_svg(&path)).with_context(|| format!("cannot write {}", svg.display()))?;
        outputs.push("path.svg");
    }
    let unconverged: Vec<String> = path
        .grid
        .iter()
        .zip(&path.converged)
        .filter(|(_, c)| !**c)
        .map(|(l, _)| fmt_f64(*l))
        .collect();
    let config = json!({
        "inputs": inputs_json(&a.input),
        "standardization": std_info,
        "lambda_max": lmax,
        "lambda_grid": a.lambda_grid,
        "path": cfg,
        "unconverged_lambdas": unconverged,
        "jumps": path.jumps.iter().map(|&g| path.grid[g]).collect::<Vec<_>>(),
    });
    Ok(PathRun {
        ds,
        spec,
        path,
        config,
        outputs,
    })
}

fn convergence_status(path: &PathResult) -> ExitCode {
    if path.converged.iter().all(|c| *c) {
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "error: {} of {} penalized fits did not converge",
            path.converged.iter().filter(|c| !**c).count(),
            path.converged.len()
        );
        ExitCode::from(3)
    }
}

pub fn path(a: PathArgs) -> Result<ExitCode> {
    let out = prepare_out(&a.output)?;
    let run = run_path(&a, &out)?;
    write_manifest(&out, "path", a.output.seed, run.config, &run.outputs)?;
    for j in rank(&run.path) {
        let r = run.path.importance[j].map(fmt_f64).unwrap_or_else(|| "NA".into());
        println!("{}\t{}", run.path.labels[j], r);
    }
    Ok(convergence_status(&run.path))
}

pub fn select(a: SelectArgs) -> Result<ExitCode> {
    let out = prepare_out(&a.path.output)?;
    let seed = a.path.output.seed;
    let run = run_path(&a.path, &out)?;
    let criterion = match a.criterion {
        CriterionArg::Aic => Criterion::Aic,
        CriterionArg::Pvalue => Criterion::Pvalue { alpha: a.alpha_sig },
    };
    let icfg = inference_config(&a.path.tuning, seed);
    let sel = select_threshold(&run.path, &run.ds.network, &run.ds.attributes, &run.spec, criterion, &icfg)?;
    sel.write_walk(&out.join("walk.csv"))?;
    sel.report.write_json(&out.join("report.json"))?;
    let selected = run.spec.subset(&sel.selected)?;
    SpecFile::from_model_spec(&selected, run.ds.spec_file.attributes.clone())
        .write(&out.join("spec.selected.json"))?;
    let mut outputs = run.outputs.clone();
    outputs.extend(["walk.csv", "report.json", "spec.selected.json"]);
    let mut config = run.config;
    config["criterion"] = serde_json::to_value(criterion)?;
    config["inference"] = serde_json::to_value(&icfg)?;
    write_manifest(&out, "select", seed, config, &outputs)?;
    for t in &sel.report.terms {
        println!("{}\t{}\t{}\t{}", t.term, fmt_f64(t.estimate_raw), fmt_f64(t.std_error_raw), fmt_f64(t.p_value));
    }
    println!("AIC\t{}", fmt_f64(sel.report.aic));
    Ok(convergence_status(&run.path))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("cannot parse number '{x}' in '{s}'")).into())
        })
        .collect()
}

fn draw_name(k: usize, width: usize, ext: &str) -> String {
    format!("draw_{k:0width$}.{ext}")
}

pub fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let seed = a.output.seed;
    if a.draws == 0 {
        return Err(Error::Usage("--draws must be at least 1".into()).into());
    }
    let width = (a.draws - 1).to_string().len().max(5);
    let truth;
    let mut outputs: Vec<String> = Vec::new();
    if let Some(name) = &a.setup {
        let setup = Setup::parse(name)?;
        let out = prepare_out(&a.output)?;
        let sims = simulate::simulate(setup, a.nodes, a.draws, seed)?;
        for (k, s) in sims.iter().enumerate() {
            let e = draw_name(k, width, "edges");
            write_edge_list(&out.join(&e), &s.network)?;
            outputs.push(e);
            if setup.has_attribute() {
                let c = draw_name(k, width, "csv");
                write_attributes(&out.join(&c), s.network.labels(), &s.attributes)?;
                outputs.push(c);
            }
        }
        truth = match setup.generator() {
            Some((spec, theta)) => json!({
                "setup": setup.name(),
                "terms": spec.labels(),
                "theta": theta,
                "burn_in_sweeps": simulate::GENERATOR_SWEEPS,
                "candidates": setup.candidates().labels(),
                "attribute": setup.has_attribute().then_some(simulate::ATTRIBUTE),
            }),
            None => json!({
                "setup": setup.name(),
                "attribute": simulate::ATTRIBUTE,
                "attribute_rule": "x ~ Bernoulli(0.5); tie probability by number of endpoints with x = 1",
                "tie_probability": simulate::ATTRIBUTE_TIE_PROB,
                "candidates": setup.candidates().labels(),
            }),
        };
        write_truth_and_manifest(&out, seed, &a, truth, outputs)?;
        return Ok(ExitCode::SUCCESS);
    }
    let (Some(spec_path), Some(theta)) = (&a.spec, &a.theta) else {
        return Err(Error::Usage("give either --setup or --spec with --theta".into()).into());
    };
    let spec_file = SpecFile::read(spec_path)?;
    let (labels, attrs) = match &a.attrs {
        Some(p) => {
            let (ids, t) = read_attributes(p, &spec_file.attributes)?;
            (Some(ids), t)
        }
        None => (None, AttributeTable::new(a.nodes)),
    };
    let n = attrs.n_rows();
    let spec = spec_file.to_model_spec(&attrs)?;
    let theta_raw = parse_list(theta)?;
    if theta_raw.len() != spec.len() {
        return Err(Error::Usage(format!(
            "--theta has {} values but the model spec has {} terms ({})",
            theta_raw.len(),
            spec.len(),
            spec.labels().join(", ")
        ))
        .into());
    }
    let out = prepare_out(&a.output)?;
    let model = Model::new(&spec, &attrs, n)?;
    let theta: Vec<f64> = theta_raw.iter().zip(spec.scales()).map(|(t, s)| t * s).collect();
    let d = dyad_count(n).max(1);
    let cfg = SamplerConfig {
        burn_in: a.burn_in_sweeps * d,
        thin: d,
        m: a.draws,
        seed,
        init: ChainInit::Empty,
        chains: 1,
    };
    let (_, nets) = sample_networks(&model, &theta, &Network::empty(n), &cfg)?;
    for (k, net) in nets.iter().enumerate() {
        let net = match &labels {
            Some(ids) => relabel(net, ids.clone())?,
            None => net.clone(),
        };
        let e = draw_name(k, width, "edges");
        write_edge_list(&out.join(&e), &net)?;
        outputs.push(e);
    }
    truth = json!({
        "spec": spec_path,
        "terms": spec.labels(),
        "theta": theta_raw,
        "burn_in_sweeps": a.burn_in_sweeps,
        "thin": d,
    });
    write_truth_and_manifest(&out, seed, &a, truth, outputs)?;
    Ok(ExitCode::SUCCESS)
}

fn relabel(net: &Network, ids: Vec<String>) -> Result<Network> {
    let mut out = Network::with_labels(ids);
    for (i, j) in net.edges() {
        out.add_edge(i, j)?;
    }
    Ok(out)
}

fn write_truth_and_manifest(out: &Path, seed: u64, a: &SimulateArgs, truth: Value, mut outputs: Vec<String>) -> Result<()> {
    let path = out.join("truth.json");
    fs::write(&path, serde_json::to_string_pretty(&truth)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    outputs.push("truth.json".into());
    let refs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    write_manifest(
        out,
        "simulate",
        seed,
        json!({"setup": a.setup, "spec": a.spec, "attrs": a.attrs, "nodes": a.nodes, "draws": a.draws}),
        &refs,
    )
}

pub fn exact(a: ExactArgs) -> Result<ExitCode> {
    let spec_file = SpecFile::read(&a.spec)?;
    let (ids, attrs) = match &a.attrs {
        Some(p) => {
            let (ids, t) = read_attributes(p, &spec_file.attributes)?;
            (Some(ids), Some(t))
        }
        None => (None, None),
    };
    let observed = match &a.edges {
        Some(p) => Some(read_edge_list(p, ids.as_deref())?),
        None => None,
    };
    let n = match (&attrs, &observed, a.nodes) {
        (Some(t), _, _) => t.n_rows(),
        (None, Some(net), _) => net.n_nodes(),
        (None, None, Some(n)) => n,
        _ => return Err(Error::Usage("give --edges, --attrs or --nodes".into()).into()),
    };
    let attrs = attrs.unwrap_or_else(|| AttributeTable::new(n));
    let spec = spec_file.to_model_spec(&attrs)?;
    let em = ExactModel::new(&spec, &attrs, n)?;
    let out = prepare_out(&a.output)?;
    let mut result = json!({
        "n_nodes": n,
        "n_graphs": em.n_graphs(),
        "terms": spec.labels(),
        "scales": spec.scales(),
    });
    if let Some(t) = &a.theta {
        let theta = parse_list(t)?;
        if theta.len() != spec.len() {
            return Err(Error::Usage(format!("--theta needs {} values", spec.len())).into());
        }
        let m = em.moments(&theta)?;
        result["theta"] = json!(theta);
        result["log_kappa"] = json!(m.log_kappa);
        result["mean"] = json!(m.mean);
        result["covariance"] = json!(m.covariance);
    }
    if let Some(net) = &observed {
        let obs = em.model().scaled_stats(net)?;
        let mle = em.mle(&obs)?;
        let lmax = em.lambda_max(&obs)?;
        let grid = LambdaGrid::parse(&a.lambda_grid, Some(lmax))?;
        let path = grid
            .values()
            .iter()
            .map(|&l| Ok(json!({"lambda": l, "theta": em.penalized(&obs, l)?})))
            .collect::<ergm_lasso::Result<Vec<_>>>()?;
        let activation = (0..spec.len())
            .filter(|&j| spec.penalized()[j])
            .map(|j| Ok(json!({"term": spec.labels()[j], "lambda": em.activation_lambda(&obs, j)?})))
            .collect::<ergm_lasso::Result<Vec<_>>>()?;
        result["observed"] = json!(obs);
        result["mle"] = json!(mle);
        result["log_likelihood_at_mle"] = json!(em.log_likelihood(&obs, &mle)?);
        result["lambda_max"] = json!(lmax);
        result["penalized_path"] = json!(path);
        result["activation"] = json!(activation);
    }
    let path = out.join("exact.json");
    fs::write(&path, serde_json::to_string_pretty(&result)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    write_manifest(
        &out,
        "exact",
        a.output.seed,
        json!({"spec": a.spec, "attrs": a.attrs, "edges": a.edges, "nodes": n, "lambda_grid": a.lambda_grid}),
        &["exact.json"],
    )?;
    Ok(ExitCode::SUCCESS)
}

pub fn standardize(a: StandardizeArgs) -> Result<ExitCode> {
    let ds = load_dataset(&a.input.edges, a.input.attrs.as_deref(), &a.input.spec)?;
    let out = prepare_out(&a.output)?;
    let seed = a.output.seed;
    let st = standardize_spec(&ds.spec, &ds.network, &ds.attributes, a.standardize_draws, sub_seed(seed, 0))?;
    write_prepared_spec(&out, &ds, &st.spec)?;
    let rows: Vec<Vec<String>> = ds
        .spec
        .labels()
        .into_iter()
        .zip(&st.sd)
        .map(|(label, sd)| {
            let scale = st.spec.position(&label).map(|k| fmt_f64(st.spec.scales()[k]));
            let dropped = st.dropped.contains(&label);
            vec![label, fmt_f64(*sd), scale.unwrap_or_else(|| "NA".into()), dropped.to_string()]
        })
        .collect();
    write_table(
        &out.join("scales.csv"),
        &["term", "sd", "scale", "dropped"].map(String::from),
        &rows,
    )?;
    for d in &st.dropped {
        eprintln!("warning: term '{d}' is constant under the reference model and was dropped");
    }
    write_manifest(
        &out,
        "standardize",
        seed,
        json!({"inputs": inputs_json(&a.input), "draws": a.standardize_draws, "density": ds.network.density()}),
        &["spec.standardized.json", "scales.csv"],
    )?;
    Ok(ExitCode::SUCCESS)
}
