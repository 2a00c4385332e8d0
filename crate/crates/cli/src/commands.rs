use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sacr_core::estimators::{predict as predict_model, Estimator, Fit, Predictions, TrainedModel};
use sacr_core::fda::{
    default_true_beta, load_csv, simulate as simulate_data, ColumnSelector, CsvOptions, FunctionalDataset,
    SimulationConfig, Task,
};
use sacr_core::selection::{
    format_table, grid_search, nested_evaluate, train, EstimatorSpec, HyperGrid, NestedConfig,
};
use serde::Serialize;

use crate::error::CliError;
use crate::{DataArgs, EvaluateArgs, FitArgs, HyperArgs, OutputArgs, PredictArgs, SimulateArgs};

/// Shortest round-trip representation; stable across runs.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn write_out(output: &OutputArgs, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(&output.out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", output.out_dir.display())))?;
    let path = output.out_dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn echo_value(v: &serde_json::Value) -> Option<String> {
    use serde_json::Value;
    match v {
        Value::Null => None,
        Value::Array(items) if items.is_empty() => None,
        Value::Array(items) => Some(items.iter().filter_map(echo_value).collect::<Vec<_>>().join(",")),
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

/// Resolved options as `key = value` lines, readable back through --config.
fn write_run_config(command: &str, args: &impl Serialize, output: &OutputArgs) -> Result<(), CliError> {
    let value = serde_json::to_value(args).map_err(|e| CliError::usage(e.to_string()))?;
    let mut text = format!("# sacr {command}\n");
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            if let Some(s) = echo_value(&v) {
                let _ = writeln!(text, "{} = {s}", k.replace('_', "-"));
            }
        }
    }
    write_out(output, "run_config.txt", &text)
}

fn csv_options(response_col: &str, classification: bool) -> CsvOptions {
    let response = match response_col {
        "none" => None,
        other => Some(other.parse::<ColumnSelector>().unwrap_or(ColumnSelector::Last)),
    };
    CsvOptions {
        has_header: true,
        response,
        label_mode: classification,
    }
}

fn load(data: &DataArgs) -> Result<FunctionalDataset, CliError> {
    if data.response_col == "none" {
        return Err(CliError::usage("fitting needs a response column"));
    }
    Ok(load_csv(&data.data, &csv_options(&data.response_col, data.classification))?)
}

fn read_center(path: &Path, p: usize) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read center file {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        // last field, so both `value` and `t,value` layouts work
        let cell = line.rsplit(',').next().unwrap_or(line).trim();
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if no == 0 => continue,
            _ => {
                return Err(CliError::data(format!(
                    "{}:{}: cannot parse `{cell}` as a number",
                    path.display(),
                    no + 1
                )))
            }
        }
    }
    if values.len() != p {
        return Err(CliError::data(format!(
            "center file {} has {} values, data has {p} grid points",
            path.display(),
            values.len()
        )));
    }
    Ok(values)
}

fn takes_center(e: Estimator) -> bool {
    matches!(e, Estimator::CenteredRidge | Estimator::Sacr | Estimator::SacrLogistic)
}

fn grid_from(h: &HyperArgs) -> HyperGrid {
    let mut g = HyperGrid::default();
    let set = |dst: &mut Vec<f64>, src: &[f64]| {
        if !src.is_empty() {
            *dst = src.to_vec();
        }
    };
    set(&mut g.lambdas, &h.lambda);
    set(&mut g.phis, &h.phi);
    set(&mut g.gammas, &h.gamma);
    set(&mut g.phi_relax, &h.phi_relax);
    g
}

fn prediction_table(data: &FunctionalDataset, preds: &Predictions) -> String {
    let with_response = data.has_response();
    let mut out = String::from("row,prediction");
    if preds.probabilities.is_some() {
        out.push_str(",probability");
    }
    if preds.labels.is_some() {
        out.push_str(",label");
    }
    if with_response {
        out.push_str(",response,residual");
    }
    out.push('\n');
    for i in 0..preds.values.len() {
        let _ = write!(out, "{},{}", i + 1, num(preds.values[i]));
        if let Some(p) = &preds.probabilities {
            let _ = write!(out, ",{}", num(p[i]));
        }
        if let Some(l) = &preds.labels {
            let _ = write!(out, ",{}", l[i]);
        }
        if with_response {
            let y = data.response()[i];
            // classification residuals are on the probability scale
            let fitted = match (&preds.probabilities, data.task()) {
                (Some(p), _) => p[i],
                _ => preds.values[i],
            };
            let _ = write!(out, ",{},{}", num(y), num(y - fitted));
        }
        out.push('\n');
    }
    out
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let base = if args.correlated {
        SimulationConfig::correlated(args.output.seed)
    } else {
        SimulationConfig::independent(args.output.seed)
    };
    let cfg = SimulationConfig {
        n_samples: args.n_samples,
        grid_size: args.grid_size,
        inner_knots: args.inner_knots.unwrap_or(base.inner_knots),
        noise_sd: args.noise_sd,
        ..base
    };
    let grid = cfg.grid();
    let beta = default_true_beta(&grid);
    let ds = simulate_data(&cfg, &beta).map_err(|e| CliError::usage(e.to_string()))?;

    let mut data = String::new();
    let header: Vec<String> = (1..=ds.p()).map(|j| format!("x{j}")).collect();
    let _ = writeln!(data, "{},y", header.join(","));
    for i in 0..ds.n() {
        let row: Vec<String> = ds.curves().row(i).iter().map(|v| num(*v)).collect();
        let _ = writeln!(data, "{},{}", row.join(","), num(ds.response()[i]));
    }
    let mut truth = String::from("t,beta\n");
    for (t, b) in grid.iter().zip(&beta) {
        let _ = writeln!(truth, "{},{}", num(*t), num(*b));
    }
    write_run_config("simulate", args, &args.output)?;
    write_out(&args.output, "simulated.csv", &data)?;
    write_out(&args.output, "true_beta.csv", &truth)?;
    println!("simulated {} curves on {} grid points", ds.n(), ds.p());
    Ok(())
}

fn spec_for(e: Estimator, center: Option<&Vec<f64>>) -> EstimatorSpec {
    match center {
        Some(c) if takes_center(e) => EstimatorSpec::with_center(e, c.clone()),
        _ => EstimatorSpec::new(e),
    }
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let ds = load(&args.data)?;
    let e = args.estimator;
    if args.center_file.is_some() && !takes_center(e) {
        return Err(CliError::usage(format!("{e} does not take a center")));
    }
    let center = args.center_file.as_deref().map(|p| read_center(p, ds.p())).transpose()?;
    let spec = spec_for(e, center.as_ref());
    let grid = grid_from(&args.hyper);
    let seed = args.output.seed;

    let (hp, cv) = if args.cv {
        let gs = grid_search(&spec, &ds, &grid, args.k_inner, seed, args.stratify)?;
        (gs.selected, Some(gs))
    } else {
        if args.hyper.lambda.is_empty() {
            return Err(CliError::usage("give --lambda, or --cv to select it"));
        }
        let points = grid.points(e)?;
        let [hp] = points.as_slice() else {
            return Err(CliError::usage(format!(
                "without --cv {e} needs exactly one value of each of its hyperparameters ({} combinations given)",
                points.len()
            )));
        };
        (*hp, None)
    };
    let model = train(&spec, &ds, &hp, seed)?;

    write_run_config("fit", args, &args.output)?;
    let json = serde_json::to_string_pretty(&model).map_err(|e| CliError::data(e.to_string()))?;
    write_out(&args.output, "fit.json", &(json + "\n"))?;
    if let Some(gs) = &cv {
        let json = serde_json::to_string_pretty(gs).map_err(|e| CliError::data(e.to_string()))?;
        write_out(&args.output, "cv.json", &(json + "\n"))?;
    }
    let grid_t = ds.grid();
    let mut coef = String::from("t,beta\n");
    for (t, b) in grid_t.iter().zip(model.fit.beta()) {
        let _ = writeln!(coef, "{},{}", num(*t), num(*b));
    }
    write_out(&args.output, "coefficients.csv", &coef)?;
    if let Fit::Sacr(s) = &model.fit {
        let mut curves = String::from("t,beta,w,center\n");
        let cf = s.centerfunction();
        for j in 0..grid_t.len() {
            let _ = writeln!(
                curves,
                "{},{},{},{}",
                num(grid_t[j]),
                num(s.linear.beta[j]),
                num(s.w[j]),
                num(cf[j])
            );
        }
        write_out(&args.output, "sacr_curves.csv", &curves)?;
    }
    let preds = predict_model(&model, &ds)?;
    write_out(&args.output, "diagnostics.csv", &prediction_table(&ds, &preds))?;

    for flag in &model.fit.linear().flags {
        eprintln!("warning: {e} fit flagged {flag:?}");
    }
    println!("{e} {hp}: intercept {}", num(model.fit.intercept()));
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    if args.estimator.is_empty() {
        return Err(CliError::usage("empty estimator list"));
    }
    let ds = load(&args.data)?;
    let center = match &args.center_file {
        Some(p) if !args.estimator.iter().any(|e| takes_center(*e)) => {
            return Err(CliError::usage(format!("none of the estimators takes a center ({})", p.display())))
        }
        Some(p) => Some(read_center(p, ds.p())?),
        None => None,
    };
    let grid = grid_from(&args.hyper);
    grid.validate()?;
    let cfg = NestedConfig {
        k_outer: args.k_outer,
        k_inner: args.k_inner,
        repeats: args.repeats,
        seed: args.output.seed,
        stratify: args.stratify,
    };
    write_run_config("evaluate", args, &args.output)?;
    let mut reports = Vec::new();
    let mut failure: Option<CliError> = None;
    for &e in &args.estimator {
        match nested_evaluate(&spec_for(e, center.as_ref()), &ds, &grid, &cfg) {
            Ok(report) => {
                write_out(&args.output, &format!("cv_{}.json", e.name()), &(report.to_json() + "\n"))?;
                reports.push(report);
            }
            Err(err) => {
                let err = CliError::from(err);
                eprintln!("error: {e}: {err}");
                failure.get_or_insert(err);
            }
        }
    }
    let table = format_table(&reports);
    if !reports.is_empty() {
        write_out(&args.output, "comparison.txt", &table)?;
        print!("{table}");
    }
    match failure {
        Some(mut f) => {
            f.message = format!("{} of {} estimators failed", args.estimator.len() - reports.len(), args.estimator.len());
            Err(f)
        }
        None => Ok(()),
    }
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.fit)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", args.fit.display())))?;
    let model: TrainedModel = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("{}: not a fit file: {e}", args.fit.display())))?;
    let classification = model.task == Task::Classification && args.response_col != "none";
    let ds = load_csv(&args.data, &csv_options(&args.response_col, classification))?;
    let preds = predict_model(&model, &ds)?;
    write_run_config("predict", args, &args.output)?;
    write_out(&args.output, "predictions.csv", &prediction_table(&ds, &preds))?;
    println!("scored {} curves", preds.values.len());
    Ok(())
}
