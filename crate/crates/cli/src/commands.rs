use std::fmt::Write as _;
use std::path::Path;

use mixfan::data::{apply_discretization, fit_discretization, DiscretizationMap};
use mixfan::evaluation::{
    compare_reports, cross_validate, eval_csv, eval_text, evaluate_holdout, experiment_csv, gs_experiment, CvConfig,
    EvalReport, ExperimentConfig,
};
use mixfan::selection::default_r_max;
use mixfan::{select_components, EmConfig, EmMode, ModelKind, ScoreKind};

use crate::args::*;
use crate::io::*;

pub const SEED_ENV: &str = "MIXFAN_SEED";

/// Seed from the flag, then the environment, then 0, with its source.
pub fn resolve_seed(flag: Option<u64>) -> CliResult<(u64, &'static str)> {
    if let Some(s) = flag {
        return Ok((s, "flag"));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(|s| (s, "env"))
            .or_else(|_| usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok((0, "default")),
    }
}

struct Header(String);

impl Header {
    fn new(command: &str) -> Self {
        Header(format!("# mixfan {command}"))
    }

    fn kv(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        let _ = write!(self.0, " {key}={value}");
        self
    }

    fn em(self, em: &EmArgs) -> Self {
        self.kv("em_tol", em.em_tol)
            .kv("em_max_iter", em.em_max_iter)
            .kv("restarts", em.restarts)
    }

    fn seed(self, (seed, source): (u64, &str)) -> Self {
        self.kv("seed", format!("{seed}({source})"))
    }
}

fn em_config(em: &EmArgs, seed: u64) -> CliResult<EmConfig> {
    let cfg = EmConfig {
        max_iterations: em.em_max_iter,
        tolerance: em.em_tol,
        restarts: em.restarts,
        seed,
        mode: if em.cem { EmMode::Cem } else { EmMode::Em },
    };
    cfg.validate().or_else(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn check_selection(sel: &SelectionArgs, em: &EmArgs) -> CliResult<()> {
    if sel.r_max == Some(0) {
        return usage("--r-max must be at least 1");
    }
    if em.cem && sel.score == ScoreKind::Cs {
        return usage("--score cs needs soft EM; drop --cem");
    }
    Ok(())
}

fn r_max_label(r_max: Option<usize>, n: usize) -> String {
    match r_max {
        Some(r) => r.to_string(),
        None => format!("{}(default)", default_r_max(n)),
    }
}

/// Effective mode: ICL always runs classification EM.
fn mode_label(score: ScoreKind, em: &EmArgs) -> &'static str {
    if em.cem || score == ScoreKind::Icl {
        "cem"
    } else {
        "em"
    }
}

fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    if let Some(p) = path {
        write_atomic(p, text.as_bytes())?;
    }
    say(text);
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    let seed = resolve_seed(cli.seed)?;
    match cli.command {
        Command::Train(a) => train(a, seed, &cli.missing),
        Command::Predict(a) => predict(a, &cli.missing),
        Command::Evaluate(a) => evaluate(a, seed, &cli.missing),
        Command::Simulate(a) => simulate(a, seed),
        Command::Discretize(a) => discretize(a, &cli.missing),
        Command::Sample(a) => sample(a, seed, &cli.missing),
    }
}

fn train(a: TrainArgs, seed: (u64, &'static str), missing: &str) -> CliResult<()> {
    require_file(&a.data.schema)?;
    require_file(&a.data.data)?;
    check_selection(&a.selection, &a.em)?;
    let cfg = em_config(&a.em, seed.0)?;
    let schema = read_schema(&a.data.schema)?;
    let ds = read_dataset(&a.data.data, &schema, missing)?;
    let sel = &a.selection;
    let result = select_components(&ds, sel.model, sel.score, sel.r_max, &cfg)?;

    let header = Header::new("train")
        .kv("data", a.data.data.display())
        .kv("cases", ds.len())
        .kv("model", sel.model)
        .kv("score", sel.score)
        .kv("r_max", r_max_label(sel.r_max, ds.len()))
        .em(&a.em)
        .kv("mode", mode_label(sel.score, &a.em))
        .seed(seed);
    let fit = &result.fit;
    let text = format!(
        "{}\n{}# selected r_h={} iterations={} stop={:?} fallbacks={} reseeds={}\n",
        header.0,
        result.table(),
        result.selected_r_h,
        fit.iterations,
        fit.stop,
        fit.gaussian_fallbacks,
        fit.reseeds
    );
    write_model(&a.out, &result.model)?;
    emit(&text, a.table.as_deref())?;
    say(&format!("# model written to {}\n", a.out.display()));
    Ok(())
}

fn predict(a: PredictArgs, missing: &str) -> CliResult<()> {
    require_file(&a.model_file)?;
    require_file(&a.data)?;
    let model = read_model(&a.model_file)?;
    let ds = read_dataset(&a.data, model.schema(), missing)?;
    let class = model.schema().class();
    let labels = class.labels();
    let mut out = String::from("row,actual,predicted");
    for l in labels {
        let _ = write!(out, ",p_{l}");
    }
    out.push('\n');
    for (i, case) in ds.cases().iter().enumerate() {
        let p = model.posterior(case)?;
        let actual = ds.class_of(i).map_or(missing, |c| labels[c].as_str());
        let _ = write!(out, "{},{actual},{}", i + 1, labels[p.predicted]);
        for q in &p.posterior {
            let _ = write!(out, ",{q}");
        }
        out.push('\n');
    }
    match &a.out {
        Some(p) => {
            write_atomic(p, out.as_bytes())?;
            say(&format!("# {} predictions written to {}\n", ds.len(), p.display()));
        }
        None => say(&out),
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs, seed: (u64, &'static str), missing: &str) -> CliResult<()> {
    check_selection(&a.selection, &a.em)?;
    let sel = &a.selection;
    let cfg = em_config(&a.em, seed.0)?;

    let (header, report, comparison) = match (a.cv, &a.holdout) {
        (Some(_), _) if a.model_file.is_some() => return usage("--model-file applies to hold-out evaluation only"),
        (Some(folds), _) => {
            let (Some(data), Some(schema)) = (&a.data, &a.schema) else {
                return usage("cross-validation needs --data and --schema");
            };
            require_file(schema)?;
            require_file(data)?;
            let ds = read_dataset(data, &read_schema(schema)?, missing)?;
            let mut cv = CvConfig::new(sel.model, sel.score, folds, seed.0);
            cv.r_max = sel.r_max;
            cv.em = cfg;
            cv.discretize = a.discretize;
            let report = cross_validate(&ds, &cv)?;
            let comparison = match a.compare {
                Some(other) => {
                    let other_report = cross_validate(&ds, &CvConfig { kind: other, ..cv.clone() })?;
                    Some(comparison_lines(sel.model, other, &report, &other_report)?)
                }
                None => None,
            };
            let header = Header::new("evaluate")
                .kv("data", data.display())
                .kv("cv", folds)
                .kv("model", sel.model)
                .kv("score", sel.score)
                .kv("r_max", sel.r_max.map_or("auto".to_string(), |r| r.to_string()))
                .kv("discretize", a.discretize)
                .em(&a.em)
                .kv("mode", mode_label(sel.score, &a.em))
                .seed(seed);
            (header, report, comparison)
        }
        (None, Some(test_path)) => {
            require_file(test_path)?;
            let (header, model) = match &a.model_file {
                Some(path) => {
                    require_file(path)?;
                    let header = Header::new("evaluate").kv("holdout", test_path.display()).kv("model_file", path.display());
                    (header, read_model(path)?)
                }
                None => {
                    let (Some(data), Some(schema)) = (&a.data, &a.schema) else {
                        return usage("hold-out evaluation needs --model-file, or --data and --schema to train on");
                    };
                    require_file(schema)?;
                    require_file(data)?;
                    let train = read_dataset(data, &read_schema(schema)?, missing)?;
                    let result = select_components(&train, sel.model, sel.score, sel.r_max, &cfg)?;
                    let header = Header::new("evaluate")
                        .kv("holdout", test_path.display())
                        .kv("data", data.display())
                        .kv("model", sel.model)
                        .kv("score", sel.score)
                        .kv("r_max", r_max_label(sel.r_max, train.len()))
                        .em(&a.em)
                        .kv("mode", mode_label(sel.score, &a.em))
                        .seed(seed)
                        .kv("selected_r_h", result.selected_r_h);
                    (header, result.model)
                }
            };
            let test = read_dataset(test_path, model.schema(), missing)?;
            (header, evaluate_holdout(&model, &test)?, None)
        }
        (None, None) if a.model_file.is_some() => return usage("hold-out evaluation needs a test file: pass --holdout"),
        (None, None) => return usage("pass --cv K or --holdout FILE"),
    };

    let mut text = format!("{}\n{}", header.0, eval_text(&report));
    if let Some(lines) = comparison {
        text.push_str(&lines);
    }
    emit(&text, a.report.as_deref())?;
    if let Some(path) = &a.csv {
        write_atomic(path, eval_csv(&report).as_bytes())?;
    }
    Ok(())
}

fn comparison_lines(a: ModelKind, b: ModelKind, ra: &EvalReport, rb: &EvalReport) -> CliResult<String> {
    let cmp = compare_reports(format!("{a}-vs-{b}"), ra, rb)?;
    let mut out = format!("# comparison {a} vs {b} on the same folds\n");
    let rows = [
        (format!("accuracy_{a}"), format!("{:.6}", cmp.accuracy_a)),
        (format!("accuracy_{b}"), format!("{:.6}", cmp.accuracy_b)),
        ("difference".into(), format!("{:+.6}", cmp.difference())),
        ("mcnemar_z".into(), format!("{:.6}", cmp.test.statistic)),
        ("mcnemar_p".into(), format!("{:.6}", cmp.test.p_value)),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<14}{v}");
    }
    Ok(out)
}

fn simulate(a: SimulateArgs, seed: (u64, &'static str)) -> CliResult<()> {
    require_file(&a.gs)?;
    if a.r_max == Some(0) {
        return usage("--r-max must be at least 1");
    }
    if a.em.cem && a.score == ScoreKind::Cs {
        return usage("--score cs needs soft EM; drop --cem");
    }
    let gs = read_model(&a.gs)?;
    let mut cfg = ExperimentConfig::new(a.score, a.reps, seed.0);
    cfg.train_sizes = a.train_sizes.clone();
    cfg.test_size = a.test_size;
    cfg.kind = a.model;
    cfg.r_max = a.r_max;
    cfg.em = em_config(&a.em, seed.0)?;
    let table = gs_experiment(&gs, &cfg)?;
    write_atomic(&a.out, experiment_csv(&table).as_bytes())?;

    let sizes: Vec<String> = a.train_sizes.iter().map(|s| s.to_string()).collect();
    let header = Header::new("simulate")
        .kv("gs", a.gs.display())
        .kv("true_r_h", table.true_r_h)
        .kv("model", a.model.unwrap_or(gs.kind()))
        .kv("train_sizes", sizes.join(","))
        .kv("test_size", a.test_size)
        .kv("reps", a.reps)
        .kv("score", a.score)
        .kv("r_max", a.r_max.map_or("auto".to_string(), |r| r.to_string()))
        .em(&a.em)
        .kv("mode", mode_label(a.score, &a.em))
        .seed(seed);
    let failed = table.rows.iter().filter(|r| !r.is_ok()).count();
    let mut text = format!("{}\nrows          {}\nfailed_rows   {failed}\n", header.0, table.rows.len());
    if a.reps < 2 {
        text.push_str("# correlation skipped: needs at least two replications per size\n");
    } else {
        match table.correlation() {
            Ok(t) => {
                let _ = write!(
                    text,
                    "spearman_rho  {:.6}\np_value       {:.6e}\nmethod        {}\n",
                    t.statistic, t.p_value, t.method
                );
            }
            Err(e) => {
                let _ = writeln!(text, "# correlation unavailable: {e}");
            }
        }
    }
    emit(&text, a.summary.as_deref())?;
    say(&format!("# experiment table written to {}\n", a.out.display()));
    Ok(())
}

fn discretize(a: DiscretizeArgs, missing: &str) -> CliResult<()> {
    require_file(&a.data.schema)?;
    require_file(&a.data.data)?;
    if let Some(map) = &a.apply {
        require_file(map)?;
    }
    let schema = read_schema(&a.data.schema)?;
    let ds = read_dataset(&a.data.data, &schema, missing)?;
    if schema.continuous_indices().is_empty() {
        eprintln!("warning: {} has no continuous variables; output is unchanged", a.data.schema.display());
        write_dataset(&a.out_data, &ds, missing)?;
        write_atomic(&a.out_schema, schema.to_json().as_bytes())?;
        return Ok(());
    }
    let map = match &a.apply {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Pipeline(format!("{}: {e}", path.display())))?;
            DiscretizationMap::from_json(&text).map_err(|e| CliError::Pipeline(format!("{}: {e}", path.display())))?
        }
        None => fit_discretization(&ds)?,
    };
    let out = apply_discretization(&ds, &map)?;
    write_dataset(&a.out_data, &out, missing)?;
    write_atomic(&a.out_schema, out.schema().to_json().as_bytes())?;
    if a.apply.is_none() {
        if let Some(path) = &a.out_map {
            write_atomic(path, map.to_json().as_bytes())?;
        }
    }
    let mut header = Header::new("discretize").kv("data", a.data.data.display());
    if let Some(path) = &a.apply {
        header = header.kv("apply", path.display());
    }
    say(&format!("{}\n", header.0));
    for v in &map.variables {
        say(&format!("{:<16} bins={} cuts={:?}\n", v.variable, v.bin_count(), v.cuts));
    }
    Ok(())
}

fn sample(a: SampleArgs, seed: (u64, &'static str), missing: &str) -> CliResult<()> {
    require_file(&a.model_file)?;
    if a.n == 0 {
        return usage("--n must be positive");
    }
    let model = read_model(&a.model_file)?;
    let ds = model.sample(a.n, seed.0)?;
    write_dataset(&a.out, &ds, missing)?;
    let header = Header::new("sample").kv("model_file", a.model_file.display()).kv("n", a.n).seed(seed);
    say(&format!("{}\n# cases written to {}\n", header.0, a.out.display()));
    Ok(())
}
