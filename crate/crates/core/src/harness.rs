//! Experiment plumbing behind the CLI: canonical JSON I/O for models,
//! oracles, and trees; plain-text report rendering with a JSON sidecar; and
//! the benchmark commands (Table-2 reproduction, the synthetic Gaussian
//! benchmark, feature selection).

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::model::{
    synth_model, ClassModel, ModelSampler, Observation, Scope, SynthSpec, WeightVariant,
};
use crate::set::{GroundSet, SetFunction, Subset};
use crate::sfm::{Engine, MinimizationResult};
use crate::ssp::{ssp_minimize, SspOptions};
use crate::tree::{
    chow_liu_tree, complete_classifier, error_on_samples, evaluate_error, fit_tree_classifier,
    make_discriminative_tree, naive_bayes_classifier, random_tree, DiscTreeOptions, EvalMethod,
    TreeStructure,
};

/// One line of a report: a label, raw values, and their display strings.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub values: Vec<f64>,
    pub printed: Vec<String>,
}

/// A rendered experiment result: aligned text for humans plus a
/// JSON-serializable structure for machines. All error values are exact or
/// Monte-Carlo rates in [0, 1]; display strings are fixed at build time so
/// reports are byte-identical across runs and platforms.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub title: String,
    pub config: serde_json::Value,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl RunReport {
    fn new(title: impl Into<String>, config: serde_json::Value, columns: &[&str]) -> Self {
        RunReport {
            title: title.into(),
            config,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
            wall_time_s: 0.0,
            details: None,
        }
    }

    fn push_row(&mut self, label: impl Into<String>, values: Vec<f64>, printed: Vec<String>) {
        debug_assert_eq!(values.len(), self.columns.len());
        debug_assert_eq!(printed.len(), self.columns.len());
        self.rows.push(ReportRow {
            label: label.into(),
            values,
            printed,
        });
    }

    /// Aligned plain-text table.
    pub fn render_text(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        let mut label_width = 0usize;
        for row in &self.rows {
            label_width = label_width.max(row.label.len());
            for (w, p) in widths.iter_mut().zip(&row.printed) {
                *w = (*w).max(p.len());
            }
        }
        let mut out = String::new();
        out.push_str(&self.title);
        out.push('\n');
        let mut header = format!("{:<label_width$}", "");
        for (c, w) in self.columns.iter().zip(&widths) {
            header.push_str(&format!("  {c:>w$}"));
        }
        out.push_str(header.trim_end());
        out.push('\n');
        for row in &self.rows {
            let mut line = format!("{:<label_width$}", row.label);
            for (p, w) in row.printed.iter().zip(&widths) {
                line.push_str(&format!("  {p:>w$}"));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        for note in &self.notes {
            out.push_str("note: ");
            out.push_str(note);
            out.push('\n');
        }
        out.push_str(&format!("wall time: {:.3}s\n", self.wall_time_s));
        out
    }

    pub fn to_json_string(&self) -> String {
        canonical_json(self)
    }
}

/// Truncates toward zero at three decimals — the convention under which
/// 0.4375 prints as 0.437.
pub fn truncate3(x: f64) -> String {
    format!("{:.3}", (x * 1000.0).trunc() / 1000.0)
}

fn fixed(x: f64, decimals: usize) -> String {
    format!("{x:.decimals$}")
}

/// Canonical JSON rendering: pretty-printed, struct key order, shortest
/// round-trip floats, trailing newline. Writing the same value twice is
/// byte-identical.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize infallibly");
    s.push('\n');
    s
}

/// Loads and validates a class model; returns the model with any non-fatal
/// warnings (e.g. per-variable variances differing across classes).
pub fn load_model(path: &Path) -> Result<(ClassModel, Vec<String>)> {
    let text = fs::read_to_string(path)?;
    let model: ClassModel = serde_json::from_str(&text)?;
    let warnings = model.validate()?;
    Ok((model, warnings))
}

/// Writes a model in canonical form; save → load → save is byte-identical.
pub fn save_model(path: &Path, model: &ClassModel) -> Result<()> {
    fs::write(path, canonical_json(model))?;
    Ok(())
}

pub fn load_tree(path: &Path) -> Result<TreeStructure> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// A set-function oracle file: either an explicit table
/// {"n": k, "values": [2^k reals indexed by bitmask]} or a class-model file,
/// which is interpreted as its mixture entropy oracle (submodular for both
/// families).
#[derive(Deserialize)]
#[serde(untagged)]
enum OracleFile {
    Table { n: usize, values: Vec<f64> },
    Model(ClassModel),
}

pub fn load_oracle(path: &Path) -> Result<SetFunction> {
    let text = fs::read_to_string(path)?;
    let parsed: OracleFile = serde_json::from_str(&text).map_err(|e| {
        validation(format!(
            "{} is neither an explicit-table oracle nor a model file: {e}",
            path.display()
        ))
    })?;
    match parsed {
        OracleFile::Table { n, values } => {
            if values.len() != 1usize << n {
                return Err(validation(format!(
                    "oracle file declares n={n} but carries {} values, expected {}",
                    values.len(),
                    1usize << n
                )));
            }
            SetFunction::from_table(values)
        }
        OracleFile::Model(model) => {
            model.validate()?;
            model.entropy_oracle(Scope::Mixture)
        }
    }
}

/// The Table-1 fixture compiled into the binary, so `repro table2` needs no
/// files at run time.
pub fn table1_model() -> ClassModel {
    let model: ClassModel = serde_json::from_str(include_str!("../fixtures/table1_corrected.json"))
        .expect("embedded fixture parses");
    model.validate().expect("embedded fixture is valid");
    model
}

/// Exact asymptotic error rates of the four classifiers on the Table-1
/// model: the complete model, the Chow–Liu chain, the discriminative tree,
/// and naive Bayes.
pub fn cmd_repro_table2() -> Result<RunReport> {
    let start = Instant::now();
    let model = table1_model();

    let complete = complete_classifier(&model)?;
    let gen_tree = chow_liu_tree(&model.mi_edge_weights(WeightVariant::ConditionalMi)?)?;
    let generative = fit_tree_classifier(&model, &gen_tree)?;
    let disc_tree = make_discriminative_tree(&model, &DiscTreeOptions::default())?;
    let discriminative = fit_tree_classifier(&model, &disc_tree)?;
    let naive = naive_bayes_classifier(&model)?;

    let mut report = RunReport::new(
        "asymptotic classification error (3-variable two-class model)",
        serde_json::json!({ "fixture": "table1_corrected", "evaluation": "exact" }),
        &["error", "exact"],
    );
    for (label, clf) in [
        ("Complete", &complete),
        ("Generative", &generative),
        ("Discriminative", &discriminative),
        ("Naive Bayes", &naive),
    ] {
        let err = evaluate_error(&model, clf, &EvalMethod::Exact)?;
        debug_assert!((0.0..=1.0).contains(&err));
        report.push_row(label, vec![err, err], vec![truncate3(err), format!("{err}")]);
    }
    report
        .notes
        .push(format!("generative tree: {:?}", gen_tree.edges));
    report
        .notes
        .push(format!("discriminative tree: {:?}", disc_tree.edges));
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Generates the synthetic two-class Gaussian model and writes it to `out`.
pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let gaussian = synth_model(spec)?;
    let model = ClassModel::Gaussian(gaussian);
    let warnings = model.validate()?;
    save_model(out, &model)?;

    let mut report = RunReport::new(
        "synthetic two-class Gaussian model",
        serde_json::to_value(spec).expect("spec serializes"),
        &["corner covariance", "min eigenvalue"],
    );
    if let ClassModel::Gaussian(g) = &model {
        for (c, cov) in g.covariances.iter().enumerate() {
            let corner = cov[0][spec.n - 1];
            let mat = nalgebra::DMatrix::from_fn(spec.n, spec.n, |i, j| cov[i][j]);
            let min_eig = mat
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            report.push_row(
                format!("class {}", c + 1),
                vec![corner, min_eig],
                vec![fixed(corner, 6), fixed(min_eig, 6)],
            );
        }
    }
    report.notes.extend(warnings);
    report.notes.push(format!("written to {}", out.display()));
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Configuration of the synthetic benchmark sweep.
#[derive(Debug, Clone, Serialize)]
pub struct Table3Config {
    pub n_list: Vec<usize>,
    /// Seeds 0..seeds per n.
    pub seeds: u64,
    /// Training samples drawn per class for covariance estimation.
    pub train: usize,
    /// Test samples drawn from the class mixture.
    pub test: usize,
}

impl Default for Table3Config {
    fn default() -> Self {
        Table3Config {
            n_list: vec![6, 7, 8, 9, 10],
            seeds: 10,
            train: 2000,
            test: 2000,
        }
    }
}

/// One (n, seed) run of the synthetic benchmark.
#[derive(Debug, Clone, Serialize)]
pub struct Table3Cell {
    pub n: usize,
    pub seed: u64,
    pub complete: f64,
    pub discriminative: f64,
    pub generative: f64,
    pub naive_bayes: f64,
    pub best_random: f64,
    pub avg_random: f64,
    /// Binomial standard deviation of one Monte-Carlo error estimate in
    /// this cell, at the discriminative/generative error level.
    pub mc_sigma: f64,
    pub wall_time_s: f64,
}

pub struct Table3Outcome {
    pub report: RunReport,
    pub cells: Vec<Table3Cell>,
}

fn table3_cell(n: usize, seed: u64, cfg: &Table3Config) -> Result<Table3Cell> {
    use rand::SeedableRng;
    let start = Instant::now();
    let cell_seed = n as u64 * 1000 + seed;
    let spec = SynthSpec {
        n,
        seed: cell_seed,
        ..SynthSpec::default()
    };
    let truth = ClassModel::Gaussian(synth_model(&spec)?);
    let sampler = ModelSampler::new(&truth)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cell_seed);

    // Estimate per-class covariances from cfg.train draws per class.
    let mut covariances = Vec::with_capacity(2);
    for c in 0..truth.class_count() {
        let draws: Vec<Vec<f64>> = (0..cfg.train)
            .map(|_| match sampler.sample_given_class(c, &mut rng).1 {
                Observation::Continuous(x) => x,
                Observation::Discrete(_) => unreachable!("synthetic models are Gaussian"),
            })
            .collect();
        covariances.push(crate::model::sample_covariance_zero_mean(&draws, n)?);
    }
    let estimated = ClassModel::Gaussian(crate::model::GaussianClassModel::new(
        n,
        truth.class_priors().to_vec(),
        covariances,
    )?);

    // Structures learned from the estimated model.
    let gen_tree = chow_liu_tree(&estimated.mi_edge_weights(WeightVariant::ConditionalMi)?)?;
    let disc_opts = DiscTreeOptions {
        ssp: SspOptions {
            engine: Engine::Brute,
            seed: cell_seed ^ 0xD15C,
            restarts: 4,
            local_search_radius: 1,
            ..SspOptions::default()
        },
        ..DiscTreeOptions::default()
    };
    let disc_tree = make_discriminative_tree(&estimated, &disc_opts)?;

    // Fresh test draws from the true mixture, shared by every classifier.
    let test_set: Vec<(usize, Observation)> =
        (0..cfg.test).map(|_| sampler.sample(&mut rng)).collect();

    let complete = error_on_samples(&complete_classifier(&estimated)?, &test_set)?;
    let discriminative =
        error_on_samples(&fit_tree_classifier(&estimated, &disc_tree)?, &test_set)?;
    let generative = error_on_samples(&fit_tree_classifier(&estimated, &gen_tree)?, &test_set)?;
    let naive_bayes = error_on_samples(&naive_bayes_classifier(&estimated)?, &test_set)?;

    let mut random_errors = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let tree = random_tree(n, cell_seed.wrapping_mul(131).wrapping_add(i))?;
        random_errors.push(error_on_samples(
            &fit_tree_classifier(&estimated, &tree)?,
            &test_set,
        )?);
    }
    let best_random = random_errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let avg_random = random_errors.iter().sum::<f64>() / random_errors.len() as f64;

    let rate = 0.5 * (discriminative + generative);
    let mc_sigma = (rate * (1.0 - rate) / cfg.test as f64).sqrt();

    Ok(Table3Cell {
        n,
        seed,
        complete,
        discriminative,
        generative,
        naive_bayes,
        best_random,
        avg_random,
        mc_sigma,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs the synthetic benchmark over every (n, seed) cell in parallel and
/// aggregates per-n means plus a pooled summary. The protocol per cell:
/// generate the true model, estimate class covariances from training draws,
/// learn generative (Chow–Liu, class-conditional MI weights) and
/// discriminative (recursive EAR split) trees from the estimate, then score
/// complete/tree/naive-Bayes/random-tree classifiers on one shared test set.
pub fn cmd_table3(cfg: &Table3Config) -> Result<Table3Outcome> {
    if cfg.n_list.is_empty() || cfg.seeds == 0 {
        return Err(validation("benchmark needs at least one n and one seed"));
    }
    if cfg.n_list.iter().any(|&n| !(2..=20).contains(&n)) {
        return Err(validation("benchmark sizes must lie in 2..=20"));
    }
    let start = Instant::now();
    let pairs: Vec<(usize, u64)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.seeds).map(move |s| (n, s)))
        .collect();
    let cells: Vec<Table3Cell> = pairs
        .par_iter()
        .map(|&(n, s)| table3_cell(n, s, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut report = RunReport::new(
        "synthetic Gaussian benchmark (Monte-Carlo error rates, mean over seeds)",
        serde_json::to_value(cfg).expect("config serializes"),
        &[
            "complete",
            "discriminative",
            "generative",
            "naive-bayes",
            "best-random",
            "avg-random",
            "seconds",
        ],
    );
    let mean =
        |sel: &dyn Fn(&Table3Cell) -> f64, group: &[&Table3Cell]| -> f64 {
            group.iter().map(|c| sel(*c)).sum::<f64>() / group.len() as f64
        };
    let columns: [&dyn Fn(&Table3Cell) -> f64; 7] = [
        &|c| c.complete,
        &|c| c.discriminative,
        &|c| c.generative,
        &|c| c.naive_bayes,
        &|c| c.best_random,
        &|c| c.avg_random,
        &|c| c.wall_time_s,
    ];
    for &n in &cfg.n_list {
        let group: Vec<&Table3Cell> = cells.iter().filter(|c| c.n == n).collect();
        let values: Vec<f64> = columns.iter().map(|sel| mean(sel, &group)).collect();
        let printed = values
            .iter()
            .enumerate()
            .map(|(i, v)| if i == 6 { fixed(*v, 2) } else { fixed(*v, 4) })
            .collect();
        report.push_row(format!("n={n}"), values, printed);
    }
    let all: Vec<&Table3Cell> = cells.iter().collect();
    let pooled: Vec<f64> = columns.iter().map(|sel| mean(sel, &all)).collect();
    let printed = pooled
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 6 { fixed(*v, 2) } else { fixed(*v, 4) })
        .collect();
    report.push_row("pooled", pooled.clone(), printed);

    // Pooled-mean noise: each cell's error estimates are independent, so the
    // variance of a pooled mean difference is the sum of per-cell binomial
    // variances (twice, for the two methods) over cells².
    let pooled_sigma = (2.0 * cells.iter().map(|c| c.mc_sigma * c.mc_sigma).sum::<f64>()).sqrt()
        / cells.len() as f64;
    report.notes.push(format!(
        "pooled discriminative-vs-generative margin: {:.4} (2σ Monte-Carlo noise {:.4})",
        pooled[2] - pooled[1],
        2.0 * pooled_sigma
    ));
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(Table3Outcome { report, cells })
}

/// Configuration of the feature-selection command.
#[derive(Debug, Clone)]
pub struct FeatselConfig {
    pub k: f64,
    pub maximize: bool,
    pub ssp: SspOptions,
}

pub struct FeatselOutcome {
    pub report: RunReport,
    pub result: MinimizationResult,
    pub certified: bool,
}

/// Optimizes the feature-selection objective g − k·c over proper non-empty
/// subsets: minimized as printed, or maximized (equivalently, k·c − g
/// minimized) with `maximize`. Both directions are differences of submodular
/// functions, so SSP applies with the arguments swapped. The returned set is
/// always 1-exchange certified.
pub fn cmd_featsel(g: &SetFunction, c: &SetFunction, cfg: &FeatselConfig) -> Result<FeatselOutcome> {
    let start = Instant::now();
    if cfg.k < 0.0 || !cfg.k.is_finite() {
        return Err(validation(format!(
            "cost multiplier k must be a finite non-negative real, got {}",
            cfg.k
        )));
    }
    if g.ground().len() != c.ground().len() {
        return Err(validation(format!(
            "oracle size mismatch: g has {} elements, c has {}",
            g.ground().len(),
            c.ground().len()
        )));
    }
    let scaled_cost = c.scaled(cfg.k);
    let mut opts = cfg.ssp.clone();
    opts.local_search_radius = opts.local_search_radius.max(1);
    let (result, trace) = if cfg.maximize {
        ssp_minimize(&scaled_cost, g, &opts)?
    } else {
        ssp_minimize(g, &scaled_cost, &opts)?
    };
    let a = result.minimizer;
    let info = g.eval(a);
    let cost = c.eval(a);
    let objective = info - cfg.k * cost;
    let certified = trace.certified.unwrap_or(false);

    let mut report = RunReport::new(
        "feature selection: g − k·c over proper non-empty subsets",
        serde_json::json!({
            "k": cfg.k,
            "direction": if cfg.maximize { "maximize" } else { "minimize" },
            "engine": format!("{}", opts.engine),
            "restarts": opts.restarts,
            "seed": opts.seed,
        }),
        &["g(A)", "c(A)", "g−k·c", "|A|"],
    );
    report.push_row(
        "selected",
        vec![info, cost, objective, a.card() as f64],
        vec![
            fixed(info, 6),
            fixed(cost, 6),
            fixed(objective, 6),
            format!("{}", a.card()),
        ],
    );
    let members: Vec<usize> = a.members().collect();
    report
        .notes
        .push(format!("selected set: {members:?} (bitmask {:#x})", a.0));
    report.notes.push(format!(
        "1-exchange locally optimal: {}",
        if certified { "yes" } else { "no" }
    ));
    if cfg.k == 0.0 && !cfg.maximize {
        report.notes.push(
            "k = 0 minimizes the information term alone, which favors trivially \
             uninformative sets; pass --maximize if you meant the most informative set"
                .to_string(),
        );
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(FeatselOutcome {
        report,
        result,
        certified,
    })
}

/// Parses a size list like "6,7,8", accepting an ellipsis between anchors:
/// "5,6,...,15" expands to 5..=15.
pub fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    let tokens: Vec<&str> = text.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if tokens.is_empty() {
        return Err(validation("empty size list"));
    }
    let mut out: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i] == "..." || tokens[i] == ".." {
            let prev = *out
                .last()
                .ok_or_else(|| validation("size list cannot start with an ellipsis"))?;
            let next_tok = tokens
                .get(i + 1)
                .ok_or_else(|| validation("size list cannot end with an ellipsis"))?;
            let next: usize = next_tok
                .parse()
                .map_err(|_| validation(format!("invalid size '{next_tok}'")))?;
            if next <= prev {
                return Err(validation(format!(
                    "ellipsis needs ascending anchors, got {prev} before {next}"
                )));
            }
            out.extend(prev + 1..=next);
            i += 2;
        } else {
            let v: usize = tokens[i]
                .parse()
                .map_err(|_| validation(format!("invalid size '{}'", tokens[i])))?;
            out.push(v);
            i += 1;
        }
    }
    Ok(out)
}

/// Parses the edge-weight variant argument: mi | cmi | classwise:<c> with a
/// 1-based class index.
pub fn parse_weight_variant(text: &str) -> Result<WeightVariant> {
    match text {
        "mi" => Ok(WeightVariant::MarginalMi),
        "cmi" => Ok(WeightVariant::ConditionalMi),
        other => {
            if let Some(idx) = other.strip_prefix("classwise:") {
                let c: usize = idx
                    .parse()
                    .map_err(|_| validation(format!("invalid class index '{idx}'")))?;
                if c == 0 {
                    return Err(validation("class indices are 1-based; use classwise:1"));
                }
                Ok(WeightVariant::Classwise(c - 1))
            } else {
                Err(validation(format!(
                    "unknown weight variant '{other}', expected mi|cmi|classwise:<c>"
                )))
            }
        }
    }
}

/// Subset report used by the `ssp min` command output.
#[derive(Debug, Serialize)]
pub struct SspRunSummary {
    pub minimizer_bitmask: u64,
    pub minimizer: Vec<usize>,
    pub value: f64,
    pub engine: String,
    pub evaluations: u64,
    pub certified: Option<bool>,
}

pub fn describe_ssp_result(
    result: &MinimizationResult,
    certified: Option<bool>,
) -> SspRunSummary {
    SspRunSummary {
        minimizer_bitmask: result.minimizer.0,
        minimizer: result.minimizer.members().collect(),
        value: result.value,
        engine: format!("{}", result.engine),
        evaluations: result.evaluations,
        certified,
    }
}

/// A small explicit-table oracle file writer, used by tests and examples.
pub fn save_oracle_table(path: &Path, ground: &GroundSet, f: &SetFunction) -> Result<()> {
    let n = ground.len();
    if n > 16 {
        return Err(validation("explicit tables support at most 16 elements"));
    }
    let values: Vec<f64> = (0..1u64 << n).map(|m| f.eval(Subset(m))).collect();
    let doc = serde_json::json!({ "n": n, "values": values });
    fs::write(path, canonical_json(&doc))?;
    Ok(())
}
