//! `ecfilter`: spectrum statistics, histograms, random-graph
//! concentration tables, filter-learning experiments, and the spectral
//! classifier, all as reproducible subcommands.

mod config;

use clap::{ArgAction, Args, Parser, Subcommand};
use config::{parse_basis, parse_method, ClassifyFileConfig, ClassifySettings, FitFileConfig};
use ecfilter::correction::correct;
use ecfilter::filters::TargetFilterKind;
use ecfilter::graph::Graph;
use ecfilter::learning::{
    beta_sweep, community_features, random_split, run_filter_experiment, train_classifier,
    ClassifierConfig, FilterExperimentConfig, LabeledDataset,
};
use ecfilter::spectral::{count_distinct, eigendecompose, eigenvalues_only, spectrum_histogram};
use ecfilter::{Error, Result};
use std::io::Read;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "ecfilter",
    about = "Spectral graph filtering with eigenvalue correction",
    version
)]
struct Cli {
    /// Pin all seeds and suppress timestamps/timing for reproducible
    /// output (pass `--deterministic false` for wall-clock numbers).
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    deterministic: bool,

    /// Directory for output files; results go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format for files and stdout dumps.
    #[arg(long, global = true, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphSource {
    /// Edge-list file; `-` reads from stdin.
    #[arg(long)]
    graph: Option<String>,

    /// Grid graph `RxC`, e.g. `16x16`.
    #[arg(long)]
    grid: Option<String>,

    /// Erdos-Renyi graph `n,avg_degree`, e.g. `1000,5`.
    #[arg(long)]
    er: Option<String>,

    /// Node-count hint for edge-list inputs.
    #[arg(long)]
    n_hint: Option<usize>,
}

impl GraphSource {
    fn load(&self, seed: u64) -> Result<Graph> {
        let picked = u8::from(self.graph.is_some())
            + u8::from(self.grid.is_some())
            + u8::from(self.er.is_some());
        if picked != 1 {
            return Err(Error::InvalidParameter(
                "exactly one of --graph, --grid, --er is required".into(),
            ));
        }
        if let Some(path) = &self.graph {
            let text = if path == "-" {
                let mut buf = String::new();
                std::io::stdin().read_to_string(&mut buf)?;
                buf
            } else {
                std::fs::read_to_string(path)?
            };
            return Graph::from_edge_list(&text, self.n_hint);
        }
        if let Some(spec) = &self.grid {
            let (rows, cols) = parse_grid(spec)?;
            return Graph::grid(rows, cols);
        }
        let (n, degree) = parse_er(self.er.as_deref().expect("checked above"))?;
        Ok(Graph::erdos_renyi(n, degree, seed)?.0)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Distinct-eigenvalue statistics of the normalized Laplacian.
    Stats {
        #[command(flatten)]
        source: GraphSource,
        /// Absolute tolerance for merging near-equal eigenvalues.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Eigenvalue-distribution histogram over [0, 2].
    Hist {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Spectrum concentration near 1 for random graphs of varying degree.
    RandomSpectrum {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Comma-separated average degrees, e.g. `2,10,100`.
        #[arg(long, default_value = "2,10,100")]
        degrees: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// The synthetic filter-learning experiment.
    FitFilter {
        /// JSON config file; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to one basis: gpr, bern, or jacobi.
        #[arg(long)]
        basis: Option<String>,
        /// Jacobi parameters `a,b`.
        #[arg(long)]
        jacobi_ab: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        /// Comma-separated beta values, e.g. `0,0.2,0.5`.
        #[arg(long)]
        beta_grid: Option<String>,
        /// Comma-separated targets, e.g. `band,reject,comb`.
        #[arg(long)]
        targets: Option<String>,
        /// Grid `RxC`.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        images: Option<usize>,
        /// Fit method: gd (training protocol) or ls (closed form).
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Add a least-squares oracle column to every record.
        #[arg(long, action = ArgAction::SetTrue)]
        oracle: bool,
    },
    /// Train the spectral classifier (synthetic SBM or dataset files).
    Classify {
        /// JSON config file; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        basis: Option<String>,
        #[arg(long)]
        jacobi_ab: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        /// Comma-separated beta values for `--beta-sweep`.
        #[arg(long)]
        beta_grid: Option<String>,
        /// Sweep beta and emit a `beta,accuracy` table.
        #[arg(long, action = ArgAction::SetTrue)]
        beta_sweep: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(if err.is_numeric() { 3 } else { 2 });
    }
}

fn run(cli: Cli) -> Result<()> {
    let sink = OutputSink {
        out: cli.out.clone(),
        format: cli.format.clone(),
        deterministic: cli.deterministic,
    };
    match cli.command {
        Command::Stats { source, tol, seed } => {
            if tol < 0.0 {
                return Err(Error::InvalidParameter("tol must be non-negative".into()));
            }
            let graph = source.load(effective_seed(seed, cli.deterministic))?;
            let values = eigenvalues_only(&graph.normalized_operators().lap_norm)?;
            let stats = count_distinct(values.as_slice().expect("contiguous"), tol);
            println!(
                "n={}, distinct={}, p={:.1}%",
                stats.n_total,
                stats.n_distinct,
                100.0 * stats.p_distinct
            );
            let csv = format!(
                "n_total,n_distinct,p_distinct,multiplicity_at_one\n{},{},{},{}\n",
                stats.n_total, stats.n_distinct, stats.p_distinct, stats.multiplicity_at_one
            );
            let json = serde_json::to_value(&stats)?;
            sink.emit("stats", &csv, &json, false)
        }
        Command::Hist { source, bins, seed } => {
            if bins == 0 {
                return Err(Error::InvalidParameter("bins must be >= 1".into()));
            }
            let graph = source.load(effective_seed(seed, cli.deterministic))?;
            let values = eigenvalues_only(&graph.normalized_operators().lap_norm)?;
            let hist = spectrum_histogram(values.as_slice().expect("contiguous"), bins)?;
            let json = serde_json::json!({
                "bin_edges": hist.bin_edges,
                "densities": hist.densities,
            });
            sink.emit("hist", &hist.to_csv(), &json, true)
        }
        Command::RandomSpectrum { n, degrees, seed } => {
            let degrees = parse_f64_list(&degrees, "--degrees")?;
            if degrees.is_empty() {
                return Err(Error::InvalidParameter("--degrees is empty".into()));
            }
            let seed = effective_seed(seed, cli.deterministic);
            let mut csv = String::from("degree,fraction_in_band,repaired\n");
            let mut rows = Vec::new();
            for &degree in &degrees {
                let (graph, repaired) = Graph::erdos_renyi(n, degree, seed)?;
                let values = eigenvalues_only(&graph.normalized_operators().lap_norm)?;
                let in_band = values.iter().filter(|v| (0.9..=1.1).contains(*v)).count();
                let fraction = in_band as f64 / values.len() as f64;
                csv.push_str(&format!("{degree},{fraction},{repaired}\n"));
                rows.push(serde_json::json!({
                    "degree": degree,
                    "fraction_in_band": fraction,
                    "repaired": repaired,
                }));
            }
            sink.emit("random_spectrum", &csv, &serde_json::json!(rows), true)
        }
        Command::FitFilter {
            config,
            basis,
            jacobi_ab,
            order,
            beta_grid,
            targets,
            grid,
            images,
            method,
            seed,
            oracle,
        } => {
            let mut experiment = FilterExperimentConfig::default();
            if let Some(path) = config {
                FitFileConfig::load(&path)?.apply(&mut experiment)?;
            }
            let jacobi_ab = jacobi_ab.as_deref().map(parse_pair).transpose()?;
            if let Some(label) = basis {
                experiment.bases = vec![parse_basis(&label, jacobi_ab)?];
            } else if let Some((a, b)) = jacobi_ab {
                for basis in experiment.bases.iter_mut() {
                    if matches!(basis, ecfilter::filters::BasisKind::Jacobi { .. }) {
                        *basis = ecfilter::filters::BasisKind::Jacobi { a, b };
                    }
                }
            }
            if let Some(k) = order {
                experiment.order = k;
            }
            if let Some(list) = beta_grid {
                experiment.beta_grid = parse_f64_list(&list, "--beta-grid")?;
            }
            if let Some(list) = targets {
                experiment.kinds = list
                    .split(',')
                    .map(|t| t.trim().parse::<TargetFilterKind>())
                    .collect::<Result<_>>()?;
            }
            if let Some(spec) = grid {
                let (rows, cols) = parse_grid(&spec)?;
                experiment.rows = rows;
                experiment.cols = cols;
            }
            if let Some(m) = images {
                experiment.images = m;
            }
            if let Some(m) = method {
                experiment.method = parse_method(&m)?;
            }
            if let Some(s) = seed {
                experiment.seed = s;
            }
            experiment.oracle_column = oracle;
            experiment.validate()?;

            let report = run_filter_experiment(&experiment)?;
            for s in &report.summaries {
                println!(
                    "target={} basis={} baseline_mse={:.6e} best_beta={} best_mse={:.6e} improvement={:.1}%",
                    s.target, s.basis, s.baseline_mse, s.best_beta, s.best_mse, s.improvement_pct
                );
            }
            let with_timing = !cli.deterministic;
            sink.emit_report(
                "fit_filter",
                &report.to_csv(with_timing),
                &report.to_json(with_timing),
            )
        }
        Command::Classify {
            config,
            basis,
            jacobi_ab,
            order,
            beta,
            beta_grid,
            beta_sweep: sweep,
            seed,
        } => {
            let mut settings = ClassifySettings::default();
            if let Some(path) = config {
                settings.apply_file(ClassifyFileConfig::load(&path)?)?;
            }
            if let Some(label) = basis {
                settings.basis_label = label;
            }
            if let Some(ab) = jacobi_ab {
                settings.jacobi_ab = Some(parse_pair(&ab)?);
            }
            if let Some(k) = order {
                settings.order = k;
            }
            if let Some(b) = beta {
                settings.beta = b;
            }
            if let Some(list) = beta_grid {
                settings.beta_grid = parse_f64_list(&list, "--beta-grid")?;
            }
            if let Some(s) = seed {
                settings.seed = s;
            }
            run_classify(&settings, sweep, &sink, cli.deterministic)
        }
    }
}

fn run_classify(
    settings: &ClassifySettings,
    sweep: bool,
    sink: &OutputSink,
    deterministic: bool,
) -> Result<()> {
    let basis = settings.basis()?;
    if !(0.0..=1.0).contains(&settings.beta) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in [0, 1], got {}",
            settings.beta
        )));
    }
    let classifier = ClassifierConfig {
        basis,
        order: settings.order,
        learning_rate: settings.learning_rate,
        max_iters: settings.max_iters,
        patience: settings.patience,
        seed: settings.seed,
        nonneg: settings.nonneg,
    };

    // Dataset: explicit files win; otherwise a seeded two-block SBM with
    // noisy community-indicator features and a shuffled split.
    let (graph, ds) = if let Some(files) = &settings.dataset_files {
        let edge_list = settings.edge_list.as_ref().ok_or_else(|| {
            Error::InvalidParameter("dataset_files requires edge_list for the graph".into())
        })?;
        let text = std::fs::read_to_string(edge_list)?;
        let graph = Graph::from_edge_list(&text, settings.n_hint)?;
        let ds = LabeledDataset::from_files(
            &files.features,
            &files.labels,
            &files.train,
            &files.val,
            &files.test,
        )?;
        (graph, ds)
    } else {
        let spec = &settings.sbm;
        let (graph, labels, _) =
            Graph::two_block_sbm(spec.n, spec.p_in, spec.p_out, settings.seed)?;
        let n_classes = 2;
        let features = community_features(
            &labels,
            n_classes,
            settings.feature_noise,
            settings.seed ^ 0x5eed,
        );
        let (train, val, test) = random_split(spec.n, settings.split, settings.seed ^ 0x5011);
        let ds = LabeledDataset::new(features, labels, train, val, test)?;
        (graph, ds)
    };
    if ds.n() != graph.n() {
        return Err(Error::DimensionMismatch(format!(
            "dataset has {} rows but the graph has {} nodes",
            ds.n(),
            graph.n()
        )));
    }
    let eig = eigendecompose(&graph.normalized_operators().lap_norm)?;

    if sweep {
        let results = beta_sweep(&ds, &eig, &settings.beta_grid, &classifier)?;
        let mut csv = String::from("beta,accuracy\n");
        for r in &results {
            csv.push_str(&format!("{},{}\n", r.beta, r.test_accuracy));
        }
        let best = results
            .iter()
            .max_by(|a, b| {
                (a.val_accuracy, a.test_accuracy)
                    .partial_cmp(&(b.val_accuracy, b.test_accuracy))
                    .expect("accuracies are finite")
            })
            .expect("sweep is non-empty");
        println!(
            "best_beta={} (selected by validation accuracy) val={:.4} test={:.4}",
            best.beta, best.val_accuracy, best.test_accuracy
        );
        let json = serde_json::json!({
            "selection": "validation accuracy",
            "best": {
                "beta": best.beta,
                "val_accuracy": best.val_accuracy,
                "test_accuracy": best.test_accuracy,
            },
            "sweep": results,
        });
        sink.emit("beta_sweep", &csv, &json, true)
    } else {
        let spec = correct(&eig, settings.beta)?;
        let mut report = train_classifier(&ds, &eig, &spec, &classifier)?;
        if deterministic {
            report.wall_time_s = 0.0;
        }
        println!(
            "beta={} test_accuracy={:.4} (val={:.4}, train={:.4})",
            settings.beta, report.test_accuracy, report.val_accuracy, report.train_accuracy
        );
        let csv = format!(
            "beta,train_accuracy,val_accuracy,test_accuracy,best_iter,iters_run\n{},{},{},{},{},{}\n",
            settings.beta,
            report.train_accuracy,
            report.val_accuracy,
            report.test_accuracy,
            report.best_iter,
            report.iters_run
        );
        let mut json = serde_json::to_value(&report)?;
        json["beta"] = serde_json::json!(settings.beta);
        json["basis"] = serde_json::json!(settings.basis_label);
        sink.emit("classify", &csv, &json, false)
    }
}

/// Where command output lands: files under `--out` or stdout otherwise.
struct OutputSink {
    out: Option<PathBuf>,
    format: String,
    deterministic: bool,
}

impl OutputSink {
    fn stamp(&self) -> String {
        if self.deterministic {
            String::new()
        } else {
            let now = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            format!("# generated_unix_seconds={now}\n")
        }
    }

    /// Emits one artifact in the selected format. `dump_to_stdout`
    /// prints the table when no output directory was given (commands
    /// whose main result already went to stdout pass `false`).
    fn emit(
        &self,
        name: &str,
        csv: &str,
        json: &serde_json::Value,
        dump_to_stdout: bool,
    ) -> Result<()> {
        let body = match self.format.as_str() {
            "csv" => format!("{}{}", self.stamp(), csv),
            _ => format!("{:#}\n", json),
        };
        match &self.out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let ext = if self.format == "csv" { "csv" } else { "json" };
                write_file(&dir.join(format!("{name}.{ext}")), &body)?;
            }
            None if dump_to_stdout => print!("{body}"),
            None => {}
        }
        Ok(())
    }

    /// The experiment emits both the record table and the JSON summary.
    fn emit_report(&self, name: &str, csv: &str, json: &serde_json::Value) -> Result<()> {
        match &self.out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                write_file(
                    &dir.join(format!("{name}.csv")),
                    &format!("{}{}", self.stamp(), csv),
                )?;
                write_file(&dir.join(format!("{name}.json")), &format!("{:#}\n", json))?;
            }
            None => {
                if self.format == "json" {
                    println!("{:#}", json);
                } else {
                    print!("{}{}", self.stamp(), csv);
                }
            }
        }
        Ok(())
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body)?;
    Ok(())
}

fn effective_seed(flag: Option<u64>, deterministic: bool) -> u64 {
    flag.unwrap_or_else(|| {
        if deterministic {
            7
        } else {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(7)
        }
    })
}

fn parse_grid(spec: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = spec.split(['x', 'X']).collect();
    if parts.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "expected RxC (e.g. 16x16), got '{spec}'"
        )));
    }
    let rows = parts[0]
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidParameter(format!("invalid row count '{}'", parts[0])))?;
    let cols = parts[1]
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidParameter(format!("invalid column count '{}'", parts[1])))?;
    Ok((rows, cols))
}

fn parse_er(spec: &str) -> Result<(usize, f64)> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "expected n,avg_degree (e.g. 1000,5), got '{spec}'"
        )));
    }
    let n = parts[0]
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidParameter(format!("invalid node count '{}'", parts[0])))?;
    let degree = parts[1]
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("invalid degree '{}'", parts[1])))?;
    Ok((n, degree))
}

fn parse_pair(spec: &str) -> Result<(f64, f64)> {
    let list = parse_f64_list(spec, "pair")?;
    if list.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "expected two comma-separated numbers, got '{spec}'"
        )));
    }
    Ok((list[0], list[1]))
}

fn parse_f64_list(spec: &str, what: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("{what}: invalid number '{s}'")))
        })
        .collect()
}
