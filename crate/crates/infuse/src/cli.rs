use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use infuse_core::fit::ModelRegistry;
use infuse_core::{DiversityMode, RelationRegistry, ScoreKind, TemplateBank, TripleSet};

use crate::config::{DistractorMode, PipelineConfig};
use crate::error::{Error, Result};
use crate::formats::banks::{bundled_bank, load_bank, write_bank, BUNDLED_BANKS};
use crate::formats::eval::{load_eval, load_scores};
use crate::formats::records::{append_record, load_records};
use crate::formats::tokens::Tokenizer;
use crate::formats::triples::{load_triples, write_triples, TripleFormat};
use crate::formats::{read_json, read_jsonl, write_json, write_jsonl};
use crate::manifest::StageManifest;
use crate::stages;
use crate::stages::fit::{FitJob, FitsFile, ScalingFile};

#[derive(Debug, Parser)]
#[command(name = "infuse", version, about = "Frequency-controlled knowledge infusion pipeline")]
pub struct Cli {
    /// Pipeline config (TOML). `INFUSE_*` environment variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a triple file, optionally dedupe it and convert between TSV and JSONL.
    Triples(TriplesArgs),
    /// Remove corpus paragraphs in which the words of any triple co-occur.
    Filter(FilterArgs),
    /// Insert rendered statements into the filtered corpus at a fixed frequency.
    Inject(InjectArgs),
    /// Recount injected statements in a corpus against a statement manifest.
    Verify(VerifyArgs),
    /// Build four-option evaluation items.
    BuildEval(BuildEvalArgs),
    /// Compute the memorization rate from per-option scores.
    Score(ScoreArgs),
    /// Fit the frequency-performance curves per (N, D) group.
    Fit(FitArgs),
    /// Fit F(C) = A / C^alpha + E to the fitted collapse points.
    ScalingFit(ScalingFitArgs),
    /// Predict the collapse point at a new compute budget.
    Extrapolate(ExtrapolateArgs),
    /// Summarize records, fits and the scaling law.
    Report(ReportArgs),
    /// Write the bundled template banks as JSON.
    Banks(BanksArgs),
    /// Print the effective configuration.
    Config,
}

#[derive(Debug, Args)]
pub struct TriplesArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<TripleFormat>,
    #[arg(long)]
    pub dedupe: bool,
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub triples: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub token_sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    #[arg(long)]
    pub triples: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Statements per triple; without it the configured frequency list is swept.
    #[arg(long)]
    pub frequency: Option<usize>,
    #[arg(long)]
    pub templates_per_relation: Option<usize>,
    /// Infusion bank: a JSON file or one of the bundled names.
    #[arg(long)]
    pub templates: Option<String>,
    #[arg(long)]
    pub budget_tokens: Option<u64>,
    #[arg(long)]
    pub strict_budget: bool,
    /// Statement manifest (JSONL); defaults to `<out>.statements.jsonl`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub token_sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildEvalArgs {
    #[arg(long)]
    pub triples: Option<PathBuf>,
    /// Question bank: a JSON file or one of the bundled names.
    #[arg(long)]
    pub questions: Option<String>,
    #[arg(long)]
    pub distractors: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub distractor_mode: Option<DistractorMode>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub eval: Option<PathBuf>,
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// ppl, log_ppl or nll.
    #[arg(long)]
    pub score_kind: Option<String>,
    /// Summary JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run-records CSV to append to (needs --n, --d and --frequency).
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long)]
    pub frequency: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// `all` or one of p1..p5; repeatable.
    #[arg(long)]
    pub form: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    #[arg(long)]
    pub random_starts: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScalingFitArgs {
    #[arg(long)]
    pub fits: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Only use groups trained on this many tokens.
    #[arg(long)]
    pub d: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExtrapolateArgs {
    #[arg(long)]
    pub scaling: Option<PathBuf>,
    #[arg(long, required_unless_present = "model")]
    pub n: Option<u64>,
    #[arg(long)]
    pub d: Option<u64>,
    /// Registry label such as `3B`; supplies N, and D at 20 tokens per parameter unless --d is given.
    #[arg(long, conflicts_with = "n")]
    pub model: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Fits JSON; curves are fitted on the fly when omitted.
    #[arg(long)]
    pub fits: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BanksArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn pick(flag: &Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| configured.clone())
        .ok_or_else(|| Error::Config(format!("no path for {what}: pass the flag or set it under [paths]")))
}

/// `<path>` with `suffix` appended to the file name.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// `corpus.jsonl` -> `corpus.f100.jsonl`.
fn with_frequency(path: &Path, f: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.f{f}.{}", ext.to_string_lossy()),
        None => format!("{stem}.f{f}"),
    };
    path.with_file_name(name)
}

pub fn relation_registry(cfg: &PipelineConfig) -> Result<RelationRegistry> {
    match &cfg.relations {
        Some(names) => Ok(RelationRegistry::new(names.iter().map(String::as_str))?),
        None => Ok(RelationRegistry::default()),
    }
}

pub fn load_configured_triples(cfg: &PipelineConfig, path: &Path, permissive: bool, dedupe: bool) -> Result<TripleSet> {
    let registry = relation_registry(cfg)?;
    let ts = load_triples(path, TripleFormat::from_path(path), &registry, permissive || cfg.triples.permissive)?;
    if dedupe || cfg.triples.dedupe {
        let provenance = ts.provenance.clone();
        let mut d = ts.dedupe(cfg.require_seed()?);
        d.provenance = provenance;
        Ok(d)
    } else {
        Ok(ts)
    }
}

/// A bundled bank name, or a path to a bank JSON file.
fn resolve_bank(name: &str) -> Result<(TemplateBank, Option<PathBuf>)> {
    match bundled_bank(name) {
        Some(b) => Ok((b, None)),
        None => {
            let p = PathBuf::from(name);
            Ok((load_bank(&p)?, Some(p)))
        }
    }
}

fn parse_score_kind(s: &str) -> Result<ScoreKind> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::Config(format!("unknown score kind {s:?} (expected ppl, log_ppl or nll)")))
}

/// Write to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn print_json<T: serde::Serialize>(value: &T) {
    emit(&(serde_json::to_string_pretty(value).expect("serializable output") + "\n"));
}

/// Effective config: file, then environment, then global flags.
pub fn effective_config(cli: &Cli, env: impl IntoIterator<Item = (String, String)>) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref(), env)?;
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

pub fn run(cli: Cli, cfg: PipelineConfig) -> Result<()> {
    match cli.command {
        Command::Triples(a) => run_triples(&cfg, a),
        Command::Filter(a) => run_filter(&cfg, a),
        Command::Inject(a) => run_inject(&cfg, a),
        Command::Verify(a) => run_verify(&cfg, a),
        Command::BuildEval(a) => run_build_eval(&cfg, a),
        Command::Score(a) => run_score(&cfg, a),
        Command::Fit(a) => run_fit(&cfg, a),
        Command::ScalingFit(a) => run_scaling_fit(&cfg, a),
        Command::Extrapolate(a) => run_extrapolate(&cfg, a),
        Command::Report(a) => run_report(&cfg, a),
        Command::Banks(a) => {
            for name in BUNDLED_BANKS {
                let bank = bundled_bank(name).expect("bundled bank");
                write_bank(&a.out_dir.join(format!("{name}.json")), &bank)?;
            }
            Ok(())
        }
        Command::Config => {
            emit(&cfg.to_toml());
            Ok(())
        }
    }
}

fn run_triples(cfg: &PipelineConfig, a: TriplesArgs) -> Result<()> {
    let input = pick(&a.input, &cfg.paths.triples, "triples")?;
    let ts = load_configured_triples(cfg, &input, a.permissive, a.dedupe)?;
    let summary = serde_json::json!({
        "triples": ts.len(),
        "sha256": ts.provenance,
        "relations": ts.relation_histogram(),
    });
    if let Some(out) = &a.out {
        let format = a.format.unwrap_or_else(|| TripleFormat::from_path(out));
        write_triples(out, &ts, format)?;
        StageManifest::new("triples", if a.dedupe || cfg.triples.dedupe { cfg.seed } else { None })
            .param("dedupe", a.dedupe || cfg.triples.dedupe)
            .param("format", format)
            .input("triples", &input)?
            .output("triples", out)?
            .write_beside(out)?;
    }
    print_json(&summary);
    Ok(())
}

fn run_filter(cfg: &PipelineConfig, a: FilterArgs) -> Result<()> {
    let triples_path = pick(&a.triples, &cfg.paths.triples, "triples")?;
    let input = pick(&a.input, &cfg.paths.corpus_in, "input corpus")?;
    let out = pick(&a.out, &cfg.paths.corpus_filtered, "filtered corpus")?;
    let report_path = a.report.clone().or_else(|| cfg.paths.filter_report.clone()).unwrap_or_else(|| sibling(&out, ".report.json"));
    let sidecar = a.token_sidecar.clone().or_else(|| cfg.paths.token_sidecar.clone());
    let ts = load_configured_triples(cfg, &triples_path, false, false)?;
    let tokens = Tokenizer::load(sidecar.as_deref())?;
    let report = stages::filter::filter_corpus(&ts, &input, &out, &tokens)?;
    write_json(&report_path, &report)?;
    let mut m = StageManifest::new("filter", None)
        .param("tokenizer", tokens.name())
        .input("triples", &triples_path)?
        .input("corpus", &input)?;
    if let Some(s) = &sidecar {
        m = m.input("token_sidecar", s)?;
    }
    m.output("corpus", &out)?.output("report", &report_path)?.write_beside(&out)?;
    eprintln!(
        "filter: {} of {} paragraphs removed, {} of {} documents kept",
        report.stats.paragraphs_removed, report.stats.paragraphs_in, report.documents_out, report.documents_in
    );
    Ok(())
}

fn run_inject(cfg: &PipelineConfig, a: InjectArgs) -> Result<()> {
    let seed = cfg.require_seed()?;
    let triples_path = pick(&a.triples, &cfg.paths.triples, "triples")?;
    let input = pick(&a.input, &cfg.paths.corpus_filtered, "filtered corpus")?;
    let out = pick(&a.out, &cfg.paths.corpus_infused, "infused corpus")?;
    let k = a.templates_per_relation.unwrap_or(cfg.inject.templates_per_relation);
    let diversity = DiversityMode::new(k)?;
    let bank_spec = a
        .templates
        .clone()
        .or_else(|| cfg.paths.infusion_templates.as_ref().map(|p| p.to_string_lossy().into_owned()))
        .unwrap_or_else(|| if k == 1 { "default".into() } else { "diverse".into() });
    let (bank, bank_path) = resolve_bank(&bank_spec)?;
    let sidecar = a.token_sidecar.clone().or_else(|| cfg.paths.token_sidecar.clone());
    let tokens = Tokenizer::load(sidecar.as_deref())?;
    let ts = load_configured_triples(cfg, &triples_path, false, false)?;

    let frequencies: Vec<usize> = match a.frequency.or(cfg.inject.frequency) {
        Some(f) => vec![f],
        None => cfg.inject.frequencies.clone(),
    };
    if frequencies.is_empty() {
        return Err(Error::Config("no injection frequency given and the frequency list is empty".into()));
    }
    let sweep = frequencies.len() > 1;
    for f in frequencies {
        let out_f = if sweep { with_frequency(&out, f) } else { out.clone() };
        let manifest_path = match (&a.manifest, &cfg.paths.injection_manifest) {
            (Some(p), _) | (None, Some(p)) if !sweep => p.clone(),
            (Some(p), _) | (None, Some(p)) => with_frequency(p, f),
            _ => sibling(&out_f, ".statements.jsonl"),
        };
        let report_path = match (&a.report, &cfg.paths.injection_report) {
            (Some(p), _) | (None, Some(p)) if !sweep => p.clone(),
            (Some(p), _) | (None, Some(p)) => with_frequency(p, f),
            _ => sibling(&out_f, ".report.json"),
        };
        let opts = stages::inject::InjectOptions {
            frequency: f,
            diversity,
            seed,
            budget_tokens: a.budget_tokens.or(cfg.inject.budget_tokens),
            strict_budget: a.strict_budget || cfg.inject.strict_budget,
        };
        let outcome = stages::inject::inject_corpus(&ts, &bank, &input, &out_f, &opts, &tokens)?;
        write_jsonl(&manifest_path, &outcome.manifest)?;
        write_json(&report_path, &outcome)?;
        let mut m = StageManifest::new("inject", Some(seed))
            .param("frequency", f)
            .param("templates_per_relation", k)
            .param("templates", if bank_path.is_some() { "file".to_string() } else { bank_spec.clone() })
            .param("budget_tokens", opts.budget_tokens)
            .param("strict_budget", opts.strict_budget)
            .param("tokenizer", tokens.name())
            .input("triples", &triples_path)?
            .input("corpus", &input)?;
        if let Some(p) = &bank_path {
            m = m.input("templates", p)?;
        }
        if let Some(s) = &sidecar {
            m = m.input("token_sidecar", s)?;
        }
        m.output("corpus", &out_f)?
            .output("statements", &manifest_path)?
            .output("report", &report_path)?
            .write_beside(&out_f)?;
        eprintln!(
            "inject: F={f}: {} statements ({} tokens) into {} base paragraphs",
            outcome.report.total_statements, outcome.report.total_tokens, outcome.report.base_paragraphs
        );
    }
    Ok(())
}

fn run_verify(cfg: &PipelineConfig, a: VerifyArgs) -> Result<()> {
    let corpus = pick(&a.corpus, &cfg.paths.corpus_infused, "infused corpus")?;
    let manifest_path = a.manifest.clone().or_else(|| cfg.paths.injection_manifest.clone()).unwrap_or_else(|| sibling(&corpus, ".statements.jsonl"));
    let manifest = read_jsonl(&manifest_path)?;
    let outcome = stages::inject::verify_counts(&corpus, &manifest)?;
    print_json(&outcome);
    if outcome.pass {
        Ok(())
    } else {
        Err(Error::VerifyFailed { deficits: outcome.deficits.len() })
    }
}

fn run_build_eval(cfg: &PipelineConfig, a: BuildEvalArgs) -> Result<()> {
    let seed = cfg.require_seed()?;
    let triples_path = pick(&a.triples, &cfg.paths.triples, "triples")?;
    let out = pick(&a.out, &cfg.paths.eval, "eval items")?;
    let q_spec = a
        .questions
        .clone()
        .or_else(|| cfg.paths.question_templates.as_ref().map(|p| p.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "questions".into());
    let (questions, q_path) = resolve_bank(&q_spec)?;
    let distractor_file = a.distractors.clone().or_else(|| cfg.paths.distractors.clone());
    let mode = a.distractor_mode.unwrap_or(if a.distractors.is_some() { DistractorMode::ExternalFile } else { cfg.eval.distractor_mode });
    let source = stages::eval::distractor_source(mode, distractor_file.as_deref())?;
    let ts = load_configured_triples(cfg, &triples_path, false, false)?;
    let items = stages::eval::build_eval_file(&ts, &questions, &source, seed, &out)?;
    let mut m = StageManifest::new("build-eval", Some(seed))
        .param("distractor_mode", mode)
        .param("questions", if q_path.is_some() { "file".to_string() } else { q_spec.clone() })
        .input("triples", &triples_path)?;
    if let Some(p) = &q_path {
        m = m.input("questions", p)?;
    }
    if let (DistractorMode::ExternalFile, Some(p)) = (mode, &distractor_file) {
        m = m.input("distractors", p)?;
    }
    m.output("eval", &out)?.write_beside(&out)?;
    eprintln!("build-eval: {} items", items.len());
    Ok(())
}

fn run_score(cfg: &PipelineConfig, a: ScoreArgs) -> Result<()> {
    let eval_path = pick(&a.eval, &cfg.paths.eval, "eval items")?;
    let scores_path = pick(&a.scores, &cfg.paths.scores, "scores")?;
    let kind = match &a.score_kind {
        Some(s) => parse_score_kind(s)?,
        None => cfg.score.kind,
    };
    let items = load_eval(&eval_path)?;
    let scores = load_scores(&scores_path)?;
    let coords = match (
        a.n.or(cfg.score.model_size),
        a.d.or(cfg.score.training_tokens),
        a.frequency.or(cfg.score.frequency),
    ) {
        (Some(n), Some(d), Some(f)) => Some((n, d, f)),
        _ => None,
    };
    let summary = stages::score::score(&items, &scores, kind, coords)?;
    let records = a.records.clone().or_else(|| cfg.paths.records.clone());
    if let Some(path) = &records {
        let record = summary
            .record
            .ok_or_else(|| Error::Config("appending a run record needs N, D and F (--n, --d, --frequency)".into()))?;
        append_record(path, &record)?;
    }
    match a.out.clone().or_else(|| cfg.paths.score_summary.clone()) {
        Some(out) => {
            write_json(&out, &summary)?;
            StageManifest::new("score", None)
                .param("kind", kind)
                .input("eval", &eval_path)?
                .input("scores", &scores_path)?
                .output("summary", &out)?
                .write_beside(&out)?;
        }
        None => print_json(&summary),
    }
    if !summary.ties.is_empty() {
        eprintln!("score: {} tied items resolved to the lowest index", summary.ties.len());
    }
    Ok(())
}

fn fit_job(cfg: &PipelineConfig, forms: &[String], random_starts: Option<usize>) -> Result<FitJob> {
    let forms = if forms.is_empty() { stages::fit::parse_forms(&cfg.fit.forms)? } else { stages::fit::parse_forms(forms)? };
    Ok(FitJob { forms, seed: cfg.require_seed()?, random_starts: random_starts.unwrap_or(cfg.fit.random_starts) })
}

fn load_records_warn(path: &Path) -> Result<Vec<infuse_core::RunRecord>> {
    let (records, warnings) = load_records(path)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(records)
}

fn run_fit(cfg: &PipelineConfig, a: FitArgs) -> Result<()> {
    let records_path = pick(&a.records, &cfg.paths.records, "run records")?;
    let out = pick(&a.out, &cfg.paths.fits, "fits output")?;
    let job = fit_job(cfg, &a.form, a.random_starts)?;
    let records = load_records_warn(&records_path)?;
    let fits = stages::fit::fit_records(&records, &job)?;
    write_json(&out, &fits)?;
    let mut m = StageManifest::new("fit", Some(job.seed))
        .param("forms", &job.forms)
        .param("random_starts", job.random_starts)
        .input("records", &records_path)?
        .output("fits", &out)?;
    if let Some(p) = a.plot_data.clone().or_else(|| cfg.paths.plot_data.clone()) {
        write_json(&p, &stages::fit::plot_data(&fits, cfg.fit.plot_points))?;
        m = m.output("plot_data", &p)?;
    }
    m.write_beside(&out)?;
    for g in &fits.groups {
        match g.best() {
            Some((ff, fit)) => eprintln!(
                "fit: N={} D={}: best {} (r2 {:.6}), F* {}",
                g.n,
                g.d,
                ff.form,
                fit.r2,
                ff.collapse.as_ref().map_or("-".to_string(), |c| format!("{:.3}", c.f_star))
            ),
            None => eprintln!("fit: N={} D={}: no form could be fitted", g.n, g.d),
        }
    }
    Ok(())
}

fn run_scaling_fit(cfg: &PipelineConfig, a: ScalingFitArgs) -> Result<()> {
    let fits_path = pick(&a.fits, &cfg.paths.fits, "fits")?;
    let out = pick(&a.out, &cfg.paths.scaling, "scaling output")?;
    let fits: FitsFile = read_json(&fits_path)?;
    let sf = stages::fit::fit_scaling(&fits, a.d)?;
    write_json(&out, &sf)?;
    StageManifest::new("scaling-fit", None)
        .param("D_filter", a.d)
        .input("fits", &fits_path)?
        .output("scaling", &out)?
        .write_beside(&out)?;
    for w in &sf.fit.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("scaling-fit: A={:.6e} alpha={:.6} E={:.6}", sf.fit.a, sf.fit.alpha, sf.fit.e);
    Ok(())
}

fn run_extrapolate(cfg: &PipelineConfig, a: ExtrapolateArgs) -> Result<()> {
    let path = pick(&a.scaling, &cfg.paths.scaling, "scaling fit")?;
    let sf: ScalingFile = read_json(&path)?;
    let (n, d) = match (&a.model, a.n) {
        (Some(label), _) => {
            let registry = match &cfg.paths.registry {
                Some(p) => ModelRegistry::new(read_json(p)?)?,
                None => ModelRegistry::bundled(),
            };
            let row = registry.get(label).ok_or_else(|| Error::Config(format!("model {label:?} is not in the registry")))?;
            (row.n, a.d.unwrap_or(row.one_x_c))
        }
        (None, Some(n)) => (n, a.d.ok_or_else(|| Error::Config("--d is required with --n".into()))?),
        (None, None) => return Err(Error::Config("pass --n and --d, or --model".into())),
    };
    let e = stages::fit::extrapolate(&sf.fit, n, d);
    for w in &e.warnings {
        eprintln!("warning: {w}");
    }
    print_json(&e);
    Ok(())
}

fn run_report(cfg: &PipelineConfig, a: ReportArgs) -> Result<()> {
    let records_path = pick(&a.records, &cfg.paths.records, "run records")?;
    let records = load_records_warn(&records_path)?;
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let fits: FitsFile = match a.fits.clone().or_else(|| cfg.paths.fits.clone()) {
        Some(p) => read_json(&p)?,
        None => stages::fit::fit_records(&records, &fit_job(cfg, &[], None)?)?,
    };
    let report = stages::report::build_report(&records, &fits)?;
    emit(&stages::report::render_text(&report));
    if let Some(out) = a.out.clone().or_else(|| cfg.paths.report.clone()) {
        write_json(&out, &report)?;
    }
    Ok(())
}
