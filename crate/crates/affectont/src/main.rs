use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use affectont::annotations::AnnotationStore;
use affectont::dublin_core::{derive_record, serialize_dc, FormatStyle};
use affectont::lexicon::{LexiconFormat, LexiconGraph, Pos};
use affectont::manifest::{compute_stats, parse_manifest, serialize_manifest, Stimulus};
use affectont::normalize::{normalize_keyword, NormalizedKeyword, NormalizerConfig};
use affectont::ontology::{build_model, serialize_owl, validate_model, DEFAULT_BASE_IRI};
use affectont::query::{
    affect_filter, assemble_scenario, evaluate_query, parse_query, AffectWindow, QueryError,
    QueryScope, Waypoint,
};
use affectont::taxonomy::{build_taxonomy, prune, transitive_reduction, PruneConfig, TaxonomyGraph};

#[derive(Parser)]
#[command(
    name = "affectont",
    version,
    about = "Convert keyword-tagged affective stimulus manifests into a queryable ontology"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a CSV manifest and re-emit it in canonical form.
    Ingest {
        manifest: PathBuf,
        /// Skip malformed rows with a warning instead of failing.
        #[arg(long)]
        lenient: bool,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Keyword-distribution statistics for a manifest.
    Stats {
        manifest: PathBuf,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Normalize free-text keywords (given directly or from a manifest).
    Normalize {
        /// Keywords to normalize.
        keywords: Vec<String>,
        /// Normalize every keyword of this manifest instead.
        #[arg(long, conflicts_with = "keywords")]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        lexicon: LexiconOpts,
        #[command(flatten)]
        config: ConfigOpt,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Normalize one keyword and show its lexicon neighborhood.
    Enrich {
        keyword: String,
        /// Sense number for the head lemma (default 1).
        #[arg(long, default_value_t = 1)]
        sense: u32,
        #[command(flatten)]
        lexicon: LexiconOpts,
        #[command(flatten)]
        config: ConfigOpt,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Build and emit the OWL ontology for a manifest.
    BuildOntology {
        manifest: PathBuf,
        /// Annotation store JSON; keyword-derived primaries when absent.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long, default_value = DEFAULT_BASE_IRI)]
        base_iri: String,
        #[command(flatten)]
        lexicon: LexiconOpts,
        #[command(flatten)]
        config: ConfigOpt,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Emit a Dublin Core record for one stimulus.
    EmitDc {
        manifest: PathBuf,
        #[arg(long)]
        id: String,
        /// Source database name, e.g. IAPS.
        #[arg(long)]
        db: String,
        #[arg(long)]
        creator: String,
        #[arg(long)]
        contributor: String,
        /// ISO date YYYY-MM-DD.
        #[arg(long)]
        date: String,
        /// Render dc:format as a MIME type instead of a word.
        #[arg(long)]
        mime: bool,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Retrieve stimuli by boolean concept expression and affect window.
    Query {
        manifest: PathBuf,
        #[arg(long)]
        expr: String,
        /// Pleasure window `min:max`.
        #[arg(long)]
        pl: Option<String>,
        /// Arousal window `min:max`.
        #[arg(long)]
        ar: Option<String>,
        #[arg(long, value_enum, default_value_t = ScopeArg::Primary)]
        scope: ScopeArg,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[command(flatten)]
        lexicon: LexiconOpts,
        #[command(flatten)]
        config: ConfigOpt,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Assemble a stimulus sequence along affect waypoints.
    Scenario {
        manifest: PathBuf,
        /// Waypoint `pl,ar[,expr]`; repeatable, order matters.
        #[arg(long = "waypoint", required = true)]
        waypoints: Vec<String>,
        /// Allow one stimulus to serve several waypoints.
        #[arg(long)]
        allow_repeat: bool,
        #[arg(long, value_enum, default_value_t = ScopeArg::Primary)]
        scope: ScopeArg,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[command(flatten)]
        lexicon: LexiconOpts,
        #[command(flatten)]
        config: ConfigOpt,
        #[command(flatten)]
        output: OutputOpts,
    },
}

#[derive(Args)]
struct OutputOpts {
    /// Write data output to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON instead of plain text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct LexiconOpts {
    /// Lexicon path; a small built-in lexicon is used when absent.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LexiconFormatArg::Simple)]
    lexicon_format: LexiconFormatArg,
}

#[derive(Args)]
struct ConfigOpt {
    /// Prune/abbreviation/disjointness settings file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LexiconFormatArg {
    Wndb,
    Simple,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    /// Match primary meanings only.
    Primary,
    /// Match primary and secondary meanings.
    All,
}

impl From<ScopeArg> for QueryScope {
    fn from(s: ScopeArg) -> QueryScope {
        match s {
            ScopeArg::Primary => QueryScope::PrimaryOnly,
            ScopeArg::All => QueryScope::PrimaryAndSecondary,
        }
    }
}

enum CliError {
    /// Bad inputs or failed validation: exit 1.
    Data(String),
    /// Malformed flag values or query syntax: exit 2.
    Usage(String),
}

impl CliError {
    fn data(e: impl std::fmt::Display) -> CliError {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(output: &OutputOpts, content: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(CliError::data)
        }
    }
}

fn load_manifest(path: &Path, lenient: bool) -> Result<Vec<Stimulus>, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Data(format!("opening {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(file, base, lenient).map_err(CliError::data)
}

fn load_lexicon(opts: &LexiconOpts) -> Result<LexiconGraph, CliError> {
    match &opts.lexicon {
        None => Ok(affectont::lexicon::mini_lexicon()),
        Some(path) => {
            let format = match opts.lexicon_format {
                LexiconFormatArg::Wndb => LexiconFormat::Wndb,
                LexiconFormatArg::Simple => LexiconFormat::Simple,
            };
            LexiconGraph::load(path, format).map_err(CliError::data)
        }
    }
}

/// Split a settings file into normalizer tables (`[abbrev]`, `[plural]`
/// sections) and the prune configuration understood by the taxonomy module.
fn load_config(opt: &ConfigOpt) -> Result<(PruneConfig, NormalizerConfig), CliError> {
    let mut norm = NormalizerConfig::default();
    let Some(path) = &opt.config else {
        return Ok((PruneConfig::default_cut(), norm));
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
    let mut prune_lines = Vec::new();
    let mut section = String::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with('[') && trimmed.ends_with(']') {
            section = trimmed[1..trimmed.len() - 1].to_string();
        }
        match section.as_str() {
            "abbrev" | "plural" => {
                if trimmed.starts_with('[') || trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                    CliError::Data(format!(
                        "{}: `{trimmed}` in [{section}] is not key=value",
                        path.display()
                    ))
                })?;
                let table = if section == "abbrev" {
                    &mut norm.abbreviations
                } else {
                    &mut norm.irregular_plurals
                };
                table.insert(key.trim().to_lowercase(), value.trim().to_lowercase());
            }
            _ => prune_lines.push(line),
        }
    }
    let prune_cfg = PruneConfig::parse(&prune_lines.join("\n"), &path.display().to_string())
        .map_err(CliError::data)?;
    Ok((prune_cfg, norm))
}

/// Primary concept for a keyword: first head lemma, noun sense preferred,
/// first listed sense.
fn concept_for_keyword(
    raw: &str,
    lex: &LexiconGraph,
    cfg: &NormalizerConfig,
) -> Result<String, CliError> {
    let norm = normalize_keyword(raw, lex, cfg).map_err(CliError::data)?;
    let (lemma, _) = norm
        .heads
        .first()
        .ok_or_else(|| CliError::Data(format!("keyword `{raw}` has no head")))?;
    let mut senses = lex.lookup_lemma(lemma, Some(Pos::Noun));
    if senses.is_empty() {
        senses = lex.lookup_lemma(lemma, None);
    }
    senses
        .first()
        .map(|s| s.id.clone())
        .ok_or_else(|| CliError::Data(format!("head `{lemma}` of `{raw}` is not in the lexicon")))
}

/// Annotation store: loaded from JSON, or primaries derived from keywords.
fn load_annotations(
    path: Option<&PathBuf>,
    stimuli: &[Stimulus],
    lex: &LexiconGraph,
    cfg: &NormalizerConfig,
) -> Result<AnnotationStore, CliError> {
    match path {
        Some(p) => {
            let file = fs::File::open(p)
                .map_err(|e| CliError::Data(format!("opening {}: {e}", p.display())))?;
            AnnotationStore::read_json(file).map_err(CliError::data)
        }
        None => {
            let mut store = AnnotationStore::new();
            for stim in stimuli {
                let concept = concept_for_keyword(&stim.raw_keyword, lex, cfg)?;
                store.set_primary(&stim.id, concept);
            }
            Ok(store)
        }
    }
}

/// Taxonomy seeded by every annotated concept, pruned and reduced.
fn build_pruned_taxonomy(
    store: &AnnotationStore,
    lex: &LexiconGraph,
    prune_cfg: &PruneConfig,
) -> Result<TaxonomyGraph, CliError> {
    let mut seeds: BTreeSet<String> = BTreeSet::new();
    for id in store.stimulus_ids() {
        let anns = store.get(id).unwrap();
        seeds.extend(anns.primary.iter().cloned());
        seeds.extend(anns.contributions.iter().map(|c| c.concept.clone()));
    }
    let seeds: Vec<String> = seeds.into_iter().collect();
    let tax = build_taxonomy(lex, &seeds).map_err(CliError::data)?;
    let pruned = prune(&tax, prune_cfg, Some(lex)).map_err(CliError::data)?;
    transitive_reduction(&pruned).map_err(CliError::data)
}

fn parse_window(pl: Option<&str>, ar: Option<&str>) -> Result<AffectWindow, CliError> {
    let parse_range = |spec: &str, flag: &str| -> Result<(f64, f64), CliError> {
        let bad = || CliError::Usage(format!("--{flag} expects `min:max`, got `{spec}`"));
        let (lo, hi) = spec.split_once(':').ok_or_else(bad)?;
        Ok((
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        ))
    };
    let (pl_min, pl_max) = match pl {
        Some(s) => parse_range(s, "pl")?,
        None => (1.0, 9.0),
    };
    let (ar_min, ar_max) = match ar {
        Some(s) => parse_range(s, "ar")?,
        None => (1.0, 9.0),
    };
    AffectWindow::new(pl_min, pl_max, ar_min, ar_max)
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_waypoint(spec: &str) -> Result<Waypoint, CliError> {
    let bad = || CliError::Usage(format!("--waypoint expects `pl,ar[,expr]`, got `{spec}`"));
    let mut parts = spec.splitn(3, ',');
    let pl: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let ar: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let constraint = match parts.next() {
        Some(expr) => Some(parse_query(expr).map_err(|e| CliError::Usage(e.to_string()))?),
        None => None,
    };
    Ok(Waypoint {
        target: affectont::manifest::AffectPoint { pleasure: pl, arousal: ar },
        constraint,
    })
}

fn render_normalized(norm: &NormalizedKeyword) -> String {
    let fmt_list = |items: &[(String, affectont::normalize::PosHint)]| {
        items
            .iter()
            .map(|(lemma, pos)| format!("{lemma} ({pos:?})"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!(
        "{} -> {} | heads: [{}] modifiers: [{}] relations: [{}]\n",
        norm.raw,
        norm.canonical,
        fmt_list(&norm.heads),
        fmt_list(&norm.modifiers),
        norm.relations.join(", ")
    )
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Ingest {
            manifest,
            lenient,
            output,
        } => {
            let stimuli = load_manifest(&manifest, lenient)?;
            let content = if output.json {
                serde_json::to_string_pretty(&stimuli).map_err(CliError::data)? + "\n"
            } else {
                serialize_manifest(&stimuli)
            };
            emit(&output, &content)
        }
        Cmd::Stats { manifest, output } => {
            let stimuli = load_manifest(&manifest, false)?;
            let stats = compute_stats(&stimuli);
            let content = if output.json {
                serde_json::to_string_pretty(&stats).map_err(CliError::data)? + "\n"
            } else {
                stats.render_table()
            };
            emit(&output, &content)
        }
        Cmd::Normalize {
            keywords,
            manifest,
            lexicon,
            config,
            output,
        } => {
            let lex = load_lexicon(&lexicon)?;
            let (_, norm_cfg) = load_config(&config)?;
            let raws: Vec<String> = match manifest {
                Some(path) => load_manifest(&path, false)?
                    .into_iter()
                    .map(|s| s.raw_keyword)
                    .collect(),
                None if keywords.is_empty() => {
                    return Err(CliError::Usage(
                        "provide keywords or --manifest".to_string(),
                    ))
                }
                None => keywords,
            };
            let mut results = Vec::new();
            for raw in &raws {
                results.push(normalize_keyword(raw, &lex, &norm_cfg).map_err(CliError::data)?);
            }
            let content = if output.json {
                serde_json::to_string_pretty(&results).map_err(CliError::data)? + "\n"
            } else {
                results.iter().map(render_normalized).collect()
            };
            emit(&output, &content)
        }
        Cmd::Enrich {
            keyword,
            sense,
            lexicon,
            config,
            output,
        } => {
            let lex = load_lexicon(&lexicon)?;
            let (_, norm_cfg) = load_config(&config)?;
            let norm = normalize_keyword(&keyword, &lex, &norm_cfg).map_err(CliError::data)?;
            let (lemma, _) = norm
                .heads
                .first()
                .ok_or_else(|| CliError::Data(format!("keyword `{keyword}` has no head")))?;
            let mut senses = lex.lookup_lemma(lemma, Some(Pos::Noun));
            if senses.is_empty() {
                senses = lex.lookup_lemma(lemma, None);
            }
            if senses.is_empty() {
                return Err(CliError::Data(format!(
                    "head `{lemma}` of `{keyword}` is not in the lexicon"
                )));
            }
            let idx = (sense as usize)
                .checked_sub(1)
                .filter(|i| *i < senses.len())
                .ok_or_else(|| {
                    CliError::Data(format!(
                        "`{lemma}` has {} sense(s); --sense {sense} is out of range",
                        senses.len()
                    ))
                })?;
            let synset = senses[idx];

            let mut text = String::new();
            text.push_str(&render_normalized(&norm));
            text.push_str(&format!("sense: {}  ({})\n", synset.id, synset.gloss));
            text.push_str("hypernym chain:\n");
            for (id, depth) in lex.hypernym_closure(&synset.id).map_err(CliError::data)? {
                text.push_str(&format!("  {}{id}\n", "  ".repeat(depth)));
            }
            let mut coords: Vec<String> = lex
                .coordinate_terms(&synset.id)
                .map_err(CliError::data)?
                .into_iter()
                .collect();
            coords.sort();
            text.push_str(&format!("coordinate terms: {}\n", coords.join(", ")));
            emit(&output, &text)
        }
        Cmd::BuildOntology {
            manifest,
            annotations,
            base_iri,
            lexicon,
            config,
            output,
        } => {
            let stimuli = load_manifest(&manifest, false)?;
            let lex = load_lexicon(&lexicon)?;
            let (prune_cfg, norm_cfg) = load_config(&config)?;
            let store = load_annotations(annotations.as_ref(), &stimuli, &lex, &norm_cfg)?;
            let tax = build_pruned_taxonomy(&store, &lex, &prune_cfg)?;
            let model =
                build_model(&tax, &stimuli, &store, &[], &base_iri).map_err(CliError::data)?;
            let report = validate_model(&model);
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            if !report.is_valid() {
                return Err(CliError::Data(format!("model is invalid:\n{report}")));
            }
            let doc = serialize_owl(&model).map_err(CliError::data)?;
            emit(&output, &doc)
        }
        Cmd::EmitDc {
            manifest,
            id,
            db,
            creator,
            contributor,
            date,
            mime,
            output,
        } => {
            let stimuli = load_manifest(&manifest, false)?;
            let stim = stimuli
                .iter()
                .find(|s| s.id == id)
                .ok_or_else(|| CliError::Data(format!("stimulus `{id}` not in manifest")))?;
            let style = if mime {
                FormatStyle::Mime
            } else {
                FormatStyle::Word
            };
            let rec = derive_record(stim, &db, &creator, &contributor, &date, style)
                .map_err(CliError::data)?;
            emit(&output, &serialize_dc(&rec))
        }
        Cmd::Query {
            manifest,
            expr,
            pl,
            ar,
            scope,
            annotations,
            lexicon,
            config,
            output,
        } => {
            let expr = parse_query(&expr).map_err(|e| match e {
                QueryError::Parse { .. } => CliError::Usage(e.to_string()),
                other => CliError::Data(other.to_string()),
            })?;
            let window = parse_window(pl.as_deref(), ar.as_deref())?;
            let stimuli = load_manifest(&manifest, false)?;
            let lex = load_lexicon(&lexicon)?;
            let (prune_cfg, norm_cfg) = load_config(&config)?;
            let store = load_annotations(annotations.as_ref(), &stimuli, &lex, &norm_cfg)?;
            let tax = build_pruned_taxonomy(&store, &lex, &prune_cfg)?;
            let ids = evaluate_query(&expr, &store, &tax, scope.into()).map_err(CliError::data)?;
            let by_id: HashMap<String, Stimulus> =
                stimuli.into_iter().map(|s| (s.id.clone(), s)).collect();
            let ids = affect_filter(&ids, &by_id, &window);
            let content = if output.json {
                serde_json::to_string_pretty(&ids.iter().collect::<Vec<_>>())
                    .map_err(CliError::data)?
                    + "\n"
            } else {
                ids.iter().map(|id| format!("{id}\n")).collect()
            };
            emit(&output, &content)
        }
        Cmd::Scenario {
            manifest,
            waypoints,
            allow_repeat,
            scope,
            annotations,
            lexicon,
            config,
            output,
        } => {
            let waypoints: Vec<Waypoint> = waypoints
                .iter()
                .map(|w| parse_waypoint(w))
                .collect::<Result<_, _>>()?;
            let stimuli = load_manifest(&manifest, false)?;
            let lex = load_lexicon(&lexicon)?;
            let (prune_cfg, norm_cfg) = load_config(&config)?;
            let store = load_annotations(annotations.as_ref(), &stimuli, &lex, &norm_cfg)?;
            let tax = build_pruned_taxonomy(&store, &lex, &prune_cfg)?;
            let by_id: HashMap<String, Stimulus> =
                stimuli.into_iter().map(|s| (s.id.clone(), s)).collect();
            let selected =
                assemble_scenario(&waypoints, &store, &tax, &by_id, scope.into(), allow_repeat)
                    .map_err(CliError::data)?;
            let content = if output.json {
                serde_json::to_string_pretty(&selected).map_err(CliError::data)? + "\n"
            } else {
                selected.iter().map(|id| format!("{id}\n")).collect()
            };
            emit(&output, &content)
        }
    }
}
