use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;

use syntaprobe_core::filter::{self, DiscardReason, FilterRules, VocabSet};
use syntaprobe_core::ingest::{self, AnnotatedSentence, InflectionTable, IngestOutcome, SkipReason};
use syntaprobe_core::nonce::{self, ContentPos, SubstitutionLexicon};
use syntaprobe_core::report::{self, Format, GroupBy};
use syntaprobe_core::scoring::{
    self, protocol, EvalConfig, HttpScorer, MockKind, MockScorer, ProcessScorer, Scorer, ScorerUri, TiePolicy,
    DEFAULT_BATCH_SIZE, DEFAULT_TIMEOUT,
};
use syntaprobe_core::stimulus::{self, MinimalPair};
use syntaprobe_core::templates::{self, Condition};
use syntaprobe_core::{derive_seed, Error};

use crate::config::Config;
use crate::*;

pub fn run(cli: Cli) -> Result<()> {
    let config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Generate(a) => generate(a, &config),
        Command::Ingest(a) => ingest(a),
        Command::Nonce(a) => nonce(a, &config),
        Command::Filter(a) => filter(a, &config),
        Command::Score(a) => score(a, &config),
        Command::Report(a) => report(a),
        Command::DumpTemplates(a) => dump_templates(a),
        Command::MockServer(a) => mock_server(a),
    }
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(file)))
}

fn read_text(path: &Path) -> Result<String> {
    let mut text = String::new();
    open_input(path)?
        .read_to_string(&mut text)
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = open_output(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = open_output(Some(path))?;
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn write_pairs(path: Option<&Path>, pairs: &[MinimalPair]) -> Result<()> {
    let mut out = open_output(path)?;
    stimulus::write_stimuli(pairs, &mut out).map_err(Error::from)?;
    out.flush()?;
    Ok(())
}

fn read_pairs(path: &Path) -> Result<Vec<MinimalPair>> {
    let pairs = stimulus::read_stimuli(open_input(path)?)
        .map_err(Error::from)
        .with_context(|| format!("reading stimuli from {}", path.display()))?;
    Ok(pairs)
}

fn load_inflections(path: Option<&Path>) -> Result<InflectionTable> {
    match path {
        None => Ok(InflectionTable::shipped()),
        Some(p) => Ok(InflectionTable::from_tsv(&read_text(p)?)
            .map_err(Error::from)
            .with_context(|| format!("reading {}", p.display()))?),
    }
}

fn parse_conditions(spec: &str) -> Result<Vec<Condition>> {
    if spec == "all" {
        return Ok(Condition::ALL.to_vec());
    }
    spec.split(',')
        .map(|name| {
            name.trim()
                .parse::<Condition>()
                .map_err(|e| ConfigError(e.to_string()).into())
        })
        .collect()
}

fn generate(args: GenerateArgs, config: &Config) -> Result<()> {
    if args.suite != "template" {
        return Err(ConfigError(format!(
            "generate only builds the template suite (got {:?}); natural and nonce pairs come from `ingest` and `nonce`",
            args.suite
        ))
        .into());
    }
    let conditions = parse_conditions(&args.conditions)?;
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let max_pairs = args.max_pairs.or(config.max_pairs);
    let lexicon = templates::load_lexicon(&read_text(&args.lexicon)?)
        .map_err(Error::from)
        .with_context(|| format!("loading lexicon {}", args.lexicon.display()))?;
    let mut pairs = Vec::new();
    for condition in conditions {
        let stage = format!("generate:{}", condition.name());
        let expanded = templates::expand_condition(condition.name(), &lexicon, max_pairs, derive_seed(seed, &stage))
            .map_err(Error::from)?;
        eprintln!("{}: {} pairs", condition.name(), expanded.len());
        pairs.extend(expanded);
    }
    write_pairs(args.out.as_deref(), &pairs)
}

#[derive(Serialize)]
struct SkippedSentence<'a> {
    line: usize,
    source_ref: &'a str,
    reason: SkipReason,
}

/// Pairs and skips, each tagged with the sentence's position in the input.
type Ingested = (Vec<(usize, MinimalPair)>, Vec<(usize, SkipReason)>);

fn ingest_all(sentences: &[AnnotatedSentence], table: &InflectionTable) -> Result<Ingested> {
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (i, sentence) in sentences.iter().enumerate() {
        match ingest::ingest_sentence(sentence, table)
            .map_err(Error::from)
            .with_context(|| format!("annotated sentence {}", i + 1))?
        {
            IngestOutcome::Pair(p) => pairs.push((i, p)),
            IngestOutcome::Skipped { reason, .. } => skipped.push((i, reason)),
        }
    }
    Ok((pairs, skipped))
}

fn read_sentences(path: &Path) -> Result<Vec<AnnotatedSentence>> {
    ingest::read_annotated(open_input(path)?)
        .map_err(Error::from)
        .with_context(|| format!("reading {}", path.display()))
}

fn ingest(args: IngestArgs) -> Result<()> {
    let table = load_inflections(args.inflections.as_deref())?;
    let sentences = read_sentences(&args.annotated)?;
    let (pairs, skipped) = ingest_all(&sentences, &table)?;
    eprintln!("ingested {} pairs, skipped {}", pairs.len(), skipped.len());
    let pairs: Vec<MinimalPair> = pairs.into_iter().map(|(_, p)| p).collect();
    write_pairs(args.out.as_deref(), &pairs)?;
    if let Some(path) = &args.skipped {
        write_jsonl(
            path,
            skipped.iter().map(|&(i, reason)| SkippedSentence {
                line: i + 1,
                source_ref: &sentences[i].source_ref,
                reason,
            }),
        )?;
    }
    Ok(())
}

fn nonce(args: NonceArgs, config: &Config) -> Result<()> {
    let table = load_inflections(args.inflections.as_deref())?;
    let lexicon = SubstitutionLexicon::from_json(&read_text(&args.lexicon)?)
        .map_err(Error::from)
        .with_context(|| format!("loading {}", args.lexicon.display()))?;
    let content = match args.content_pos.or_else(|| config.content_pos.clone()) {
        Some(tags) => ContentPos::new(tags),
        None => ContentPos::default(),
    };
    let seed = derive_seed(args.seed.or(config.seed).unwrap_or(0), "nonce");
    let sentences = read_sentences(&args.annotated)?;
    let (pairs, skipped) = ingest_all(&sentences, &table)?;
    let mut out = Vec::with_capacity(pairs.len());
    for (i, pair) in &pairs {
        let substituted = nonce::nonce_substitute(pair, &sentences[*i], &lexicon, &content, seed)
            .map_err(Error::from)
            .with_context(|| format!("annotated sentence {}", i + 1))?;
        out.push(substituted);
    }
    eprintln!("built {} nonce pairs, skipped {} sentences", out.len(), skipped.len());
    write_pairs(args.out.as_deref(), &out)
}

fn open_scorer(uri: &str, timeout: Duration, seed: u64) -> Result<Box<dyn Scorer>> {
    let parsed: ScorerUri = uri.parse()?;
    Ok(match parsed {
        ScorerUri::Mock(spec) => Box::new(MockScorer::new(MockKind::from_spec(&spec, seed)?)),
        // `cmd:mock:<kind>` runs a mock in a child process of this binary
        ScorerUri::Cmd(argv) if argv.len() == 1 && argv[0].starts_with("mock:") => {
            let exe = std::env::current_exe().context("locating own executable")?;
            let kind = argv[0]["mock:".len()..].to_string();
            MockKind::from_spec(&kind, seed)?;
            let argv = vec![
                exe.to_string_lossy().into_owned(),
                "mock-server".into(),
                "--kind".into(),
                kind,
                "--seed".into(),
                seed.to_string(),
            ];
            Box::new(ProcessScorer::spawn(&argv, timeout)?)
        }
        ScorerUri::Cmd(argv) => Box::new(ProcessScorer::spawn(&argv, timeout)?),
        ScorerUri::Http(url) => Box::new(HttpScorer::new(url, timeout)),
    })
}

fn scorer_vocab(uri: &str, timeout: Duration, pairs: &[MinimalPair]) -> Result<VocabSet> {
    let mut scorer = open_scorer(uri, timeout, 0)?;
    let handshake = scorer.hello()?;
    let mut forms: Vec<String> = pairs
        .iter()
        .flat_map(|p| [p.correct_form().to_string(), p.incorrect_form().to_string()])
        .collect();
    forms.sort();
    forms.dedup();
    let mut vocab = VocabSet::default();
    for chunk in forms.chunks(handshake.max_batch.max(1)) {
        for (word, known) in chunk.iter().zip(scorer.vocab_check(chunk)?) {
            if known {
                vocab.insert(word.clone());
            }
        }
    }
    Ok(vocab)
}

fn filter(args: FilterArgs, config: &Config) -> Result<()> {
    let pairs = read_pairs(&args.stimuli)?;
    let single_token = !args.no_single_token_check;
    let timeout = args.timeout_secs.or(config.timeout_secs).map(Duration::from_secs).unwrap_or(DEFAULT_TIMEOUT);
    let vocab = match (&args.vocab, &args.vocab_scorer) {
        (Some(path), _) => Some(VocabSet::from_reader(open_input(path)?).map_err(Error::from)?),
        (None, Some(uri)) => Some(scorer_vocab(uri, timeout, &pairs)?),
        (None, None) if single_token => {
            return Err(ConfigError("filter needs --vocab or --vocab-scorer (or --no-single-token-check)".into()).into())
        }
        (None, None) => None,
    };
    let always = |_: &str| true;
    let vocab: &dyn filter::Vocabulary = match &vocab {
        Some(v) => v,
        None => &always,
    };
    let toggle = args.discard_copular;
    let outcome = filter::filter_pairs_with(pairs, vocab, |pair| {
        let mut rules = FilterRules::default_for(pair.suite());
        match toggle {
            Toggle::Auto => {}
            Toggle::On => rules.discard_copular = true,
            Toggle::Off => rules.discard_copular = false,
        }
        rules.require_single_token_focus = single_token;
        rules
    });
    let count = |r: DiscardReason| outcome.discarded.iter().filter(|d| d.reason == r).count();
    eprintln!(
        "kept {}, discarded {} (oov_focus {}, copular {})",
        outcome.kept.len(),
        outcome.discarded.len(),
        count(DiscardReason::OovFocus),
        count(DiscardReason::Copular)
    );
    write_pairs(args.out.as_deref(), &outcome.kept)?;
    if let Some(path) = &args.discarded {
        write_jsonl(path, &outcome.discarded)?;
    }
    if let Some(path) = &args.report {
        let summary = filter::discard_report(&outcome.discarded, vocab);
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        write_text(Some(path), &text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RunMeta<'a> {
    scorer: &'a str,
    handshake: &'a scoring::Handshake,
    batch_size: usize,
    parallel: usize,
    tie_policy: TiePolicy,
    seed: u64,
    pairs: usize,
}

fn score(args: ScoreArgs, config: &Config) -> Result<()> {
    let uri = args
        .scorer
        .clone()
        .or_else(|| config.scorer.clone())
        .ok_or_else(|| ConfigError("no scorer: pass --scorer or set SYNTAPROBE_SCORER".into()))?;
    let timeout = args.timeout_secs.or(config.timeout_secs).map(Duration::from_secs).unwrap_or(DEFAULT_TIMEOUT);
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let requested_batch = args.batch_size.or(config.batch_size).unwrap_or(DEFAULT_BATCH_SIZE);
    let parallel = args.parallel.or(config.parallel).unwrap_or(1);
    let tie_policy = match args.tie_policy {
        Some(TieArg::Tie) => TiePolicy::Tie,
        Some(TieArg::Incorrect) => TiePolicy::Incorrect,
        None => match config.tie_policy.as_deref() {
            None | Some("tie") => TiePolicy::Tie,
            Some("incorrect") => TiePolicy::Incorrect,
            Some(other) => return Err(ConfigError(format!("unknown tie_policy {other:?} in config")).into()),
        },
    };
    if requested_batch == 0 || parallel == 0 {
        return Err(ConfigError("--batch-size and --parallel must be positive".into()).into());
    }
    let pairs = read_pairs(&args.stimuli)?;
    let mut scorer = open_scorer(&uri, timeout, derive_seed(seed, "score"))?;
    let handshake = scorer.hello()?;
    let batch_size = requested_batch.min(handshake.max_batch);
    eprintln!(
        "scorer {} (mask {}, batch {batch_size}, parallel {parallel})",
        handshake.name, handshake.mask_token
    );
    let eval = EvalConfig {
        batch_size,
        parallel,
        tie_policy,
    };
    let records = scoring::evaluate_suite(&pairs, &mut scorer, &eval)?;
    let mut out = open_output(args.out.as_deref())?;
    stimulus::write_records(&records, &mut out).map_err(Error::from)?;
    out.flush()?;
    if let Some(path) = &args.meta {
        let meta = RunMeta {
            scorer: &uri,
            handshake: &handshake,
            batch_size,
            parallel,
            tie_policy,
            seed,
            pairs: pairs.len(),
        };
        let mut text = serde_json::to_string_pretty(&meta)?;
        text.push('\n');
        write_text(Some(path), &text)?;
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let records = stimulus::read_records(open_input(&args.results)?)
        .map_err(Error::from)
        .with_context(|| format!("reading {}", args.results.display()))?;
    let group_by = match args.group_by {
        GroupArg::Attractors => GroupBy::Attractors,
        GroupArg::Condition => GroupBy::Condition,
        GroupArg::All => GroupBy::All,
    };
    let format = match args.format {
        FormatArg::Tsv => Format::Tsv,
        FormatArg::Markdown => Format::Markdown,
        FormatArg::Json => Format::Json,
    };
    let rows = report::aggregate(&records, group_by).map_err(Error::from)?;
    write_text(args.out.as_deref(), &report::render(&rows, format))
}

fn dump_templates(args: DumpArgs) -> Result<()> {
    let text = match args.format {
        DumpFormat::Text => {
            let mut text = String::new();
            for c in Condition::ALL {
                text.push_str(&format!("{}\t{}\t{}\n", c.name(), c.label(), c.template().pattern()));
            }
            text
        }
        DumpFormat::Json => {
            let all: Vec<_> = Condition::ALL.iter().map(|c| c.template()).collect();
            let mut text = serde_json::to_string_pretty(&all)?;
            text.push('\n');
            text
        }
    };
    write_text(None, &text)
}

fn mock_server(args: MockServerArgs) -> Result<()> {
    let kind = MockKind::from_spec(&args.kind, args.seed)?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    protocol::serve(&mut MockScorer::new(kind), stdin.lock(), stdout.lock())?;
    Ok(())
}
