use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use corpusdedup::corpus::{ingest_java_tree, ingest_threads, read_id_list, write_record_file, JavaIngestOptions, ThreadOptions};
use corpusdedup::dedup::{
    build_corpus_indexes, dedup_testset, merge_reports, read_report, read_test_file, removal_list, render_id_list, threshold_sweep,
    DedupError, DedupJob, IndexConfig, SweepOptions, VerifyMode,
};
use corpusdedup::minhash::{DEFAULT_PERMUTATIONS, DEFAULT_SEED};
use corpusdedup::textprep::{corpus_stats, write_token_shards, BpeVocab, ShardOptions, DEFAULT_SPLIT_SEED};
use corpusdedup::{CorpusStore, ShingleConfig};

#[derive(Parser)]
#[command(name = "corpusdedup", version, about = "Near-duplicate detection and dataset preparation for code corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Java,
    Threads,
}

#[derive(Subcommand)]
enum Command {
    /// Add Java methods or discussion threads to a corpus store.
    Ingest {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Directory of projects (java) or a JSON-lines file (threads).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        store: PathBuf,
        /// Prepend each method's doc comment to its text.
        #[arg(long)]
        with_doc_comments: bool,
        /// Keep HTML markup in thread posts.
        #[arg(long)]
        keep_markup: bool,
    },
    /// Build partitioned LSH indexes over a store.
    BuildIndex {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        threshold: f64,
        #[arg(long, default_value_t = 1)]
        parts: u32,
        #[arg(long)]
        out: PathBuf,
        /// Dataset name used in file names; defaults to the store directory name.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
        permutations: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Shingle width in word tokens.
        #[arg(long, default_value_t = 3)]
        shingle: usize,
        /// Skip signature sidecars (signature verification then unavailable).
        #[arg(long)]
        no_sidecars: bool,
    },
    /// Check a test set against an index over a part range.
    Check {
        #[arg(long = "test-file", alias = "test_filename")]
        test_file: PathBuf,
        #[arg(long = "lsh-dir", alias = "lsh_dir")]
        lsh_dir: PathBuf,
        #[arg(long)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        partstart: u32,
        /// Exclusive; defaults to the part count.
        #[arg(long)]
        partend: Option<u32>,
        #[arg(long, default_value = "signature")]
        verify: VerifyMode,
        #[arg(long, alias = "dedup_outfile")]
        out: PathBuf,
        /// Test input is raw text files (a directory or one file), ids by position.
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        dataset: Option<String>,
        /// Corpus store for exact verification, overriding the manifest.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Merge report files into one entry per test id.
    Merge {
        #[arg(long = "in", num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// List test ids with at least one match.
    RemovalList {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count matched test documents at several thresholds (exact verification).
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        thresholds: Vec<f64>,
        #[arg(long)]
        store: PathBuf,
        #[arg(long = "test-file")]
        test_file: PathBuf,
        #[arg(long)]
        raw: bool,
        /// Use each threshold's own band plan instead of shared candidates.
        #[arg(long)]
        per_threshold: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write tokenized train/val shards, skipping excluded ids.
    Shards {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        exclude: Option<PathBuf>,
        /// Fraction of documents routed to the validation split.
        #[arg(long, default_value_t = 0.005)]
        split: f64,
        #[arg(long, default_value_t = DEFAULT_SPLIT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Token-length statistics against a context window.
    Stats {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = 256)]
        context: usize,
    },
    /// Write the documents with the listed ids as a test file.
    Holdout {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        ids: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
}

fn open_or_new_store(dir: &Path) -> Result<CorpusStore> {
    if dir.join("meta").is_file() {
        Ok(CorpusStore::load(dir)?)
    } else {
        Ok(CorpusStore::new())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { kind, input, store, with_doc_comments, keep_markup } => {
            let mut s = open_or_new_store(&store)?;
            let before = s.len();
            match kind {
                Kind::Java => {
                    let r = ingest_java_tree(&mut s, &input, &JavaIngestOptions { include_doc_comment: with_doc_comments })?;
                    for (path, err) in &r.discarded_files {
                        eprintln!("discarded {}: {err}", path.display());
                    }
                    println!(
                        "projects={} files={} discarded_files={} methods_found={} methods_kept={}",
                        r.projects,
                        r.files,
                        r.discarded_files.len(),
                        r.methods_found,
                        r.methods_kept
                    );
                }
                Kind::Threads => {
                    let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
                    let r = ingest_threads(BufReader::new(file), &ThreadOptions { strip_markup: !keep_markup }, &mut s)?;
                    println!("ingested={} skipped={}", r.ingested.len(), r.skipped);
                }
            }
            s.save(&store)?;
            println!("store={} documents={} added={}", store.display(), s.len(), s.len() - before);
        }
        Command::BuildIndex { store, threshold, parts, out, dataset, permutations, seed, shingle, no_sidecars } => {
            let s = CorpusStore::load(&store)?;
            let dataset = match dataset {
                Some(d) => d,
                None => std::path::absolute(&store)?.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "corpus".into()),
            };
            let config = IndexConfig {
                k: permutations,
                seed,
                shingle: ShingleConfig::with_n(shingle),
                sidecars: !no_sidecars,
                ..IndexConfig::new(dataset, threshold, parts)
            };
            let m = build_corpus_indexes(&s, &config, &out, Some(&store))?;
            println!(
                "dataset={} threshold={} bands={} rows={} parts={} documents={}",
                m.dataset, m.threshold, m.plan.bands, m.plan.rows, m.part_count, m.doc_count
            );
        }
        Command::Check { test_file, lsh_dir, threshold, partstart, partend, verify, out, raw, dataset, store } => {
            let tests = read_test_file(&test_file, raw)?;
            let job = DedupJob { index_dir: lsh_dir, dataset, threshold, part_start: partstart, part_end: partend, verify, store };
            let report = dedup_testset(&job, &tests)?;
            report.write(&out)?;
            let flagged = removal_list(&report.merged()).len();
            println!("tests={} flagged={} parts={}..{} out={}", tests.len(), flagged, report.parts.0, report.parts.1, out.display());
        }
        Command::Merge { inputs, out } => {
            let reports = inputs.iter().map(|p| read_report(p)).collect::<Result<Vec<_>, _>>()?;
            let merged = merge_reports(&reports)?;
            merged.write(&out)?;
            println!("inputs={} tests={} out={}", reports.len(), merged.entries.len(), out.display());
        }
        Command::RemovalList { report, out } => {
            let ids = removal_list(&read_report(&report)?);
            std::fs::write(&out, render_id_list(&ids)).with_context(|| format!("writing {}", out.display()))?;
            println!("removal_ids={} out={}", ids.len(), out.display());
        }
        Command::Sweep { thresholds, store, test_file, raw, per_threshold, out } => {
            let s = CorpusStore::load(&store)?;
            let tests = read_test_file(&test_file, raw)?;
            let options = SweepOptions { shared_candidates: !per_threshold, ..SweepOptions::default() };
            let sweep = threshold_sweep(&tests, &s, &thresholds, &options)?;
            let text = sweep.render();
            match out {
                Some(path) => std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Shards { store, vocab, exclude, split, seed, out } => {
            let s = CorpusStore::load(&store)?;
            let v = BpeVocab::from_dir(&vocab)?;
            let exclusion = match exclude {
                Some(p) => read_id_list(&p)?,
                None => BTreeSet::new(),
            };
            let m = write_token_shards(&s, &v, &exclusion, &ShardOptions { val_fraction: split, seed }, &out)?;
            println!(
                "train_tokens={} train_documents={} val_tokens={} val_documents={} excluded={}",
                m.train.tokens, m.train.documents, m.val.tokens, m.val.documents, m.excluded_documents
            );
        }
        Command::Stats { store, vocab, context } => {
            let s = CorpusStore::load(&store)?;
            let v = BpeVocab::from_dir(&vocab)?;
            let st = corpus_stats(&s, &v, context);
            let counts = s.counts();
            println!("documents={} java_method={} discussion_thread={}", s.len(), counts.java_method, counts.discussion_thread);
            println!(
                "tokens={} context={} within_context={} coverage={:.4}",
                st.token_count,
                st.context_length,
                st.within_context,
                st.coverage()
            );
        }
        Command::Holdout { store, ids, out } => {
            let s = CorpusStore::load(&store)?;
            let h = s.extract_holdout(&read_id_list(&ids)?)?;
            write_record_file(&out, &h.holdout)?;
            println!("holdout={} remainder={} out={}", h.holdout.len(), h.remainder_ids.len(), out.display());
        }
        Command::Serve { config } => {
            let cfg = corpusdedup_service::ServiceConfig::load(&config)?.with_env_overrides();
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(corpusdedup_service::serve(cfg, Some(config)))?;
        }
    }
    Ok(())
}

/// 2 for usage problems, 4 when an I/O error is anywhere in the chain, 3 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<DedupError>() {
            if matches!(
                e,
                DedupError::InvalidPartRange { .. } | DedupError::InvalidThreshold(_) | DedupError::UnsortedThresholds | DedupError::InvalidConfig(_)
            ) {
                return 2;
            }
        }
    }
    if err.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) {
        4
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

