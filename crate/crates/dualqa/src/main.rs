use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use dualqa::augment::{augment_dataset, build_entity_pool, parse_type_set, read_augmented, write_augmented, AugmentConfig, ExampleType};
use dualqa::corpus::{load_dataset, Split};
use dualqa::format::{encode_target, parse_prediction, read_predictions, AnswerPair, OutputMode, Parsed};
use dualqa::manifest::RunManifest;
use dualqa::metrics::{evaluate, EvalOptions, IdSubset};
use dualqa::overlap::{build_answer_index, split_ao_nao, write_id_list, read_id_list};
use dualqa::simulator::{simulate, BehaviorProfile, ProfileKind};
use dualqa::tagger::{load_gazetteer, Gazetteer};
use dualqa::{Error, Result};

/// Builds and scores QA datasets whose models answer from both the given
/// context and their own memory.
#[derive(Parser)]
#[command(name = "dualqa", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive training/evaluation examples from a source corpus.
    Augment {
        /// Source corpus (JSON lines).
        #[arg(long)]
        input: PathBuf,
        /// Split label the corpus records must carry.
        #[arg(long, default_value = "train")]
        split: String,
        /// Gazetteer TSV for tagging answers; omit to rely on corpus-provided
        /// entity types only.
        #[arg(long)]
        gazetteer: Option<PathBuf>,
        /// Comma-separated example types: f, cf, e, r, a (= e+r), or all.
        #[arg(long, default_value = "all")]
        types: String,
        /// Seed for every per-example random stream.
        #[arg(long)]
        seed: u64,
        /// Output JSON-lines file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a prediction file against an augmented evaluation set.
    Evaluate {
        /// Predictions (JSON lines with id and output).
        #[arg(long)]
        predictions: PathBuf,
        /// Augmented evaluation set (JSON lines).
        #[arg(long)]
        eval: PathBuf,
        /// Output format the predictions use: single or multi.
        #[arg(long)]
        mode: String,
        /// Drop examples whose base example contains table markup.
        #[arg(long)]
        exclude_tables: bool,
        /// Restrict scoring to the ids listed in this file (one per line).
        #[arg(long)]
        subset: Option<PathBuf>,
        /// Report path; the JSON lands here, the aligned table at <out>.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition an evaluation set by train/eval answer overlap.
    Overlap {
        /// Training corpus (JSON lines).
        #[arg(long)]
        train: PathBuf,
        /// Split label the training records must carry.
        #[arg(long, default_value = "train")]
        train_split: String,
        /// Augmented evaluation set (JSON lines).
        #[arg(long)]
        eval: PathBuf,
        /// Stem for the two id lists: <stem>.ao.ids and <stem>.nao.ids.
        #[arg(long)]
        out_stem: PathBuf,
    },
    /// Fabricate predictions for an evaluation set under a behavior profile.
    Simulate {
        /// Augmented evaluation set (JSON lines).
        #[arg(long)]
        eval: PathBuf,
        /// context-reliant, parametric-reliant, disentangled, or leaky.
        #[arg(long)]
        profile: String,
        /// Probability the contextual slot copies memory (leaky profile).
        #[arg(long, default_value_t = 0.0)]
        leak: f64,
        /// Seed for the leak coin flips.
        #[arg(long)]
        seed: u64,
        /// Output format to emit: single or multi.
        #[arg(long, default_value = "multi")]
        mode: String,
        /// Output prediction file (JSON lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode answer pairs from stdin to stdout, one per line.
    /// Multi mode reads contextual<TAB>parametric; single mode reads the
    /// contextual answer alone.
    Encode {
        /// single or multi.
        #[arg(long)]
        mode: String,
    },
    /// Parse raw prediction strings from stdin to JSON on stdout, one per line.
    Parse {
        /// single or multi.
        #[arg(long)]
        mode: String,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Augment {
            input,
            split,
            gazetteer,
            types,
            seed,
            out,
        } => cmd_augment(&input, &split, gazetteer.as_deref(), &types, seed, &out),
        Command::Evaluate {
            predictions,
            eval,
            mode,
            exclude_tables,
            subset,
            out,
        } => cmd_evaluate(&predictions, &eval, &mode, exclude_tables, subset.as_deref(), &out),
        Command::Overlap {
            train,
            train_split,
            eval,
            out_stem,
        } => cmd_overlap(&train, &train_split, &eval, &out_stem),
        Command::Simulate {
            eval,
            profile,
            leak,
            seed,
            mode,
            out,
        } => cmd_simulate(&eval, &profile, leak, seed, &mode, &out),
        Command::Encode { mode } => cmd_encode(&mode),
        Command::Parse { mode } => cmd_parse(&mode),
    }
}

fn cmd_augment(
    input: &Path,
    split: &str,
    gazetteer_path: Option<&Path>,
    types: &str,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let split: Split = split.parse()?;
    let enabled = parse_type_set(types)?;
    let dataset = load_dataset(input, split)?;
    let gazetteer = match gazetteer_path {
        Some(path) => load_gazetteer(path)?,
        None => Gazetteer::empty(),
    };
    let pool = build_entity_pool(&dataset, &gazetteer);
    let config = AugmentConfig::new(seed, enabled.iter().copied())?;
    let outcome = augment_dataset(&dataset, &pool, &config);

    write_augmented(&outcome.examples, out)?;
    let mut manifest = RunManifest::start("augment")
        .input("input", input)
        .output(out)
        .seed(seed)
        .config(serde_json::json!({
            "split": split.to_string(),
            "types": enabled.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "max_attempts": config.max_attempts,
        }));
    if let Some(path) = gazetteer_path {
        manifest = manifest.input("gazetteer", path);
    }
    manifest.finish(out)?;

    for skip in &outcome.skips {
        eprintln!("warning: skipped {skip}");
    }
    for t in ExampleType::ALL {
        if enabled.contains(&t) {
            println!("{t}: {}", outcome.count(t));
        }
    }
    println!("wrote {} examples to {}", outcome.examples.len(), out.display());
    Ok(())
}

fn subset_label(path: &Path) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    if name.ends_with(".ao.ids") {
        Some("ao".to_string())
    } else if name.ends_with(".nao.ids") {
        Some("nao".to_string())
    } else {
        None
    }
}

fn cmd_evaluate(
    predictions_path: &Path,
    eval_path: &Path,
    mode: &str,
    exclude_tables: bool,
    subset_path: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let mode: OutputMode = mode.parse()?;
    let predictions = read_predictions(predictions_path)?;
    let eval_set = read_augmented(eval_path)?;
    let subset = match subset_path {
        Some(path) => Some(IdSubset::new(subset_label(path), read_id_list(path)?)),
        None => None,
    };
    let options = EvalOptions {
        exclude_tables,
        subset,
    };
    let report = evaluate(&predictions, &eval_set, mode, &options)?;

    report.write_json(out)?;
    let table_path = {
        let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".txt");
        out.with_file_name(name)
    };
    report.write_table(&table_path)?;
    let mut manifest = RunManifest::start("evaluate")
        .input("predictions", predictions_path)
        .input("eval", eval_path)
        .output(out)
        .output(&table_path)
        .config(serde_json::json!({
            "mode": mode.to_string(),
            "exclude_tables": exclude_tables,
        }));
    if let Some(path) = subset_path {
        manifest = manifest.input("subset", path);
    }
    manifest.finish(out)?;

    print!("{}", report.render_table());
    println!("evaluated {} records; report at {}", report.total_count(), out.display());
    Ok(())
}

fn cmd_overlap(train: &Path, train_split: &str, eval: &Path, out_stem: &Path) -> Result<()> {
    let split: Split = train_split.parse()?;
    let train_set = load_dataset(train, split)?;
    let eval_set = read_augmented(eval)?;
    let index = build_answer_index(&train_set);
    let (ao, nao) = split_ao_nao(&eval_set, &index);

    let stem = out_stem.display().to_string();
    let ao_path = PathBuf::from(format!("{stem}.ao.ids"));
    let nao_path = PathBuf::from(format!("{stem}.nao.ids"));
    write_id_list(&ao, &ao_path)?;
    write_id_list(&nao, &nao_path)?;
    RunManifest::start("overlap")
        .input("train", train)
        .input("eval", eval)
        .output(&ao_path)
        .output(&nao_path)
        .config(serde_json::json!({
            "train_split": split.to_string(),
            "indexed_answers": index.len(),
        }))
        .finish(&ao_path)?;

    println!("answer overlap: {} ids -> {}", ao.len(), ao_path.display());
    println!("no answer overlap: {} ids -> {}", nao.len(), nao_path.display());
    Ok(())
}

fn cmd_simulate(
    eval: &Path,
    profile_name: &str,
    leak: f64,
    seed: u64,
    mode: &str,
    out: &Path,
) -> Result<()> {
    let kind: ProfileKind = profile_name.parse()?;
    let mode: OutputMode = mode.parse()?;
    let eval_set = read_augmented(eval)?;
    let profile = BehaviorProfile::with_default_memory(kind, seed, &eval_set).with_leak(leak)?;
    let predictions = simulate(&profile, &eval_set, mode)?;

    dualqa::format::write_predictions(&predictions, out)?;
    RunManifest::start("simulate")
        .input("eval", eval)
        .output(out)
        .seed(seed)
        .config(serde_json::json!({
            "profile": kind.to_string(),
            "leak": leak,
            "mode": mode.to_string(),
        }))
        .finish(out)?;

    println!("wrote {} predictions to {}", predictions.len(), out.display());
    Ok(())
}

fn cmd_encode(mode: &str) -> Result<()> {
    let mode: OutputMode = mode.parse()?;
    let stdin = std::io::stdin().lock();
    let mut stdout = std::io::stdout().lock();
    for (idx, line) in stdin.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let pair = match mode {
            OutputMode::Single => AnswerPair::new(line.as_str(), line.as_str()),
            OutputMode::Multi => {
                let Some((contextual, parametric)) = line.split_once('\t') else {
                    return Err(Error::InvalidConfig(format!(
                        "stdin line {}: expected contextual<TAB>parametric",
                        idx + 1
                    )));
                };
                AnswerPair::new(contextual, parametric)
            }
        };
        writeln!(stdout, "{}", encode_target(&pair, mode))?;
    }
    Ok(())
}

fn cmd_parse(mode: &str) -> Result<()> {
    let mode: OutputMode = mode.parse()?;
    let stdin = std::io::stdin().lock();
    let mut stdout = std::io::stdout().lock();
    for line in stdin.lines() {
        let line = line?;
        let value = match parse_prediction(&line, mode) {
            Parsed::Pair(pair) => serde_json::json!({
                "status": "pair",
                "contextual": pair.contextual,
                "parametric": pair.parametric,
            }),
            Parsed::Single(answer) => serde_json::json!({
                "status": "single",
                "answer": answer,
            }),
            Parsed::Failure => serde_json::json!({ "status": "failure" }),
        };
        writeln!(stdout, "{value}")?;
    }
    Ok(())
}
