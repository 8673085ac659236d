//! Subcommand implementations: thin composition over the library modules.

use crate::manifest::{digest_input, InputDigest, RunManifest};
use crate::{
    DtedArgs, Format, LlmArgs, PairsArgs, PipelineArgs, Profile, RunArgs, SanitizeArgs, ScoreArgs,
    ValidateArgs,
};
use anyhow::{bail, Context};
use depeval::conll::{read_conll, write_conll, ReadMode, Treebank, Violation};
use depeval::crosslingual::{consistency_summary, select_pairs, PairSelection};
use depeval::eval::{label_confusion, root_analysis, score as attachment_score};
use depeval::llm::{
    blocks_to_prediction, extract_conll, render_prompt, HttpTransport, LlmClient, LlmConfig,
    PromptTemplate, ResponseCache,
};
use depeval::sanitize::{sanitize as sanitize_banks, DefectClass, SensitiveLexicon};
use depeval::treedist::{build_tree, dted as tree_similarity};
use serde_json::{json, Value};
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

/// Files produced by one invocation, written together with the manifest so
/// a command never leaves a partial output directory silently.
struct Outputs {
    dir: Option<PathBuf>,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: Option<PathBuf>) -> Self {
        Outputs {
            dir,
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn finish(self, command: &str, inputs: Vec<InputDigest>, config: &Value) -> anyhow::Result<()> {
        let Some(dir) = self.dir else {
            return Ok(());
        };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut names: Vec<String> = Vec::new();
        for (name, contents) in &self.files {
            let path = dir.join(name);
            fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
            names.push(name.clone());
        }
        names.sort();
        RunManifest::new(command, inputs, config, names).write(&dir)
    }
}

fn load_text(path: &Path) -> anyhow::Result<(String, InputDigest)> {
    let contents =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = digest_input(path, &contents);
    Ok((contents, digest))
}

/// Read a treebank that must be clean: any violation is an input error.
fn read_bank_strict(path: &Path) -> anyhow::Result<(Treebank, InputDigest)> {
    let (text, digest) = load_text(path)?;
    let (bank, violations) = read_conll(&text, ReadMode::Strict);
    if let Some(v) = violations.first() {
        bail!(
            "{}: {} violation(s), first at block {}: {} {}",
            path.display(),
            violations.len(),
            v.sentence_index,
            v.kind,
            v.detail
        );
    }
    Ok((bank, digest))
}

fn read_bank_lenient(path: &Path) -> anyhow::Result<(Treebank, Vec<Violation>, InputDigest)> {
    let (text, digest) = load_text(path)?;
    let (bank, violations) = read_conll(&text, ReadMode::Lenient);
    Ok((bank, violations, digest))
}

fn json_pretty<T: serde::Serialize>(value: &T) -> String {
    format!(
        "{}\n",
        serde_json::to_string_pretty(value).expect("report serializes")
    )
}

pub fn validate(args: ValidateArgs) -> anyhow::Result<()> {
    let mode = match args.mode.as_str() {
        "strict" => ReadMode::Strict,
        "lenient" => ReadMode::Lenient,
        other => bail!("unknown mode {other:?}; use strict or lenient"),
    };
    let (text, digest) = load_text(&args.file)?;
    let (bank, violations) = read_conll(&text, mode);

    let report = json!({
        "file": args.file.display().to_string(),
        "mode": args.mode,
        "sentences": bank.len(),
        "violations": violations,
    });
    match args.format {
        Format::Json => print!("{}", json_pretty(&report)),
        _ => {
            for v in &violations {
                println!("block {}: {} {}", v.sentence_index, v.kind, v.detail);
            }
            println!(
                "{} sentence(s) kept, {} violation(s)",
                bank.len(),
                violations.len()
            );
        }
    }

    let mut outputs = Outputs::new(args.out);
    outputs.add("violations.json", json_pretty(&report));
    outputs.finish("validate", vec![digest], &json!({"mode": args.mode}))
}

pub fn sanitize(args: SanitizeArgs) -> anyhow::Result<()> {
    let (gold, gold_digest) = read_bank_strict(&args.gold)?;
    let (pred, violations, pred_digest) = read_bank_lenient(&args.pred)?;
    let mut inputs = vec![pred_digest, gold_digest];

    let lexicon = match &args.lexicon {
        Some(path) => {
            let (text, digest) = load_text(path)?;
            inputs.push(digest);
            SensitiveLexicon::from_text(&text)
        }
        None => SensitiveLexicon::empty(),
    };
    let keep: BTreeSet<DefectClass> = args
        .keep_classes
        .iter()
        .map(|name| {
            DefectClass::ALL
                .into_iter()
                .find(|c| c.name() == name)
                .with_context(|| format!("unknown defect class {name:?}"))
        })
        .collect::<anyhow::Result<_>>()?;

    let (filtered, report) = sanitize_banks(&pred, &violations, &gold, &lexicon)?;

    // Optional recovery escape hatch: also keep sentences of the listed
    // classes in the output file. The report itself is untouched.
    let output_bank = if keep.is_empty() {
        filtered
    } else {
        let mut by_id = std::collections::HashMap::new();
        for (idx, sentence) in pred.sentences.iter().enumerate() {
            by_id.entry(sentence.effective_id(idx)).or_insert(sentence);
        }
        let keep_all: BTreeSet<DefectClass> =
            keep.iter().copied().chain([DefectClass::Aligned]).collect();
        let sentences = report
            .per_sentence
            .iter()
            .filter(|o| keep_all.contains(&o.class))
            .filter_map(|o| by_id.get(&o.id).map(|&s| s.clone()))
            .collect();
        Treebank::from_sentences(sentences)
    };

    match args.format {
        Format::Json => print!("{}", json_pretty(&report)),
        _ => {
            println!("retained {} / dropped {}", report.retained, report.dropped);
            for (class, count) in &report.per_class_counts {
                println!("  {class}: {count}");
            }
        }
    }

    let mut outputs = Outputs::new(args.out);
    outputs.add("filtered.conllu", write_conll(&output_bank)?);
    outputs.add("sanitize.json", json_pretty(&report));
    let config = json!({
        "keep_classes": args.keep_classes,
        "lexicon": args.lexicon.as_ref().map(|p| p.display().to_string()),
    });
    outputs.finish("sanitize", inputs, &config)
}

pub fn score(args: ScoreArgs) -> anyhow::Result<()> {
    let (gold, gold_digest) = read_bank_strict(&args.gold)?;
    let (pred, _violations, pred_digest) = read_bank_lenient(&args.pred)?;

    let exclude_punct = args.exclude_punct.unwrap_or(match args.profile {
        Profile::Ud => false,
        Profile::Ptb => true,
    });
    let attachment = attachment_score(&pred, &gold, exclude_punct)?;
    let confusion = label_confusion(&pred, &gold, args.top_k, !args.all_tokens)?;
    let root = root_analysis(&pred, &gold)?;

    let report = json!({
        "attachment": attachment,
        "confusion": confusion,
        "root": root,
    });
    match args.format {
        Format::Json => print!("{}", json_pretty(&report)),
        _ => {
            println!("UAS {:.2} / LAS {:.2}", attachment.uas, attachment.las);
            println!(
                "tokens {}, correct heads {}, correct labeled {}, punctuation excluded: {}",
                attachment.token_total,
                attachment.uas_correct,
                attachment.las_correct,
                attachment.punctuation_excluded
            );
            if !confusion.is_empty() {
                println!("label confusion (gold -> predicted):");
                for entry in &confusion {
                    println!(
                        "  {} -> {}: {}",
                        entry.gold_label, entry.predicted_label, entry.count
                    );
                }
            }
            println!(
                "root categories over {} sentence pair(s):",
                root.sentence_pairs
            );
            for (category, count) in &root.per_category {
                println!("  {category}: {count}");
            }
        }
    }

    let mut outputs = Outputs::new(args.out);
    outputs.add("report.json", json_pretty(&report));
    let config = json!({
        "profile": match args.profile { Profile::Ud => "ud", Profile::Ptb => "ptb" },
        "exclude_punct": exclude_punct,
        "top_k": args.top_k,
        "all_tokens": args.all_tokens,
    });
    outputs.finish("score", vec![pred_digest, gold_digest], &config)
}

pub fn dted(args: DtedArgs) -> anyhow::Result<()> {
    let (bank_a, digest_a) = read_bank_strict(&args.file_a)?;
    let (bank_b, digest_b) = read_bank_strict(&args.file_b)?;
    if bank_a.len() != bank_b.len() {
        bail!(
            "files pair sentences positionally but have {} vs {} sentences",
            bank_a.len(),
            bank_b.len()
        );
    }

    let mut rows = Vec::new();
    for (idx, (sa, sb)) in bank_a
        .sentences
        .iter()
        .zip(bank_b.sentences.iter())
        .enumerate()
    {
        let ta = build_tree(sa, args.label_mode)
            .with_context(|| format!("sentence {} of {}", idx, args.file_a.display()))?;
        let tb = build_tree(sb, args.label_mode)
            .with_context(|| format!("sentence {} of {}", idx, args.file_b.display()))?;
        let score = tree_similarity(&ta, &tb);
        rows.push(json!({
            "id_a": sa.effective_id(idx),
            "id_b": sb.effective_id(idx),
            "edit_dist": score.edit_dist,
            "score": score.score,
        }));
    }

    let tsv = {
        let mut text = String::from("id_a\tid_b\tedit_dist\tscore\n");
        for row in &rows {
            text.push_str(&format!(
                "{}\t{}\t{}\t{:.6}\n",
                row["id_a"].as_str().unwrap(),
                row["id_b"].as_str().unwrap(),
                row["edit_dist"],
                row["score"].as_f64().unwrap(),
            ));
        }
        text
    };
    match args.format {
        Format::Json => print!("{}", json_pretty(&rows)),
        _ => print!("{tsv}"),
    }

    let mut outputs = Outputs::new(args.out);
    outputs.add("scores.tsv", tsv);
    outputs.add("scores.json", json_pretty(&rows));
    let config = json!({"label_mode": args.label_mode.name()});
    outputs.finish("dted", vec![digest_a, digest_b], &config)
}

fn pairs_tsv(selection: &PairSelection) -> String {
    let mut text = String::new();
    if selection.truncated {
        text.push_str(&format!(
            "# warning: only {} of {} requested pairs were achievable\n",
            selection.pairs.len(),
            selection.k
        ));
    }
    text.push_str("id_a\tid_b\tscore\n");
    for pair in &selection.pairs {
        text.push_str(&format!(
            "{}\t{}\t{:.6}\n",
            pair.id_a, pair.id_b, pair.dted.score
        ));
    }
    text
}

pub fn pairs(args: PairsArgs) -> anyhow::Result<()> {
    let (bank_a, digest_a) = read_bank_strict(&args.file_a)?;
    let (bank_b, digest_b) = read_bank_strict(&args.file_b)?;
    let selection = select_pairs(
        &bank_a,
        &bank_b,
        args.k,
        args.label_mode,
        args.length_window,
        args.allow_repeats,
    )?;

    let tsv = pairs_tsv(&selection);
    match args.format {
        Format::Json => print!("{}", json_pretty(&selection)),
        _ => print!("{tsv}"),
    }

    let mut outputs = Outputs::new(args.out);
    outputs.add("pairs.tsv", tsv);
    let config = json!({
        "k": args.k,
        "label_mode": args.label_mode.name(),
        "length_window": args.length_window,
        "allow_repeats": args.allow_repeats,
    });
    outputs.finish("pairs", vec![digest_a, digest_b], &config)
}

/// Template, client, and the template file digest.
fn llm_setup(llm: &LlmArgs) -> anyhow::Result<(PromptTemplate, LlmClient, InputDigest)> {
    let (template_text, template_digest) = load_text(&llm.template)?;
    let template: PromptTemplate = serde_json::from_str(&template_text)
        .with_context(|| format!("parsing template {}", llm.template.display()))?;
    let config = LlmConfig {
        endpoint_url: llm.endpoint.clone(),
        model_name: llm.model.clone(),
        temperature: llm.temperature,
        max_retries: llm.max_retries,
        timeout: Duration::from_secs(llm.timeout_secs),
        api_key_env: llm.api_key_env.clone(),
    };
    let cache = ResponseCache::open(&llm.cache_dir)?;
    let client = if llm.offline {
        LlmClient::offline(config, cache)
    } else {
        LlmClient::online(config, cache, Box::new(HttpTransport::new()?))
    };
    Ok((template, client, template_digest))
}

fn llm_config_json(llm: &LlmArgs, template: &PromptTemplate) -> Value {
    json!({
        "endpoint": llm.endpoint,
        "model": llm.model,
        "temperature": llm.temperature,
        "max_retries": llm.max_retries,
        "timeout_secs": llm.timeout_secs,
        "api_key_env": llm.api_key_env,
        "offline": llm.offline,
        "parallelism": llm.parallelism,
        "template_id": template.template_id,
        "template_version": template.version,
    })
}

/// Prompt every sentence of a bank, extract CoNLL candidates, and bridge
/// them into a predicted treebank. Responses come back as JSONL records.
fn run_bank(
    client: &LlmClient,
    template: &PromptTemplate,
    bank: &Treebank,
    parallelism: usize,
) -> anyhow::Result<(Treebank, Vec<Violation>, String)> {
    let prompts: Vec<String> = bank
        .sentences
        .iter()
        .map(|s| render_prompt(template, s))
        .collect::<Result<_, _>>()?;
    let results = client.complete_batch(template, &prompts, parallelism);

    let mut sentences = Vec::with_capacity(bank.len());
    let mut violations = Vec::new();
    let mut jsonl = String::new();
    for (idx, result) in results.into_iter().enumerate() {
        let id = bank.sentences[idx].effective_id(idx);
        let raw = result.with_context(|| format!("completing sentence {id}"))?;
        let key = ResponseCache::key(
            &client.config().model_name,
            &template.template_id,
            &template.version,
            &prompts[idx],
        );
        jsonl.push_str(&json!({"id": id, "key": key, "raw": raw}).to_string());
        jsonl.push('\n');

        let blocks = extract_conll(&raw);
        let (sentence, sentence_violations) = blocks_to_prediction(&blocks, &id);
        for mut v in sentence_violations {
            v.sentence_index = idx;
            violations.push(v);
        }
        sentences.push(sentence);
    }
    Ok((Treebank::from_sentences(sentences), violations, jsonl))
}

pub fn run(args: RunArgs) -> anyhow::Result<()> {
    let (gold, gold_digest) = read_bank_strict(&args.gold)?;
    let (template, client, template_digest) = llm_setup(&args.llm)?;
    let (predicted, violations, jsonl) = run_bank(&client, &template, &gold, args.llm.parallelism)?;

    let flagged = violations
        .iter()
        .map(|v| v.sentence_index)
        .collect::<BTreeSet<_>>()
        .len();
    println!(
        "completed {} sentence(s), {} with extraction issues",
        gold.len(),
        flagged
    );

    let mut outputs = Outputs::new(Some(args.out));
    outputs.add("predictions.conllu", write_conll(&predicted)?);
    outputs.add("responses.jsonl", jsonl);
    outputs.add("extraction_violations.json", json_pretty(&violations));
    outputs.finish(
        "run",
        vec![gold_digest, template_digest],
        &llm_config_json(&args.llm, &template),
    )
}

fn subset_by_ids(bank: &Treebank, wanted: &BTreeSet<String>) -> Treebank {
    let sentences = bank
        .sentences
        .iter()
        .enumerate()
        .filter(|(idx, s)| wanted.contains(&s.effective_id(*idx)))
        .map(|(_, s)| s.clone())
        .collect();
    Treebank {
        sentences,
        language_tag: bank.language_tag.clone(),
        name: bank.name.clone(),
    }
}

pub fn pipeline(args: PipelineArgs) -> anyhow::Result<()> {
    let (gold_a, digest_a) = read_bank_strict(&args.gold_a)?;
    let (gold_b, digest_b) = read_bank_strict(&args.gold_b)?;
    let (template, client, template_digest) = llm_setup(&args.llm)?;
    let mut inputs = vec![digest_a, digest_b, template_digest];

    let lexicon = match &args.lexicon {
        Some(path) => {
            let (text, digest) = load_text(path)?;
            inputs.push(digest);
            SensitiveLexicon::from_text(&text)
        }
        None => SensitiveLexicon::empty(),
    };

    let selection = select_pairs(
        &gold_a,
        &gold_b,
        args.k,
        args.label_mode,
        args.length_window,
        args.allow_repeats,
    )?;

    let ids_a: BTreeSet<String> = selection.pairs.iter().map(|p| p.id_a.clone()).collect();
    let ids_b: BTreeSet<String> = selection.pairs.iter().map(|p| p.id_b.clone()).collect();
    let subset_a = subset_by_ids(&gold_a, &ids_a);
    let subset_b = subset_by_ids(&gold_b, &ids_b);

    let (pred_a, violations_a, jsonl_a) =
        run_bank(&client, &template, &subset_a, args.llm.parallelism)?;
    let (pred_b, violations_b, jsonl_b) =
        run_bank(&client, &template, &subset_b, args.llm.parallelism)?;

    let (filtered_a, report_a) = sanitize_banks(&pred_a, &violations_a, &subset_a, &lexicon)?;
    let (filtered_b, report_b) = sanitize_banks(&pred_b, &violations_b, &subset_b, &lexicon)?;

    let summary = consistency_summary(&filtered_a, &filtered_b, &selection, args.label_mode)?;

    match summary.ratio {
        Some(ratio) => println!(
            "mean_pred {:.6} mean_gold {:.6} ratio {:.6} skipped {}",
            summary.mean_pred, summary.mean_gold, ratio, summary.skipped
        ),
        None => println!(
            "mean_pred {:.6} mean_gold {:.6} ratio n/a skipped {}",
            summary.mean_pred, summary.mean_gold, summary.skipped
        ),
    }

    let mut outputs = Outputs::new(Some(args.out));
    outputs.add("selection.tsv", pairs_tsv(&selection));
    outputs.add("predictions_a.conllu", write_conll(&pred_a)?);
    outputs.add("predictions_b.conllu", write_conll(&pred_b)?);
    outputs.add("responses_a.jsonl", jsonl_a);
    outputs.add("responses_b.jsonl", jsonl_b);
    outputs.add("sanitize_a.json", json_pretty(&report_a));
    outputs.add("sanitize_b.json", json_pretty(&report_b));
    outputs.add("consistency.json", json_pretty(&summary));
    let mut config = llm_config_json(&args.llm, &template);
    let extra = json!({
        "k": args.k,
        "label_mode": args.label_mode.name(),
        "length_window": args.length_window,
        "allow_repeats": args.allow_repeats,
        "lexicon": args.lexicon.as_ref().map(|p| p.display().to_string()),
    });
    for (key, value) in extra.as_object().unwrap() {
        config[key] = value.clone();
    }
    outputs.finish("pipeline", inputs, &config)
}
