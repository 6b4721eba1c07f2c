use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use braglab_core::corpus::DatasetSplit;
use braglab_core::evaluation::{round2, EvalReport};
use braglab_models::{evaluate as eval_models, evaluate_subset, learning_curve as curve, train as train_models, Arch, Dataset, ModelConfig, TrainedModel};
use clap::{ArgGroup, Args};
use serde_json::json;

use crate::corpus_cmd::{load_posts, preprocessor, queries_or_default};
use crate::plot::{confusion_svg, curve_svg};
use crate::resolve_input;
use crate::rundir::RunDir;
use crate::settings::ModelArgs;

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Labelled corpus.
    #[arg(long, default_value = "corpus.jsonl")]
    pub corpus: PathBuf,
    /// Split file written by `split`.
    #[arg(long, default_value = "split.json")]
    pub split: PathBuf,
    /// Query file whose hashtags are stripped during preprocessing.
    #[arg(long)]
    pub queries: Option<PathBuf>,
}

impl DataArgs {
    fn params(&self) -> serde_json::Value {
        json!({ "corpus": self.corpus, "split": self.split, "queries": self.queries })
    }

    fn load(&self, run: &mut RunDir) -> Result<Dataset> {
        let (corpus_path, posts) = load_posts(&self.corpus)?;
        let split_path = resolve_input(&self.split);
        let split: DatasetSplit = serde_json::from_str(
            &std::fs::read_to_string(&split_path).with_context(|| format!("reading {}", split_path.display()))?,
        )
        .with_context(|| format!("parsing {}", split_path.display()))?;
        split.check_disjoint()?;
        run.input("corpus", &corpus_path)?;
        run.input("split", &split_path)?;
        if let Some(q) = &self.queries {
            run.input("queries", &resolve_input(q))?;
        }
        let queries = queries_or_default(self.queries.as_deref())?;
        Ok(Dataset::from_split(&posts, &split, &preprocessor(&queries))?)
    }
}

fn config_params(config: &ModelConfig, data: &DataArgs) -> Result<serde_json::Value> {
    Ok(json!({ "model": serde_json::to_value(config)?, "data": data.params() }))
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
}

pub fn train(out: &Path, a: &TrainArgs) -> Result<PathBuf> {
    let config = a.model.resolve(Arch::Transformer)?;
    let mut run = RunDir::create(out, "train", config_params(&config, &a.data)?)?;
    let data = a.data.load(&mut run)?;
    let models = train_models(&config, &data)?;
    let mut seeds = Vec::new();
    for m in &models {
        let rel = format!("models/seed-{}", m.seed);
        m.save(run.path().join(&rel))?;
        let best = m.training_log.iter().min_by(|x, y| x.dev_loss.total_cmp(&y.dev_loss));
        seeds.push(json!({
            "seed": m.seed,
            "epochs": m.training_log.len(),
            "best_epoch": best.map(|b| b.epoch),
            "best_dev_loss": best.map(|b| b.dev_loss),
            "best_dev_macro_f1": best.map(|b| round2(b.dev_macro_f1)),
            "parameters": m.num_parameters(),
        }));
    }
    run.register_tree("models")?;
    run.set_summary(json!({
        "train": data.train.len(),
        "dev": data.dev.len(),
        "seeds": seeds,
    }));
    run.finish()
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["checkpoint", "model"])))]
pub struct EvaluateArgs {
    /// Directory holding checkpoints from `train` (its `models` directory,
    /// one `seed-*` directory, or the run directory itself).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Restrict scoring to the post ids in this file (one per line).
    #[arg(long)]
    pub subset: Option<PathBuf>,
}

fn checkpoint_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join("config.json").is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let base = if root.join("models").is_dir() { root.join("models") } else { root.to_path_buf() };
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&base)
        .with_context(|| format!("reading {}", base.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("config.json").is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("no checkpoints under {}", root.display());
    }
    Ok(dirs)
}

fn report_files(run: &mut RunDir, report: &EvalReport) -> Result<()> {
    run.write_json("eval_report.json", report)?;
    run.write_text("confusion.csv", &report.confusion_csv(false))?;
    run.write_text("confusion_normalized.csv", &report.confusion_csv(true))?;
    run.write_text(
        "confusion.svg",
        &confusion_svg(&report.labels, &report.normalized_confusion, "Confusion matrix (rows: actual)"),
    )?;
    run.set_summary(json!({
        "n": report.n,
        "seeds": report.per_seed.len(),
        "precision": round2(report.mean.precision),
        "recall": round2(report.mean.recall),
        "f1": round2(report.mean.f1),
        "f1_std": round2(report.std.f1),
    }));
    Ok(())
}

pub fn evaluate(out: &Path, a: &EvaluateArgs) -> Result<PathBuf> {
    let (models, params) = match &a.checkpoint {
        Some(c) => {
            let dirs = checkpoint_dirs(c)?;
            let models = dirs.iter().map(TrainedModel::load).collect::<braglab_models::Result<Vec<_>>>()?;
            (Some(models), json!({ "checkpoint": c, "data": a.data.params(), "subset": a.subset }))
        }
        None => {
            let config = a.model.resolve(Arch::Majority)?;
            (None, json!({ "model": serde_json::to_value(&config)?, "data": a.data.params(), "subset": a.subset }))
        }
    };
    let mut run = RunDir::create(out, "evaluate", params)?;
    let data = a.data.load(&mut run)?;
    let models = match models {
        Some(m) => {
            for d in checkpoint_dirs(a.checkpoint.as_ref().unwrap())? {
                run.input(&format!("checkpoint:{}", d.display()), &d.join("model.safetensors"))?;
            }
            m
        }
        None => train_models(&a.model.resolve(Arch::Majority)?, &data)?,
    };
    let report = match &a.subset {
        Some(s) => {
            let path = resolve_input(s);
            run.input("subset", &path)?;
            let ids: Vec<String> = std::fs::read_to_string(&path)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect();
            evaluate_subset(&models, &data.test, &ids)?
        }
        None => eval_models(&models, &data.test)?,
    };
    let mut preds = String::from("id,gold");
    for m in &models {
        preds.push_str(&format!(",seed_{}", m.seed));
    }
    preds.push('\n');
    let per_model: Vec<Vec<usize>> = models
        .iter()
        .map(|m| m.predict_examples(&data.test).map(|p| p.into_iter().map(|p| p.label).collect()))
        .collect::<braglab_models::Result<_>>()?;
    let task = models[0].task();
    for (i, e) in data.test.iter().enumerate() {
        preds.push_str(&format!("{},{}", e.id, report.labels[task.class_of(e.label)]));
        for p in &per_model {
            preds.push_str(&format!(",{}", report.labels[p[i]]));
        }
        preds.push('\n');
    }
    run.write_text("predictions.csv", &preds)?;
    report_files(&mut run, &report)?;
    run.finish()
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Increasing training-set fractions in (0, 1].
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75,1.0")]
    pub fractions: Vec<f64>,
    /// Seed for subsampling and training; the first configured seed if absent.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn learning_curve(out: &Path, a: &CurveArgs) -> Result<PathBuf> {
    let config = a.model.resolve(Arch::LrBow)?;
    let seed = a.seed.unwrap_or(config.seeds[0]);
    let mut params = config_params(&config, &a.data)?;
    params["fractions"] = json!(a.fractions);
    params["seed"] = json!(seed);
    let mut run = RunDir::create(out, "learning-curve", params)?;
    let data = a.data.load(&mut run)?;
    let points = curve(&config, &data, &a.fractions, seed)?;
    let labels = config.task.class_names();
    let mut csv = String::from("train_fraction,train_size,macro_f1");
    for l in &labels {
        csv.push_str(&format!(",{l}"));
    }
    csv.push('\n');
    for p in &points {
        csv.push_str(&format!("{},{},{:.2}", p.train_fraction, p.train_size, p.macro_f1));
        for l in &labels {
            match p.per_class_f1.get(l) {
                Some(v) => csv.push_str(&format!(",{v:.2}")),
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }
    let xs: Vec<f64> = points.iter().map(|p| p.train_fraction).collect();
    let mut series: Vec<(String, Vec<Option<f64>>)> =
        labels.iter().map(|l| (l.clone(), points.iter().map(|p| p.per_class_f1.get(l).copied()).collect())).collect();
    series.push(("macro".into(), points.iter().map(|p| Some(p.macro_f1)).collect()));
    run.write_json("curve.json", &points)?;
    run.write_text("curve.csv", &csv)?;
    run.write_text("curve.svg", &curve_svg(&xs, &series, "Learning curve (per-class F1)"))?;
    run.set_summary(json!({ "points": points.len(), "final_macro_f1": points.last().map(|p| round2(p.macro_f1)) }));
    run.finish()
}
