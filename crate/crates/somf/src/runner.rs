//! Command implementations behind the CLI: sweep execution, the full-batch
//! oracle, summary generation, and synthetic dataset export.

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context};
use ndarray::Array2;

use somf_core::{alternate_minimization_oracle, fit, Algorithm};

use crate::config::{DatasetConfig, DatasetSource, FileFormat, RunConfig, VariantName};
use crate::data_io::{
    self, extract_patches, generate_synthetic, load_matrix, load_pgm, save_matrix, DatasetMatrix,
    MatrixFormat, SyntheticSpec,
};
use crate::metrics::{self, MetricRecord, MetricWriter};
use crate::thread_cap;

/// Refusal cutoff for the full-batch oracle without `--force`.
const ORACLE_SIZE_LIMIT: usize = 1_000_000;

/// Distinguishes the deliberate size refusal (exit code 2) from errors.
#[derive(Debug, thiserror::Error)]
#[error(
    "instance has p*n = {cells} > {limit} cells; the full-batch oracle is \
     quadratic-ish in that, pass --force to run anyway"
)]
pub struct TooLarge {
    pub cells: usize,
    pub limit: usize,
}

/// Resolve the configured dataset into train/test matrices.
pub fn load_dataset(cfg: &DatasetConfig, seed: u64) -> anyhow::Result<(DatasetMatrix, DatasetMatrix)> {
    let mut full = match &cfg.source {
        DatasetSource::Synthetic(spec) => generate_synthetic(spec)?.0,
        DatasetSource::File { path, format } => {
            let fmt = match format {
                FileFormat::Dmat => MatrixFormat::Binary,
                FileFormat::Csv => MatrixFormat::Csv,
            };
            load_matrix(path, fmt).with_context(|| format!("loading {}", path.display()))?
        }
        DatasetSource::Image { path, patch, stride } => {
            let img = load_pgm(path).with_context(|| format!("loading {}", path.display()))?;
            extract_patches(img.view(), (patch[0], patch[1]), (stride[0], stride[1]))?
        }
    };
    full.preprocess_columns(cfg.center, cfg.normalize);
    let (train, test) = data_io::train_test_split(&full, cfg.test_fraction, seed)?;
    Ok((train, test))
}

struct Combo {
    reduction: f64,
    variant: VariantName,
}

fn run_one(
    cfg: &RunConfig,
    combo: &Combo,
    train: &DatasetMatrix,
    test: &DatasetMatrix,
) -> anyhow::Result<()> {
    let run_id = cfg.run_id(combo.reduction, combo.variant);
    let fit_cfg = cfg.fit_config(combo.reduction, combo.variant);
    let algorithm = match fit_cfg.algorithm {
        Algorithm::Omf => "omf",
        Algorithm::Somf => "somf",
    };
    let path = cfg.output_dir.join(format!("{run_id}.jsonl"));
    let mut writer = MetricWriter::create(&path)
        .with_context(|| format!("creating {}", path.display()))?;

    let start = Instant::now();
    let mut clock = move || start.elapsed().as_secs_f64();
    let report = fit(
        train.values.view(),
        Some(test.values.view()),
        &fit_cfg,
        cfg.checkpoint_every,
        &mut clock,
    )
    .map_err(|e| anyhow!("run {run_id}: {e}"))?;
    for warning in &report.warnings {
        eprintln!("[{run_id}] warning: {warning}");
    }
    for c in &report.checkpoints {
        let record = MetricRecord::from_checkpoint(
            &run_id,
            algorithm,
            combo.reduction,
            combo.variant.label(),
            &c.clone(),
        );
        writer.append(&record)?;
    }
    Ok(())
}

/// Execute every sweep combination with the same seed and data order, then
/// write the convergence summary.
pub fn cmd_run(config_path: &Path) -> anyhow::Result<()> {
    let cfg = RunConfig::load(config_path)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let (train, test) = load_dataset(&cfg.dataset, cfg.seed)?;

    let combos: Vec<Combo> = cfg
        .sweep
        .reductions
        .iter()
        .flat_map(|&r| {
            cfg.sweep
                .variants
                .iter()
                .map(move |&v| Combo { reduction: r, variant: v })
        })
        .collect();

    if cfg.parallel_runs && thread_cap() > 1 {
        let workers = thread_cap().min(combos.len());
        for chunk in combos.chunks(workers) {
            std::thread::scope(|scope| -> anyhow::Result<()> {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|combo| scope.spawn(|| run_one(&cfg, combo, &train, &test)))
                    .collect();
                for h in handles {
                    h.join().expect("run thread panicked")?;
                }
                Ok(())
            })?;
        }
    } else {
        for combo in &combos {
            run_one(&cfg, combo, &train, &test)?;
        }
    }

    write_summary(&cfg.output_dir)?;
    Ok(())
}

/// Summarize an existing metrics directory.
pub fn cmd_summarize(dir: &Path) -> anyhow::Result<()> {
    let text = write_summary(dir)?;
    print!("{text}");
    Ok(())
}

fn write_summary(dir: &Path) -> anyhow::Result<String> {
    let runs = metrics::read_metrics_dir(dir)?;
    if runs.is_empty() {
        return Err(anyhow!("no .jsonl metrics files in {}", dir.display()));
    }
    let summary = metrics::summarize(&runs);
    let text = metrics::render_summary(&summary);
    std::fs::write(dir.join("summary.txt"), &text)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(text)
}

/// Run the full-batch alternate-minimization reference and store its
/// converged objective and dictionary.
pub fn cmd_oracle(config_path: &Path, force: bool) -> anyhow::Result<()> {
    let cfg = RunConfig::load(config_path)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let (train, _test) = load_dataset(&cfg.dataset, cfg.seed)?;
    let cells = train.p() * train.n();
    if cells > ORACLE_SIZE_LIMIT && !force {
        return Err(TooLarge { cells, limit: ORACLE_SIZE_LIMIT }.into());
    }
    let fit_cfg = cfg.fit_config(1.0, VariantName::Masked);
    let (state, objective) = alternate_minimization_oracle(train.values.view(), &fit_cfg, 1e-6, 200)
        .map_err(|e| anyhow!("oracle: {e}"))?;

    let d: Array2<f64> = state.d;
    save_matrix(
        &cfg.output_dir.join("oracle_dictionary.dmat"),
        &DatasetMatrix::new(d)?,
        MatrixFormat::Binary,
    )?;
    let result = serde_json::json!({
        "objective": objective,
        "k": fit_cfg.k,
        "seed": cfg.seed,
    });
    std::fs::write(
        cfg.output_dir.join("oracle.json"),
        serde_json::to_string_pretty(&result)?,
    )?;
    println!("oracle objective: {objective:.6e}");
    Ok(())
}

/// Generate a synthetic dataset from a spec file and write it as binary.
pub fn cmd_gen(spec_path: &Path, out: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(spec_path)?;
    let spec: SyntheticSpec = toml::from_str(&text)?;
    let (x, _, _) = generate_synthetic(&spec)?;
    save_matrix(out, &x, MatrixFormat::Binary)?;
    println!("wrote {} ({} x {})", out.display(), x.p(), x.n());
    Ok(())
}
