//! Ablation matrices: module on/off grid, shift-strategy comparison,
//! key/value alignment variants, and scale variants. Cells run in parallel
//! over read-only data and are merged by key, so output is order-independent.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::{DatasetStore, Split};
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::evaluate::evaluate;
use crate::harness::train::train;
use crate::losses::AlignMode;
use crate::model::{ModelConfig, ShiftMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// 2x2 grid over the geometric shift and the alignment loss.
    Module,
    /// Shift strategies: the KNN comparators vs the grid shift.
    Shift,
    /// Alignment target: none / only-v / k-and-v / only-k.
    Align,
    /// Network scale variants.
    Scale,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "module" => Ok(Suite::Module),
            "shift" => Ok(Suite::Shift),
            "align" => Ok(Suite::Align),
            "scale" => Ok(Suite::Scale),
            other => Err(Error::InvalidConfig(format!("unknown suite {other:?}"))),
        }
    }

    /// Row label + config transform per variant. The first row is the
    /// baseline for the Gain column.
    pub fn variants(&self) -> Vec<(&'static str, fn(&mut ModelConfig))> {
        match self {
            Suite::Module => vec![
                ("baseline", |m: &mut ModelConfig| {
                    m.shift_mode = ShiftMode::QShift;
                    m.align_mode = AlignMode::None;
                }),
                ("agts", |m: &mut ModelConfig| {
                    m.shift_mode = ShiftMode::Agt;
                    m.align_mode = AlignMode::None;
                }),
                ("kda", |m: &mut ModelConfig| {
                    m.shift_mode = ShiftMode::QShift;
                    m.align_mode = AlignMode::KOnly;
                }),
                ("agts+kda", |m: &mut ModelConfig| {
                    m.shift_mode = ShiftMode::Agt;
                    m.align_mode = AlignMode::KOnly;
                }),
            ],
            Suite::Shift => vec![
                ("KNN-RandOne", |m: &mut ModelConfig| {
                    m.shift_mode = ShiftMode::KnnRandOne;
                }),
                ("KNN-Avg", |m: &mut ModelConfig| {
                    m.shift_mode = ShiftMode::KnnAvg;
                }),
                ("KNN-WAvg", |m: &mut ModelConfig| {
                    m.shift_mode = ShiftMode::KnnWAvg;
                }),
                ("AGT-Shift", |m: &mut ModelConfig| {
                    m.shift_mode = ShiftMode::Agt;
                }),
            ],
            Suite::Align => vec![
                ("none", |m: &mut ModelConfig| {
                    m.align_mode = AlignMode::None;
                }),
                ("only-v", |m: &mut ModelConfig| {
                    m.align_mode = AlignMode::VOnly;
                }),
                ("k-and-v", |m: &mut ModelConfig| {
                    m.align_mode = AlignMode::KAndV;
                }),
                ("only-k", |m: &mut ModelConfig| {
                    m.align_mode = AlignMode::KOnly;
                }),
            ],
            Suite::Scale => vec![
                ("base", |m: &mut ModelConfig| {
                    m.stage_blocks = ModelConfig::base().stage_blocks;
                }),
                ("standard", |_| {}),
                ("large", |m: &mut ModelConfig| {
                    let l = ModelConfig::large();
                    m.stage_widths = l.stage_widths;
                    m.stage_points = l.stage_points;
                }),
            ],
        }
    }
}

#[derive(Clone, Debug)]
pub struct AblationTable {
    pub variants: Vec<String>,
    pub tasks: Vec<String>,
    /// mean accuracy per (variant, task) over seeds
    pub mean: Vec<Vec<f64>>,
    /// std per (variant, task)
    pub std: Vec<Vec<f64>>,
    /// Avg. column: arithmetic mean over task columns
    pub avg: Vec<f64>,
    /// Gain over the first (baseline) row's Avg.
    pub gain: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// Train+evaluate one cell.
pub fn run_cell(base: &RunConfig, store: &DatasetStore, task: usize, seed: u64) -> Result<f64> {
    let mut cfg = base.clone();
    cfg.task = task;
    cfg.seed = seed;
    let outcome = train(&cfg, store)?;
    let samples = store.split_samples(task, Split::Test);
    let report = evaluate(&outcome.state, &samples, seed ^ 0x6576616c)?;
    Ok(report.overall)
}

pub fn run_suite(
    suite: Suite,
    base: &RunConfig,
    store: &DatasetStore,
    seeds: &[u64],
) -> Result<AblationTable> {
    let variants = suite.variants();
    let tasks: Vec<usize> = (0..store.num_domains()).collect();
    let mut cells: Vec<(usize, usize, u64)> = Vec::new();
    for v in 0..variants.len() {
        for &t in &tasks {
            for &s in seeds {
                cells.push((v, t, s));
            }
        }
    }
    let results: Result<BTreeMap<(usize, usize, u64), f64>> = cells
        .par_iter()
        .map(|&(v, t, s)| {
            let mut cfg = base.clone();
            (variants[v].1)(&mut cfg.model);
            let acc = run_cell(&cfg, store, t, s)?;
            Ok(((v, t, s), acc))
        })
        .collect();
    let results = results?;

    let variant_names: Vec<String> = variants.iter().map(|(n, _)| n.to_string()).collect();
    let task_names: Vec<String> = store
        .manifest
        .domains
        .iter()
        .map(|d| format!("->{}", d.name))
        .collect();
    Ok(table_from_cells(
        &variant_names,
        &task_names,
        seeds,
        |v, t, s| results[&(v, t, s)],
    ))
}

/// Assemble the mean/std/Avg./Gain table from per-cell accuracies.
pub fn table_from_cells(
    variants: &[String],
    task_names: &[String],
    seeds: &[u64],
    acc: impl Fn(usize, usize, u64) -> f64,
) -> AblationTable {
    let mut mean = vec![vec![0.0; task_names.len()]; variants.len()];
    let mut std = vec![vec![0.0; task_names.len()]; variants.len()];
    for (v, row) in mean.iter_mut().enumerate() {
        for (t, slot) in row.iter_mut().enumerate() {
            let vals: Vec<f64> = seeds.iter().map(|&s| acc(v, t, s)).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            *slot = m;
            std[v][t] =
                (vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / vals.len() as f64).sqrt();
        }
    }
    let avg: Vec<f64> = mean
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect();
    let gain: Vec<f64> = avg.iter().map(|a| a - avg[0]).collect();
    AblationTable {
        variants: variants.to_vec(),
        tasks: task_names.to_vec(),
        mean,
        std,
        avg,
        gain,
        seeds: seeds.to_vec(),
    }
}

impl AblationTable {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<14}", "variant");
        for t in &self.tasks {
            let _ = write!(s, "{t:>16}");
        }
        let _ = writeln!(s, "{:>10}{:>8}", "Avg.", "Gain");
        for (v, name) in self.variants.iter().enumerate() {
            let _ = write!(s, "{name:<14}");
            for t in 0..self.tasks.len() {
                let cell = format!("{:.3}±{:.3}", self.mean[v][t], self.std[v][t]);
                let _ = write!(s, "{cell:>16}");
            }
            let _ = writeln!(s, "{:>10.3}{:>8.3}", self.avg[v], self.gain[v]);
        }
        let _ = writeln!(s, "seeds: {:?}", self.seeds);
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("variant");
        for t in &self.tasks {
            let _ = write!(s, ",{t}_mean,{t}_std");
        }
        s.push_str(",avg,gain\n");
        for (v, name) in self.variants.iter().enumerate() {
            let _ = write!(s, "{name}");
            for t in 0..self.tasks.len() {
                let _ = write!(s, ",{},{}", self.mean[v][t], self.std[v][t]);
            }
            let _ = writeln!(s, ",{},{}", self.avg[v], self.gain[v]);
        }
        s
    }
}
