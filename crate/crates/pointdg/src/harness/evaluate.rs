//! Target-domain evaluation: overall and per-class accuracy, confusion
//! matrix, and pre-head embedding export.

use std::fmt::Write as _;

use crate::data::{preprocess, PointCloud};
use crate::error::Result;
use crate::model::{forward, ModelState};
use crate::rng::Rng;

pub struct EvalReport {
    pub overall: f64,
    /// (correct, total) per class.
    pub per_class: Vec<(usize, usize)>,
    /// confusion[true][predicted]
    pub confusion: Vec<Vec<usize>>,
    /// (sample id, label, pooled embedding)
    pub embeddings: Vec<(String, usize, Vec<f64>)>,
}

pub fn evaluate(state: &ModelState, samples: &[&PointCloud], rng_seed: u64) -> Result<EvalReport> {
    let k = state.config.num_classes;
    let mut per_class = vec![(0usize, 0usize); k];
    let mut confusion = vec![vec![0usize; k]; k];
    let mut embeddings = Vec::with_capacity(samples.len());
    let mut correct = 0usize;
    for (i, cloud) in samples.iter().enumerate() {
        let mut rng = Rng::derive(rng_seed, &[i as u64]);
        let pre = preprocess(cloud, false, &mut rng)?;
        let out = forward(&pre, state, None, &mut rng)?;
        let logits = out.logits.value_clone();
        let mut pred = 0usize;
        for (j, &x) in logits.data().iter().enumerate() {
            if x > logits.data()[pred] {
                pred = j;
            }
        }
        confusion[cloud.label][pred] += 1;
        per_class[cloud.label].1 += 1;
        if pred == cloud.label {
            per_class[cloud.label].0 += 1;
            correct += 1;
        }
        embeddings.push((
            cloud.id.clone(),
            cloud.label,
            out.pooled.value_clone().into_data(),
        ));
    }
    Ok(EvalReport {
        overall: correct as f64 / samples.len() as f64,
        per_class,
        confusion,
        embeddings,
    })
}

impl EvalReport {
    pub fn confusion_csv(&self, class_names: &[&str]) -> String {
        let mut s = String::from("true\\pred");
        for name in class_names {
            let _ = write!(s, ",{name}");
        }
        s.push('\n');
        for (i, row) in self.confusion.iter().enumerate() {
            let _ = write!(s, "{}", class_names[i]);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn embeddings_csv(&self) -> String {
        let dim = self.embeddings.first().map_or(0, |(_, _, e)| e.len());
        let mut s = String::from("id,label");
        for d in 0..dim {
            let _ = write!(s, ",e{d}");
        }
        s.push('\n');
        for (id, label, emb) in &self.embeddings {
            let _ = write!(s, "{id},{label}");
            for x in emb {
                let _ = write!(s, ",{x}");
            }
            s.push('\n');
        }
        s
    }

    pub fn summary_text(&self, class_names: &[&str]) -> String {
        let mut s = format!("overall accuracy: {:.4}\n", self.overall);
        for (i, (c, t)) in self.per_class.iter().enumerate() {
            let _ = writeln!(
                s,
                "  {:<10} {:>3}/{:<3} = {:.4}",
                class_names[i],
                c,
                t,
                if *t > 0 { *c as f64 / *t as f64 } else { 0.0 }
            );
        }
        s
    }
}
