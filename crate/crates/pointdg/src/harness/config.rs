//! Line-oriented `key = value` config files with `[section]` headers, used
//! for run configs and dataset manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::{Corruption, DomainSpec, Manifest};
use crate::error::{Error, Result};
use crate::losses::AlignMode;
use crate::model::{ModelConfig, ShiftMode};

/// Parsed file: ordered sections, each an ordered list of (key, value, line).
pub struct KvFile {
    pub path: String,
    pub sections: Vec<(String, Vec<(String, String, usize)>)>,
}

pub fn parse_kv(text: &str, path: &str) -> Result<KvFile> {
    let mut sections: Vec<(String, Vec<(String, String, usize)>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(Error::ParseError {
                    path: path.into(),
                    line: lineno,
                    msg: "unterminated section header".into(),
                });
            }
            sections.push((line[1..line.len() - 1].trim().to_string(), Vec::new()));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ParseError {
            path: path.into(),
            line: lineno,
            msg: format!("expected 'key = value', got {line:?}"),
        })?;
        let section = sections.last_mut().ok_or_else(|| Error::ParseError {
            path: path.into(),
            line: lineno,
            msg: "key before any [section] header".into(),
        })?;
        section
            .1
            .push((key.trim().to_string(), value.trim().to_string(), lineno));
    }
    Ok(KvFile {
        path: path.to_string(),
        sections,
    })
}

impl KvFile {
    fn section(&self, name: &str) -> Option<&[(String, String, usize)]> {
        self.sections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, kv)| kv.as_slice())
    }

    fn get<'a>(&'a self, section: &str, key: &str) -> Option<(&'a str, usize)> {
        self.section(section)?
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, l)| (v.as_str(), *l))
    }

    fn parse_err(&self, line: usize, msg: String) -> Error {
        Error::ParseError {
            path: self.path.clone(),
            line,
            msg,
        }
    }

    fn num<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        match self.get(section, key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse()
                .map_err(|_| self.parse_err(line, format!("bad value for {key}: {v:?}"))),
        }
    }

    fn num_list(&self, section: &str, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some((v, line)) => v
                .split_whitespace()
                .map(|s| {
                    s.parse()
                        .map_err(|_| self.parse_err(line, format!("bad integer {s:?} in {key}")))
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Which domain is held out as the unseen target.
    pub task: usize,
    pub model: ModelConfig,
    pub lr: f64,
    pub lr_min: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_per_domain: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub seed: u64,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: 0,
            model: ModelConfig::standard(),
            lr: 1e-4,
            lr_min: 0.0,
            weight_decay: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 30,
            batch_per_domain: 2,
            lambda1: 1.0,
            lambda2: 0.3,
            seed: 0,
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("runs/out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_per_domain == 0 {
            return Err(Error::InvalidConfig("batch_per_domain must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        self.model.validate()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let kv = parse_kv(&text, &path.display().to_string())?;
        let mut cfg = RunConfig::default();
        cfg.task = kv.num("run", "task", cfg.task)?;
        cfg.lr = kv.num("run", "lr", cfg.lr)?;
        cfg.lr_min = kv.num("run", "lr_min", cfg.lr_min)?;
        cfg.weight_decay = kv.num("run", "weight_decay", cfg.weight_decay)?;
        cfg.beta1 = kv.num("run", "beta1", cfg.beta1)?;
        cfg.beta2 = kv.num("run", "beta2", cfg.beta2)?;
        cfg.eps = kv.num("run", "eps", cfg.eps)?;
        cfg.epochs = kv.num("run", "epochs", cfg.epochs)?;
        cfg.batch_per_domain = kv.num("run", "batch_per_domain", cfg.batch_per_domain)?;
        cfg.lambda1 = kv.num("run", "lambda1", cfg.lambda1)?;
        cfg.lambda2 = kv.num("run", "lambda2", cfg.lambda2)?;
        cfg.seed = kv.num("run", "seed", cfg.seed)?;
        if let Some((v, _)) = kv.get("run", "data_dir") {
            cfg.data_dir = PathBuf::from(v);
        }
        if let Some((v, _)) = kv.get("run", "out_dir") {
            cfg.out_dir = PathBuf::from(v);
        }

        let m = &mut cfg.model;
        m.stage_blocks = kv.num_list("model", "stage_blocks", &m.stage_blocks)?;
        m.stage_widths = kv.num_list("model", "stage_widths", &m.stage_widths)?;
        m.stage_points = kv.num_list("model", "stage_points", &m.stage_points)?;
        m.num_classes = kv.num("model", "num_classes", m.num_classes)?;
        if let Some((v, line)) = kv.get("model", "shift_mode") {
            m.shift_mode = ShiftMode::parse(v).map_err(|e| kv.parse_err(line, e.to_string()))?;
        }
        if let Some((v, line)) = kv.get("model", "align_mode") {
            m.align_mode = AlignMode::parse(v).map_err(|e| kv.parse_err(line, e.to_string()))?;
        }
        if let Some((v, line)) = kv.get("model", "agt_in_channel_mix") {
            m.agt_in_channel_mix = v
                .parse()
                .map_err(|_| kv.parse_err(line, format!("bad bool {v:?}")))?;
        }
        m.knn_k = kv.num("model", "knn_k", m.knn_k)?;
        m.ffn_expansion = kv.num("model", "ffn_expansion", m.ffn_expansion)?;
        m.agt.h = kv.num("agt", "h", m.agt.h)?;
        m.agt.lambda = kv.num("agt", "lambda", m.agt.lambda)?;
        if let Some((v, line)) = kv.get("agt", "c_prime") {
            m.agt.c_prime = if v == "half" {
                None
            } else {
                Some(
                    v.parse()
                        .map_err(|_| kv.parse_err(line, format!("bad c_prime {v:?}")))?,
                )
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form (written next to checkpoints so runs are
    /// self-describing).
    pub fn to_text(&self) -> String {
        let list = |xs: &[usize]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "task = {}", self.task);
        let _ = writeln!(s, "lr = {}", self.lr);
        let _ = writeln!(s, "lr_min = {}", self.lr_min);
        let _ = writeln!(s, "weight_decay = {}", self.weight_decay);
        let _ = writeln!(s, "beta1 = {}", self.beta1);
        let _ = writeln!(s, "beta2 = {}", self.beta2);
        let _ = writeln!(s, "eps = {}", self.eps);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "batch_per_domain = {}", self.batch_per_domain);
        let _ = writeln!(s, "lambda1 = {}", self.lambda1);
        let _ = writeln!(s, "lambda2 = {}", self.lambda2);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "data_dir = {}", self.data_dir.display());
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "\n[model]");
        let _ = writeln!(s, "stage_blocks = {}", list(&self.model.stage_blocks));
        let _ = writeln!(s, "stage_widths = {}", list(&self.model.stage_widths));
        let _ = writeln!(s, "stage_points = {}", list(&self.model.stage_points));
        let _ = writeln!(s, "num_classes = {}", self.model.num_classes);
        let _ = writeln!(s, "shift_mode = {}", self.model.shift_mode.as_str());
        let _ = writeln!(s, "align_mode = {}", self.model.align_mode.as_str());
        let _ = writeln!(s, "agt_in_channel_mix = {}", self.model.agt_in_channel_mix);
        let _ = writeln!(s, "knn_k = {}", self.model.knn_k);
        let _ = writeln!(s, "ffn_expansion = {}", self.model.ffn_expansion);
        let _ = writeln!(s, "\n[agt]");
        let _ = writeln!(s, "h = {}", self.model.agt.h);
        let _ = writeln!(s, "lambda = {}", self.model.agt.lambda);
        let _ = writeln!(
            s,
            "c_prime = {}",
            self.model
                .agt
                .c_prime
                .map_or("half".to_string(), |c| c.to_string())
        );
        s
    }
}

pub fn manifest_from_file(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    let kv = parse_kv(&text, &path.display().to_string())?;
    let mut manifest = Manifest {
        domains: Vec::new(),
        ..Default::default()
    };
    manifest.seed = kv.num("manifest", "seed", manifest.seed)?;
    manifest.points_per_cloud = kv.num("manifest", "points_per_cloud", manifest.points_per_cloud)?;
    manifest.train_per_class = kv.num("manifest", "train_per_class", manifest.train_per_class)?;
    manifest.val_per_class = kv.num("manifest", "val_per_class", manifest.val_per_class)?;
    manifest.test_per_class = kv.num("manifest", "test_per_class", manifest.test_per_class)?;
    for (name, entries) in &kv.sections {
        if name != "domain" {
            continue;
        }
        let lookup = |key: &str| {
            entries
                .iter()
                .find(|(k, _, _)| k == key)
                .map(|(_, v, l)| (v.as_str(), *l))
        };
        let (dname, _) = lookup("name").ok_or_else(|| Error::ParseError {
            path: kv.path.clone(),
            line: 0,
            msg: "[domain] section missing name".into(),
        })?;
        let seed = match lookup("seed") {
            None => manifest.domains.len() as u64 + 1,
            Some((v, line)) => v
                .parse()
                .map_err(|_| kv.parse_err(line, format!("bad seed {v:?}")))?,
        };
        let corruption = match lookup("corruption") {
            None => Corruption::Clean,
            Some((v, line)) => parse_corruption(v).map_err(|msg| kv.parse_err(line, msg))?,
        };
        manifest.domains.push(DomainSpec {
            name: dname.to_string(),
            corruption,
            seed,
        });
    }
    if manifest.domains.is_empty() {
        manifest.domains = Manifest::default().domains;
    }
    manifest.validate()?;
    Ok(manifest)
}

fn parse_corruption(v: &str) -> std::result::Result<Corruption, String> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    let parse_f = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number {s:?}"));
    match parts.as_slice() {
        ["clean"] => Ok(Corruption::Clean),
        ["jitter", s] => Ok(Corruption::Jitter(parse_f(s)?)),
        ["halfspace_dropout", f] => Ok(Corruption::HalfspaceDropout(parse_f(f)?)),
        ["anisotropic_scale", x, y, z] => Ok(Corruption::AnisotropicScale(
            parse_f(x)?,
            parse_f(y)?,
            parse_f(z)?,
        )),
        ["density_resample", n] => Ok(Corruption::DensityResample(
            n.parse().map_err(|_| format!("bad count {n:?}"))?,
        )),
        _ => Err(format!("unknown corruption {v:?}")),
    }
}

pub fn manifest_to_text(manifest: &Manifest) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[manifest]");
    let _ = writeln!(s, "seed = {}", manifest.seed);
    let _ = writeln!(s, "points_per_cloud = {}", manifest.points_per_cloud);
    let _ = writeln!(s, "train_per_class = {}", manifest.train_per_class);
    let _ = writeln!(s, "val_per_class = {}", manifest.val_per_class);
    let _ = writeln!(s, "test_per_class = {}", manifest.test_per_class);
    for d in &manifest.domains {
        let _ = writeln!(s, "\n[domain]");
        let _ = writeln!(s, "name = {}", d.name);
        let corruption = match d.corruption {
            Corruption::Clean => "clean".to_string(),
            Corruption::Jitter(sig) => format!("jitter {sig}"),
            Corruption::HalfspaceDropout(f) => format!("halfspace_dropout {f}"),
            Corruption::AnisotropicScale(x, y, z) => format!("anisotropic_scale {x} {y} {z}"),
            Corruption::DensityResample(n) => format!("density_resample {n}"),
        };
        let _ = writeln!(s, "corruption = {corruption}");
        let _ = writeln!(s, "seed = {}", d.seed);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_through_text() {
        let m = Manifest::default();
        let text = manifest_to_text(&m);
        let dir = std::env::temp_dir().join("pointdg_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("manifest.txt");
        std::fs::write(&path, &text).unwrap();
        let back = manifest_from_file(&path).unwrap();
        assert_eq!(back.domains.len(), 4);
        assert_eq!(back.domains[2].name, "occluded");
        assert!(matches!(
            back.domains[2].corruption,
            Corruption::HalfspaceDropout(f) if (f - 0.4).abs() < 1e-12
        ));
        assert_eq!(manifest_to_text(&back), text);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn run_config_round_trips_through_text() {
        let cfg = RunConfig {
            task: 2,
            seed: 9,
            epochs: 3,
            ..Default::default()
        };
        let dir = std::env::temp_dir().join("pointdg_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.txt");
        std::fs::write(&path, cfg.to_text()).unwrap();
        let back = RunConfig::from_file(&path).unwrap();
        assert_eq!(back.task, 2);
        assert_eq!(back.seed, 9);
        assert_eq!(back.epochs, 3);
        assert_eq!(back.model.stage_widths, cfg.model.stage_widths);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn errors_carry_path_and_line() {
        let dir = std::env::temp_dir().join("pointdg_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("broken.txt");
        std::fs::write(&path, "[run]\nepochs twelve\n").unwrap();
        match RunConfig::from_file(&path) {
            Err(Error::ParseError { line: 2, .. }) => {}
            other => panic!("expected line-2 parse error, got {other:?}"),
        }
        std::fs::write(&path, "[run]\nepochs = twelve\n").unwrap();
        match RunConfig::from_file(&path) {
            Err(Error::ParseError { line: 2, .. }) => {}
            other => panic!("expected line-2 parse error, got {other:?}"),
        }
        std::fs::remove_file(&path).unwrap();
    }
}
