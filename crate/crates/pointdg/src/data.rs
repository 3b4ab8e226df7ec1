//! Synthetic multi-domain point-cloud benchmark.
//!
//! Five parametric shape classes are surface-sampled, pushed through
//! per-domain corruptions that mimic sensor/occlusion/scale gaps, and laid
//! out on disk as a leave-one-out domain-generalization benchmark: every task
//! holds one domain out as the unseen target.
//!
//! File format (`.xyz`): line 1 is `N <count> <label> <domain_id>`, then one
//! `x y z` line per point printed with shortest round-trip decimals.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

pub const CLASS_NAMES: [&str; 5] = ["sphere", "cube", "cylinder", "cone", "torus"];

#[derive(Clone, Debug)]
pub struct PointCloud {
    /// Nx3 coordinates.
    pub coords: Tensor,
    pub label: usize,
    pub domain_id: usize,
    pub id: String,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.coords.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Corruption {
    Clean,
    /// Gaussian coordinate noise, sigma <= 0.1.
    Jitter(f64),
    /// Remove the given fraction of points on one side of a random plane
    /// through the centroid, then resample survivors back to N.
    HalfspaceDropout(f64),
    /// Per-axis scaling, each factor in [0.5, 2].
    AnisotropicScale(f64, f64, f64),
    /// Resample (with replacement) to a different point count.
    DensityResample(usize),
}

impl Corruption {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Corruption::Clean => Ok(()),
            Corruption::Jitter(s) if (0.0..=0.1).contains(&s) => Ok(()),
            Corruption::HalfspaceDropout(f) if (0.0..=0.5).contains(&f) => Ok(()),
            Corruption::AnisotropicScale(x, y, z)
                if [x, y, z].iter().all(|s| (0.5..=2.0).contains(s)) =>
            {
                Ok(())
            }
            Corruption::DensityResample(n) if n >= 8 => Ok(()),
            other => Err(Error::InvalidConfig(format!(
                "corruption parameters out of range: {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DomainSpec {
    pub name: String,
    pub corruption: Corruption,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct Manifest {
    pub domains: Vec<DomainSpec>,
    pub points_per_cloud: usize,
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            domains: vec![
                DomainSpec {
                    name: "clean".into(),
                    corruption: Corruption::Clean,
                    seed: 1,
                },
                DomainSpec {
                    name: "noisy".into(),
                    corruption: Corruption::Jitter(0.04),
                    seed: 2,
                },
                DomainSpec {
                    name: "occluded".into(),
                    corruption: Corruption::HalfspaceDropout(0.4),
                    seed: 3,
                },
                DomainSpec {
                    name: "stretched".into(),
                    corruption: Corruption::AnisotropicScale(1.8, 0.6, 1.0),
                    seed: 4,
                },
            ],
            points_per_cloud: 256,
            train_per_class: 24,
            val_per_class: 6,
            test_per_class: 10,
            seed: 7,
        }
    }
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        if self.domains.len() < 3 {
            return Err(Error::InvalidConfig(
                "need at least 3 domains (>=2 sources per task)".into(),
            ));
        }
        if self.points_per_cloud < 8 {
            return Err(Error::InvalidConfig("clouds need at least 8 points".into()));
        }
        for d in &self.domains {
            d.corruption.validate()?;
        }
        Ok(())
    }

    pub fn num_tasks(&self) -> usize {
        self.domains.len()
    }
}

// ---------------------------------------------------------------------------
// shape generation
// ---------------------------------------------------------------------------

pub fn class_id(name: &str) -> Result<usize> {
    CLASS_NAMES
        .iter()
        .position(|&c| c == name)
        .ok_or_else(|| Error::UnknownClass(name.to_string()))
}

/// Uniform surface sample of the parametric shape with mild per-sample
/// parameter randomization. Deterministic under the supplied rng.
pub fn generate_shape(class: usize, n: usize, rng: &mut Rng) -> Result<PointCloud> {
    if class >= CLASS_NAMES.len() {
        return Err(Error::UnknownClass(format!("class id {class}")));
    }
    if n < 8 {
        return Err(Error::InvalidConfig(format!("n = {n} < 8")));
    }
    let mut coords = Vec::with_capacity(n * 3);
    match class {
        // sphere: exact unit radius
        0 => {
            for _ in 0..n {
                let p = unit_direction(rng);
                coords.extend_from_slice(&p);
            }
        }
        // cube surface with randomized half-extent
        1 => {
            let h = rng.range(0.7, 1.0);
            for _ in 0..n {
                let face = rng.below(6);
                let a = rng.range(-h, h);
                let b = rng.range(-h, h);
                let p = match face {
                    0 => [h, a, b],
                    1 => [-h, a, b],
                    2 => [a, h, b],
                    3 => [a, -h, b],
                    4 => [a, b, h],
                    _ => [a, b, -h],
                };
                coords.extend_from_slice(&p);
            }
        }
        // cylinder: lateral surface + caps, area-weighted; aspect in [0.5, 2]
        2 => {
            let r = 1.0;
            let aspect = rng.range(0.5, 2.0);
            let half_h = r * aspect;
            let lateral = std::f64::consts::TAU * r * 2.0 * half_h;
            let caps = 2.0 * std::f64::consts::PI * r * r;
            let p_lateral = lateral / (lateral + caps);
            for _ in 0..n {
                if rng.uniform() < p_lateral {
                    let theta = rng.range(0.0, std::f64::consts::TAU);
                    let z = rng.range(-half_h, half_h);
                    coords.extend_from_slice(&[r * theta.cos(), r * theta.sin(), z]);
                } else {
                    let z = if rng.uniform() < 0.5 { half_h } else { -half_h };
                    let rho = r * rng.uniform().sqrt();
                    let theta = rng.range(0.0, std::f64::consts::TAU);
                    coords.extend_from_slice(&[rho * theta.cos(), rho * theta.sin(), z]);
                }
            }
        }
        // cone: lateral surface + base, area-weighted; height in [0.8, 2]
        3 => {
            let r: f64 = 1.0;
            let h = rng.range(0.8, 2.0);
            let slant = (r * r + h * h).sqrt();
            let lateral = std::f64::consts::PI * r * slant;
            let base = std::f64::consts::PI * r * r;
            let p_lateral = lateral / (lateral + base);
            for _ in 0..n {
                let theta = rng.range(0.0, std::f64::consts::TAU);
                if rng.uniform() < p_lateral {
                    // uniform over the lateral surface: radial fraction ~ sqrt(u)
                    let t = rng.uniform().sqrt();
                    let rho = r * t;
                    coords.extend_from_slice(&[
                        rho * theta.cos(),
                        rho * theta.sin(),
                        h * (1.0 - t) - h / 2.0,
                    ]);
                } else {
                    let rho = r * rng.uniform().sqrt();
                    coords.extend_from_slice(&[rho * theta.cos(), rho * theta.sin(), -h / 2.0]);
                }
            }
        }
        // torus: rejection sampling for uniform area; tube ratio in [0.25, 0.45]
        _ => {
            let big_r = 1.0;
            let small_r = rng.range(0.25, 0.45);
            for _ in 0..n {
                let theta;
                loop {
                    let cand = rng.range(0.0, std::f64::consts::TAU);
                    let accept = (big_r + small_r * cand.cos()) / (big_r + small_r);
                    if rng.uniform() < accept {
                        theta = cand;
                        break;
                    }
                }
                let phi = rng.range(0.0, std::f64::consts::TAU);
                let ring = big_r + small_r * theta.cos();
                coords.extend_from_slice(&[
                    ring * phi.cos(),
                    ring * phi.sin(),
                    small_r * theta.sin(),
                ]);
            }
        }
    }
    Ok(PointCloud {
        coords: Tensor::new(vec![n, 3], coords)?,
        label: class,
        domain_id: 0,
        id: String::new(),
    })
}

fn unit_direction(rng: &mut Rng) -> [f64; 3] {
    loop {
        let v = [rng.normal(), rng.normal(), rng.normal()];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-12 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

// ---------------------------------------------------------------------------
// domain corruption and preprocessing
// ---------------------------------------------------------------------------

/// Apply the domain's corruption. `clean` and zero-strength corruptions are
/// the identity.
pub fn apply_domain(cloud: &PointCloud, spec: &DomainSpec, rng: &mut Rng) -> PointCloud {
    let n = cloud.len();
    let coords = match spec.corruption {
        Corruption::Clean => cloud.coords.clone(),
        Corruption::Jitter(sigma) => {
            if sigma == 0.0 {
                cloud.coords.clone()
            } else {
                cloud.coords.map(|x| x + sigma * rng.normal())
            }
        }
        Corruption::HalfspaceDropout(fraction) => {
            let drop = ((n as f64) * fraction).floor() as usize;
            if drop == 0 {
                cloud.coords.clone()
            } else {
                let dir = unit_direction(rng);
                let centroid = centroid_of(&cloud.coords);
                let mut proj: Vec<(f64, usize)> = (0..n)
                    .map(|i| {
                        let p = cloud.coords.row(i);
                        let d = (p[0] - centroid[0]) * dir[0]
                            + (p[1] - centroid[1]) * dir[1]
                            + (p[2] - centroid[2]) * dir[2];
                        (d, i)
                    })
                    .collect();
                proj.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let survivors: Vec<usize> = proj[..n - drop].iter().map(|&(_, i)| i).collect();
                let mut data = Vec::with_capacity(n * 3);
                for _ in 0..n {
                    let pick = survivors[rng.below(survivors.len())];
                    data.extend_from_slice(cloud.coords.row(pick));
                }
                Tensor::new(vec![n, 3], data).expect("counted")
            }
        }
        Corruption::AnisotropicScale(sx, sy, sz) => {
            let mut data = Vec::with_capacity(n * 3);
            for i in 0..n {
                let p = cloud.coords.row(i);
                data.extend_from_slice(&[p[0] * sx, p[1] * sy, p[2] * sz]);
            }
            Tensor::new(vec![n, 3], data).expect("counted")
        }
        Corruption::DensityResample(m) => {
            let mut data = Vec::with_capacity(m * 3);
            for _ in 0..m {
                data.extend_from_slice(cloud.coords.row(rng.below(n)));
            }
            Tensor::new(vec![m, 3], data).expect("counted")
        }
    };
    PointCloud {
        coords,
        ..cloud.clone()
    }
}

fn centroid_of(coords: &Tensor) -> [f64; 3] {
    let n = coords.rows() as f64;
    let mut c = [0.0; 3];
    for i in 0..coords.rows() {
        let p = coords.row(i);
        c[0] += p[0];
        c[1] += p[1];
        c[2] += p[2];
    }
    [c[0] / n, c[1] / n, c[2] / n]
}

/// Center to the centroid and scale to the unit sphere; training mode adds a
/// random uniform scale in [0.8, 1.2] and clipped Gaussian jitter.
pub fn preprocess(cloud: &PointCloud, train: bool, rng: &mut Rng) -> Result<PointCloud> {
    let n = cloud.len();
    let c = centroid_of(&cloud.coords);
    let mut data = Vec::with_capacity(n * 3);
    let mut max_r: f64 = 0.0;
    for i in 0..n {
        let p = cloud.coords.row(i);
        let q = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
        max_r = max_r.max((q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt());
        data.extend_from_slice(&q);
    }
    if max_r == 0.0 {
        return Err(Error::DegenerateCloud);
    }
    for x in &mut data {
        *x /= max_r;
    }
    if train {
        let scale = rng.range(0.8, 1.2);
        for x in &mut data {
            *x *= scale;
            *x += (0.01 * rng.normal()).clamp(-0.05, 0.05);
        }
    }
    Ok(PointCloud {
        coords: Tensor::new(vec![n, 3], data)?,
        ..cloud.clone()
    })
}

// ---------------------------------------------------------------------------
// file IO
// ---------------------------------------------------------------------------

pub fn write_cloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "N {} {} {}", cloud.len(), cloud.label, cloud.domain_id)
        .expect("string write");
    for i in 0..cloud.len() {
        let p = cloud.coords.row(i);
        // `{}` prints the shortest decimal that round-trips the f64
        writeln!(out, "{} {} {}", p[0], p[1], p[2]).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path)?;
    let pstr = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::ParseError {
        path: pstr.clone(),
        line: 1,
        msg: "empty file".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "N" {
        return Err(Error::ParseError {
            path: pstr,
            line: 1,
            msg: format!("expected 'N <count> <label> <domain_id>', got {header:?}"),
        });
    }
    let count: usize = fields[1].parse().map_err(|_| Error::ParseError {
        path: pstr.clone(),
        line: 1,
        msg: format!("bad count {:?}", fields[1]),
    })?;
    let label: usize = fields[2].parse().map_err(|_| Error::ParseError {
        path: pstr.clone(),
        line: 1,
        msg: format!("bad label {:?}", fields[2]),
    })?;
    let domain_id: usize = fields[3].parse().map_err(|_| Error::ParseError {
        path: pstr.clone(),
        line: 1,
        msg: format!("bad domain id {:?}", fields[3]),
    })?;
    let mut data = Vec::with_capacity(count * 3);
    let mut seen = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let nums: Vec<&str> = line.split_whitespace().collect();
        if nums.len() != 3 {
            return Err(Error::ParseError {
                path: pstr,
                line: idx + 1,
                msg: format!("expected 3 coordinates, got {}", nums.len()),
            });
        }
        for s in nums {
            data.push(s.parse::<f64>().map_err(|_| Error::ParseError {
                path: pstr.clone(),
                line: idx + 1,
                msg: format!("bad float {s:?}"),
            })?);
        }
        seen += 1;
    }
    if seen != count {
        return Err(Error::CountMismatch {
            expected: count,
            found: seen,
        });
    }
    Ok(PointCloud {
        coords: Tensor::new(vec![count, 3], data)?,
        label,
        domain_id,
        id: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    })
}

// ---------------------------------------------------------------------------
// benchmark tree
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn dir(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
    fn code(&self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        }
    }
}

/// Deterministic sample: every cloud derives its own rng stream from
/// (manifest seed, domain, split, class, index), so generation order and
/// parallelism cannot change the output.
pub fn make_sample(
    manifest: &Manifest,
    domain: usize,
    split: Split,
    class: usize,
    index: usize,
) -> Result<PointCloud> {
    let spec = &manifest.domains[domain];
    let mut rng = Rng::derive(
        manifest.seed,
        &[spec.seed, split.code(), class as u64 + 1, index as u64 + 1],
    );
    let base = generate_shape(class, manifest.points_per_cloud, &mut rng)?;
    let mut cloud = apply_domain(&base, spec, &mut rng);
    cloud.domain_id = domain;
    cloud.id = format!(
        "{}/{}/{}_{:03}",
        spec.name,
        split.dir(),
        CLASS_NAMES[class],
        index
    );
    Ok(cloud)
}

fn split_count(manifest: &Manifest, split: Split) -> usize {
    match split {
        Split::Train => manifest.train_per_class,
        Split::Val => manifest.val_per_class,
        Split::Test => manifest.test_per_class,
    }
}

/// Materialize the dataset tree plus one split-index file per leave-one-out
/// task. Refuses to clobber an existing tree unless `force` is set.
pub fn build_benchmark(manifest: &Manifest, out_dir: &Path, force: bool) -> Result<()> {
    manifest.validate()?;
    let domains_dir = out_dir.join("domains");
    if domains_dir.exists() {
        if !force {
            return Err(Error::WouldOverwrite(domains_dir.display().to_string()));
        }
        fs::remove_dir_all(&domains_dir)?;
    }
    for (d, spec) in manifest.domains.iter().enumerate() {
        for split in [Split::Train, Split::Val, Split::Test] {
            let dir = out_dir.join("domains").join(&spec.name).join(split.dir());
            fs::create_dir_all(&dir)?;
            for class in 0..CLASS_NAMES.len() {
                for index in 0..split_count(manifest, split) {
                    let cloud = make_sample(manifest, d, split, class, index)?;
                    let name = format!("{}_{:03}.xyz", CLASS_NAMES[class], index);
                    write_cloud(&cloud, &dir.join(name))?;
                }
            }
        }
    }
    // one task file per held-out domain
    for target in 0..manifest.domains.len() {
        let mut out = String::new();
        for (d, spec) in manifest.domains.iter().enumerate() {
            if d == target {
                continue;
            }
            for class in 0..CLASS_NAMES.len() {
                for index in 0..manifest.train_per_class {
                    writeln!(
                        out,
                        "source_train {}/train/{}_{:03}",
                        spec.name, CLASS_NAMES[class], index
                    )
                    .expect("string write");
                }
                for index in 0..manifest.val_per_class {
                    writeln!(
                        out,
                        "source_val {}/val/{}_{:03}",
                        spec.name, CLASS_NAMES[class], index
                    )
                    .expect("string write");
                }
            }
        }
        let spec = &manifest.domains[target];
        for class in 0..CLASS_NAMES.len() {
            for index in 0..manifest.test_per_class {
                writeln!(
                    out,
                    "target_test {}/test/{}_{:03}",
                    spec.name, CLASS_NAMES[class], index
                )
                .expect("string write");
            }
        }
        fs::write(out_dir.join(format!("task_{}.txt", spec.name)), out)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// in-memory store with access logging
// ---------------------------------------------------------------------------

/// Loaded benchmark with per-(domain, split) read counters; the counters back
/// the domain-generalization hygiene check (training must never touch the
/// target domain).
pub struct DatasetStore {
    pub manifest: Manifest,
    clouds: BTreeMap<(usize, Split, usize, usize), PointCloud>,
    reads: Vec<[AtomicU64; 3]>,
}

impl DatasetStore {
    /// Generate the dataset directly in memory (no disk tree needed).
    pub fn generate(manifest: &Manifest) -> Result<Self> {
        manifest.validate()?;
        let mut clouds = BTreeMap::new();
        for d in 0..manifest.domains.len() {
            for split in [Split::Train, Split::Val, Split::Test] {
                for class in 0..CLASS_NAMES.len() {
                    for index in 0..split_count(manifest, split) {
                        clouds.insert(
                            (d, split, class, index),
                            make_sample(manifest, d, split, class, index)?,
                        );
                    }
                }
            }
        }
        let reads = (0..manifest.domains.len())
            .map(|_| [AtomicU64::new(0), AtomicU64::new(0), AtomicU64::new(0)])
            .collect();
        Ok(DatasetStore {
            manifest: manifest.clone(),
            clouds,
            reads,
        })
    }

    /// Load a tree produced by [`build_benchmark`].
    pub fn load(manifest: &Manifest, root: &Path) -> Result<Self> {
        manifest.validate()?;
        let mut clouds = BTreeMap::new();
        for (d, spec) in manifest.domains.iter().enumerate() {
            for split in [Split::Train, Split::Val, Split::Test] {
                for class in 0..CLASS_NAMES.len() {
                    for index in 0..split_count(manifest, split) {
                        let path: PathBuf = root
                            .join("domains")
                            .join(&spec.name)
                            .join(split.dir())
                            .join(format!("{}_{:03}.xyz", CLASS_NAMES[class], index));
                        clouds.insert((d, split, class, index), read_cloud(&path)?);
                    }
                }
            }
        }
        let reads = (0..manifest.domains.len())
            .map(|_| [AtomicU64::new(0), AtomicU64::new(0), AtomicU64::new(0)])
            .collect();
        Ok(DatasetStore {
            manifest: manifest.clone(),
            clouds,
            reads,
        })
    }

    pub fn get(&self, domain: usize, split: Split, class: usize, index: usize) -> &PointCloud {
        self.reads[domain][split.code() as usize].fetch_add(1, Ordering::Relaxed);
        &self.clouds[&(domain, split, class, index)]
    }

    /// All samples of one (domain, split), in deterministic key order.
    pub fn split_samples(&self, domain: usize, split: Split) -> Vec<&PointCloud> {
        let count = split_count(&self.manifest, split);
        let mut out = Vec::with_capacity(CLASS_NAMES.len() * count);
        for class in 0..CLASS_NAMES.len() {
            for index in 0..count {
                out.push(self.get(domain, split, class, index));
            }
        }
        out
    }

    pub fn split_len(&self, split: Split) -> usize {
        CLASS_NAMES.len() * split_count(&self.manifest, split)
    }

    pub fn reads_of(&self, domain: usize, split: Split) -> u64 {
        self.reads[domain][split.code() as usize].load(Ordering::Relaxed)
    }

    pub fn reset_reads(&self) {
        for row in &self.reads {
            for c in row {
                c.store(0, Ordering::Relaxed);
            }
        }
    }

    pub fn num_domains(&self) -> usize {
        self.manifest.domains.len()
    }
}
