//! Module-sequences, admissibility, and the feature extractor `Φ_Ω`.
//!
//! A sequence of depth `N` holds `N + 1` modules. Module `n` (0-based) owns
//! the bank whose output atom is `χ_n`; modules `0..N` also drive the layer
//! operators `U_{n+1}` through their propagation atoms, non-linearity and
//! pooling. The last module only contributes `χ_N`.

use std::fmt;
use std::path::Path as FsPath;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::frames::{self, FilterBank};
use crate::nonlinearities::Nonlinearity;
use crate::parallel;
use crate::pooling::PoolingSpec;
use crate::signal::{Domain, Grid, SampledSignal};

/// Absolute slack on admissibility scores.
pub const ADMISSIBILITY_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct NetModule {
    pub bank: FilterBank,
    pub nonlin: Nonlinearity,
    pub pool: PoolingSpec,
    /// Optional restriction of the propagation set, by label.
    pub propagate: Option<Vec<String>>,
}

impl NetModule {
    pub fn new(bank: FilterBank, nonlin: Nonlinearity, pool: PoolingSpec) -> Self {
        NetModule {
            bank,
            nonlin,
            pool,
            propagate: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.bank.grid()
    }

    /// Bank indices of the atoms this module propagates, in bank order.
    pub fn propagation_indices(&self) -> Result<Vec<usize>> {
        let all = self.bank.propagation_indices();
        match &self.propagate {
            None => Ok(all),
            Some(keep) => {
                for l in keep {
                    match self.bank.index_of(l) {
                        Some(i) if i != self.bank.output_index() => {}
                        Some(_) => {
                            return Err(Error::Label(format!(
                                "{l} is the output atom and cannot be propagated"
                            )))
                        }
                        None => return Err(Error::Label(format!("unknown atom {l}"))),
                    }
                }
                Ok(all
                    .into_iter()
                    .filter(|&i| keep.iter().any(|l| l == &self.bank.labels()[i]))
                    .collect())
            }
        }
    }

    /// `U[λ]f = S^{d/2} P(M(f ∗ g_λ))(S·)`.
    pub fn layer_apply(&self, label: &str, f: &SampledSignal) -> Result<SampledSignal> {
        let i = self
            .bank
            .index_of(label)
            .ok_or_else(|| Error::Label(format!("unknown atom {label}")))?;
        if i == self.bank.output_index() {
            return Err(Error::Label(format!(
                "{label} is the output-generating atom, not a propagation atom"
            )));
        }
        self.grid().check_same(f.grid(), "layer input")?;
        let pooling = self.pool.prepare(self.grid())?;
        let spec = f.to_frequency();
        Ok(propagate_one(spec.samples(), self.bank.atom_samples(i), self.grid(), self.nonlin, &pooling))
    }
}

fn propagate_one(
    parent_hat: &[Complex64],
    atom: &[Complex64],
    grid: &Grid,
    nonlin: Nonlinearity,
    pooling: &crate::pooling::PreparedPooling,
) -> SampledSignal {
    let mut buf: Vec<Complex64> = parent_hat.iter().zip(atom).map(|(a, b)| a * b).collect();
    fft::inverse(&mut buf, grid);
    nonlin.apply_in_place(&mut buf);
    pooling.apply(buf)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerAdmissibility {
    /// 1-based index of the frame `Ψ_n` this row describes.
    pub layer: usize,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub score: f64,
    pub admissible: bool,
    /// `C` for which `normalize_scale(bank, C)` brings the score to at most 1.
    pub suggested_c: f64,
    /// The frame only supplies the final output atom, so only `B` counts.
    pub output_only: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub layers: Vec<LayerAdmissibility>,
    pub admissible: bool,
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.layers {
            writeln!(
                f,
                "layer {}: B={:.6} L={} R={} score={:.6} {}{}",
                l.layer,
                l.b,
                l.l,
                l.r,
                l.score,
                if l.admissible { "ok" } else { "REJECTED" },
                if l.admissible {
                    String::new()
                } else {
                    format!(" (suggested C={:.6})", l.suggested_c)
                }
            )?;
        }
        write!(f, "admissible: {}", self.admissible)
    }
}

pub fn check_admissibility(modules: &[NetModule]) -> AdmissibilityReport {
    let last = modules.len().saturating_sub(1);
    let layers: Vec<LayerAdmissibility> = modules
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let b = m.bank.frame_bounds().b;
            let l = m.nonlin.lipschitz();
            let r = m.pool.lipschitz();
            let output_only = i == last;
            let gain = if output_only { 1.0 } else { l * l * r * r };
            let score = b.max(b * gain);
            LayerAdmissibility {
                layer: i + 1,
                b,
                l,
                r,
                score,
                admissible: score <= 1.0 + ADMISSIBILITY_SLACK,
                suggested_c: b * gain.max(1.0),
                output_only,
            }
        })
        .collect();
    let admissible = layers.iter().all(|l| l.admissible);
    AdmissibilityReport { layers, admissible }
}

#[derive(Clone, Debug)]
pub struct ModuleSequence {
    modules: Vec<NetModule>,
    depth: usize,
    report: AdmissibilityReport,
    force: bool,
}

impl ModuleSequence {
    /// `modules.len()` must be `depth + 1` and grids must shrink by each pooling factor.
    pub fn new(modules: Vec<NetModule>, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        if modules.len() != depth + 1 {
            return Err(Error::Config(format!(
                "a depth-{depth} sequence needs {} modules, got {}",
                depth + 1,
                modules.len()
            )));
        }
        for i in 0..depth {
            let expected = modules[i].grid().downsampled(modules[i].pool.factor)?;
            expected.check_same(modules[i + 1].grid(), &format!("module {}", i + 1))?;
            modules[i].propagation_indices()?;
        }
        let report = check_admissibility(&modules);
        Ok(ModuleSequence {
            modules,
            depth,
            report,
            force: false,
        })
    }

    /// Marks the sequence for extraction even when it is not admissible.
    pub fn forced(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn is_forced(&self) -> bool {
        self.force
    }

    pub fn modules(&self) -> &[NetModule] {
        &self.modules
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn input_grid(&self) -> &Grid {
        self.modules[0].grid()
    }

    pub fn admissibility(&self) -> &AdmissibilityReport {
        &self.report
    }

    /// `S_1 ⋯ S_n`.
    pub fn pooling_product(&self, n: usize) -> usize {
        self.modules[..n.min(self.depth)]
            .iter()
            .map(|m| m.pool.factor)
            .product()
    }

    /// Output atoms `χ_0 .. χ_N` in the frequency domain.
    pub fn output_atoms(&self) -> Vec<SampledSignal> {
        self.modules.iter().map(|m| m.bank.output_atom()).collect()
    }

    /// Rescales every rejected bank by its suggested constant.
    pub fn normalized(&self) -> Result<ModuleSequence> {
        let mut modules = self.modules.clone();
        for (m, row) in modules.iter_mut().zip(&self.report.layers) {
            if !row.admissible {
                m.bank = m.bank.normalize_scale(row.suggested_c)?;
            }
        }
        Ok(ModuleSequence::new(modules, self.depth)?.forced(self.force))
    }

    pub fn from_config(cfg: &NetConfig, base_dir: &FsPath) -> Result<Self> {
        cfg.grid.validate()?;
        if cfg.layers.is_empty() {
            return Err(Error::Config("at least one layer is required".into()));
        }
        if cfg.layers.len() > cfg.depth + 1 {
            return Err(Error::Config(format!(
                "{} layers given for depth {} (at most {})",
                cfg.layers.len(),
                cfg.depth,
                cfg.depth + 1
            )));
        }
        let mut modules = Vec::with_capacity(cfg.depth + 1);
        let mut grid = cfg.grid;
        for n in 0..=cfg.depth {
            let layer = &cfg.layers[n.min(cfg.layers.len() - 1)];
            let nonlin: Nonlinearity = layer.nonlinearity.parse()?;
            let pool: PoolingSpec = layer.pooling.parse()?;
            let mut bank = layer.frame.build(grid, base_dir)?;
            if let Some(out) = &layer.output {
                bank = bank.with_output(out)?;
            }
            let next = if n < cfg.depth {
                Some(grid.downsampled(pool.factor)?)
            } else {
                None
            };
            modules.push(NetModule {
                bank,
                nonlin,
                pool,
                propagate: layer.propagate.clone(),
            });
            if let Some(g) = next {
                grid = g;
            }
        }
        Ok(ModuleSequence::new(modules, cfg.depth)?.forced(cfg.force))
    }

    pub fn from_config_file(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: NetConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| FsPath::new("."));
        Self::from_config(&cfg, base)
    }
}

/// Scattering network: Parseval directional wavelets, modulus, no pooling.
pub fn preset_scattering(grid: Grid, j_count: u32, k_count: u32, depth: usize) -> Result<ModuleSequence> {
    let bank = frames::build_directional_wavelet_2d(grid, j_count, k_count)?.normalize_parseval()?;
    let module = NetModule::new(bank, Nonlinearity::Modulus, PoolingSpec::subsample(1)?);
    ModuleSequence::new(vec![module; depth + 1], depth)
}

// ---------------------------------------------------------------- config

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    pub grid: Grid,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub force: bool,
    pub layers: Vec<LayerConfig>,
}

fn default_depth() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub frame: FrameConfig,
    pub nonlinearity: String,
    pub pooling: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagate: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    #[serde(flatten)]
    pub kind: FrameKind,
    #[serde(default)]
    pub normalize: Normalize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FrameKind {
    #[serde(rename = "wh1d")]
    WeylHeisenberg { k_min: i64, k_max: i64 },
    #[serde(rename = "wav1d")]
    Wavelet1d { j_min: i32, j_max: i32 },
    #[serde(rename = "tensor2d")]
    Tensor2d {
        #[serde(rename = "J")]
        j: u32,
    },
    #[serde(rename = "dir2d")]
    Directional2d {
        #[serde(rename = "J")]
        j: u32,
        #[serde(rename = "K")]
        k: u32,
    },
    /// A bank file, resolved relative to the config's directory.
    #[serde(rename = "file")]
    File { path: String },
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalize {
    #[default]
    Parseval,
    None,
    Scale(f64),
}

impl FrameConfig {
    pub fn build(&self, grid: Grid, base_dir: &FsPath) -> Result<FilterBank> {
        let bank = match &self.kind {
            FrameKind::WeylHeisenberg { k_min, k_max } => {
                frames::build_weyl_heisenberg_1d(grid, *k_min, *k_max)?
            }
            FrameKind::Wavelet1d { j_min, j_max } => frames::build_wavelet_1d(grid, *j_min, *j_max)?,
            FrameKind::Tensor2d { j } => frames::build_tensor_wavelet_2d(grid, *j)?,
            FrameKind::Directional2d { j, k } => frames::build_directional_wavelet_2d(grid, *j, *k)?,
            FrameKind::File { path } => {
                let bank = crate::io::read_bank(&base_dir.join(path))?;
                grid.check_same(bank.grid(), &format!("bank file {path}"))?;
                bank
            }
        };
        match self.normalize {
            Normalize::Parseval => bank.normalize_parseval(),
            Normalize::None => Ok(bank),
            Normalize::Scale(c) => bank.normalize_scale(c),
        }
    }
}

// ---------------------------------------------------------------- features

/// A path `q = (λ₁, …, λ_n)`; the empty path is layer 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path(pub Vec<String>);

impl Path {
    pub fn empty() -> Self {
        Path(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn child(&self, label: &str) -> Path {
        let mut v = self.0.clone();
        v.push(label.to_string());
        Path(v)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("e")
        } else {
            f.write_str(&self.0.join("/"))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureLayer {
    pub grid: Grid,
    pub paths: Vec<Path>,
    pub features: Vec<SampledSignal>,
    /// `Σ_q ‖U[q]f‖₂²` over the paths of this layer.
    pub propagated_energy: f64,
}

impl FeatureLayer {
    pub fn norm_sqr(&self) -> f64 {
        self.features.iter().map(|s| s.norm_sqr()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub layers: Vec<FeatureLayer>,
}

impl FeatureVector {
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn count(&self) -> usize {
        self.layers.iter().map(|l| l.features.len()).sum()
    }

    pub fn get(&self, path: &Path) -> Option<&SampledSignal> {
        let layer = self.layers.get(path.len())?;
        let i = layer.paths.iter().position(|p| p == path)?;
        Some(&layer.features[i])
    }

    /// `|||Φ|||`
    pub fn norm(&self) -> f64 {
        self.layers.iter().map(|l| l.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn layer_norm(&self, n: usize) -> f64 {
        self.layers[n].norm_sqr().sqrt()
    }

    fn check_matching(&self, other: &FeatureVector, n: usize) -> Result<()> {
        let (a, b) = match (self.layers.get(n), other.layers.get(n)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Dimension(format!("layer {n} missing from a feature vector"))),
        };
        if a.paths != b.paths {
            return Err(Error::Dimension(format!("layer {n} path sets differ")));
        }
        Ok(())
    }

    /// `|||Φⁿ₁ − Φⁿ₂|||` for a single layer.
    pub fn layer_distance(&self, other: &FeatureVector, n: usize) -> Result<f64> {
        self.check_matching(other, n)?;
        let sq: Result<Vec<f64>> = self.layers[n]
            .features
            .iter()
            .zip(&other.layers[n].features)
            .map(|(a, b)| Ok(a.sub(b)?.norm_sqr()))
            .collect();
        Ok(sq?.into_iter().sum::<f64>().sqrt())
    }

    /// `|||Φ₁ − Φ₂|||` over all layers.
    pub fn distance(&self, other: &FeatureVector) -> Result<f64> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::Dimension("feature vectors have different depths".into()));
        }
        let mut total = 0.0;
        for n in 0..self.layers.len() {
            total += self.layer_distance(other, n)?.powi(2);
        }
        Ok(total.sqrt())
    }

    /// Every feature translated by `t`.
    pub fn translated(&self, t: &[f64]) -> Result<FeatureVector> {
        let layers: Result<Vec<FeatureLayer>> = self
            .layers
            .iter()
            .map(|l| {
                let features: Result<Vec<SampledSignal>> =
                    l.features.iter().map(|s| s.translate(t)).collect();
                Ok(FeatureLayer {
                    grid: l.grid,
                    paths: l.paths.clone(),
                    features: features?,
                    propagated_energy: l.propagated_energy,
                })
            })
            .collect();
        Ok(FeatureVector { layers: layers? })
    }
}

/// `|||Φ|||` of a feature vector.
pub fn feature_norm(phi: &FeatureVector) -> f64 {
    phi.norm()
}

pub fn feature_distance(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    a.distance(b)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Skip the admissibility gate.
    pub force: bool,
    /// Stop at this depth instead of the sequence's own.
    pub depth: Option<usize>,
}

/// `Φ_Ω(f)` up to the sequence depth. Rejects non-admissible sequences
/// unless the sequence was built with `force`.
pub fn extract(seq: &ModuleSequence, f: &SampledSignal) -> Result<FeatureVector> {
    extract_with(seq, f, &ExtractOptions::default())
}

pub fn extract_with(seq: &ModuleSequence, f: &SampledSignal, opts: &ExtractOptions) -> Result<FeatureVector> {
    if !(opts.force || seq.force || seq.report.admissible) {
        return Err(Error::NotAdmissible(Box::new(seq.report.clone())));
    }
    let depth = opts.depth.unwrap_or(seq.depth);
    if depth > seq.depth {
        return Err(Error::InvalidArgument(format!(
            "requested depth {depth} exceeds sequence depth {}",
            seq.depth
        )));
    }
    let grid0 = *seq.input_grid();
    grid0.check_same(f.grid(), "network input")?;

    let f_hat = f.to_frequency().into_samples();
    let chi0 = seq.modules[0].bank.atom_samples(seq.modules[0].bank.output_index());
    let mut layers = vec![FeatureLayer {
        grid: grid0,
        paths: vec![Path::empty()],
        features: vec![output_feature(&f_hat, chi0, &grid0)],
        propagated_energy: f.norm_sqr(),
    }];

    let mut parents: Vec<(Path, Vec<Complex64>)> = vec![(Path::empty(), f_hat)];
    for n in 1..=depth {
        let module = &seq.modules[n - 1];
        let in_grid = *module.grid();
        let pooling = module.pool.prepare(&in_grid)?;
        let out_grid = *pooling.output_grid();
        let props = module.propagation_indices()?;
        let next = &seq.modules[n];
        let chi = next.bank.atom_samples(next.bank.output_index());
        let keep = n < depth;

        let tasks = parents.len() * props.len();
        let results = parallel::map_indexed(tasks, |t| {
            let (parent_hat, atom) = (&parents[t / props.len()].1, props[t % props.len()]);
            let child = propagate_one(parent_hat, module.bank.atom_samples(atom), &in_grid, module.nonlin, &pooling);
            let energy = child.norm_sqr();
            let mut child_hat = child.into_samples();
            fft::forward(&mut child_hat, &out_grid);
            let feature = output_feature(&child_hat, chi, &out_grid);
            (keep.then_some(child_hat), feature, energy)
        });

        let mut layer = FeatureLayer {
            grid: out_grid,
            paths: Vec::with_capacity(tasks),
            features: Vec::with_capacity(tasks),
            propagated_energy: 0.0,
        };
        let mut next_parents = Vec::with_capacity(if keep { tasks } else { 0 });
        for (t, (child_hat, feature, energy)) in results.into_iter().enumerate() {
            let label = &module.bank.labels()[props[t % props.len()]];
            let path = parents[t / props.len()].0.child(label);
            layer.propagated_energy += energy;
            layer.features.push(feature);
            if let Some(c) = child_hat {
                next_parents.push((path.clone(), c));
            }
            layer.paths.push(path);
        }
        layers.push(layer);
        parents = next_parents;
    }
    Ok(FeatureVector { layers })
}

fn output_feature(signal_hat: &[Complex64], chi: &[Complex64], grid: &Grid) -> SampledSignal {
    let mut buf: Vec<Complex64> = signal_hat.iter().zip(chi).map(|(a, b)| a * b).collect();
    fft::inverse(&mut buf, grid);
    SampledSignal::from_parts(*grid, Domain::Space, buf)
}
