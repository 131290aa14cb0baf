//! Semi-discrete frames stored as frequency-domain atoms on a signal grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::parallel;
use crate::signal::{euclid, Domain, Grid, SampledSignal};

/// Truncation limit on the Littlewood-Paley contribution of omitted atoms.
pub const TRUNCATION_LIMIT: f64 = 1e-12;
/// Smallest Littlewood-Paley value a constructor accepts anywhere on the grid.
pub const COVERAGE_THRESHOLD: f64 = 1e-6;

/// How a bank was produced. Stored in the bank file manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankInfo {
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub normalization: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    /// Frequency where the Littlewood-Paley sum attains `A`.
    pub argmin: [f64; 2],
    /// Frequency where it attains `B`.
    pub argmax: [f64; 2],
}

impl FrameBounds {
    pub fn lp_min(&self) -> f64 {
        self.a
    }

    pub fn lp_max(&self) -> f64 {
        self.b
    }

    pub fn is_parseval(&self, tol: f64) -> bool {
        (self.a - 1.0).abs() <= tol && (self.b - 1.0).abs() <= tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    grid: Grid,
    labels: Vec<String>,
    atoms: Vec<Vec<Complex64>>,
    output: usize,
    info: BankInfo,
}

impl FilterBank {
    /// Assembles a bank from frequency-domain atoms.
    pub fn new(
        grid: Grid,
        labels: Vec<String>,
        atoms: Vec<SampledSignal>,
        output_label: &str,
        info: BankInfo,
    ) -> Result<Self> {
        if atoms.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} atoms",
                labels.len(),
                atoms.len()
            )));
        }
        let mut raw = Vec::with_capacity(atoms.len());
        for (label, atom) in labels.iter().zip(atoms) {
            grid.check_same(atom.grid(), &format!("atom {label}"))?;
            raw.push(atom.to_frequency().into_samples());
        }
        Self::from_raw(grid, labels, raw, output_label, info)
    }

    pub(crate) fn from_raw(
        grid: Grid,
        labels: Vec<String>,
        atoms: Vec<Vec<Complex64>>,
        output_label: &str,
        info: BankInfo,
    ) -> Result<Self> {
        grid.validate()?;
        if labels.is_empty() {
            return Err(Error::InvalidArgument("a filter bank needs at least one atom".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Label(format!("duplicate label {l}")));
            }
        }
        if let Some(a) = atoms.iter().find(|a| a.len() != grid.len()) {
            return Err(Error::Dimension(format!(
                "atom has {} samples, grid has {}",
                a.len(),
                grid.len()
            )));
        }
        let output = labels
            .iter()
            .position(|l| l == output_label)
            .ok_or_else(|| Error::Label(format!("output atom {output_label} is not a bank label")))?;
        Ok(FilterBank {
            grid,
            labels,
            atoms,
            output,
            info,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn info(&self) -> &BankInfo {
        &self.info
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn output_index(&self) -> usize {
        self.output
    }

    pub fn output_label(&self) -> &str {
        &self.labels[self.output]
    }

    /// Frequency samples `ĝ_λ` of atom `i`.
    pub fn atom_samples(&self, i: usize) -> &[Complex64] {
        &self.atoms[i]
    }

    pub fn atom(&self, label: &str) -> Result<SampledSignal> {
        let i = self
            .index_of(label)
            .ok_or_else(|| Error::Label(format!("unknown atom {label}")))?;
        Ok(SampledSignal::from_parts(self.grid, Domain::Frequency, self.atoms[i].clone()))
    }

    /// `χ`, the output-generating atom, in the frequency domain.
    pub fn output_atom(&self) -> SampledSignal {
        SampledSignal::from_parts(self.grid, Domain::Frequency, self.atoms[self.output].clone())
    }

    /// Indices of the propagation set, i.e. every atom but the output atom, in bank order.
    pub fn propagation_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| i != self.output).collect()
    }

    /// Same atoms with a different output-generating atom.
    pub fn with_output(mut self, label: &str) -> Result<Self> {
        self.output = self
            .index_of(label)
            .ok_or_else(|| Error::Label(format!("output atom {label} is not a bank label")))?;
        Ok(self)
    }

    /// `Σ_λ |ĝ_λ(ω)|²` over all atoms, with its grid extrema.
    pub fn littlewood_paley(&self) -> (SampledSignal, FrameBounds) {
        let lp = self.lp_values();
        let bounds = bounds_of(&self.grid, &lp);
        let data = lp.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        (SampledSignal::from_parts(self.grid, Domain::Frequency, data), bounds)
    }

    pub fn frame_bounds(&self) -> FrameBounds {
        bounds_of(&self.grid, &self.lp_values())
    }

    fn lp_values(&self) -> Vec<f64> {
        let mut lp = vec![0.0; self.grid.len()];
        for atom in &self.atoms {
            for (acc, v) in lp.iter_mut().zip(atom) {
                *acc += v.norm_sqr();
            }
        }
        lp
    }

    /// Divides every atom by `√C`, which divides both frame bounds by `C`.
    pub fn normalize_scale(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidArgument(format!("scale constant {c} must be positive")));
        }
        let s = 1.0 / c.sqrt();
        let mut out = self.clone();
        out.atoms
            .iter_mut()
            .for_each(|a| a.iter_mut().for_each(|v| *v *= s));
        out.info.normalization.push(format!("scale:{c}"));
        Ok(out)
    }

    /// Divides every atom by the square root of the Littlewood-Paley sum.
    pub fn normalize_parseval(&self) -> Result<Self> {
        let lp = self.lp_values();
        if let Some(i) = lp.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            let w = self.grid.frequency(i);
            return Err(Error::DegenerateFrame {
                frequency: w[..self.grid.dim].to_vec(),
            });
        }
        let inv: Vec<f64> = lp.iter().map(|v| 1.0 / v.sqrt()).collect();
        let mut out = self.clone();
        for atom in out.atoms.iter_mut() {
            for (v, s) in atom.iter_mut().zip(&inv) {
                *v *= *s;
            }
        }
        out.info.normalization.push("parseval".into());
        Ok(out)
    }
}

fn bounds_of(grid: &Grid, lp: &[f64]) -> FrameBounds {
    let (mut imin, mut imax) = (0, 0);
    for (i, v) in lp.iter().enumerate() {
        if *v < lp[imin] {
            imin = i;
        }
        if *v > lp[imax] {
            imax = i;
        }
    }
    FrameBounds {
        a: lp[imin],
        b: lp[imax],
        argmin: grid.frequency(imin),
        argmax: grid.frequency(imax),
    }
}

fn sample_atom(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Vec<Complex64> {
    (0..grid.len())
        .map(|i| Complex64::new(f(grid.frequency(i)), 0.0))
        .collect()
}

fn gauss(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp()
}

fn require_dim(grid: &Grid, dim: usize, what: &str) -> Result<()> {
    if grid.dim != dim {
        return Err(Error::Dimension(format!(
            "{what} needs a {dim}-D grid, got {}-D",
            grid.dim
        )));
    }
    Ok(())
}

fn check_coverage(bank: &FilterBank) -> Result<()> {
    let b = bank.frame_bounds();
    if b.a < COVERAGE_THRESHOLD {
        return Err(Error::Coverage {
            min: b.a,
            frequency: b.argmin[..bank.grid.dim].to_vec(),
            threshold: COVERAGE_THRESHOLD,
        });
    }
    Ok(())
}

/// Gaussian Weyl-Heisenberg bank, `ĝ_k(ω) = e^{−π(ω−k)²}` for `k_min ≤ k ≤ k_max`.
pub fn build_weyl_heisenberg_1d(grid: Grid, k_min: i64, k_max: i64) -> Result<FilterBank> {
    require_dim(&grid, 1, "Weyl-Heisenberg bank")?;
    if k_min != -k_max || k_max < 0 {
        return Err(Error::InvalidArgument(format!(
            "k range [{k_min}, {k_max}] must be symmetric around 0"
        )));
    }
    let proto = |w: f64| (-PI * w * w).exp();

    // Largest contribution of the omitted shifts anywhere on the grid.
    let nyq = grid.nyquist();
    let reach = nyq.ceil() as i64 + 12;
    let tail = (0..grid.len())
        .map(|i| {
            let w = grid.frequency(i)[0];
            ((k_max + 1)..=(k_max + 1).max(reach))
                .chain((-(k_max + 1).max(reach))..=-(k_max + 1))
                .map(|k| proto(w - k as f64).powi(2))
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    if tail >= TRUNCATION_LIMIT {
        return Err(Error::Truncation {
            tail,
            limit: TRUNCATION_LIMIT,
        });
    }

    let ks: Vec<i64> = (k_min..=k_max).collect();
    let labels = ks.iter().map(|k| format!("k={k}")).collect();
    let atoms = parallel::map_slice(&ks, |&k| sample_atom(&grid, |w| proto(w[0] - k as f64)));
    let info = BankInfo {
        kind: "wh1d".into(),
        params: json!({ "k_min": k_min, "k_max": k_max }),
        normalization: vec![],
    };
    let bank = FilterBank::from_raw(grid, labels, atoms, "k=0", info)?;
    check_coverage(&bank)?;
    Ok(bank)
}

/// Dyadic 1-D wavelet bank with both orientations and a Gaussian low-pass.
///
/// `ψ̂(ω) = exp(−(ω−ξ)²/2σ²)` with `ξ = 0.75·Nyquist`, `σ = ξ/3`. Scale `j`
/// contributes `ψ̂(2^{−j}ω)` and its mirror `ψ̂(−2^{−j}ω)`; the low-pass
/// output atom `φ̂(ω) = exp(−ω²/2σ_φ²)` with `σ_φ = 2^{j_min}ξ/2` fills the gap at DC.
pub fn build_wavelet_1d(grid: Grid, j_min: i32, j_max: i32) -> Result<FilterBank> {
    require_dim(&grid, 1, "wavelet bank")?;
    if j_min > j_max {
        return Err(Error::InvalidArgument(format!("empty scale range [{j_min}, {j_max}]")));
    }
    let xi = 0.75 * grid.nyquist();
    let sigma = xi / 3.0;
    let psi = move |w: f64| gauss(w - xi, sigma);
    let sigma_phi = 2f64.powi(j_min) * xi / 2.0;

    let mut specs: Vec<(String, i32, f64)> = Vec::new();
    for j in j_min..=j_max {
        specs.push((format!("j={j},+"), j, 1.0));
        specs.push((format!("j={j},-"), j, -1.0));
    }
    let mut atoms = parallel::map_slice(&specs, |(_, j, o)| {
        let s = 2f64.powi(-j);
        sample_atom(&grid, |w| psi(o * s * w[0]))
    });
    let mut labels: Vec<String> = specs.into_iter().map(|s| s.0).collect();
    labels.push("lowpass".into());
    atoms.push(sample_atom(&grid, |w| gauss(w[0], sigma_phi)));

    let info = BankInfo {
        kind: "wav1d".into(),
        params: json!({ "j_min": j_min, "j_max": j_max, "xi": xi, "sigma": sigma }),
        normalization: vec![],
    };
    let bank = FilterBank::from_raw(grid, labels, atoms, "lowpass", info)?;
    check_coverage(&bank)?;
    Ok(bank)
}

/// Separable 2-D wavelet bank built from a 1-D low-pass `φ̂` and band-pass `ψ̂`.
///
/// Atoms are `ψ̂^e(2^{−j}ω)` for `e ∈ {(1,0),(0,1),(1,1)}` and `j = 0..=J`, with
/// `ψ̂^e(ω) = θ_{e1}(ω₁)θ_{e2}(ω₂)`, `θ_0 = φ̂`, `θ_1 = ψ̂`. The output atom
/// `(0,0)` is `φ̂(ω₁)φ̂(ω₂)`.
pub fn build_tensor_wavelet_2d(grid: Grid, j_count: u32) -> Result<FilterBank> {
    require_dim(&grid, 2, "tensor wavelet bank")?;
    let xi = 0.75 * grid.nyquist() / 2f64.powi(j_count as i32);
    let sigma = xi / 3.0;
    let sigma_phi = 2.0 * xi / 3.0;
    let psi = move |w: f64| gauss(w - xi, sigma) + gauss(w + xi, sigma);
    let phi = move |w: f64| gauss(w, sigma_phi);
    let theta = move |e: u8, w: f64| if e == 0 { phi(w) } else { psi(w) };

    let mut specs: Vec<(String, i32, [u8; 2])> = Vec::new();
    for j in 0..=j_count as i32 {
        for e in [[1, 0], [0, 1], [1, 1]] {
            specs.push((format!("(j={j},e=({},{}))", e[0], e[1]), j, e));
        }
    }
    let mut atoms = parallel::map_slice(&specs, |(_, j, e)| {
        let s = 2f64.powi(-j);
        sample_atom(&grid, |w| theta(e[0], s * w[0]) * theta(e[1], s * w[1]))
    });
    let mut labels: Vec<String> = specs.into_iter().map(|s| s.0).collect();
    labels.push("(0,0)".into());
    atoms.push(sample_atom(&grid, |w| phi(w[0]) * phi(w[1])));

    let info = BankInfo {
        kind: "tensor2d".into(),
        params: json!({ "J": j_count, "xi": xi, "sigma": sigma }),
        normalization: vec![],
    };
    let bank = FilterBank::from_raw(grid, labels, atoms, "(0,0)", info)?;
    check_coverage(&bank)?;
    Ok(bank)
}

/// Rotation by `θ`: `R_θ ω`.
pub(crate) fn rotate(w: [f64; 2], theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * w[0] - s * w[1], s * w[0] + c * w[1]]
}

/// Directional wavelet bank with `J` scales and `K` directions.
///
/// `ĝ_{(j,k)}(ω) = ψ̂(2^{−j}R_{θ_k}ω)` for `j = −J+1..=0`, `θ_k = 2πk/K`, where
/// `ψ̂` is a Gaussian centred at `ξe₁` with `ξ = 0.85·Nyquist`, `σ = ξ/3`.
/// The output atom is the low-pass `φ̂(2^Jω)`, `φ̂` a Gaussian of width `ξ`.
pub fn build_directional_wavelet_2d(grid: Grid, j_count: u32, k_count: u32) -> Result<FilterBank> {
    require_dim(&grid, 2, "directional wavelet bank")?;
    if j_count == 0 || k_count == 0 {
        return Err(Error::InvalidArgument("J and K must be at least 1".into()));
    }
    let xi = 0.85 * grid.nyquist();
    let sigma = xi / 3.0;
    let psi = move |w: [f64; 2]| gauss(euclid(&[w[0] - xi, w[1]]), sigma);
    let phi = move |w: [f64; 2]| gauss(euclid(&w), xi);

    let mut specs: Vec<(String, i32, f64)> = Vec::new();
    for j in (-(j_count as i32) + 1)..=0 {
        for k in 0..k_count {
            let theta = 2.0 * PI * k as f64 / k_count as f64;
            specs.push((format!("(j={j},k={k})"), j, theta));
        }
    }
    let mut atoms = parallel::map_slice(&specs, |(_, j, theta)| {
        let s = 2f64.powi(-j);
        sample_atom(&grid, |w| {
            let r = rotate(w, *theta);
            psi([s * r[0], s * r[1]])
        })
    });
    let mut labels: Vec<String> = specs.into_iter().map(|s| s.0).collect();
    labels.push("lowpass".into());
    let lp_scale = 2f64.powi(j_count as i32);
    atoms.push(sample_atom(&grid, |w| phi([lp_scale * w[0], lp_scale * w[1]])));

    let info = BankInfo {
        kind: "dir2d".into(),
        params: json!({ "J": j_count, "K": k_count, "xi": xi, "sigma": sigma }),
        normalization: vec![],
    };
    let bank = FilterBank::from_raw(grid, labels, atoms, "lowpass", info)?;
    check_coverage(&bank)?;
    Ok(bank)
}
