//! Numerical checks of the extractor's stability bounds.
//!
//! Every check produces a [`BoundReport`] holding the measured quantity, the
//! proven bound and the slack between them. Sweeps draw their random inputs
//! from `(seed, trial index)` alone, so results are reproducible and
//! independent of the number of workers.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::network::{extract_with, ExtractOptions, FeatureVector, ModuleSequence};
use crate::parallel;
use crate::signal::{euclid, random_bandlimited, BandlimitSpec, Domain, Grid, SampledSignal};

/// Absolute tolerance for the energy and Lipschitz checks.
pub const ABS_TOL: f64 = 1e-8;
/// Relative and absolute tolerance for bounds involving `K` or `C`.
pub const REL_TOL: f64 = 1e-6;
pub const BOUND_ABS_TOL: f64 = 1e-9;
/// Spectral energy allowed beyond 7/8 of the Nyquist limit before warping.
pub const GUARD_BAND_FRACTION: f64 = 1e-24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl BoundReport {
    pub fn new(name: &str, measured: f64, bound: f64, tolerance: f64, metadata: serde_json::Value) -> Self {
        BoundReport {
            name: name.to_string(),
            measured,
            bound,
            slack: bound - measured,
            tolerance,
            pass: measured <= bound + tolerance,
            metadata,
        }
    }

    fn with_rel(name: &str, measured: f64, bound: f64, metadata: serde_json::Value) -> Self {
        Self::new(name, measured, bound, REL_TOL * bound.abs() + BOUND_ABS_TOL, metadata)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    pub min_slack: f64,
    pub max_measured: f64,
    pub all_pass: bool,
}

pub fn summarize(name: &str, reports: &[BoundReport]) -> Summary {
    let passed = reports.iter().filter(|r| r.pass).count();
    Summary {
        name: name.to_string(),
        trials: reports.len(),
        passed,
        min_slack: reports.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
        max_measured: reports.iter().map(|r| r.measured).fold(0.0, f64::max),
        all_pass: passed == reports.len(),
    }
}

/// Per-trial seed derived from a sweep seed.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------- fields

/// Displacement field `τ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TauField {
    Zero,
    /// `τ ≡ c`
    Constant { shift: Vec<f64> },
    /// `τ(x) = a·exp(−|x−c|²/s²)`
    GaussianBump {
        amplitude: Vec<f64>,
        center: Vec<f64>,
        width: f64,
    },
    /// `τ(x) = a·sin(2π⟨k,x⟩/L + φ)`
    Sinusoid {
        amplitude: Vec<f64>,
        wavenumber: Vec<f64>,
        period: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `τ(x) = slope·x`
    Linear { slope: f64 },
    /// Values at grid points; suprema are grid maxima.
    Sampled { grid: Grid, values: Vec<Vec<f64>> },
}

/// Phase field `ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PhaseField {
    Zero,
    Constant { value: f64 },
    /// `ω(x) = a·exp(−|x−c|²/s²)`
    Gaussian { amplitude: f64, center: Vec<f64>, width: f64 },
    Sampled { grid: Grid, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationField {
    pub dim: usize,
    pub tau: TauField,
    #[serde(default = "zero_phase")]
    pub omega: PhaseField,
}

fn zero_phase() -> PhaseField {
    PhaseField::Zero
}

fn norm_v(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn dist2(x: &[f64; 2], c: &[f64], dim: usize) -> f64 {
    (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum()
}

/// `√2·e^{−1/2}/s`, the largest slope of `exp(−x²/s²)`.
fn gaussian_slope(width: f64) -> f64 {
    std::f64::consts::SQRT_2 * (-0.5f64).exp() / width
}

impl DeformationField {
    pub fn identity(dim: usize) -> Self {
        DeformationField {
            dim,
            tau: TauField::Zero,
            omega: PhaseField::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d != 1 && d != 2 {
            return Err(Error::Dimension(format!("field dimension {d} not supported")));
        }
        let vec_ok = |v: &Vec<f64>, what: &str| {
            if v.len() != d {
                Err(Error::Dimension(format!("{what} has {} components, field is {d}-D", v.len())))
            } else {
                Ok(())
            }
        };
        match &self.tau {
            TauField::Zero | TauField::Linear { .. } => {}
            TauField::Constant { shift } => vec_ok(shift, "shift")?,
            TauField::GaussianBump { amplitude, center, width } => {
                vec_ok(amplitude, "amplitude")?;
                vec_ok(center, "center")?;
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidArgument("bump width must be positive".into()));
                }
            }
            TauField::Sinusoid { amplitude, wavenumber, period, .. } => {
                vec_ok(amplitude, "amplitude")?;
                vec_ok(wavenumber, "wavenumber")?;
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::InvalidArgument("period must be positive".into()));
                }
            }
            TauField::Sampled { grid, values } => {
                if grid.dim != d || values.len() != grid.len() || values.iter().any(|v| v.len() != d) {
                    return Err(Error::Dimension("sampled displacement does not fit its grid".into()));
                }
            }
        }
        match &self.omega {
            PhaseField::Zero | PhaseField::Constant { .. } => {}
            PhaseField::Gaussian { center, width, .. } => {
                vec_ok(center, "phase center")?;
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidArgument("phase width must be positive".into()));
                }
            }
            PhaseField::Sampled { grid, values } => {
                if grid.dim != d || values.len() != grid.len() {
                    return Err(Error::Dimension("sampled phase does not fit its grid".into()));
                }
            }
        }
        Ok(())
    }

    fn tau_at(&self, flat: usize, x: &[f64; 2]) -> [f64; 2] {
        let d = self.dim;
        let mut out = [0.0; 2];
        match &self.tau {
            TauField::Zero => {}
            TauField::Constant { shift } => out[..d].copy_from_slice(shift),
            TauField::GaussianBump { amplitude, center, width } => {
                let g = (-dist2(x, center, d) / (width * width)).exp();
                (0..d).for_each(|a| out[a] = amplitude[a] * g);
            }
            TauField::Sinusoid { amplitude, wavenumber, period, phase } => {
                let arg: f64 = (0..d).map(|a| wavenumber[a] * x[a]).sum::<f64>();
                let s = (2.0 * PI * arg / period + phase).sin();
                (0..d).for_each(|a| out[a] = amplitude[a] * s);
            }
            TauField::Linear { slope } => (0..d).for_each(|a| out[a] = slope * x[a]),
            TauField::Sampled { values, .. } => out[..d].copy_from_slice(&values[flat]),
        }
        out
    }

    fn omega_at(&self, flat: usize, x: &[f64; 2]) -> f64 {
        match &self.omega {
            PhaseField::Zero => 0.0,
            PhaseField::Constant { value } => *value,
            PhaseField::Gaussian { amplitude, center, width } => {
                amplitude * (-dist2(x, center, self.dim) / (width * width)).exp()
            }
            PhaseField::Sampled { values, .. } => values[flat],
        }
    }

    /// `‖τ‖∞ = sup |τ(x)|`.
    pub fn sup_tau(&self) -> f64 {
        match &self.tau {
            TauField::Zero => 0.0,
            TauField::Constant { shift } => norm_v(shift),
            TauField::GaussianBump { amplitude, .. } | TauField::Sinusoid { amplitude, .. } => norm_v(amplitude),
            TauField::Linear { slope } => {
                if *slope == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            TauField::Sampled { values, .. } => values.iter().map(|v| norm_v(v)).fold(0.0, f64::max),
        }
    }

    /// `‖Dτ‖∞`, the supremum of the largest absolute Jacobian entry.
    pub fn sup_dtau(&self) -> f64 {
        match &self.tau {
            TauField::Zero | TauField::Constant { .. } => 0.0,
            TauField::GaussianBump { amplitude, width, .. } => max_abs(amplitude) * gaussian_slope(*width),
            TauField::Sinusoid { amplitude, wavenumber, period, .. } => {
                max_abs(amplitude) * 2.0 * PI * max_abs(wavenumber) / period
            }
            TauField::Linear { slope } => slope.abs(),
            TauField::Sampled { grid, values } => sampled_jacobian_max(grid, values),
        }
    }

    pub fn sup_omega(&self) -> f64 {
        match &self.omega {
            PhaseField::Zero => 0.0,
            PhaseField::Constant { value } => value.abs(),
            PhaseField::Gaussian { amplitude, .. } => amplitude.abs(),
            PhaseField::Sampled { values, .. } => max_abs(values),
        }
    }

    /// `true` when the suprema are grid maxima and hence only lower bounds.
    pub fn is_sampled(&self) -> bool {
        matches!(self.tau, TauField::Sampled { .. }) || matches!(self.omega, PhaseField::Sampled { .. })
    }

    /// `(‖Dτ‖∞, ‖Dτ‖∞ ≤ 1/(2d))`.
    pub fn jacobian_condition(&self) -> (f64, bool) {
        let s = self.sup_dtau();
        (s, s <= 1.0 / (2.0 * self.dim as f64))
    }

    pub fn is_theorem_valid(&self) -> bool {
        self.jacobian_condition().1
    }

    fn require_valid(&self) -> Result<()> {
        self.validate()?;
        let (s, ok) = self.jacobian_condition();
        if !ok {
            return Err(Error::Precondition(format!(
                "‖Dτ‖∞ = {s} exceeds 1/(2d) = {}",
                1.0 / (2.0 * self.dim as f64)
            )));
        }
        Ok(())
    }

    pub fn summary(&self) -> serde_json::Value {
        let (dtau, valid) = self.jacobian_condition();
        json!({
            "sup_tau": self.sup_tau(),
            "sup_dtau": dtau,
            "sup_omega": self.sup_omega(),
            "theorem_valid": valid,
            "sampled": self.is_sampled(),
        })
    }
}

fn sampled_jacobian_max(grid: &Grid, values: &[Vec<f64>]) -> f64 {
    let n = grid.n;
    let mut best: f64 = 0.0;
    for i in 0..grid.len() {
        let idx = grid.unflatten(i);
        for axis in 0..grid.dim {
            let mut fwd = idx;
            let mut bwd = idx;
            fwd[axis] = (idx[axis] + 1) % n;
            bwd[axis] = (idx[axis] + n - 1) % n;
            let (f, b) = (&values[grid.flatten(fwd)], &values[grid.flatten(bwd)]);
            for c in 0..grid.dim {
                best = best.max(((f[c] - b[c]) / (2.0 * grid.spacing)).abs());
            }
        }
    }
    best
}

/// Random theorem-valid parametric field on a domain of side `extent`.
///
/// `τ` is a Gaussian bump, a sinusoid or a rigid shift with `‖Dτ‖∞ ≤ 1/(2d)`;
/// `ω` is constant or a Gaussian bump.
pub fn random_field(dim: usize, extent: f64, rng: &mut impl Rng) -> DeformationField {
    let limit = 1.0 / (2.0 * dim as f64);
    let vec = |rng: &mut dyn rand::RngCore, lo: f64, hi: f64| -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(lo..hi)).collect()
    };
    let tau = match rng.random_range(0..3) {
        0 => {
            let width = rng.random_range(0.5..4.0);
            let amax = limit / gaussian_slope(width);
            TauField::GaussianBump {
                amplitude: vec(rng, -amax, amax),
                center: vec(rng, 0.25 * extent, 0.75 * extent),
                width,
            }
        }
        1 => {
            let wavenumber: Vec<f64> = (0..dim).map(|_| rng.random_range(1..=4) as f64).collect();
            let amax = limit * extent / (2.0 * PI * max_abs(&wavenumber));
            TauField::Sinusoid {
                amplitude: vec(rng, -amax, amax),
                wavenumber,
                period: extent,
                phase: rng.random_range(0.0..2.0 * PI),
            }
        }
        _ => TauField::Constant {
            shift: vec(rng, -2.0, 2.0),
        },
    };
    let omega = if rng.random_bool(0.5) {
        PhaseField::Constant {
            value: rng.random_range(-0.5..0.5),
        }
    } else {
        PhaseField::Gaussian {
            amplitude: rng.random_range(-0.5..0.5),
            center: vec(rng, 0.25 * extent, 0.75 * extent),
            width: rng.random_range(1.0..8.0),
        }
    };
    DeformationField { dim, tau, omega }
}

/// `(F_{τ,ω}f)(x) = e^{2πiω(x)} f(x − τ(x))`, evaluating `f` off-grid by its
/// trigonometric interpolant. Rejects inputs with energy near the Nyquist limit.
pub fn apply_deformation(field: &DeformationField, f: &SampledSignal) -> Result<SampledSignal> {
    let frac = f.guard_band_energy_fraction();
    if frac > GUARD_BAND_FRACTION {
        return Err(Error::NotBandlimited(format!(
            "{frac:e} of the energy lies above 7/8 of the Nyquist limit"
        )));
    }
    apply_deformation_unchecked(field, f)
}

/// [`apply_deformation`] without the band-limit guard.
pub fn apply_deformation_unchecked(field: &DeformationField, f: &SampledSignal) -> Result<SampledSignal> {
    field.validate()?;
    let grid = *f.grid();
    if grid.dim != field.dim {
        return Err(Error::Dimension(format!(
            "{}-D field applied to a {}-D signal",
            field.dim, grid.dim
        )));
    }
    for g in [
        match &field.tau {
            TauField::Sampled { grid, .. } => Some(grid),
            _ => None,
        },
        match &field.omega {
            PhaseField::Sampled { grid, .. } => Some(grid),
            _ => None,
        },
    ]
    .into_iter()
    .flatten()
    {
        grid.check_same(g, "sampled field")?;
    }

    let spec = f.to_frequency();
    let terms: Vec<([i64; 2], Complex64)> = spec
        .samples()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() > 0.0)
        .map(|(i, v)| {
            let idx = grid.unflatten(i);
            ([grid.signed_index(idx[0]), grid.signed_index(idx[1])], *v)
        })
        .collect();
    let extent = grid.extent();
    let scale = 1.0 / extent.powi(grid.dim as i32);
    let (kmin, kmax) = terms.iter().fold((0i64, 0i64), |(lo, hi), (k, _)| {
        (lo.min(k[0]).min(k[1]), hi.max(k[0]).max(k[1]))
    });
    let span = (kmax - kmin + 1) as usize;

    let data = parallel::map_indexed(grid.len(), |i| {
        let x = grid.position(i);
        let t = field.tau_at(i, &x);
        let y = [x[0] - t[0], x[1] - t[1]];
        // e^{2πi k y_a / L} for every k in range, per axis
        let table = |ya: f64| -> Vec<Complex64> {
            (0..span)
                .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (kmin + j as i64) as f64 * ya / extent))
                .collect()
        };
        let e0 = table(y[0]);
        let value: Complex64 = if grid.dim == 1 {
            terms.iter().map(|(k, c)| c * e0[(k[0] - kmin) as usize]).sum()
        } else {
            let e1 = table(y[1]);
            terms
                .iter()
                .map(|(k, c)| c * e0[(k[0] - kmin) as usize] * e1[(k[1] - kmin) as usize])
                .sum()
        };
        value * scale * Complex64::from_polar(1.0, 2.0 * PI * field.omega_at(i, &x))
    });
    SampledSignal::new(grid, Domain::Space, data)
}

// ---------------------------------------------------------------- constants

/// `K = max_n max_ω |χ̂_n(ω)|·|ω|` over the frequency grids.
pub fn decay_constant(seq: &ModuleSequence) -> f64 {
    decay_constant_of(&seq.output_atoms())
}

pub fn decay_constant_of(atoms: &[SampledSignal]) -> f64 {
    atoms
        .iter()
        .map(|chi| {
            let spec = chi.to_frequency();
            let g = *spec.grid();
            spec.samples()
                .iter()
                .enumerate()
                .map(|(i, v)| v.norm() * euclid(&g.frequency(i)))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Quadrature grid for the deformation constant: period `extent`, step `step`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub extent: f64,
    pub step: f64,
}

impl Quadrature {
    pub fn default_for(dim: usize) -> Self {
        match dim {
            1 => Quadrature { extent: 128.0, step: 1.0 / 16.0 },
            _ => Quadrature { extent: 32.0, step: 1.0 / 16.0 },
        }
    }

    pub fn refined(self) -> Self {
        Quadrature {
            extent: self.extent,
            step: self.step / 2.0,
        }
    }
}

fn smooth_step_g(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Radial profile of `η̂`: 1 on `[0, 1]`, 0 from 2 on, `C^∞` in between.
pub fn eta_profile(r: f64) -> f64 {
    let a = smooth_step_g(2.0 - r);
    let b = smooth_step_g(r - 1.0);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// `C = max{2‖∇η‖₁, 4π‖η‖₁}` for the default mollified-indicator `η`.
pub fn deformation_constant(dim: usize) -> Result<f64> {
    static CACHE: [OnceLock<f64>; 2] = [OnceLock::new(), OnceLock::new()];
    if dim != 1 && dim != 2 {
        return Err(Error::Dimension(format!("dimension {dim} not supported")));
    }
    if let Some(c) = CACHE[dim - 1].get() {
        return Ok(*c);
    }
    let c = deformation_constant_with(dim, eta_profile, Quadrature::default_for(dim))?;
    Ok(*CACHE[dim - 1].get_or_init(|| c))
}

/// `C` for an arbitrary radial profile of `η̂`, which must equal 1 on the unit ball.
pub fn deformation_constant_with(dim: usize, profile: impl Fn(f64) -> f64, quad: Quadrature) -> Result<f64> {
    let n = (quad.extent / quad.step).round() as usize;
    let grid = Grid::new(dim, n, quad.step)?;
    if grid.nyquist() < 2.0 {
        return Err(Error::InvalidArgument("quadrature step too coarse for a bump supported in B₂".into()));
    }
    let mut eta_hat = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let w = grid.frequency(i);
        let r = euclid(&w);
        let v = profile(r);
        if r <= 1.0 && (v - 1.0).abs() > 1e-10 {
            return Err(Error::Profile(format!("η̂({w:?}) = {v}, expected 1 on the unit ball")));
        }
        eta_hat.push(Complex64::new(v, 0.0));
    }
    let spec = SampledSignal::from_parts(grid, Domain::Frequency, eta_hat);
    let eta = spec.to_space();
    let l1 = grid.cell() * eta.samples().iter().map(|v| v.norm()).sum::<f64>();

    let mut grad_sq = vec![0.0; grid.len()];
    for axis in 0..dim {
        let d: Vec<Complex64> = spec
            .samples()
            .iter()
            .enumerate()
            .map(|(i, v)| v * Complex64::new(0.0, 2.0 * PI * grid.frequency(i)[axis]))
            .collect();
        let d = SampledSignal::from_parts(grid, Domain::Frequency, d).to_space();
        for (acc, v) in grad_sq.iter_mut().zip(d.samples()) {
            *acc += v.norm_sqr();
        }
    }
    let grad_l1 = grid.cell() * grad_sq.iter().map(|v| v.sqrt()).sum::<f64>();
    Ok((2.0 * grad_l1).max(4.0 * PI * l1))
}

// ---------------------------------------------------------------- checks

fn require_admissible(seq: &ModuleSequence) -> Result<()> {
    if !seq.admissibility().admissible {
        return Err(Error::NotAdmissible(Box::new(seq.admissibility().clone())));
    }
    Ok(())
}

fn features(seq: &ModuleSequence, f: &SampledSignal) -> Result<FeatureVector> {
    extract_with(seq, f, &ExtractOptions { force: true, depth: None })
}

/// `|||Φ_Ω(f)||| ≤ ‖f‖₂`.
pub fn verify_energy(seq: &ModuleSequence, f: &SampledSignal) -> Result<BoundReport> {
    require_admissible(seq)?;
    let phi = features(seq, f)?;
    let deepest = phi.layers.last().map(|l| l.propagated_energy).unwrap_or(0.0);
    Ok(BoundReport::new(
        "energy",
        phi.norm(),
        f.norm_l2(),
        ABS_TOL,
        json!({ "captured_energy": phi.norm().powi(2), "deepest_propagated_energy": deepest }),
    ))
}

/// `|||Φ_Ω(f) − Φ_Ω(h)||| ≤ ‖f − h‖₂`.
pub fn verify_lipschitz(seq: &ModuleSequence, f: &SampledSignal, h: &SampledSignal) -> Result<BoundReport> {
    require_admissible(seq)?;
    let d = features(seq, f)?.distance(&features(seq, h)?)?;
    Ok(BoundReport::new("lipschitz", d, f.distance(h)?, ABS_TOL, json!({})))
}

fn shift_checks(seq: &ModuleSequence, t: &[f64], n: usize) -> Result<(f64, f64)> {
    require_admissible(seq)?;
    if n > seq.depth() {
        return Err(Error::InvalidArgument(format!(
            "layer {n} is deeper than the sequence ({})",
            seq.depth()
        )));
    }
    Ok((norm_v(t), seq.pooling_product(n) as f64))
}

/// `|||Φⁿ(T_t f) − Φⁿ(f)||| ≤ 2π|t|K‖f‖₂ / (S₁⋯S_n)`.
pub fn verify_invariance(seq: &ModuleSequence, f: &SampledSignal, t: &[f64], n: usize) -> Result<BoundReport> {
    let (tn, s) = shift_checks(seq, t, n)?;
    let k = decay_constant(seq);
    let a = features(seq, f)?;
    let b = features(seq, &f.translate(t)?)?;
    let measured = b.layer_distance(&a, n)?;
    let bound = 2.0 * PI * tn * k * f.norm_l2() / s;
    Ok(BoundReport::with_rel(
        "invariance",
        measured,
        bound,
        json!({ "layer": n, "t": t, "K": k, "pooling_product": s }),
    ))
}

/// `|||Φⁿ(T_t f) − T_tΦⁿ(f)||| ≤ 2π|t|K·|1/(S₁⋯S_n) − 1|·‖f‖₂`.
pub fn verify_covariance(seq: &ModuleSequence, f: &SampledSignal, t: &[f64], n: usize) -> Result<BoundReport> {
    let (tn, s) = shift_checks(seq, t, n)?;
    let k = decay_constant(seq);
    let a = features(seq, f)?.translated(t)?;
    let b = features(seq, &f.translate(t)?)?;
    let measured = b.layer_distance(&a, n)?;
    let bound = 2.0 * PI * tn * k * (1.0 / s - 1.0).abs() * f.norm_l2();
    let tol = if bound == 0.0 { ABS_TOL } else { REL_TOL * bound + BOUND_ABS_TOL };
    Ok(BoundReport::new(
        "covariance",
        measured,
        bound,
        tol,
        json!({ "layer": n, "t": t, "K": k, "pooling_product": s }),
    ))
}

fn deformation_bound(field: &DeformationField, radius: f64, norm: f64) -> Result<(f64, f64)> {
    let c = deformation_constant(field.dim)?;
    Ok((c, c * (radius * field.sup_tau() + field.sup_omega()) * norm))
}

/// `‖f − F_{τ,ω}f‖₂ ≤ C(R‖τ‖∞ + ‖ω‖∞)‖f‖₂` with `f = random_bandlimited(spec)`.
pub fn verify_bandlimited_error(grid: Grid, spec: &BandlimitSpec, field: &DeformationField) -> Result<BoundReport> {
    field.require_valid()?;
    let f = random_bandlimited(grid, spec)?;
    let warped = apply_deformation(field, &f)?;
    let measured = f.distance(&warped)?;
    let (c, bound) = deformation_bound(field, spec.radius, f.norm_l2())?;
    let mut meta = field.summary();
    meta["C"] = json!(c);
    meta["R"] = json!(spec.radius);
    Ok(BoundReport::with_rel("bandlimit-error", measured, bound, meta))
}

/// `|||Φ_Ω(F_{τ,ω}f) − Φ_Ω(f)||| ≤ C(R‖τ‖∞ + ‖ω‖∞)‖f‖₂`.
///
/// The metadata also records `‖f − F_{τ,ω}f‖₂` and whether the feature
/// distance stays below it, which is the step through which the bound is proven.
pub fn verify_deformation(seq: &ModuleSequence, spec: &BandlimitSpec, field: &DeformationField) -> Result<BoundReport> {
    require_admissible(seq)?;
    field.require_valid()?;
    let f = random_bandlimited(*seq.input_grid(), spec)?;
    let warped = apply_deformation(field, &f)?;
    let signal_error = f.distance(&warped)?;
    let measured = features(seq, &warped)?.distance(&features(seq, &f)?)?;
    let (c, bound) = deformation_bound(field, spec.radius, f.norm_l2())?;
    let mut meta = field.summary();
    meta["C"] = json!(c);
    meta["R"] = json!(spec.radius);
    meta["signal_error"] = json!(signal_error);
    meta["decoupled"] = json!(measured <= signal_error + BOUND_ABS_TOL);
    let mut report = BoundReport::with_rel("deformation", measured, bound, meta);
    report.pass &= measured <= signal_error + BOUND_ABS_TOL;
    Ok(report)
}

// ---------------------------------------------------------------- sweeps

fn draw(grid: Grid, radius: f64, seed: u64) -> Result<SampledSignal> {
    random_bandlimited(grid, &BandlimitSpec { radius, seed })
}

fn collect(results: Vec<Result<Vec<BoundReport>>>) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

pub fn sweep_energy(seq: &ModuleSequence, trials: usize, seed: u64, radius: f64) -> Result<Vec<BoundReport>> {
    require_admissible(seq)?;
    let grid = *seq.input_grid();
    collect(parallel::map_indexed(trials, |i| {
        let f = draw(grid, radius, trial_seed(seed, i))?;
        Ok(vec![verify_energy(seq, &f)?])
    }))
}

/// Pairs of independent draws, alternating with `h = f + η` for a small random `η`.
pub fn sweep_lipschitz(seq: &ModuleSequence, trials: usize, seed: u64, radius: f64) -> Result<Vec<BoundReport>> {
    require_admissible(seq)?;
    let grid = *seq.input_grid();
    collect(parallel::map_indexed(trials, |i| {
        let s = trial_seed(seed, i);
        let f = draw(grid, radius, s)?;
        let eta = draw(grid, radius, s ^ 0x5555_5555)?;
        let h = if i % 2 == 0 {
            eta
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            f.add(&eta.scaled(10f64.powf(rng.random_range(-3.0..0.0))))?
        };
        Ok(vec![verify_lipschitz(seq, &f, &h)?])
    }))
}

pub fn sweep_invariance(
    seq: &ModuleSequence,
    trials: usize,
    seed: u64,
    radius: f64,
    t: &[f64],
    layers: &[usize],
) -> Result<Vec<BoundReport>> {
    sweep_shift(seq, trials, seed, radius, t, layers, verify_invariance)
}

pub fn sweep_covariance(
    seq: &ModuleSequence,
    trials: usize,
    seed: u64,
    radius: f64,
    t: &[f64],
    layers: &[usize],
) -> Result<Vec<BoundReport>> {
    sweep_shift(seq, trials, seed, radius, t, layers, verify_covariance)
}

fn sweep_shift(
    seq: &ModuleSequence,
    trials: usize,
    seed: u64,
    radius: f64,
    t: &[f64],
    layers: &[usize],
    check: fn(&ModuleSequence, &SampledSignal, &[f64], usize) -> Result<BoundReport>,
) -> Result<Vec<BoundReport>> {
    require_admissible(seq)?;
    let grid = *seq.input_grid();
    collect(parallel::map_indexed(trials, |i| {
        let f = draw(grid, radius, trial_seed(seed, i))?;
        layers.iter().map(|&n| check(seq, &f, t, n)).collect()
    }))
}

fn field_for(fixed: Option<&DeformationField>, dim: usize, extent: f64, seed: u64) -> DeformationField {
    match fixed {
        Some(f) => f.clone(),
        None => random_field(dim, extent, &mut ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5)),
    }
}

/// One report per trial; a random parametric field is drawn when `field` is `None`.
pub fn sweep_deformation(
    seq: &ModuleSequence,
    trials: usize,
    seed: u64,
    radius: f64,
    field: Option<&DeformationField>,
) -> Result<Vec<BoundReport>> {
    require_admissible(seq)?;
    if let Some(f) = field {
        f.require_valid()?;
    }
    let grid = *seq.input_grid();
    collect(parallel::map_indexed(trials, |i| {
        let s = trial_seed(seed, i);
        let fld = field_for(field, grid.dim, grid.extent(), s);
        Ok(vec![verify_deformation(seq, &BandlimitSpec { radius, seed: s }, &fld)?])
    }))
}

pub fn sweep_bandlimited_error(
    grid: Grid,
    trials: usize,
    seed: u64,
    radius: f64,
    field: Option<&DeformationField>,
) -> Result<Vec<BoundReport>> {
    if let Some(f) = field {
        f.require_valid()?;
    }
    collect(parallel::map_indexed(trials, |i| {
        let s = trial_seed(seed, i);
        let fld = field_for(field, grid.dim, grid.extent(), s);
        Ok(vec![verify_bandlimited_error(grid, &BandlimitSpec { radius, seed: s }, &fld)?])
    }))
}

/// Standard-normal complex noise, for tests that need non-band-limited input.
pub fn white_noise(grid: Grid, seed: u64) -> SampledSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..grid.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    SampledSignal::from_parts(grid, Domain::Space, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_wavelet_1d, BankInfo, FilterBank};
    use crate::network::{preset_scattering, NetModule};
    use crate::nonlinearities::Nonlinearity;
    use crate::pooling::PoolingSpec;

    fn bump(a: f64, c: f64, s: f64) -> DeformationField {
        DeformationField {
            dim: 1,
            tau: TauField::GaussianBump { amplitude: vec![a], center: vec![c], width: s },
            omega: PhaseField::Zero,
        }
    }

    fn wavelet_net(n: usize, dx: f64, depth: usize, pool: &str) -> ModuleSequence {
        let mut grid = Grid::new(1, n, dx).unwrap();
        let mut modules = Vec::new();
        for _ in 0..=depth {
            let pool: PoolingSpec = pool.parse().unwrap();
            let bank = build_wavelet_1d(grid, -4, 0).unwrap().normalize_parseval().unwrap();
            let next = grid.downsampled(pool.factor).unwrap();
            modules.push(NetModule::new(bank, Nonlinearity::Modulus, pool));
            grid = next;
        }
        ModuleSequence::new(modules, depth).unwrap()
    }

    #[test]
    fn figure_field_jacobian() {
        let f = bump(0.5, 0.0, 1.0);
        // dense grid-search oracle on the derivative -x·e^{-x²}
        let oracle = (0..400_001)
            .map(|i| {
                let x = -4.0 + 8.0 * i as f64 / 400_000.0;
                (x * (-x * x).exp()).abs()
            })
            .fold(0.0, f64::max);
        let (s, ok) = f.jacobian_condition();
        assert!((s - oracle).abs() < 1e-9, "{s} vs {oracle}");
        assert!((s - 0.4289).abs() < 1e-4 && ok);
        assert_eq!(DeformationField::identity(1).jacobian_condition(), (0.0, true));
        let lin = DeformationField { dim: 1, tau: TauField::Linear { slope: 1.0 }, omega: PhaseField::Zero };
        assert_eq!(lin.jacobian_condition(), (1.0, false));
    }

    #[test]
    fn sinusoid_and_sampled_suprema() {
        let f = DeformationField {
            dim: 2,
            tau: TauField::Sinusoid { amplitude: vec![0.1, -0.2], wavenumber: vec![1.0, 3.0], period: 16.0, phase: 0.3 },
            omega: PhaseField::Gaussian { amplitude: -0.4, center: vec![8.0, 8.0], width: 2.0 },
        };
        assert!((f.sup_tau() - (0.05f64).sqrt()).abs() < 1e-15);
        assert!((f.sup_dtau() - 0.2 * 2.0 * PI * 3.0 / 16.0).abs() < 1e-15);
        assert_eq!(f.sup_omega(), 0.4);
        // sampling the same field gives lower bounds
        let g = Grid::new(2, 64, 0.25).unwrap();
        let values: Vec<Vec<f64>> = (0..g.len()).map(|i| f.tau_at(i, &g.position(i))[..2].to_vec()).collect();
        let sampled = DeformationField { dim: 2, tau: TauField::Sampled { grid: g, values }, omega: PhaseField::Zero };
        assert!(sampled.is_sampled());
        assert!(sampled.sup_dtau() <= f.sup_dtau() + 1e-12);
        assert!(sampled.sup_dtau() > 0.9 * f.sup_dtau());
    }

    #[test]
    fn deformation_special_cases() {
        let g = Grid::new(1, 256, 0.125).unwrap();
        let f = random_bandlimited(g, &BandlimitSpec { radius: 2.0, seed: 3 }).unwrap();
        let id = apply_deformation(&DeformationField::identity(1), &f).unwrap();
        assert!(id.max_abs_diff(&f).unwrap() < 1e-10);
        let shift = DeformationField { dim: 1, tau: TauField::Constant { shift: vec![0.37] }, omega: PhaseField::Zero };
        let a = apply_deformation(&shift, &f).unwrap();
        assert!(a.max_abs_diff(&f.translate(&[0.37]).unwrap()).unwrap() < 1e-10);
        let m = DeformationField { dim: 1, tau: TauField::Zero, omega: PhaseField::Constant { value: 0.5 } };
        assert!(apply_deformation(&m, &f).unwrap().add(&f).unwrap().norm_l2() < 1e-10);
        // non-band-limited input is refused
        assert!(matches!(apply_deformation(&shift, &white_noise(g, 1)), Err(Error::NotBandlimited(_))));
    }

    #[test]
    fn deformation_2d_shift() {
        let g = Grid::new(2, 32, 0.5).unwrap();
        let f = random_bandlimited(g, &BandlimitSpec { radius: 0.6, seed: 9 }).unwrap();
        let shift = DeformationField { dim: 2, tau: TauField::Constant { shift: vec![0.3, -1.1] }, omega: PhaseField::Zero };
        let a = apply_deformation(&shift, &f).unwrap();
        assert!(a.max_abs_diff(&f.translate(&[0.3, -1.1]).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn gaussian_decay_constant() {
        let g = Grid::new(1, 8192, 1.0 / 8.0).unwrap();
        let chi = SampledSignal::from_parts(
            g,
            Domain::Frequency,
            (0..g.len()).map(|i| Complex64::new((-PI * g.frequency(i)[0].powi(2)).exp(), 0.0)).collect(),
        );
        let k = decay_constant_of(std::slice::from_ref(&chi));
        let exact = (2.0 * PI * std::f64::consts::E).powf(-0.5);
        assert!((k - exact).abs() < 1e-6, "{k} vs {exact}");
        assert!((k - 0.2420).abs() < 1e-4);
        assert_eq!(decay_constant_of(&[SampledSignal::zeros(g)]), 0.0);
        let dominated = chi.scaled(0.5);
        assert_eq!(decay_constant_of(&[chi, dominated]), k);
    }

    #[test]
    fn deformation_constant_properties() {
        let c1 = deformation_constant(1).unwrap();
        let c2 = deformation_constant(2).unwrap();
        assert!(c1 >= 4.0 * PI && c2 >= 4.0 * PI);
        assert!((c1 - c2).abs() > 1e-3);
        let r1 = deformation_constant_with(1, eta_profile, Quadrature::default_for(1).refined()).unwrap();
        assert!((r1 - c1).abs() / c1 < 0.01);
        let bad = deformation_constant_with(1, |r| if r < 0.5 { 1.0 } else { 0.0 }, Quadrature::default_for(1));
        assert!(matches!(bad, Err(Error::Profile(_))));
    }

    #[test]
    fn eta_profile_shape() {
        assert_eq!(eta_profile(0.0), 1.0);
        assert_eq!(eta_profile(1.0), 1.0);
        assert_eq!(eta_profile(2.0), 0.0);
        assert_eq!(eta_profile(3.0), 0.0);
        assert!((eta_profile(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trivial_reports() {
        let seq = wavelet_net(256, 1.0, 2, "subsample:2");
        let f = random_bandlimited(*seq.input_grid(), &BandlimitSpec { radius: 0.1, seed: 0 }).unwrap();
        let r = verify_lipschitz(&seq, &f, &f).unwrap();
        assert_eq!((r.measured, r.bound), (0.0, 0.0));
        assert!(r.pass);
        let r = verify_invariance(&seq, &f, &[0.0], 1).unwrap();
        assert_eq!((r.measured, r.bound), (0.0, 0.0));
        let r = verify_covariance(&seq, &f, &[0.0], 2).unwrap();
        assert!(r.pass && r.bound == 0.0);
        let scat = preset_scattering(Grid::new(2, 16, 1.0).unwrap(), 1, 4, 1).unwrap();
        let g = random_bandlimited(*scat.input_grid(), &BandlimitSpec { radius: 0.3, seed: 2 }).unwrap();
        let a = verify_invariance(&scat, &g, &[2.0, 0.0], 0).unwrap();
        let b = verify_invariance(&scat, &g, &[2.0, 0.0], 1).unwrap();
        assert_eq!(a.bound, b.bound);
    }

    #[test]
    fn deformation_checks_pass_and_decouple() {
        let seq = wavelet_net(1024, 1.0 / 32.0, 2, "subsample:2");
        let spec = BandlimitSpec { radius: 8.0, seed: 11 };
        let id = verify_deformation(&seq, &spec, &DeformationField::identity(1)).unwrap();
        assert!(id.measured <= 1e-8 && id.bound == 0.0 && id.pass);
        let fig = bump(0.5, 16.0, 1.0);
        let r = verify_deformation(&seq, &spec, &fig).unwrap();
        assert!(r.pass, "{r:?}");
        let e = verify_bandlimited_error(*seq.input_grid(), &spec, &fig).unwrap();
        assert!(e.pass);
        assert!(r.measured <= e.measured + 1e-9);
        let modulation = DeformationField { dim: 1, tau: TauField::Zero, omega: PhaseField::Constant { value: 0.2 } };
        assert!(verify_deformation(&seq, &spec, &modulation).unwrap().pass);
        let shift = DeformationField { dim: 1, tau: TauField::Constant { shift: vec![0.4] }, omega: PhaseField::Zero };
        let e = verify_bandlimited_error(*seq.input_grid(), &spec, &shift).unwrap();
        let f = random_bandlimited(*seq.input_grid(), &spec).unwrap();
        assert!((e.measured - f.distance(&f.translate(&[0.4]).unwrap()).unwrap()).abs() < 1e-10);
        let steep = bump(2.0, 16.0, 1.0);
        assert!(matches!(verify_deformation(&seq, &spec, &steep), Err(Error::Precondition(_))));
    }

    #[test]
    fn non_admissible_sequences_are_refused() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let info = BankInfo { kind: "custom".into(), params: serde_json::Value::Null, normalization: vec![] };
        let two = vec![Complex64::new(2.0, 0.0); 16];
        let bank = FilterBank::from_raw(g, vec!["a".into(), "o".into()], vec![two.clone(), two], "o", info).unwrap();
        let m = NetModule::new(bank, Nonlinearity::Modulus, PoolingSpec::subsample(1).unwrap());
        let seq = ModuleSequence::new(vec![m.clone(), m], 1).unwrap();
        let f = SampledSignal::zeros(g);
        assert!(matches!(verify_energy(&seq, &f), Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn random_fields_are_valid_and_seeded() {
        for dim in [1, 2] {
            for s in 0..200 {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let f = random_field(dim, 32.0, &mut rng);
                f.validate().unwrap();
                assert!(f.is_theorem_valid());
            }
        }
        let a = random_field(1, 32.0, &mut ChaCha8Rng::seed_from_u64(4));
        let b = random_field(1, 32.0, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
    }

    #[test]
    fn field_json_round_trip() {
        let text = r#"{"dim":1,"tau":{"type":"gaussian_bump","amplitude":[0.5],"center":[16.0],"width":1.0},"omega":{"type":"constant","value":0.1}}"#;
        let f: DeformationField = serde_json::from_str(text).unwrap();
        assert_eq!(f.sup_omega(), 0.1);
        let back: DeformationField = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
