//! Sampled periodic signals on square power-of-two grids.
//!
//! Space-domain samples are point values `f(kΔ)`. Frequency-domain samples
//! hold the continuous-normalized transform `f̂[k] = Δ^d · DFT(f)[k]` in FFT
//! order, so a frequency-domain atom can be read directly as `ĝ(ω_k)` and
//! `‖f‖₂² = Δ^d Σ|f[k]|² = (NΔ)^{-d} Σ|f̂[k]|²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Uniform periodic grid with the same sample count and spacing on every axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub spacing: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, spacing: f64) -> Result<Self> {
        let grid = Grid { dim, n, spacing };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension {} not supported (1 or 2)",
                self.dim
            )));
        }
        if self.n == 0 || !self.n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "sample count {} is not a power of two",
                self.n
            )));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing {} must be positive and finite",
                self.spacing
            )));
        }
        Ok(())
    }

    /// Total number of samples, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Riemann weight `Δ^d`.
    pub fn cell(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Period of the domain along each axis, `NΔ`.
    pub fn extent(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    /// Spacing of the frequency grid, `1/(NΔ)`.
    pub fn frequency_step(&self) -> f64 {
        1.0 / self.extent()
    }

    /// Frequency-domain Riemann weight `(NΔ)^{-d}`.
    pub fn frequency_cell(&self) -> f64 {
        self.frequency_step().powi(self.dim as i32)
    }

    pub fn nyquist(&self) -> f64 {
        0.5 / self.spacing
    }

    /// FFT-order index to signed frequency index; the Nyquist bin maps to `-N/2`.
    pub fn signed_index(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Per-axis multi-index of a flat row-major index. Unused axes are 0.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.n, flat % self.n],
        }
    }

    pub fn flatten(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] * self.n + idx[1],
        }
    }

    /// Physical frequency (cycles per unit length) of a flat FFT-order index.
    pub fn frequency(&self, flat: usize) -> [f64; 2] {
        let idx = self.unflatten(flat);
        let step = self.frequency_step();
        let mut w = [0.0; 2];
        for (a, wa) in w.iter_mut().enumerate().take(self.dim) {
            *wa = self.signed_index(idx[a]) as f64 * step;
        }
        w
    }

    /// Physical position `kΔ` of a flat index, in `[0, NΔ)` per axis.
    pub fn position(&self, flat: usize) -> [f64; 2] {
        let idx = self.unflatten(flat);
        let mut x = [0.0; 2];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = idx[a] as f64 * self.spacing;
        }
        x
    }

    /// Grid after dilation by `factor`: `N/S` samples at the same spacing.
    pub fn downsampled(&self, factor: usize) -> Result<Grid> {
        if factor == 0 || !self.n.is_multiple_of(factor) {
            return Err(Error::Divisibility { factor, n: self.n });
        }
        Grid::new(self.dim, self.n / factor, self.spacing)
    }

    pub(crate) fn check_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self.dim != other.dim || self.n != other.n || self.spacing != other.spacing {
            return Err(Error::Dimension(format!(
                "{what}: grid {:?} does not match {:?}",
                self, other
            )));
        }
        Ok(())
    }
}

pub(crate) fn euclid(v: &[f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Space,
    Frequency,
}

/// Band-limited generator parameters: radius `R` in cycles per unit length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandlimitSpec {
    pub radius: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    grid: Grid,
    domain: Domain,
    data: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(grid: Grid, domain: Domain, data: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if data.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} samples supplied for a grid of {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(SampledSignal { grid, domain, data })
    }

    pub(crate) fn from_parts(grid: Grid, domain: Domain, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        SampledSignal { grid, domain, data }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_parts(grid, Domain::Space, vec![Complex64::default(); grid.len()])
    }

    pub fn constant(grid: Grid, value: Complex64) -> Self {
        Self::from_parts(grid, Domain::Space, vec![value; grid.len()])
    }

    /// Samples `f(x)` at every grid position.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self::from_parts(grid, Domain::Space, data)
    }

    /// Discrete delta of mass one: value `1/Δ^d` at `index`.
    pub fn impulse(grid: Grid, index: usize) -> Result<Self> {
        if index >= grid.len() {
            return Err(Error::InvalidArgument(format!(
                "impulse index {index} outside grid of {}",
                grid.len()
            )));
        }
        let mut s = Self::zeros(grid);
        s.data[index] = Complex64::new(1.0 / grid.cell(), 0.0);
        Ok(s)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.data
    }

    pub fn to_frequency(&self) -> SampledSignal {
        match self.domain {
            Domain::Frequency => self.clone(),
            Domain::Space => {
                let mut data = self.data.clone();
                fft::forward(&mut data, &self.grid);
                Self::from_parts(self.grid, Domain::Frequency, data)
            }
        }
    }

    pub fn to_space(&self) -> SampledSignal {
        match self.domain {
            Domain::Space => self.clone(),
            Domain::Frequency => {
                let mut data = self.data.clone();
                fft::inverse(&mut data, &self.grid);
                Self::from_parts(self.grid, Domain::Space, data)
            }
        }
    }

    fn weight(&self) -> f64 {
        match self.domain {
            Domain::Space => self.grid.cell(),
            Domain::Frequency => self.grid.frequency_cell(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weight() * self.data.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// `‖f‖₂` with the Riemann weight of the signal's domain.
    pub fn norm_l2(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨f, g⟩ = ∫ f ḡ`, computed in the domain of `self`.
    pub fn inner(&self, other: &SampledSignal) -> Result<Complex64> {
        self.grid.check_same(&other.grid, "inner product")?;
        let other = match (self.domain, other.domain) {
            (a, b) if a == b => std::borrow::Cow::Borrowed(other),
            (Domain::Space, _) => std::borrow::Cow::Owned(other.to_space()),
            (Domain::Frequency, _) => std::borrow::Cow::Owned(other.to_frequency()),
        };
        let s: Complex64 = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.weight())
    }

    /// Periodic convolution approximating `∫ f(y) g(x−y) dy`; result in the space domain.
    pub fn circular_convolve(&self, other: &SampledSignal) -> Result<SampledSignal> {
        self.grid.check_same(&other.grid, "convolution")?;
        let a = self.to_frequency();
        let b = other.to_frequency();
        let mut data: Vec<Complex64> = a.data.iter().zip(b.data.iter()).map(|(x, y)| x * y).collect();
        fft::inverse(&mut data, &self.grid);
        Ok(Self::from_parts(self.grid, Domain::Space, data))
    }

    /// `(T_t f)(x) = f(x − t)` through the frequency-domain phase ramp `e^{−2πi⟨ω,t⟩}`.
    pub fn translate(&self, t: &[f64]) -> Result<SampledSignal> {
        if t.len() != self.grid.dim {
            return Err(Error::Dimension(format!(
                "shift has {} components for a {}-D signal",
                t.len(),
                self.grid.dim
            )));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("shift must be finite".into()));
        }
        if t.iter().all(|v| *v == 0.0) {
            return Ok(self.clone());
        }
        let mut spec = self.to_frequency();
        apply_phase_ramp(&mut spec.data, &self.grid, t);
        Ok(match self.domain {
            Domain::Space => spec.to_space(),
            Domain::Frequency => spec,
        })
    }

    /// Pointwise multiplication by `e^{2πi·phase(x)}`.
    pub fn modulate(&self, phase: &[f64]) -> Result<SampledSignal> {
        if phase.len() != self.grid.len() {
            return Err(Error::Dimension(format!(
                "phase field has {} samples, signal has {}",
                phase.len(),
                self.grid.len()
            )));
        }
        let space = self.to_space();
        let data = space
            .data
            .iter()
            .zip(phase)
            .map(|(v, p)| v * Complex64::from_polar(1.0, 2.0 * PI * p))
            .collect();
        Ok(Self::from_parts(self.grid, Domain::Space, data))
    }

    /// `h[k] = S^{d/2} f[Sk]` on a grid of `N/S` samples at the same spacing.
    pub fn dilate_downsample(&self, factor: usize) -> Result<SampledSignal> {
        let out_grid = self.grid.downsampled(factor)?;
        let space = self.to_space();
        Ok(downsample_samples(&space.data, &self.grid, &out_grid, factor))
    }

    /// `true` when no more than `1e-24` of the spectral energy sits in the
    /// outer eighth of the band on any axis.
    pub fn is_bandlimited(&self) -> bool {
        self.guard_band_energy_fraction() <= 1e-24
    }

    pub(crate) fn guard_band_energy_fraction(&self) -> f64 {
        let spec = self.to_frequency();
        let limit = 0.875 * self.grid.nyquist();
        let mut total = 0.0;
        let mut outer = 0.0;
        for (i, v) in spec.data.iter().enumerate() {
            let e = v.norm_sqr();
            total += e;
            let w = self.grid.frequency(i);
            if w.iter().take(self.grid.dim).any(|c| c.abs() > limit) {
                outer += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    pub fn scaled(&self, s: f64) -> SampledSignal {
        let data = self.data.iter().map(|v| v * s).collect();
        Self::from_parts(self.grid, self.domain, data)
    }

    pub fn add(&self, other: &SampledSignal) -> Result<SampledSignal> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SampledSignal) -> Result<SampledSignal> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &SampledSignal,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<SampledSignal> {
        self.grid.check_same(&other.grid, "elementwise operation")?;
        let other = if other.domain == self.domain {
            std::borrow::Cow::Borrowed(other)
        } else if self.domain == Domain::Space {
            std::borrow::Cow::Owned(other.to_space())
        } else {
            std::borrow::Cow::Owned(other.to_frequency())
        };
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| op(*a, *b))
            .collect();
        Ok(Self::from_parts(self.grid, self.domain, data))
    }

    /// `‖f − g‖₂`.
    pub fn distance(&self, other: &SampledSignal) -> Result<f64> {
        Ok(self.sub(other)?.norm_l2())
    }

    pub fn max_abs_diff(&self, other: &SampledSignal) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d.data.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }
}

pub(crate) fn apply_phase_ramp(spec: &mut [Complex64], grid: &Grid, t: &[f64]) {
    for (i, v) in spec.iter_mut().enumerate() {
        let w = grid.frequency(i);
        let dot: f64 = w.iter().zip(t).map(|(a, b)| a * b).sum();
        *v *= Complex64::from_polar(1.0, -2.0 * PI * dot);
    }
}

pub(crate) fn downsample_samples(
    data: &[Complex64],
    grid: &Grid,
    out_grid: &Grid,
    factor: usize,
) -> SampledSignal {
    let gain = (factor as f64).powf(grid.dim as f64 / 2.0);
    let out = (0..out_grid.len())
        .map(|i| {
            let idx = out_grid.unflatten(i);
            let src = grid.flatten([idx[0] * factor, idx[1] * factor]);
            data[src] * gain
        })
        .collect();
    SampledSignal::from_parts(*out_grid, Domain::Space, out)
}

/// Unit-norm signal whose spectrum is supported strictly inside the ball of
/// radius `spec.radius`, with i.i.d. complex Gaussian coefficients there.
pub fn random_bandlimited(grid: Grid, spec: &BandlimitSpec) -> Result<SampledSignal> {
    grid.validate()?;
    if !(spec.radius.is_finite() && spec.radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "band-limit radius {} must be positive",
            spec.radius
        )));
    }
    if spec.radius >= grid.nyquist() {
        return Err(Error::InvalidArgument(format!(
            "band-limit radius {} is not below the Nyquist limit {}",
            spec.radius,
            grid.nyquist()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = vec![Complex64::default(); grid.len()];
    for (i, v) in data.iter_mut().enumerate() {
        if euclid(&grid.frequency(i)) < spec.radius {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v = Complex64::new(re, im);
        }
    }
    let spectrum = SampledSignal::from_parts(grid, Domain::Frequency, data);
    let norm = spectrum.norm_l2();
    let mut out = spectrum.scaled(1.0 / norm).to_space();
    // renormalize in space so the unit norm holds for the representation callers use
    let n = out.norm_l2();
    out.data.iter_mut().for_each(|v| *v /= n);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid1(n: usize, dx: f64) -> Grid {
        Grid::new(1, n, dx).unwrap()
    }

    fn noise(grid: Grid, seed: u64) -> SampledSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..grid.len())
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        SampledSignal::new(grid, Domain::Space, data).unwrap()
    }

    // O(N^2) periodic sum, 1-D
    fn direct_convolution(f: &[Complex64], g: &[Complex64], dx: f64) -> Vec<Complex64> {
        let n = f.len();
        (0..n)
            .map(|k| (0..n).map(|m| f[m] * g[(k + n - m) % n]).sum::<Complex64>() * dx)
            .collect()
    }

    // O(N^2) raw DFT, 1-D
    fn direct_dft(f: &[Complex64]) -> Vec<Complex64> {
        let n = f.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|m| f[m] * Complex64::from_polar(1.0, -2.0 * PI * (k * m) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(Grid::new(3, 8, 1.0).is_err());
        assert!(Grid::new(1, 12, 1.0).is_err());
        assert!(Grid::new(2, 8, 0.0).is_err());
        assert!(Grid::new(2, 8, 0.5).is_ok());
    }

    #[test]
    fn impulse_is_convolution_identity() {
        let g = Grid::new(2, 16, 0.25).unwrap();
        let delta = SampledSignal::impulse(g, 0).unwrap();
        let h = noise(g, 3);
        let out = delta.circular_convolve(&h).unwrap();
        assert!(out.max_abs_diff(&h).unwrap() < 1e-12);
    }

    #[test]
    fn box_convolution_matches_direct_sum() {
        // Box of height one over [0, 1). On the 8-sample grid of spacing 1/8 the
        // box fills the whole period, so the periodic result is the constant 1.
        let g8 = grid1(8, 1.0 / 8.0);
        let b8 = SampledSignal::from_fn(g8, |x| Complex64::new(if x[0] < 1.0 { 1.0 } else { 0.0 }, 0.0));
        let h8 = b8.circular_convolve(&b8).unwrap();
        let oracle8 = direct_convolution(b8.samples(), b8.samples(), 1.0 / 8.0);
        for (a, b) in h8.samples().iter().zip(&oracle8) {
            assert!((a - b).norm() < 1e-12);
            assert!((a.re - 1.0).abs() < 1e-12);
        }
        // On a period of 2 the triangle appears: peak 1 at sample 7, 7/8 at lag 1.
        let g16 = grid1(16, 1.0 / 8.0);
        let b16 = SampledSignal::from_fn(g16, |x| Complex64::new(if x[0] < 1.0 { 1.0 } else { 0.0 }, 0.0));
        let h16 = b16.circular_convolve(&b16).unwrap();
        let oracle16 = direct_convolution(b16.samples(), b16.samples(), 1.0 / 8.0);
        for (a, b) in h16.samples().iter().zip(&oracle16) {
            assert!((a - b).norm() < 1e-12);
        }
        let expected = [
            1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0, 0.0,
        ];
        for (a, e) in h16.samples().iter().zip(expected) {
            assert!((a.re - e / 8.0).abs() < 1e-12, "{a} vs {}", e / 8.0);
        }
    }

    #[test]
    fn convolution_theorem_on_raw_dft() {
        let g = grid1(32, 0.3);
        for seed in 0..10 {
            let f = noise(g, seed);
            let h = noise(g, 100 + seed);
            let c = f.circular_convolve(&h).unwrap();
            let (fc, hc, cc) = (direct_dft(f.samples()), direct_dft(h.samples()), direct_dft(c.samples()));
            for k in 0..32 {
                let expect = fc[k] * hc[k] * g.cell();
                assert!((cc[k] - expect).norm() < 1e-9 * (1.0 + expect.norm()));
            }
        }
    }

    #[test]
    fn convolution_dimension_mismatch() {
        let a = SampledSignal::zeros(grid1(8, 1.0));
        let b = SampledSignal::zeros(grid1(8, 0.5));
        assert!(matches!(a.circular_convolve(&b), Err(Error::Dimension(_))));
    }

    #[test]
    fn integer_translation_moves_impulse() {
        let g = grid1(16, 0.5);
        let f = SampledSignal::impulse(g, 0).unwrap();
        let t = f.translate(&[1.5]).unwrap();
        let expect = SampledSignal::impulse(g, 3).unwrap();
        assert!(t.max_abs_diff(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn half_sample_translation_is_unitary() {
        let g = Grid::new(2, 32, 0.1).unwrap();
        let f = noise(g, 9);
        let t = f.translate(&[0.05, 0.0]).unwrap();
        assert!((t.norm_l2() - f.norm_l2()).abs() < 1e-12 * f.norm_l2());
    }

    #[test]
    fn modulation_cases() {
        let g = grid1(64, 1.0);
        let f = noise(g, 1);
        let zero = vec![0.0; 64];
        assert!(f.modulate(&zero).unwrap().max_abs_diff(&f).unwrap() < 1e-15);
        let half = vec![0.5; 64];
        let flipped = f.modulate(&half).unwrap();
        assert!(flipped.add(&f).unwrap().norm_l2() < 1e-12);
        let phase: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let m = f.modulate(&phase).unwrap();
        assert!((m.norm_l2() - f.norm_l2()).abs() < 1e-12 * f.norm_l2());
    }

    #[test]
    fn downsample_identity_and_constants() {
        let g = grid1(32, 1.0);
        let f = noise(g, 5);
        assert_eq!(f.dilate_downsample(1).unwrap(), f);
        let g2 = Grid::new(2, 16, 1.0).unwrap();
        let c = SampledSignal::constant(g2, Complex64::new(1.5, -0.5));
        let h = c.dilate_downsample(2).unwrap();
        assert_eq!(h.grid().n, 8);
        for v in h.samples() {
            assert!((v - Complex64::new(3.0, -1.0)).norm() < 1e-15);
        }
        assert!(matches!(f.dilate_downsample(3), Err(Error::Divisibility { .. })));
    }

    #[test]
    fn downsample_preserves_norm_of_bandlimited() {
        let g = grid1(1024, 1.0);
        let f = random_bandlimited(g, &BandlimitSpec { radius: 1.0 / 8.0, seed: 17 }).unwrap();
        let h = f.dilate_downsample(2).unwrap();
        // direct-summation oracle for both norms
        let nf: f64 = f.samples().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let nh: f64 = (h.samples().iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt();
        assert!((nh - nf).abs() / nf <= 1e-6, "{nf} {nh}");
    }

    #[test]
    fn downsample_composes() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let f = random_bandlimited(g, &BandlimitSpec { radius: 0.1, seed: 2 }).unwrap();
        let twice = f.dilate_downsample(2).unwrap().dilate_downsample(2).unwrap();
        let once = f.dilate_downsample(4).unwrap();
        assert!(twice.max_abs_diff(&once).unwrap() < 1e-6);
    }

    #[test]
    fn bandlimited_generator_contract() {
        let g = Grid::new(2, 32, 0.5).unwrap();
        let spec = BandlimitSpec { radius: 0.4, seed: 42 };
        let f = random_bandlimited(g, &spec).unwrap();
        assert!((f.norm_l2() - 1.0).abs() < 1e-12);
        let spectrum = f.to_frequency();
        let peak = spectrum.samples().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (i, v) in spectrum.samples().iter().enumerate() {
            if euclid(&g.frequency(i)) > spec.radius {
                assert!(v.norm() <= 1e-13 * peak, "leak at {:?}", g.frequency(i));
            }
        }
        let again = random_bandlimited(g, &spec).unwrap();
        assert!(f.samples().iter().zip(again.samples()).all(|(a, b)| a.re.to_bits() == b.re.to_bits()
            && a.im.to_bits() == b.im.to_bits()));
        assert!(random_bandlimited(g, &BandlimitSpec { radius: 1.0, seed: 0 }).is_err());
    }

    #[test]
    fn norms_and_parseval() {
        let g = grid1(16, 0.25);
        assert_eq!(SampledSignal::zeros(g).norm_l2(), 0.0);
        let d = SampledSignal::impulse(g, 4).unwrap();
        assert!((d.norm_sqr() - 4.0).abs() < 1e-12);
        for seed in 0..5 {
            let f = noise(Grid::new(2, 16, 0.3).unwrap(), seed);
            let fh = f.to_frequency();
            assert!((f.norm_l2() - fh.norm_l2()).abs() < 1e-10 * f.norm_l2());
            let ip = f.inner(&f).unwrap();
            assert!(ip.im.abs() < 1e-12 * ip.re && ip.re >= 0.0);
        }
    }

    #[test]
    fn frequency_round_trip() {
        let f = noise(Grid::new(2, 32, 0.7).unwrap(), 11);
        let back = f.to_frequency().to_space();
        let rel = back.distance(&f).unwrap() / f.norm_l2();
        assert!(rel < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn convolution_commutes(seed in 0u64..1000) {
            let g = Grid::new(2, 8, 0.5).unwrap();
            let (a, b) = (noise(g, seed), noise(g, seed + 7));
            let ab = a.circular_convolve(&b).unwrap();
            let ba = b.circular_convolve(&a).unwrap();
            prop_assert!(ab.max_abs_diff(&ba).unwrap() < 1e-12);
        }

        #[test]
        fn translation_group_law(seed in 0u64..1000, s in -3.0f64..3.0, t in -3.0f64..3.0) {
            let g = grid1(64, 0.25);
            let f = noise(g, seed);
            let composed = f.translate(&[s]).unwrap().translate(&[t]).unwrap();
            let direct = f.translate(&[s + t]).unwrap();
            prop_assert!(composed.distance(&direct).unwrap() < 1e-12 * f.norm_l2());
            let back = f.translate(&[t]).unwrap().translate(&[-t]).unwrap();
            prop_assert!(back.distance(&f).unwrap() < 1e-12 * f.norm_l2());
            prop_assert!((f.translate(&[t]).unwrap().norm_l2() - f.norm_l2()).abs() < 1e-12 * f.norm_l2());
        }
    }
}
