//! Pooling through dilation: `f ↦ S^{d/2} P(f)(S·)` with `P` either the
//! identity (sub-sampling) or a convolution with an averaging kernel.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::signal::{downsample_samples, Domain, Grid, SampledSignal};

#[derive(Clone, Debug, PartialEq)]
pub enum PoolingKernel {
    /// Unit-mass box over samples `[0, S)` on every axis.
    Box,
    /// Unit-mass periodized Gaussian with `σ = SΔ/2`.
    Gauss,
    /// User-supplied kernel on the layer grid.
    Custom(SampledSignal),
}

#[derive(Clone, Debug, PartialEq)]
pub enum PoolingKind {
    Subsample,
    Average { kernel: PoolingKernel, scale: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoolingSpec {
    pub kind: PoolingKind,
    pub factor: usize,
}

impl PoolingSpec {
    pub fn subsample(factor: usize) -> Result<Self> {
        check_factor(factor)?;
        Ok(PoolingSpec {
            kind: PoolingKind::Subsample,
            factor,
        })
    }

    pub fn average(kernel: PoolingKernel, factor: usize) -> Result<Self> {
        check_factor(factor)?;
        Ok(PoolingSpec {
            kind: PoolingKind::Average { kernel, scale: 1.0 },
            factor,
        })
    }

    /// Multiplies the averaging kernel by `s`.
    pub fn scaled(mut self, s: f64) -> Result<Self> {
        match &mut self.kind {
            PoolingKind::Average { scale, .. } => {
                *scale *= s;
                Ok(self)
            }
            PoolingKind::Subsample => Err(Error::InvalidArgument(
                "sub-sampling has no kernel to scale".into(),
            )),
        }
    }

    /// Lipschitz constant `R`: 1 for sub-sampling, `‖φ‖₁` for averaging.
    pub fn lipschitz(&self) -> f64 {
        match &self.kind {
            PoolingKind::Subsample => 1.0,
            PoolingKind::Average { kernel, scale } => match kernel {
                PoolingKernel::Box | PoolingKernel::Gauss => scale.abs(),
                PoolingKernel::Custom(phi) => {
                    let space = phi.to_space();
                    scale.abs() * space.grid().cell() * space.samples().iter().map(|v| v.norm()).sum::<f64>()
                }
            },
        }
    }

    /// The averaging kernel sampled on `grid`, or `None` for sub-sampling.
    pub fn kernel_on(&self, grid: &Grid) -> Result<Option<SampledSignal>> {
        let PoolingKind::Average { kernel, scale } = &self.kind else {
            return Ok(None);
        };
        let phi = match kernel {
            PoolingKernel::Box => box_kernel(grid, self.factor)?,
            PoolingKernel::Gauss => gauss_kernel(grid, self.factor),
            PoolingKernel::Custom(phi) => {
                grid.check_same(phi.grid(), "pooling kernel")?;
                phi.to_space()
            }
        };
        Ok(Some(phi.scaled(*scale)))
    }

    /// Precomputes the kernel spectrum for repeated use on one grid.
    pub fn prepare(&self, grid: &Grid) -> Result<PreparedPooling> {
        let out_grid = grid.downsampled(self.factor)?;
        let kernel_hat = self
            .kernel_on(grid)?
            .map(|k| k.to_frequency().into_samples());
        Ok(PreparedPooling {
            grid: *grid,
            out_grid,
            factor: self.factor,
            kernel_hat,
        })
    }

    pub fn apply(&self, f: &SampledSignal) -> Result<SampledSignal> {
        let prepared = self.prepare(f.grid())?;
        Ok(prepared.apply(f.to_space().into_samples()))
    }

    pub fn token(&self) -> String {
        match &self.kind {
            PoolingKind::Subsample => format!("subsample:{}", self.factor),
            PoolingKind::Average { kernel, .. } => {
                let k = match kernel {
                    PoolingKernel::Box => "box",
                    PoolingKernel::Gauss => "gauss",
                    PoolingKernel::Custom(_) => "custom",
                };
                format!("average:{k}:{}", self.factor)
            }
        }
    }
}

fn check_factor(factor: usize) -> Result<()> {
    if factor == 0 {
        return Err(Error::InvalidArgument("pooling factor must be at least 1".into()));
    }
    Ok(())
}

fn box_kernel(grid: &Grid, s: usize) -> Result<SampledSignal> {
    if s > grid.n {
        return Err(Error::Divisibility { factor: s, n: grid.n });
    }
    let value = 1.0 / ((s as f64).powi(grid.dim as i32) * grid.cell());
    let data = (0..grid.len())
        .map(|i| {
            let idx = grid.unflatten(i);
            let inside = idx[..grid.dim].iter().all(|&k| k < s);
            Complex64::new(if inside { value } else { 0.0 }, 0.0)
        })
        .collect();
    Ok(SampledSignal::from_parts(*grid, Domain::Space, data))
}

fn gauss_kernel(grid: &Grid, s: usize) -> SampledSignal {
    let sigma = s as f64 * grid.spacing / 2.0;
    let raw: Vec<f64> = (0..grid.len())
        .map(|i| {
            let idx = grid.unflatten(i);
            let r2: f64 = idx[..grid.dim]
                .iter()
                .map(|&k| (grid.signed_index(k) as f64 * grid.spacing).powi(2))
                .sum();
            (-r2 / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let mass = grid.cell() * raw.iter().sum::<f64>();
    let data = raw.into_iter().map(|v| Complex64::new(v / mass, 0.0)).collect();
    SampledSignal::from_parts(*grid, Domain::Space, data)
}

/// A pooling operator bound to an input grid.
#[derive(Clone, Debug)]
pub struct PreparedPooling {
    grid: Grid,
    out_grid: Grid,
    factor: usize,
    kernel_hat: Option<Vec<Complex64>>,
}

impl PreparedPooling {
    pub fn output_grid(&self) -> &Grid {
        &self.out_grid
    }

    /// Pools space-domain samples on the prepared grid.
    pub fn apply(&self, mut data: Vec<Complex64>) -> SampledSignal {
        if let Some(k) = &self.kernel_hat {
            fft::forward(&mut data, &self.grid);
            data.iter_mut().zip(k).for_each(|(v, w)| *v *= w);
            fft::inverse(&mut data, &self.grid);
        }
        downsample_samples(&data, &self.grid, &self.out_grid, self.factor)
    }
}

impl fmt::Display for PoolingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

impl FromStr for PoolingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let factor = |t: &str| -> Result<usize> {
            t.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad pooling factor {t:?} in {s:?}")))
        };
        match parts.as_slice() {
            ["subsample", f] => PoolingSpec::subsample(factor(f)?),
            ["average", "box", f] => PoolingSpec::average(PoolingKernel::Box, factor(f)?),
            ["average", "gauss", f] => PoolingSpec::average(PoolingKernel::Gauss, factor(f)?),
            _ => Err(Error::Config(format!("unknown pooling token {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{random_bandlimited, BandlimitSpec};

    fn rnd(grid: Grid, radius: f64, seed: u64) -> SampledSignal {
        random_bandlimited(grid, &BandlimitSpec { radius, seed }).unwrap()
    }

    #[test]
    fn tokens() {
        for t in ["subsample:1", "subsample:4", "average:box:2", "average:gauss:8"] {
            assert_eq!(t.parse::<PoolingSpec>().unwrap().token(), t);
        }
        for bad in ["subsample", "average:box", "average:tri:2", "subsample:0", "subsample:x"] {
            assert!(bad.parse::<PoolingSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn subsample_identity_and_zero() {
        let g = Grid::new(2, 16, 0.5).unwrap();
        let f = rnd(g, 0.5, 1);
        let p = PoolingSpec::subsample(1).unwrap();
        assert!(p.apply(&f).unwrap().max_abs_diff(&f).unwrap() < 1e-15);
        for spec in ["subsample:2", "average:box:2", "average:gauss:4"] {
            let p: PoolingSpec = spec.parse().unwrap();
            let z = p.apply(&SampledSignal::zeros(g)).unwrap();
            assert!(z.samples().iter().all(|v| v.norm() == 0.0));
        }
    }

    #[test]
    fn delta_kernel_equals_subsampling() {
        let g = Grid::new(1, 64, 0.25).unwrap();
        let f = rnd(g, 1.0, 3);
        let delta = SampledSignal::impulse(g, 0).unwrap();
        for s in [1, 2, 4, 8] {
            let avg = PoolingSpec::average(PoolingKernel::Custom(delta.clone()), s).unwrap();
            let sub = PoolingSpec::subsample(s).unwrap();
            let a = avg.apply(&f).unwrap();
            let b = sub.apply(&f).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
            assert!((avg.lipschitz() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn subsampling_bandlimited_is_unitary() {
        let g = Grid::new(1, 512, 1.0).unwrap();
        let f = rnd(g, 0.2, 8);
        let h = PoolingSpec::subsample(2).unwrap().apply(&f).unwrap();
        let oracle: f64 = h.samples().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!((oracle - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lipschitz_constants() {
        let g = Grid::new(2, 16, 0.5).unwrap();
        assert_eq!(PoolingSpec::subsample(2).unwrap().lipschitz(), 1.0);
        let boxp = PoolingSpec::average(PoolingKernel::Box, 2).unwrap();
        assert_eq!(boxp.lipschitz(), 1.0);
        // the sampled kernel's own L1 norm agrees
        let k = boxp.kernel_on(&g).unwrap().unwrap();
        let l1 = g.cell() * k.samples().iter().map(|v| v.norm()).sum::<f64>();
        assert!((l1 - 1.0).abs() < 1e-12);
        let gk = PoolingSpec::average(PoolingKernel::Gauss, 2).unwrap().kernel_on(&g).unwrap().unwrap();
        let l1 = g.cell() * gk.samples().iter().map(|v| v.norm()).sum::<f64>();
        assert!((l1 - 1.0).abs() < 1e-12);
        assert_eq!(boxp.clone().scaled(3.0).unwrap().lipschitz(), 3.0);
        let custom = PoolingSpec::average(PoolingKernel::Custom(k.scaled(3.0)), 2).unwrap();
        assert!((custom.lipschitz() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pooling_is_lipschitz_on_random_pairs() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        for spec in ["average:box:2", "average:gauss:2", "average:box:4"] {
            let p: PoolingSpec = spec.parse().unwrap();
            for seed in 0..5 {
                let f = rnd(g, 0.45, seed);
                let h = rnd(g, 0.45, seed + 50);
                // dilation by S is unitary only on band-limited inputs, so
                // compare before the final sub-sampling step
                let k = p.kernel_on(&g).unwrap().unwrap();
                let d = f.circular_convolve(&k).unwrap().distance(&h.circular_convolve(&k).unwrap()).unwrap();
                assert!(d <= p.lipschitz() * f.distance(&h).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn layer_translation_covariance() {
        let g = Grid::new(2, 32, 0.5).unwrap();
        let f = rnd(g, 0.9, 4);
        for spec in ["subsample:2", "average:box:2", "average:gauss:4"] {
            let p: PoolingSpec = spec.parse().unwrap();
            let s = p.factor as f64;
            for t_int in [1.0, 3.0] {
                let lhs = p.apply(&f.translate(&[s * t_int * 0.5, 0.0]).unwrap()).unwrap();
                let rhs = p.apply(&f).unwrap().translate(&[t_int * 0.5, 0.0]).unwrap();
                assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10, "{spec} t={t_int}");
            }
        }
    }

    #[test]
    fn divisibility_error() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let p = PoolingSpec::subsample(3).unwrap();
        assert!(matches!(p.apply(&SampledSignal::zeros(g)), Err(Error::Divisibility { .. })));
    }
}
