//! Pointwise Lipschitz non-linearities, each with its proven constant.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::signal::{Domain, Grid, SampledSignal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Nonlinearity {
    /// `|f(x)|`
    Modulus,
    /// `max{0, Re f} + i·max{0, Im f}`
    Relu,
    /// `tanh(Re f) + i·tanh(Im f)`
    Tanh,
    /// `sig(Re f) + i·sig(Im f)` with `sig(x) = 1/(1+e^{−x}) − 1/2`
    Sigmoid,
}

impl Nonlinearity {
    pub const ALL: [Nonlinearity; 4] = [
        Nonlinearity::Modulus,
        Nonlinearity::Relu,
        Nonlinearity::Tanh,
        Nonlinearity::Sigmoid,
    ];

    pub fn lipschitz(&self) -> f64 {
        match self {
            Nonlinearity::Modulus => 1.0,
            Nonlinearity::Relu | Nonlinearity::Tanh => 2.0,
            Nonlinearity::Sigmoid => 0.5,
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            Nonlinearity::Modulus => "modulus",
            Nonlinearity::Relu => "relu",
            Nonlinearity::Tanh => "tanh",
            Nonlinearity::Sigmoid => "sigmoid",
        }
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Nonlinearity::Modulus => Complex64::new(z.norm(), 0.0),
            Nonlinearity::Relu => Complex64::new(z.re.max(0.0), z.im.max(0.0)),
            Nonlinearity::Tanh => Complex64::new(z.re.tanh(), z.im.tanh()),
            Nonlinearity::Sigmoid => Complex64::new(sig(z.re), sig(z.im)),
        }
    }

    pub fn apply_in_place(&self, samples: &mut [Complex64]) {
        samples.iter_mut().for_each(|v| *v = self.eval(*v));
    }

    /// Applies the map sample by sample in the space domain.
    pub fn apply(&self, f: &SampledSignal) -> SampledSignal {
        let mut data = f.to_space().into_samples();
        self.apply_in_place(&mut data);
        SampledSignal::from_parts(*f.grid(), Domain::Space, data)
    }
}

fn sig(x: f64) -> f64 {
    // 1/(1+e^{-x}) - 1/2 = tanh(x/2)/2, which is exact at 0 and stable for large |x|
    0.5 * (0.5 * x).tanh()
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "modulus" => Ok(Nonlinearity::Modulus),
            "relu" => Ok(Nonlinearity::Relu),
            "tanh" => Ok(Nonlinearity::Tanh),
            "sigmoid" => Ok(Nonlinearity::Sigmoid),
            other => Err(Error::Config(format!("unknown non-linearity {other:?}"))),
        }
    }
}

impl TryFrom<String> for Nonlinearity {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Nonlinearity> for String {
    fn from(m: Nonlinearity) -> String {
        m.token().to_string()
    }
}

/// Which random pairs [`empirical_lipschitz_with`] draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    Complex,
    Real,
}

/// Largest observed `‖Mf − Mh‖₂ / ‖f − h‖₂` over random complex pairs.
pub fn empirical_lipschitz(m: Nonlinearity, trials: usize, seed: u64) -> Result<f64> {
    empirical_lipschitz_with(m, trials, seed, PairKind::Complex)
}

/// Pairs are `f = c + noise` and `h = f + s·noise'` with a random offset `c`
/// and a perturbation scale `s` spread over four decades, so both the linear
/// and the saturating regimes of each map are exercised.
pub fn empirical_lipschitz_with(
    m: Nonlinearity,
    trials: usize,
    seed: u64,
    kind: PairKind,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is needed".into()));
    }
    let grid = Grid::new(1, 64, 1.0)?;
    let ratios = parallel::map_indexed(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ t as u64);
        let real = kind == PairKind::Real;
        let draw = |rng: &mut ChaCha8Rng| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = if real { 0.0 } else { StandardNormal.sample(rng) };
            Complex64::new(re, im)
        };
        let offset = Complex64::new(
            rng.random_range(-3.0..3.0),
            if real { 0.0 } else { rng.random_range(-3.0..3.0) },
        );
        let scale = 10f64.powf(rng.random_range(-3.0..1.0));
        let f: Vec<Complex64> = (0..grid.len()).map(|_| offset + draw(&mut rng)).collect();
        let h: Vec<Complex64> = f.iter().map(|v| v + draw(&mut rng) * scale).collect();
        let f = SampledSignal::from_parts(grid, Domain::Space, f);
        let h = SampledSignal::from_parts(grid, Domain::Space, h);
        let num = m.apply(&f).distance(&m.apply(&h)).unwrap_or(f64::NAN);
        let den = f.distance(&h).unwrap_or(f64::NAN);
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    });
    Ok(ratios.into_iter().fold(0.0, f64::max))
}
