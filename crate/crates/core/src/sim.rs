//! Piecewise-constant mean series corrupted by stationary AR(p) noise.
//!
//! Randomness comes from ChaCha8, a counter-based generator. A replicate is
//! addressed by `(seed, stream)`: the key is derived from `seed` and the
//! 64-bit stream id selects an independent keystream, so replicate `r` of a
//! batch draws the same numbers whatever thread runs it.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::RealSeries;

/// Roots of the AR polynomial must satisfy `|1/z| < 1 - STATIONARITY_MARGIN`.
pub const STATIONARITY_MARGIN: f64 = 1e-8;

/// Default burn-in for AR(p >= 2) and non-Gaussian high-order starts.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Change-point fractions of the benchmark design, in 36ths of the length:
/// `1/6 ± 1/36, 3/6 ± 2/36, 5/6 ± 3/36`.
pub const DESIGN_FRACTIONS_36THS: [usize; 6] = [5, 7, 16, 20, 27, 33];

/// Generator for replicate `stream` of a run seeded with `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InnovationFamily<T> {
    Gaussian,
    /// Innovations `sigma * (location + scale * C)` with `C` standard Cauchy.
    Cauchy { location: T, scale: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArParams<T> {
    pub phi: Vec<T>,
    pub sigma: T,
    pub family: InnovationFamily<T>,
}

impl<T: Scalar> ArParams<T> {
    pub fn gaussian(phi: Vec<T>, sigma: T) -> Self {
        Self {
            phi,
            sigma,
            family: InnovationFamily::Gaussian,
        }
    }

    pub fn white_noise(sigma: T) -> Self {
        Self::gaussian(Vec::new(), sigma)
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    /// Largest modulus among the eigenvalues of the companion matrix, i.e.
    /// the inverse roots of `1 - sum phi_r z^r`.
    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.phi)
    }

    /// Fails with `NonStationary` unless the process is causal stationary.
    pub fn check_stationary(&self) -> Result<()> {
        let radius = self.spectral_radius();
        if radius.is_finite() && radius < 1.0 - STATIONARITY_MARGIN {
            Ok(())
        } else {
            Err(Error::NonStationary(radius))
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "innovation scale must be positive, got {}",
                self.sigma
            )));
        }
        if let InnovationFamily::Cauchy { location, scale } = self.family {
            if !(scale > T::zero()) || !location.is_finite() || !scale.is_finite() {
                return Err(Error::InvalidSpec("Cauchy scale must be positive".into()));
            }
        }
        Ok(())
    }
}

pub(crate) fn spectral_radius<T: Scalar>(phi: &[T]) -> f64 {
    let p = phi.len();
    if p == 0 {
        return 0.0;
    }
    let companion = DMatrix::<f64>::from_fn(p, p, |i, j| {
        if i == 0 {
            phi[j].as_f64()
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// One constant-mean run of the mean profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSegment<T> {
    pub len: usize,
    pub level: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec<T> {
    /// Post-sample length.
    pub n: usize,
    /// Leading pre-sample values; they carry the first segment's level.
    pub presample: usize,
    pub mean_profile: Vec<MeanSegment<T>>,
    pub ar: ArParams<T>,
    pub seed: u64,
    /// Replicate stream within `seed`.
    #[serde(default)]
    pub stream: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

impl<T: Scalar> SeriesSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        if self.mean_profile.iter().any(|s| s.len == 0) {
            return Err(Error::InvalidSpec("empty mean segment".into()));
        }
        if self.mean_profile.iter().any(|s| !s.level.is_finite()) {
            return Err(Error::InvalidSpec("non-finite mean level".into()));
        }
        let total: usize = self.mean_profile.iter().map(|s| s.len).sum();
        if total != self.n {
            return Err(Error::InvalidSpec(format!(
                "segment lengths sum to {total}, expected n = {}",
                self.n
            )));
        }
        if self.presample < self.ar.order() {
            return Err(Error::InvalidSpec(format!(
                "presample {} shorter than AR order {}",
                self.presample,
                self.ar.order()
            )));
        }
        if self.presample + self.n < 2 {
            return Err(Error::InvalidSpec("series needs at least 2 values".into()));
        }
        self.ar.validate()
    }

    /// True change-points: last post-sample index (1-based) of every
    /// segment but the final one.
    pub fn change_points(&self) -> Vec<usize> {
        let mut acc = 0;
        let mut out = Vec::with_capacity(self.mean_profile.len().saturating_sub(1));
        for seg in &self.mean_profile[..self.mean_profile.len().saturating_sub(1)] {
            acc += seg.len;
            out.push(acc);
        }
        out
    }

    /// Change-points as fractions of `n`.
    pub fn change_fractions(&self) -> Vec<T> {
        let n = T::from_count(self.n);
        self.change_points()
            .into_iter()
            .map(|t| T::from_count(t) / n)
            .collect()
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }
}

/// Segment boundaries `floor(n * f)` of the benchmark design.
pub fn design_breaks(n: usize) -> [usize; 6] {
    DESIGN_FRACTIONS_36THS.map(|num| n * num / 36)
}

fn design_profile<T: Scalar>(n: usize) -> Result<Vec<MeanSegment<T>>> {
    if n < 72 {
        return Err(Error::InvalidSpec(format!(
            "benchmark design needs n >= 72, got {n}"
        )));
    }
    let mut prev = 0;
    let mut profile = Vec::with_capacity(7);
    for (k, end) in design_breaks(n).into_iter().chain([n]).enumerate() {
        let level = if k % 2 == 0 { T::zero() } else { T::one() };
        profile.push(MeanSegment {
            len: end - prev,
            level,
        });
        prev = end;
    }
    Ok(profile)
}

/// The AR(1) benchmark: six changes, levels alternating 0/1, one pre-sample
/// value `y_0`.
pub fn design_ar1<T: Scalar>(n: usize, rho: T, sigma: T, seed: u64) -> Result<SeriesSpec<T>> {
    let ar = ArParams::gaussian(vec![rho], sigma);
    ar.check_stationary()?;
    let spec = SeriesSpec {
        n,
        presample: 1,
        mean_profile: design_profile(n)?,
        ar,
        seed,
        stream: 0,
        burn_in: DEFAULT_BURN_IN,
    };
    spec.validate()?;
    Ok(spec)
}

/// The AR(p) benchmark: same mean profile, 20 pre-sample values.
pub fn design_arp<T: Scalar>(n: usize, phi: Vec<T>, sigma: T, seed: u64) -> Result<SeriesSpec<T>> {
    let ar = ArParams::gaussian(phi, sigma);
    ar.check_stationary()?;
    let spec = SeriesSpec {
        n,
        presample: ar.order().max(20),
        mean_profile: design_profile(n)?,
        ar,
        seed,
        stream: 0,
        burn_in: DEFAULT_BURN_IN,
    };
    spec.validate()?;
    Ok(spec)
}

/// Draws the series described by `spec`; identical descriptions give identical
/// output.
pub fn simulate<T: Scalar>(spec: &SeriesSpec<T>) -> Result<RealSeries<T>> {
    spec.validate()?;
    spec.ar.check_stationary()?;
    let total = spec.presample + spec.n;
    let mut rng = rng_for(spec.seed, spec.stream);
    let ar = &spec.ar;
    let sigma = ar.sigma;
    let innovation = |rng: &mut ChaCha8Rng| -> T {
        match ar.family {
            InnovationFamily::Gaussian => sigma * T::sample_standard_normal(rng),
            InnovationFamily::Cauchy { location, scale } => {
                sigma * (location + scale * T::sample_standard_cauchy(rng))
            }
        }
    };

    let p = ar.order();
    let mut noise = Vec::with_capacity(total);
    match p {
        0 => {
            for _ in 0..total {
                noise.push(innovation(&mut rng));
            }
        }
        1 => {
            let rho = ar.phi[0];
            let first = match ar.family {
                InnovationFamily::Gaussian => {
                    let sd = sigma / (T::one() - rho * rho).sqrt();
                    sd * T::sample_standard_normal(&mut rng)
                }
                // eta_0 ~ sigma * Cauchy(x0 / (1 - rho), gamma / (1 - |rho|))
                InnovationFamily::Cauchy { location, scale } => {
                    let loc = location / (T::one() - rho);
                    let sc = scale / (T::one() - rho.abs());
                    sigma * (loc + sc * T::sample_standard_cauchy(&mut rng))
                }
            };
            noise.push(first);
            for i in 1..total {
                let v = rho * noise[i - 1] + innovation(&mut rng);
                noise.push(v);
            }
        }
        _ => {
            let mut state = vec![T::zero(); p];
            let step = |state: &mut Vec<T>, rng: &mut ChaCha8Rng| -> T {
                let mut v = innovation(rng);
                for (phi, past) in ar.phi.iter().zip(state.iter()) {
                    v = v + *phi * *past;
                }
                state.rotate_right(1);
                state[0] = v;
                v
            };
            for _ in 0..spec.burn_in {
                step(&mut state, &mut rng);
            }
            for _ in 0..total {
                noise.push(step(&mut state, &mut rng));
            }
        }
    }

    let first_level = spec.mean_profile[0].level;
    let levels = std::iter::repeat_n(first_level, spec.presample).chain(
        spec.mean_profile
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.level, s.len)),
    );
    let values = noise.into_iter().zip(levels).map(|(e, mu)| e + mu).collect();
    RealSeries::new(values, spec.presample)
}
