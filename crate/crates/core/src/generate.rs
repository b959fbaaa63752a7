//! Negatively associated uniform sequences, parametric marginals and
//! censored dataset assembly.
//!
//! Three NA constructions are provided:
//!
//! - `gaussian-block`: independent blocks of `m` equicorrelated standard
//!   normals with correlation `rho <= 0`, pushed through the normal CDF.
//!   Nonpositively correlated Gaussian vectors are NA and coordinatewise
//!   increasing maps preserve NA.
//! - `permutation`: a uniformly random ordering of the midpoints
//!   `(i - 0.5) / n`, i.e. sampling without replacement from a finite
//!   population.
//! - `iid`: independent uniforms.
//!
//! Every generator is a pure function of `(scheme, n, seed)`.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sample::CensoredSample;

/// Stream index used for the lifetime sequence when splitting a seed.
pub const LIFETIME_STREAM: u64 = 1;
/// Stream index used for the censoring sequence when splitting a seed.
pub const CENSORING_STREAM: u64 = 2;

/// SplitMix64 finalizer applied to `seed ^ (stream * golden_gamma)`.
///
/// This is the only seed-derivation function in the crate: master seeds are
/// split into lifetime/censoring streams with [`LIFETIME_STREAM`] and
/// [`CENSORING_STREAM`], and the harness derives per-replication seeds by
/// chaining it over the sample size and replication index.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = (seed ^ stream.wrapping_mul(GAMMA)).wrapping_add(GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Dependence structure of one NA sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SchemeKind {
    GaussianBlock { block_size: usize, rho: f64 },
    Permutation,
    Iid,
}

impl Default for SchemeKind {
    /// Blocks of four with half the feasibility bound `-1/3`.
    fn default() -> Self {
        SchemeKind::GaussianBlock {
            block_size: 4,
            rho: -1.0 / 6.0,
        }
    }
}

impl SchemeKind {
    pub fn validate(&self) -> Result<()> {
        if let SchemeKind::GaussianBlock { block_size, rho } = *self {
            if block_size < 2 {
                return invalid(format!("gaussian-block needs block_size >= 2, got {block_size}"));
            }
            let bound = -1.0 / (block_size as f64 - 1.0);
            if !rho.is_finite() || rho > 0.0 || rho < bound {
                return invalid(format!(
                    "gaussian-block rho must lie in [{bound}, 0] for block_size {block_size}, got {rho}"
                ));
            }
        }
        Ok(())
    }

    /// Number of consecutive entries sharing a dependence block; pairs for
    /// the NA diagnostic are taken from the first two entries of each block.
    pub fn pair_stride(&self) -> usize {
        match *self {
            SchemeKind::GaussianBlock { block_size, .. } => block_size,
            _ => 2,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeKind::GaussianBlock { block_size, rho } => write!(f, "gaussian-block:{block_size}:{rho}"),
            SchemeKind::Permutation => f.write_str("permutation"),
            SchemeKind::Iid => f.write_str("iid"),
        }
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    /// Parses `iid`, `permutation` or `gaussian-block:<m>:<rho>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let kind = match parts.as_slice() {
            ["iid"] => SchemeKind::Iid,
            ["permutation"] => SchemeKind::Permutation,
            ["gaussian-block", m, rho] => SchemeKind::GaussianBlock {
                block_size: m
                    .parse()
                    .map_err(|_| Error::Validation(format!("bad block size {m:?}")))?,
                rho: parse_f64(rho)?,
            },
            _ => return invalid(format!("unknown scheme {s:?}")),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// A scheme together with the seed of its random stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaScheme {
    pub kind: SchemeKind,
    pub seed: u64,
}

impl NaScheme {
    pub fn new(kind: SchemeKind, seed: u64) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, seed })
    }
}

/// Continuous lifetime or censoring distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Marginal {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    Uniform { low: f64, high: f64 },
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Marginal::Weibull { shape, scale } => shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0,
            Marginal::Uniform { low, high } => low.is_finite() && high.is_finite() && 0.0 <= low && low < high,
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("invalid marginal parameters: {self}"))
        }
    }

    /// `(a, tau)`: left and right endpoints of the support.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Exponential { .. } | Marginal::Weibull { .. } => (0.0, f64::INFINITY),
            Marginal::Uniform { low, high } => (low, high),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Marginal::Exponential { rate } => -(-rate * t).exp_m1(),
            Marginal::Weibull { shape, scale } => -(-(t / scale).powf(shape)).exp_m1(),
            Marginal::Uniform { low, high } => ((t - low) / (high - low)).clamp(0.0, 1.0),
        }
    }

    /// Survival function `1 - F(t)`.
    pub fn sf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match *self {
            Marginal::Exponential { rate } => (-rate * t).exp(),
            Marginal::Weibull { shape, scale } => (-(t / scale).powf(shape)).exp(),
            Marginal::Uniform { low, high } => ((high - t) / (high - low)).clamp(0.0, 1.0),
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Marginal::Exponential { rate } => rate * (-rate * t).exp(),
            Marginal::Weibull { shape, scale } => {
                let z = t / scale;
                shape / scale * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
            }
            Marginal::Uniform { low, high } => {
                if (low..=high).contains(&t) {
                    1.0 / (high - low)
                } else {
                    0.0
                }
            }
        }
    }

    /// Inverse CDF on `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Marginal::Exponential { rate } => -(-u).ln_1p() / rate,
            Marginal::Weibull { shape, scale } => scale * (-(-u).ln_1p()).powf(1.0 / shape),
            Marginal::Uniform { low, high } => low + u * (high - low),
        }
    }

    /// Hazard rate `f / (1 - F)`.
    pub fn hazard(&self, t: f64) -> f64 {
        match *self {
            Marginal::Exponential { rate } => {
                if t < 0.0 {
                    0.0
                } else {
                    rate
                }
            }
            Marginal::Weibull { shape, scale } => {
                if t < 0.0 {
                    0.0
                } else {
                    shape / scale * (t / scale).powf(shape - 1.0)
                }
            }
            Marginal::Uniform { low, high } => {
                if (low..high).contains(&t) {
                    1.0 / (high - t)
                } else {
                    0.0
                }
            }
        }
    }

    /// Cumulative hazard `-ln(1 - F(t))`.
    pub fn cum_hazard(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Marginal::Exponential { rate } => rate * t,
            Marginal::Weibull { shape, scale } => (t / scale).powf(shape),
            Marginal::Uniform { .. } => -self.sf(t).ln(),
        }
    }
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::Exponential { rate } => write!(f, "exponential:{rate}"),
            Marginal::Weibull { shape, scale } => write!(f, "weibull:{shape}:{scale}"),
            Marginal::Uniform { low, high } => write!(f, "uniform:{low}:{high}"),
        }
    }
}

impl FromStr for Marginal {
    type Err = Error;

    /// Parses `exponential:<rate>`, `weibull:<shape>:<scale>` or
    /// `uniform:<low>:<high>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let m = match parts.as_slice() {
            ["exponential" | "exp", rate] => Marginal::Exponential { rate: parse_f64(rate)? },
            ["weibull", shape, scale] => Marginal::Weibull {
                shape: parse_f64(shape)?,
                scale: parse_f64(scale)?,
            },
            ["uniform", low, high] => Marginal::Uniform {
                low: parse_f64(low)?,
                high: parse_f64(high)?,
            },
            _ => return invalid(format!("unknown marginal {s:?}")),
        };
        m.validate()?;
        Ok(m)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Validation(format!("expected a number, got {s:?}")))
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Draws `n` NA uniforms on `(0, 1)`.
pub fn gen_na_uniforms(scheme: &NaScheme, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    scheme.kind.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scheme.seed);
    let out = match scheme.kind {
        SchemeKind::Iid => (0..n).map(|_| rng.sample::<f64, _>(Open01)).collect(),
        SchemeKind::Permutation => {
            let mut v: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
            v.shuffle(&mut rng);
            v
        }
        SchemeKind::GaussianBlock { block_size, rho } => {
            // Sigma^{1/2} = sqrt(1-rho) (I - P) + sqrt(1+(m-1)rho) P with P the
            // projector onto the all-ones vector.
            let m = block_size;
            let spread = (1.0 - rho).sqrt();
            let common = (1.0 + (m as f64 - 1.0) * rho).max(0.0).sqrt();
            let mut w = vec![0.0f64; m];
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                for wi in w.iter_mut() {
                    *wi = rng.sample(StandardNormal);
                }
                let mean = w.iter().sum::<f64>() / m as f64;
                let take = m.min(n - out.len());
                out.extend(w[..take].iter().map(|&wi| {
                    let z = spread * (wi - mean) + common * mean;
                    normal_cdf(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
                }));
            }
            out
        }
    };
    Ok(out)
}

/// Maps uniforms through the marginal's quantile function. Being monotone,
/// the map preserves negative association.
pub fn transform_marginal(u: &[f64], marginal: &Marginal) -> Result<Vec<f64>> {
    marginal.validate()?;
    if let Some(bad) = u.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        return invalid(format!("uniforms must lie in the open interval (0, 1), got {bad}"));
    }
    Ok(u.iter().map(|&v| marginal.quantile(v)).collect())
}

/// Generates lifetimes and censoring times from two independent NA streams
/// and returns the observed censored sample.
pub fn gen_censored_dataset(
    lifetime_scheme: &NaScheme,
    lifetime: &Marginal,
    censoring_scheme: &NaScheme,
    censoring: &Marginal,
    n: usize,
) -> Result<CensoredSample> {
    let t = transform_marginal(&gen_na_uniforms(lifetime_scheme, n)?, lifetime)?;
    let y = transform_marginal(&gen_na_uniforms(censoring_scheme, n)?, censoring)?;
    CensoredSample::from_lifetimes(&t, &y)
}

/// Convenience wrapper deriving both stream seeds from one master seed.
pub fn gen_censored_dataset_seeded(
    lifetime_kind: SchemeKind,
    lifetime: &Marginal,
    censoring_kind: SchemeKind,
    censoring: &Marginal,
    n: usize,
    master_seed: u64,
) -> Result<CensoredSample> {
    let ts = NaScheme::new(lifetime_kind, mix_seed(master_seed, LIFETIME_STREAM))?;
    let ys = NaScheme::new(censoring_kind, mix_seed(master_seed, CENSORING_STREAM))?;
    gen_censored_dataset(&ts, lifetime, &ys, censoring, n)
}

/// Monte Carlo estimate of `cov(I(U_i > a), I(U_j > b))` over disjoint index
/// pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NaDiagnostic {
    pub estimate: f64,
    pub std_error: f64,
    pub pairs: usize,
    /// Set when the estimate exceeds zero by more than three standard errors.
    pub violation: bool,
}

/// Pools indicator pairs from one or more sequences. Pairs never straddle two
/// sequences.
#[derive(Debug, Clone, Default)]
pub struct PairCovariance {
    thresholds: (f64, f64),
    pairs: Vec<(bool, bool)>,
}

impl PairCovariance {
    pub fn new(thresholds: (f64, f64)) -> Self {
        Self {
            thresholds,
            pairs: Vec::new(),
        }
    }

    /// Adds the pairs `(u[k*stride], u[k*stride + 1])` of every complete
    /// stride-block of `u`.
    pub fn add_sequence(&mut self, u: &[f64], stride: usize) {
        let (a, b) = self.thresholds;
        self.pairs
            .extend(u.chunks_exact(stride.max(2)).map(|c| (c[0] > a, c[1] > b)));
    }

    pub fn finish(&self) -> Result<NaDiagnostic> {
        let n = self.pairs.len();
        if n < 30 {
            return invalid(format!("need at least 30 index pairs for a standard error, got {n}"));
        }
        let nf = n as f64;
        let ma = self.pairs.iter().filter(|p| p.0).count() as f64 / nf;
        let mb = self.pairs.iter().filter(|p| p.1).count() as f64 / nf;
        let products: Vec<f64> = self
            .pairs
            .iter()
            .map(|&(x, y)| (f64::from(u8::from(x)) - ma) * (f64::from(u8::from(y)) - mb))
            .collect();
        let estimate = products.iter().sum::<f64>() / nf;
        let var = products.iter().map(|p| (p - estimate).powi(2)).sum::<f64>() / (nf - 1.0);
        let std_error = (var / nf).sqrt();
        Ok(NaDiagnostic {
            estimate,
            std_error,
            pairs: n,
            violation: estimate > 3.0 * std_error,
        })
    }
}

/// Indicator-pair covariance for a single sequence generated by `kind`.
pub fn check_negative_association(u: &[f64], kind: &SchemeKind, thresholds: (f64, f64)) -> Result<NaDiagnostic> {
    let mut acc = PairCovariance::new(thresholds);
    acc.add_sequence(u, kind.pair_stride());
    acc.finish()
}

/// Pools the diagnostic over `replications` independent sequences of length
/// `n`, each seeded with `mix_seed(master_seed, r)`.
pub fn check_negative_association_replicated(
    kind: SchemeKind,
    n: usize,
    replications: usize,
    master_seed: u64,
    thresholds: (f64, f64),
) -> Result<NaDiagnostic> {
    let mut acc = PairCovariance::new(thresholds);
    for r in 0..replications {
        let u = gen_na_uniforms(&NaScheme::new(kind, mix_seed(master_seed, r as u64))?, n)?;
        acc.add_sequence(&u, kind.pair_stride());
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks_distance(mut v: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        v.iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = cdf(x);
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn iid_is_reproducible() {
        let s = NaScheme::new(SchemeKind::Iid, 99).unwrap();
        let a = gen_na_uniforms(&s, 3).unwrap();
        let b = gen_na_uniforms(&s, 3).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert!(a.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn permutation_of_midpoints() {
        let s = NaScheme::new(SchemeKind::Permutation, 5).unwrap();
        let mut u = gen_na_uniforms(&s, 4).unwrap();
        u.sort_by(f64::total_cmp);
        assert_eq!(u, vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn gaussian_block_uniform_correlation() {
        // Spearman correlation of a Gaussian copula: (6/pi) asin(rho/2).
        let rho = -0.5f64;
        let expected = 6.0 / std::f64::consts::PI * (rho / 2.0).asin();
        assert!((expected + 0.4826).abs() < 1e-3);
        let s = NaScheme::new(SchemeKind::GaussianBlock { block_size: 2, rho }, 11).unwrap();
        let u = gen_na_uniforms(&s, 200_000).unwrap();
        let (a, b): (Vec<f64>, Vec<f64>) = u.chunks_exact(2).map(|c| (c[0], c[1])).unzip();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        let corr = cov / (va * vb).sqrt();
        assert!((corr - expected).abs() < 0.02, "corr {corr}");
    }

    #[test]
    fn marginals_are_uniform() {
        for kind in [
            SchemeKind::Iid,
            SchemeKind::Permutation,
            SchemeKind::default(),
            SchemeKind::GaussianBlock {
                block_size: 2,
                rho: -1.0,
            },
        ] {
            let u = gen_na_uniforms(&NaScheme::new(kind, 3).unwrap(), 100_000).unwrap();
            let d = ks_distance(u, |x| x.clamp(0.0, 1.0));
            assert!(d < 0.01, "{kind}: KS {d}");
        }
    }

    #[test]
    fn scheme_validation() {
        assert!(SchemeKind::GaussianBlock {
            block_size: 4,
            rho: -0.34
        }
        .validate()
        .is_err());
        assert!(SchemeKind::GaussianBlock {
            block_size: 4,
            rho: 0.1
        }
        .validate()
        .is_err());
        assert!(SchemeKind::GaussianBlock {
            block_size: 1,
            rho: 0.0
        }
        .validate()
        .is_err());
        assert!(SchemeKind::GaussianBlock {
            block_size: 4,
            rho: -1.0 / 3.0
        }
        .validate()
        .is_ok());
        assert!(gen_na_uniforms(&NaScheme::new(SchemeKind::Iid, 0).unwrap(), 0).is_err());
        assert_eq!(
            "gaussian-block:4:-0.25".parse::<SchemeKind>().unwrap(),
            SchemeKind::GaussianBlock {
                block_size: 4,
                rho: -0.25
            }
        );
        assert!("gaussian-block:2:-1.5".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn quantile_examples() {
        let e = transform_marginal(&[0.5], &Marginal::Exponential { rate: 1.0 }).unwrap();
        assert!((e[0] - std::f64::consts::LN_2).abs() < 1e-15);
        let u = transform_marginal(&[0.25, 0.75], &Marginal::Uniform { low: 0.0, high: 4.0 }).unwrap();
        assert_eq!(u, vec![1.0, 3.0]);
        let w = transform_marginal(&[0.5], &Marginal::Weibull { shape: 2.0, scale: 1.0 }).unwrap();
        // 1 - exp(-x^2) = 1/2
        assert!((w[0] - std::f64::consts::LN_2.sqrt()).abs() < 1e-15);
        assert!((w[0] - 0.83255).abs() < 1e-5);
    }

    #[test]
    fn quantile_rejects_endpoints() {
        let m = Marginal::Exponential { rate: 1.0 };
        assert!(transform_marginal(&[0.0], &m).is_err());
        assert!(transform_marginal(&[1.0], &m).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for m in [
            Marginal::Exponential { rate: 2.5 },
            Marginal::Weibull { shape: 1.7, scale: 0.8 },
            Marginal::Uniform { low: 0.5, high: 3.0 },
        ] {
            for u in [1e-6, 0.1, 0.5, 0.9, 0.999] {
                assert!((m.cdf(m.quantile(u)) - u).abs() < 1e-12, "{m} at {u}");
            }
        }
    }

    #[test]
    fn single_observation_dataset() {
        let ts = NaScheme::new(SchemeKind::Iid, 1).unwrap();
        let ys = NaScheme::new(SchemeKind::Iid, 2).unwrap();
        let t_m = Marginal::Exponential { rate: 1.0 };
        let y_m = Marginal::Exponential { rate: 0.5 };
        let s = gen_censored_dataset(&ts, &t_m, &ys, &y_m, 1).unwrap();
        let t = transform_marginal(&gen_na_uniforms(&ts, 1).unwrap(), &t_m).unwrap()[0];
        let y = transform_marginal(&gen_na_uniforms(&ys, 1).unwrap(), &y_m).unwrap()[0];
        assert_eq!(s.x(), &[t.min(y)]);
        assert_eq!(s.delta(), &[t <= y]);
    }

    #[test]
    fn uncensored_fraction_competing_exponentials() {
        let s = gen_censored_dataset_seeded(
            SchemeKind::Iid,
            &Marginal::Exponential { rate: 1.0 },
            SchemeKind::Iid,
            &Marginal::Exponential { rate: 0.5 },
            100_000,
            2024,
        )
        .unwrap();
        let frac = s.uncensored_count() as f64 / s.len() as f64;
        assert!((frac - 2.0 / 3.0).abs() < 0.01, "{frac}");
    }

    #[test]
    fn master_seed_determinism() {
        let gen = || {
            gen_censored_dataset_seeded(
                SchemeKind::default(),
                &Marginal::Exponential { rate: 1.0 },
                SchemeKind::Permutation,
                &Marginal::Weibull { shape: 2.0, scale: 1.5 },
                500,
                77,
            )
            .unwrap()
        };
        let (a, b) = (gen(), gen());
        assert_eq!(a, b);
        assert_ne!(mix_seed(77, LIFETIME_STREAM), mix_seed(77, CENSORING_STREAM));
    }

    #[test]
    fn iid_pairs_are_uncorrelated() {
        let u = gen_na_uniforms(&NaScheme::new(SchemeKind::Iid, 8).unwrap(), 100_000).unwrap();
        let d = check_negative_association(&u, &SchemeKind::Iid, (0.3, 0.7)).unwrap();
        assert!(d.estimate.abs() <= 3.0 * d.std_error, "{d:?}");
        assert!(!d.violation);
    }

    #[test]
    fn gaussian_orthant_covariance() {
        // P(Z1 > 0, Z2 > 0; rho = -1/2) = 1/4 + asin(-1/2) / (2 pi) = 1/6
        let kind = SchemeKind::GaussianBlock {
            block_size: 2,
            rho: -0.5,
        };
        let u = gen_na_uniforms(&NaScheme::new(kind, 4).unwrap(), 200_000).unwrap();
        let d = check_negative_association(&u, &kind, (0.5, 0.5)).unwrap();
        assert!(d.estimate < -3.0 * d.std_error);
        assert!((d.estimate - (1.0 / 6.0 - 0.25)).abs() < 4.0 * d.std_error, "{d:?}");
    }

    #[test]
    fn too_few_pairs() {
        let u = vec![0.5; 40];
        assert!(check_negative_association(&u, &SchemeKind::Iid, (0.5, 0.5)).is_err());
    }
}
