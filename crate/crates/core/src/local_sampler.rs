//! MCMC random walker with a von Mises–Fisher step direction.
//!
//! The walker sits on a free configuration and proposes a step of fixed
//! length ε along a direction drawn from vMF(μ, κ). Successful steps move
//! the walker and re-centre μ on the step just taken; failures leave it in
//! place and relax κ so the next proposal spreads wider.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use thiserror::Error;

use crate::env::Configuration;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("mean direction has zero length")]
    ZeroDirection,
    #[error("concentration must be finite and non-negative, got {0}")]
    BadKappa(f64),
    #[error("successful step has zero length")]
    ZeroStep,
}

/// vMF distribution on the unit sphere S^(d-1).
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionDistribution {
    mean: Vec<f64>,
    kappa: f64,
}

impl DirectionDistribution {
    /// `mean` is normalized; it must be non-zero.
    pub fn new(mean: Vec<f64>, kappa: f64) -> Result<Self, SamplerError> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(SamplerError::BadKappa(kappa));
        }
        let mean = normalized(mean).ok_or(SamplerError::ZeroDirection)?;
        Ok(DirectionDistribution { mean, kappa })
    }

    /// Uniformly random mean direction.
    pub fn random<R: Rng + ?Sized>(dim: usize, kappa: f64, rng: &mut R) -> Self {
        DirectionDistribution {
            mean: uniform_direction(dim, rng),
            kappa,
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(v)
}

fn uniform_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(v) = normalized(g) {
            return v;
        }
    }
}

/// Draw a unit vector from vMF(μ, κ) in any dimension d ≥ 2.
///
/// The component along μ comes from Wood's rejection sampler; the
/// remainder is a uniform direction in the tangent space of μ.
pub fn sample_vmf<R: Rng + ?Sized>(dist: &DirectionDistribution, rng: &mut R) -> Vec<f64> {
    let d = dist.dim();
    if dist.kappa == 0.0 {
        return uniform_direction(d, rng);
    }
    let w = sample_axial(dist.kappa, d, rng);
    let mu = &dist.mean;
    let tangent = loop {
        let mut g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let dot: f64 = g.iter().zip(mu).map(|(a, b)| a * b).sum();
        g.iter_mut().zip(mu).for_each(|(x, m)| *x -= dot * m);
        if let Some(v) = normalized(g) {
            break v;
        }
    };
    let s = (1.0 - w * w).max(0.0).sqrt();
    let x: Vec<f64> = mu.iter().zip(&tangent).map(|(m, t)| w * m + s * t).collect();
    normalized(x).expect("unit combination")
}

/// Wood (1994): sample w = μ·x for vMF in dimension `d`.
fn sample_axial<R: Rng + ?Sized>(kappa: f64, d: usize, rng: &mut R) -> f64 {
    let m1 = (d - 1) as f64;
    // b = (-2κ + sqrt(4κ² + (d-1)²)) / (d-1), written without cancellation
    let b = m1 / (2.0 * kappa + (4.0 * kappa * kappa + m1 * m1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(m1 / 2.0, m1 / 2.0).expect("positive shape");
    loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + m1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            return w;
        }
    }
}

/// Concentration schedule for a walker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerConfig {
    /// κ on creation, restart and after every success.
    pub base_kappa: f64,
    /// Factor applied to κ after each failure (in `(0, 1)`).
    pub failure_relax: f64,
}

impl Default for WalkerConfig {
    fn default() -> Self {
        WalkerConfig {
            base_kappa: 2.0,
            failure_relax: 0.8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalSampler {
    position: Configuration,
    proposal: DirectionDistribution,
    consecutive_failures: u32,
    config: WalkerConfig,
}

impl LocalSampler {
    pub fn new(position: Configuration, proposal: DirectionDistribution, config: WalkerConfig) -> Self {
        LocalSampler {
            position,
            proposal,
            consecutive_failures: 0,
            config,
        }
    }

    /// A walker at `position` with a uniformly random heading and base κ.
    pub fn spawn<R: Rng + ?Sized>(position: Configuration, config: WalkerConfig, rng: &mut R) -> Self {
        let proposal = DirectionDistribution::random(position.dim(), config.base_kappa, rng);
        Self::new(position, proposal, config)
    }

    pub fn position(&self) -> &Configuration {
        &self.position
    }

    pub fn proposal(&self) -> &DirectionDistribution {
        &self.proposal
    }

    pub fn consecutive_failures(&self) -> u32 {
        self.consecutive_failures
    }

    /// `position + ε · u` with `u ~ vMF(μ, κ)`. The state is not changed and
    /// out-of-bounds proposals are returned as-is.
    pub fn propose<R: Rng + ?Sized>(&self, epsilon: f64, rng: &mut R) -> Configuration {
        let u = sample_vmf(&self.proposal, rng);
        Configuration::new(
            self.position
                .coords()
                .iter()
                .zip(&u)
                .map(|(p, d)| p + epsilon * d)
                .collect(),
        )
    }

    pub fn report_success(&mut self, q_new: Configuration) -> Result<(), SamplerError> {
        let step: Vec<f64> = q_new
            .coords()
            .iter()
            .zip(self.position.coords())
            .map(|(a, b)| a - b)
            .collect();
        let mean = normalized(step).ok_or(SamplerError::ZeroStep)?;
        self.proposal = DirectionDistribution {
            mean,
            kappa: self.config.base_kappa,
        };
        self.position = q_new;
        self.consecutive_failures = 0;
        Ok(())
    }

    pub fn report_failure(&mut self) {
        self.consecutive_failures += 1;
        self.proposal.kappa = (self.proposal.kappa * self.config.failure_relax).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Environment;
    use crate::rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use statrs::function::gamma::ln_gamma;

    /// I_ν(κ) by its power series, in log space.
    fn ln_bessel_i(nu: f64, kappa: f64) -> f64 {
        let half = kappa / 2.0;
        let terms: Vec<f64> = (0..2000)
            .map(|m| {
                let m = m as f64;
                (2.0 * m + nu) * half.ln() - ln_gamma(m + 1.0) - ln_gamma(m + nu + 1.0)
            })
            .collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    }

    /// Expected mean resultant length A_d(κ) = I_{d/2}(κ) / I_{d/2-1}(κ).
    fn bessel_ratio(d: usize, kappa: f64) -> f64 {
        let nu = d as f64 / 2.0;
        (ln_bessel_i(nu, kappa) - ln_bessel_i(nu - 1.0, kappa)).exp()
    }

    fn mean_resultant(d: usize, kappa: f64, n: usize, seed: u64) -> (f64, Vec<f64>) {
        let mut mean = vec![0.0; d];
        mean[0] = 1.0;
        let dist = DirectionDistribution::new(mean, kappa).unwrap();
        let mut r = rng::stream(seed, 0);
        let mut acc = vec![0.0; d];
        for _ in 0..n {
            let x = sample_vmf(&dist, &mut r);
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
            acc.iter_mut().zip(&x).for_each(|(a, v)| *a += v);
        }
        acc.iter_mut().for_each(|a| *a /= n as f64);
        (acc.iter().map(|a| a * a).sum::<f64>().sqrt(), acc)
    }

    #[test]
    fn oracle_sanity() {
        // A_3(κ) = coth κ − 1/κ
        for k in [1.0f64, 10.0, 50.0] {
            let closed = 1.0 / k.tanh() - 1.0 / k;
            assert!((bessel_ratio(3, k) - closed).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_when_kappa_zero() {
        let (r, _) = mean_resultant(3, 0.0, 100_000, 1);
        assert!(r < 0.02, "{r}");
    }

    #[test]
    fn concentrated_mean_length_matches_bessel_ratio() {
        let (r, acc) = mean_resultant(2, 50.0, 100_000, 2);
        let expected = bessel_ratio(2, 50.0);
        assert!((r - expected).abs() < 0.02, "{r} vs {expected}");
        assert!(acc[0] > 0.0);
    }

    #[test]
    fn angular_histogram_matches_density() {
        let kappa = 5.0;
        let dist = DirectionDistribution::new(vec![1.0, 0.0], kappa).unwrap();
        let mut r = rng::stream(3, 0);
        let bins = 36;
        let n = 10_000;
        let mut counts = vec![0usize; bins];
        let width = 2.0 * std::f64::consts::PI / bins as f64;
        for _ in 0..n {
            let x = sample_vmf(&dist, &mut r);
            let theta = x[1].atan2(x[0]) + std::f64::consts::PI;
            counts[((theta / width) as usize).min(bins - 1)] += 1;
        }
        // density ∝ exp(κ cos θ), integrated per bin by Simpson's rule
        let simpson = |a: f64, b: f64| {
            let f = |t: f64| (kappa * t.cos()).exp();
            let m = 64;
            let h = (b - a) / m as f64;
            (0..=m)
                .map(|i| {
                    let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    w * f(a + i as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0
        };
        let mass: Vec<f64> = (0..bins)
            .map(|i| {
                let a = -std::f64::consts::PI + i as f64 * width;
                simpson(a, a + width)
            })
            .collect();
        let total: f64 = mass.iter().sum();
        // pool sparse tail bins so every expected count is at least 5
        let mut pooled: Vec<(f64, f64)> = Vec::new();
        let mut acc = (0.0, 0.0);
        for i in 0..bins {
            acc.0 += counts[i] as f64;
            acc.1 += mass[i] / total * n as f64;
            if acc.1 >= 5.0 {
                pooled.push(acc);
                acc = (0.0, 0.0);
            }
        }
        if acc.1 > 0.0 {
            let last = pooled.last_mut().unwrap();
            last.0 += acc.0;
            last.1 += acc.1;
        }
        let stat: f64 = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
        let crit = ChiSquared::new((pooled.len() - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < crit, "chi2 {stat} >= {crit}");
    }

    #[test]
    fn step_length_is_exact_and_deterministic() {
        let cfg = WalkerConfig::default();
        let mut r = rng::stream(4, 0);
        let s = LocalSampler::spawn(Configuration::from([5.0, 5.0, 5.0]), cfg, &mut r);
        let a: Vec<_> = (0..50).scan(rng::stream(9, 0), |r, _| Some(s.propose(0.7, r))).collect();
        let b: Vec<_> = (0..50).scan(rng::stream(9, 0), |r, _| Some(s.propose(0.7, r))).collect();
        assert_eq!(a, b);
        for p in a {
            assert!((p.distance(s.position()) - 0.7).abs() < 1e-9);
        }
    }

    #[test]
    fn huge_kappa_follows_mean() {
        // the angular offset is about N(0, 1/κ), so the typical miss is 1e-3 · ε
        let dist = DirectionDistribution::new(vec![0.0, 1.0], 1e6).unwrap();
        let s = LocalSampler::new(Configuration::from([1.0, 1.0]), dist, WalkerConfig::default());
        let mut r = rng::stream(5, 0);
        let eps = 2.0;
        let target = Configuration::from([1.0, 3.0]);
        let misses: Vec<f64> = (0..1000).map(|_| s.propose(eps, &mut r).distance(&target)).collect();
        let mean = misses.iter().sum::<f64>() / misses.len() as f64;
        assert!(mean < 1e-3 * eps, "mean miss {mean}");
        assert!(misses.iter().all(|&m| m < 5e-3 * eps));
    }

    #[test]
    fn success_and_failure_bookkeeping() {
        let cfg = WalkerConfig {
            base_kappa: 10.0,
            failure_relax: 0.8,
        };
        let mut s = LocalSampler::new(
            Configuration::from([0.0, 0.0]),
            DirectionDistribution::new(vec![0.0, 1.0], 10.0).unwrap(),
            cfg,
        );
        s.report_failure();
        assert_eq!(s.proposal().kappa(), 8.0);
        assert_eq!(s.position(), &Configuration::from([0.0, 0.0]));
        assert_eq!(s.consecutive_failures(), 1);
        s.report_success(Configuration::from([3.0, 0.0])).unwrap();
        assert_eq!(s.proposal().mean(), &[1.0, 0.0]);
        assert_eq!(s.proposal().kappa(), 10.0);
        assert_eq!(s.consecutive_failures(), 0);
        assert_eq!(s.report_success(Configuration::from([3.0, 0.0])), Err(SamplerError::ZeroStep));
        assert_eq!(DirectionDistribution::new(vec![0.0, 0.0], 1.0), Err(SamplerError::ZeroDirection));
    }

    /// Chain replay: a walker in a straight corridor keeps advancing and its
    /// mean tracks the direction of the previous step.
    #[test]
    fn chained_successes_track_heading() {
        let env = Environment::empty(&[40, 40]);
        let mut s = LocalSampler::new(
            Configuration::from([2.0, 20.0]),
            DirectionDistribution::new(vec![1.0, 0.0], 2.0).unwrap(),
            WalkerConfig::default(),
        );
        let mut r = rng::stream(6, 0);
        for _ in 0..3 {
            let before = s.position().clone();
            let q = s.propose(1.0, &mut r);
            assert!(env.path_free(before.coords(), q.coords(), 0.1));
            s.report_success(q.clone()).unwrap();
            let heading: Vec<f64> = q.coords().iter().zip(before.coords()).map(|(a, b)| a - b).collect();
            for (m, h) in s.proposal().mean().iter().zip(&heading) {
                assert!((m - h).abs() < 1e-9);
            }
        }
    }

    fn dead_end_escapes(relax: f64, budget: usize) -> usize {
        let (w, h) = (20usize, 5usize);
        let mut occ = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                let free = (x < 15 && (1..4).contains(&y)) || ((12..15).contains(&x) && y == 4);
                occ[y * w + x] = !free;
            }
        }
        let env = Environment::from_grid(vec![0.0, 0.0], vec![w, h], vec![1.0, 1.0], occ).unwrap();
        let cfg = WalkerConfig {
            base_kappa: 2.0,
            failure_relax: relax,
        };
        let mut escaped = 0;
        for trial in 0..1000 {
            let mut r = rng::stream(trial, 7);
            let mut s = LocalSampler::new(
                Configuration::from([14.2, 2.5]),
                DirectionDistribution::new(vec![1.0, 0.0], 2.0).unwrap(),
                cfg,
            );
            for _ in 0..budget {
                let q = s.propose(1.0, &mut r);
                if env.point_free(q.coords()) && env.path_free(s.position().coords(), q.coords(), 0.1) {
                    s.report_success(q).unwrap();
                    if s.position()[1] >= 4.0 {
                        escaped += 1;
                        break;
                    }
                } else {
                    s.report_failure();
                }
            }
        }
        escaped
    }

    /// 20×5 corridor: free band y ∈ [1, 4) for x < 15, dead end at x = 15,
    /// side opening in the top wall at x ∈ [12, 15). A walker next to the
    /// dead end heading into it should usually find the opening, and
    /// relaxing κ on failure should help.
    #[test]
    fn walker_escapes_dead_end() {
        let relaxed = dead_end_escapes(0.8, 100);
        let rigid = dead_end_escapes(1.0, 100);
        assert!(relaxed >= 800, "escaped {relaxed}/1000");
        assert!(relaxed > rigid, "relaxed {relaxed} vs rigid {rigid}");
    }
}
