//! Average-rate surrogates for the uplink MMSE receiver and the Monte Carlo
//! oracle they are validated against.
//!
//! For user `k` with interference-plus-noise matrix
//! `B_k = Σ_{k'≠k} (p_{k'}/p_k)·h_{k'}h_{k'}ᴴ + (σ²/p_k)·I`, the ergodic rate
//! is `E[log₂(1 + h_kᴴB_k⁻¹h_k)]`. Moving the expectation inside the log
//! gives the upper bound `log₂(1 + tr(E[B_k⁻¹]·Σ_k))`, and replacing
//! `E[B_k⁻¹]` by `E[B_k]⁻¹` gives the closed-form surrogate used by the
//! optimizer. Only the surrogate is deterministic; the other two are
//! sampled.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_channel, ChannelCovariance};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Transmit powers of all users and receiver noise power, watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub powers: Vec<f64>,
    pub noise: f64,
}

impl PowerConfig {
    pub fn new(powers: Vec<f64>, noise: f64) -> Result<Self> {
        if powers.is_empty() || powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidArgument(
                "transmit powers must be positive and finite".into(),
            ));
        }
        if !(noise.is_finite() && noise > 0.0) {
            return Err(Error::InvalidArgument(
                "noise power must be positive".into(),
            ));
        }
        Ok(Self { powers, noise })
    }

    pub fn uniform(users: usize, power: f64, noise: f64) -> Result<Self> {
        Self::new(vec![power; users], noise)
    }

    pub fn users(&self) -> usize {
        self.powers.len()
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

fn check_inputs(k: usize, covs: &[ChannelCovariance], pw: &PowerConfig) -> Result<usize> {
    if covs.len() != pw.users() {
        return Err(Error::DimensionMismatch {
            expected: pw.users(),
            found: covs.len(),
        });
    }
    if k >= covs.len() {
        return Err(Error::InvalidArgument(format!(
            "user {k} out of range for {} users",
            covs.len()
        )));
    }
    let dim = covs[0].dim();
    if let Some(bad) = covs.iter().find(|c| c.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }
    Ok(dim)
}

/// `E[B_k] = Σ_{k'≠k} (p_{k'}/p_k)·Σ_{k'} + (σ²/p_k)·I`.
pub fn expected_interference_cov(
    k: usize,
    covs: &[ChannelCovariance],
    pw: &PowerConfig,
) -> Result<DMatrix<Complex64>> {
    let dim = check_inputs(k, covs, pw)?;
    Ok(interference(k, dim, pw, |b, j, w| {
        *b += covs[j].matrix() * w
    }))
}

/// `tr(B⁻¹·Ã·D·Ãᴴ)` through the factor of `Σ`, solving instead of inverting.
fn trace_inv_times(chol: &Cholesky<Complex64, Dyn>, cov: &ChannelCovariance) -> f64 {
    let x = chol.solve(cov.factor());
    cov.path_powers()
        .iter()
        .enumerate()
        .map(|(l, p)| p * cov.factor().column(l).dotc(&x.column(l)).re)
        .sum()
}

/// `log₂(1 + tr(E[B_k]⁻¹·Σ_k))`, bits/s/Hz.
pub fn rate_lower_bound(k: usize, covs: &[ChannelCovariance], pw: &PowerConfig) -> Result<f64> {
    let b = expected_interference_cov(k, covs, pw)?;
    let chol = Cholesky::new(b).ok_or(Error::NotPositiveDefinite)?;
    let t = trace_inv_times(&chol, &covs[k]).max(0.0);
    Ok((1.0 + t).log2())
}

pub fn rate_lower_bounds(covs: &[ChannelCovariance], pw: &PowerConfig) -> Result<Vec<f64>> {
    (0..covs.len())
        .map(|k| rate_lower_bound(k, covs, pw))
        .collect()
}

/// `Σ_k ln r_k`, or `−∞` as soon as one rate is zero.
pub fn sum_log(rates: &[f64]) -> f64 {
    if rates.iter().any(|r| *r <= 0.0) {
        return f64::NEG_INFINITY;
    }
    rates.iter().map(|r| r.ln()).sum()
}

/// Sum of natural logs of the per-user surrogate rates. A configuration in
/// which some user gets zero rate yields `−∞`.
pub fn sum_log_rate(covs: &[ChannelCovariance], pw: &PowerConfig) -> Result<f64> {
    Ok(sum_log(&rate_lower_bounds(covs, pw)?))
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl McEstimate {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// Sampled quantities for one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserMc {
    pub average_rate: McEstimate,
    /// Upper bound with the sampled-mean correction, never below the
    /// surrogate.
    pub upper_bound: f64,
    /// Upper bound from the plain sample mean of `B⁻¹`.
    pub upper_bound_plain: f64,
}

/// Monte Carlo evaluator over joint channel draws of all users.
///
/// Realization `w` uses its own ChaCha stream derived from one base seed
/// taken from the caller's generator, so the result does not depend on the
/// execution mode.
///
/// `E[B⁻¹]` is estimated as `Ê[B⁻¹] − Ê[B]⁻¹ + E[B]⁻¹`, with `Ê` the sample
/// mean. The inverse is operator convex, so `Ê[B⁻¹] ⪰ Ê[B]⁻¹` for every
/// sample and the estimate never falls below `E[B]⁻¹`; the plain estimate
/// `Ê[B⁻¹]` can, whenever the Jensen gap is smaller than the sampling noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub samples: usize,
    pub exec: Execution,
}

struct Draw {
    rate: f64,
    trace: f64,
}

struct Realization {
    channels: Vec<DVector<Complex64>>,
    draws: Vec<Draw>,
}

/// Noise plus weighted interference seen by user `k`, with `cov(j)` standing
/// in for the second moment of user `j`'s channel.
fn interference<F>(k: usize, dim: usize, pw: &PowerConfig, mut add: F) -> DMatrix<Complex64>
where
    F: FnMut(&mut DMatrix<Complex64>, usize, Complex64),
{
    let pk = pw.powers[k];
    let mut b = DMatrix::from_diagonal_element(dim, dim, Complex64::from(pw.noise / pk));
    for j in 0..pw.users() {
        if j != k {
            add(&mut b, j, Complex64::from(pw.powers[j] / pk));
        }
    }
    b
}

impl MonteCarlo {
    pub fn new(samples: usize) -> Self {
        Self {
            samples,
            exec: Execution::default(),
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// One entry per realization, each holding one draw per requested user.
    fn draws<R: Rng + ?Sized>(
        &self,
        users: &[usize],
        covs: &[ChannelCovariance],
        pw: &PowerConfig,
        rng: &mut R,
    ) -> Result<Vec<Realization>> {
        if self.samples < 2 {
            return Err(Error::InvalidArgument(
                "Monte Carlo needs at least two samples".into(),
            ));
        }
        for &k in users {
            check_inputs(k, covs, pw)?;
        }
        let dim = covs[0].dim();
        let base: u64 = rng.random();
        let rows = self.exec.map(self.samples, |w| {
            let mut stream = ChaCha8Rng::seed_from_u64(base);
            stream.set_stream(w as u64);
            let channels: Vec<DVector<Complex64>> = covs
                .iter()
                .map(|c| sample_channel(c, &mut stream))
                .collect();
            let draws = users
                .iter()
                .map(|&k| {
                    let b = interference(k, dim, pw, |b, j, w| {
                        b.ger(
                            w,
                            &channels[j],
                            &channels[j].conjugate(),
                            Complex64::from(1.0),
                        )
                    });
                    let chol = Cholesky::new(b).ok_or(Error::NotPositiveDefinite)?;
                    let h = &channels[k];
                    let sinr = h.dotc(&chol.solve(h)).re.max(0.0);
                    Ok(Draw {
                        rate: (1.0 + sinr).log2(),
                        trace: trace_inv_times(&chol, &covs[k]).max(0.0),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Realization { channels, draws })
        });
        rows.into_iter().collect()
    }

    /// `(corrected, plain)` upper bounds of user `k` from the draws in
    /// column `slot`.
    fn upper_bounds(
        k: usize,
        slot: usize,
        rows: &[Realization],
        covs: &[ChannelCovariance],
        pw: &PowerConfig,
    ) -> Result<(f64, f64)> {
        let w = rows.len() as f64;
        let dim = covs[0].dim();
        let plain = rows.iter().map(|r| r.draws[slot].trace).sum::<f64>() / w;
        let sampled_b = interference(k, dim, pw, |b, j, weight| {
            for r in rows {
                let h = &r.channels[j];
                b.ger(weight / w, h, &h.conjugate(), Complex64::from(1.0));
            }
        });
        let sampled = Cholesky::new(sampled_b).ok_or(Error::NotPositiveDefinite)?;
        let exact = Cholesky::new(expected_interference_cov(k, covs, pw)?)
            .ok_or(Error::NotPositiveDefinite)?;
        let corrected =
            plain - trace_inv_times(&sampled, &covs[k]) + trace_inv_times(&exact, &covs[k]);
        Ok(((1.0 + corrected.max(0.0)).log2(), (1.0 + plain).log2()))
    }

    /// Sampled ergodic rate of user `k` with its standard error.
    pub fn average_rate<R: Rng + ?Sized>(
        &self,
        k: usize,
        covs: &[ChannelCovariance],
        pw: &PowerConfig,
        rng: &mut R,
    ) -> Result<McEstimate> {
        let rows = self.draws(&[k], covs, pw, rng)?;
        let rates: Vec<f64> = rows.iter().map(|r| r.draws[0].rate).collect();
        Ok(McEstimate::from_samples(&rates))
    }

    /// `log₂(1 + tr(Ê·Σ_k))` with `Ê` the corrected estimate of `E[B_k⁻¹]`.
    pub fn rate_upper_bound<R: Rng + ?Sized>(
        &self,
        k: usize,
        covs: &[ChannelCovariance],
        pw: &PowerConfig,
        rng: &mut R,
    ) -> Result<f64> {
        let rows = self.draws(&[k], covs, pw, rng)?;
        Ok(Self::upper_bounds(k, 0, &rows, covs, pw)?.0)
    }

    /// Both sampled quantities for every user from one shared set of draws.
    pub fn evaluate_all<R: Rng + ?Sized>(
        &self,
        covs: &[ChannelCovariance],
        pw: &PowerConfig,
        rng: &mut R,
    ) -> Result<Vec<UserMc>> {
        let users: Vec<usize> = (0..covs.len()).collect();
        let rows = self.draws(&users, covs, pw, rng)?;
        users
            .iter()
            .map(|&k| {
                let rates: Vec<f64> = rows.iter().map(|r| r.draws[k].rate).collect();
                let (upper_bound, upper_bound_plain) = Self::upper_bounds(k, k, &rows, covs, pw)?;
                Ok(UserMc {
                    average_rate: McEstimate::from_samples(&rates),
                    upper_bound,
                    upper_bound_plain,
                })
            })
            .collect()
    }
}

/// Rates of one configuration at one power setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub lower_bounds: Vec<f64>,
    pub monte_carlo: Option<Vec<UserMc>>,
    pub sum_log_rate: f64,
}

impl RateReport {
    pub fn evaluate<R: Rng + ?Sized>(
        covs: &[ChannelCovariance],
        pw: &PowerConfig,
        mc: Option<&MonteCarlo>,
        rng: &mut R,
    ) -> Result<Self> {
        let lower_bounds = rate_lower_bounds(covs, pw)?;
        let monte_carlo = mc.map(|m| m.evaluate_all(covs, pw, rng)).transpose()?;
        Ok(Self {
            sum_log_rate: sum_log(&lower_bounds),
            lower_bounds,
            monte_carlo,
        })
    }

    /// Sum of natural logs of the sampled ergodic rates, if sampled.
    pub fn mc_sum_log_rate(&self) -> Option<f64> {
        self.monte_carlo.as_ref().map(|m| {
            let r: Vec<f64> = m.iter().map(|u| u.average_rate.mean).collect();
            sum_log(&r)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag_cov(dim: usize, c: f64) -> ChannelCovariance {
        ChannelCovariance::from_factor(DMatrix::identity(dim, dim), vec![c; dim]).unwrap()
    }

    fn random_cov(rng: &mut impl Rng, dim: usize, paths: usize) -> ChannelCovariance {
        let f = DMatrix::from_fn(dim, paths, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let p = (0..paths).map(|_| rng.random_range(0.1..2.0)).collect();
        ChannelCovariance::from_factor(f, p).unwrap()
    }

    #[test]
    fn single_user_interference_is_noise() {
        let covs = vec![diag_cov(3, 1.0)];
        let pw = PowerConfig::new(vec![2.0], 0.5).unwrap();
        let b = expected_interference_cov(0, &covs, &pw).unwrap();
        assert_eq!(
            b,
            DMatrix::from_diagonal_element(3, 3, Complex64::from(0.25))
        );
    }

    #[test]
    fn equal_powers_sum_plainly() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let covs: Vec<_> = (0..3).map(|_| random_cov(&mut rng, 4, 2)).collect();
        let pw = PowerConfig::uniform(3, 0.7, 0.1).unwrap();
        let b = expected_interference_cov(1, &covs, &pw).unwrap();
        let expected = covs[0].matrix()
            + covs[2].matrix()
            + DMatrix::from_diagonal_element(4, 4, Complex64::from(0.1 / 0.7));
        assert!((b - expected).norm() < 1e-12);
    }

    #[test]
    fn closed_form_single_user_rate() {
        // Σ = c·I with B = 2 surfaces of N = 3 antennas
        let c = 0.3;
        let covs = vec![diag_cov(6, c)];
        let pw = PowerConfig::new(vec![2.0], 0.5).unwrap();
        let r = rate_lower_bound(0, &covs, &pw).unwrap();
        assert_relative_eq!(r, (1.0 + c * 6.0 * 2.0 / 0.5).log2(), max_relative = 1e-12);
    }

    #[test]
    fn zero_covariance_gives_zero_rate_and_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let zero = ChannelCovariance::from_factor(DMatrix::zeros(4, 2), vec![1.0, 1.0]).unwrap();
        let covs = vec![zero, random_cov(&mut rng, 4, 2)];
        let pw = PowerConfig::uniform(2, 1.0, 1.0).unwrap();
        assert_eq!(rate_lower_bound(0, &covs, &pw).unwrap(), 0.0);
        assert_eq!(sum_log_rate(&covs, &pw).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn identical_users_sum_log() {
        let covs = vec![diag_cov(2, 1.0); 3];
        let pw = PowerConfig::uniform(3, 1.0, 1.0).unwrap();
        let r = rate_lower_bound(0, &covs, &pw).unwrap();
        assert_relative_eq!(
            sum_log_rate(&covs, &pw).unwrap(),
            3.0 * r.ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn matches_explicit_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let covs: Vec<_> = (0..3).map(|_| random_cov(&mut rng, 5, 2)).collect();
            let pw = PowerConfig::new(vec![1.0, 2.0, 0.5], 0.3).unwrap();
            for k in 0..3 {
                let b = expected_interference_cov(k, &covs, &pw).unwrap();
                let inv = b.try_inverse().unwrap();
                let t = (inv * covs[k].matrix()).trace().re;
                let r = rate_lower_bound(k, &covs, &pw).unwrap();
                assert_relative_eq!(r, (1.0 + t).log2(), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn own_covariance_increment_never_hurts() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let covs: Vec<_> = (0..2).map(|_| random_cov(&mut rng, 4, 2)).collect();
            let pw = PowerConfig::uniform(2, 1.0, 0.2).unwrap();
            let before = rate_lower_bound(0, &covs, &pw).unwrap();
            let col = DVector::from_fn(4, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let mut bigger = covs.clone();
            bigger[0] = covs[0]
                .with_extra_path(&col, rng.random_range(0.0..1.0))
                .unwrap();
            assert!(rate_lower_bound(0, &bigger, &pw).unwrap() >= before - 1e-12);
        }
    }

    #[test]
    fn power_scaling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let covs: Vec<_> = (0..3).map(|_| random_cov(&mut rng, 4, 2)).collect();
        let pw = PowerConfig::new(vec![1.0, 0.5, 2.0], 0.1).unwrap();
        let scaled = PowerConfig::new(vec![1e3, 0.5e3, 2e3], 0.1e3).unwrap();
        let a = rate_lower_bounds(&covs, &pw).unwrap();
        let b = rate_lower_bounds(&covs, &scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let covs = vec![diag_cov(2, 1.0), diag_cov(3, 1.0)];
        let pw = PowerConfig::uniform(2, 1.0, 1.0).unwrap();
        assert!(matches!(
            rate_lower_bound(0, &covs, &pw),
            Err(Error::DimensionMismatch { .. })
        ));
        let pw3 = PowerConfig::uniform(3, 1.0, 1.0).unwrap();
        assert!(rate_lower_bound(0, &covs[..1], &pw3).is_err());
    }

    #[test]
    fn mc_zero_covariances() {
        let zero = ChannelCovariance::from_factor(DMatrix::zeros(3, 1), vec![1.0]).unwrap();
        let covs = vec![zero.clone(), zero];
        let pw = PowerConfig::uniform(2, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let est = MonteCarlo::new(100)
            .average_rate(0, &covs, &pw, &mut rng)
            .unwrap();
        assert_eq!(
            est,
            McEstimate {
                mean: 0.0,
                stderr: 0.0
            }
        );
        assert!(MonteCarlo::new(1)
            .average_rate(0, &covs, &pw, &mut rng)
            .is_err());
    }

    #[test]
    fn mc_single_user_upper_bound_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let covs = vec![random_cov(&mut rng, 4, 2)];
        let pw = PowerConfig::new(vec![2.0], 0.5).unwrap();
        let ub = MonteCarlo::new(10)
            .rate_upper_bound(0, &covs, &pw, &mut rng)
            .unwrap();
        let expected = (1.0 + covs[0].trace() * 2.0 / 0.5).log2();
        assert_relative_eq!(ub, expected, max_relative = 1e-12);
        assert_relative_eq!(
            ub,
            rate_lower_bound(0, &covs, &pw).unwrap(),
            max_relative = 1e-12
        );
    }

    /// `E[log₂(1 + x·snr)]` for `x ~ Exp(1)` by composite Simpson on `[0, 60]`.
    fn exp_log_quadrature(snr: f64) -> f64 {
        let n = 200_000;
        let h = 60.0 / n as f64;
        let f = |x: f64| (1.0 + snr * x).log2() * (-x).exp();
        let mut s = f(0.0) + f(60.0);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn mc_scalar_rate_matches_quadrature() {
        let s = 1.7;
        let cov = ChannelCovariance::from_factor(
            DMatrix::from_element(1, 1, Complex64::from(1.0)),
            vec![s],
        )
        .unwrap();
        let pw = PowerConfig::new(vec![0.8], 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let est = MonteCarlo::new(200_000)
            .average_rate(0, &[cov], &pw, &mut rng)
            .unwrap();
        let exact = exp_log_quadrature(s * 0.8 / 0.4);
        assert!(
            (est.mean - exact).abs() < 4.0 * est.stderr,
            "{} vs {exact} (se {})",
            est.mean,
            est.stderr
        );
    }

    #[test]
    fn mc_is_reproducible_and_mode_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let covs: Vec<_> = (0..3).map(|_| random_cov(&mut rng, 4, 2)).collect();
        let pw = PowerConfig::uniform(3, 1.0, 0.3).unwrap();
        let run = |exec| {
            let mut r = ChaCha8Rng::seed_from_u64(99);
            MonteCarlo::new(500)
                .with_execution(exec)
                .evaluate_all(&covs, &pw, &mut r)
                .unwrap()
        };
        let a = run(Execution::Parallel);
        let b = run(Execution::Sequential);
        assert_eq!(a, b);
    }

    #[test]
    fn corrected_upper_bound_never_below_surrogate() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let covs: Vec<_> = (0..3).map(|_| random_cov(&mut rng, 3, 2)).collect();
            let pw = PowerConfig::new(vec![1.0, 0.01, 0.01], 5.0).unwrap();
            let lb = rate_lower_bounds(&covs, &pw).unwrap();
            let mc = MonteCarlo::new(20)
                .evaluate_all(&covs, &pw, &mut rng)
                .unwrap();
            for (l, m) in lb.iter().zip(&mc) {
                assert!(m.upper_bound >= l - 1e-12, "{} < {l}", m.upper_bound);
            }
        }
    }
}
