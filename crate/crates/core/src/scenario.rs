//! Cell configuration, unit conversions and random channel generation.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("channel dimensions do not match configuration: {0}")]
    Dimension(String),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Parameters of one cell. Field names are the JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Far users, served only through a relay.
    pub k1: usize,
    /// Near users, candidates for relaying.
    pub k2: usize,
    pub n_subcarriers: usize,
    pub subcarrier_bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
    /// Per-user budget, used for both cooperative pairs and direct users.
    pub pmax_user_dbm: f64,
    /// Base-station downlink power, which leaks into its own receiver.
    pub pmax_bs_dbw: f64,
    /// Residual attenuation applied to |H_SI|^2 after cancellation.
    pub si_suppression_db: f64,
    pub si_enabled: bool,
    pub rmin_coop_bps_hz: f64,
    pub rmin_noncoop_bps_hz: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            k1: 2,
            k2: 2,
            n_subcarriers: 8,
            subcarrier_bandwidth_hz: 20_000.0,
            noise_density_dbm_hz: -174.0,
            pmax_user_dbm: 20.0,
            pmax_bs_dbw: 10.0,
            si_suppression_db: 110.0,
            si_enabled: true,
            rmin_coop_bps_hz: 1.0,
            rmin_noncoop_bps_hz: 1.0,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.k1 < 1 {
            return Err(invalid("k1", "must be at least 1"));
        }
        if self.k2 < 1 {
            return Err(invalid("k2", "must be at least 1"));
        }
        if self.n_subcarriers < 1 {
            return Err(invalid("n_subcarriers", "must be at least 1"));
        }
        if !(self.subcarrier_bandwidth_hz.is_finite() && self.subcarrier_bandwidth_hz > 0.0) {
            return Err(invalid(
                "subcarrier_bandwidth_hz",
                "must be finite and strictly positive",
            ));
        }
        let finite = [
            ("noise_density_dbm_hz", self.noise_density_dbm_hz),
            ("pmax_user_dbm", self.pmax_user_dbm),
            ("pmax_bs_dbw", self.pmax_bs_dbw),
            ("si_suppression_db", self.si_suppression_db),
        ];
        for (field, value) in finite {
            if !value.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        let powers = [
            ("noise_density_dbm_hz", self.noise_power_w()),
            ("pmax_user_dbm", self.pmax_user_w()),
            ("pmax_bs_dbw", self.pmax_bs_w()),
        ];
        for (field, watts) in powers {
            if !(watts.is_finite() && watts > 0.0) {
                return Err(invalid(field, "linear power underflows or overflows"));
            }
        }
        for (field, rmin) in [
            ("rmin_coop_bps_hz", self.rmin_coop_bps_hz),
            ("rmin_noncoop_bps_hz", self.rmin_noncoop_bps_hz),
        ] {
            if !(rmin.is_finite() && rmin >= 0.0) {
                return Err(invalid(field, "must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn noise_power_w(&self) -> f64 {
        noise_power(self.noise_density_dbm_hz, self.subcarrier_bandwidth_hz)
    }

    pub fn pmax_user_w(&self) -> f64 {
        dbm_to_watts(self.pmax_user_dbm)
    }

    pub fn pmax_bs_w(&self) -> f64 {
        dbw_to_watts(self.pmax_bs_dbw)
    }

    /// Linear-domain budget in the working scalar type.
    pub fn budget<T: Real>(&self) -> LinkBudget<T> {
        LinkBudget {
            pmax_user_w: T::lit(self.pmax_user_w()),
            pmax_bs_w: T::lit(self.pmax_bs_w()),
            rmin_coop: T::lit(self.rmin_coop_bps_hz),
            rmin_noncoop: T::lit(self.rmin_noncoop_bps_hz),
        }
    }
}

/// Linear powers and rate floors derived from a [`ScenarioConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    pub pmax_user_w: T,
    pub pmax_bs_w: T,
    pub rmin_coop: T,
    pub rmin_noncoop: T,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn dbw_to_watts(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Thermal noise power N0·W in watts.
pub fn noise_power(noise_density_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(noise_density_dbm_hz) * bandwidth_hz
}

/// Complex channel coefficients of one realization.
///
/// `h` is indexed `[k][m][i]` (far user k to near user m on subcarrier i),
/// `g` is `[m][i]` (near user m to the base station) and `h_si` is `[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    pub k1: usize,
    pub k2: usize,
    pub n: usize,
    pub h: Vec<Complex<T>>,
    pub g: Vec<Complex<T>>,
    pub h_si: Vec<Complex<T>>,
}

impl<T: Copy> ChannelRealization<T> {
    pub fn h(&self, k: usize, m: usize, i: usize) -> Complex<T> {
        self.h[(k * self.k2 + m) * self.n + i]
    }

    pub fn g(&self, m: usize, i: usize) -> Complex<T> {
        self.g[m * self.n + i]
    }
}

/// Draws i.i.d. CN(0, 1) coefficients for every link.
///
/// The stream is a ChaCha8 generator keyed by `config.seed` with stream id
/// `trial_index`, so a trial is reproducible on its own and trials never
/// share random numbers. Draw order is h, then g, then h_si, each row-major.
pub fn sample_channels<T: Real>(
    config: &ScenarioConfig,
    trial_index: u64,
) -> ChannelRealization<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial_index);
    let (k1, k2, n) = (config.k1, config.k2, config.n_subcarriers);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut draw = |count: usize| -> Vec<Complex<T>> {
        (0..count)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex::new(T::lit(re * scale), T::lit(im * scale))
            })
            .collect()
    };
    let h = draw(k1 * k2 * n);
    let g = draw(k2 * n);
    let h_si = draw(n);
    ChannelRealization {
        k1,
        k2,
        n,
        h,
        g,
        h_si,
    }
}

/// SNR-normalized link gains.
///
/// `beta` serves both time slots. `gamma_si` already includes the SI
/// suppression and is identically zero when SI is disabled.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedGains<T> {
    pub k1: usize,
    pub k2: usize,
    pub n: usize,
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub gamma_si: Vec<T>,
}

impl<T: Real> NormalizedGains<T> {
    pub fn zeros(k1: usize, k2: usize, n: usize) -> Self {
        Self {
            k1,
            k2,
            n,
            alpha: vec![T::zero(); k1 * k2 * n],
            beta: vec![T::zero(); k2 * n],
            gamma_si: vec![T::zero(); n],
        }
    }

    #[inline]
    pub fn alpha(&self, k: usize, m: usize, i: usize) -> T {
        self.alpha[(k * self.k2 + m) * self.n + i]
    }

    #[inline]
    pub fn beta(&self, m: usize, i: usize) -> T {
        self.beta[m * self.n + i]
    }

    #[inline]
    pub fn gamma_si(&self, i: usize) -> T {
        self.gamma_si[i]
    }

    pub fn alpha_mut(&mut self, k: usize, m: usize, i: usize) -> &mut T {
        &mut self.alpha[(k * self.k2 + m) * self.n + i]
    }

    pub fn beta_mut(&mut self, m: usize, i: usize) -> &mut T {
        &mut self.beta[m * self.n + i]
    }

    pub fn matches(&self, config: &ScenarioConfig) -> bool {
        self.k1 == config.k1
            && self.k2 == config.k2
            && self.n == config.n_subcarriers
            && self.alpha.len() == self.k1 * self.k2 * self.n
            && self.beta.len() == self.k2 * self.n
            && self.gamma_si.len() == self.n
    }
}

pub fn normalize_gains<T: Real>(
    config: &ScenarioConfig,
    channels: &ChannelRealization<T>,
) -> Result<NormalizedGains<T>, ScenarioError> {
    let (k1, k2, n) = (config.k1, config.k2, config.n_subcarriers);
    if channels.k1 != k1
        || channels.k2 != k2
        || channels.n != n
        || channels.h.len() != k1 * k2 * n
        || channels.g.len() != k2 * n
        || channels.h_si.len() != n
    {
        return Err(ScenarioError::Dimension(format!(
            "expected k1={k1} k2={k2} n={n}, got k1={} k2={} n={}",
            channels.k1, channels.k2, channels.n
        )));
    }
    let noise = T::lit(config.noise_power_w());
    let si_scale = if config.si_enabled {
        T::lit(db_to_linear(-config.si_suppression_db))
    } else {
        T::zero()
    };
    let alpha = channels.h.iter().map(|c| c.norm_sqr() / noise).collect();
    let beta = channels.g.iter().map(|c| c.norm_sqr() / noise).collect();
    let gamma_si = channels
        .h_si
        .iter()
        .map(|c| c.norm_sqr() * si_scale / noise)
        .collect();
    Ok(NormalizedGains {
        k1,
        k2,
        n,
        alpha,
        beta,
        gamma_si,
    })
}
