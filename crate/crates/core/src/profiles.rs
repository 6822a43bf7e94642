//! Spatial decay profiles, their normalizing masses, and the parameter
//! algebra tying dimension, target fractal dimension, innovation and the
//! growth exponent together.
//!
//! A profile `f` shapes the displacement of a child born at time `t` from
//! its parent: the displacement has density proportional to
//! `f(t^{1/d} |x|)`, so scales shrink like `t^{-1/d}`. The total mass
//! `c_d = ∫ f(|x|) dx` fixes the growth exponent `rho = c_d * beta / theta`.
//!
//! Only the three closed-form profiles are supported; an arbitrary `f` would
//! need a numerically integrated `c_d` and a generic radial sampler.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialProfile {
    /// `f(x) = e^{-x}`
    Exponential,
    /// `f(x) = e^{-x^2/2}`
    Gaussian,
    /// `f(x) = 1{x <= 1}`
    HardCutoff,
}

impl SpatialProfile {
    pub const ALL: [SpatialProfile; 3] = [
        SpatialProfile::Exponential,
        SpatialProfile::Gaussian,
        SpatialProfile::HardCutoff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpatialProfile::Exponential => "exponential",
            SpatialProfile::Gaussian => "gaussian",
            SpatialProfile::HardCutoff => "hardcutoff",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            SpatialProfile::Exponential => "exponential decay e^{-r}",
            SpatialProfile::Gaussian => "gaussian decay e^{-r^2/2}",
            SpatialProfile::HardCutoff => "indicator of the unit ball",
        }
    }

    /// The radial profile itself.
    pub fn eval(self, r: f64) -> f64 {
        match self {
            SpatialProfile::Exponential => (-r).exp(),
            SpatialProfile::Gaussian => (-0.5 * r * r).exp(),
            SpatialProfile::HardCutoff => {
                if r <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for SpatialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpatialProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(SpatialProfile::Exponential),
            "gaussian" => Ok(SpatialProfile::Gaussian),
            "hardcutoff" => Ok(SpatialProfile::HardCutoff),
            other => Err(Error::Domain(format!("unknown profile {other:?}"))),
        }
    }
}

/// Gamma function at `k/2` for a positive integer `k`.
fn gamma_half_integer(k: u32) -> f64 {
    // Γ(1) = 1, Γ(1/2) = √π, Γ(x + 1) = x Γ(x).
    let (mut x, mut g) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (0.5, PI.sqrt())
    };
    let target = k as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit ball in `d` dimensions, `π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma_half_integer(d as u32 + 2)
}

/// Total mass `c_d = ∫_{R^d} f(|x|) dx` of the profile.
pub fn compute_cd(profile: SpatialProfile, d: usize) -> f64 {
    match profile {
        SpatialProfile::Exponential => {
            let factorial: f64 = (1..=d).map(|k| k as f64).product();
            factorial * unit_ball_volume(d)
        }
        SpatialProfile::Gaussian => (2.0 * PI).powf(d as f64 / 2.0),
        SpatialProfile::HardCutoff => unit_ball_volume(d),
    }
}

/// Parameters of the continuous-time branching process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub d: usize,
    pub profile: SpatialProfile,
    pub theta: f64,
    pub rho: f64,
    pub alpha: f64,
    pub seed: u64,
    // Always 1 through the public constructors; the process depends on
    // beta and theta only through their ratio.
    #[serde(default = "default_beta")]
    pub(crate) beta: f64,
}

fn default_beta() -> f64 {
    1.0
}

impl ProcessParams {
    /// Parameters hitting the target dimension `alpha = d * rho`.
    pub fn from_alpha(d: usize, alpha: f64, profile: SpatialProfile) -> Result<Self> {
        if d < 1 {
            return Err(Error::Domain(format!("dimension must be >= 1, got {d}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Self::from_rho(d, alpha / d as f64, profile)
    }

    /// Parameters with growth exponent `rho` given directly.
    pub fn from_rho(d: usize, rho: f64, profile: SpatialProfile) -> Result<Self> {
        if d < 1 {
            return Err(Error::Domain(format!("dimension must be >= 1, got {d}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Domain(format!("rho must be positive, got {rho}")));
        }
        let beta = 1.0;
        let theta = compute_cd(profile, d) * beta / rho;
        Ok(ProcessParams {
            d,
            profile,
            theta,
            rho,
            alpha: d as f64 * rho,
            seed: 0,
            beta,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Normalizing mass of the profile in this dimension.
    pub fn cd(&self) -> f64 {
        compute_cd(self.profile, self.d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::Domain("dimension must be >= 1".into()));
        }
        for (name, v) in [
            ("theta", self.theta),
            ("rho", self.rho),
            ("beta", self.beta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        let expected = self.cd() * self.beta / self.theta;
        if (expected - self.rho).abs() > 1e-12 * self.rho {
            return Err(Error::Domain(format!(
                "rho {} inconsistent with c_d*beta/theta = {expected}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// `derive_params` under its operational name.
pub fn derive_params(d: usize, alpha: f64, profile: SpatialProfile) -> Result<ProcessParams> {
    ProcessParams::from_alpha(d, alpha, profile)
}

/// Writes into `out` the displacement of a child born at time `t`
/// (`beta = 1`): an isotropic vector with radial law `f(r) r^{d-1}` scaled
/// by `t^{-1/d}`.
pub fn sample_displacement_into<R: Rng + ?Sized>(
    profile: SpatialProfile,
    t: f64,
    out: &mut [f64],
    rng: &mut R,
) {
    let d = out.len();
    let scale = t.powf(-1.0 / d as f64);
    match profile {
        SpatialProfile::Exponential => {
            sampling::unit_direction(out, rng);
            let r = scale * sampling::gamma_integer(d, rng);
            out.iter_mut().for_each(|x| *x *= r);
        }
        SpatialProfile::Gaussian => {
            for x in out.iter_mut() {
                *x = scale * sampling::standard_normal(rng);
            }
        }
        SpatialProfile::HardCutoff => sampling::uniform_in_ball(out, scale, rng),
    }
}

pub fn sample_displacement<R: Rng + ?Sized>(
    profile: SpatialProfile,
    d: usize,
    t: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = vec![0.0; d];
    sample_displacement_into(profile, t, &mut out, rng);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_from_seed;
    use crate::stats::ks_two_sample;

    /// Surface area of the unit sphere in R^d for d = 1, 2, 3.
    fn sphere_area(d: usize) -> f64 {
        [2.0, 2.0 * PI, 4.0 * PI][d - 1]
    }

    /// Composite Simpson on [0, upper] of f(r) r^{d-1}, split at r = 1 so the
    /// hard cutoff's jump falls on a panel boundary.
    fn radial_quadrature(profile: SpatialProfile, d: usize) -> f64 {
        let simpson = |a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let g = |r: f64| profile.eval(r) * r.powi(d as i32 - 1);
            let mut s = g(a) + g(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * g(a + i as f64 * h);
            }
            s * h / 3.0
        };
        let inner = simpson(0.0, 1.0, 2000);
        let outer = match profile {
            SpatialProfile::HardCutoff => 0.0,
            _ => simpson(1.0, 60.0, 200_000),
        };
        sphere_area(d) * (inner + outer)
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_masses() {
        assert!((compute_cd(SpatialProfile::Exponential, 2) - 2.0 * PI).abs() < 1e-14);
        assert!((compute_cd(SpatialProfile::Gaussian, 3) - 15.749609945722419).abs() < 1e-12);
        assert!((compute_cd(SpatialProfile::HardCutoff, 2) - PI).abs() < 1e-15);
    }

    #[test]
    fn masses_match_quadrature() {
        for d in 1..=3 {
            for profile in SpatialProfile::ALL {
                let exact = compute_cd(profile, d);
                let quad = radial_quadrature(profile, d);
                let rel = (exact - quad).abs() / exact;
                assert!(rel < 1e-6, "{profile} d={d}: {exact} vs {quad}");
            }
        }
    }

    #[test]
    fn derived_parameters() {
        let p = derive_params(2, 1.0, SpatialProfile::Exponential).unwrap();
        assert_eq!(p.rho, 0.5);
        assert!((p.theta - 4.0 * PI).abs() < 1e-12);

        let p = derive_params(2, 2.0, SpatialProfile::HardCutoff).unwrap();
        assert_eq!(p.rho, 1.0);
        assert!((p.theta - PI).abs() < 1e-15);

        let p = derive_params(1, 1.0, SpatialProfile::HardCutoff).unwrap();
        assert_eq!((p.rho, p.theta, p.beta()), (1.0, 2.0, 1.0));
        p.validate().unwrap();
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(matches!(
            derive_params(2, 0.0, SpatialProfile::Gaussian),
            Err(Error::Domain(_))
        ));
        assert!(derive_params(2, -1.0, SpatialProfile::Gaussian).is_err());
        assert!(derive_params(0, 1.0, SpatialProfile::Gaussian).is_err());
        assert!(ProcessParams::from_rho(2, f64::NAN, SpatialProfile::Gaussian).is_err());
    }

    #[test]
    fn profile_names_round_trip() {
        for p in SpatialProfile::ALL {
            assert_eq!(p.name().parse::<SpatialProfile>().unwrap(), p);
            assert_eq!(
                serde_json::to_string(&p).unwrap(),
                format!("\"{}\"", p.name())
            );
        }
        assert!("Gaussian".parse::<SpatialProfile>().is_err());
    }

    #[test]
    fn hard_cutoff_displacement_bounded() {
        let mut rng = rng_from_seed(11);
        for d in 1..=4 {
            for &t in &[1.0, 3.5, 1e3, 1e8] {
                for _ in 0..2000 {
                    let v = sample_displacement(SpatialProfile::HardCutoff, d, t, &mut rng);
                    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    assert!(r <= t.powf(-1.0 / d as f64));
                }
            }
        }
    }

    #[test]
    fn gaussian_component_variance() {
        let mut rng = rng_from_seed(12);
        let n = 100_000;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let v = sample_displacement(SpatialProfile::Gaussian, 2, 1.0, &mut rng);
            sum2 += v[0] * v[0] + v[1] * v[1];
        }
        let var = sum2 / (2 * n) as f64;
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn exponential_mean_radius_d1() {
        // Oracle: ∫ r e^{-r} dr / ∫ e^{-r} dr over [0, 60] by Simpson.
        let simpson = |g: &dyn Fn(f64) -> f64| {
            let n = 60_000;
            let h = 60.0 / n as f64;
            let mut s = g(0.0) + g(60.0);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
            }
            s * h / 3.0
        };
        let oracle = simpson(&|r| r * (-r).exp()) / simpson(&|r| (-r).exp());

        let mut rng = rng_from_seed(13);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| sample_displacement(SpatialProfile::Exponential, 1, 1.0, &mut rng)[0].abs())
            .sum::<f64>()
            / n as f64;
        assert!((mean - oracle).abs() / oracle < 0.02, "{mean} vs {oracle}");
    }

    #[test]
    fn displacement_law_scales_with_time() {
        let n = 10_000;
        for profile in SpatialProfile::ALL {
            let d = 2;
            let mut rng = rng_from_seed(14);
            let mut radii = |t: f64| -> Vec<f64> {
                (0..n)
                    .map(|_| {
                        let v = sample_displacement(profile, d, t, &mut rng);
                        t.powf(1.0 / d as f64) * v.iter().map(|x| x * x).sum::<f64>().sqrt()
                    })
                    .collect()
            };
            let a = radii(1.0);
            let b = radii(100.0);
            let (_, p) = ks_two_sample(&a, &b);
            assert!(p > 0.01, "{profile}: p = {p}");
        }
    }
}
