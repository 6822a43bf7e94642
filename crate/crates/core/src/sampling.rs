//! Exact variate generators shared by the continuous and discrete models.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

/// The RNG used throughout the crate. ChaCha8 gives identical streams on
/// every platform, which the byte-identical reproducibility contract needs.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `replica` derived from a base seed.
pub fn replica_rng(seed: u64, replica: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

pub fn unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on (0, 1], safe to pass to `ln`.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Gamma(shape = k, scale = 1) for integer k, as a sum of k unit exponentials.
pub fn gamma_integer<R: Rng + ?Sized>(k: usize, rng: &mut R) -> f64 {
    (0..k).map(|_| unit_exponential(rng)).sum()
}

/// Writes a uniformly distributed unit vector into `out`.
pub fn unit_direction<R: Rng + ?Sized>(out: &mut [f64], rng: &mut R) {
    if out.len() == 1 {
        out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        let mut norm2 = 0.0;
        for x in out.iter_mut() {
            *x = standard_normal(rng);
            norm2 += *x * *x;
        }
        if norm2 > 0.0 {
            let inv = norm2.sqrt().recip();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Writes a point uniform in the closed ball of the given radius about the origin.
pub fn uniform_in_ball<R: Rng + ?Sized>(out: &mut [f64], radius: f64, rng: &mut R) {
    let d = out.len() as f64;
    unit_direction(out, rng);
    let r = radius * rng.random::<f64>().powf(d.recip());
    out.iter_mut().for_each(|x| *x *= r);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_points_stay_inside() {
        let mut rng = rng_from_seed(3);
        let mut p = [0.0; 3];
        for _ in 0..10_000 {
            uniform_in_ball(&mut p, 0.25, &mut rng);
            let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(r <= 0.25);
        }
    }

    #[test]
    fn ball_radius_law() {
        // P(|X| <= r/2) = 2^-d for the uniform ball law.
        let mut rng = rng_from_seed(4);
        let mut p = [0.0; 2];
        let n = 100_000;
        let inner = (0..n)
            .filter(|_| {
                uniform_in_ball(&mut p, 1.0, &mut rng);
                p[0].hypot(p[1]) <= 0.5
            })
            .count();
        let frac = inner as f64 / n as f64;
        assert!((frac - 0.25).abs() < 0.005, "{frac}");
    }

    #[test]
    fn replica_streams_differ() {
        let a: u64 = replica_rng(9, 0).random();
        let b: u64 = replica_rng(9, 1).random();
        assert_ne!(a, b);
        let a2: u64 = replica_rng(9, 0).random();
        assert_eq!(a, a2);
    }
}
