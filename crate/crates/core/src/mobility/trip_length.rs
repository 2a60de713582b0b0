//! Truncated power-law trip lengths, sampled by inverse CDF on a tabulated
//! numeric integral.

use rand::Rng;

use super::MobilityGenConfig;

/// Number of tabulated CDF points.
pub const TABLE_POINTS: usize = 1 << 14;
/// Smallest positive tabulated length, in km.
const FIRST_POINT_KM: f64 = 1e-4;

// 5-point Gauss-Legendre on [-1, 1].
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Unnormalized trip-length density `(Δr + Δr₀)^(−β) exp(−Δr/κ)`, Δr in km.
#[inline]
pub fn trip_length_density(delta_r: f64, delta_r0: f64, power_beta: f64, kappa: f64) -> f64 {
    (delta_r + delta_r0).powf(-power_beta) * (-delta_r / kappa).exp()
}

/// Tabulated inverse CDF of the trip-length law.
#[derive(Clone, Debug)]
pub struct TripLengthLaw {
    lengths: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
}

impl TripLengthLaw {
    /// Tabulates the law on `TABLE_POINTS` points: zero, then log-spaced up
    /// to `5 κ`. Mass beyond `5 κ` is dropped.
    pub fn new(cfg: &MobilityGenConfig) -> Self {
        let (r0, beta, kappa) = (cfg.delta_r0, cfg.power_beta, cfg.kappa);
        let density = |x: f64| trip_length_density(x, r0, beta, kappa);
        let upper = 5.0 * kappa;
        let mut lengths = Vec::with_capacity(TABLE_POINTS);
        lengths.push(0.0);
        let ratio = (upper / FIRST_POINT_KM).ln() / (TABLE_POINTS - 2) as f64;
        for k in 0..TABLE_POINTS - 1 {
            lengths.push(FIRST_POINT_KM * (ratio * k as f64).exp());
        }
        *lengths.last_mut().unwrap() = upper;

        let mut cdf = Vec::with_capacity(TABLE_POINTS);
        let mut first_moment = 0.0;
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in lengths.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (&node, &weight) in GL_NODES.iter().zip(&GL_WEIGHTS) {
                let x = mid + half * node;
                let f = density(x) * weight * half;
                acc += f;
                first_moment += x * f;
            }
            cdf.push(acc);
        }
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        *cdf.last_mut().unwrap() = 1.0;
        TripLengthLaw {
            lengths,
            cdf,
            mean: first_moment / total,
        }
    }

    /// Mean of the tabulated law, in km.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Trip length for a uniform quantile `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let (x0, x1) = (self.lengths[k - 1], self.lengths[k]);
        if c1 > c0 {
            x0 + (u - c0) / (c1 - c0) * (x1 - x0)
        } else {
            x1
        }
    }

    /// Draws a strictly positive trip length in km.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.gen();
            if u > 0.0 {
                let x = self.quantile(u);
                if x > 0.0 {
                    return x;
                }
            }
        }
    }
}

/// One trip length in km.
pub fn sample_trip_length<R: Rng + ?Sized>(rng: &mut R, law: &TripLengthLaw) -> f64 {
    law.sample(rng)
}
