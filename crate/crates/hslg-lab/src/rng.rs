//! Counter-based random streams (Philox4x64-10) and the samplers built on them.
//!
//! A stream is keyed by `(master_seed, stream_index)`. Every 128-bit counter value
//! produces one block of four 64-bit words, so any draw is addressable without
//! replaying earlier ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ALGORITHM_ID: &str = "philox4x64-10";

const M0: u64 = 0xD2E7_470E_E14C_6C93;
const M1: u64 = 0xCA5A_8263_9512_1157;
const W0: u64 = 0x9E37_79B9_7F4A_7C15;
const W1: u64 = 0xBB67_AE85_84CA_A73B;

#[inline]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

/// Philox4x64 with 10 rounds.
pub fn philox4x64_10(ctr: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let mut c = ctr;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, c[0]);
        let (hi1, lo1) = mulhilo(M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Deterministic random stream addressed by `(seed, stream, counter)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
    counter: u128,
    #[serde(skip)]
    buf: [u64; 4],
    #[serde(skip)]
    used: u8,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self::at(seed, stream, 0)
    }

    /// Stream positioned at block `counter`.
    pub fn at(seed: u64, stream: u64, counter: u128) -> Self {
        RngStream { seed, stream, counter, buf: [0; 4], used: 4 }
    }

    pub fn algorithm_id(&self) -> &'static str {
        ALGORITHM_ID
    }

    /// Next block index that will be generated.
    pub fn counter(&self) -> u128 {
        self.counter
    }

    fn refill(&mut self) {
        let c = self.counter;
        self.buf = philox4x64_10([c as u64, (c >> 64) as u64, 0, 0], [self.seed, self.stream]);
        self.counter = self.counter.wrapping_add(1);
        self.used = 0;
    }

    pub fn next_u64(&mut self) -> u64 {
        if self.used >= 4 {
            self.refill();
        }
        let v = self.buf[self.used as usize];
        self.used += 1;
        v
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        // Marsaglia polar method, second variate discarded to keep the stream stateless
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }

    /// `log G` with `G ~ Gamma(shape, 1)`.
    pub fn log_gamma_variate(&mut self, shape: f64) -> Result<f64> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::Domain(format!("gamma shape must be positive, got {shape}")));
        }
        if shape < 1.0 {
            // boost: G(a) = G(a + 1) * U^(1/a)
            let g = self.marsaglia_tsang(shape + 1.0);
            let u = self.uniform();
            Ok(g.ln() + u.ln() / shape)
        } else {
            Ok(self.marsaglia_tsang(shape).ln())
        }
    }

    pub fn gamma(&mut self, shape: f64) -> Result<f64> {
        Ok(self.log_gamma_variate(shape)?.exp())
    }

    fn marsaglia_tsang(&mut self, shape: f64) -> f64 {
        debug_assert!(shape >= 1.0);
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }
}

/// `1/G` with `G ~ Gamma(beta, 1)`.
pub fn sample_inverse_gamma(beta: f64, rng: &mut RngStream) -> Result<f64> {
    let w = (-rng.log_gamma_variate(beta)?).exp();
    if !w.is_finite() || w <= 0.0 {
        return Err(Error::Numeric(format!(
            "inverse-gamma draw with shape {beta} left the binary64 range"
        )));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_answer_vectors() {
        assert_eq!(
            philox4x64_10([0; 4], [0; 2]),
            [0x16554d9eca36314c, 0xdb20fe9d672d0fdc, 0xd7e772cee186176b, 0x7e68b68aec7ba23b]
        );
        assert_eq!(
            philox4x64_10([u64::MAX; 4], [u64::MAX; 2]),
            [0x87b092c3013fe90b, 0x438c3c67be8d0224, 0x9cc7d7c69cd777b6, 0xa09caebf594f0ba0]
        );
        assert_eq!(
            philox4x64_10(
                [0x243f6a8885a308d3, 0x13198a2e03707344, 0xa4093822299f31d0, 0x082efa98ec4e6c89],
                [0x452821e638d01377, 0xbe5466cf34e90c6c]
            ),
            [0xa528f45403e61d95, 0x38c72dbd566e9788, 0xa5a1610e72fd18b5, 0x57bd43b5e52b7fe6]
        );
    }

    #[test]
    fn replay_is_bit_identical() {
        let mut a = RngStream::at(7, 3, 1 << 70);
        let mut b = RngStream::at(7, 3, 1 << 70);
        for _ in 0..100 {
            assert_eq!(
                sample_inverse_gamma(0.3, &mut a).unwrap().to_bits(),
                sample_inverse_gamma(0.3, &mut b).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn uniform_is_open_interval() {
        let mut r = RngStream::new(1, 1);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn bad_shape_rejected() {
        let mut r = RngStream::new(1, 1);
        assert!(sample_inverse_gamma(0.0, &mut r).is_err());
        assert!(sample_inverse_gamma(-2.0, &mut r).is_err());
    }

    #[test]
    fn inverse_gamma_moments() {
        let mut r = RngStream::new(11, 0);
        let n = 1_000_000;
        let mut s = 0.0;
        for _ in 0..n {
            s += sample_inverse_gamma(1.0, &mut r).unwrap().ln();
        }
        // E log(1/G) = -psi(1)
        assert!((s / n as f64 - 0.577_215_664_9).abs() < 0.01);
        let mut s = 0.0;
        for _ in 0..n {
            s += sample_inverse_gamma(3.0, &mut r).unwrap();
        }
        assert!((s / n as f64 - 0.5).abs() < 0.01);
    }
}
