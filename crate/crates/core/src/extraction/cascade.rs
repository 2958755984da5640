//! Original four-pass Cascade.
//!
//! Bits are stored one per byte (`0` or `1`). Every parity Alice reveals is
//! counted in `leaked_bits`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub const PASSES: usize = 4;
/// First-pass block size is `ceil(TOP_BLOCK_FACTOR / qber)`.
pub const TOP_BLOCK_FACTOR: f64 = 0.73;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeOutcome {
    pub corrected: Vec<u8>,
    pub leaked_bits: u64,
    /// Bits flipped in Bob's string.
    pub corrections: u64,
    /// Positions where the corrected string still differs from Alice's.
    pub residual_errors: u64,
}

struct Pass {
    block: usize,
    /// position -> bit index
    order: Vec<u32>,
    /// bit index -> position
    pos: Vec<u32>,
}

impl Pass {
    fn block_range(&self, b: usize, n: usize) -> (usize, usize) {
        (b * self.block, ((b + 1) * self.block).min(n))
    }
}

struct State<'a> {
    alice: &'a [u8],
    bob: Vec<u8>,
    passes: Vec<Pass>,
    leaked: u64,
    corrections: u64,
}

impl State<'_> {
    fn parity(&self, bits: &[u8], pass: &Pass, lo: usize, hi: usize) -> u8 {
        pass.order[lo..hi].iter().fold(0u8, |acc, &i| acc ^ bits[i as usize])
    }

    /// Binary search for one error in `[lo, hi)` of pass `p`, whose parity is
    /// known to differ. Returns the bit index.
    fn locate(&mut self, p: usize, mut lo: usize, mut hi: usize) -> usize {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let pass = &self.passes[p];
            let a = self.parity(self.alice, pass, lo, mid);
            let b = self.parity(&self.bob, pass, lo, mid);
            self.leaked += 1;
            if a != b {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.passes[p].order[lo] as usize
    }

    /// Corrects the block `(p, b)` and everything the correction exposes in
    /// passes `0..=upto`.
    fn correct_cascading(&mut self, p: usize, b: usize, upto: usize) {
        let n = self.bob.len();
        let mut queue = vec![(p, b)];
        while let Some((p, b)) = queue.pop() {
            let (lo, hi) = self.passes[p].block_range(b, n);
            // the block may have been fixed by an earlier correction
            let pass = &self.passes[p];
            if self.parity(self.alice, pass, lo, hi) == self.parity(&self.bob, pass, lo, hi) {
                continue;
            }
            let i = self.locate(p, lo, hi);
            self.bob[i] ^= 1;
            self.corrections += 1;
            for q in 0..=upto {
                if q == p {
                    continue;
                }
                let qb = self.passes[q].pos[i] as usize / self.passes[q].block;
                let (qlo, qhi) = self.passes[q].block_range(qb, n);
                let pass = &self.passes[q];
                if self.parity(self.alice, pass, qlo, qhi) != self.parity(&self.bob, pass, qlo, qhi) {
                    queue.push((q, qb));
                }
            }
        }
    }
}

/// Reconciles `bob_bits` toward `alice_bits`.
pub fn cascade_reconcile(alice_bits: &[u8], bob_bits: &[u8], qber_estimate: f64, seed: u64) -> Result<CascadeOutcome> {
    if alice_bits.len() != bob_bits.len() {
        return domain(format!("bit strings differ in length: {} vs {}", alice_bits.len(), bob_bits.len()));
    }
    if !(qber_estimate > 0.0 && qber_estimate < 0.5) {
        return domain(format!("qber_estimate must lie in (0, 0.5), got {qber_estimate}"));
    }
    if alice_bits.iter().chain(bob_bits).any(|&b| b > 1) {
        return domain("bits must be 0 or 1");
    }
    let n = alice_bits.len();
    if n == 0 {
        return Ok(CascadeOutcome { corrected: Vec::new(), leaked_bits: 0, corrections: 0, residual_errors: 0 });
    }
    if n > u32::MAX as usize {
        return domain("bit strings longer than 2^32 are not supported");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k1 = ((TOP_BLOCK_FACTOR / qber_estimate).ceil() as usize).clamp(1, n);
    let mut st = State {
        alice: alice_bits,
        bob: bob_bits.to_vec(),
        passes: Vec::with_capacity(PASSES),
        leaked: 0,
        corrections: 0,
    };

    for p in 0..PASSES {
        let mut order: Vec<u32> = (0..n as u32).collect();
        if p > 0 {
            order.shuffle(&mut rng);
        }
        let mut pos = vec![0u32; n];
        for (k, &i) in order.iter().enumerate() {
            pos[i as usize] = k as u32;
        }
        let block = k1.saturating_mul(1 << p).min(n);
        st.passes.push(Pass { block, order, pos });
        let blocks = n.div_ceil(block);
        st.leaked += blocks as u64;
        for b in 0..blocks {
            st.correct_cascading(p, b, p);
        }
    }

    let residual_errors = st.bob.iter().zip(alice_bits).filter(|(x, y)| x != y).count() as u64;
    Ok(CascadeOutcome { corrected: st.bob, leaked_bits: st.leaked, corrections: st.corrections, residual_errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::binary_entropy;
    use rand::Rng;

    pub(crate) fn noisy_pair(n: usize, q: f64, seed: u64) -> (Vec<u8>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        let b = a.iter().map(|&x| x ^ (rng.random::<f64>() < q) as u8).collect();
        (a, b)
    }

    #[test]
    fn identical_strings() {
        let (a, _) = noisy_pair(1000, 0.0, 1);
        let out = cascade_reconcile(&a, &a, 0.01, 2).unwrap();
        assert_eq!(out.corrections, 0);
        assert_eq!(out.corrected, a);
        // 74-bit first blocks over 1000 bits: 14 + 7 + 4 + 2 parities
        assert_eq!(out.leaked_bits, 14 + 7 + 4 + 2);
    }

    #[test]
    fn corrects_typical_errors() {
        let (a, b) = noisy_pair(10_000, 0.05, 3);
        let out = cascade_reconcile(&a, &b, 0.05, 4).unwrap();
        assert!(out.residual_errors <= 10);
        assert!(out.leaked_bits as f64 >= binary_entropy(0.05) * 10_000.0);
        assert!((out.leaked_bits as f64) < 1.5 * binary_entropy(0.05) * 10_000.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(cascade_reconcile(&[0, 1], &[0], 0.1, 0).is_err());
        assert!(cascade_reconcile(&[0], &[0], 0.0, 0).is_err());
        assert!(cascade_reconcile(&[0], &[2], 0.1, 0).is_err());
    }

    #[test]
    fn deterministic() {
        let (a, b) = noisy_pair(5000, 0.03, 5);
        assert_eq!(cascade_reconcile(&a, &b, 0.03, 6).unwrap(), cascade_reconcile(&a, &b, 0.03, 6).unwrap());
    }
}
