//! Deterministic pseudo-random generator used for every draw in an election.
//!
//! The generator is splitmix64, seeded directly with the summed seed
//! contribution. Range reduction is done by rejection so that every value
//! below `n` is equally likely given uniform raw output, and permutations are
//! drawn with a descending Fisher-Yates shuffle. Every step here is fixed
//! precisely so independent implementations reproduce identical results.

use crate::error::Error;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 state plus a count of raw outputs consumed so far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
    draws: u64,
}

impl SplitMix64 {
    /// Seeds the generator. The seed becomes the state verbatim.
    pub fn seed(seed: u64) -> Self {
        SplitMix64 {
            state: seed,
            draws: 0,
        }
    }

    /// Current internal state.
    pub fn state(&self) -> u64 {
        self.state
    }

    /// Number of raw outputs consumed since seeding.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn next_raw(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        self.draws += 1;
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `[0, n)`.
    ///
    /// Raw values at or above `2^64 - (2^64 mod n)` are rejected and redrawn,
    /// so the result is exactly uniform. Requires `1 <= n <= 2^63`.
    pub fn uniform_below(&mut self, n: u64) -> Result<u64, Error> {
        if n == 0 || n > 1 << 63 {
            return Err(Error::Precondition(format!(
                "uniform_below requires 1 <= n <= 2^63, got {n}"
            )));
        }
        // 2^64 mod n, computed without 128-bit arithmetic.
        let rem = n.wrapping_neg() % n;
        if rem == 0 {
            return Ok(self.next_raw() % n);
        }
        let limit = rem.wrapping_neg();
        loop {
            let u = self.next_raw();
            if u < limit {
                return Ok(u % n);
            }
        }
    }

    /// Draws a permutation of `0..n`.
    ///
    /// Starts from the identity and, for `i` from `n - 1` down to `1`, swaps
    /// position `i` with `uniform_below(i + 1)`.
    pub fn draw_permutation(&mut self, n: usize) -> Result<Vec<usize>, Error> {
        if n == 0 {
            return Err(Error::Precondition(
                "draw_permutation requires n >= 1".to_string(),
            ));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.uniform_below(i as u64 + 1)? as usize;
            perm.swap(i, j);
        }
        Ok(perm)
    }
}

/// Acceptance threshold for rejection sampling over a raw space of `space`
/// equally likely values: raw values below the threshold are kept.
///
/// `uniform_below` uses this rule with `space = 2^64`; the general form lets
/// the rule be checked exhaustively on a small space.
pub fn rejection_threshold(space: u128, n: u64) -> u128 {
    space - space % n as u128
}
