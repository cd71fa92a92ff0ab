/// Deterministic stream of uniform ±1 draws used to break sign ties at exactly zero.
///
/// Draw `k` is a pure function of `(seed, k)`, so two optimizers that consume
/// draws in the same order see identical values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieBreakRng {
    seed: u64,
    draws: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl TieBreakRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, draws: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of draws consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn next_sign(&mut self) -> i8 {
        let bits = splitmix64(splitmix64(self.seed) ^ self.draws);
        self.draws += 1;
        if bits >> 63 == 0 {
            -1
        } else {
            1
        }
    }
}

/// `-1` for negative input, `+1` for positive input, and a random ±1 for an
/// exact zero (either sign of zero). There is no tolerance window.
///
/// One draw is consumed on every call, zero or not, so the draw used for
/// weight `k` at a given step does not depend on the values of other weights.
pub fn stochastic_sign(x: f64, rng: &mut TieBreakRng) -> i8 {
    let draw = rng.next_sign();
    if x < 0.0 {
        -1
    } else if x > 0.0 {
        1
    } else {
        draw
    }
}
