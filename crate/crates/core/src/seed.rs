//! Counter-based seed splitting: each pass draws from its own stream, so
//! adding a pass never shifts the randomness seen by the others.

/// One step of the SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for pass number `pass` under the global seed.
pub fn sub_seed(global: u64, pass: u64) -> u64 {
    splitmix64(global ^ splitmix64(pass.wrapping_add(1)))
}

pub const PASS_PLACEMENT: u64 = 0;
pub const PASS_ROUTING: u64 = 1;
pub const PASS_BENCH: u64 = 2;
