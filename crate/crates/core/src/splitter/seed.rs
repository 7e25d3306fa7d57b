/// Stable seed derivation: FNV-1a over the master seed, the coordinates and
/// the tag, finished with a SplitMix64 avalanche. Independent of platform
/// and of `std` hasher changes.
pub fn derive_seed(master: u64, coordinates: &[u64], tag: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0100_0000_01b3;
    let mut h = OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    eat(&master.to_le_bytes());
    for c in coordinates {
        eat(&c.to_le_bytes());
    }
    eat(&(tag.len() as u64).to_le_bytes());
    eat(tag.as_bytes());
    splitmix(h)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
