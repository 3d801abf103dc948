//! Small numeric helpers shared across modules.

/// `ln(sum(exp(xs)))` with the max-shift trick. Returns `-inf` for an empty
/// slice or when every term is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if xs.len() == 1 {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Normalizes log-weights in place into probabilities and returns the
/// log normalizer.
pub fn normalize_log_weights(ws: &mut [f64]) -> f64 {
    let lse = log_sum_exp(ws);
    if lse == f64::NEG_INFINITY {
        return lse;
    }
    for w in ws.iter_mut() {
        *w = (*w - lse).exp();
    }
    lse
}

/// Index of the largest element; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// splitmix64 finalizer, used to derive independent child seeds.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed, a stream tag and an index.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)) ^ index)
}

pub(crate) mod streams {
    pub const RESTART: u64 = 1;
    pub const CANDIDATE: u64 = 2;
    pub const FOLD: u64 = 3;
    pub const TRAIN_SAMPLE: u64 = 4;
    pub const TEST_SAMPLE: u64 = 5;
    pub const FIT: u64 = 6;
}
