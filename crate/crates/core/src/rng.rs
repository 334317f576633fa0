use rand_core::RngCore;

/// A uniform draw from the open interval `(0, 1)` using 52 random bits.
#[inline]
pub fn uniform_open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}
