//! Probabilistic primality and group parameter generation.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use super::CryptoError;

/// Miller–Rabin rounds; false-positive probability ≤ 4^-64.
pub const MR_ROUNDS: usize = 64;

const MAX_CANDIDATES: usize = 1_000_000;

// moduli up to this many bits get p − 1 factored by trial division
const DIRECT_FACTOR_BITS: u64 = 40;
// bit length of the cofactor h in p = 2hq + 1
const COFACTOR_BITS: u64 = 16;

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

pub fn is_probable_prime<R: Rng + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if *n == sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().expect("n > 2");
    let d = &n_minus_one >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
            if x.is_one() {
                return false;
            }
        }
        return false;
    }
    true
}

/// Uniform odd integer with exactly `bits` bits.
fn random_odd_with_bits<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    let mut c = rng.gen_biguint(bits);
    c.set_bit(bits - 1, true);
    c.set_bit(0, true);
    c
}

/// Random prime with exactly `bits` bits.
pub fn random_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<BigUint, CryptoError> {
    if bits < 2 {
        return Err(CryptoError::PrimeSearchFailure(bits));
    }
    if bits == 2 {
        return Ok(BigUint::from(if rng.gen::<bool>() { 2u32 } else { 3u32 }));
    }
    for _ in 0..MAX_CANDIDATES {
        let c = random_odd_with_bits(bits, rng);
        if is_probable_prime(&c, MR_ROUNDS, rng) {
            return Ok(c);
        }
    }
    Err(CryptoError::PrimeSearchFailure(bits))
}

/// Distinct prime factors of a machine-size integer.
fn trial_factor(mut v: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2u64;
    while f * f <= v {
        if v.is_multiple_of(f) {
            out.push(f);
            while v.is_multiple_of(f) {
                v /= f;
            }
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if v > 1 {
        out.push(v);
    }
    out
}

/// A k-bit prime p together with the distinct prime factors of p − 1.
///
/// Short moduli are factored directly. Longer ones are built as
/// p = 2hq + 1 with q a random prime and h a random 16-bit cofactor, so the
/// factorization of p − 1 is known by construction.
pub fn prime_with_factored_order<R: Rng + ?Sized>(
    bits: u64,
    rng: &mut R,
) -> Result<(BigUint, Vec<BigUint>), CryptoError> {
    if bits <= DIRECT_FACTOR_BITS {
        let p = random_prime(bits, rng)?;
        let pm1 = (&p - 1u32).to_u64().expect("at most 40 bits");
        let factors = trial_factor(pm1).into_iter().map(BigUint::from).collect();
        return Ok((p, factors));
    }
    let q_bits = bits - COFACTOR_BITS - 1;
    for _ in 0..64 {
        let q = random_prime(q_bits, rng)?;
        for _ in 0..MAX_CANDIDATES / 64 {
            let h: u64 = rng.gen_range(1u64 << (COFACTOR_BITS - 1)..1u64 << COFACTOR_BITS);
            let p: BigUint = BigUint::from(2 * h) * &q + 1u32;
            if p.bits() != bits {
                continue;
            }
            if is_probable_prime(&p, MR_ROUNDS, rng) {
                let mut factors: Vec<BigUint> =
                    trial_factor(2 * h).into_iter().map(BigUint::from).collect();
                if !factors.contains(&q) {
                    factors.push(q);
                }
                return Ok((p, factors));
            }
        }
    }
    Err(CryptoError::PrimeSearchFailure(bits))
}

/// A generator of (ℤ/pℤ)* given the prime factors of p − 1.
pub fn find_generator<R: Rng + ?Sized>(
    p: &BigUint,
    factors: &[BigUint],
    rng: &mut R,
) -> Result<BigUint, CryptoError> {
    let pm1 = p - 1u32;
    let two = BigUint::from(2u32);
    if *p == BigUint::from(2u32) {
        return Ok(BigUint::one());
    }
    if *p == BigUint::from(3u32) {
        return Ok(two);
    }
    for _ in 0..MAX_CANDIDATES {
        let g = rng.gen_biguint_range(&two, &pm1);
        if factors.iter().all(|f| {
            let (e, r) = pm1.div_rem(f);
            debug_assert!(r.is_zero());
            !g.modpow(&e, p).is_one()
        }) {
            return Ok(g);
        }
    }
    Err(CryptoError::PrimeSearchFailure(p.bits()))
}
