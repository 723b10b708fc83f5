//! Updatable multiplicative ElGamal over (ℤ/pℤ)*.
//!
//! Keys and ciphertexts carry an epoch. `key_update` draws a fresh secret
//! s_{t+1} and emits the token δ = s_{t+1} − s_t mod (p − 1); `ct_update`
//! moves an epoch-t ciphertext to epoch t + 1 as
//! (c₁ g^{r′}, c₂ c₁^δ h_{t+1}^{r′}) with fresh r′. Anyone holding a token
//! and an old secret learns the new one, so tokens must be treated as key
//! material.

use std::sync::Arc;

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::Rng;

use super::prime;
use super::CryptoError;

/// Smallest supported modulus size.
pub const MIN_KEY_BITS: u64 = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupParams {
    /// Prime modulus.
    pub p: BigUint,
    /// Generator of (ℤ/pℤ)*.
    pub g: BigUint,
}

impl GroupParams {
    /// Fresh k-bit prime and a generator of its full multiplicative group.
    pub fn generate<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<Self, CryptoError> {
        let (p, factors) = prime::prime_with_factored_order(bits, rng)?;
        let g = prime::find_generator(&p, &factors, rng)?;
        Ok(Self { p, g })
    }

    pub fn key_bits(&self) -> u64 {
        self.p.bits()
    }

    // exponent uniform in [1, p − 2]
    fn random_exponent<R: Rng + ?Sized>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_range(&BigUint::one(), &(&self.p - 1u32))
    }

    fn contains(&self, x: &BigUint) -> bool {
        *x >= BigUint::one() && *x < self.p
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    pub params: Arc<GroupParams>,
    /// h = g^s mod p.
    pub h: BigUint,
    pub epoch: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub s: BigUint,
    pub epoch: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub pk: PublicKey,
    pub sk: SecretKey,
}

impl KeyPair {
    pub fn epoch(&self) -> u64 {
        self.pk.epoch
    }

    pub fn params(&self) -> &GroupParams {
        &self.pk.params
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub c1: BigUint,
    pub c2: BigUint,
    pub epoch: u64,
}

/// Moves epoch-t ciphertexts to epoch t + 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateToken {
    /// s_{t+1} − s_t mod (p − 1).
    pub delta: BigUint,
    /// Public key of epoch t + 1.
    pub new_pk: PublicKey,
    /// Epoch this token consumes.
    pub epoch: u64,
}

fn check_epoch(expected: u64, got: u64) -> Result<(), CryptoError> {
    if expected != got {
        return Err(CryptoError::EpochMismatch { expected, got });
    }
    Ok(())
}

/// Key pair at epoch 0 over a fresh k-bit group.
pub fn keygen<R: Rng + ?Sized>(key_bits: u64, rng: &mut R) -> Result<KeyPair, CryptoError> {
    if key_bits < MIN_KEY_BITS {
        return Err(CryptoError::KeyLengthTooShort(key_bits));
    }
    let params = Arc::new(GroupParams::generate(key_bits, rng)?);
    Ok(keygen_in(params, rng))
}

/// Key pair at epoch 0 over existing parameters.
pub fn keygen_in<R: Rng + ?Sized>(params: Arc<GroupParams>, rng: &mut R) -> KeyPair {
    let s = params.random_exponent(rng);
    let h = params.g.modpow(&s, &params.p);
    KeyPair {
        pk: PublicKey {
            params,
            h,
            epoch: 0,
        },
        sk: SecretKey { s, epoch: 0 },
    }
}

pub fn enc<R: Rng + ?Sized>(
    pk: &PublicKey,
    m: &BigUint,
    rng: &mut R,
) -> Result<Ciphertext, CryptoError> {
    let gp = &pk.params;
    if !gp.contains(m) {
        return Err(CryptoError::InvalidPlaintext);
    }
    let r = gp.random_exponent(rng);
    Ok(Ciphertext {
        c1: gp.g.modpow(&r, &gp.p),
        c2: m * pk.h.modpow(&r, &gp.p) % &gp.p,
        epoch: pk.epoch,
    })
}

/// m = c₂ · (c₁^s)⁻¹, the inverse taken as c₁^{p−1−s}.
pub fn dec(sk: &SecretKey, params: &GroupParams, ct: &Ciphertext) -> Result<BigUint, CryptoError> {
    check_epoch(sk.epoch, ct.epoch)?;
    if !params.contains(&ct.c1) || !params.contains(&ct.c2) {
        return Err(CryptoError::MalformedCiphertext);
    }
    let exp = &params.p - 1u32 - &sk.s;
    Ok(&ct.c2 * ct.c1.modpow(&exp, &params.p) % &params.p)
}

/// Componentwise product; decrypts to m₁ m₂ mod p.
pub fn eval(pk: &PublicKey, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, CryptoError> {
    check_epoch(pk.epoch, a.epoch)?;
    check_epoch(pk.epoch, b.epoch)?;
    let p = &pk.params.p;
    Ok(Ciphertext {
        c1: &a.c1 * &b.c1 % p,
        c2: &a.c2 * &b.c2 % p,
        epoch: pk.epoch,
    })
}

pub fn key_update<R: Rng + ?Sized>(pair: &KeyPair, rng: &mut R) -> (KeyPair, UpdateToken) {
    let params = Arc::clone(&pair.pk.params);
    let order = &params.p - 1u32;
    let s_new = params.random_exponent(rng);
    let delta = (&s_new + &order - &pair.sk.s % &order) % &order;
    let epoch = pair.epoch() + 1;
    let new_pk = PublicKey {
        h: params.g.modpow(&s_new, &params.p),
        params,
        epoch,
    };
    let token = UpdateToken {
        delta,
        new_pk: new_pk.clone(),
        epoch: pair.epoch(),
    };
    let next = KeyPair {
        pk: new_pk,
        sk: SecretKey { s: s_new, epoch },
    };
    (next, token)
}

pub fn ct_update<R: Rng + ?Sized>(
    ct: &Ciphertext,
    token: &UpdateToken,
    rng: &mut R,
) -> Result<Ciphertext, CryptoError> {
    check_epoch(token.epoch, ct.epoch)?;
    let gp = &token.new_pk.params;
    let p = &gp.p;
    let r = gp.random_exponent(rng);
    let c1 = &ct.c1 * gp.g.modpow(&r, p) % p;
    let c2 = &ct.c2 * ct.c1.modpow(&token.delta, p) % p * token.new_pk.h.modpow(&r, p) % p;
    Ok(Ciphertext {
        c1,
        c2,
        epoch: token.new_pk.epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn small_pair(seed: u64) -> (KeyPair, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let pair = keygen(32, &mut rng).unwrap();
        (pair, rng)
    }

    #[test]
    fn keygen_structure() {
        let (pair, _) = small_pair(1);
        let gp = pair.params();
        assert_eq!(gp.p.bits(), 32);
        assert_eq!(gp.g.modpow(&pair.sk.s, &gp.p), pair.pk.h);
        assert_eq!(pair.epoch(), 0);
    }

    #[test]
    fn keygen_rejects_short_keys() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert_eq!(
            keygen(15, &mut rng).unwrap_err(),
            CryptoError::KeyLengthTooShort(15)
        );
    }

    #[test]
    fn different_seeds_give_different_keys() {
        let (a, _) = small_pair(10);
        let (b, _) = small_pair(11);
        assert!(a.params().p != b.params().p || a.sk.s != b.sk.s);
    }

    #[test]
    fn identity_and_small_products() {
        let (pair, mut rng) = small_pair(2);
        let one = BigUint::one();
        let ct = enc(&pair.pk, &one, &mut rng).unwrap();
        assert_eq!(dec(&pair.sk, pair.params(), &ct).unwrap(), one);
        let c3 = enc(&pair.pk, &BigUint::from(3u32), &mut rng).unwrap();
        let c5 = enc(&pair.pk, &BigUint::from(5u32), &mut rng).unwrap();
        let prod = eval(&pair.pk, &c3, &c5).unwrap();
        assert_eq!(
            dec(&pair.sk, pair.params(), &prod).unwrap().to_u32(),
            Some(15)
        );
        let c1 = eval(&pair.pk, &ct, &c5).unwrap();
        assert_eq!(dec(&pair.sk, pair.params(), &c1).unwrap().to_u32(), Some(5));
    }

    #[test]
    fn plaintext_range_checked() {
        let (pair, mut rng) = small_pair(3);
        let p = pair.params().p.clone();
        assert_eq!(
            enc(&pair.pk, &BigUint::from(0u32), &mut rng),
            Err(CryptoError::InvalidPlaintext)
        );
        assert_eq!(
            enc(&pair.pk, &p, &mut rng),
            Err(CryptoError::InvalidPlaintext)
        );
    }

    #[test]
    fn encryption_is_randomized() {
        let (pair, mut rng) = small_pair(4);
        let m = BigUint::from(1234u32);
        let a = enc(&pair.pk, &m, &mut rng).unwrap();
        let b = enc(&pair.pk, &m, &mut rng).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn exhaustive_correctness_for_16_bit_group() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let pair = keygen(16, &mut rng).unwrap();
        let p = pair.params().p.to_u64().unwrap();
        for m in 1..p {
            let m = BigUint::from(m);
            let ct = enc(&pair.pk, &m, &mut rng).unwrap();
            assert_eq!(dec(&pair.sk, pair.params(), &ct).unwrap(), m);
        }
    }

    #[test]
    fn update_moves_ciphertexts_forward() {
        let (pair, mut rng) = small_pair(6);
        let m = BigUint::from(777u32);
        let ct = enc(&pair.pk, &m, &mut rng).unwrap();
        let (next, token) = key_update(&pair, &mut rng);
        assert_eq!(next.epoch(), 1);
        assert_eq!(token.epoch, 0);
        let moved = ct_update(&ct, &token, &mut rng).unwrap();
        assert_eq!(moved.epoch, 1);
        assert_eq!(dec(&next.sk, next.params(), &moved).unwrap(), m);
        // stale key on new ciphertext
        assert_eq!(
            dec(&pair.sk, pair.params(), &moved),
            Err(CryptoError::EpochMismatch {
                expected: 0,
                got: 1
            })
        );
        // token cannot be applied twice
        assert!(matches!(
            ct_update(&moved, &token, &mut rng),
            Err(CryptoError::EpochMismatch { .. })
        ));
    }

    #[test]
    fn eval_rejects_mixed_epochs() {
        let (pair, mut rng) = small_pair(7);
        let a = enc(&pair.pk, &BigUint::from(2u32), &mut rng).unwrap();
        let (next, token) = key_update(&pair, &mut rng);
        let b = ct_update(&a, &token, &mut rng).unwrap();
        assert!(matches!(
            eval(&next.pk, &a, &b),
            Err(CryptoError::EpochMismatch { .. })
        ));
        assert!(matches!(
            eval(&pair.pk, &a, &b),
            Err(CryptoError::EpochMismatch { .. })
        ));
    }
}
