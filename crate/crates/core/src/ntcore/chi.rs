use std::fmt;

use crate::error::{Error, Result};
use crate::ntcore::jacobi::jacobi_odd;
use crate::ntcore::primality::factorize;
use crate::ntcore::sieve::{isqrt, small_primes, BLOCK};

/// The real character `χ_q(n) = (n | q)` for a squarefree modulus
/// `q ≡ 3 (mod 4)`, `q > 3`.
///
/// Most of the positivity machinery wants `χ_q(2) = -1`, i.e. `q ≡ 3 (mod 8)`;
/// callers that need it check [`QuadChar::is_three_mod_eight`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadChar {
    q: u64,
    factorization: Vec<(u64, u32)>,
}

impl QuadChar {
    pub fn new(q: u64) -> Result<Self> {
        if q <= 3 {
            return Err(Error::InvalidModulus { q, reason: "modulus must exceed 3" });
        }
        if q % 4 != 3 {
            return Err(Error::InvalidModulus { q, reason: "modulus must be 3 mod 4" });
        }
        let factorization = factorize(q);
        if factorization.iter().any(|&(_, e)| e > 1) {
            return Err(Error::InvalidModulus { q, reason: "modulus must be squarefree" });
        }
        Ok(QuadChar { q, factorization })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn factorization(&self) -> &[(u64, u32)] {
        &self.factorization
    }

    pub fn is_prime(&self) -> bool {
        self.factorization.len() == 1
    }

    /// `q ≡ 3 (mod 8)`, equivalently `χ_q(2) = -1`.
    pub fn is_three_mod_eight(&self) -> bool {
        self.q % 8 == 3
    }

    /// Like [`QuadChar::new`] but additionally insists on `q ≡ 3 (mod 8)`.
    pub fn new_three_mod_eight(q: u64) -> Result<Self> {
        let chi = Self::new(q)?;
        if !chi.is_three_mod_eight() {
            return Err(Error::InvalidModulus { q, reason: "modulus must be 3 mod 8" });
        }
        Ok(chi)
    }

    /// `χ_q(n)` for any integer `n`.
    #[inline]
    pub fn chi(&self, n: i64) -> i8 {
        let r = (n as i128).rem_euclid(self.q as i128) as u64;
        jacobi_odd(r, self.q)
    }

    /// `χ_q(n)` for every residue `0..q`. Memory is `q` bytes.
    pub fn residue_table(&self) -> Vec<i8> {
        let mut t = Vec::with_capacity(self.q as usize);
        let mut blocks = ChiStream::new(self, self.q - 1);
        t.push(0);
        while let Some((_, block)) = blocks.next_block() {
            t.extend_from_slice(block);
        }
        t
    }
}

impl fmt::Display for QuadChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "χ_{}", self.q)
    }
}

/// Block-segmented multiplicative sieve for `χ_q(1..=limit)`.
///
/// Small primes `p <= sqrt(limit)` are sieved with their character value;
/// whatever cofactor is left is a single large prime whose value comes from
/// the Jacobi symbol.
pub struct ChiBlocks {
    q: u64,
    limit: u64,
    base: Vec<(u64, i8)>,
    next_lo: u64,
    values: Vec<i8>,
    smooth: Vec<u64>,
}

impl ChiBlocks {
    pub fn new(chi: &QuadChar, limit: u64) -> Self {
        let q = chi.modulus();
        let base = small_primes(isqrt(limit)).into_iter().map(|p| (p, jacobi_odd(p, q))).collect();
        ChiBlocks {
            q,
            limit,
            base,
            next_lo: 1,
            values: Vec::with_capacity(BLOCK.min(limit as usize)),
            smooth: Vec::with_capacity(BLOCK.min(limit as usize)),
        }
    }

    /// Next block as `(first n, values)`.
    pub fn next_block(&mut self) -> Option<(u64, &[i8])> {
        if self.next_lo > self.limit || self.limit == 0 {
            return None;
        }
        let lo = self.next_lo;
        let span = (self.limit - lo).min(BLOCK as u64 - 1) as usize + 1;
        let hi = lo + span as u64 - 1;
        self.values.clear();
        self.values.resize(span, 1);
        self.smooth.clear();
        self.smooth.resize(span, 1);

        for &(p, cp) in &self.base {
            let mut pk = p;
            loop {
                let first = lo.div_ceil(pk) * pk;
                let mut j = (first - lo) as usize;
                let step = pk as usize;
                while j < span {
                    self.values[j] *= cp;
                    self.smooth[j] *= p;
                    j += step;
                }
                match pk.checked_mul(p) {
                    Some(next) if next <= hi => pk = next,
                    _ => break,
                }
            }
        }

        let q = self.q;
        for (i, (v, &s)) in self.values.iter_mut().zip(self.smooth.iter()).enumerate() {
            let n = lo + i as u64;
            if s != n && *v != 0 {
                *v *= jacobi_odd(n / s, q);
            }
        }
        self.next_lo = hi + 1;
        Some((lo, &self.values))
    }
}

/// `χ_q(n)` for `n = 1..=limit` as a stream.
pub struct ChiSieve {
    blocks: ChiBlocks,
    buf: Vec<i8>,
    pos: usize,
}

pub fn chi_sieve(chi: &QuadChar, limit: u64) -> ChiSieve {
    ChiSieve { blocks: ChiBlocks::new(chi, limit), buf: Vec::new(), pos: 0 }
}

impl Iterator for ChiSieve {
    type Item = i8;

    #[inline]
    fn next(&mut self) -> Option<i8> {
        if self.pos == self.buf.len() {
            let (_, block) = self.blocks.next_block()?;
            self.buf.clear();
            self.buf.extend_from_slice(block);
            self.pos = 0;
        }
        let v = self.buf[self.pos];
        self.pos += 1;
        Some(v)
    }
}

/// Largest prime modulus for which [`ChiStream`] builds a residue bitmap
/// (`q / 8` bytes, 512 MiB at the cap).
pub const BITMAP_MAX_MODULUS: u64 = 1 << 32;

/// Quadratic residues of a prime `q`, one bit per residue class, built by
/// marking `k^2 mod q` for `k = 1..=(q-1)/2`.
pub struct ResidueBitmap {
    q: u64,
    bits: Vec<u64>,
}

impl ResidueBitmap {
    pub fn new(chi: &QuadChar) -> Option<Self> {
        let q = chi.modulus();
        if !chi.is_prime() || q > BITMAP_MAX_MODULUS {
            return None;
        }
        let mut bits = vec![0u64; q.div_ceil(64) as usize];
        let mut square = 0u64;
        let mut odd = 1u64;
        for _ in 1..=(q - 1) / 2 {
            // square = k^2 mod q, odd = 2k - 1 mod q
            square += odd;
            // branchless: the comparison is unpredictable
            square -= q & 0u64.wrapping_sub((square >= q) as u64);
            bits[(square >> 6) as usize] |= 1 << (square & 63);
            odd += 2;
            if odd >= q {
                odd -= q;
            }
        }
        Some(ResidueBitmap { q, bits })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Bit `r` is set iff `r` is a nonzero square mod `q`.
    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    /// Number of quadratic residues in `1..=upto`, `upto < q`.
    pub fn count_residues(&self, upto: u64) -> u64 {
        assert!(upto < self.q, "count_residues needs upto < q");
        let full = ((upto + 1) >> 6) as usize;
        let mut count: u64 = self.bits[..full].iter().map(|w| w.count_ones() as u64).sum();
        let rest = (upto + 1) & 63;
        if rest > 0 {
            count += (self.bits[full] & ((1u64 << rest) - 1)).count_ones() as u64;
        }
        count
    }

    #[inline]
    pub fn chi(&self, n: u64) -> i8 {
        let r = n % self.q;
        if r == 0 {
            0
        } else if self.bits[(r >> 6) as usize] >> (r & 63) & 1 == 1 {
            1
        } else {
            -1
        }
    }
}

/// Blocks of `χ_q(1..=limit)` from whichever exact source is cheapest: the
/// residue bitmap for prime moduli up to [`BITMAP_MAX_MODULUS`], the
/// segmented sieve otherwise.
pub enum ChiStream {
    Bitmap { map: ResidueBitmap, limit: u64, next_lo: u64, values: Vec<i8> },
    Sieve(ChiBlocks),
}

impl ChiStream {
    pub fn new(chi: &QuadChar, limit: u64) -> Self {
        match ResidueBitmap::new(chi) {
            Some(map) => {
                ChiStream::Bitmap { map, limit, next_lo: 1, values: Vec::with_capacity(BLOCK.min(limit as usize)) }
            }
            None => ChiStream::Sieve(ChiBlocks::new(chi, limit)),
        }
    }

    /// Forces the segmented sieve regardless of modulus.
    pub fn sieve_only(chi: &QuadChar, limit: u64) -> Self {
        ChiStream::Sieve(ChiBlocks::new(chi, limit))
    }

    pub fn next_block(&mut self) -> Option<(u64, &[i8])> {
        match self {
            ChiStream::Sieve(b) => b.next_block(),
            ChiStream::Bitmap { map, limit, next_lo, values } => {
                if *next_lo > *limit {
                    return None;
                }
                let lo = *next_lo;
                let hi = (*limit).min(lo + BLOCK as u64 - 1);
                values.clear();
                // walk the residue instead of reducing every n
                let q = map.q;
                let mut r = lo % q;
                for _ in lo..=hi {
                    values.push(if r == 0 {
                        0
                    } else if map.bits[(r >> 6) as usize] >> (r & 63) & 1 == 1 {
                        1
                    } else {
                        -1
                    });
                    r += 1;
                    if r == q {
                        r = 0;
                    }
                }
                *next_lo = hi + 1;
                Some((lo, values.as_slice()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ntcore::jacobi::jacobi;
    use rand::{Rng, SeedableRng};

    #[test]
    fn validation() {
        assert!(QuadChar::new(3).is_err());
        assert!(QuadChar::new(5).is_err());
        assert!(QuadChar::new(9).is_err());
        assert!(QuadChar::new(99).is_err()); // 9 * 11
        assert!(QuadChar::new(7).is_ok());
        assert!(QuadChar::new_three_mod_eight(2647).is_err());
        assert!(QuadChar::new_three_mod_eight(163).is_ok());
        assert!(QuadChar::new(11).unwrap().is_prime());
        let c = QuadChar::new(35).unwrap();
        assert!(!c.is_prime());
        assert_eq!(c.factorization(), &[(5, 1), (7, 1)]);
    }

    #[test]
    fn first_values_163() {
        let chi = QuadChar::new(163).unwrap();
        let v: Vec<i8> = chi_sieve(&chi, 9).collect();
        assert_eq!(v, vec![1, -1, -1, 1, -1, 1, -1, -1, 1]);
    }

    #[test]
    fn zero_on_common_factor() {
        let chi = QuadChar::new(11).unwrap();
        let v: Vec<i8> = chi_sieve(&chi, 22).collect();
        assert_eq!(v[10], 0);
        assert_eq!(v[21], 0);
        let c35 = QuadChar::new(35).unwrap();
        for (i, v) in chi_sieve(&c35, 200).enumerate() {
            let n = i as u64 + 1;
            assert_eq!(v == 0, n % 5 == 0 || n % 7 == 0);
        }
    }

    #[test]
    fn sieve_matches_direct_jacobi() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for q in [11u64, 35, 163, 2647, 1_000_003] {
            let chi = QuadChar::new(q).unwrap();
            let m = 3 * BLOCK as u64 + 123;
            let vals: Vec<i8> = chi_sieve(&chi, m).collect();
            assert_eq!(vals.len() as u64, m);
            for _ in 0..1000 {
                let n = rng.gen_range(1..=m);
                assert_eq!(vals[n as usize - 1], jacobi(n as i64, q as i64).unwrap(), "q={q} n={n}");
            }
        }
    }

    #[test]
    fn bitmap_agrees_with_segmented_sieve() {
        for q in [7u64, 11, 19, 163, 2647, 1_000_003] {
            let chi = QuadChar::new(q).unwrap();
            let limit = (q / 2).max(3 * BLOCK as u64 / 2);
            let mut a = ChiStream::new(&chi, limit);
            assert!(matches!(a, ChiStream::Bitmap { .. }));
            let mut fast = Vec::new();
            while let Some((_, v)) = a.next_block() {
                fast.extend_from_slice(v);
            }
            let slow: Vec<i8> = chi_sieve(&chi, limit).collect();
            assert_eq!(fast, slow, "q={q}");
        }
        assert!(matches!(ChiStream::new(&QuadChar::new(35).unwrap(), 10), ChiStream::Sieve(_)));
    }

    #[test]
    fn oddness_exhaustive_small_moduli() {
        for q in (7..10_000u64).step_by(4) {
            let Ok(chi) = QuadChar::new(q) else { continue };
            let t = chi.residue_table();
            for n in 1..q as usize {
                assert_eq!(t[q as usize - n], -t[n]);
            }
        }
    }
}
