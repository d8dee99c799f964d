//! Segmented sieve of Eratosthenes over `[lo, hi]`.

/// Entries per sieve block.
pub const BLOCK: usize = 1 << 20;

/// Residue-class filter `n ≡ r (mod m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Residue {
    pub r: u64,
    pub m: u64,
}

impl Residue {
    pub fn new(r: u64, m: u64) -> Self {
        assert!(m > 0 && r < m, "residue filter needs 0 <= r < m");
        Residue { r, m }
    }

    #[inline]
    pub fn contains(&self, n: u64) -> bool {
        n % self.m == self.r
    }
}

/// Primes up to `n` by a plain sieve. Used for base primes.
pub(crate) fn small_primes(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

pub(crate) fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = ((n as f64).sqrt() as u64).min(u32::MAX as u64);
    while x.saturating_mul(x) > n {
        x -= 1;
    }
    while x < u32::MAX as u64 && (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Ascending stream of the primes in `[lo, hi]`, optionally restricted to a
/// residue class. Memory is one block plus the base primes up to `sqrt(hi)`.
pub struct PrimeRange {
    hi: u64,
    filter: Option<Residue>,
    base: Vec<u64>,
    block_lo: u64,
    composite: Vec<bool>,
    len: usize,
    idx: usize,
    exhausted: bool,
}

pub fn primes_in_range(lo: u64, hi: u64, filter: Option<Residue>) -> PrimeRange {
    let lo = lo.max(2);
    let exhausted = lo > hi;
    let base = if exhausted { Vec::new() } else { small_primes(isqrt(hi)) };
    let mut range = PrimeRange { hi, filter, base, block_lo: lo, composite: Vec::new(), len: 0, idx: 0, exhausted };
    if !range.exhausted {
        range.fill();
    }
    range
}

impl PrimeRange {
    fn fill(&mut self) {
        let lo = self.block_lo;
        let span = (self.hi - lo).min(BLOCK as u64 - 1) as usize + 1;
        self.composite.clear();
        self.composite.resize(span, false);
        let end = lo + span as u64 - 1;
        for &p in &self.base {
            let sq = p * p;
            if sq > end {
                break;
            }
            let start = if sq >= lo { sq } else { lo.div_ceil(p) * p };
            let mut j = (start - lo) as usize;
            let step = p as usize;
            while j < span {
                self.composite[j] = true;
                j += step;
            }
        }
        self.len = span;
        self.idx = 0;
    }
}

impl Iterator for PrimeRange {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if self.exhausted {
                return None;
            }
            while self.idx < self.len {
                let i = self.idx;
                self.idx += 1;
                if !self.composite[i] {
                    let n = self.block_lo + i as u64;
                    if n >= 2 && self.filter.is_none_or(|f| f.contains(n)) {
                        return Some(n);
                    }
                }
            }
            let next_lo = self.block_lo + self.len as u64;
            if self.len == 0 || next_lo > self.hi || next_lo < self.block_lo {
                self.exhausted = true;
                return None;
            }
            self.block_lo = next_lo;
            self.fill();
        }
    }
}
