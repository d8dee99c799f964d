//! Exact prefix character sums and everything built directly on them:
//! class numbers, the weighted sum `S_q`, the lattice integers `W(a)`,
//! `T(q)` and `W(q, x)`.
//!
//! Notation used throughout the crate:
//!
//! * `A(a) = Σ_{n<=a} χ_q(n)`
//! * `B(a) = Σ_{n<=a} n χ_q(n)`
//! * `W(a) = a (h - A(a)) + B(a)`, so that `f_q(a/q) = 2π² W(a) / q^{3/2}`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{CheckedWide, Error, Result};
use crate::ntcore::{is_prime, ChiStream, QuadChar, Rational, ResidueBitmap};

/// Streaming accumulators `A`, `B` and optionally `C(a) = Σ n² χ(n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixSums {
    q: u64,
    upto: u64,
    a: i128,
    b: i128,
    c: Option<i128>,
}

impl PrefixSums {
    pub fn new(q: u64, with_squares: bool) -> Self {
        PrefixSums { q, upto: 0, a: 0, b: 0, c: with_squares.then_some(0) }
    }

    /// Feeds `χ(upto + 1)`.
    #[inline]
    pub fn push(&mut self, chi: i8) -> Result<()> {
        let n = (self.upto + 1) as i128;
        let c = chi as i128;
        self.a += c;
        self.b = self.b.add_or(n * c, "B(a)")?;
        if let Some(sq) = self.c.as_mut() {
            *sq = sq.add_or(n.mul_or(n, "n^2")? * c, "C(a)")?;
        }
        self.upto += 1;
        Ok(())
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn upto(&self) -> u64 {
        self.upto
    }

    pub fn a(&self) -> i128 {
        self.a
    }

    pub fn b(&self) -> i128 {
        self.b
    }

    pub fn c(&self) -> Option<i128> {
        self.c
    }
}

/// `A(upto)`, `B(upto)` (and `C` when asked) in one pass.
pub fn prefix_sums(chi: &QuadChar, upto: u64, with_squares: bool) -> Result<PrefixSums> {
    let mut acc = PrefixSums::new(chi.modulus(), with_squares);
    let mut stream = ChiStream::new(chi, upto);
    while let Some((_, block)) = stream.next_block() {
        for &c in block {
            acc.push(c)?;
        }
    }
    Ok(acc)
}

/// Random-access `A(k)`, `B(k)` for `0 <= k <= upto`. Memory is `O(upto)`.
#[derive(Debug, Clone)]
pub struct PrefixTable {
    q: u64,
    a: Vec<i64>,
    b: Vec<i128>,
}

impl PrefixTable {
    pub fn new(chi: &QuadChar, upto: u64) -> Result<Self> {
        let mut a = Vec::with_capacity(upto as usize + 1);
        let mut b = Vec::with_capacity(upto as usize + 1);
        a.push(0i64);
        b.push(0i128);
        let (mut sa, mut sb) = (0i64, 0i128);
        let mut stream = ChiStream::new(chi, upto);
        while let Some((lo, block)) = stream.next_block() {
            for (i, &c) in block.iter().enumerate() {
                let n = lo + i as u64;
                sa += c as i64;
                sb = sb.add_or(n as i128 * c as i128, "B(a)")?;
                a.push(sa);
                b.push(sb);
            }
        }
        Ok(PrefixTable { q: chi.modulus(), a, b })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn upto(&self) -> u64 {
        self.a.len() as u64 - 1
    }

    #[inline]
    pub fn a(&self, k: u64) -> i128 {
        self.a[k as usize] as i128
    }

    #[inline]
    pub fn b(&self, k: u64) -> i128 {
        self.b[k as usize]
    }

    /// `W(k) = k (h - A(k)) + B(k)`.
    #[inline]
    pub fn w(&self, h: i128, k: u64) -> i128 {
        k as i128 * (h - self.a(k)) + self.b(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassNumber {
    pub q: u64,
    pub h: u64,
    /// `A((q-1)/2)`
    pub a_half: i128,
    /// `B((q-1)/2)`
    pub b_half: i128,
}

impl ClassNumber {
    /// `L(1, χ_q) = π h / √q`, for reporting only.
    pub fn l_value(&self) -> f64 {
        PI * self.h as f64 / (self.q as f64).sqrt()
    }
}

/// `h(q) = A((q-1)/2) - 2 B((q-1)/2) / q`, which is `S_q(q/2)`.
pub fn class_number(chi: &QuadChar) -> Result<ClassNumber> {
    let q = chi.modulus();
    let half = prefix_sums(chi, (q - 1) / 2, false)?;
    class_number_from_halves(q, half.a(), half.b())
}

pub(crate) fn class_number_from_halves(q: u64, a_half: i128, b_half: i128) -> Result<ClassNumber> {
    let qi = q as i128;
    let num = qi.mul_or(a_half, "q A")? - 2 * b_half;
    let (h, rem) = num.div_rem(&qi);
    if rem != 0 || h <= 0 {
        return Err(Error::Invariant(format!("class number for q={q} is not a positive integer (qA - 2B = {num})")));
    }
    Ok(ClassNumber { q, h: h as u64, a_half, b_half })
}

/// `S_q(t) = Σ_{n<=t} χ(n)(1 - n/t) = A(⌊t⌋) - B(⌊t⌋)/t`, exactly.
pub fn s_q(chi: &QuadChar, t: &Rational) -> Result<Rational> {
    if !t.is_positive() {
        return Err(Error::Precondition(format!("S_q needs t > 0, got {t}")));
    }
    let m = t.floor().to_u64().ok_or(Error::Overflow("floor(t)"))?;
    if m == 0 {
        return Ok(Rational::zero());
    }
    let acc = prefix_sums(chi, m, false)?;
    Ok(Rational::integer(acc.a()) - Rational::integer(acc.b()) / t.clone())
}

/// One point of the `W` lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticePoint {
    pub a: u64,
    /// `A(a)`
    pub a_sum: i128,
    /// `B(a)`
    pub b_sum: i128,
    pub w: i128,
}

/// Stream of `W(a)` for `a = 1..=⌊q/2⌋`.
pub struct WLattice {
    h: i128,
    stream: ChiStream,
    block: Vec<i8>,
    pos: usize,
    next_a: u64,
    a_sum: i128,
    b_sum: i128,
}

impl WLattice {
    pub fn new(chi: &QuadChar, h: u64) -> Self {
        WLattice {
            h: h as i128,
            stream: ChiStream::new(chi, chi.modulus() / 2),
            block: Vec::new(),
            pos: 0,
            next_a: 1,
            a_sum: 0,
            b_sum: 0,
        }
    }
}

impl Iterator for WLattice {
    type Item = LatticePoint;

    fn next(&mut self) -> Option<LatticePoint> {
        if self.pos == self.block.len() {
            let (_, block) = self.stream.next_block()?;
            self.block.clear();
            self.block.extend_from_slice(block);
            self.pos = 0;
        }
        let c = self.block[self.pos] as i128;
        self.pos += 1;
        let a = self.next_a;
        self.next_a += 1;
        self.a_sum += c;
        // |B| <= q^2 / 8 for a <= q / 2, far inside i128.
        self.b_sum += a as i128 * c;
        let w = a as i128 * (self.h - self.a_sum) + self.b_sum;
        Some(LatticePoint { a, a_sum: self.a_sum, b_sum: self.b_sum, w })
    }
}

/// Summary of the `W` lattice over `a = 1..=⌊q/2⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WProfile {
    pub q: u64,
    pub h: u64,
    pub len: u64,
    pub min_w: i128,
    /// Smallest `a` attaining `min_w`.
    pub argmin: u64,
    /// `max_a |A(a)|`, for the Pólya–Vinogradov diagnostic.
    pub max_abs_a: i128,
}

impl WProfile {
    /// `max |A| / (2 √q ln q)`; below 1 whenever the classical bound holds.
    pub fn polya_vinogradov_ratio(&self) -> f64 {
        let q = self.q as f64;
        self.max_abs_a as f64 / (2.0 * q.sqrt() * q.ln())
    }
}

/// Min and argmin of `W` in a single pass using `W(a) = W(a-1) + h - A(a-1)`.
pub fn w_profile(chi: &QuadChar, h: &ClassNumber) -> Result<WProfile> {
    let q = chi.modulus();
    if h.q != q {
        return Err(Error::Precondition("class number belongs to another modulus".into()));
    }
    let hh = h.h as i128;
    let len = q / 2;
    // W(a) <= (q/2)(h + q/2) < q^2 for any u64 q, so i128 never overflows here.
    let mut w: i128 = 0;
    let mut a_prev: i64 = 0;
    let mut max_abs_a: i64 = 0;
    let mut min_w = i128::MAX;
    let mut argmin = 0u64;
    let mut stream = ChiStream::new(chi, len);
    while let Some((lo, block)) = stream.next_block() {
        for (idx, &c) in (lo..).zip(block) {
            w += hh - a_prev as i128;
            a_prev += c as i64;
            max_abs_a = max_abs_a.max(a_prev.abs());
            if w < min_w {
                min_w = w;
                argmin = idx;
            }
        }
    }
    if len == 0 {
        min_w = 0;
    }
    Ok(WProfile { q, h: h.h, len, min_w, argmin, max_abs_a: max_abs_a as i128 })
}

/// Min and argmin of `W` over `1..=⌊q/2⌋`, computing `h` on the way.
/// The values themselves are available lazily from [`WLattice`].
pub fn w_lattice(chi: &QuadChar) -> Result<WProfile> {
    class_number_and_profile(chi).map(|(_, p)| p)
}

/// Class number of a prime `q` from its residue bitmap, via
/// `A((q-1)/2) = (2 - χ(2)) h`; `B((q-1)/2)` then follows from
/// `h = A - 2B/q`.
pub fn class_number_bitmap(map: &ResidueBitmap) -> Result<ClassNumber> {
    let q = map.modulus();
    let half = (q - 1) / 2;
    let a_half = 2 * map.count_residues(half) as i128 - half as i128;
    let d = 2 - map.chi(2) as i128;
    if a_half <= 0 || a_half % d != 0 {
        return Err(Error::Invariant(format!("A((q-1)/2) = {a_half} is not a positive multiple of {d} for q={q}")));
    }
    let h = a_half / d;
    Ok(ClassNumber { q, h: h as u64, a_half, b_half: q as i128 * (a_half - h) / 2 })
}

/// [`w_profile`] reading `χ` straight from the bitmap words.
pub fn w_profile_bitmap(map: &ResidueBitmap, h: &ClassNumber) -> Result<WProfile> {
    let q = map.modulus();
    if h.q != q {
        return Err(Error::Precondition("class number belongs to another modulus".into()));
    }
    let hh = h.h as i128;
    let len = q / 2;
    let words = map.words();
    let mut w: i128 = 0;
    let mut a_prev: i64 = 0;
    let mut max_abs_a: i64 = 0;
    let mut min_w = i128::MAX;
    let mut argmin = 0u64;
    let mut n = 1u64;
    while n <= len {
        let wi = (n >> 6) as usize;
        let end = ((wi as u64 + 1) << 6).min(len + 1);
        let mut word = words[wi] >> (n & 63);
        // 0 < n < q, so χ(n) = ±1
        while n < end {
            let c = ((word & 1) as i64) * 2 - 1;
            word >>= 1;
            w += hh - a_prev as i128;
            a_prev += c;
            max_abs_a = max_abs_a.max(a_prev.abs());
            if w < min_w {
                min_w = w;
                argmin = n;
            }
            n += 1;
        }
    }
    if len == 0 {
        min_w = 0;
    }
    Ok(WProfile { q, h: h.h, len, min_w, argmin, max_abs_a: max_abs_a as i128 })
}

/// Class number and `W` profile together, building the residue bitmap once
/// when `q` is prime.
pub fn class_number_and_profile(chi: &QuadChar) -> Result<(ClassNumber, WProfile)> {
    match ResidueBitmap::new(chi) {
        Some(map) => {
            let h = class_number_bitmap(&map)?;
            let p = w_profile_bitmap(&map, &h)?;
            Ok((h, p))
        }
        None => {
            let h = class_number(chi)?;
            let p = w_profile(chi, &h)?;
            Ok((h, p))
        }
    }
}

/// `T(q) = Σ_{n<=q/4} n χ_q(n)` for a prime `q ≡ 7 (mod 8)`.
pub fn t_stat(q: u64) -> Result<i128> {
    if q % 8 != 7 || !is_prime(q) {
        return Err(Error::Precondition(format!("T(q) needs a prime q = 7 mod 8, got {q}")));
    }
    let chi = QuadChar::new(q)?;
    Ok(prefix_sums(&chi, q / 4, false)?.b())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WRational {
    /// `W(q, x) = h - S_q(q x)` in lowest terms.
    pub value: Rational,
    /// Whether `q` divides the numerator of `value` (0 counts as divisible).
    pub q_divides_numerator: bool,
}

/// `W(q, x) = h(q) - S_q(q x)` for rational `0 < x < 1/2`.
pub fn w_rational(chi: &QuadChar, h: &ClassNumber, x: &Rational) -> Result<WRational> {
    if !x.is_positive() || *x >= Rational::ratio(1, 2) {
        return Err(Error::Precondition(format!("W(q, x) needs 0 < x < 1/2, got {x}")));
    }
    let t = x * &Rational::integer(chi.modulus());
    let value = Rational::integer(h.h) - s_q(chi, &t)?;
    let divisible = (value.numer() % BigInt::from(chi.modulus())) == BigInt::from(0);
    Ok(WRational { value, q_divides_numerator: divisible })
}

/// Every reduced `x = a/r` with `r <= max_den`, `0 < x < 1/2` whose
/// `W(q, x)` numerator is divisible by `q`.
pub fn w_divisibility_scan(chi: &QuadChar, h: &ClassNumber, max_den: u64) -> Result<Vec<(Rational, Rational)>> {
    let q = chi.modulus();
    let table = PrefixTable::new(chi, q / 2)?;
    let qb = BigInt::from(q);
    let mut hits = Vec::new();
    for r in 3..=max_den {
        for a in 1..r {
            if 2 * a >= r || a.gcd(&r) != 1 {
                continue;
            }
            // S_q(qa/r) = A(k) - B(k) r / (q a), k = ⌊qa/r⌋
            let k = q * a / r;
            let value = Rational::integer(h.h as i128 - table.a(k))
                + Rational::new(BigInt::from(table.b(k)) * r, BigInt::from(q) * a)?;
            if value.numer() % &qb == BigInt::from(0) {
                hits.push((Rational::ratio(a as i128, r as i128), value));
            }
        }
    }
    Ok(hits)
}

/// Partial-sum bound `S_q(N) <= h` in cross-multiplied form, `W(N) >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuarterMargin {
    pub q: u64,
    pub holds: bool,
    /// `min_{1<=N<=⌊q/4⌋} W(N)`
    pub min_w: i128,
    pub argmin: u64,
    /// Same minimum over `⌊q/4⌋ < N <= ⌊q/2⌋`; reported, never asserted.
    pub beyond_quarter_min: Option<(i128, u64)>,
}

pub fn inequality7_margin(chi: &QuadChar, h: &ClassNumber) -> Result<QuarterMargin> {
    let quarter = chi.modulus() / 4;
    let mut lo = (i128::MAX, 0u64);
    let mut hi: Option<(i128, u64)> = None;
    for p in WLattice::new(chi, h.h) {
        if p.a <= quarter {
            if p.w < lo.0 {
                lo = (p.w, p.a);
            }
        } else if hi.is_none_or(|(w, _)| p.w < w) {
            hi = Some((p.w, p.a));
        }
    }
    if quarter == 0 {
        lo = (0, 0);
    }
    Ok(QuarterMargin { q: chi.modulus(), holds: lo.0 >= 0, min_w: lo.0, argmin: lo.1, beyond_quarter_min: hi })
}
