//! Evaluators for `f_q(x) = Σ χ_q(n) sin(2πnx) / n²`.
//!
//! The exact evaluator uses the piecewise-linear form: on `[a/q, (a+1)/q]`
//!
//! ```text
//! f_q(x) = (2π² / √q) · ( x (h - A(a)) + B(a) / q )
//! ```
//!
//! and every value is carried as the rational coefficient of `2π²/√q`.
//! Floats appear only when rendering.

use std::f64::consts::PI;

use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::charsum::{class_number, prefix_sums, ClassNumber, PrefixTable, WLattice};
use crate::error::{CheckedWide, Error, Result};
use crate::ntcore::{chi_sieve, is_prime, ChiStream, QuadChar, Rational};

/// `2π² / √q`, the factor every exact coefficient is multiplied by.
pub fn scale(q: u64) -> f64 {
    2.0 * PI * PI / (q as f64).sqrt()
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `sin(2π t)`, exactly zero when `t` is an integer or half-integer.
#[inline]
pub(crate) fn sin_2pi(t: f64) -> f64 {
    let r = t - t.floor();
    if r == 0.0 || r == 0.5 {
        return 0.0;
    }
    (2.0 * PI * r).sin()
}

/// A truncated series together with its certified tail bound `1/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: u64,
}

impl SeriesValue {
    /// Rounding slack allowed on top of the tail bound.
    pub fn slop(&self) -> f64 {
        1e-12 * self.terms as f64
    }
}

/// Exact value `f_q(x) = coefficient · 2π²/√q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FqValue {
    pub coefficient: Rational,
    pub value: f64,
}

/// Piecewise-linear representation of `f_q` on `[0, 1/2]`, with prefix sums
/// held in memory for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearFq {
    q: u64,
    h: u64,
    table: PrefixTable,
}

impl PiecewiseLinearFq {
    pub fn new(chi: &QuadChar) -> Result<Self> {
        let q = chi.modulus();
        let table = PrefixTable::new(chi, q.div_ceil(2))?;
        let half = (q - 1) / 2;
        let h = crate::charsum::class_number_from_halves(q, table.a(half), table.b(half))?;
        Ok(PiecewiseLinearFq { q, h: h.h, table })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn class_number(&self) -> u64 {
        self.h
    }

    pub fn table(&self) -> &PrefixTable {
        &self.table
    }

    /// Number of pieces covering `[0, 1/2]`; piece `a` is `[a/q, (a+1)/q]`
    /// except the last, which ends at `1/2`.
    pub fn pieces(&self) -> u64 {
        self.q / 2 + 1
    }

    /// `(slope, intercept)` of piece `a` as coefficients of `2π²/√q`:
    /// slope `h - A(a)`, intercept `B(a)/q`.
    pub fn piece(&self, a: u64) -> (i128, Rational) {
        let slope = self.h as i128 - self.table.a(a);
        let intercept = Rational::ratio(self.table.b(a), self.q as i128);
        (slope, intercept)
    }

    /// `W(a)`, i.e. `q` times the coefficient at the breakpoint `a/q`.
    pub fn w(&self, a: u64) -> i128 {
        self.table.w(self.h as i128, a)
    }

    /// Exact coefficient for `0 <= x <= 1`.
    pub fn coefficient(&self, x: &Rational) -> Result<Rational> {
        if x.is_negative() || *x > Rational::one() {
            return Err(Error::Precondition(format!("f_q evaluated outside [0, 1]: {x}")));
        }
        let half = Rational::ratio(1, 2);
        if *x > half {
            return Ok(-self.coefficient(&(Rational::one() - x.clone()))?);
        }
        let k = (x * &Rational::integer(self.q)).floor().to_u64().ok_or(Error::Overflow("qx"))?;
        let (slope, intercept) = self.piece(k);
        Ok(x * &Rational::integer(slope) + intercept)
    }

    pub fn eval(&self, x: &Rational) -> Result<FqValue> {
        let coefficient = self.coefficient(x)?;
        let value = coefficient.to_f64() * scale(self.q);
        Ok(FqValue { coefficient, value })
    }
}

/// One-off exact evaluation of `f_q(x)`, `0 <= x <= 1`, without tabulating.
pub fn fq_exact(chi: &QuadChar, h: &ClassNumber, x: &Rational) -> Result<FqValue> {
    let q = chi.modulus();
    if x.is_negative() || *x > Rational::one() {
        return Err(Error::Precondition(format!("f_q evaluated outside [0, 1]: {x}")));
    }
    let (sign, y) = if *x > Rational::ratio(1, 2) { (-1, Rational::one() - x.clone()) } else { (1, x.clone()) };
    let k = (&y * &Rational::integer(q)).floor().to_u64().ok_or(Error::Overflow("qx"))?;
    let sums = prefix_sums(chi, k, false)?;
    let mut coefficient = &y * &Rational::integer(h.h as i128 - sums.a()) + Rational::ratio(sums.b(), q as i128);
    if sign < 0 {
        coefficient = -coefficient;
    }
    let value = coefficient.to_f64() * scale(q);
    Ok(FqValue { coefficient, value })
}

/// First `terms` terms of the defining series, compensated; tail `<= 1/terms`.
pub fn fq_series(chi: &QuadChar, x: f64, terms: u64) -> SeriesValue {
    let mut acc = CompensatedSum::default();
    let mut stream = ChiStream::new(chi, terms);
    while let Some((lo, block)) = stream.next_block() {
        for (i, &c) in block.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let n = (lo + i as u64) as f64;
            acc.add(c as f64 * sin_2pi(n * x) / (n * n));
        }
    }
    SeriesValue { value: acc.value(), tail_bound: 1.0 / terms as f64, terms }
}

/// Minimum of `f_q` on `[0, 1/2]` and its exact zeros in `(0, 1/2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FqExtrema {
    pub q: u64,
    pub h: u64,
    /// `min_{1<=a<=⌊q/2⌋} W(a)`
    pub lattice_min_w: i128,
    /// Every `a` attaining `lattice_min_w`.
    pub lattice_argmins: Vec<u64>,
    /// Minimum coefficient over the closed interval (endpoints included).
    pub min_coefficient: Rational,
    pub argmin: Rational,
    /// Isolated zeros in the open interval, ascending.
    pub zeros: Vec<Rational>,
    /// Pieces on which `f_q` vanishes identically (never observed).
    pub zero_pieces: Vec<u64>,
}

impl FqExtrema {
    pub fn nonnegative(&self) -> bool {
        self.lattice_min_w >= 0
    }
}

/// Walks every linear piece once. A piece `x (h - A) + B/q` has at most one
/// root, `-B / (q (h - A))`; roots are attributed to the piece whose
/// half-open interval `[a/q, (a+1)/q)` contains them.
pub fn fq_min_and_zeros(chi: &QuadChar, h: &ClassNumber) -> Result<FqExtrema> {
    let q = chi.modulus();
    let qi = q as i128;
    let hh = h.h as i128;
    let half = Rational::ratio(1, 2);
    let mut zeros = Vec::new();
    let mut zero_pieces = Vec::new();
    let mut lattice_min_w = i128::MAX;
    let mut lattice_argmins = Vec::new();

    let mut check_piece = |a: u64, a_sum: i128, b_sum: i128| -> Result<()> {
        let slope = hh - a_sum;
        if slope == 0 {
            if b_sum == 0 && a > 0 {
                zero_pieces.push(a);
            }
            return Ok(());
        }
        let root = Rational::new(-b_sum, qi.mul_or(slope, "q (h - A)")?)?;
        let lo = Rational::ratio(a as i128, qi);
        let hi = if a == q / 2 { half.clone() } else { Rational::ratio(a as i128 + 1, qi) };
        if root >= lo && root < hi && root.is_positive() && root < half {
            zeros.push(root);
        }
        Ok(())
    };

    check_piece(0, 0, 0)?;
    for p in WLattice::new(chi, h.h) {
        match p.w.cmp(&lattice_min_w) {
            std::cmp::Ordering::Less => {
                lattice_min_w = p.w;
                lattice_argmins.clear();
                lattice_argmins.push(p.a);
            }
            std::cmp::Ordering::Equal => lattice_argmins.push(p.a),
            std::cmp::Ordering::Greater => {}
        }
        check_piece(p.a, p.a_sum, p.b_sum)?;
    }

    let (min_coefficient, argmin) = if lattice_min_w < 0 {
        (Rational::ratio(lattice_min_w, qi), Rational::ratio(lattice_argmins[0] as i128, qi))
    } else {
        (Rational::zero(), Rational::zero())
    };
    Ok(FqExtrema { q, h: h.h, lattice_min_w, lattice_argmins, min_coefficient, argmin, zeros, zero_pieces })
}

/// Closed form for `f_q(a/p)`: the signed difference of `Σ b² χ_q(b)` over the
/// classes `b ≡ ±aq (mod p)`, `b <= pq`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestPQ {
    pub a: u64,
    pub p: u64,
    pub q: u64,
    /// `-χ_q(p) (Σ_{b≡aq} b²χ_q(b) - Σ_{b≡-aq} b²χ_q(b))`
    pub raw: i128,
    /// `raw / (pq)`; always an integer. This is the tabulated `test_a(p, q)`.
    pub test: i128,
    /// `f_q(a/p) = π² raw / (2 p² q^{5/2})`
    pub f_value: f64,
    pub q_divides_test: bool,
    /// False when `q` is composite: the closed form is proved for prime `q`.
    pub within_hypotheses: bool,
}

impl TestPQ {
    pub fn positive(&self) -> bool {
        self.raw > 0
    }
}

fn check_test_pq_args(a: u64, p: u64, q: u64) -> Result<()> {
    if !is_prime(p) || p % 4 != 3 {
        return Err(Error::Precondition(format!("p = {p} must be a prime = 3 mod 4")));
    }
    if p >= q {
        return Err(Error::Precondition(format!("need p < q, got p = {p}, q = {q}")));
    }
    if a == 0 || 2 * a >= p {
        return Err(Error::Precondition(format!("need 1 <= a < p/2, got a = {a}, p = {p}")));
    }
    if q % p == 0 {
        return Err(Error::Precondition(format!("p = {p} divides q = {q}")));
    }
    Ok(())
}

fn finish_test(a: u64, p: u64, q: u64, chi_p: i8, plus: i128, minus: i128, prime_q: bool) -> Result<TestPQ> {
    let raw = (-(chi_p as i128)).mul_or(plus - minus, "test")?;
    let pq = (p as i128) * (q as i128);
    let (test, rem) = raw.div_rem(&pq);
    if rem != 0 {
        return Err(Error::Invariant(format!("test({a}, {p}, {q}) = {raw} not divisible by pq")));
    }
    let f_value = PI * PI * raw as f64 / (2.0 * (p as f64).powi(2) * (q as f64).powf(2.5));
    Ok(TestPQ { a, p, q, raw, test, f_value, q_divides_test: test % q as i128 == 0, within_hypotheses: prime_q })
}

/// `f_q(a/p)` through the residue-class sums; `O(q)` work.
pub fn fq_theorem5(a: u64, p: u64, chi: &QuadChar) -> Result<TestPQ> {
    let q = chi.modulus();
    check_test_pq_args(a, p, q)?;
    let table = chi.residue_table();
    let r_plus = ((a as u128 * q as u128) % p as u128) as u64;
    let r_minus = p - r_plus;
    let class_sum = |r: u64| -> Result<i128> {
        let mut s: i128 = 0;
        let mut b = r;
        let mut b_mod_q = r % q;
        while b <= p * q {
            let c = table[b_mod_q as usize] as i128;
            if c != 0 {
                let bb = b as i128;
                s = s.add_or(c * bb.mul_or(bb, "b^2")?, "class sum")?;
            }
            b += p;
            b_mod_q += p;
            if b_mod_q >= q {
                b_mod_q -= q;
            }
        }
        Ok(s)
    };
    let plus = class_sum(r_plus)?;
    let minus = class_sum(r_minus)?;
    finish_test(a, p, q, table[(p % q) as usize], plus, minus, chi.is_prime())
}

/// `test_a(p, q)` for every `1 <= a < p/2` from one fused pass over `b <= pq`
/// with a `Σ b² χ(b)` accumulator per residue class mod `p`.
pub fn fq_theorem5_all(p: u64, chi: &QuadChar) -> Result<Vec<TestPQ>> {
    let q = chi.modulus();
    check_test_pq_args(1, p, q)?;
    let table = chi.residue_table();
    let mut per_class = vec![0i128; p as usize];
    let (mut r, mut s) = (0u64, 0u64);
    for b in 1..=p * q {
        r += 1;
        if r == p {
            r = 0;
        }
        s += 1;
        if s == q {
            s = 0;
        }
        let c = table[s as usize];
        if c != 0 {
            let bb = b as i128;
            per_class[r as usize] += c as i128 * bb * bb;
        }
    }
    let chi_p = table[(p % q) as usize];
    (1..=(p - 1) / 2)
        .map(|a| {
            let r_plus = (a * (q % p)) % p;
            let r_minus = p - r_plus;
            finish_test(a, p, q, chi_p, per_class[r_plus as usize], per_class[r_minus as usize], chi.is_prime())
        })
        .collect()
}

/// Integer core of the closed form for `f_q(a/q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KCore {
    pub a: u64,
    pub q: u64,
    /// `K(a) = q² χ(a) - Σ_{c=1}^{q-1} c² (χ(c-a) - χ(c+a))`
    pub k: i128,
    /// `π² K / (2 q^{5/2})`
    pub value: f64,
    pub within_hypotheses: bool,
}

fn check_k_args(a: u64, q: u64) -> Result<()> {
    if a == 0 || a >= q || a.gcd(&q) != 1 {
        return Err(Error::Precondition(format!("need 1 <= a < q with gcd(a, q) = 1, got a = {a}")));
    }
    Ok(())
}

fn k_value(k: i128, q: u64) -> f64 {
    PI * PI * k as f64 / (2.0 * (q as f64).powf(2.5))
}

/// Direct `O(q)` evaluation of `K(a)`.
pub fn fq_theorem6(a: u64, chi: &QuadChar) -> Result<KCore> {
    let q = chi.modulus();
    check_k_args(a, q)?;
    let table = chi.residue_table();
    Ok(k_from_table(a, q, &table, chi.is_prime()))
}

fn k_from_table(a: u64, q: u64, table: &[i8], prime_q: bool) -> KCore {
    let qi = q as i128;
    let mut sum: i128 = 0;
    for c in 1..q {
        let minus = table[((c + q - a) % q) as usize] as i128;
        let plus = table[((c + a) % q) as usize] as i128;
        let cc = c as i128;
        sum += cc * cc * (minus - plus);
    }
    let k = qi * qi * table[a as usize] as i128 - sum;
    KCore { a, q, k, value: k_value(k, q), within_hypotheses: prime_q }
}

/// `K(a)` for every `a = 0..q`, in `O(q)` total.
///
/// With `F(a) = Σ_c c² χ(c+a)` and `G(a) = Σ_c c χ(c+a)` (sums over all
/// residues), shifting `a` gives `G(a+1) = G(a) + q χ(a)` and
/// `F(a+1) = F(a) - 2 G(a) + ((q-1)² - 1) χ(a)`; then
/// `K(a) = q² χ(a) - F(-a) + F(a)`.
pub fn k_core_all(chi: &QuadChar) -> Result<Vec<i128>> {
    let q = chi.modulus();
    let qi = q as i128;
    let table = chi.residue_table();
    let mut f = vec![0i128; q as usize];
    let (mut fa, mut ga) = (0i128, 0i128);
    for c in 1..q {
        let x = table[c as usize] as i128;
        let cc = c as i128;
        fa += cc * cc * x;
        ga += cc * x;
    }
    let shift = (qi - 1) * (qi - 1) - 1;
    for a in 0..q as usize {
        f[a] = fa;
        let x = table[a] as i128;
        fa = fa.add_or(-2 * ga + shift * x, "F(a)")?;
        ga += qi * x;
    }
    Ok((0..q as usize).map(|a| qi * qi * table[a] as i128 - f[(q as usize - a) % q as usize] + f[a]).collect())
}

/// `K(a) = 4 q W(a)`, checked exactly.
pub fn identity_check(chi: &QuadChar, h: &ClassNumber, a: u64) -> Result<bool> {
    let q = chi.modulus();
    check_k_args(a, q)?;
    let k = fq_theorem6(a, chi)?.k;
    let sums = prefix_sums(chi, a, false)?;
    let w = a as i128 * (h.h as i128 - sums.a()) + sums.b();
    Ok(k == 4 * q as i128 * w)
}

/// `(a, K(a), 4qW(a))` for every admissible `a`, via [`k_core_all`].
pub fn identity_rows(chi: &QuadChar, h: &ClassNumber) -> Result<Vec<(u64, i128, i128)>> {
    let q = chi.modulus();
    let ks = k_core_all(chi)?;
    let table = PrefixTable::new(chi, q - 1)?;
    Ok((1..q)
        .filter(|a| a.gcd(&q) == 1)
        .map(|a| (a, ks[a as usize], 4 * q as i128 * table.w(h.h as i128, a)))
        .collect())
}

/// Verdicts of the identity for every admissible `a`.
pub fn identity_sweep(chi: &QuadChar, h: &ClassNumber) -> Result<Vec<(u64, bool)>> {
    Ok(identity_rows(chi, h)?.into_iter().map(|(a, k, rhs)| (a, k == rhs)).collect())
}

/// Real auxiliary patterns `ψ` for the truncated `Σ χ_q(n) ψ(n) / n²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxPattern {
    /// `χ_3`: `n ≡ 1 -> 1`, `n ≡ 2 -> -1 (mod 3)`.
    Chi3,
    /// Real part `α` of the mod-5 series: `n ≡ 1 -> 1`, `n ≡ 4 -> -1`.
    Mod5Real,
    /// Imaginary part `β`: `n ≡ 2 -> 1`, `n ≡ 3 -> -1`.
    Mod5Imag,
}

impl AuxPattern {
    #[inline]
    pub fn weight(self, n: u64) -> i8 {
        match self {
            AuxPattern::Chi3 => [0, 1, -1][(n % 3) as usize],
            AuxPattern::Mod5Real => [0, 1, 0, 0, -1][(n % 5) as usize],
            AuxPattern::Mod5Imag => [0, 0, 1, -1, 0][(n % 5) as usize],
        }
    }
}

/// `Σ_{n<=N} χ_q(n) ψ(n) / n²` with tail bound `1/N`.
pub fn l2_truncated(chi: &QuadChar, pattern: AuxPattern, terms: u64) -> SeriesValue {
    let mut acc = CompensatedSum::default();
    let mut stream = ChiStream::new(chi, terms);
    while let Some((lo, block)) = stream.next_block() {
        for (i, &c) in block.iter().enumerate() {
            let n = lo + i as u64;
            let w = c * pattern.weight(n);
            if w != 0 {
                let nf = n as f64;
                acc.add(w as f64 / (nf * nf));
            }
        }
    }
    SeriesValue { value: acc.value(), tail_bound: 1.0 / terms as f64, terms }
}

/// `f_q(1/3) = (√3/2) Σ χ_q(n) χ_3(n) / n²`.
pub fn fq_one_third(chi: &QuadChar, terms: u64) -> SeriesValue {
    let s = l2_truncated(chi, AuxPattern::Chi3, terms);
    let k = 3f64.sqrt() / 2.0;
    SeriesValue { value: k * s.value, tail_bound: k * s.tail_bound, terms }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneFifth {
    pub alpha: SeriesValue,
    pub beta: SeriesValue,
    /// `sin(2π/5) α + sin(4π/5) β`
    pub value: f64,
    pub tail_bound: f64,
}

/// `f_q(1/5)` split into the two real subseries `α`, `β`.
pub fn fq_one_fifth(chi: &QuadChar, terms: u64) -> OneFifth {
    let alpha = l2_truncated(chi, AuxPattern::Mod5Real, terms);
    let beta = l2_truncated(chi, AuxPattern::Mod5Imag, terms);
    let value = (2.0 * PI / 5.0).sin() * alpha.value + (4.0 * PI / 5.0).sin() * beta.value;
    OneFifth { alpha, beta, value, tail_bound: 1.0 / terms as f64 }
}

/// `1 - Σ_{n>=4} 1/n² = 85/36 - π²/6`, a lower bound on `α` for every `q`.
pub fn alpha_lower_bound() -> f64 {
    85.0 / 36.0 - PI * PI / 6.0
}

/// `Σ_{n>=2} 1/n² = π²/6 - 1`, an upper bound on `|β|`.
pub fn beta_upper_bound() -> f64 {
    PI * PI / 6.0 - 1.0
}

/// Uniform lower bound for `f_q(1/5)` from the `α`/`β` bounds alone.
pub fn one_fifth_uniform_lower_bound() -> f64 {
    (2.0 * PI / 5.0).sin() * alpha_lower_bound() - (4.0 * PI / 5.0).sin() * beta_upper_bound()
}

/// Convenience: class number and exact value in one call.
pub fn fq_exact_q(q: u64, x: &Rational) -> Result<FqValue> {
    let chi = QuadChar::new(q)?;
    let h = class_number(&chi)?;
    fq_exact(&chi, &h, x)
}

/// `Σ_{n<=N} χ_q(n) sin(2πnx)/n²` computed from the segmented sieve only;
/// used to cross-check the bitmap path.
pub fn fq_series_sieve(chi: &QuadChar, x: f64, terms: u64) -> SeriesValue {
    let mut acc = CompensatedSum::default();
    for (i, c) in chi_sieve(chi, terms).enumerate() {
        if c != 0 {
            let n = (i + 1) as f64;
            acc.add(c as f64 * sin_2pi(n * x) / (n * n));
        }
    }
    SeriesValue { value: acc.value(), tail_bound: 1.0 / terms as f64, terms }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(q: u64) -> (QuadChar, ClassNumber) {
        let chi = QuadChar::new(q).unwrap();
        let h = class_number(&chi).unwrap();
        (chi, h)
    }

    fn round_sig(v: f64, sig: i32) -> f64 {
        let e = v.abs().log10().floor() as i32;
        let f = 10f64.powi(sig - 1 - e);
        (v * f).round() / f
    }

    #[test]
    fn table_163() {
        let (chi, h) = setup(163);
        let v = fq_exact(&chi, &h, &Rational::ratio(1, 163)).unwrap();
        assert_eq!(v.coefficient, Rational::ratio(1, 163));
        assert_eq!(round_sig(v.value, 2), 0.0095);
        let v = fq_exact(&chi, &h, &Rational::ratio(4, 163)).unwrap();
        assert_eq!(round_sig(v.value, 2), 0.038);
    }

    #[test]
    fn boundary_values() {
        for q in [11u64, 19, 163, 2647] {
            let (chi, h) = setup(q);
            assert!(fq_exact(&chi, &h, &Rational::ratio(1, 2)).unwrap().coefficient.is_zero());
            assert!(fq_exact(&chi, &h, &Rational::zero()).unwrap().coefficient.is_zero());
            assert!(fq_exact(&chi, &h, &Rational::one()).unwrap().coefficient.is_zero());
        }
        let (chi, h) = setup(11);
        let v = fq_exact(&chi, &h, &Rational::ratio(1, 11)).unwrap();
        assert!((v.value - 2.0 * PI * PI / 11f64.powf(1.5)).abs() < 1e-12);
        assert!((v.value - 0.5411).abs() < 5e-5);
    }

    #[test]
    fn piecewise_continuity_and_lattice() {
        for q in [11u64, 19, 35, 163, 971, 2647] {
            let (chi, h) = setup(q);
            let pw = PiecewiseLinearFq::new(&chi).unwrap();
            assert_eq!(pw.class_number(), h.h);
            let hh = h.h as i128;
            let t = pw.table();
            for a in 0..q / 2 {
                let left = (a as i128 + 1) * (hh - t.a(a)) + t.b(a);
                let right = (a as i128 + 1) * (hh - t.a(a + 1)) + t.b(a + 1);
                assert_eq!(left, right, "q={q} a={a}");
            }
            for a in 1..=q / 2 {
                let x = Rational::ratio(a as i128, q as i128);
                assert_eq!(pw.coefficient(&x).unwrap() * Rational::integer(q), Rational::integer(pw.w(a)));
                assert_eq!(pw.coefficient(&x).unwrap(), fq_exact(&chi, &h, &x).unwrap().coefficient);
            }
            assert!(pw.coefficient(&Rational::ratio(1, 2)).unwrap().is_zero());
        }
    }

    #[test]
    fn series_endpoints_exact_zero() {
        let (chi, _) = setup(163);
        assert_eq!(fq_series(&chi, 0.0, 500).value, 0.0);
        assert_eq!(fq_series(&chi, 0.5, 1000).value, 0.0);
    }

    #[test]
    fn series_against_exact() {
        let (chi, h) = setup(163);
        let s = fq_series(&chi, 0.1, 10_000);
        let e = fq_exact(&chi, &h, &Rational::ratio(1, 10)).unwrap();
        assert!((s.value - e.value).abs() <= 1e-4 + s.slop());
        let s2 = fq_series_sieve(&chi, 0.1, 10_000);
        assert!((s.value - s2.value).abs() < 1e-15);
        let odd = fq_series(&chi, 0.9, 10_000);
        assert!((odd.value + s.value).abs() < 1e-12);
    }

    #[test]
    fn extrema_small() {
        let (chi, h) = setup(11);
        let e = fq_min_and_zeros(&chi, &h).unwrap();
        assert_eq!(e.lattice_min_w, 1);
        assert_eq!(e.lattice_argmins, vec![1, 2, 5]);
        assert!(e.zeros.is_empty() && e.zero_pieces.is_empty());
        assert!(e.nonnegative());
        assert!(e.min_coefficient.is_zero());

        let (chi, h) = setup(163);
        let e = fq_min_and_zeros(&chi, &h).unwrap();
        assert!(e.zeros.is_empty());
        assert!(e.lattice_min_w > 0);
    }

    #[test]
    fn test_pq_matches_brute_force() {
        // brute force over b <= pq straight from the definition
        for (a, p, q) in [(1u64, 3u64, 11u64), (1, 7, 11), (2, 7, 19), (1, 11, 19), (3, 7, 43), (1, 19, 43)] {
            let chi = QuadChar::new(q).unwrap();
            let mut s: i128 = 0;
            for b in 1..=p * q {
                let c = chi.chi(b as i64) as i128;
                if b % p == a * q % p {
                    s += (b * b) as i128 * c;
                } else if b % p == (p - a * q % p) % p {
                    s -= (b * b) as i128 * c;
                }
            }
            let raw = -(chi.chi(p as i64) as i128) * s;
            let t = fq_theorem5(a, p, &chi).unwrap();
            assert_eq!(t.raw, raw);
            assert_eq!(t.test * (p * q) as i128, raw);
            let all = fq_theorem5_all(p, &chi).unwrap();
            assert_eq!(all[(a - 1) as usize], t);
            let series = fq_series(&chi, a as f64 / p as f64, 100_000);
            assert!((t.f_value - series.value).abs() <= series.tail_bound + 1e-9);
        }
        let (chi, _) = setup(11);
        let t = fq_theorem5(1, 3, &chi).unwrap();
        assert_eq!((t.raw, t.test), (792, 24));
    }

    #[test]
    fn test_pq_tabulated() {
        let t = fq_theorem5(1, 1163, &QuadChar::new(3511).unwrap()).unwrap();
        assert_eq!(t.test, 561_760);
        assert!(t.positive());
        let t = fq_theorem5(1, 719, &QuadChar::new(2971).unwrap()).unwrap();
        assert_eq!(t.test, 130_724);
    }

    #[test]
    fn test_pq_preconditions() {
        let chi = QuadChar::new(11).unwrap();
        assert!(fq_theorem5(0, 3, &chi).is_err());
        assert!(fq_theorem5(1, 5, &chi).is_err());
        assert!(fq_theorem5(2, 3, &chi).is_err());
        assert!(fq_theorem5(1, 19, &chi).is_err());
        assert!(fq_theorem5(1, 7, &QuadChar::new(35).unwrap()).is_err());
        assert!(fq_theorem5(1, 3, &QuadChar::new(35).unwrap()).is_ok());
    }

    #[test]
    fn k_core_direct_and_recurrence() {
        for q in [11u64, 19, 35, 43, 163, 23, 2647] {
            let (chi, h) = setup(q);
            let all = k_core_all(&chi).unwrap();
            for a in 1..q {
                if a.gcd(&q) != 1 {
                    continue;
                }
                if q < 200 || a % 97 == 1 {
                    assert_eq!(fq_theorem6(a, &chi).unwrap().k, all[a as usize], "q={q} a={a}");
                }
            }
            assert!(identity_sweep(&chi, &h).unwrap().iter().all(|&(_, ok)| ok), "q={q}");
        }
        let chi = QuadChar::new(11).unwrap();
        assert_eq!(fq_theorem6(1, &chi).unwrap().k, 44);
        assert!(fq_theorem6(0, &chi).is_err());
        assert!(fq_theorem6(11, &chi).is_err());
    }

    #[test]
    fn identity_exhaustive_small() {
        let (chi, h) = setup(11);
        assert!((1..11).all(|a| identity_check(&chi, &h, a).unwrap()));
        let (chi, h) = setup(163);
        assert!((1..=81).all(|a| identity_check(&chi, &h, a).unwrap()));
        let v = fq_theorem6(1, &chi).unwrap().value;
        assert!((v - fq_exact(&chi, &h, &Rational::ratio(1, 163)).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn one_third_and_one_fifth() {
        let (chi, h) = setup(163);
        let s = fq_one_third(&chi, 10_000);
        let e = fq_exact(&chi, &h, &Rational::ratio(1, 3)).unwrap();
        assert!((s.value - e.value).abs() <= s.tail_bound + 1e-9);
        let f = fq_one_fifth(&chi, 10_000);
        let e = fq_exact(&chi, &h, &Rational::ratio(1, 5)).unwrap();
        assert!((f.value - e.value).abs() <= f.tail_bound + 1e-9);
        assert!(alpha_lower_bound() > 0.716);
        assert!(f.alpha.value >= alpha_lower_bound());
        assert!(f.beta.value.abs() < beta_upper_bound());
        assert!(one_fifth_uniform_lower_bound() > 0.3);
    }

    #[test]
    fn sin_2pi_exact_points() {
        assert_eq!(sin_2pi(0.0), 0.0);
        assert_eq!(sin_2pi(3.5), 0.0);
        assert_eq!(sin_2pi(-2.0), 0.0);
        assert!((sin_2pi(0.25) - 1.0).abs() < 1e-15);
        assert!((sin_2pi(-0.25) + 1.0).abs() < 1e-15);
    }
}
