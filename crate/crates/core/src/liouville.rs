//! The Liouville-side function `f(x) = Σ λ(n) sin(2πnx) / n²` and the
//! primes `q` whose character imitates `λ` on an initial segment.

use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::charsum::ClassNumber;
use crate::error::{Error, Result};
use crate::fq::{fq_exact, scale, sin_2pi, CompensatedSum, SeriesValue};
use crate::ntcore::{
    is_prime, jacobi_odd, liouville_sieve, primes_in_range, LiouvilleTable, QuadChar, Rational, Residue,
};

/// Default upper wall for [`find_imitator`].
pub const DEFAULT_IMITATOR_CEILING: u64 = (1 << 63) - 1;

/// A rational strictly below `π²`: `9869604401 / 10⁹`.
pub fn pi_squared_lower() -> Rational {
    Rational::ratio(9_869_604_401, 1_000_000_000)
}

static LAMBDA: RwLock<Option<Arc<LiouvilleTable>>> = RwLock::new(None);

/// Shared `λ(1..=n)` table. Grows by re-sieving; existing tables are never
/// mutated.
pub fn lambda_table(n: usize) -> Arc<LiouvilleTable> {
    if let Some(t) = LAMBDA.read().unwrap_or_else(|e| e.into_inner()).as_ref() {
        if t.limit() >= n {
            return Arc::clone(t);
        }
    }
    let mut slot = LAMBDA.write().unwrap_or_else(|e| e.into_inner());
    if let Some(t) = slot.as_ref() {
        if t.limit() >= n {
            return Arc::clone(t);
        }
    }
    let old = slot.as_ref().map_or(0, |t| t.limit());
    let t = Arc::new(liouville_sieve(n.max(old.saturating_mul(2)).max(1024)));
    *slot = Some(Arc::clone(&t));
    t
}

/// First `terms` terms of the series for `f(x)`; tail `<= 1/terms`.
pub fn f_series(x: f64, terms: u64) -> SeriesValue {
    let table = lambda_table(terms as usize);
    let mut acc = CompensatedSum::default();
    for n in 1..=terms {
        let nf = n as f64;
        acc.add(table.get(n as usize) as f64 * sin_2pi(nf * x) / (nf * nf));
    }
    SeriesValue { value: acc.value(), tail_bound: 1.0 / terms as f64, terms }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AgreementRecord {
    pub q: u64,
    /// Largest `N` with `χ_q(n) = λ(n)` for all `n <= N`.
    pub n: u64,
    pub first_mismatch: u64,
}

/// Both sides are completely multiplicative and `λ(p) = -1`, so the first
/// mismatch is the least prime `p` with `χ_q(p) != -1`.
pub fn agreement_length(chi: &QuadChar) -> AgreementRecord {
    let q = chi.modulus();
    let mut p = 2u64;
    loop {
        if is_prime(p) && chi.chi(p as i64) != -1 {
            return AgreementRecord { q, n: p - 1, first_mismatch: p };
        }
        p += 1;
    }
}

/// True when every prime `p <= n` is a nonresidue mod the prime `q`.
fn imitates(q: u64, small: &[u64]) -> bool {
    small.iter().all(|&p| jacobi_odd(p % q, q) == -1)
}

/// Smallest prime `q ≡ 3 (mod 8)`, `q > 3`, `q <= ceiling`, with agreement
/// length at least `n`.
pub fn find_imitator(n: u64, ceiling: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Precondition("agreement target must be at least 1".into()));
    }
    // χ_q(2) = -1 already holds for q ≡ 3 (mod 8).
    let small: Vec<u64> = primes_in_range(3, n, None).collect();
    const SPAN: u64 = 1 << 20;
    let batch = rayon::current_num_threads().max(1) as u64 * 4;
    let mut lo = 5u64;
    while lo <= ceiling {
        let found = (0..batch)
            .into_par_iter()
            .map(|i| {
                let start = lo.saturating_add(i * SPAN);
                if start > ceiling {
                    return None;
                }
                let end = start.saturating_add(SPAN - 1).min(ceiling);
                primes_in_range(start, end, Some(Residue::new(3, 8))).find(|&q| imitates(q, &small))
            })
            .find_first(|r| r.is_some())
            .flatten();
        if let Some(q) = found {
            return Ok(q);
        }
        lo = match lo.checked_add(batch * SPAN) {
            Some(v) => v,
            None => break,
        };
    }
    Err(Error::SearchExhausted { ceiling })
}

/// Certified lower bound `f(x) >= f_q(x) - 2/N` with `N` the agreement length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBound {
    pub q: u64,
    pub agreement_n: u64,
    /// `f_q(x) = coefficient · 2π²/√q`
    pub coefficient: Rational,
    /// `2/N`
    pub error_bound: Rational,
    pub value: f64,
    /// Exact verdict of `f_q(x) >= 2/N`, decided with a rational lower bound
    /// for `π²`.
    pub certified_nonnegative: bool,
}

/// `c · 2π²/√q >= 2/N`, i.e. `(c π² N)² >= q` with `c > 0`, decided exactly
/// using `π²_lo < π²`.
pub fn margin_holds(coefficient: &Rational, q: u64, n: u64) -> bool {
    if !coefficient.is_positive() {
        return false;
    }
    let t = coefficient * &pi_squared_lower() * Rational::integer(n);
    &t * &t >= Rational::integer(BigInt::from(q))
}

pub fn f_lower_bound(x: &Rational, chi: &QuadChar, h: &ClassNumber) -> Result<LowerBound> {
    let rec = agreement_length(chi);
    let v = fq_exact(chi, h, x)?;
    let error_bound = Rational::ratio(2, rec.n as i128);
    let value = v.coefficient.to_f64() * scale(chi.modulus()) - error_bound.to_f64();
    Ok(LowerBound {
        q: chi.modulus(),
        agreement_n: rec.n,
        certified_nonnegative: margin_holds(&v.coefficient, chi.modulus(), rec.n),
        coefficient: v.coefficient,
        error_bound,
        value,
    })
}
