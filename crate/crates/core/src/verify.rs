//! Campaign-level verification: `f_q >= 0` scans over prime ranges,
//! positivity certificates for `f`, and sign scans of the `test_a(p, q)`
//! closed form.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charsum::{class_number, class_number_and_profile, PrefixTable};
use crate::error::{Error, Result};
use crate::fq::{fq_theorem5_all, TestPQ};
use crate::liouville::{agreement_length, find_imitator, margin_holds, DEFAULT_IMITATOR_CEILING};
use crate::ntcore::{is_prime, jacobi, primes_in_range, QuadChar, Rational, Residue};

/// Verdict of `f_q >= 0` on `[0, 1/2]` for one modulus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conj1Report {
    pub q: u64,
    pub holds: bool,
    #[serde(rename = "min_W", with = "i128_str")]
    pub min_w: i128,
    pub argmin_a: u64,
    pub h: u64,
    /// Wall time; never serialized so reports stay reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Since `f_q` is linear between consecutive points `a/q` and vanishes at
/// both ends of `[0, 1/2]`, it is nonnegative there iff `W(a) >= 0` for
/// every `a <= ⌊q/2⌋`.
pub fn verify_conjecture1(chi: &QuadChar) -> Result<Conj1Report> {
    let start = Instant::now();
    let (h, p) = class_number_and_profile(chi)?;
    Ok(Conj1Report {
        q: chi.modulus(),
        holds: p.min_w >= 0,
        min_w: p.min_w,
        argmin_a: p.argmin,
        h: h.h,
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub q_min: u64,
    pub q_max: u64,
    pub jobs: usize,
    pub checkpoint: Option<PathBuf>,
    pub campaign: String,
    /// Primes per checkpoint line.
    pub checkpoint_every: usize,
}

impl ScanConfig {
    pub fn new(q_min: u64, q_max: u64) -> Self {
        ScanConfig {
            q_min,
            q_max,
            jobs: 1,
            checkpoint: None,
            campaign: format!("scan-{q_min}-{q_max}"),
            checkpoint_every: 1 << 16,
        }
    }
}

/// Commutative-monoid aggregate over verified moduli.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanAggregate {
    pub count: u64,
    #[serde(rename = "min_W", with = "opt_i128_str")]
    pub min_w: Option<i128>,
    pub argmin_q: Option<u64>,
    pub failures: Vec<Conj1Report>,
}

impl ScanAggregate {
    fn push(&mut self, r: Conj1Report) {
        self.count += 1;
        let better = match self.min_w {
            None => true,
            Some(m) => r.min_w < m || (r.min_w == m && Some(r.q) < self.argmin_q),
        };
        if better {
            self.min_w = Some(r.min_w);
            self.argmin_q = Some(r.q);
        }
        if !r.holds {
            self.failures.push(r);
        }
    }

    fn merge(mut self, other: ScanAggregate) -> ScanAggregate {
        self.count += other.count;
        if let (Some(m), Some(q)) = (other.min_w, other.argmin_q) {
            let better = match self.min_w {
                None => true,
                Some(cur) => m < cur || (m == cur && Some(q) < self.argmin_q),
            };
            if better {
                self.min_w = Some(m);
                self.argmin_q = Some(q);
            }
        }
        self.failures.extend(other.failures);
        self.failures.sort_by_key(|r| r.q);
        self
    }
}

/// One JSON line of the append-only checkpoint file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanCheckpoint {
    pub campaign: String,
    pub q_min: u64,
    pub q_max: u64,
    pub last_q: u64,
    #[serde(flatten)]
    pub aggregate: ScanAggregate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanReport {
    pub campaign: String,
    pub q_min: u64,
    pub q_max: u64,
    #[serde(flatten)]
    pub aggregate: ScanAggregate,
}

impl ScanReport {
    pub fn holds(&self) -> bool {
        self.aggregate.failures.is_empty()
    }
}

/// Last checkpoint of `campaign` in `path`, if any. A torn final line is
/// ignored; corruption elsewhere is an error.
pub fn read_checkpoint(path: &Path, campaign: &str) -> Result<Option<ScanCheckpoint>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<std::io::Result<_>>()?;
    let mut last = None;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ScanCheckpoint>(line) {
            Ok(c) if c.campaign == campaign => last = Some(c),
            Ok(_) => {}
            Err(_) if i + 1 == lines.len() => {}
            Err(e) => return Err(Error::Io(format!("{}:{}: {e}", path.display(), i + 1))),
        }
    }
    Ok(last)
}

/// Splits `qs` into about `parts` contiguous runs of roughly equal `Σ q`.
fn balanced_blocks(qs: &[u64], parts: usize) -> Vec<&[u64]> {
    let total: u128 = qs.iter().map(|&q| q as u128).sum();
    let target = (total / parts.max(1) as u128).max(1);
    let mut out = Vec::new();
    let (mut start, mut acc) = (0usize, 0u128);
    for (i, &q) in qs.iter().enumerate() {
        acc += q as u128;
        if acc >= target {
            out.push(&qs[start..=i]);
            start = i + 1;
            acc = 0;
        }
    }
    if start < qs.len() {
        out.push(&qs[start..]);
    }
    out
}

fn verify_block(qs: &[u64]) -> Result<ScanAggregate> {
    let mut agg = ScanAggregate::default();
    for &q in qs {
        agg.push(verify_conjecture1(&QuadChar::new(q)?)?);
    }
    Ok(agg)
}

/// `f_q >= 0` for every prime `q ≡ 3 (mod 8)` in `[max(q_min, 5), q_max]`.
///
/// Work is chunked into `checkpoint_every` primes; each chunk is spread over
/// the pool in balanced blocks and reduced in order, so the aggregate does not
/// depend on `jobs`. With a checkpoint path the scan resumes after the last
/// recorded chunk and appends one line per finished chunk.
pub fn scan_conjecture1(cfg: &ScanConfig) -> Result<ScanReport> {
    if cfg.q_min > cfg.q_max {
        return Err(Error::Precondition(format!("empty range: q_min {} > q_max {}", cfg.q_min, cfg.q_max)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::Precondition(e.to_string()))?;

    let mut agg = ScanAggregate::default();
    let mut lo = cfg.q_min.max(5);
    let mut sink = None;
    if let Some(path) = &cfg.checkpoint {
        if let Some(c) = read_checkpoint(path, &cfg.campaign)? {
            if (c.q_min, c.q_max) != (cfg.q_min, cfg.q_max) {
                return Err(Error::Precondition(format!(
                    "campaign {} was started for [{}, {}]",
                    c.campaign, c.q_min, c.q_max
                )));
            }
            agg = c.aggregate;
            lo = lo.max(c.last_q + 1);
        }
        sink = Some(OpenOptions::new().create(true).append(true).open(path)?);
    }

    let report = |agg: ScanAggregate| ScanReport {
        campaign: cfg.campaign.clone(),
        q_min: cfg.q_min,
        q_max: cfg.q_max,
        aggregate: agg,
    };
    if lo > cfg.q_max {
        return Ok(report(agg));
    }

    let mut primes = primes_in_range(lo, cfg.q_max, Some(Residue::new(3, 8)));
    let chunk_len = cfg.checkpoint_every.max(1);
    let parts = cfg.jobs.max(1) * 8;
    loop {
        let chunk: Vec<u64> = primes.by_ref().take(chunk_len).collect();
        let Some(&last_q) = chunk.last() else { break };
        let blocks = balanced_blocks(&chunk, parts);
        let partial: Vec<ScanAggregate> =
            pool.install(|| blocks.par_iter().map(|b| verify_block(b)).collect::<Result<_>>())?;
        agg = partial.into_iter().fold(agg, ScanAggregate::merge);
        if let Some(f) = sink.as_mut() {
            let line = ScanCheckpoint {
                campaign: cfg.campaign.clone(),
                q_min: cfg.q_min,
                q_max: cfg.q_max,
                last_q,
                aggregate: agg.clone(),
            };
            writeln!(f, "{}", serde_json::to_string(&line)?)?;
            f.flush()?;
        }
    }
    Ok(report(agg))
}

pub const CERTIFICATE_VERSION: u32 = 1;
pub const CERTIFIED: &str = "certified";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Margin {
    pub a: u64,
    #[serde(rename = "W", with = "i128_str")]
    pub w: i128,
}

/// Exact record that `f >= 0` on `[a0/q, xmax]`.
///
/// Each lattice value satisfies `2π² W(a) / q^{3/2} >= 2/N`, checked as
/// `(π²_lo W N)² >= q³` with `π²_lo < π²`. Between lattice points `f_q` is
/// linear, so the endpoint margins bound the interior; `|f - f_q| <= 2/N`
/// finishes the argument. When `xmax` is not a lattice point the checker
/// also verifies the margin of `f_q(xmax)` itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositivityCertificate {
    pub version: u32,
    pub q: u64,
    pub h: u64,
    #[serde(rename = "agreement_N")]
    pub agreement_n: u64,
    pub a0: u64,
    pub xmax_num: u64,
    pub xmax_den: u64,
    pub margins: Vec<Margin>,
    pub verdict: String,
}

impl PositivityCertificate {
    /// `2/N`
    pub fn error_bound(&self) -> Rational {
        Rational::ratio(2, self.agreement_n as i128)
    }

    pub fn interval(&self) -> (Rational, Rational) {
        (
            Rational::ratio(self.a0 as i128, self.q as i128),
            Rational::ratio(self.xmax_num as i128, self.xmax_den as i128),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Successful certification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyOutcome {
    pub certificate: PositivityCertificate,
    pub requested_xmax: Rational,
    /// True when coverage stops short of `requested_xmax`; the certificate's
    /// own `xmax` is then the last lattice point that still clears the bound.
    pub truncated: bool,
}

fn lattice_ok(w: i128, q: u64, n: u64) -> bool {
    margin_holds(&Rational::ratio(w, q as i128), q, n)
}

/// Certify `f >= 0` on `[eps', xmax]` with `eps' <= eps` using the imitating
/// prime `chi`.
pub fn certify_with(eps: &Rational, chi: &QuadChar, xmax: &Rational) -> Result<CertifyOutcome> {
    let half = Rational::ratio(1, 2);
    if !eps.is_positive() || eps >= xmax || *xmax > half {
        return Err(Error::Precondition(format!("need 0 < eps < xmax <= 1/2, got eps = {eps}, xmax = {xmax}")));
    }
    let q = chi.modulus();
    let qi = q as i128;
    let n = agreement_length(chi).n;
    let h = class_number(chi)?;
    let hh = h.h as i128;
    let k = (xmax * &Rational::integer(q)).floor().to_u64().ok_or(Error::Overflow("q xmax"))?;
    let s = (eps * &Rational::integer(q)).floor().to_u64().ok_or(Error::Overflow("q eps"))?;
    let table = PrefixTable::new(chi, k.max(1))?;
    let pass: Vec<bool> = (0..=k).map(|a| a > 0 && lattice_ok(table.w(hh, a), q, n)).collect();

    let xmax_on_lattice = (xmax * &Rational::integer(q)).is_integer();
    let end_ok = xmax_on_lattice || {
        let c = xmax * &Rational::integer(hh - table.a(k)) + Rational::ratio(table.b(k), qi);
        margin_holds(&c, q, n)
    };

    let run_start = |mut a: u64| {
        while a > 1 && pass[a as usize - 1] {
            a -= 1;
        }
        a
    };
    if s == 0 || !pass[s as usize] {
        let best = (k > 0 && pass[k as usize]).then(|| run_start(k));
        return Err(Error::BoundInsufficient(match best {
            Some(b) => format!(
                "q = {q}, N = {n}: margins clear 2/N only from a0 = {b}, i.e. x >= {}",
                Rational::ratio(b as i128, qi)
            ),
            None => format!("q = {q}, N = {n}: no lattice margin below xmax clears 2/N"),
        }));
    }
    let a0 = run_start(s);
    let mut a1 = s;
    while a1 < k && pass[a1 as usize + 1] {
        a1 += 1;
    }
    let reaches = a1 == k && end_ok;
    let (xmax_cov, truncated) = if reaches { (xmax.clone(), false) } else { (Rational::ratio(a1 as i128, qi), true) };
    let margins = (a0..=a1).map(|a| Margin { a, w: table.w(hh, a) }).collect();
    let certificate = PositivityCertificate {
        version: CERTIFICATE_VERSION,
        q,
        h: h.h,
        agreement_n: n,
        a0,
        xmax_num: xmax_cov.numer().to_u64().ok_or(Error::Overflow("xmax"))?,
        xmax_den: xmax_cov.denom().to_u64().ok_or(Error::Overflow("xmax"))?,
        margins,
        verdict: CERTIFIED.into(),
    };
    Ok(CertifyOutcome { certificate, requested_xmax: xmax.clone(), truncated })
}

/// Certify with the given `chi`, or search imitating primes of increasing
/// agreement length until one works (up to `max_agreement`).
pub fn certify_f_positive(
    eps: &Rational,
    chi: Option<&QuadChar>,
    xmax: &Rational,
    max_agreement: u64,
) -> Result<CertifyOutcome> {
    if let Some(chi) = chi {
        return certify_with(eps, chi, xmax);
    }
    let mut target = 1;
    let mut last_err = None;
    while target <= max_agreement {
        let q = find_imitator(target, DEFAULT_IMITATOR_CEILING)?;
        let chi = QuadChar::new(q)?;
        match certify_with(eps, &chi, xmax) {
            Ok(c) => return Ok(c),
            Err(e @ Error::BoundInsufficient(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
        target = agreement_length(&chi).n + 1;
    }
    Err(last_err.unwrap_or_else(|| Error::BoundInsufficient(format!("no imitator up to agreement {max_agreement}"))))
}

fn reject(msg: impl Into<String>) -> Error {
    Error::CertificateRejected(msg.into())
}

/// Re-derives everything a certificate cites from `q` alone, with a plain
/// Jacobi-symbol loop and big-integer margin arithmetic.
pub fn check_certificate(cert: &PositivityCertificate) -> Result<()> {
    if cert.version != CERTIFICATE_VERSION {
        return Err(reject(format!("unsupported version {}", cert.version)));
    }
    if cert.verdict != CERTIFIED {
        return Err(reject(format!("verdict is {:?}", cert.verdict)));
    }
    let q = cert.q;
    if q < 7 || q % 4 != 3 || q > i64::MAX as u64 {
        return Err(reject(format!("modulus {q} is not = 3 mod 4")));
    }
    let qi = q as i64;
    let chi = |n: u64| jacobi(n as i64, qi).map_err(|e| reject(e.to_string()));

    // Exact agreement length.
    let mut p = 2u64;
    let n = loop {
        if is_prime(p) && chi(p)? != -1 {
            break p - 1;
        }
        p += 1;
    };
    if n != cert.agreement_n {
        return Err(reject(format!("agreement length is {n}, certificate says {}", cert.agreement_n)));
    }

    // xmax in lowest terms inside (a0/q, 1/2].
    let (xn, xd) = (cert.xmax_num as u128, cert.xmax_den as u128);
    if xd == 0 || xn == 0 || xn.gcd(&xd) != 1 || 2 * xn > xd {
        return Err(reject(format!("xmax {xn}/{xd} is not a reduced fraction in (0, 1/2]")));
    }
    let k = (q as u128 * xn / xd) as u64;
    let on_lattice = (q as u128 * xn) % xd == 0;
    if cert.a0 == 0 || cert.a0 > k {
        return Err(reject(format!("a0 = {} outside 1..={k}", cert.a0)));
    }
    if cert.a0 as u128 * xd >= xn * q as u128 {
        return Err(reject("empty interval"));
    }

    // Margins must list a0..=k in order.
    if cert.margins.len() as u64 != k - cert.a0 + 1 {
        return Err(reject(format!("expected {} margins, found {}", k - cert.a0 + 1, cert.margins.len())));
    }

    // h, A, B by direct summation.
    let half = (q - 1) / 2;
    let top = half.max(k);
    let (mut a_sum, mut b_sum) = (0i128, 0i128);
    let (mut a_half, mut b_half) = (0i128, 0i128);
    let mut ab = Vec::with_capacity((k - cert.a0 + 1) as usize);
    for m in 1..=top {
        let c = chi(m)? as i128;
        a_sum += c;
        b_sum += m as i128 * c;
        if m == half {
            a_half = a_sum;
            b_half = b_sum;
        }
        if m >= cert.a0 && m <= k {
            ab.push((a_sum, b_sum));
        }
    }
    let num = q as i128 * a_half - 2 * b_half;
    if num % q as i128 != 0 || num / q as i128 != cert.h as i128 {
        return Err(reject(format!("class number mismatch: certificate says {}", cert.h)));
    }
    let h = cert.h as i128;

    // (pi2_num W N)^2 >= q^3 pi2_den^2
    let pi2_num = BigInt::from(9_869_604_401u64);
    let pi2_den = BigInt::from(1_000_000_000u64);
    let qb = BigInt::from(q);
    let nb = BigInt::from(n);
    let lattice_ok = |w: i128| {
        if w <= 0 {
            return false;
        }
        let lhs = &pi2_num * BigInt::from(w) * &nb;
        let rhs = &qb * &qb * &qb * &pi2_den * &pi2_den;
        &lhs * &lhs >= rhs
    };
    for (i, m) in cert.margins.iter().enumerate() {
        let a = cert.a0 + i as u64;
        if m.a != a {
            return Err(reject(format!("margin {i} cites a = {}, expected {a}", m.a)));
        }
        let (sa, sb) = ab[i];
        let w = a as i128 * (h - sa) + sb;
        if w != m.w {
            return Err(reject(format!("W({a}) = {w}, certificate says {}", m.w)));
        }
        if !lattice_ok(w) {
            return Err(reject(format!("W({a}) = {w} does not clear 2/N")));
        }
    }

    // Right end when it is not a lattice point: f_q(xmax) = (2π²/√q) c with
    // c = xmax (h - A(k)) + B(k)/q = (q xn (h - A) + xd B) / (q xd).
    if !on_lattice {
        let (sa, sb) = *ab.last().expect("nonempty margins");
        let cn = BigInt::from(q) * BigInt::from(xn) * BigInt::from(h - sa) + BigInt::from(xd) * BigInt::from(sb);
        let cd = BigInt::from(q) * BigInt::from(xd);
        // c π² N >= √q  <=>  (cn pi2_num N)^2 >= q (cd pi2_den)^2
        let lhs = &cn * &pi2_num * &nb;
        let rhs = &cd * &pi2_den;
        if !cn.is_positive() || &lhs * &lhs < &qb * &rhs * &rhs {
            return Err(reject(format!("f_q({xn}/{xd}) does not clear 2/N")));
        }
    }
    Ok(())
}

/// Joins certificates for `[x0, x1]` and `[x1, x2]` sharing `q`.
pub fn merge_certificates(
    left: &PositivityCertificate,
    right: &PositivityCertificate,
) -> Result<PositivityCertificate> {
    if (left.q, left.h, left.agreement_n) != (right.q, right.h, right.agreement_n) {
        return Err(Error::Precondition("certificates use different moduli".into()));
    }
    let x1 = Rational::ratio(left.xmax_num as i128, left.xmax_den as i128);
    if x1 != Rational::ratio(right.a0 as i128, right.q as i128) {
        return Err(Error::Precondition(format!("left ends at {x1}, right starts at {}/{}", right.a0, right.q)));
    }
    let mut margins = left.margins.clone();
    margins.extend(right.margins.iter().copied().filter(|m| m.a > right.a0));
    Ok(PositivityCertificate {
        version: CERTIFICATE_VERSION,
        q: left.q,
        h: left.h,
        agreement_n: left.agreement_n,
        a0: left.a0,
        xmax_num: right.xmax_num,
        xmax_den: right.xmax_den,
        margins,
        verdict: CERTIFIED.into(),
    })
}

/// `test_a(p, q)` for all primes `p < q`, both `≡ 3 (mod 8)`, `p <= p_max`,
/// `q <= q_max`, and all `1 <= a < p/2`.
pub fn scan_test_pq(p_max: u64, q_max: u64) -> Result<Vec<TestPQ>> {
    let mut out = Vec::new();
    for q in primes_in_range(5, q_max, Some(Residue::new(3, 8))) {
        let chi = QuadChar::new(q)?;
        for p in primes_in_range(3, p_max.min(q - 1), Some(Residue::new(3, 8))) {
            out.extend(fq_theorem5_all(p, &chi)?);
        }
    }
    Ok(out)
}

/// `i128` as a JSON number when it fits in `i64`, otherwise as a string.
mod i128_str {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &i128, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*v) {
            Ok(x) => s.serialize_i64(x),
            Err(_) => s.collect_str(v),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<i128, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            N(i64),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::N(x) => Ok(x as i128),
            Repr::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

mod opt_i128_str {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<i128>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => super::i128_str::serialize(x, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<i128>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::i128_str")] i128);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}
