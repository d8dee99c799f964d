//! `charsum`: command-line front end for the character-sum toolkit.
//!
//! Exit status: 0 success, 1 mathematical failure (violation, rejected
//! certificate, insufficient bound), 2 usage error, 3 I/O failure.

mod output;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use charsum_core::charsum::{prefix_sums, t_stat};
use charsum_core::fq::{fq_min_and_zeros, fq_theorem5, fq_theorem5_all, fq_theorem6, identity_rows, PiecewiseLinearFq};
use charsum_core::liouville::{f_series, DEFAULT_IMITATOR_CEILING};
use charsum_core::ntcore::{primes_in_range, Residue};
use charsum_core::verify::{certify_f_positive, scan_conjecture1, scan_test_pq};
use charsum_core::{
    agreement_length, check_certificate, class_number, find_imitator, Error, PositivityCertificate, QuadChar, Rational,
    ScanConfig, TestPQ,
};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use output::{Format, Table};

#[derive(Parser)]
#[command(name = "charsum", version, about = "Exact quadratic character sums and positivity checks for f and f_q")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value = "text")]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check f_q >= 0 on [0, 1/2] for every prime q = 3 mod 8 in a range.
    Verify(VerifyArgs),
    /// Certify f >= 0 on an interval starting at or below EPS.
    Certify(CertifyArgs),
    /// Emit plot data as x, value, error_bound rows.
    Plot(PlotArgs),
    /// Class number h(q).
    ClassNumber { q: u64 },
    /// Largest N with chi_q(n) = lambda(n) for all n <= N.
    Agreement {
        #[arg(long)]
        q: u64,
    },
    /// Smallest prime q = 3 mod 8 whose character agrees with lambda up to N.
    Imitator {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = DEFAULT_IMITATOR_CEILING)]
        ceiling: u64,
    },
    /// T(q) = sum_{n <= q/4} n chi_q(n) for primes q = 7 mod 8.
    Tq {
        #[arg(long)]
        q_max: u64,
    },
    /// Closed-form values test_a(p, q) from residue-class sums.
    Testpq(TestPqArgs),
    /// Exact f_q(x) at a rational point.
    FqEval {
        #[arg(long)]
        q: u64,
        /// Point as a/b.
        #[arg(long)]
        x: String,
    },
    /// Minimum of f_q on [0, 1/2] and its exact zeros.
    FqZeros {
        #[arg(long)]
        q: u64,
    },
    /// Check K(a) = 4qW(a), for one a or for every admissible a.
    Identity {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        a: Option<u64>,
    },
    /// Independently re-check a certificate file.
    CheckCert { path: PathBuf },
}

#[derive(Args)]
struct VerifyArgs {
    /// Smallest modulus (at least 5).
    #[arg(long)]
    q_min: Option<u64>,
    #[arg(long)]
    q_max: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Append-only JSON-lines checkpoint; an existing campaign resumes.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Campaign id recorded in the checkpoint.
    #[arg(long)]
    campaign: Option<String>,
    /// Primes per checkpoint line.
    #[arg(long, default_value_t = 1 << 16)]
    checkpoint_every: usize,
}

#[derive(Args)]
#[command(group(ArgGroup::new("modulus").required(true).args(["q", "auto"])))]
struct CertifyArgs {
    /// Left end to reach, as a/b.
    #[arg(long)]
    eps: String,
    #[arg(long)]
    q: Option<u64>,
    /// Search imitating primes of growing agreement length.
    #[arg(long)]
    auto: bool,
    /// Right end, as a/b.
    #[arg(long, default_value = "1/4")]
    xmax: String,
    /// Largest agreement length tried by --auto.
    #[arg(long, default_value_t = 48)]
    max_agreement: u64,
    /// Where to write the certificate.
    #[arg(long, default_value = "certificate.json")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    F,
    Fq,
    Diff,
}

#[derive(Args)]
struct PlotArgs {
    kind: PlotKind,
    #[arg(long)]
    q: Option<u64>,
    /// Decimal, parsed exactly.
    #[arg(long, default_value = "0.5")]
    xmax: String,
    /// Decimal, parsed exactly.
    #[arg(long, default_value = "0.001")]
    step: String,
    /// Terms of the series for f.
    #[arg(long, default_value_t = 1000)]
    terms: u64,
}

#[derive(Args)]
struct TestPqArgs {
    #[arg(long, conflicts_with = "p_max")]
    p: Option<u64>,
    #[arg(long, conflicts_with = "q_max")]
    q: Option<u64>,
    /// Single a; default is every 1 <= a < p/2.
    #[arg(long)]
    a: Option<u64>,
    /// Scan all primes p = 3 mod 8 up to this bound.
    #[arg(long, requires = "q_max")]
    p_max: Option<u64>,
    #[arg(long, requires = "p_max")]
    q_max: Option<u64>,
}

enum Failure {
    Usage(String),
    Math(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Io(e.to_string()),
            Error::Precondition(_) | Error::InvalidModulus { .. } | Error::EvenModulus(_) | Error::ParseRational(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Math(e.to_string()),
        }
    }
}

/// A rendered table plus the exit status it implies.
struct Outcome {
    table: Table,
    ok: bool,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Outcome { table, ok: true }
    }
}

type Run = Result<Outcome, Failure>;

/// Exact `a/b` input; decimals are refused.
fn parse_ratio(s: &str, what: &str) -> Result<Rational, Failure> {
    if !s.contains('/') {
        return Err(Failure::Usage(format!("{what} must be written a/b, got {s:?}")));
    }
    s.parse().map_err(|_| Failure::Usage(format!("cannot parse {what} {s:?}")))
}

fn chi_for(q: u64) -> Result<QuadChar, Failure> {
    Ok(QuadChar::new(q)?)
}

fn cmd_verify(a: &VerifyArgs) -> Run {
    let q_min = match a.q_min {
        Some(m) if m < 5 => return Err(Failure::Usage(format!("--q-min must be at least 5, got {m}"))),
        Some(m) if m > a.q_max => return Err(Failure::Usage(format!("invalid range [{m}, {}]", a.q_max))),
        Some(m) => m,
        // an empty default domain is a valid empty report
        None => 5.min(a.q_max),
    };
    if a.jobs == 0 {
        return Err(Failure::Usage("--jobs must be positive".into()));
    }
    let mut cfg = ScanConfig::new(q_min, a.q_max);
    cfg.jobs = a.jobs;
    cfg.checkpoint = a.checkpoint.clone();
    cfg.checkpoint_every = a.checkpoint_every;
    if let Some(c) = &a.campaign {
        cfg.campaign = c.clone();
    }
    let t0 = Instant::now();
    let r = scan_conjecture1(&cfg)?;
    eprintln!("verify: {} moduli in {:.2?}", r.aggregate.count, t0.elapsed());

    let agg = &r.aggregate;
    let failures: Vec<String> = agg.failures.iter().map(|f| f.q.to_string()).collect();
    let mut t =
        Table::new("verify", &["campaign", "q_min", "q_max", "count", "min_W", "argmin_q", "violations", "failed_q"]);
    t.row(vec![
        r.campaign.as_str().into(),
        r.q_min.into(),
        r.q_max.into(),
        agg.count.into(),
        agg.min_w.into(),
        agg.argmin_q.into(),
        (agg.failures.len() as u64).into(),
        failures.join(";").into(),
    ]);
    if agg.count == 0 {
        t.note("no prime q = 3 mod 8 in range");
    } else {
        t.note(format!(
            "{} primes q = 3 mod 8 in [{}, {}]: {} violations; min W = {} at q = {}",
            agg.count,
            r.q_min.max(5),
            r.q_max,
            agg.failures.len(),
            agg.min_w.unwrap_or_default(),
            agg.argmin_q.unwrap_or_default()
        ));
    }
    for f in &agg.failures {
        t.note(format!("violation: q = {}, h = {}, W({}) = {}", f.q, f.h, f.argmin_a, f.min_w));
    }
    Ok(Outcome { table: t, ok: r.holds() })
}

fn cmd_certify(a: &CertifyArgs) -> Run {
    let eps = parse_ratio(&a.eps, "--eps")?;
    let xmax = parse_ratio(&a.xmax, "--xmax")?;
    let chi = a.q.map(chi_for).transpose()?;
    let out = certify_f_positive(&eps, chi.as_ref(), &xmax, a.max_agreement)?;
    let c = &out.certificate;
    std::fs::write(&a.out, c.to_json()? + "\n").map_err(|e| Failure::Io(format!("{}: {e}", a.out.display())))?;
    let (lo, hi) = c.interval();
    let mut t = Table::new("certify", &["q", "agreement_N", "a0", "lo", "hi", "truncated", "certificate"]);
    t.note(format!("f >= 0 on [{lo}, {hi}] (q = {}, N = {}, |f - f_q| <= {})", c.q, c.agreement_n, c.error_bound()));
    if out.truncated {
        t.note(format!("requested xmax {} not reachable; coverage ends at {hi}", out.requested_xmax));
    }
    t.row(vec![
        c.q.into(),
        c.agreement_n.into(),
        c.a0.into(),
        lo.into(),
        hi.into(),
        out.truncated.into(),
        a.out.display().to_string().into(),
    ]);
    Ok(Outcome::ok(t))
}

fn cmd_plot(a: &PlotArgs) -> Run {
    let step = Rational::from_decimal_str(&a.step).map_err(|_| Failure::Usage(format!("bad --step {:?}", a.step)))?;
    let xmax = Rational::from_decimal_str(&a.xmax).map_err(|_| Failure::Usage(format!("bad --xmax {:?}", a.xmax)))?;
    if !step.is_positive() {
        return Err(Failure::Usage("--step must be positive".into()));
    }
    if xmax.is_negative() {
        return Err(Failure::Usage("--xmax must be nonnegative".into()));
    }
    if a.terms == 0 {
        return Err(Failure::Usage("--terms must be positive".into()));
    }
    let exact = match (a.kind, a.q) {
        (PlotKind::F, _) => None,
        (_, Some(q)) => Some(PiecewiseLinearFq::new(&chi_for(q)?)?),
        (_, None) => return Err(Failure::Usage("--q is required for fq and diff".into())),
    };
    let count = (&xmax / &step).floor();
    let count: u64 = count.try_into().map_err(|_| Failure::Usage("grid too large".into()))?;
    let tail = 1.0 / a.terms as f64;
    let mut t = Table::new("plot", &["x", "value", "error_bound"]);
    for i in 0..=count {
        let x = &Rational::integer(i) * &step;
        let fq = |x: &Rational| -> Result<f64, Failure> {
            let pw = exact.as_ref().expect("modulus given");
            let frac = x - &Rational::integer(x.floor());
            Ok(pw.eval(&frac)?.value)
        };
        let (value, err) = match a.kind {
            PlotKind::F => (f_series(x.to_f64(), a.terms).value, tail),
            PlotKind::Fq => (fq(&x)?, 0.0),
            PlotKind::Diff => (f_series(x.to_f64(), a.terms).value - fq(&x)?, tail),
        };
        t.row(vec![x.to_f64().into(), value.into(), err.into()]);
    }
    Ok(Outcome::ok(t))
}

fn cmd_class_number(q: u64) -> Run {
    let h = class_number(&chi_for(q)?)?;
    let mut t = Table::new("class-number", &["q", "h"]);
    t.note(format!("h({q}) = {}", h.h));
    t.row(vec![q.into(), h.h.into()]);
    Ok(Outcome::ok(t))
}

fn cmd_agreement(q: u64) -> Run {
    let r = agreement_length(&chi_for(q)?);
    let mut t = Table::new("agreement", &["q", "N", "first_mismatch"]);
    t.note(format!("chi_{q} = lambda on 1..={}; first mismatch at {}", r.n, r.first_mismatch));
    t.row(vec![q.into(), r.n.into(), r.first_mismatch.into()]);
    Ok(Outcome::ok(t))
}

fn cmd_imitator(n: u64, ceiling: u64) -> Run {
    let q = find_imitator(n, ceiling)?;
    let r = agreement_length(&chi_for(q)?);
    let mut t = Table::new("imitator", &["N", "q", "agreement_N"]);
    t.note(format!("smallest imitating prime for N = {n}: q = {q} (agreement {})", r.n));
    t.row(vec![n.into(), q.into(), r.n.into()]);
    Ok(Outcome::ok(t))
}

fn cmd_tq(q_max: u64) -> Run {
    let mut t = Table::new("tq", &["q", "T"]);
    let mut ok = true;
    for q in primes_in_range(7, q_max, Some(Residue::new(7, 8))) {
        let v = t_stat(q)?;
        ok &= v > 0;
        t.row(vec![q.into(), v.into()]);
    }
    Ok(Outcome { table: t, ok })
}

fn test_row(t: &mut Table, r: &TestPQ) {
    t.row(vec![
        r.a.into(),
        r.p.into(),
        r.q.into(),
        r.test.into(),
        r.raw.into(),
        r.f_value.into(),
        r.positive().into(),
        r.q_divides_test.into(),
        r.within_hypotheses.into(),
    ]);
}

fn cmd_testpq(a: &TestPqArgs) -> Run {
    let rows: Vec<TestPQ> = match (a.p, a.q, a.p_max, a.q_max) {
        (Some(p), Some(q), None, None) => {
            let chi = chi_for(q)?;
            match a.a {
                Some(x) => vec![fq_theorem5(x, p, &chi)?],
                None => fq_theorem5_all(p, &chi)?,
            }
        }
        (None, None, Some(pm), Some(qm)) => scan_test_pq(pm, qm)?,
        _ => return Err(Failure::Usage("give either --p and --q, or --p-max and --q-max".into())),
    };
    let mut t = Table::new(
        "testpq",
        &["a", "p", "q", "test", "raw", "f_value", "positive", "q_divides_test", "within_hypotheses"],
    );
    let negative = rows.iter().filter(|r| !r.positive()).count();
    let divisible = rows.iter().filter(|r| r.q_divides_test).count();
    t.note(format!("{} values: {negative} nonpositive, {divisible} divisible by q", rows.len()));
    for r in &rows {
        test_row(&mut t, r);
    }
    Ok(Outcome { table: t, ok: negative == 0 })
}

fn cmd_fq_eval(q: u64, x: &str) -> Run {
    let x = parse_ratio(x, "--x")?;
    let pw = PiecewiseLinearFq::new(&chi_for(q)?)?;
    let v = pw.eval(&x)?;
    let mut t = Table::new("fq-eval", &["q", "x", "coefficient", "value"]);
    t.note(format!("f_{q}({x}) = ({}) * 2 pi^2 / sqrt({q}) = {}", v.coefficient, output::fmt_g12(v.value)));
    t.row(vec![q.into(), x.into(), v.coefficient.into(), v.value.into()]);
    Ok(Outcome::ok(t))
}

fn cmd_fq_zeros(q: u64) -> Run {
    let chi = chi_for(q)?;
    let h = class_number(&chi)?;
    let e = fq_min_and_zeros(&chi, &h)?;
    let join = |v: Vec<String>| v.join(";");
    let mut t = Table::new(
        "fq-zeros",
        &["q", "h", "lattice_min_W", "lattice_argmins", "min_coefficient", "argmin", "zeros", "zero_pieces"],
    );
    t.note(format!(
        "f_{q} on [0, 1/2]: minimum ({}) * 2 pi^2 / sqrt({q}) at x = {}; {} zeros in (0, 1/2)",
        e.min_coefficient,
        e.argmin,
        e.zeros.len()
    ));
    t.row(vec![
        q.into(),
        e.h.into(),
        e.lattice_min_w.into(),
        join(e.lattice_argmins.iter().map(u64::to_string).collect()).into(),
        e.min_coefficient.clone().into(),
        e.argmin.clone().into(),
        join(e.zeros.iter().map(Rational::to_string).collect()).into(),
        join(e.zero_pieces.iter().map(u64::to_string).collect()).into(),
    ]);
    Ok(Outcome::ok(t))
}

fn cmd_identity(q: u64, a: Option<u64>) -> Run {
    let chi = chi_for(q)?;
    let h = class_number(&chi)?;
    let rows = match a {
        Some(a) => {
            let k = fq_theorem6(a, &chi)?.k;
            let s = prefix_sums(&chi, a, false)?;
            vec![(a, k, 4 * q as i128 * (a as i128 * (h.h as i128 - s.a()) + s.b()))]
        }
        None => identity_rows(&chi, &h)?,
    };
    let mut t = Table::new("identity", &["a", "K", "4qW", "ok"]);
    let failures = rows.iter().filter(|(_, k, rhs)| k != rhs).count();
    t.note(format!("K(a) = 4qW(a) for q = {q}: {} checked, {failures} failures", rows.len()));
    for (a, k, rhs) in rows {
        t.row(vec![a.into(), k.into(), rhs.into(), (k == rhs).into()]);
    }
    Ok(Outcome { table: t, ok: failures == 0 })
}

fn cmd_check_cert(path: &PathBuf) -> Run {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let cert: PositivityCertificate =
        serde_json::from_str(&text).map_err(|e| Failure::Math(format!("certificate rejected: malformed: {e}")))?;
    check_certificate(&cert)?;
    let (lo, hi) = cert.interval();
    let mut t = Table::new("check-cert", &["q", "agreement_N", "lo", "hi", "verdict"]);
    t.note(format!("accepted: f >= 0 on [{lo}, {hi}]"));
    t.row(vec![cert.q.into(), cert.agreement_n.into(), lo.into(), hi.into(), "accepted".into()]);
    Ok(Outcome::ok(t))
}

fn run(cli: &Cli) -> Run {
    match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Plot(a) => cmd_plot(a),
        Command::ClassNumber { q } => cmd_class_number(*q),
        Command::Agreement { q } => cmd_agreement(*q),
        Command::Imitator { n, ceiling } => cmd_imitator(*n, *ceiling),
        Command::Tq { q_max } => cmd_tq(*q_max),
        Command::Testpq(a) => cmd_testpq(a),
        Command::FqEval { q, x } => cmd_fq_eval(*q, x),
        Command::FqZeros { q } => cmd_fq_zeros(*q),
        Command::Identity { q, a } => cmd_identity(*q, *a),
        Command::CheckCert { path } => cmd_check_cert(path),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // a closed reader (e.g. `| head`) is not an error worth reporting
            if let Err(e) = stdout.write_all(out.table.render(cli.format).as_bytes()).and_then(|()| stdout.flush()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!("charsum: {e}");
                    return ExitCode::from(3);
                }
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            let (code, msg) = match f {
                Failure::Math(m) => (1, m),
                Failure::Usage(m) => (2, m),
                Failure::Io(m) => (3, m),
            };
            eprintln!("charsum: {msg}");
            ExitCode::from(code)
        }
    }
}
