//! Exact computations with the real odd quadratic characters `χ_q` and the
//! functions
//!
//! ```text
//! f_q(x) = Σ χ_q(n) sin(2πnx) / n²      f(x) = Σ λ(n) sin(2πnx) / n²
//! ```
//!
//! Verdicts are decided in integer or rational arithmetic; floats are used
//! only for reporting and for truncated series with explicit tail bounds.

pub mod charsum;
pub mod error;
pub mod fq;
pub mod liouville;
pub mod ntcore;
pub mod verify;

pub use charsum::{class_number, w_profile, ClassNumber, WProfile};
pub use error::{Error, Result};
pub use fq::{fq_exact, fq_series, FqValue, SeriesValue, TestPQ};
pub use liouville::{agreement_length, find_imitator, AgreementRecord};
pub use ntcore::{QuadChar, Rational};
pub use verify::{check_certificate, Conj1Report, PositivityCertificate, ScanConfig, ScanReport};
