//! Number-theoretic primitives shared by every other module.

pub mod chi;
pub mod jacobi;
pub mod liouville;
pub mod primality;
pub mod rational;
pub mod sieve;

pub use chi::{chi_sieve, ChiBlocks, ChiSieve, ChiStream, QuadChar, ResidueBitmap};
pub use jacobi::{jacobi, jacobi_odd};
pub use liouville::{liouville_sieve, LiouvilleTable};
pub use primality::{factorize, is_prime};
pub use rational::Rational;
pub use sieve::{primes_in_range, PrimeRange, Residue, BLOCK};
