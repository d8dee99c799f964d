use crate::error::{Error, Result};

/// Jacobi symbol `(n | m)` for odd positive `m`.
///
/// Agrees with the Legendre symbol when `m` is prime and is periodic in `n`
/// with period `m`.
pub fn jacobi(n: i64, m: i64) -> Result<i8> {
    if m <= 0 || m % 2 == 0 {
        return Err(Error::EvenModulus(m as i128));
    }
    let m = m as u64;
    let a = (n as i128).rem_euclid(m as i128) as u64;
    Ok(jacobi_odd(a, m))
}

/// Binary Jacobi symbol. `n` must be odd; `a` may be any value.
#[inline]
pub fn jacobi_odd(mut a: u64, mut n: u64) -> i8 {
    debug_assert!(n & 1 == 1);
    if a >= n {
        a %= n;
    }
    let mut t: i8 = 1;
    while a != 0 {
        let z = a.trailing_zeros();
        a >>= z;
        // (2|n) = -1 iff n = 3, 5 mod 8
        if z & 1 == 1 && ((n & 7) == 3 || (n & 7) == 5) {
            t = -t;
        }
        if a < n {
            std::mem::swap(&mut a, &mut n);
            if a & n & 3 == 3 {
                t = -t;
            }
        }
        a -= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}
