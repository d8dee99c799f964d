/// `λ(n)` for `1 <= n <= limit`.
#[derive(Debug, Clone)]
pub struct LiouvilleTable {
    values: Vec<i8>,
}

impl LiouvilleTable {
    pub fn limit(&self) -> usize {
        self.values.len() - 1
    }

    /// `λ(n)`; panics for `n = 0` or `n > limit`.
    #[inline]
    pub fn get(&self, n: usize) -> i8 {
        assert!(n >= 1, "λ is defined for n >= 1");
        self.values[n]
    }

    /// Values for `n = 1..=limit`.
    pub fn as_slice(&self) -> &[i8] {
        &self.values[1..]
    }
}

/// Linear sieve: every composite is visited once through its least prime factor.
pub fn liouville_sieve(limit: usize) -> LiouvilleTable {
    let limit = limit.max(1);
    let mut values = vec![0i8; limit + 1];
    let mut primes: Vec<usize> = Vec::new();
    values[1] = 1;
    for i in 2..=limit {
        if values[i] == 0 {
            values[i] = -1;
            primes.push(i);
        }
        let li = values[i];
        for &p in &primes {
            let ip = i * p;
            if ip > limit {
                break;
            }
            values[ip] = -li;
            if i % p == 0 {
                break;
            }
        }
    }
    LiouvilleTable { values }
}
