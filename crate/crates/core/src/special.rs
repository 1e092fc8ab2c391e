//! Log-factorials and associated Laguerre polynomials in a scaled,
//! overflow-safe form.

use std::sync::OnceLock;

const LN_FACT_TABLE: usize = 4096;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_TABLE);
        t.push(0.0);
        for k in 1..LN_FACT_TABLE {
            let prev = t[k - 1];
            t.push(prev + (k as f64).ln());
        }
        t
    })
}

/// `ln n!`.
pub fn ln_factorial(n: usize) -> f64 {
    let table = ln_fact_table();
    if n < table.len() {
        table[n]
    } else {
        // Stirling series, far beyond any truncation used here
        let x = n as f64 + 1.0;
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3))
    }
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// A real number stored as sign and natural log of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogReal {
    pub sign: f64,
    pub ln_abs: f64,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal {
        sign: 0.0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

const RESCALE_HI: f64 = 1e200;
const RESCALE_LO: f64 = 1e-200;

/// Values `P_k = t^k L_k^{(a)}(y / t)` for `k = 0..=kmax`.
///
/// Running the three-term recurrence on `P_k` instead of `L_k` keeps the
/// `t → 0` limit finite (`P_k → (-y)^k / k!`), and a running log-scale keeps
/// large arguments from overflowing.
pub fn scaled_laguerre(a: usize, t: f64, y: f64, kmax: usize) -> Vec<LogReal> {
    let mut out = Vec::with_capacity(kmax + 1);
    let a = a as f64;
    let mut scale = 0.0f64;
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    out.push(LogReal {
        sign: 1.0,
        ln_abs: 0.0,
    });
    for k in 0..kmax {
        let kf = k as f64;
        let next = if k == 0 {
            t * (1.0 + a) - y
        } else {
            (((2.0 * kf + 1.0 + a) * t - y) * cur - (kf + a) * t * t * prev) / (kf + 1.0)
        };
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > RESCALE_HI || (mag > 0.0 && mag < RESCALE_LO) {
            let f = mag;
            cur /= f;
            prev /= f;
            scale += f.ln();
        }
        out.push(if cur == 0.0 {
            LogReal::ZERO
        } else {
            LogReal {
                sign: cur.signum(),
                ln_abs: cur.abs().ln() + scale,
            }
        });
    }
    out
}

/// Generalised Laguerre polynomial `L_m^{(a)}(x)`.
pub fn assoc_laguerre(m: usize, a: usize, x: f64) -> f64 {
    scaled_laguerre(a, 1.0, x, m)[m].value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::bigint::BigInt;
    use num::rational::BigRational;
    use num::{One, ToPrimitive, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn big_binomial(n: u64, k: u64) -> BigInt {
        let mut acc = BigInt::one();
        for i in 0..k {
            acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        acc
    }

    /// Exact rational evaluation of the explicit sum
    /// `Σ_i (-1)^i C(m+a, m-i) x^i / i!`.
    fn exact_laguerre(m: u64, a: u64, x: &BigRational) -> BigRational {
        let mut sum = BigRational::zero();
        let mut xpow = BigRational::one();
        let mut fact = BigInt::one();
        for i in 0..=m {
            if i > 0 {
                xpow = &xpow * x;
                fact *= BigInt::from(i);
            }
            let term = BigRational::from_integer(big_binomial(m + a, m - i)) * &xpow
                / BigRational::from_integer(fact.clone());
            if i % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        sum
    }

    #[test]
    fn low_order_closed_forms() {
        let x = 0.37;
        assert_eq!(assoc_laguerre(0, 3, x), 1.0);
        assert!((assoc_laguerre(1, 2, x) - (3.0 - x)).abs() < 1e-15);
        let l2 = (x * x - 2.0 * (2.0 + 1.0) * x + (1.0 + 1.0) * (1.0 + 2.0)) / 2.0;
        assert!((assoc_laguerre(2, 1, x) - l2).abs() < 1e-14);
    }

    #[test]
    fn recurrence_matches_exact_rational_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let m = rng.random_range(0..60u64);
            let a = rng.random_range(0..60u64);
            let num = rng.random_range(0..4000i64);
            let x = BigRational::new(BigInt::from(num), BigInt::from(100));
            let xf = num as f64 / 100.0;
            let exact = exact_laguerre(m, a, &x).to_f64().unwrap();
            let got = assoc_laguerre(m as usize, a as usize, xf);
            // relative to the polynomial's envelope near sign changes
            let envelope = exact
                .abs()
                .max(assoc_laguerre(m.saturating_sub(1) as usize, a as usize, xf).abs())
                .max(1e-300);
            let rel = (got - exact).abs() / envelope;
            worst = worst.max(rel);
        }
        assert!(worst < 1e-10, "worst relative error {worst:e}");
    }

    #[test]
    fn scaled_form_has_finite_zero_ratio_limit() {
        let y = -2.5;
        let vals = scaled_laguerre(3, 0.0, y, 6);
        let mut fact = 1.0;
        for (k, v) in vals.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            let expect = (-y).powi(k as i32) / fact;
            assert!((v.value() - expect).abs() < 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn large_arguments_stay_finite() {
        let vals = scaled_laguerre(5, -1.0, -900.0, 400);
        assert!(vals.iter().all(|v| v.ln_abs.is_finite() || v.sign == 0.0));
    }

    #[test]
    fn ln_factorial_matches_product() {
        let mut acc = 0.0;
        for n in 1..200usize {
            acc += (n as f64).ln();
            assert!((ln_factorial(n) - acc).abs() < 1e-9);
        }
        // Stirling branch continuity
        let n = LN_FACT_TABLE - 1;
        let direct = ln_factorial(n);
        let x = n as f64 + 1.0;
        let stirling = (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x);
        assert!((direct - stirling).abs() < 1e-8);
    }
}
