//! Modified Bessel function of the first kind for integer orders.

use crate::{Error, Result};

/// `I_alpha(u)` by the ascending power series
/// `sum_k (u/2)^(2k+alpha) / (k! (k+alpha)!)`, truncated once a term drops
/// below `1e-16` of the running sum.
pub fn bessel_i(alpha: usize, u: f64) -> Result<f64> {
    if !u.is_finite() || u < 0.0 {
        return Err(Error::Config(format!("bessel_i needs finite u >= 0, got {u}")));
    }
    let half = u / 2.0;
    // k = 0 term: (u/2)^alpha / alpha!.
    let mut term = 1.0;
    for k in 1..=alpha {
        term *= half / k as f64;
    }
    let mut sum = term;
    let mut k = 1.0;
    while term > sum.abs() * 1e-16 && k < 1000.0 {
        term *= half * half / (k * (k + alpha as f64));
        sum += term;
        k += 1.0;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    /// Exact-rational series evaluation at rational `u/2`, for oracle use.
    fn oracle(alpha: usize, half_num: i64, half_den: i64, terms: usize) -> f64 {
        let half = BigRational::new(BigInt::from(half_num), BigInt::from(half_den));
        let mut sum = BigRational::zero();
        for k in 0..terms {
            let mut t = BigRational::one();
            for _ in 0..(2 * k + alpha) {
                t *= half.clone();
            }
            let mut fact = BigInt::one();
            for i in 1..=k {
                fact *= BigInt::from(i);
            }
            for i in 1..=(k + alpha) {
                fact *= BigInt::from(i);
            }
            sum += t / BigRational::from_integer(fact);
        }
        sum.to_f64().unwrap()
    }

    #[test]
    fn zero_argument_is_exact() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn order_zero_at_one_matches_the_rational_series() {
        let got = bessel_i(0, 1.0).unwrap();
        let want = oracle(0, 1, 2, 30);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!((got - 1.2660658777520084).abs() < 1e-12);
    }

    #[test]
    fn order_seven_at_two_matches_the_rational_series() {
        let got = bessel_i(7, 2.0).unwrap();
        let want = oracle(7, 1, 1, 40);
        assert!((got - want).abs() / want < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn fractional_argument_matches_the_rational_series() {
        // u = 1/2 so u/2 = 1/4 stays exactly rational.
        let got = bessel_i(2, 0.5).unwrap();
        let want = oracle(2, 1, 4, 30);
        assert!((got - want).abs() / want < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn negative_or_nan_arguments_are_rejected() {
        assert!(bessel_i(0, -1.0).is_err());
        assert!(bessel_i(0, f64::NAN).is_err());
    }
}
