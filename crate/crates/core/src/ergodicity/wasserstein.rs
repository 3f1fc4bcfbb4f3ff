use alloc::format;
use alloc::vec::Vec;

use crate::math::abs;
use crate::{Error, Result};

/// 1-Wasserstein distance between two empirical laws on ℝ, computed exactly
/// as ∫₀¹ |F⁻¹(u) − G⁻¹(u)| du over the merged quantile breakpoints. For
/// equal sizes this is the mean of |a₍ᵢ₎ − b₍ᵢ₎|.
pub fn w1_scalar(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Usage(format!(
            "w1_scalar needs nonempty samples, got sizes {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Usage("w1_scalar samples must be finite".into()));
    }
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    if n == m {
        return Ok(xs.iter().zip(&ys).map(|(x, y)| abs(x - y)).sum::<f64>() / n as f64);
    }
    // walk the common refinement of {i/n} and {j/m} in integer units of 1/(n·m)
    let (mut i, mut j) = (0usize, 0usize);
    let (mut u, mut total) = (0usize, 0.0);
    let end = n * m;
    while u < end {
        let next_a = (i + 1) * m;
        let next_b = (j + 1) * n;
        let next = next_a.min(next_b);
        total += (next - u) as f64 * abs(xs[i] - ys[j]);
        u = next;
        if next == next_a {
            i += 1;
        }
        if next == next_b {
            j += 1;
        }
    }
    Ok(total / end as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(w1_scalar(&[1.0, 5.0, 2.0], &[2.0, 1.0, 5.0]).unwrap(), 0.0);
        assert_eq!(w1_scalar(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(w1_scalar(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap(), 1.0);
        assert!(matches!(w1_scalar(&[], &[1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn unequal_sizes_use_quantile_functions() {
        // {0, 1} against {0, 0.5, 1}: quantile gap is 0.5 on (1/3, 1/2) and (1/2, 2/3)
        assert_abs_diff_eq!(
            w1_scalar(&[0.0, 1.0], &[0.0, 0.5, 1.0]).unwrap(),
            1.0 / 6.0,
            epsilon = 1e-15
        );
        // a point mass against a sample is the mean absolute deviation
        assert_abs_diff_eq!(
            w1_scalar(&[1.0], &[0.0, 1.0, 5.0]).unwrap(),
            5.0 / 3.0,
            epsilon = 1e-15
        );
        // repeating a sample does not change its law
        let a = [0.3, 1.7, -2.0];
        let doubled = [0.3, 0.3, 1.7, 1.7, -2.0, -2.0];
        assert_abs_diff_eq!(w1_scalar(&a, &doubled).unwrap(), 0.0, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn metric_axioms(
            a in proptest::collection::vec(-10.0f64..10.0, 8),
            b in proptest::collection::vec(-10.0f64..10.0, 8),
            c in proptest::collection::vec(-10.0f64..10.0, 8),
        ) {
            let ab = w1_scalar(&a, &b).unwrap();
            prop_assert_eq!(ab, w1_scalar(&b, &a).unwrap());
            prop_assert_eq!(w1_scalar(&a, &a).unwrap(), 0.0);
            prop_assert!(ab <= w1_scalar(&a, &c).unwrap() + w1_scalar(&c, &b).unwrap() + 1e-12);
        }

        #[test]
        fn shift_moves_by_the_shift(a in proptest::collection::vec(-10.0f64..10.0, 1..12), s in -5.0f64..5.0) {
            let b: Vec<f64> = a.iter().map(|v| v + s).collect();
            prop_assert!((w1_scalar(&a, &b).unwrap() - s.abs()).abs() < 1e-12);
        }
    }
}
