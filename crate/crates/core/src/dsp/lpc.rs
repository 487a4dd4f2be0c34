//! Autocorrelation-method linear prediction.

use num_traits::Float;

/// Biased autocorrelation `r[0..=max_lag]`.
pub fn autocorrelation<T: Float>(x: &[T], max_lag: usize) -> Vec<T> {
    (0..=max_lag)
        .map(|lag| {
            x.iter()
                .zip(x.iter().skip(lag))
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
        })
        .collect()
}

/// Levinson-Durbin recursion.
///
/// Returns the inverse-filter polynomial `a` with `a[0] = 1`, so that the
/// prediction error is `e[n] = sum_k a[k] x[n-k]`, together with the final
/// prediction error power. A zero-energy input yields the trivial filter.
pub fn levinson<T: Float>(r: &[T], order: usize) -> (Vec<T>, T) {
    let mut a = vec![T::zero(); order + 1];
    a[0] = T::one();
    if r.is_empty() || r[0] <= T::zero() {
        return (a, T::zero());
    }
    let mut err = r[0];
    let mut tmp = vec![T::zero(); order + 1];
    for i in 1..=order.min(r.len() - 1) {
        let mut acc = r[i];
        for j in 1..i {
            acc = acc + a[j] * r[i - j];
        }
        let k = -acc / err;
        if !k.is_finite() || k.abs() >= T::one() {
            break;
        }
        tmp[..=i].copy_from_slice(&a[..=i]);
        for j in 1..i {
            a[j] = tmp[j] + k * tmp[i - j];
        }
        a[i] = k;
        err = err * (T::one() - k * k);
        if err <= T::zero() {
            break;
        }
    }
    (a, err)
}

/// LPC inverse filter of one windowed frame, with a relative white-noise
/// correction on `r[0]` so that digital silence and pure tones stay stable.
pub fn lpc<T: Float>(frame: &[T], order: usize) -> Vec<T> {
    let mut r = autocorrelation(frame, order);
    if let Some(r0) = r.first_mut() {
        *r0 = *r0 * T::from(1.0 + 1e-9).unwrap();
    }
    levinson(&r, order).0
}
