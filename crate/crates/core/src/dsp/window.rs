use std::f64::consts::PI;

/// Symmetric Hann window (both end points zero).
pub fn hann(len: usize) -> Vec<f64> {
    match len {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..len)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
            .collect(),
    }
}

/// Periodic Hann window; shifted copies at `len/2` sum to exactly one.
pub fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Zeroth-order modified Bessel function of the first kind.
pub fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser window evaluated at offset `x` from the centre, `half_width` being
/// the distance to the edge. Zero outside.
pub fn kaiser_at(x: f64, half_width: f64, beta: f64) -> f64 {
    let r = x / half_width;
    if r.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - r * r).sqrt()) / bessel_i0(beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_hann_is_cola_at_half_length() {
        let w = hann_periodic(160);
        for n in 0..80 {
            assert!((w[n] + w[n + 80] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bessel_reference_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        // I0(1) and I0(8) from tables.
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-13);
        assert!((bessel_i0(8.0) - 427.564_115_721_804_74).abs() < 1e-9);
    }
}
