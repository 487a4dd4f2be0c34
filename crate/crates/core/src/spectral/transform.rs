//! Frequency warping and cepstral sequence transforms.

/// Warped frequency of a linear frequency under the first-order all-pass
/// `(z^-1 - alpha) / (1 - alpha z^-1)`.
pub fn warp(omega: f64, alpha: f64) -> f64 {
    omega + 2.0 * (alpha * omega.sin()).atan2(1.0 - alpha * omega.cos())
}

/// Inverse of [`warp`].
pub fn unwarp(big_omega: f64, alpha: f64) -> f64 {
    warp(big_omega, -alpha)
}

/// Re-expresses a cepstral sequence on the axis warped by `alpha` (use
/// `-alpha` to unwarp). Applies equally to normalised generalized cepstra,
/// since the substitution is linear in the coefficients.
pub fn freqt(c: &[f64], out_order: usize, alpha: f64) -> Vec<f64> {
    let b = 1.0 - alpha * alpha;
    let mut g = vec![0.0; out_order + 1];
    let mut d = vec![0.0; out_order + 1];
    for &ci in c.iter().rev() {
        d.copy_from_slice(&g);
        g[0] = ci + alpha * d[0];
        if out_order >= 1 {
            g[1] = b * d[0] + alpha * d[1];
        }
        for j in 2..=out_order {
            g[j] = d[j - 1] + alpha * (d[j] - g[j - 1]);
        }
    }
    g
}

/// Converts normalised generalized cepstra between gamma values; element 0
/// is the gain term and is copied through.
pub fn gc2gc(c1: &[f64], g1: f64, g2: f64, out_order: usize) -> Vec<f64> {
    let m1 = c1.len() - 1;
    let mut c2 = vec![0.0; out_order + 1];
    c2[0] = c1[0];
    for i in 1..=out_order {
        let (mut ss1, mut ss2) = (0.0, 0.0);
        for k in 1..=m1.min(i - 1) {
            let mk = i - k;
            let cc = c1[k] * c2[mk];
            ss2 += k as f64 * cc;
            ss1 += mk as f64 * cc;
        }
        let base = if i <= m1 { c1[i] } else { 0.0 };
        c2[i] = base + (g2 * ss2 - g1 * ss1) / i as f64;
    }
    c2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warp_roundtrip_and_endpoints() {
        for k in 0..=20 {
            let w = std::f64::consts::PI * k as f64 / 20.0;
            assert!((unwarp(warp(w, 0.42), 0.42) - w).abs() < 1e-12);
        }
        assert!(warp(std::f64::consts::PI, 0.42).abs() - std::f64::consts::PI < 1e-12);
        assert!(warp(0.3, 0.42) > 0.3);
    }

    #[test]
    fn freqt_there_and_back() {
        let c = [0.3, -0.5, 0.2, 0.1, -0.05];
        let warped = freqt(&c, 200, 0.42);
        let back = freqt(&warped, 4, -0.42);
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn gc2gc_roundtrip() {
        let c = [0.0, 0.4, -0.2, 0.1];
        let g = gc2gc(&c, 0.0, -1.0 / 3.0, 60);
        let back = gc2gc(&g, -1.0 / 3.0, 0.0, 3);
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
    }
}
