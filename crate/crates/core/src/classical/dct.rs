use std::f64::consts::PI;

/// cos(π j / (2N)) for j in 0..4N; every DCT-II angle (2n+1)kπ/(2N) reduces
/// to one of these entries modulo 2π.
fn cos_table(n: usize) -> Vec<f64> {
    let period = 4 * n;
    (0..period)
        .map(|j| (PI * j as f64 / (2 * n) as f64).cos())
        .collect()
}

fn scale(k: usize, n: usize) -> f64 {
    if k == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

/// Orthonormal DCT-II.
pub fn dct(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let table = cos_table(n);
    let period = 4 * n;
    (0..n)
        .map(|k| {
            let sum: f64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| v * table[((2 * i + 1) * k) % period])
                .sum();
            scale(k, n) * sum
        })
        .collect()
}

/// Orthonormal DCT-III, the inverse of [`dct`].
pub fn idct(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n == 0 {
        return Vec::new();
    }
    let table = cos_table(n);
    let period = 4 * n;
    (0..n)
        .map(|i| {
            c.iter()
                .enumerate()
                .map(|(k, &v)| scale(k, n) * v * table[((2 * i + 1) * k) % period])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    #[test]
    fn constant_is_dc_only() {
        let n = 693;
        let c = dct(&vec![2.5; n]);
        assert!((c[0] - 2.5 * (n as f64).sqrt()).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn round_trip_and_parseval() {
        let mut rng = RngStream::new(17, 0).rng();
        for n in [1, 2, 7, 64, 693] {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c = dct(&x);
            let back = idct(&c);
            let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "n={n} err={err}");
            let ex: f64 = x.iter().map(|v| v * v).sum();
            let ec: f64 = c.iter().map(|v| v * v).sum();
            assert!((ex - ec).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_naive_definition() {
        let x = [1.0, -2.0, 0.5, 4.0, 3.0];
        let n = x.len() as f64;
        let c = dct(&x);
        for (k, ck) in c.iter().enumerate() {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * (2.0 * i as f64 + 1.0) * k as f64 / (2.0 * n)).cos())
                .sum();
            let w = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            assert!((ck - w * s).abs() < 1e-12);
        }
    }
}
