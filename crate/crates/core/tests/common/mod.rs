#![allow(dead_code)]

use lightning_heat::specfun::bessel_k;
use lightning_heat::{c64, Complex64};

pub const BESSEL_ORACLE: &str = include_str!("../fixtures/bessel_k_oracle.txt");

/// A decimal string split as `mantissa · 10^exponent`, so values far below
/// `f64::MIN_POSITIVE` keep their digits.
fn split_decimal(text: &str) -> (f64, i32) {
    let (mant, exp) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().unwrap()),
        None => (text, 0),
    };
    let m: f64 = mant.parse().unwrap();
    if m == 0.0 {
        return (0.0, i32::MIN);
    }
    // Normalise the mantissa into [1, 10).
    let shift = m.abs().log10().floor() as i32;
    (m / 10f64.powi(shift), exp + shift)
}

pub struct OracleRecord {
    pub order: u32,
    pub z: Complex64,
    /// Reference `e^z K_n(z)`.
    pub scaled: Complex64,
}

pub fn oracle_records() -> Vec<OracleRecord> {
    BESSEL_ORACLE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split_whitespace().collect();
            assert_eq!(f.len(), 5, "malformed oracle record: {line}");
            let order: u32 = f[0].parse().unwrap();
            let z = c64(f[1].parse().unwrap(), f[2].parse().unwrap());
            let (mr, er) = split_decimal(f[3]);
            let (mi, ei) = split_decimal(f[4]);
            let e = er.max(ei);
            let part = |m: f64, x: i32| if x == i32::MIN { 0.0 } else { m * 10f64.powi(x - e) };
            let c = c64(part(mr, er), part(mi, ei));
            let scaled = c * (z + (e as f64) * std::f64::consts::LN_10).exp();
            OracleRecord { order, z, scaled }
        })
        .collect()
}

/// Worst relative error of `bessel_k` (scaled form) over the oracle table.
pub fn bessel_oracle_worst() -> (usize, f64, u32, Complex64) {
    let records = oracle_records();
    let mut worst = (0.0, 0, c64(0.0, 0.0));
    for r in &records {
        let got = bessel_k(r.order, r.z, true).unwrap();
        let err = (got - r.scaled).norm() / r.scaled.norm();
        if err > worst.0 {
            worst = (err, r.order, r.z);
        }
    }
    (records.len(), worst.0, worst.1, worst.2)
}

/// Worst relative recurrence residual on `0.1 ≤ |z| ≤ 50`, `n ≤ 20`.
pub fn recurrence_worst() -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..25 {
        let r = 0.1 * (500f64).powf(i as f64 / 24.0);
        for j in 0..7 {
            let z = Complex64::from_polar(r, -1.5 + 0.5 * j as f64);
            let ks = lightning_heat::specfun::bessel_k_sequence(21, z, true).unwrap();
            for n in 1..=20 {
                let res = ks[n + 1] - ks[n - 1] - z.inv() * (2.0 * n as f64) * ks[n];
                worst = worst.max(res.norm() / ks[n + 1].norm());
            }
        }
    }
    worst
}
pub mod props;
