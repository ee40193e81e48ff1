//! Modified Bessel functions Iₙ(z) of integer order and complex argument.
//!
//! Small arguments use the power series; otherwise Miller's backward
//! recurrence is normalized with e^z = I₀ + 2Σₖ Iₖ. Negative real parts are
//! folded with Iₙ(−z) = (−1)ⁿ Iₙ(z), so the normalization sum never suffers
//! from exponential cancellation.

use num_complex::Complex64 as c64;

use crate::error::{Error, Result};

/// Iₖ(z) for k = 0..=n_max.
pub fn bessel_i_sequence(n_max: usize, z: c64) -> Result<Vec<c64>> {
    scaled_sequence(n_max, z).map(|(v, shift)| {
        let f = c64::new(shift, 0.0).exp();
        v.into_iter().map(|x| x * f).collect()
    })
}

/// Iₙ(z) for any integer n (I₋ₙ = Iₙ).
pub fn bessel_i(n: i32, z: c64) -> Result<c64> {
    let k = n.unsigned_abs() as usize;
    Ok(bessel_i_sequence(k, z)?[k])
}

/// e^{−|Re z|} Iₖ(z) for k = 0..=n_max; stays finite for large arguments.
pub fn bessel_i_scaled_sequence(n_max: usize, z: c64) -> Result<Vec<c64>> {
    scaled_sequence(n_max, z).map(|(v, shift)| {
        let f = (shift - z.re.abs()).exp();
        v.into_iter().map(|x| x * f).collect()
    })
}

/// Returns values v and a shift s with Iₖ(z) = vₖ·e^s.
fn scaled_sequence(n_max: usize, z: c64) -> Result<(Vec<c64>, f64)> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(fail(n_max, z));
    }
    if z.norm() == 0.0 {
        let mut v = vec![c64::new(0.0, 0.0); n_max + 1];
        v[0] = c64::new(1.0, 0.0);
        return Ok((v, 0.0));
    }
    let flip = z.re < 0.0;
    let w = if flip { -z } else { z };
    let (mut v, shift) = if w.norm() <= 1.0 {
        (series(n_max, w), 0.0)
    } else {
        miller(n_max, w)?
    };
    if flip {
        for (k, x) in v.iter_mut().enumerate() {
            if k % 2 == 1 {
                *x = -*x;
            }
        }
    }
    if v.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(fail(n_max, z));
    }
    Ok((v, shift))
}

fn fail(n: usize, z: c64) -> Error {
    Error::Bessel {
        order: n as i32,
        z_re: z.re,
        z_im: z.im,
    }
}

fn series(n_max: usize, z: c64) -> Vec<c64> {
    let half = z * 0.5;
    let q = half * half;
    let mut out = Vec::with_capacity(n_max + 1);
    // (z/2)^n / n!
    let mut lead = c64::new(1.0, 0.0);
    for n in 0..=n_max {
        if n > 0 {
            lead = lead * half / n as f64;
        }
        let mut term = c64::new(1.0, 0.0);
        let mut sum = term;
        for j in 1..200 {
            term = term * q / (j as f64 * (n + j) as f64);
            sum += term;
            if term.norm() <= 1e-17 * sum.norm() {
                break;
            }
        }
        out.push(lead * sum);
    }
    out
}

fn miller(n_max: usize, z: c64) -> Result<(Vec<c64>, f64)> {
    let az = z.norm();
    let start = (n_max.max(az as usize) + 30 + (12.0 * az.sqrt()) as usize).next_multiple_of(2);
    let mut vals = vec![c64::new(0.0, 0.0); start + 2];
    let mut next = c64::new(0.0, 0.0);
    let mut cur = c64::new(1.0, 0.0);
    vals[start] = cur;
    let two_over_z = c64::new(2.0, 0.0) / z;
    for k in (1..=start).rev() {
        let prev = two_over_z * k as f64 * cur + next;
        next = cur;
        cur = prev;
        vals[k - 1] = cur;
        if cur.norm() > 1e250 {
            for v in vals[k - 1..=start].iter_mut() {
                *v *= 1e-250;
            }
            cur *= 1e-250;
            next *= 1e-250;
        }
    }
    // e^z = I₀ + 2 Σ Iₖ ; divide by the sum and keep e^{Re z} as a shift
    let mut sum = vals[0];
    for v in &vals[1..=start] {
        sum += *v * 2.0;
    }
    if sum.norm() == 0.0 {
        return Err(fail(n_max, z));
    }
    let phase = c64::new(0.0, z.im).exp();
    // divide by the modulus twice; |sum|² may overflow
    let m = sum.norm();
    let scale = phase * (sum.conj() / m) / m;
    vals.truncate(n_max + 1);
    vals.iter_mut().for_each(|v| *v *= scale);
    Ok((vals, z.re))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: c64, b: c64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn zero_argument() {
        let v = bessel_i_sequence(3, c64::new(0.0, 0.0)).unwrap();
        assert_eq!(v[0], c64::new(1.0, 0.0));
        assert!(v[1..].iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn reflection_and_order_symmetry() {
        let z = c64::new(2.3, -1.1);
        for n in 0..6 {
            let a = bessel_i(n, z).unwrap();
            let b = bessel_i(n, -z).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!(close(b, a * sign, 1e-13));
            assert!(close(bessel_i(-n, z).unwrap(), a, 0.0 + 1e-15));
        }
    }

    #[test]
    fn series_and_recurrence_agree_near_unit_modulus() {
        for z in [c64::new(0.99, 0.05), c64::new(0.0, 1.0), c64::new(0.6, -0.7)] {
            let s = series(12, z);
            let (m, shift) = miller(12, z).unwrap();
            let f = shift.exp();
            for k in 0..=12 {
                assert!(close(m[k] * f, s[k], 1e-12), "k={k} z={z}");
            }
        }
    }

    #[test]
    fn matches_reference_library() {
        let zs = [
            c64::new(0.3, 0.2),
            c64::new(5.0, 0.0),
            c64::new(0.0, 8.6),
            c64::new(0.0, -30.0),
            c64::new(39.0, 0.0),
            c64::new(-12.0, 4.0),
            c64::new(3.0, 25.0),
        ];
        for z in zs {
            let ours = bessel_i_sequence(50, z).unwrap();
            for (n, v) in ours.iter().enumerate() {
                let r = complex_bessel::besseli(n as f64, z).unwrap();
                // relative to the largest member so tiny high orders behave
                let scale = ours.iter().map(|x| x.norm()).fold(0.0, f64::max);
                assert!((v - r).norm() <= 1e-12 * scale.max(r.norm()), "n={n} z={z}: {v} vs {r}");
            }
        }
    }

    #[test]
    fn scaled_values_match_reference() {
        let z = c64::new(400.0, 3.0);
        let ours = bessel_i_scaled_sequence(20, z).unwrap();
        for (n, v) in ours.iter().enumerate() {
            let r = complex_bessel::besseli_scaled(n as f64, z).unwrap();
            assert!(close(*v, r, 1e-11), "n={n}: {v} vs {r}");
        }
    }

    proptest::proptest! {
        #[test]
        fn generating_function_identity(re in -20.0f64..20.0, im in -20.0f64..20.0) {
            let z = c64::new(re, im);
            let v = bessel_i_scaled_sequence(120, z).unwrap();
            let mut sum = v[0];
            for x in &v[1..] { sum += *x * 2.0; }
            let expect = (z - c64::new(z.re.abs(), 0.0)).exp();
            proptest::prop_assert!((sum - expect).norm() < 1e-11 * expect.norm().max(1.0));
        }
    }
}
