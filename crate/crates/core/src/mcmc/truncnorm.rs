use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Intervals narrower than this use uniform proposals; wider ones use a
/// one-sided sampler with rejection on the far bound.
const NARROW: f64 = 2.5;

/// Draws from N(mu, 1) restricted to (lo, hi]. Either bound may be infinite.
pub fn sample_truncated_normal<T: Scalar, R: Rng + ?Sized>(mu: T, lo: T, hi: T, rng: &mut R) -> Result<T> {
    let (m, l, h) = (mu.f64(), lo.f64(), hi.f64());
    if m.is_nan() || l.is_nan() || h.is_nan() || !m.is_finite() {
        return Err(Error::Domain("truncated normal needs a finite mean and ordered bounds".into()));
    }
    if l >= h {
        return Err(Error::Domain(format!("empty truncation interval ({l}, {h}]")));
    }
    let x = T::of(m + standard(l - m, h - m, rng));
    // rounding into a narrower type can land on the open bound
    if x <= lo {
        return Ok((lo + lo.abs().max(T::min_positive_value()) * T::epsilon()).min(hi));
    }
    Ok(x.min(hi))
}

fn standard<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    match (a.is_finite(), b.is_finite()) {
        (false, false) => StandardNormal.sample(rng),
        (true, false) => lower_tail(a, f64::INFINITY, rng),
        (false, true) => -lower_tail(-b, f64::INFINITY, rng),
        (true, true) => {
            if b - a < NARROW {
                uniform_proposal(a, b, rng)
            } else if a >= 0.0 {
                lower_tail(a, b, rng)
            } else if b <= 0.0 {
                -lower_tail(-b, -a, rng)
            } else {
                // wide interval containing 0 holds most of the mass
                loop {
                    let z: f64 = StandardNormal.sample(rng);
                    if z > a && z <= b {
                        return z;
                    }
                }
            }
        }
    }
}

/// Z > a, optionally rejecting Z > b. Uses plain rejection when a ≤ 0 and
/// Robert's translated-exponential proposal otherwise.
fn lower_tail<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a <= 0.0 {
        loop {
            let z: f64 = StandardNormal.sample(rng);
            if z > a && z <= b {
                return z;
            }
        }
    }
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    let exp = Exp::new(alpha).expect("rate is positive");
    loop {
        let z = a + exp.sample(rng);
        let u: f64 = rng.random();
        if z <= b && u.ln() <= -0.5 * (z - alpha) * (z - alpha) {
            return z;
        }
    }
}

fn uniform_proposal<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    // log of the envelope maximum of exp(−z²/2) on [a, b]
    let peak = if a > 0.0 {
        a * a
    } else if b < 0.0 {
        b * b
    } else {
        0.0
    };
    loop {
        let z = rng.random_range(a..b);
        let u: f64 = rng.random();
        if z > a && u.ln() <= 0.5 * (peak - z * z) {
            return z;
        }
    }
}
