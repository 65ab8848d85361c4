//! Riccati-Bessel functions ĵ_l(x) = x j_l(x) and n̂_l(x) = x y_l(x), the
//! free-particle radial solutions used both for asymptotic matching and as
//! the exact long-range reference of the propagator.
//!
//! Conventions: ĵ_0 = sin x, n̂_0 = -cos x, Wronskian ĵ n̂' - ĵ' n̂ = +1.

use crate::error::{Error, Result};

/// Values and derivatives (ĵ_l, n̂_l, ĵ'_l, n̂'_l) at x > 0.
///
/// n̂ grows by upward recurrence (stable); ĵ decays for l > x, so it comes
/// from Miller's downward recurrence normalized at l = 0/1. Abramowitz &
/// Stegun 10.3.2 with f_{l+1} = (2l+1)/x f_l - f_{l-1} and
/// f'_l = f_{l-1} - (l/x) f_l.
pub fn riccati_pair(l: u32, x: f64) -> Result<(f64, f64, f64, f64)> {
    if !(x > 0.0) {
        return Err(Error::invalid(
            "x",
            format!("Riccati-Bessel needs x > 0, got {x}"),
        ));
    }
    let (j, jp) = riccati_j_pair(l, x)?;
    let (n, np) = riccati_n_pair(l, x)?;
    Ok((j, n, jp, np))
}

fn riccati_n_pair(l: u32, x: f64) -> Result<(f64, f64)> {
    // n̂_{-1} = sin x seeds the derivative identity at l = 0.
    let mut prev = x.sin();
    let mut cur = -x.cos();
    for order in 0..l {
        let next = (2.0 * order as f64 + 1.0) / x * cur - prev;
        if !next.is_finite() {
            return Err(Error::BesselOverflow { l, x });
        }
        prev = cur;
        cur = next;
    }
    let deriv = prev - (l as f64 / x) * cur;
    Ok((cur, deriv))
}

fn riccati_j_pair(l: u32, x: f64) -> Result<(f64, f64)> {
    if l == 0 {
        return Ok((x.sin(), x.cos()));
    }
    if (l as f64) < 0.5 * x {
        // Deep in the oscillatory regime the upward recurrence is stable and
        // the seeds are exact.
        let mut prev = x.sin();
        let mut cur = x.sin() / x - x.cos();
        for order in 1..l {
            let next = (2.0 * order as f64 + 1.0) / x * cur - prev;
            prev = cur;
            cur = next;
        }
        let deriv = prev - (l as f64 / x) * cur;
        return Ok((cur, deriv));
    }
    // Downward Miller recurrence. The start offset tracks the Airy
    // transition width x^(1/3): contamination by the growing solution decays
    // only over that scale above the turning order.
    let start = l.max(x.ceil() as u32) + 32 + (10.0 * x.cbrt()) as u32;
    let mut above = 0.0f64;
    let mut cur = 1e-280f64;
    let mut at_l = 0.0f64;
    let mut at_lm1 = 0.0f64;
    for order in (0..=start).rev() {
        let next = (2.0 * order as f64 + 3.0) / x * cur - above;
        // `next` is f_{order}; record the target orders on the way down.
        if order == l {
            at_l = next;
        } else if order + 1 == l {
            at_lm1 = next;
        }
        above = cur;
        cur = next;
        if cur.abs() > 1e250 {
            above /= 1e250;
            cur /= 1e250;
            at_l /= 1e250;
            at_lm1 /= 1e250;
        }
    }
    // cur = f_0, above = f_1 (unnormalized). Normalize against whichever of
    // ĵ_0 = sin x, ĵ_1 = sin x / x - cos x is better conditioned.
    let j0 = x.sin();
    let j1 = x.sin() / x - x.cos();
    let scale = if j0.abs() >= j1.abs() {
        j0 / cur
    } else {
        j1 / above
    };
    let j = at_l * scale;
    let jm1 = at_lm1 * scale;
    if !j.is_finite() || !jm1.is_finite() {
        return Err(Error::BesselOverflow { l, x });
    }
    let deriv = jm1 - (l as f64 / x) * j;
    Ok((j, deriv))
}
