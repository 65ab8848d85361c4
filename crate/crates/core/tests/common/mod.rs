//! Shared oracles for the integration suites: Gauss-Legendre quadrature of
//! spherical-harmonic integrals and numeric checks of the threshold-law
//! integrals. Everything here is independent of the implementation paths it
//! is used to verify.

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence. Exact for polynomials of degree <= 2n - 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Normalized associated Legendre function with ∫_{-1}^{1} P̄_{lm}² dx = 1,
/// so that Y_lm = P̄_lm(cos θ) e^{imφ} / sqrt(2π).
pub fn assoc_legendre_normalized(l: u32, m: u32, x: f64) -> f64 {
    assert!(m <= l);
    // Seed P̄_mm, then ascend in l.
    let mut pmm = (0.5f64).sqrt();
    if m > 0 {
        let s = ((1.0 - x) * (1.0 + x)).sqrt();
        for k in 1..=m {
            let kf = k as f64;
            pmm *= -((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * s;
        }
    }
    if l == m {
        return pmm;
    }
    let mf = m as f64;
    let mut p_prev = pmm;
    let mut p_cur = x * (2.0 * mf + 3.0).sqrt() * pmm;
    if l == m + 1 {
        return p_cur;
    }
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let a = ((2.0 * lf + 1.0) * (2.0 * lf - 1.0) / ((lf - mf) * (lf + mf))).sqrt();
        let b = ((2.0 * lf + 1.0) * (lf - mf - 1.0) * (lf + mf - 1.0)
            / ((2.0 * lf - 3.0) * (lf - mf) * (lf + mf)))
            .sqrt();
        let p_next = a * x * p_cur - b * p_prev;
        p_prev = p_cur;
        p_cur = p_next;
    }
    p_cur
}

fn p2(x: f64) -> f64 {
    0.5 * (3.0 * x * x - 1.0)
}

/// <Y_{l_out, m} | P2(cos θ) | Y_{l_in, m}> by Gauss-Legendre quadrature,
/// exact up to rounding for the polynomial integrand.
pub fn p2_element_quadrature(l_out: u32, l_in: u32, m: u32) -> f64 {
    let (nodes, weights) = gauss_legendre(40);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| {
            w * assoc_legendre_normalized(l_out, m, x)
                * p2(x)
                * assoc_legendre_normalized(l_in, m, x)
        })
        .sum()
}

/// <Y_{lm} | P2² | Y_{lm}> by quadrature, for the sum-rule check.
pub fn p2_squared_expectation_quadrature(l: u32, m: u32) -> f64 {
    let (nodes, weights) = gauss_legendre(40);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| {
            let p = assoc_legendre_normalized(l, m, x);
            w * p * p2(x) * p2(x) * p
        })
        .sum()
}

/// Spherical Bessel j_l by downward recurrence (adequate far from overflow).
fn spherical_j(l: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let j0 = x.sin() / x;
    if l == 0 {
        return j0;
    }
    let j1 = x.sin() / (x * x) - x.cos() / x;
    if l == 1 {
        return j1;
    }
    let start = l.max(x.ceil() as u32) + 32 + (10.0 * x.cbrt()) as u32;
    let mut above = 0.0f64;
    let mut cur = 1e-280f64;
    let mut at_l = 0.0f64;
    for order in (0..=start).rev() {
        let next = (2.0 * order as f64 + 3.0) / x * cur - above;
        if order == l {
            at_l = next;
        }
        above = cur;
        cur = next;
        if cur.abs() > 1e250 {
            above /= 1e250;
            cur /= 1e250;
            at_l /= 1e250;
        }
    }
    let scale = if j0.abs() >= j1.abs() {
        j0 / cur
    } else {
        j1 / above
    };
    at_l * scale
}

/// ∫_0^∞ j_l(x) j_l(x) / x dx by composite Simpson plus an averaged tail
/// estimate; the closed value is 1/(2l(l+1)).
pub fn born_integral(l: u32) -> f64 {
    let x_max = 4000.0;
    let n = 800_000usize; // even
    let h = x_max / n as f64;
    let f = |x: f64| {
        if x == 0.0 {
            0.0
        } else {
            let j = spherical_j(l, x);
            j * j / x
        }
    };
    let mut sum = f(0.0) + f(x_max);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    let body = sum * h / 3.0;
    // j_l² averages 1/(2x²) at large x, so the tail is ~ ∫ dx/(2x³).
    let tail = 1.0 / (4.0 * x_max * x_max);
    body + tail
}
