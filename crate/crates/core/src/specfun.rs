//! Complex special functions backing the Eisenstein/scattering layer:
//! Gamma (Lanczos), Riemann zeta (accelerated alternating series with the
//! reflection formula below the critical line) and the modified Bessel
//! function K of complex order at positive real argument (quadrature of
//! the integral representation).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// A computed value together with a (heuristic) error estimate.
#[derive(Debug, Clone, Copy)]
pub struct SpecialValue {
    pub value: Complex64,
    pub error_estimate: f64,
}

// Lanczos coefficients, g = 607/128, 15 terms (Godfrey's table).
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_C: [f64; 15] = [
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
];

fn is_near_nonpositive_integer(s: Complex64, tol: f64) -> bool {
    s.im.abs() < tol && s.re < 0.5 && (s.re - s.re.round()).abs() < tol
}

fn lanczos_gamma(s: Complex64) -> Complex64 {
    // valid for Re s >= 0.5
    let z = s - 1.0;
    let mut x = Complex64::new(LANCZOS_C[0], 0.0);
    for (k, &c) in LANCZOS_C.iter().enumerate().skip(1) {
        x += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// Complex Gamma function. Reflection formula below Re s = 1/2.
pub fn gamma(s: Complex64) -> Result<SpecialValue> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::NonFinite("gamma argument"));
    }
    if is_near_nonpositive_integer(s, 1e-9) {
        return Err(Error::domain(format!("gamma pole at s = {s}")));
    }
    let value = if s.re >= 0.5 {
        lanczos_gamma(s)
    } else {
        // Gamma(s) = pi / (sin(pi s) Gamma(1 - s))
        PI / ((PI * s).sin() * lanczos_gamma(1.0 - s))
    };
    Ok(SpecialValue {
        value,
        error_estimate: value.norm() * 1e-13 * (1.0 + s.norm() / 10.0),
    })
}

const BORWEIN_N: usize = 50;

fn borwein_coefficients() -> Vec<f64> {
    let n = BORWEIN_N;
    let mut d = Vec::with_capacity(n + 1);
    let mut term = 1.0 / n as f64; // j = 0 term of the inner sum
    let mut sum = term;
    d.push(n as f64 * sum);
    for k in 1..=n {
        // extend inner sum to j = k
        let j = k - 1;
        term *= 4.0 * ((n + j) as f64) * ((n - j) as f64)
            / (((2 * j + 1) as f64) * ((2 * j + 2) as f64));
        sum += term;
        d.push(n as f64 * sum);
    }
    d
}

fn zeta_borwein(s: Complex64) -> Complex64 {
    // Re s >= 0.5 assumed; eta series acceleration.
    let d = borwein_coefficients();
    let dn = d[BORWEIN_N];
    let mut acc = Complex64::new(0.0, 0.0);
    let mut sign = 1.0;
    for k in 0..BORWEIN_N {
        let pw = (-(s) * ((k + 1) as f64).ln()).exp();
        acc += sign * (d[k] - dn) * pw;
        sign = -sign;
    }
    let eta = -acc / dn;
    let denom = 1.0 - (Complex64::new(2.0f64.ln(), 0.0) * (1.0 - s)).exp();
    eta / denom
}

/// Riemann zeta. Accelerated eta series on Re s >= 1/2; for Re s < 1/2
/// the functional equation zeta(s) = 2^s pi^(s-1) sin(pi s / 2)
/// Gamma(1-s) zeta(1-s) is applied.
pub fn zeta(s: Complex64) -> Result<SpecialValue> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::NonFinite("zeta argument"));
    }
    if (s - 1.0).norm() < 1e-6 {
        return Err(Error::domain("zeta pole proximity at s = 1".to_string()));
    }
    let value = if s.re >= 0.5 {
        zeta_borwein(s)
    } else {
        let one_minus = 1.0 - s;
        let g = gamma(one_minus)?.value;
        let z1 = zeta_borwein(one_minus);
        (s * 2.0f64.ln()).exp()
            * ((s - 1.0) * PI.ln()).exp()
            * (PI * s / 2.0).sin()
            * g
            * z1
    };
    let growth = (1.0 + s.im.abs()) * (PI * s.im.abs() / 2.0).exp();
    let err = value.norm() * (3.0 / (3.0 + 8.0f64.sqrt()).powi(BORWEIN_N as i32)) * growth;
    Ok(SpecialValue {
        value,
        error_estimate: err.max(value.norm() * 1e-15),
    })
}

/// Modified Bessel K of complex order nu at real x > 0, via composite
/// Simpson quadrature of K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt.
pub fn bessel_k(nu: Complex64, x: f64) -> Result<SpecialValue> {
    if !(x.is_finite() && nu.re.is_finite() && nu.im.is_finite()) {
        return Err(Error::NonFinite("bessel_k argument"));
    }
    if x <= 0.0 {
        return Err(Error::domain(format!("bessel_k requires x > 0, got {x}")));
    }
    if nu.re.abs() > 5.0 {
        return Err(Error::domain(format!(
            "bessel_k order out of range: |Re nu| = {} > 5",
            nu.re.abs()
        )));
    }
    // Truncate where the integrand has decayed below 1e-18 relative to the
    // peak scale e^{-x}.
    let nr = nu.re.abs();
    let mut t_max = 1.0f64;
    while x * (t_max.cosh() - 1.0) - nr * t_max < 42.0 && t_max < 60.0 {
        t_max += 0.25;
    }
    let step_target = 1e-3;
    let mut n = (t_max / step_target).ceil() as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let h = t_max / n as f64;
    let integrand = |t: f64| -> Complex64 {
        let damp = (-x * (t.cosh() - 1.0)).exp();
        (nu * t).cosh() * damp
    };
    // Composite Simpson; the e^{-x} peak factor is applied at the end to
    // keep intermediate values well scaled.
    let mut samples = Vec::with_capacity(n + 1);
    for k in 0..=n {
        samples.push(integrand(k as f64 * h));
    }
    let simpson = |vals: &[Complex64], step: f64| -> Complex64 {
        let m = vals.len() - 1;
        let mut acc = vals[0] + vals[m];
        for (k, v) in vals.iter().enumerate().take(m).skip(1) {
            acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        acc * (step / 3.0)
    };
    let fine = simpson(&samples, h);
    // Coarse pass on every other sample for the error estimate.
    let coarse_vals: Vec<Complex64> = samples.iter().step_by(2).copied().collect();
    let coarse = simpson(&coarse_vals, 2.0 * h);
    let scale = (-x).exp();
    let value = fine * scale;
    let error_estimate = ((fine - coarse).norm() / 15.0 * scale).max(value.norm() * 1e-15);
    Ok(SpecialValue {
        value,
        error_estimate,
    })
}
