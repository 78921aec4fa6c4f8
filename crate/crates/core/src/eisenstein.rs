//! Eisenstein series for the modular group, by two independent routes —
//! the coprime lattice sum (Re s > 1) and the Fourier-Bessel expansion —
//! together with the scattering matrix
//! phi(s) = sqrt(pi) Gamma(s - 1/2) zeta(2s - 1) / (Gamma(s) zeta(2s)).
//!
//! The lattice route sums a window of d-terms exactly per c and closes
//! both d-tails with a Moebius-weighted integral (binomial series), then
//! closes the c-tail exactly against zeta(2s-1)/zeta(2s). This keeps the
//! truncation error well under 1e-6 at modest caps.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::moebius::{reduce_to_fundamental_domain, UpperHalfPoint};
use crate::specfun::{bessel_k, gamma, zeta, SpecialValue};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct EisensteinParams {
    pub s: Complex64,
    pub n_lat: usize,
    pub n_four: usize,
}

impl EisensteinParams {
    pub fn new(s: Complex64, n_lat: usize, n_four: usize) -> Result<Self> {
        if !s.re.is_finite() || !s.im.is_finite() {
            return Err(Error::NonFinite("spectral parameter s"));
        }
        if n_lat == 0 || n_lat > 200 {
            return Err(Error::domain(format!("N_lat = {n_lat} outside 1..=200")));
        }
        if n_four == 0 || n_four > 64 {
            return Err(Error::domain(format!("N_four = {n_four} outside 1..=64")));
        }
        Ok(EisensteinParams { s, n_lat, n_four })
    }

    /// Sensible defaults for a given s.
    pub fn with_s(s: Complex64) -> Result<Self> {
        EisensteinParams::new(s, 40, 24)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

// squarefree divisors of c with their Moebius values
fn squarefree_divisors(c: u64) -> Vec<(u64, f64)> {
    let mut primes = Vec::new();
    let mut m = c;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            primes.push(p);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        primes.push(m);
    }
    let mut divs = vec![(1u64, 1.0f64)];
    for &q in &primes {
        let cur = divs.clone();
        for (d, mu) in cur {
            divs.push((d * q, -mu));
        }
    }
    divs
}

fn totient(c: u64) -> u64 {
    let mut result = c;
    let mut m = c;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            result = result / p * (p - 1);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        result = result / m * (m - 1);
    }
    result
}

// t^w for real t > 0
fn real_pow(t: f64, w: Complex64) -> Complex64 {
    (w * t.ln()).exp()
}

// integral_L^infty (u^2 + beta^2)^{-s} du for L >= 2 beta, by the binomial
// series in (beta/L)^2
fn tail_integral(l: f64, beta: f64, s: Complex64) -> Complex64 {
    let ratio = (beta * beta) / (l * l);
    let l_pow = real_pow(l, Complex64::new(1.0, 0.0) - 2.0 * s);
    let mut coef = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..400 {
        let jf = j as f64;
        let term = coef * l_pow / (2.0 * s - 1.0 + 2.0 * jf);
        sum += term;
        if term.norm() <= 1e-18 * sum.norm().max(1e-300) {
            break;
        }
        coef *= (-s - jf) / (jf + 1.0) * ratio;
    }
    sum
}

/// E(z, s) = sum over gcd(c,d) = 1, c >= 0, of y^s / |cz + d|^{2s}
/// (c = 0 contributing only d = 1), valid for Re s > 1. Returns the value
/// with a truncation-tail estimate.
pub fn eisenstein_lattice(z: &UpperHalfPoint, p: &EisensteinParams) -> Result<SpecialValue> {
    let s = p.s;
    if s.re <= 1.0 {
        return Err(Error::domain(format!(
            "lattice sum needs Re s > 1 (got {}); use eisenstein_fourier",
            s.re
        )));
    }
    // exact 1-periodicity: work with the fractional part of x
    let x = z.x() - z.x().floor();
    let y = z.y();

    let mut sum = Complex64::new(1.0, 0.0); // c = 0, d = 1
    let mut em_err = 0.0f64;
    for c in 1..=p.n_lat as u64 {
        let cf = c as f64;
        let beta = cf * y;
        let u_win = (3.0 * beta).max(40.0) + cf;
        let cx = cf * x;
        let dlo = (-cx - u_win).ceil() as i64;
        let dhi = (-cx + u_win).floor() as i64;
        let mut inner = Complex64::new(0.0, 0.0);
        for d in dlo..=dhi {
            if gcd(c, d.unsigned_abs()) != 1 {
                continue;
            }
            let u = cx + d as f64;
            inner += real_pow(u * u + beta * beta, -s);
        }
        for (e, mu) in squarefree_divisors(c) {
            let ei = e as i64;
            let ef = e as f64;
            // right tail: d = e m > dhi
            let m0 = dhi.div_euclid(ei) + 1;
            let l_right = m0 as f64 * ef - ef / 2.0 + cx;
            // left tail: d = e m <= dlo - 1; by evenness of the integrand
            let m1 = (dlo - 1).div_euclid(ei);
            let l_left = -(m1 as f64 * ef + ef / 2.0 + cx);
            inner += mu / ef * (tail_integral(l_right, beta, s) + tail_integral(l_left, beta, s));
            // first midpoint Euler-Maclaurin correction (e/24) h'(L) with
            // h(u) = (u^2 + beta^2)^{-s}
            let hp = |l: f64| -2.0 * s * l * real_pow(l * l + beta * beta, -s - 1.0);
            inner += mu * ef / 24.0 * (hp(l_right) + hp(l_left));
            // next-order midpoint defect ~ (7 e^3 / 5760) |h'''(L)|
            let s3 = (s.norm() + 2.0).powi(3);
            let hppp = |l: f64| 8.0 * s3 * l.powi(3) * (l * l + beta * beta).powf(-s.re - 3.0);
            em_err += 7.0 * ef * ef * ef / 5760.0 * (hppp(l_right) + hppp(l_left));
        }
        sum += inner;
    }

    // exact c-tail: per-c density integral equals B(s) y^{1-s} phi(c) c^{-2s}
    let b_s = PI.sqrt() * gamma(s - 0.5)?.value / gamma(s)?.value;
    let zeta_ratio = zeta(2.0 * s - 1.0)?.value / zeta(2.0 * s)?.value;
    let mut partial = Complex64::new(0.0, 0.0);
    for c in 1..=p.n_lat as u64 {
        partial += totient(c) as f64 * real_pow(c as f64, -2.0 * s);
    }
    let y_s = real_pow(y, s);
    let y_1ms = real_pow(y, Complex64::new(1.0, 0.0) - s);
    let value = y_s * sum + b_s * y_1ms * (zeta_ratio - partial);

    let error_estimate = (y_s.norm() * em_err).max(value.norm() * 1e-13);
    Ok(SpecialValue {
        value,
        error_estimate,
    })
}

// completed zeta xi(w) = pi^{-w/2} Gamma(w/2) zeta(w)
fn xi(w: Complex64) -> Result<Complex64> {
    let g = gamma(w / 2.0)?.value;
    let z = zeta(w)?.value;
    Ok(real_pow(PI, -w / 2.0) * g * z)
}

fn near_nonpositive_integer(v: Complex64, tol: f64) -> bool {
    v.im.abs() < tol && v.re < 0.5 && (v.re - v.re.round()).abs() < tol
}

/// phi(s) = sqrt(pi) Gamma(s - 1/2) zeta(2s - 1) / (Gamma(s) zeta(2s)).
/// Away from the critical strip's right edge the constituents continue
/// themselves by their reflection formulas, so any s off the poles works.
pub fn scattering_phi(s: Complex64) -> Result<Complex64> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::NonFinite("spectral parameter s"));
    }
    if (s - Complex64::new(1.0, 0.0)).norm() < 1e-6 {
        return Err(Error::domain("phi has a pole at s = 1"));
    }
    if near_nonpositive_integer(s - 0.5, 1e-6) {
        return Err(Error::domain(
            "Gamma(s - 1/2) pole: s - 1/2 is a nonpositive integer",
        ));
    }
    let den_zeta = zeta(2.0 * s)?.value;
    if den_zeta.norm() < 1e-10 {
        return Err(Error::domain("zeta(2s) vanishes at this s"));
    }
    let num = PI.sqrt() * gamma(s - 0.5)?.value * zeta(2.0 * s - 1.0)?.value;
    let den = gamma(s)?.value * den_zeta;
    Ok(num / den)
}

fn sigma(w: Complex64, n: u64) -> Complex64 {
    let mut out = Complex64::new(0.0, 0.0);
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out += real_pow(d as f64, w);
            let q = n / d;
            if q != d {
                out += real_pow(q as f64, w);
            }
        }
        d += 1;
    }
    out
}

/// Fourier-Bessel evaluation
/// E = y^s + phi(s) y^{1-s}
///     + (4 sqrt(y) / xi(2s)) sum_n n^{s-1/2} sigma_{1-2s}(n)
///       K_{s-1/2}(2 pi n y) cos(2 pi n x),
/// valid for y > 0.3 where the Bessel decay controls truncation.
pub fn eisenstein_fourier(z: &UpperHalfPoint, p: &EisensteinParams) -> Result<SpecialValue> {
    let s = p.s;
    let y = z.y();
    let x = z.x();
    if y <= 0.3 {
        return Err(Error::domain(format!(
            "y = {y} <= 0.3: apply reduce_to_fundamental_domain first"
        )));
    }
    let phi = scattering_phi(s)?;
    let xi2s = xi(2.0 * s)?;
    let mut value = real_pow(y, s) + phi * real_pow(y, Complex64::new(1.0, 0.0) - s);
    let pref = 4.0 * y.sqrt() / xi2s;
    let nu = s - 0.5;
    let mut bessel_err = 0.0f64;
    for n in 1..=p.n_four as u64 {
        let nf = n as f64;
        let kb = bessel_k(nu, 2.0 * PI * nf * y)?;
        let coef = pref * real_pow(nf, nu) * sigma(Complex64::new(1.0, 0.0) - 2.0 * s, n);
        value += coef * kb.value * (2.0 * PI * nf * x).cos();
        bessel_err += coef.norm() * kb.error_estimate;
    }
    // truncation bound from the first omitted term (|cos| <= 1)
    let n_next = (p.n_four + 1) as f64;
    let k_next = bessel_k(nu, 2.0 * PI * n_next * y)?;
    let trunc = (pref
        * real_pow(n_next, nu)
        * sigma(Complex64::new(1.0, 0.0) - 2.0 * s, p.n_four as u64 + 1))
    .norm()
        * k_next.value.norm()
        * 2.0;
    Ok(SpecialValue {
        value,
        error_estimate: trunc + bessel_err + value.norm() * 1e-13,
    })
}

/// |E(z, 1/2 + ik) - phi(1/2 + ik) E(z, 1/2 - ik)| via the Fourier method
/// on both sides with independent truncations.
pub fn functional_equation_residual(z: &UpperHalfPoint, k: f64) -> Result<f64> {
    if !k.is_finite() || k.abs() < 1e-12 {
        return Err(Error::domain(format!("k = {k} must be nonzero")));
    }
    let zr = if z.y() > 0.3 {
        *z
    } else {
        reduce_to_fundamental_domain(z)?.0
    };
    let s = Complex64::new(0.5, k);
    let lhs = eisenstein_fourier(&zr, &EisensteinParams::new(s, 40, 32)?)?.value;
    let rhs = eisenstein_fourier(&zr, &EisensteinParams::new(Complex64::new(0.5, -k), 40, 28)?)?
        .value;
    let phi = scattering_phi(s)?;
    Ok((lhs - phi * rhs).norm())
}

/// Critical-line scan CSV: "t,Re phi,Im phi,|phi|".
pub fn write_critical_line_scan(ts: &[f64], path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let mut out = String::from("t,Re phi,Im phi,|phi|\n");
    for &t in ts {
        let phi = scattering_phi(Complex64::new(0.5, t))?;
        out.push_str(&format!("{t},{},{},{}\n", phi.re, phi.im, phi.norm()));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::group_ball;

    fn pt(x: f64, y: f64) -> UpperHalfPoint {
        UpperHalfPoint::new(x, y).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn params_validation() {
        assert!(EisensteinParams::new(c(2.0, 0.0), 0, 8).is_err());
        assert!(EisensteinParams::new(c(2.0, 0.0), 300, 8).is_err());
        assert!(EisensteinParams::new(c(2.0, 0.0), 40, 100).is_err());
        assert!(EisensteinParams::new(c(f64::NAN, 0.0), 40, 8).is_err());
    }

    #[test]
    fn lattice_rejects_small_re_s() {
        let p = EisensteinParams::new(c(0.9, 0.0), 40, 8).unwrap();
        let err = eisenstein_lattice(&pt(0.0, 1.0), &p).unwrap_err();
        assert!(err.to_string().contains("eisenstein_fourier"));
    }

    #[test]
    fn lattice_translation_invariance_is_bitwise() {
        // x chosen dyadic so x + 1 and x - 3 are exactly representable;
        // the fractional-part reduction then sees identical bits
        let p = EisensteinParams::new(c(1.7, 0.4), 30, 8).unwrap();
        let z = pt(0.3125, 1.31);
        let a = eisenstein_lattice(&z, &p).unwrap().value;
        let b = eisenstein_lattice(&pt(z.x() + 1.0, z.y()), &p).unwrap().value;
        assert_eq!(a, b);
        let d = eisenstein_lattice(&pt(z.x() - 3.0, z.y()), &p).unwrap().value;
        assert_eq!(a, d);
    }

    #[test]
    fn lattice_leading_behavior_high_in_the_cusp() {
        let p = EisensteinParams::new(c(2.0, 0.0), 40, 8).unwrap();
        let v = eisenstein_lattice(&pt(0.0, 50.0), &p).unwrap().value;
        let scaled = v * real_pow(50.0, c(-2.0, 0.0));
        assert!((scaled - 1.0).norm() < 1e-4, "scaled = {scaled}");
    }

    #[test]
    fn lattice_against_brute_force_oracle() {
        // direct O(N^2) coprime sum with a large cap; s = 2.5 converges fast
        let s = c(2.5, 0.0);
        let z = pt(0.3, 0.8);
        let n = 1500i64;
        let mut brute = Complex64::new(0.0, 0.0);
        let (x, y) = (z.x(), z.y());
        for cc in 0..=n {
            for d in -n..=n {
                if cc == 0 && d != 1 {
                    continue;
                }
                if gcd(cc as u64, d.unsigned_abs()) != 1 {
                    continue;
                }
                let den = (cc as f64 * x + d as f64).powi(2) + (cc as f64 * y).powi(2);
                brute += real_pow(y, s) * real_pow(den, -s);
            }
        }
        let p = EisensteinParams::new(s, 60, 8).unwrap();
        let fast = eisenstein_lattice(&z, &p).unwrap();
        // brute force itself carries a ~N^{-3} tail; compare loosely
        assert!(
            (fast.value - brute).norm() < 1e-5,
            "fast = {}, brute = {brute}",
            fast.value
        );
    }

    #[test]
    fn cross_method_agreement() {
        // max over sample z of |lattice - fourier| for Re s in (1, 3]
        let samples = [
            pt(0.0, 1.0),
            pt(0.3, 0.9),
            pt(-0.4, 1.7),
            pt(0.1, 2.4),
            pt(0.45, 1.05),
        ];
        for s in [c(2.0, 0.0), c(1.5, 0.5), c(3.0, -1.0)] {
            let p = EisensteinParams::new(s, 60, 24).unwrap();
            let mut worst = 0.0f64;
            for z in &samples {
                let a = eisenstein_lattice(z, &p).unwrap().value;
                let b = eisenstein_fourier(z, &p).unwrap().value;
                worst = worst.max((a - b).norm());
            }
            assert!(worst < 1e-6, "s = {s}: worst = {worst:e}");
        }
    }

    #[test]
    fn fourier_rejects_low_y() {
        let p = EisensteinParams::new(c(2.0, 0.0), 40, 8).unwrap();
        let err = eisenstein_fourier(&pt(0.0, 0.2), &p).unwrap_err();
        assert!(err.to_string().contains("reduce_to_fundamental_domain"));
    }

    #[test]
    fn fourier_automorphy_after_reduction() {
        let s = c(0.5, 1.3);
        let p = EisensteinParams::new(s, 40, 24).unwrap();
        let f = |z: &UpperHalfPoint| -> Result<Complex64> {
            let (zr, _) = reduce_to_fundamental_domain(z)?;
            Ok(eisenstein_fourier(&zr, &p)?.value)
        };
        let gammas = group_ball(3).unwrap();
        let samples = [pt(0.21, 1.4), pt(-0.37, 0.9), pt(0.05, 2.2)];
        let r = crate::moebius::automorphy_residual(f, &gammas, &samples).unwrap();
        assert!(r < 1e-8, "r = {r:e}");
    }

    #[test]
    fn fourier_term_decay() {
        // consecutive Bessel-term ratio at y = 1 below 1e-2 for n >= 3
        let s = c(0.5, 2.0);
        let nu = s - 0.5;
        let mut prev = f64::NAN;
        for n in 3..=6u64 {
            let nf = n as f64;
            let term = (real_pow(nf, nu) * sigma(c(1.0, 0.0) - 2.0 * s, n)).norm()
                * bessel_k(nu, 2.0 * PI * nf).unwrap().value.norm();
            if !prev.is_nan() {
                assert!(term / prev < 1e-2, "ratio at n = {n}: {}", term / prev);
            }
            prev = term;
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let z = pt(0.17, 1.2);
        for s in [c(2.0, 0.7), c(0.5, 1.9)] {
            let p1 = EisensteinParams::new(s, 40, 16).unwrap();
            let p2 = EisensteinParams::new(s.conj(), 40, 16).unwrap();
            let a = eisenstein_fourier(&z, &p1).unwrap().value;
            let b = eisenstein_fourier(&z, &p2).unwrap().value;
            assert!((b - a.conj()).norm() < 1e-12 * a.norm().max(1.0));
            let pa = scattering_phi(s).unwrap();
            let pb = scattering_phi(s.conj()).unwrap();
            assert!((pb - pa.conj()).norm() < 1e-10 * pa.norm());
        }
    }

    #[test]
    fn eisenstein_is_real_and_conjugate_symmetric_on_critical_line() {
        // on the imaginary axis, E(iy, 1/2 + ik) pairs with its k -> -k
        // conjugate; |E| stays finite
        let z = pt(0.0, 1.4);
        for k in [0.7, 2.2] {
            let a = eisenstein_fourier(&z, &EisensteinParams::new(c(0.5, k), 40, 16).unwrap())
                .unwrap()
                .value;
            let b = eisenstein_fourier(&z, &EisensteinParams::new(c(0.5, -k), 40, 16).unwrap())
                .unwrap()
                .value;
            assert!(a.norm().is_finite());
            assert!((b - a.conj()).norm() < 1e-10 * a.norm().max(1.0));
        }
    }

    #[test]
    fn scattering_phi_guards() {
        assert!(scattering_phi(c(1.0, 0.0)).is_err());
        assert!(scattering_phi(c(0.5, 0.0)).is_err());
        assert!(scattering_phi(c(-0.5, 0.0)).is_err());
    }

    #[test]
    fn scattering_phi_at_two_matches_closed_form() {
        // phi(2) = (pi/2) zeta(3) / zeta(4)
        let phi = scattering_phi(c(2.0, 0.0)).unwrap();
        let z3 = zeta(c(3.0, 0.0)).unwrap().value;
        let z4 = zeta(c(4.0, 0.0)).unwrap().value;
        let expect = PI / 2.0 * z3 / z4;
        assert!((phi - expect).norm() < 1e-12 * expect.norm());
    }

    #[test]
    fn unitarity_on_the_critical_line() {
        for t in [1.0, 2.5, 7.0] {
            let phi = scattering_phi(c(0.5, t)).unwrap();
            assert!((phi.norm() - 1.0).abs() < 1e-8, "t = {t}: |phi| = {}", phi.norm());
        }
    }

    #[test]
    fn functional_relation_off_the_line() {
        for s in [c(0.75, 0.3), c(0.75, -0.3)] {
            let a = scattering_phi(s).unwrap();
            let b = scattering_phi(c(1.0, 0.0) - s).unwrap();
            assert!((a * b - 1.0).norm() < 1e-8, "s = {s}: {}", (a * b - 1.0).norm());
        }
    }

    #[test]
    fn functional_equation_of_eisenstein() {
        assert!(functional_equation_residual(&pt(0.0, 2.0), 1.0).unwrap() <= 1e-6);
        assert!(functional_equation_residual(&pt(0.3, 1.0), 2.5).unwrap() <= 1e-6);
        // negative control: replace phi by 1
        let z = pt(0.0, 2.0);
        let s = c(0.5, 1.0);
        let lhs = eisenstein_fourier(&z, &EisensteinParams::new(s, 40, 32).unwrap())
            .unwrap()
            .value;
        let rhs = eisenstein_fourier(&z, &EisensteinParams::new(s.conj(), 40, 28).unwrap())
            .unwrap()
            .value;
        assert!((lhs - rhs).norm() >= 1e-2);
    }

    #[test]
    fn generalized_eigenfunction_of_discrete_l() {
        use crate::moebius::FundamentalDomainSpec;
        use crate::spectral::assemble;
        let op = assemble(&FundamentalDomainSpec::modular_standard(3.0).unwrap(), 0.05).unwrap();
        let k = 1.0;
        let p = EisensteinParams::new(c(0.5, k), 40, 10).unwrap();
        let mut v = vec![0.0; op.len()];
        for (idx, nd) in op.mesh.iter().enumerate() {
            let e = eisenstein_fourier(&pt(nd.x, nd.y), &p).unwrap().value;
            v[idx] = e.re;
        }
        let lv = op.apply_l(&v).unwrap();
        let vmax = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut worst = 0.0f64;
        for (idx, nd) in op.mesh.iter().enumerate() {
            if nd.y < 1.3 || nd.y > 2.5 {
                continue;
            }
            worst = worst.max((lv[idx] - k * k * v[idx]).abs());
        }
        assert!(worst < 5e-2 * vmax, "worst = {worst:e}, vmax = {vmax:e}");
    }

    #[test]
    fn scan_csv_shape_and_unitarity() {
        let dir = std::env::temp_dir().join("wlp_eisenstein_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("scan.csv");
        let ts: Vec<f64> = (1..=6).map(|i| i as f64 * 0.5).collect();
        write_critical_line_scan(&ts, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,Re phi,Im phi,|phi|");
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 4);
            let modulus: f64 = cols[3].parse().unwrap();
            assert!((modulus - 1.0).abs() < 1e-8);
        }
    }
}
