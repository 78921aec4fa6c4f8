//! The SL(2,R) action on the upper half-plane, modular-group machinery,
//! reduction to the standard fundamental domain, and the automorphy
//! transformation factors for spinors, metric density and potential.

use num_complex::Complex64;

use crate::{Error, Result};

const DET_TOL: f64 = 1e-12;

/// A real 2x2 matrix with unit determinant acting on the upper half-plane
/// by z -> (az + b) / (cz + d).
///
/// Matrices are stored sign-normalized (c > 0, or c = 0 and d > 0) since
/// g and -g act identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MoebiusMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Moebius map entries"));
        }
        let defect = (a * d - b * c - 1.0).abs();
        if defect > DET_TOL {
            return Err(Error::NotUnimodular { defect });
        }
        Ok(Self::normalized(a, b, c, d))
    }

    fn normalized(a: f64, b: f64, c: f64, d: f64) -> Self {
        if c < 0.0 || (c == 0.0 && d < 0.0) {
            MoebiusMap {
                a: -a,
                b: -b,
                c: -c,
                d: -d,
            }
        } else {
            // fold -0.0 into +0.0 so normalized maps compare equal
            MoebiusMap {
                a: a + 0.0,
                b: b + 0.0,
                c: c + 0.0,
                d: d + 0.0,
            }
        }
    }

    pub fn identity() -> Self {
        MoebiusMap {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    /// T: z -> z + 1.
    pub fn translation() -> Self {
        MoebiusMap {
            a: 1.0,
            b: 1.0,
            c: 0.0,
            d: 1.0,
        }
    }

    /// S: z -> -1/z.
    pub fn inversion() -> Self {
        MoebiusMap {
            a: 0.0,
            b: -1.0,
            c: 1.0,
            d: 0.0,
        }
    }

    /// T^n for integer n.
    pub fn translation_pow(n: i64) -> Self {
        Self::normalized(1.0, n as f64, 0.0, 1.0)
    }

    pub fn is_identity(&self) -> bool {
        self.a == 1.0 && self.b == 0.0 && self.c == 0.0 && self.d == 1.0
    }

    /// cz + d at the given point.
    pub fn denominator(&self, z: Complex64) -> Complex64 {
        self.c * z + self.d
    }
}

/// A point z = x + iy with y > 0 strictly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperHalfPoint {
    x: f64,
    y: f64,
}

impl UpperHalfPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite("upper half-plane point"));
        }
        if y <= 0.0 {
            return Err(Error::NotUpperHalf { y });
        }
        Ok(UpperHalfPoint { x, y })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }
}

/// Choice of fundamental domain with a cusp truncation height.
///
/// The only instantiated kind is the standard modular domain
/// {|Re z| <= 1/2, |z| >= 1}, truncated at y = a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    ModularStandard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalDomainSpec {
    pub kind: DomainKind,
    /// Cusp truncation height, a > 1.
    pub a: f64,
    /// Strip half-width X.
    pub half_width: f64,
    /// Floor Y: lowest y reached by the domain.
    pub floor: f64,
}

impl FundamentalDomainSpec {
    pub fn modular_standard(a: f64) -> Result<Self> {
        if !a.is_finite() || a <= 1.0 {
            return Err(Error::domain(format!(
                "cusp truncation height a = {a} must satisfy a > 1"
            )));
        }
        Ok(FundamentalDomainSpec {
            kind: DomainKind::ModularStandard,
            a,
            half_width: 0.5,
            floor: 0.75f64.sqrt(),
        })
    }

    /// Membership in the (untruncated) closed domain, with tolerance.
    pub fn contains(&self, z: &UpperHalfPoint, tol: f64) -> bool {
        z.x().abs() <= self.half_width + tol && z.to_complex().norm_sqr() >= 1.0 - tol
    }
}

/// Automorphy factor kinds from the transformation laws of psi, phi, D, U.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    PsiSpinor,
    PhiSpinor,
    Density,
    Potential,
}

/// Apply the fractional linear transformation. The image of an upper
/// half-plane point is again in the upper half-plane, so this cannot fail.
pub fn apply(m: &MoebiusMap, z: &UpperHalfPoint) -> UpperHalfPoint {
    let zc = z.to_complex();
    let w = (m.a * zc + m.b) / (m.c * zc + m.d);
    // Im w = y / |cz+d|^2 > 0; guard roundoff at extreme points anyway.
    UpperHalfPoint {
        x: w.re,
        y: w.im.max(f64::MIN_POSITIVE),
    }
}

/// Matrix product, renormalized so det = 1 where representable.
pub fn compose(m1: &MoebiusMap, m2: &MoebiusMap) -> MoebiusMap {
    let a = m1.a * m2.a + m1.b * m2.c;
    let b = m1.a * m2.b + m1.b * m2.d;
    let c = m1.c * m2.a + m1.d * m2.c;
    let d = m1.c * m2.b + m1.d * m2.d;
    let det = a * d - b * c;
    let s = 1.0 / det.sqrt();
    MoebiusMap::normalized(a * s, b * s, c * s, d * s)
}

pub fn inverse(m: &MoebiusMap) -> MoebiusMap {
    MoebiusMap::normalized(m.d, -m.b, -m.c, m.a)
}

const REDUCE_ITER_CAP: usize = 100_000;

/// Move z into the standard modular fundamental domain.
///
/// Alternates translating Re z into [-1/2, 1/2] and inverting while
/// |z| < 1 until a fixed point. Returns the reduced point together with
/// the integer-entry gamma that realizes it: apply(gamma, z) = z*.
pub fn reduce_to_fundamental_domain(
    z: &UpperHalfPoint,
) -> Result<(UpperHalfPoint, MoebiusMap)> {
    let mut w = *z;
    let mut gamma = MoebiusMap::identity();
    for _ in 0..REDUCE_ITER_CAP {
        if !w.x.is_finite() || !w.y.is_finite() {
            return Err(Error::NonFinite("reduction iterate"));
        }
        let n = w.x.round();
        if n != 0.0 {
            w = UpperHalfPoint {
                x: w.x - n,
                y: w.y,
            };
            gamma = compose(&MoebiusMap::translation_pow(-(n as i64)), &gamma);
        }
        let r2 = w.x * w.x + w.y * w.y;
        if r2 < 1.0 - 1e-15 {
            let zc = w.to_complex();
            let inv = -1.0 / zc;
            w = UpperHalfPoint {
                x: inv.re,
                y: inv.im,
            };
            gamma = compose(&MoebiusMap::inversion(), &gamma);
        } else if w.x.abs() <= 0.5 {
            return Ok((w, gamma));
        }
    }
    Err(Error::NoConvergence {
        iterations: REDUCE_ITER_CAP,
        residual: f64::NAN,
    })
}

/// All distinct reduced words of length <= n in {T, T^-1, S},
/// deduplicated up to overall sign.
pub fn group_ball(max_word_length: usize) -> Result<Vec<MoebiusMap>> {
    if max_word_length > 12 {
        return Err(Error::Resource(format!(
            "group ball of word length {max_word_length} > 12"
        )));
    }
    let gens = [
        MoebiusMap::translation(),
        inverse(&MoebiusMap::translation()),
        MoebiusMap::inversion(),
    ];
    let key = |m: &MoebiusMap| -> (i64, i64, i64, i64) {
        (
            m.a.round() as i64,
            m.b.round() as i64,
            m.c.round() as i64,
            m.d.round() as i64,
        )
    };
    let mut seen = std::collections::HashSet::new();
    let mut ball = vec![MoebiusMap::identity()];
    seen.insert(key(&ball[0]));
    let mut frontier = ball.clone();
    for _ in 0..max_word_length {
        let mut next = Vec::new();
        for m in &frontier {
            for g in &gens {
                let prod = compose(m, g);
                if seen.insert(key(&prod)) {
                    next.push(prod);
                }
            }
        }
        ball.extend(next.iter().copied());
        frontier = next;
    }
    Ok(ball)
}

/// Automorphy factor for the given transformation kind at z.
pub fn transform_factor(
    gamma: &MoebiusMap,
    kind: TransformKind,
    z: &UpperHalfPoint,
) -> Complex64 {
    let zc = z.to_complex();
    match kind {
        TransformKind::PsiSpinor => gamma.c * zc.conj() + gamma.d,
        TransformKind::PhiSpinor => gamma.c * zc + gamma.d,
        TransformKind::Density | TransformKind::Potential => {
            Complex64::new((gamma.c * zc + gamma.d).norm_sqr(), 0.0)
        }
    }
}

/// Transformed value f(gamma z) predicted from f(z) by the automorphy laws.
pub fn gamma_transform(
    gamma: &MoebiusMap,
    kind: TransformKind,
    z: &UpperHalfPoint,
    value: Complex64,
) -> Result<Complex64> {
    match kind {
        TransformKind::Density | TransformKind::Potential => {
            let scale = value.norm().max(1.0);
            if value.im.abs() > 1e-12 * scale {
                return Err(Error::domain(format!(
                    "density/potential must be real-valued, got Im = {:e}",
                    value.im
                )));
            }
        }
        _ => {}
    }
    Ok(transform_factor(gamma, kind, z) * value)
}

/// Max over gammas and sample points of |f(gamma z) - f(z)|.
///
/// `f` must be evaluable at every sample and every gamma-image; an
/// evaluation failure is surfaced as an out-of-domain error.
pub fn automorphy_residual(
    f: impl Fn(&UpperHalfPoint) -> Result<Complex64>,
    gammas: &[MoebiusMap],
    samples: &[UpperHalfPoint],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for z in samples {
        let base = f(z).map_err(|e| {
            Error::OutOfDomain(format!("f not evaluable at ({}, {}): {e}", z.x(), z.y()))
        })?;
        for g in gammas {
            let gz = apply(g, z);
            let moved = f(&gz).map_err(|e| {
                Error::OutOfDomain(format!(
                    "f not evaluable at gamma-image ({}, {}): {e}",
                    gz.x(),
                    gz.y()
                ))
            })?;
            worst = worst.max((moved - base).norm());
        }
    }
    Ok(worst)
}
