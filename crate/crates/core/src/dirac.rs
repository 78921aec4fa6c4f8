//! The two-dimensional Dirac system psi_z = U phi, phi_zbar = -U psi on
//! rectangular grids: Wirtinger stencils, residuals, exact solution
//! families for testing, and a least-squares solver with Dirichlet
//! boundary data on both spinors.
//!
//! Sign convention (fixed here, the curvature check depends on it):
//! d_z = (d_x - i d_y) / 2, d_zbar = (d_x + i d_y) / 2.

use num_complex::Complex64;

use crate::grid::{ComplexField, Grid, SpinorPair};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WirtingerKind {
    Dz,
    Dzbar,
}

/// Centered second-order differences in the interior, one-sided
/// second-order at the edges.
fn diff_x(f: &ComplexField) -> ComplexField {
    let g = &f.grid;
    let mut out = ComplexField::zeros(g.clone());
    let h = g.h;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let v = if i == 0 {
                (-3.0 * f.at(0, j) + 4.0 * f.at(1, j) - f.at(2, j)) / (2.0 * h)
            } else if i == g.nx - 1 {
                (3.0 * f.at(i, j) - 4.0 * f.at(i - 1, j) + f.at(i - 2, j)) / (2.0 * h)
            } else {
                (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * h)
            };
            out.set(i, j, v);
        }
    }
    out
}

fn diff_y(f: &ComplexField) -> ComplexField {
    let g = &f.grid;
    let mut out = ComplexField::zeros(g.clone());
    let h = g.h;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let v = if j == 0 {
                (-3.0 * f.at(i, 0) + 4.0 * f.at(i, 1) - f.at(i, 2)) / (2.0 * h)
            } else if j == g.ny - 1 {
                (3.0 * f.at(i, j) - 4.0 * f.at(i, j - 1) + f.at(i, j - 2)) / (2.0 * h)
            } else {
                (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * h)
            };
            out.set(i, j, v);
        }
    }
    out
}

/// Wirtinger derivative of a sampled field.
pub fn wirtinger(f: &ComplexField, which: WirtingerKind) -> Result<ComplexField> {
    let g = &f.grid;
    if g.nx < 3 || g.ny < 3 {
        return Err(Error::DegenerateGrid(format!(
            "wirtinger needs at least 3x3, got {}x{}",
            g.nx, g.ny
        )));
    }
    let fx = diff_x(f);
    let fy = diff_y(f);
    let i = Complex64::new(0.0, 1.0);
    let mut out = ComplexField::zeros(g.clone());
    for k in 0..g.len() {
        out.samples[k] = match which {
            WirtingerKind::Dz => (fx.samples[k] - i * fy.samples[k]) * 0.5,
            WirtingerKind::Dzbar => (fx.samples[k] + i * fy.samples[k]) * 0.5,
        };
    }
    Ok(out)
}

fn check_real_potential(u: &ComplexField) -> Result<()> {
    let scale = u.max_abs().max(1.0);
    if u.max_imag_abs() > 1e-14 * scale {
        return Err(Error::domain(format!(
            "potential U must be real-valued, max |Im U| = {:e}",
            u.max_imag_abs()
        )));
    }
    Ok(())
}

/// Max-norms over interior nodes of psi_z - U phi and phi_zbar + U psi.
pub fn dirac_residual(sp: &SpinorPair, u: &ComplexField) -> Result<(f64, f64)> {
    if *sp.grid() != u.grid {
        return Err(Error::GridMismatch(
            "spinors and potential on different grids".to_string(),
        ));
    }
    check_real_potential(u)?;
    let g = sp.grid().clone();
    let psi_z = wirtinger(&sp.psi, WirtingerKind::Dz)?;
    let phi_zb = wirtinger(&sp.phi, WirtingerKind::Dzbar)?;
    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let k = g.idx(i, j);
            let ur = u.samples[k].re;
            r1 = r1.max((psi_z.samples[k] - ur * sp.phi.samples[k]).norm());
            r2 = r2.max((phi_zb.samples[k] + ur * sp.psi.samples[k]).norm());
        }
    }
    Ok((r1, r2))
}

/// Exact solution families of the Dirac system, used as test fixtures.
#[derive(Debug, Clone, Copy)]
pub enum ExactFamily {
    /// U = 0, psi = A zbar^p, phi = 0 (psi_z = 0 identically).
    ZeroUAntiholo { coeff: Complex64, power: u32 },
    /// U = 0, phi = A z^p, psi = 0 (phi_zbar = 0 identically).
    ZeroUHolo { coeff: Complex64, power: u32 },
    /// U = u0 (constant), psi = A exp(lambda z + mu zbar),
    /// phi = (A lambda / u0) exp(lambda z + mu zbar) with mu = -u0^2 / lambda.
    ConstUExponential {
        u0: f64,
        lambda: Complex64,
        amplitude: Complex64,
    },
}

/// Sample an exact family on a grid, returning the spinors and the
/// matching potential.
pub fn exact_spinors(family: ExactFamily, grid: Grid) -> Result<(SpinorPair, ComplexField)> {
    match family {
        ExactFamily::ZeroUAntiholo { coeff, power } => {
            let psi =
                ComplexField::from_fn(grid.clone(), |z| coeff * z.conj().powu(power))?;
            let phi = ComplexField::zeros(grid.clone());
            let u = ComplexField::zeros(grid);
            Ok((SpinorPair::new(psi, phi)?, u))
        }
        ExactFamily::ZeroUHolo { coeff, power } => {
            let psi = ComplexField::zeros(grid.clone());
            let phi = ComplexField::from_fn(grid.clone(), |z| coeff * z.powu(power))?;
            let u = ComplexField::zeros(grid);
            Ok((SpinorPair::new(psi, phi)?, u))
        }
        ExactFamily::ConstUExponential {
            u0,
            lambda,
            amplitude,
        } => {
            if u0 == 0.0 || lambda == Complex64::new(0.0, 0.0) {
                return Err(Error::domain(
                    "exponential family needs u0 != 0 and lambda != 0".to_string(),
                ));
            }
            let mu = -Complex64::new(u0 * u0, 0.0) / lambda;
            let phase = |z: Complex64| (lambda * z + mu * z.conj()).exp();
            let psi = ComplexField::from_fn(grid.clone(), |z| amplitude * phase(z))?;
            let phi_coeff = amplitude * lambda / u0;
            let phi = ComplexField::from_fn(grid.clone(), |z| phi_coeff * phase(z))?;
            let u = ComplexField::constant(grid, Complex64::new(u0, 0.0));
            Ok((SpinorPair::new(psi, phi)?, u))
        }
    }
}

// Sparse complex matrix in triplet form, enough for CGNR.
struct Coo {
    entries: Vec<(u32, u32, Complex64)>,
}

impl Coo {
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for &(r, c, v) in &self.entries {
            y[r as usize] += v * x[c as usize];
        }
    }

    fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for &(r, c, v) in &self.entries {
            y[c as usize] += v.conj() * x[r as usize];
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

const SOLVE_ITER_CAP: usize = 10_000;

/// Solve the discrete Dirac system for given real potential and Dirichlet
/// boundary data on both spinors (taken from the boundary ring of
/// `boundary`). Interior values are found as the least-squares minimizer
/// of the two centered-stencil residuals.
pub fn solve_dirac(
    u: &ComplexField,
    boundary: &SpinorPair,
    tol: f64,
) -> Result<SpinorPair> {
    if *boundary.grid() != u.grid {
        return Err(Error::GridMismatch(
            "boundary data and potential on different grids".to_string(),
        ));
    }
    check_real_potential(u)?;
    let g = u.grid.clone();
    let (nx, ny, h) = (g.nx, g.ny, g.h);
    let n_int = (nx - 2) * (ny - 2);
    let int_id = |i: usize, j: usize| -> usize { (j - 1) * (nx - 2) + (i - 1) };

    // unknown layout: interior psi then interior phi
    let mut coo = Coo {
        entries: Vec::with_capacity(12 * n_int),
    };
    let mut b = vec![Complex64::new(0.0, 0.0); 2 * n_int];
    let q = 1.0 / (4.0 * h);
    let im = Complex64::new(0.0, 1.0);

    // stencil coefficients for d_z: E, W, N, S
    let dz_coef = [
        Complex64::new(q, 0.0),
        Complex64::new(-q, 0.0),
        -im * q,
        im * q,
    ];
    // d_zbar: conjugate y-coefficients
    let dzb_coef = [
        Complex64::new(q, 0.0),
        Complex64::new(-q, 0.0),
        im * q,
        -im * q,
    ];
    let neighbors =
        |i: usize, j: usize| [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)];

    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let row1 = int_id(i, j) as u32; // psi_z - U phi = 0
            let row2 = (n_int + int_id(i, j)) as u32; // phi_zbar + U psi = 0
            let ur = u.at(i, j).re;
            for (t, (pi, pj)) in neighbors(i, j).into_iter().enumerate() {
                if g.is_boundary(pi, pj) {
                    b[row1 as usize] -= dz_coef[t] * boundary.psi.at(pi, pj);
                    b[row2 as usize] -= dzb_coef[t] * boundary.phi.at(pi, pj);
                } else {
                    let col_psi = int_id(pi, pj) as u32;
                    let col_phi = (n_int + int_id(pi, pj)) as u32;
                    coo.entries.push((row1, col_psi, dz_coef[t]));
                    coo.entries.push((row2, col_phi, dzb_coef[t]));
                }
            }
            coo.entries
                .push((row1, (n_int + int_id(i, j)) as u32, Complex64::new(-ur, 0.0)));
            coo.entries
                .push((row2, int_id(i, j) as u32, Complex64::new(ur, 0.0)));
        }
    }

    // CGNR on the normal equations A^H A x = A^H b.
    let n = 2 * n_int;
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut ax = vec![Complex64::new(0.0, 0.0); n];
    let mut resid = b.clone(); // b - A x with x = 0
    let mut r = vec![Complex64::new(0.0, 0.0); n];
    coo.apply_adjoint(&resid, &mut r);
    let mut p = r.clone();
    let mut ap = vec![Complex64::new(0.0, 0.0); n];
    let mut rr = dot(&r, &r).re;
    let b_scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let mut max_resid = f64::INFINITY;

    for it in 0..SOLVE_ITER_CAP {
        coo.apply(&p, &mut ap);
        let denom = dot(&ap, &ap).re;
        if denom == 0.0 {
            break;
        }
        let alpha = rr / denom;
        for k in 0..n {
            x[k] += alpha * p[k];
            resid[k] -= alpha * ap[k];
        }
        coo.apply_adjoint(&resid, &mut r);
        let rr_new = dot(&r, &r).re;
        if it % 16 == 0 || rr_new <= 1e-32 {
            coo.apply(&x, &mut ax);
            max_resid = (0..n)
                .map(|k| (b[k] - ax[k]).norm())
                .fold(0.0, f64::max);
            if max_resid <= tol * b_scale.max(1.0) {
                break;
            }
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        if it == SOLVE_ITER_CAP - 1 {
            return Err(Error::NoConvergence {
                iterations: SOLVE_ITER_CAP,
                residual: max_resid,
            });
        }
    }

    let mut psi = boundary.psi.clone();
    let mut phi = boundary.phi.clone();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            psi.set(i, j, x[int_id(i, j)]);
            phi.set(i, j, x[n_int + int_id(i, j)]);
        }
    }
    SpinorPair::new(psi, phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n, n, 1.0 / (n - 1) as f64).unwrap()
    }

    #[test]
    fn wirtinger_exact_on_affine() {
        let g = unit_grid(16);
        let f = ComplexField::from_fn(g, |z| z).unwrap();
        let dz = wirtinger(&f, WirtingerKind::Dz).unwrap();
        let dzb = wirtinger(&f, WirtingerKind::Dzbar).unwrap();
        for k in 0..f.grid.len() {
            assert!((dz.samples[k] - 1.0).norm() < 1e-13);
            assert!(dzb.samples[k].norm() < 1e-13);
        }
    }

    #[test]
    fn wirtinger_exact_on_z_zbar() {
        let g = unit_grid(12);
        let f = ComplexField::from_fn(g.clone(), |z| z * z.conj()).unwrap();
        let dz = wirtinger(&f, WirtingerKind::Dz).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let zbar = g.z(i, j).conj();
                assert!((dz.at(i, j) - zbar).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn wirtinger_second_order_on_sin() {
        let err_at = |n: usize| -> f64 {
            let g = unit_grid(n);
            let f = ComplexField::from_fn(g.clone(), |z| {
                Complex64::new(z.re.sin(), 0.0)
            })
            .unwrap();
            let dz = wirtinger(&f, WirtingerKind::Dz).unwrap();
            let mut worst = 0.0f64;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let expect = Complex64::new(g.x(i).cos() / 2.0, 0.0);
                    worst = worst.max((dz.at(i, j) - expect).norm());
                }
            }
            worst
        };
        let e1 = err_at(33);
        let e2 = err_at(65);
        let order = (e1 / e2).log2();
        assert!((1.9..=2.1).contains(&order), "order = {order}");
    }

    #[test]
    fn residual_zero_for_zero_spinors() {
        let g = unit_grid(8);
        let sp = SpinorPair::new(
            ComplexField::zeros(g.clone()),
            ComplexField::zeros(g.clone()),
        )
        .unwrap();
        let u = ComplexField::constant(g, Complex64::new(0.7, 0.0));
        assert_eq!(dirac_residual(&sp, &u).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn residual_decoupled_holomorphic_case() {
        // U = 0, psi = zbar^2 (quadratic: stencil-exact), phi = z^3
        // (cubic: residual is the h^2 stencil error)
        let g = unit_grid(32);
        let h = g.h;
        let psi = ComplexField::from_fn(g.clone(), |z| z.conj() * z.conj()).unwrap();
        let phi = ComplexField::from_fn(g.clone(), |z| z * z * z).unwrap();
        let sp = SpinorPair::new(psi, phi).unwrap();
        let u = ComplexField::zeros(g);
        let (r1, r2) = dirac_residual(&sp, &u).unwrap();
        assert!(r1 < 1e-12, "r1 = {r1:e}");
        assert!(r2 < 2.0 * h * h, "r2 = {r2:e} vs h^2 = {:e}", h * h);
    }

    #[test]
    fn residual_exponential_family_is_stencil_limited() {
        let g = unit_grid(128);
        let h = g.h;
        let (sp, u) = exact_spinors(
            ExactFamily::ConstUExponential {
                u0: 1.0,
                lambda: Complex64::new(1.0, 0.0),
                amplitude: Complex64::new(1.0, 0.0),
            },
            g,
        )
        .unwrap();
        let (r1, r2) = dirac_residual(&sp, &u).unwrap();
        // centered stencil error of e^{2iy}: |sin(2h)/(2h) - 1| ~ (2h)^2/6
        assert!(r1 < 2.0 * h * h, "r1 = {r1:e}");
        assert!(r2 < 2.0 * h * h, "r2 = {r2:e}");
    }

    #[test]
    fn residual_refinement_order_for_exact_family() {
        let res_at = |n: usize| -> f64 {
            let g = unit_grid(n);
            let (sp, u) = exact_spinors(
                ExactFamily::ConstUExponential {
                    u0: 1.0,
                    lambda: Complex64::new(1.0, 0.5),
                    amplitude: Complex64::new(1.0, 0.0),
                },
                g,
            )
            .unwrap();
            let (r1, r2) = dirac_residual(&sp, &u).unwrap();
            r1.max(r2)
        };
        let e1 = res_at(33);
        let e2 = res_at(65);
        let order = (e1 / e2).log2();
        assert!((1.8..=2.2).contains(&order), "order = {order}");
    }

    #[test]
    fn residual_linearity_in_amplitude() {
        let g = unit_grid(24);
        let (sp, u) = exact_spinors(
            ExactFamily::ZeroUHolo {
                coeff: Complex64::new(1.0, 0.3),
                power: 3,
            },
            g,
        )
        .unwrap();
        let (r1, r2) = dirac_residual(&sp, &u).unwrap();
        let scaled = sp.scaled(Complex64::new(2.0, 0.0));
        let (s1, s2) = dirac_residual(&scaled, &u).unwrap();
        assert_eq!(s1, 2.0 * r1);
        assert_eq!(s2, 2.0 * r2);
    }

    #[test]
    fn exponential_family_satisfies_stated_relations() {
        let g = unit_grid(8);
        // u0 = 1, lambda = 1: mu = -1, psi = phi = exp(2iy)
        let (sp, _) = exact_spinors(
            ExactFamily::ConstUExponential {
                u0: 1.0,
                lambda: Complex64::new(1.0, 0.0),
                amplitude: Complex64::new(1.0, 0.0),
            },
            g.clone(),
        )
        .unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let expect = (Complex64::new(0.0, 2.0 * g.y(j))).exp();
                assert!((sp.psi.at(i, j) - expect).norm() < 1e-14);
                assert!((sp.phi.at(i, j) - expect).norm() < 1e-14);
            }
        }
        // lambda = 2: mu = -1/2 and phi = 2 psi
        let (sp2, _) = exact_spinors(
            ExactFamily::ConstUExponential {
                u0: 1.0,
                lambda: Complex64::new(2.0, 0.0),
                amplitude: Complex64::new(1.0, 0.0),
            },
            g.clone(),
        )
        .unwrap();
        for k in 0..g.len() {
            assert!((sp2.phi.samples[k] - 2.0 * sp2.psi.samples[k]).norm() < 1e-13);
        }
        // mu = -u0^2 / lambda encoded: check via a sample point
        let z = Complex64::new(0.3, 1.2);
        let mu = Complex64::new(-0.5, 0.0);
        let expect = (2.0 * z + mu * z.conj()).exp();
        let gi = Grid::new(0.3, 1.2, 3, 3, 0.1).unwrap();
        let (sp3, _) = exact_spinors(
            ExactFamily::ConstUExponential {
                u0: 1.0,
                lambda: Complex64::new(2.0, 0.0),
                amplitude: Complex64::new(1.0, 0.0),
            },
            gi,
        )
        .unwrap();
        assert!((sp3.psi.at(0, 0) - expect).norm() < 1e-13);
    }

    #[test]
    fn exponential_family_rejects_degenerate_parameters() {
        let g = unit_grid(4);
        assert!(exact_spinors(
            ExactFamily::ConstUExponential {
                u0: 0.0,
                lambda: Complex64::new(1.0, 0.0),
                amplitude: Complex64::new(1.0, 0.0),
            },
            g.clone(),
        )
        .is_err());
        assert!(exact_spinors(
            ExactFamily::ConstUExponential {
                u0: 1.0,
                lambda: Complex64::new(0.0, 0.0),
                amplitude: Complex64::new(1.0, 0.0),
            },
            g,
        )
        .is_err());
    }

    #[test]
    fn solve_recovers_constant_solution() {
        let g = unit_grid(24);
        let u = ComplexField::zeros(g.clone());
        let boundary = SpinorPair::new(
            ComplexField::zeros(g.clone()),
            ComplexField::constant(g.clone(), Complex64::new(1.0, 0.0)),
        )
        .unwrap();
        let sol = solve_dirac(&u, &boundary, 1e-10).unwrap();
        for k in 0..g.len() {
            assert!(sol.psi.samples[k].norm() < 1e-8);
            assert!((sol.phi.samples[k] - 1.0).norm() < 1e-8);
        }
    }

    #[test]
    fn solve_recovers_exponential_family_to_discretization_error() {
        let g = unit_grid(64);
        let (exact, u) = exact_spinors(
            ExactFamily::ConstUExponential {
                u0: 1.0,
                lambda: Complex64::new(1.0, 0.0),
                amplitude: Complex64::new(1.0, 0.0),
            },
            g.clone(),
        )
        .unwrap();
        let sol = solve_dirac(&u, &exact, 1e-9).unwrap();
        let mut worst = 0.0f64;
        for k in 0..g.len() {
            worst = worst.max((sol.psi.samples[k] - exact.psi.samples[k]).norm());
            worst = worst.max((sol.phi.samples[k] - exact.phi.samples[k]).norm());
        }
        // the exact family satisfies the discrete system only up to the
        // O(h^2) stencil error, so that is the recovery floor
        assert!(worst < 3e-3, "worst deviation = {worst:e}");
        // and the discrete residual contract holds
        let (r1, r2) = dirac_residual(&sol, &u).unwrap();
        let (e1, e2) = dirac_residual(&exact, &u).unwrap();
        assert!(r1.max(r2) <= 10.0 * e1.max(e2).max(1e-9));
    }

    #[test]
    fn solve_recovers_holomorphic_boundary_data() {
        let g = unit_grid(48);
        let u = ComplexField::zeros(g.clone());
        let (exact, _) = exact_spinors(
            ExactFamily::ZeroUHolo {
                coeff: Complex64::new(1.0, 0.0),
                power: 3,
            },
            g.clone(),
        )
        .unwrap();
        let sol = solve_dirac(&u, &exact, 1e-9).unwrap();
        let mut worst = 0.0f64;
        for k in 0..g.len() {
            worst = worst.max((sol.phi.samples[k] - exact.phi.samples[k]).norm());
        }
        assert!(worst < 2e-3, "worst deviation = {worst:e}");
    }
}
