//! The generalized Weierstrass immersion: surface one-forms built from a
//! spinor pair, path integration into R^3, the induced metric and its
//! curvatures, and an independent finite-difference fundamental-form
//! oracle for cross-validation.

use num_complex::Complex64;

use crate::dirac::{wirtinger, WirtingerKind};
use crate::grid::{ComplexField, Grid, RealField, SpinorPair};
use crate::{Error, Result};

/// dz- and dzbar-components of one surface one-form.
#[derive(Debug, Clone)]
pub struct FormPair {
    pub dz: ComplexField,
    pub dzbar: ComplexField,
}

/// The three immersion one-forms: X^1 + iX^2, X^1 - iX^2 and X^3.
#[derive(Debug, Clone)]
pub struct OneForms {
    pub plus: FormPair,
    pub minus: FormPair,
    pub third: FormPair,
}

/// Components of the immersion one-forms:
/// plus = (i psibar^2, -i phibar^2), minus = (i phi^2, -i psi^2),
/// third = (-psi phibar, -phi psibar).
pub fn one_forms(sp: &SpinorPair) -> OneForms {
    let g = sp.grid().clone();
    let n = g.len();
    let i = Complex64::new(0.0, 1.0);
    let mut plus_dz = Vec::with_capacity(n);
    let mut plus_dzb = Vec::with_capacity(n);
    let mut minus_dz = Vec::with_capacity(n);
    let mut minus_dzb = Vec::with_capacity(n);
    let mut third_dz = Vec::with_capacity(n);
    let mut third_dzb = Vec::with_capacity(n);
    for k in 0..n {
        let psi = sp.psi.samples[k];
        let phi = sp.phi.samples[k];
        plus_dz.push(i * psi.conj() * psi.conj());
        plus_dzb.push(-i * phi.conj() * phi.conj());
        minus_dz.push(i * phi * phi);
        minus_dzb.push(-i * psi * psi);
        third_dz.push(-psi * phi.conj());
        third_dzb.push(-phi * psi.conj());
    }
    let field = |samples: Vec<Complex64>| ComplexField {
        grid: g.clone(),
        samples,
    };
    OneForms {
        plus: FormPair {
            dz: field(plus_dz),
            dzbar: field(plus_dzb),
        },
        minus: FormPair {
            dz: field(minus_dz),
            dzbar: field(minus_dzb),
        },
        third: FormPair {
            dz: field(third_dz),
            dzbar: field(third_dzb),
        },
    }
}

/// Max over the three forms of |d_zbar(dz-component) - d_z(dzbar-component)|
/// on interior nodes. Vanishes (up to stencil error) exactly when the
/// spinors solve the Dirac system.
pub fn closedness_residual(sp: &SpinorPair, u: &ComplexField) -> Result<f64> {
    if *sp.grid() != u.grid {
        return Err(Error::GridMismatch(
            "spinors and potential on different grids".to_string(),
        ));
    }
    closedness_residual_forms(&one_forms(sp), sp.grid())
}

fn closedness_residual_forms(forms: &OneForms, g: &Grid) -> Result<f64> {
    let mut worst = 0.0f64;
    for pair in [&forms.plus, &forms.minus, &forms.third] {
        let a = wirtinger(&pair.dz, WirtingerKind::Dzbar)?;
        let b = wirtinger(&pair.dzbar, WirtingerKind::Dz)?;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                worst = worst.max((a.at(i, j) - b.at(i, j)).norm());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStyle {
    XThenY,
    YThenX,
}

/// Grid-aligned integration path from a basepoint node.
#[derive(Debug, Clone, Copy)]
pub struct PathSpec {
    pub basepoint: (usize, usize),
    pub style: PathStyle,
}

impl PathSpec {
    pub fn new(basepoint: (usize, usize), style: PathStyle) -> PathSpec {
        PathSpec { basepoint, style }
    }
}

/// Immersion data on a grid: coordinates, conformal factor, and (once
/// attached) the curvatures of Eq.-(4) type.
#[derive(Debug, Clone)]
pub struct SurfaceSample {
    pub grid: Grid,
    pub x1: RealField,
    pub x2: RealField,
    pub x3: RealField,
    pub d: RealField,
    pub k: Option<RealField>,
    pub h: Option<RealField>,
    /// Diagnostic: closedness residual of the generating forms.
    pub closedness: f64,
}

impl SurfaceSample {
    /// Build directly from coordinate fields (e.g. an explicit graph),
    /// for use with the finite-difference oracle.
    pub fn from_coordinates(
        grid: Grid,
        x1: RealField,
        x2: RealField,
        x3: RealField,
    ) -> Result<SurfaceSample> {
        for f in [&x1, &x2, &x3] {
            if f.grid != grid {
                return Err(Error::GridMismatch(
                    "coordinate field grid mismatch".to_string(),
                ));
            }
        }
        let d = RealField::zeros(grid.clone());
        Ok(SurfaceSample {
            grid,
            x1,
            x2,
            x3,
            d,
            k: None,
            h: None,
            closedness: f64::NAN,
        })
    }
}

// Cumulative integral of uniformly spaced samples, fourth order: each
// step integrates the cubic through the four nearest samples.
fn cumint(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = f.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = (f[0] + f[1]) * (h / 2.0);
        return out;
    }
    if n == 3 {
        out[1] = (5.0 * f[0] + 8.0 * f[1] - f[2]) * (h / 12.0);
        out[2] = out[1] + (-f[0] + 8.0 * f[1] + 5.0 * f[2]) * (h / 12.0);
        return out;
    }
    for k in 0..n - 1 {
        let inc = if k == 0 {
            (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) * (h / 24.0)
        } else if k == n - 2 {
            (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]) * (h / 24.0)
        } else {
            (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]) * (h / 24.0)
        };
        out[k + 1] = out[k] + inc;
    }
    out
}

// Line integrands of P dz + Q dzbar along grid axes:
// along x, dz = dzbar = dx; along y, dz = i dy, dzbar = -i dy.
fn x_integrand(pair: &FormPair, i: usize, j: usize) -> Complex64 {
    pair.dz.at(i, j) + pair.dzbar.at(i, j)
}

fn y_integrand(pair: &FormPair, i: usize, j: usize) -> Complex64 {
    Complex64::new(0.0, 1.0) * (pair.dz.at(i, j) - pair.dzbar.at(i, j))
}

fn integrate_form(pair: &FormPair, g: &Grid, path: &PathSpec) -> Vec<Complex64> {
    let (i0, j0) = path.basepoint;
    let h = g.h;
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    match path.style {
        PathStyle::XThenY => {
            // along row j0 first, then up/down each column
            let row: Vec<Complex64> = (0..g.nx).map(|i| x_integrand(pair, i, j0)).collect();
            let row_cum = cumint(&row, h);
            for i in 0..g.nx {
                let col: Vec<Complex64> =
                    (0..g.ny).map(|j| y_integrand(pair, i, j)).collect();
                let col_cum = cumint(&col, h);
                let base = row_cum[i] - row_cum[i0] - col_cum[j0];
                for j in 0..g.ny {
                    out[g.idx(i, j)] = base + col_cum[j];
                }
            }
        }
        PathStyle::YThenX => {
            let col: Vec<Complex64> = (0..g.ny).map(|j| y_integrand(pair, i0, j)).collect();
            let col_cum = cumint(&col, h);
            for j in 0..g.ny {
                let row: Vec<Complex64> =
                    (0..g.nx).map(|i| x_integrand(pair, i, j)).collect();
                let row_cum = cumint(&row, h);
                let base = col_cum[j] - col_cum[j0] - row_cum[i0];
                for i in 0..g.nx {
                    out[g.idx(i, j)] = base + row_cum[i];
                }
            }
        }
    }
    out
}

/// Integrate the immersion one-forms from the basepoint along grid-aligned
/// paths. The coordinates are real by the conjugate-pair structure of the
/// forms; the imaginary parts are checked against 1e-12 x scale and then
/// discarded. X(basepoint) = 0.
pub fn integrate_immersion(sp: &SpinorPair, path: &PathSpec) -> Result<SurfaceSample> {
    let g = sp.grid().clone();
    let (i0, j0) = path.basepoint;
    if i0 >= g.nx || j0 >= g.ny {
        return Err(Error::OutOfDomain(format!(
            "basepoint ({i0}, {j0}) outside {}x{} grid",
            g.nx, g.ny
        )));
    }
    let forms = one_forms(sp);
    let closedness = closedness_residual_forms(&forms, &g)?;

    let a = integrate_form(&forms.plus, &g, path); // X^1 + iX^2
    let b = integrate_form(&forms.minus, &g, path); // X^1 - iX^2
    let c = integrate_form(&forms.third, &g, path); // X^3

    let mut x1 = RealField::zeros(g.clone());
    let mut x2 = RealField::zeros(g.clone());
    let mut x3 = RealField::zeros(g.clone());
    let mut max_im = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..g.len() {
        let v1 = (a[k] + b[k]) * 0.5;
        let v2 = (a[k] - b[k]) / Complex64::new(0.0, 2.0);
        let v3 = c[k];
        max_im = max_im.max(v1.im.abs()).max(v2.im.abs()).max(v3.im.abs());
        scale = scale.max(v1.re.abs()).max(v2.re.abs()).max(v3.re.abs());
        x1.samples[k] = v1.re;
        x2.samples[k] = v2.re;
        x3.samples[k] = v3.re;
    }
    if max_im > 1e-12 * scale.max(1.0) {
        return Err(Error::Contract(format!(
            "immersion coordinates not real: max |Im X| = {max_im:e}"
        )));
    }

    let mut d = RealField::zeros(g.clone());
    for k in 0..g.len() {
        d.samples[k] = sp.psi.samples[k].norm_sqr() + sp.phi.samples[k].norm_sqr();
    }
    Ok(SurfaceSample {
        grid: g,
        x1,
        x2,
        x3,
        d,
        k: None,
        h: None,
        closedness,
    })
}

const METRIC_FLOOR: f64 = 1e-10;

fn real_diff_x(f: &RealField) -> RealField {
    let g = &f.grid;
    let h = g.h;
    let mut out = RealField::zeros(g.clone());
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

fn real_diff_y(f: &RealField) -> RealField {
    let g = &f.grid;
    let h = g.h;
    let mut out = RealField::zeros(g.clone());
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

fn real_laplacian(f: &RealField) -> RealField {
    let g = &f.grid;
    let h2 = g.h * g.h;
    let second = |fm: f64, f0: f64, fp: f64| (fp - 2.0 * f0 + fm) / h2;
    let one_sided = |f0: f64, f1: f64, f2: f64, f3: f64| {
        (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / h2
    };
    let mut out = RealField::zeros(g.clone());
    for j in 0..g.ny {
        for i in 0..g.nx {
            let fxx = if i == 0 {
                one_sided(f.at(0, j), f.at(1, j), f.at(2, j), f.at(3.min(g.nx - 1), j))
            } else if i == g.nx - 1 {
                one_sided(
                    f.at(i, j),
                    f.at(i - 1, j),
                    f.at(i - 2, j),
                    f.at(i.saturating_sub(3), j),
                )
            } else {
                second(f.at(i - 1, j), f.at(i, j), f.at(i + 1, j))
            };
            let fyy = if j == 0 {
                one_sided(f.at(i, 0), f.at(i, 1), f.at(i, 2), f.at(i, 3.min(g.ny - 1)))
            } else if j == g.ny - 1 {
                one_sided(
                    f.at(i, j),
                    f.at(i, j - 1),
                    f.at(i, j - 2),
                    f.at(i, j.saturating_sub(3)),
                )
            } else {
                second(f.at(i, j - 1), f.at(i, j), f.at(i, j + 1))
            };
            out.set(i, j, fxx + fyy);
        }
    }
    out
}

/// Metric density D, Gaussian curvature K = -(4/D^2)[log D]_{z zbar} and
/// mean curvature H = 2U/D. Nodes with D below 1e-10 are flagged with NaN
/// and excluded from norms downstream.
pub fn curvatures(
    sp: &SpinorPair,
    u: &ComplexField,
) -> Result<(RealField, RealField, RealField)> {
    if *sp.grid() != u.grid {
        return Err(Error::GridMismatch(
            "spinors and potential on different grids".to_string(),
        ));
    }
    let g = sp.grid().clone();
    let mut d = RealField::zeros(g.clone());
    for k in 0..g.len() {
        d.samples[k] = sp.psi.samples[k].norm_sqr() + sp.phi.samples[k].norm_sqr();
    }
    let mut logd = RealField::zeros(g.clone());
    for k in 0..g.len() {
        logd.samples[k] = if d.samples[k] > METRIC_FLOOR {
            d.samples[k].ln()
        } else {
            0.0 // placeholder; node flagged below
        };
    }
    // [log D]_{z zbar} = Laplacian(log D) / 4
    let lap = real_laplacian(&logd);
    let mut kk = RealField::zeros(g.clone());
    let mut hh = RealField::zeros(g.clone());
    for k in 0..g.len() {
        if d.samples[k] > METRIC_FLOOR {
            kk.samples[k] = -lap.samples[k] / (d.samples[k] * d.samples[k]);
            hh.samples[k] = 2.0 * u.samples[k].re / d.samples[k];
        } else {
            kk.samples[k] = f64::NAN;
            hh.samples[k] = f64::NAN;
        }
    }
    Ok((d, kk, hh))
}

/// First and second fundamental forms of the embedded surface by centered
/// differences, with the derived curvatures. An independent check of the
/// conformal-representation formulas.
#[derive(Debug, Clone)]
pub struct FundamentalForms {
    pub big_e: RealField,
    pub big_f: RealField,
    pub big_g: RealField,
    pub small_e: RealField,
    pub small_f: RealField,
    pub small_g: RealField,
    pub k_fd: RealField,
    pub h_fd: RealField,
}

const TANGENT_FLOOR: f64 = 1e-10;

pub fn fd_fundamental_forms(s: &SurfaceSample) -> Result<FundamentalForms> {
    let g = s.grid.clone();
    let coords = [&s.x1, &s.x2, &s.x3];
    let dx: Vec<RealField> = coords.iter().map(|f| real_diff_x(f)).collect();
    let dy: Vec<RealField> = coords.iter().map(|f| real_diff_y(f)).collect();
    let dxx: Vec<RealField> = dx.iter().map(real_diff_x).collect();
    let dxy: Vec<RealField> = dx.iter().map(real_diff_y).collect();
    let dyy: Vec<RealField> = dy.iter().map(real_diff_y).collect();

    let mut out = FundamentalForms {
        big_e: RealField::zeros(g.clone()),
        big_f: RealField::zeros(g.clone()),
        big_g: RealField::zeros(g.clone()),
        small_e: RealField::zeros(g.clone()),
        small_f: RealField::zeros(g.clone()),
        small_g: RealField::zeros(g.clone()),
        k_fd: RealField::zeros(g.clone()),
        h_fd: RealField::zeros(g.clone()),
    };
    for k in 0..g.len() {
        let xu = [dx[0].samples[k], dx[1].samples[k], dx[2].samples[k]];
        let xv = [dy[0].samples[k], dy[1].samples[k], dy[2].samples[k]];
        let e1 = xu[0] * xu[0] + xu[1] * xu[1] + xu[2] * xu[2];
        let f1 = xu[0] * xv[0] + xu[1] * xv[1] + xu[2] * xv[2];
        let g1 = xv[0] * xv[0] + xv[1] * xv[1] + xv[2] * xv[2];
        out.big_e.samples[k] = e1;
        out.big_f.samples[k] = f1;
        out.big_g.samples[k] = g1;
        // normal n = X_x x X_y / |.|
        let cross = [
            xu[1] * xv[2] - xu[2] * xv[1],
            xu[2] * xv[0] - xu[0] * xv[2],
            xu[0] * xv[1] - xu[1] * xv[0],
        ];
        let cn = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        if cn <= TANGENT_FLOOR {
            out.small_e.samples[k] = f64::NAN;
            out.small_f.samples[k] = f64::NAN;
            out.small_g.samples[k] = f64::NAN;
            out.k_fd.samples[k] = f64::NAN;
            out.h_fd.samples[k] = f64::NAN;
            continue;
        }
        let n = [cross[0] / cn, cross[1] / cn, cross[2] / cn];
        let xuu = [dxx[0].samples[k], dxx[1].samples[k], dxx[2].samples[k]];
        let xuv = [dxy[0].samples[k], dxy[1].samples[k], dxy[2].samples[k]];
        let xvv = [dyy[0].samples[k], dyy[1].samples[k], dyy[2].samples[k]];
        let e2 = n[0] * xuu[0] + n[1] * xuu[1] + n[2] * xuu[2];
        let f2 = n[0] * xuv[0] + n[1] * xuv[1] + n[2] * xuv[2];
        let g2 = n[0] * xvv[0] + n[1] * xvv[1] + n[2] * xvv[2];
        out.small_e.samples[k] = e2;
        out.small_f.samples[k] = f2;
        out.small_g.samples[k] = g2;
        let denom = e1 * g1 - f1 * f1;
        out.k_fd.samples[k] = (e2 * g2 - f2 * f2) / denom;
        out.h_fd.samples[k] = (e1 * g2 - 2.0 * f1 * f2 + g1 * e2) / (2.0 * denom);
    }
    Ok(out)
}

/// Max interior relative defect of E = G = D^2, F = 0.
pub fn conformality_residual(s: &SurfaceSample) -> Result<f64> {
    let forms = fd_fundamental_forms(s)?;
    let g = &s.grid;
    let mut worst = 0.0f64;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let k = g.idx(i, j);
            let d2 = s.d.samples[k] * s.d.samples[k];
            if d2 <= METRIC_FLOOR {
                continue;
            }
            let e1 = forms.big_e.samples[k];
            let f1 = forms.big_f.samples[k];
            let g1 = forms.big_g.samples[k];
            let defect = ((e1 - g1).abs() + f1.abs() + (e1 - d2).abs()) / d2;
            if defect.is_finite() {
                worst = worst.max(defect);
            }
        }
    }
    Ok(worst)
}

fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Write a Wavefront OBJ mesh (row-major vertices, quads split into
/// triangles) plus a per-vertex curvature sidecar CSV
/// ("i,j,x,y,K,H") next to it.
pub fn export_obj(s: &SurfaceSample, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let g = &s.grid;
    if g.nx < 2 || g.ny < 2 || g.len() == 0 {
        return Err(Error::DegenerateGrid(
            "refusing to export an empty or degenerate surface".to_string(),
        ));
    }
    let sidecar = path.with_extension("curvature.csv");
    let mut obj = String::new();
    obj.push_str("# generalized Weierstrass immersion\n");
    obj.push_str(&format!(
        "# curvature sidecar: {}\n",
        sidecar
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    ));
    for k in 0..g.len() {
        obj.push_str(&format!(
            "v {} {} {}\n",
            fmt_float(s.x1.samples[k]),
            fmt_float(s.x2.samples[k]),
            fmt_float(s.x3.samples[k])
        ));
    }
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let v1 = g.idx(i, j) + 1;
            let v2 = g.idx(i + 1, j) + 1;
            let v3 = g.idx(i + 1, j + 1) + 1;
            let v4 = g.idx(i, j + 1) + 1;
            obj.push_str(&format!("f {v1} {v2} {v3}\n"));
            obj.push_str(&format!("f {v1} {v3} {v4}\n"));
        }
    }
    let mut csv = String::from("i,j,x,y,K,H\n");
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            let kv = s.k.as_ref().map_or(0.0, |f| f.samples[k]);
            let hv = s.h.as_ref().map_or(0.0, |f| f.samples[k]);
            csv.push_str(&format!(
                "{i},{j},{},{},{},{}\n",
                fmt_float(g.x(i)),
                fmt_float(g.y(j)),
                fmt_float(kv),
                fmt_float(hv)
            ));
        }
    }
    let mut fo = std::fs::File::create(path)?;
    fo.write_all(obj.as_bytes())?;
    let mut fc = std::fs::File::create(&sidecar)?;
    fc.write_all(csv.as_bytes())?;
    Ok(())
}
