//! The operator L = -y^2 (d_xx + d_yy) - 1/4 on the modular fundamental
//! domain truncated at height `a`, in the measure dmu = y^-2 dx dy.
//!
//! Discretization: tensor mesh clipped to the domain, exact x-periodic
//! identification of the two vertical sides, natural (Neumann) conditions
//! on the arc and the truncation line. The operator is assembled as a
//! stiffness/mass pair so that the quadratic form is symmetric by
//! construction and the constant vector is an exact eigenvector at -1/4.

use crate::moebius::FundamentalDomainSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Interior,
    FloorArc,
    SideLeft,
    SideRight,
    CuspTruncation,
}

#[derive(Debug, Clone, Copy)]
pub struct MeshNode {
    pub x: f64,
    pub y: f64,
    pub tag: BoundaryTag,
}

/// Discrete L on F intersected with {y < a}.
///
/// `edges` carries the stiffness graph (Dirichlet energy weights), `mass`
/// the diagonal dmu weights; the operator action is
/// (L v)_p = (A v)_p / m_p - v_p / 4.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    pub mesh: Vec<MeshNode>,
    pub a: f64,
    pub hx: f64,
    pub hy: f64,
    edges: Vec<(u32, u32, f64)>,
    mass: Vec<f64>,
}

const CLIP_TOL: f64 = 1e-9;

pub fn assemble(spec: &FundamentalDomainSpec, h: f64) -> Result<SpectralOperator> {
    let a = spec.a;
    if !(a > 1.0 && a <= 20.0) {
        return Err(Error::domain(format!(
            "truncation height a = {a} outside (1, 20]"
        )));
    }
    if !(h > 0.0 && h <= 0.1) {
        return Err(Error::domain(format!("mesh spacing h = {h} outside (0, 0.1]")));
    }
    let nx = ((1.0 / h).round() as usize).max(8);
    let hx = 1.0 / nx as f64;
    let y_base = 3f64.sqrt() / 2.0;
    let rows = ((a - y_base) / h).ceil() as usize;
    let hy = (a - y_base) / rows as f64;
    let ny = rows + 1;

    // node at (i, j) lives at x = -1/2 + i hx (i < nx; i = nx wraps to 0)
    let mut index = vec![usize::MAX; nx * ny];
    let mut mesh: Vec<MeshNode> = Vec::new();
    for j in 0..ny {
        let y = y_base + j as f64 * hy;
        for i in 0..nx {
            let x = -0.5 + i as f64 * hx;
            if x * x + y * y < 1.0 - CLIP_TOL {
                continue;
            }
            let tag = if j == ny - 1 {
                BoundaryTag::CuspTruncation
            } else if i == 0 {
                BoundaryTag::SideLeft
            } else {
                BoundaryTag::Interior // floor tag refined below
            };
            index[j * nx + i] = mesh.len();
            mesh.push(MeshNode { x, y, tag });
        }
    }
    // nodes whose southern neighbor was clipped sit on the arc
    let mut arc_count = 0usize;
    for j in 0..ny {
        for i in 0..nx {
            let p = index[j * nx + i];
            if p == usize::MAX {
                continue;
            }
            let below = if j == 0 {
                usize::MAX
            } else {
                index[(j - 1) * nx + i]
            };
            if below == usize::MAX && mesh[p].tag == BoundaryTag::Interior
                || below == usize::MAX && mesh[p].tag == BoundaryTag::SideLeft
            {
                if mesh[p].tag == BoundaryTag::Interior {
                    mesh[p].tag = BoundaryTag::FloorArc;
                }
                arc_count += 1;
            }
        }
    }
    if arc_count < 8 {
        return Err(Error::DegenerateGrid(format!(
            "only {arc_count} nodes resolve the floor arc; refine h"
        )));
    }

    // Dirichlet-energy edges; missing neighbors dropped = natural boundary
    let wx = hy / hx;
    let wy = hx / hy;
    let mut edges = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let p = index[j * nx + i];
            if p == usize::MAX {
                continue;
            }
            let right = index[j * nx + (i + 1) % nx];
            if right != usize::MAX && right != p {
                edges.push((p.min(right) as u32, p.max(right) as u32, wx));
            }
            if j + 1 < ny {
                let up = index[(j + 1) * nx + i];
                if up != usize::MAX {
                    edges.push((p as u32, up as u32, wy));
                }
            }
        }
    }
    let mass: Vec<f64> = mesh.iter().map(|nd| hx * hy / (nd.y * nd.y)).collect();
    Ok(SpectralOperator {
        mesh,
        a,
        hx,
        hy,
        edges,
        mass,
    })
}

impl SpectralOperator {
    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Stiffness action (A v)_p = sum over edges w (v_p - v_q).
    fn apply_stiffness(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for &(p, q, w) in &self.edges {
            let (p, q) = (p as usize, q as usize);
            let d = w * (v[p] - v[q]);
            out[p] += d;
            out[q] -= d;
        }
    }

    /// Pointwise action of the discrete L.
    pub fn apply_l(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::GridMismatch(format!(
                "vector length {} does not match {} mesh nodes",
                v.len(),
                self.len()
            )));
        }
        let mut av = vec![0.0; self.len()];
        self.apply_stiffness(v, &mut av);
        for p in 0..self.len() {
            av[p] = av[p] / self.mass[p] - 0.25 * v[p];
        }
        Ok(av)
    }

    /// <L v, v>_dmu = Dirichlet energy - (1/4)||v||^2_dmu.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut energy = 0.0;
        for &(p, q, w) in &self.edges {
            let d = v[p as usize] - v[q as usize];
            energy += w * d * d;
        }
        energy - 0.25 * self.norm_sqr_dmu(v)
    }

    /// Dirichlet-energy pairing sum over edges of w (u_p - u_q)(v_p - v_q).
    pub fn stiffness_bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(p, q, w) in &self.edges {
            let (p, q) = (p as usize, q as usize);
            // grouping keeps the form bitwise symmetric in (u, v)
            acc += w * ((u[p] - u[q]) * (v[p] - v[q]));
        }
        acc
    }

    /// dmu pairing sum of m_p u_p v_p.
    pub fn mass_bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for p in 0..self.len() {
            acc += self.mass[p] * (u[p] * v[p]);
        }
        acc
    }

    /// Per-node positive energy density: half of each incident edge's
    /// Dirichlet contribution. Used for region-restricted energies.
    pub fn gradient_energy_density(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for &(p, q, w) in &self.edges {
            let (p, q) = (p as usize, q as usize);
            let e = 0.5 * w * (u[p] - u[q]) * (u[p] - u[q]);
            out[p] += e;
            out[q] += e;
        }
        out
    }

    pub fn norm_sqr_dmu(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(&self.mass)
            .map(|(vi, mi)| mi * vi * vi)
            .fold(0.0, |acc, t| acc + t)
    }

    /// Max asymmetry of the assembled quadratic-form matrix; zero by
    /// construction since every edge contributes symmetrically.
    pub fn symmetry_defect(&self) -> f64 {
        use std::collections::HashMap;
        let mut entries: HashMap<(u32, u32), f64> = HashMap::new();
        for &(p, q, w) in &self.edges {
            *entries.entry((p, q)).or_insert(0.0) += -w;
            *entries.entry((q, p)).or_insert(0.0) += -w;
        }
        let mut defect = 0.0f64;
        for (&(p, q), &w) in &entries {
            if p < q {
                let wt = entries.get(&(q, p)).copied().unwrap_or(0.0);
                defect = defect.max((w - wt).abs());
            }
        }
        defect
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumClass {
    UnitRepresentation,
    AdditionalSeries,
    BasicSeries,
    ContinuumArtifact,
}

impl SpectrumClass {
    pub fn label(&self) -> &'static str {
        match self {
            SpectrumClass::UnitRepresentation => "unit-representation",
            SpectrumClass::AdditionalSeries => "additional-series",
            SpectrumClass::BasicSeries => "basic-series",
            SpectrumClass::ContinuumArtifact => "continuum-artifact",
        }
    }
}

/// Low eigenpairs of the discrete L, dmu-orthonormal, with per-pair
/// residuals and the fraction of dmu-mass carried above y = a/2 (used by
/// [`classify`] to flag cusp-concentrated continuum artifacts).
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub cusp_mass_fraction: Vec<f64>,
    pub classification: Vec<Option<SpectrumClass>>,
}

const RESIDUAL_TOL: f64 = 1e-8;
const SHIFT: f64 = 0.3; // C + SHIFT is positive definite: L >= -1/4 exactly
const MAX_OUTER: usize = 600;
const UNIT_TOL: f64 = 1e-4;

// Lower-band SPD matrix: band[i][d] = K[i, i - bw + d], band[i][bw] = diag.
struct BandMatrix {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandMatrix {
    fn zeros(n: usize, bw: usize) -> BandMatrix {
        BandMatrix {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * (self.bw + 1) + (self.bw - (i - j))]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.band[i * (self.bw + 1) + (self.bw - (i - j))] = v;
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.band[i * (self.bw + 1) + (self.bw - (i - j))] += v;
    }

    /// In-place Cholesky K = L L^T within the band.
    fn factor(&mut self) -> Result<()> {
        let bw = self.bw;
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = j.saturating_sub(bw).max(lo);
                let mut sum = self.at(i, j);
                for k in klo..j {
                    sum -= self.at(i, k) * self.at(j, k);
                }
                if j == i {
                    if sum <= 0.0 {
                        return Err(Error::domain(
                            "shifted operator lost positive definiteness",
                        ));
                    }
                    self.set(i, i, sum.sqrt());
                } else {
                    let d = self.at(j, j);
                    self.set(i, j, sum / d);
                }
            }
        }
        Ok(())
    }

    /// Solve L L^T x = b after [`factor`].
    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let bw = self.bw;
        x.copy_from_slice(b);
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let mut sum = x[i];
            for k in lo..i {
                sum -= self.at(i, k) * x[k];
            }
            x[i] = sum / self.at(i, i);
        }
        for i in (0..self.n).rev() {
            let hi = (i + bw).min(self.n - 1);
            let mut sum = x[i];
            for k in i + 1..=hi {
                sum -= self.at(k, i) * x[k];
            }
            x[i] = sum / self.at(i, i);
        }
    }
}

// Cyclic Jacobi for small dense symmetric matrices; returns ascending
// eigenvalues and the corresponding rotation columns.
fn dense_symmetric_eig(mut a: Vec<f64>, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..m {
            for q in p + 1..m {
                off = off.max(a[p * m + q].abs());
            }
        }
        if off < 1e-14 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let vkp = v[k * m + p];
                    let vkq = v[k * m + q];
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[i * m + i].partial_cmp(&a[j * m + j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[i * m + i]).collect();
    let mut vecs = vec![0.0; m * m];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..m {
            vecs[k * m + col] = v[k * m + src];
        }
    }
    (vals, vecs)
}

fn mgs_orthonormalize(cols: &mut [Vec<f64>]) {
    let m = cols.len();
    for _ in 0..2 {
        for i in 0..m {
            for j in 0..i {
                let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                let (head, tail) = cols.split_at_mut(i);
                for (vi, vj) in tail[0].iter_mut().zip(&head[j]) {
                    *vi -= dot * vj;
                }
            }
            let norm: f64 = cols[i].iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 {
                for vi in cols[i].iter_mut() {
                    *vi /= norm;
                }
            }
        }
    }
}

/// Smallest `count` eigenpairs via shift-inverted subspace iteration with
/// Rayleigh-Ritz, in the symmetrized coordinates w = M^{1/2} v.
pub fn lowest_eigenpairs(op: &SpectralOperator, count: usize) -> Result<SpectralResult> {
    let n = op.len();
    if count == 0 || count > 32 {
        return Err(Error::domain(format!("count = {count} outside 1..=32")));
    }
    if count >= n {
        return Err(Error::domain(format!(
            "requested {count} eigenpairs of a {n}-node mesh"
        )));
    }
    let sqrt_m: Vec<f64> = op.mass.iter().map(|m| m.sqrt()).collect();

    // symmetrized action C w = M^{-1/2} A M^{-1/2} w - w/4
    let apply_c = |w: &[f64], out: &mut [f64], scratch: &mut [f64]| {
        for p in 0..n {
            scratch[p] = w[p] / sqrt_m[p];
        }
        op.apply_stiffness(scratch, out);
        for p in 0..n {
            out[p] = out[p] / sqrt_m[p] - 0.25 * w[p];
        }
    };

    // banded K = C + SHIFT, ordered as the mesh is (rows of constant y)
    let bw = op
        .edges
        .iter()
        .map(|&(p, q, _)| (q - p) as usize)
        .max()
        .unwrap_or(1);
    let mut kmat = BandMatrix::zeros(n, bw);
    for p in 0..n {
        kmat.set(p, p, SHIFT - 0.25);
    }
    for &(p, q, w) in &op.edges {
        let (p, q) = (p as usize, q as usize);
        kmat.add(p, p, w / op.mass[p]);
        kmat.add(q, q, w / op.mass[q]);
        let coupling = -w / (sqrt_m[p] * sqrt_m[q]);
        kmat.add(q.max(p), q.min(p), coupling);
    }
    kmat.factor()?;

    // deterministic start: exact lowest mode, then pseudorandom fill
    let m_sub = (count + 6).min(n - 1);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_sub);
    basis.push(sqrt_m.clone());
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    for _ in 1..m_sub {
        let mut col = Vec::with_capacity(n);
        for _ in 0..n {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            col.push(((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5);
        }
        basis.push(col);
    }
    mgs_orthonormalize(&mut basis);

    let mut scratch = vec![0.0; n];
    let mut cw = vec![0.0; n];
    let mut ritz_vals = vec![0.0; m_sub];
    let mut worst = f64::INFINITY;
    let mut iterations = 0;
    for outer in 0..MAX_OUTER {
        iterations = outer + 1;
        // inverse power step
        for col in basis.iter_mut() {
            kmat.solve(&col.clone(), col);
        }
        mgs_orthonormalize(&mut basis);
        // Rayleigh-Ritz on C
        let mut cb: Vec<Vec<f64>> = Vec::with_capacity(m_sub);
        for col in &basis {
            let mut out = vec![0.0; n];
            apply_c(col, &mut out, &mut scratch);
            cb.push(out);
        }
        let mut t = vec![0.0; m_sub * m_sub];
        for i in 0..m_sub {
            for j in 0..m_sub {
                t[i * m_sub + j] = basis[i].iter().zip(&cb[j]).map(|(a, b)| a * b).sum();
            }
        }
        // enforce exact symmetry against roundoff
        for i in 0..m_sub {
            for j in i + 1..m_sub {
                let avg = 0.5 * (t[i * m_sub + j] + t[j * m_sub + i]);
                t[i * m_sub + j] = avg;
                t[j * m_sub + i] = avg;
            }
        }
        let (vals, rot) = dense_symmetric_eig(t, m_sub);
        let mut rotated: Vec<Vec<f64>> = Vec::with_capacity(m_sub);
        for col in 0..m_sub {
            let mut out = vec![0.0; n];
            for (src, bcol) in basis.iter().enumerate() {
                let c = rot[src * m_sub + col];
                if c != 0.0 {
                    for (o, b) in out.iter_mut().zip(bcol) {
                        *o += c * b;
                    }
                }
            }
            rotated.push(out);
        }
        basis = rotated;
        ritz_vals = vals;

        worst = 0.0;
        for i in 0..count {
            apply_c(&basis[i], &mut cw, &mut scratch);
            let mut r2 = 0.0;
            for p in 0..n {
                let r = cw[p] - ritz_vals[i] * basis[i][p];
                r2 += r * r;
            }
            worst = worst.max(r2.sqrt());
        }
        if worst <= RESIDUAL_TOL {
            break;
        }
    }
    if worst > RESIDUAL_TOL {
        return Err(Error::NoConvergence {
            iterations,
            residual: worst,
        });
    }

    let mut eigenvalues = Vec::with_capacity(count);
    let mut eigenvectors = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    let mut cusp_mass_fraction = Vec::with_capacity(count);
    let half = op.a / 2.0;
    for i in 0..count {
        apply_c(&basis[i], &mut cw, &mut scratch);
        let mut r2 = 0.0;
        for p in 0..n {
            let r = cw[p] - ritz_vals[i] * basis[i][p];
            r2 += r * r;
        }
        let v: Vec<f64> = basis[i]
            .iter()
            .zip(&sqrt_m)
            .map(|(w, s)| w / s)
            .collect();
        let mut cusp = 0.0;
        let mut total = 0.0;
        for p in 0..n {
            let contrib = op.mass[p] * v[p] * v[p];
            total += contrib;
            if op.mesh[p].y > half {
                cusp += contrib;
            }
        }
        eigenvalues.push(ritz_vals[i]);
        eigenvectors.push(v);
        residuals.push(r2.sqrt());
        cusp_mass_fraction.push(cusp / total);
    }
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors,
        residuals,
        cusp_mass_fraction,
        classification: vec![None; count],
    })
}

/// Label each eigenvalue by the spectral series it approximates.
pub fn classify(mut result: SpectralResult) -> SpectralResult {
    for i in 0..result.eigenvalues.len() {
        let lambda = result.eigenvalues[i];
        let cusp = result.cusp_mass_fraction.get(i).copied().unwrap_or(0.0);
        let class = if (lambda + 0.25).abs() <= UNIT_TOL {
            SpectrumClass::UnitRepresentation
        } else if lambda < 0.0 {
            SpectrumClass::AdditionalSeries
        } else if cusp > 0.8 {
            SpectrumClass::ContinuumArtifact
        } else {
            SpectrumClass::BasicSeries
        };
        result.classification[i] = Some(class);
    }
    result
}

/// Eigenvalue report: "index,lambda,classification,residual".
pub fn write_report(result: &SpectralResult, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let mut out = String::from("index,lambda,classification,residual\n");
    for i in 0..result.eigenvalues.len() {
        let class = result.classification[i]
            .map(|c| c.label())
            .unwrap_or("unclassified");
        out.push_str(&format!(
            "{i},{},{class},{}\n",
            result.eigenvalues[i], result.residuals[i]
        ));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn domain(a: f64) -> FundamentalDomainSpec {
        FundamentalDomainSpec::modular_standard(a).unwrap()
    }

    #[test]
    fn assemble_rejects_bad_parameters() {
        assert!(assemble(&domain(1.5), 0.2).is_err());
        assert!(assemble(&domain(1.5), -0.01).is_err());
        // a must be in (1, 20]: constructor itself rejects a <= 1
        assert!(FundamentalDomainSpec::modular_standard(1.0).is_err());
    }

    #[test]
    fn constant_vector_is_exact_eigenvector() {
        let op = assemble(&domain(3.0), 0.05).unwrap();
        let v = vec![1.0; op.len()];
        let lv = op.apply_l(&v).unwrap();
        for &x in &lv {
            assert_eq!(x, -0.25);
        }
        // Rayleigh quotient exactly -1/4
        let rq = op.quadratic_form(&v) / op.norm_sqr_dmu(&v);
        assert_eq!(rq, -0.25);
    }

    #[test]
    fn symmetry_defect_is_zero() {
        let op = assemble(&domain(2.5), 0.08).unwrap();
        assert_eq!(op.symmetry_defect(), 0.0);
    }

    #[test]
    fn power_law_is_approximate_eigenfunction_in_cusp_strip() {
        // v = y^s (x-independent): L v = -(s - 1/2)^2 v up to O(h^2).
        let op = assemble(&domain(6.0), 0.05).unwrap();
        for (s, lambda) in [(0.3f64, -0.04), (0.8, -0.09)] {
            let v: Vec<f64> = op.mesh.iter().map(|nd| nd.y.powf(s)).collect();
            let lv = op.apply_l(&v).unwrap();
            let mut worst = 0.0f64;
            for (p, nd) in op.mesh.iter().enumerate() {
                if nd.y < 1.5 || nd.y > 5.0 {
                    continue; // stay clear of the Neumann rows
                }
                worst = worst.max((lv[p] - lambda * v[p]).abs() / v[p].abs());
            }
            assert!(worst < 5e-3, "s = {s}: worst = {worst:e}");
        }
        // oscillatory branch: s = 1/2 + ik, real part, eigenvalue k^2
        let k = 1.0f64;
        let v: Vec<f64> = op
            .mesh
            .iter()
            .map(|nd| nd.y.sqrt() * (k * nd.y.ln()).cos())
            .collect();
        let lv = op.apply_l(&v).unwrap();
        let mut worst = 0.0f64;
        for (p, nd) in op.mesh.iter().enumerate() {
            if nd.y < 1.5 || nd.y > 5.0 {
                continue;
            }
            worst = worst.max((lv[p] - k * k * v[p]).abs());
        }
        assert!(worst < 5e-3, "worst = {worst:e}");
    }

    #[test]
    fn form_is_bounded_below_by_minus_quarter() {
        let op = assemble(&domain(2.5), 0.1).unwrap();
        let mut state = 42u64;
        for _ in 0..5 {
            let v: Vec<f64> = (0..op.len())
                .map(|_| {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                })
                .collect();
            let q = op.quadratic_form(&v);
            let n2 = op.norm_sqr_dmu(&v);
            assert!(q >= -0.25 * n2 - 1e-12 * n2);
        }
    }

    #[test]
    fn lowest_eigenpair_is_unit_representation() {
        let op = assemble(&domain(4.0), 0.05).unwrap();
        let res = lowest_eigenpairs(&op, 5).unwrap();
        assert!((res.eigenvalues[0] + 0.25).abs() < 5e-3, "{}", res.eigenvalues[0]);
        // near-constant ground vector
        let v0 = &res.eigenvectors[0];
        let mean = v0.iter().sum::<f64>() / v0.len() as f64;
        let dev = v0
            .iter()
            .map(|x| (x - mean).abs())
            .fold(0.0f64, f64::max);
        assert!(dev < 1e-6 * mean.abs(), "dev = {dev:e}");
        // residual contract
        for &r in &res.residuals {
            assert!(r <= 1e-8);
        }
        // ascending
        for w in res.eigenvalues.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
        // nothing between lambda_0 and 0 beyond discretization error
        for &l in &res.eigenvalues[1..] {
            assert!(l >= -1e-3, "spurious eigenvalue {l}");
        }
    }

    #[test]
    fn eigenvectors_are_dmu_orthonormal() {
        let op = assemble(&domain(3.0), 0.05).unwrap();
        let res = lowest_eigenpairs(&op, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut g = 0.0;
                for p in 0..op.len() {
                    g += op.mass()[p] * res.eigenvectors[i][p] * res.eigenvectors[j][p];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-8, "gram[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn eigenvalue_residuals_verify_against_apply() {
        let op = assemble(&domain(3.0), 0.08).unwrap();
        let res = lowest_eigenpairs(&op, 3).unwrap();
        for i in 0..3 {
            let lv = op.apply_l(&res.eigenvectors[i]).unwrap();
            let mut r2 = 0.0;
            for p in 0..op.len() {
                let r = lv[p] - res.eigenvalues[i] * res.eigenvectors[i][p];
                r2 += op.mass()[p] * r * r;
            }
            assert!(r2.sqrt() < 1e-7, "pair {i}: residual {}", r2.sqrt());
        }
    }

    #[test]
    fn ground_state_is_exact_and_stable_under_refinement() {
        for h in [0.1, 0.05] {
            let op = assemble(&domain(3.0), h).unwrap();
            let res = lowest_eigenpairs(&op, 1).unwrap();
            assert!(
                (res.eigenvalues[0] + 0.25).abs() < 1e-9,
                "h = {h}: {}",
                res.eigenvalues[0]
            );
        }
    }

    #[test]
    fn classification_rules() {
        let synthetic = SpectralResult {
            eigenvalues: vec![-0.25, -0.1, 91.1, 3.0],
            eigenvectors: vec![vec![]; 4],
            residuals: vec![0.0; 4],
            cusp_mass_fraction: vec![0.4, 0.1, 0.2, 0.95],
            classification: vec![None; 4],
        };
        let labeled = classify(synthetic);
        assert_eq!(
            labeled.classification[0],
            Some(SpectrumClass::UnitRepresentation)
        );
        assert_eq!(
            labeled.classification[1],
            Some(SpectrumClass::AdditionalSeries)
        );
        assert_eq!(labeled.classification[2], Some(SpectrumClass::BasicSeries));
        assert_eq!(
            labeled.classification[3],
            Some(SpectrumClass::ContinuumArtifact)
        );
    }

    #[test]
    fn report_csv_shape() {
        let op = assemble(&domain(2.5), 0.1).unwrap();
        let res = classify(lowest_eigenpairs(&op, 2).unwrap());
        let dir = std::env::temp_dir().join("wlp_spectral_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("eigen.csv");
        write_report(&res, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "index,lambda,classification,residual");
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields[0], "0");
        let lambda: f64 = fields[1].parse().unwrap();
        assert!((lambda + 0.25).abs() < 1e-12, "{first}");
        assert_eq!(fields[2], "unit-representation");
    }
}
