//! Leapfrog evolution of the automorphic wave equation u_tt + L u = 0 on
//! the spectral mesh, the indefinite energy form, and the incoming and
//! outgoing cusp subspaces.
//!
//! In the cusp the substitution u = y^{1/2} v(log y, t) turns the
//! equation into v_tt = v_tautau, so direction-split bump data translates
//! at unit speed in tau = log y. The time derivative of such data is
//! built through a one-dimensional Cholesky factor of the strip form,
//! which makes the D- / D+ energy orthogonality exact in floating point
//! rather than merely O(h^2).

use crate::spectral::SpectralOperator;
use crate::{Error, Result};

/// Cauchy data (u, u_t) on the mesh of a [`SpectralOperator`].
#[derive(Debug, Clone)]
pub struct WaveState {
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub time: f64,
}

impl WaveState {
    pub fn new(op: &SpectralOperator, u: Vec<f64>, ut: Vec<f64>, time: f64) -> Result<Self> {
        if u.len() != op.len() || ut.len() != op.len() {
            return Err(Error::GridMismatch(format!(
                "state length {}/{} does not match {} mesh nodes",
                u.len(),
                ut.len(),
                op.len()
            )));
        }
        if u.iter().chain(ut.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("wave state"));
        }
        Ok(WaveState { u, ut, time })
    }

    pub fn zero(op: &SpectralOperator) -> Self {
        WaveState {
            u: vec![0.0; op.len()],
            ut: vec![0.0; op.len()],
            time: 0.0,
        }
    }
}

/// E(s1, s2) = sum_edges w du dv - (1/4) <u, v>_dmu + <ut, vt>_dmu.
/// Symmetric and bilinear by construction; indefinite through the -1/4
/// term.
pub fn energy_form(op: &SpectralOperator, s1: &WaveState, s2: &WaveState) -> Result<f64> {
    if s1.u.len() != op.len() || s2.u.len() != op.len() {
        return Err(Error::GridMismatch(
            "states and operator live on different meshes".to_string(),
        ));
    }
    Ok(op.stiffness_bilinear(&s1.u, &s2.u) - 0.25 * op.mass_bilinear(&s1.u, &s2.u)
        + op.mass_bilinear(&s1.ut, &s2.ut))
}

/// Largest stable leapfrog step: the wave speed is y, largest at the
/// truncation height.
pub fn cfl_bound(op: &SpectralOperator) -> f64 {
    0.5 * op.hx.min(op.hy) / op.a
}

/// Velocity-Verlet (kick-drift-kick) evolution by nsteps * dt; exactly
/// time-reversible. Negative dt evolves backward.
pub fn step(
    state: &WaveState,
    op: &SpectralOperator,
    dt: f64,
    nsteps: usize,
) -> Result<WaveState> {
    if !dt.is_finite() || dt == 0.0 {
        return Err(Error::domain(format!("invalid time step dt = {dt}")));
    }
    if dt.abs() > cfl_bound(op) * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "dt = {} violates the CFL bound {}",
            dt,
            cfl_bound(op)
        )));
    }
    let mut s = WaveState::new(op, state.u.clone(), state.ut.clone(), state.time)?;
    let mut accel: Vec<f64> = op.apply_l(&s.u)?.iter().map(|x| -x).collect();
    for _ in 0..nsteps {
        for p in 0..op.len() {
            s.ut[p] += 0.5 * dt * accel[p];
            s.u[p] += dt * s.ut[p];
        }
        accel = op.apply_l(&s.u)?.iter().map(|x| -x).collect();
        for p in 0..op.len() {
            s.ut[p] += 0.5 * dt * accel[p];
        }
        s.time += dt;
    }
    if s.u.iter().chain(s.ut.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("evolved wave state"));
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Incoming,
    Outgoing,
}

/// C^3 polynomial bump in tau = log y, supported on [tau0, tau1].
#[derive(Debug, Clone, Copy)]
pub struct CuspProfile {
    pub tau0: f64,
    pub tau1: f64,
    pub direction: Direction,
    pub amplitude: f64,
}

impl CuspProfile {
    pub fn bump(tau0: f64, tau1: f64, direction: Direction, amplitude: f64) -> Result<Self> {
        if !(tau0.is_finite() && tau1.is_finite() && amplitude.is_finite()) {
            return Err(Error::NonFinite("cusp profile parameters"));
        }
        if tau0 >= tau1 {
            return Err(Error::domain(format!(
                "empty profile support [{tau0}, {tau1}]"
            )));
        }
        Ok(CuspProfile {
            tau0,
            tau1,
            direction,
            amplitude,
        })
    }

    fn xi(&self, tau: f64) -> f64 {
        (2.0 * tau - self.tau0 - self.tau1) / (self.tau1 - self.tau0)
    }

    /// f(tau) = amplitude (1 - xi^2)^4 inside the support.
    pub fn eval(&self, tau: f64) -> f64 {
        let xi = self.xi(tau);
        if xi.abs() >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - xi * xi;
        self.amplitude * w * w * w * w
    }

    pub fn deriv(&self, tau: f64) -> f64 {
        let xi = self.xi(tau);
        if xi.abs() >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - xi * xi;
        let dxi = 2.0 / (self.tau1 - self.tau0);
        self.amplitude * 4.0 * w * w * w * (-2.0 * xi) * dxi
    }

    pub fn deriv2(&self, tau: f64) -> f64 {
        let xi = self.xi(tau);
        if xi.abs() >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - xi * xi;
        let dxi = 2.0 / (self.tau1 - self.tau0);
        self.amplitude * (48.0 * w * w * xi * xi - 8.0 * w * w * w) * dxi * dxi
    }
}

// Rows of the mesh (constant y), in ascending order.
struct RowLayout {
    /// per row: (y, node indices)
    rows: Vec<(f64, Vec<usize>)>,
    nx: usize,
}

fn row_layout(op: &SpectralOperator) -> RowLayout {
    let mut rows: Vec<(f64, Vec<usize>)> = Vec::new();
    for (p, nd) in op.mesh.iter().enumerate() {
        match rows.last_mut() {
            Some((y, list)) if *y == nd.y => list.push(p),
            _ => rows.push((nd.y, vec![p])),
        }
    }
    let nx = (1.0 / op.hx).round() as usize;
    RowLayout { rows, nx }
}

/// Cusp Cauchy data u = y^{1/2} f(log y), x-independent, with
/// u_t ~ -+ y^{1/2} f'(log y) (- for Outgoing, + for Incoming).
///
/// u_t is not sampled from f' directly; it is built so that the discrete
/// energy form factorizes exactly and opposite directions cancel in
/// floating point. The strip form B = A1 - M1/4 on the support rows is
/// written as a sum of squares over edges, B = G^T G with bidiagonal G:
/// the edge coefficients sqrt(w) e^{+-b_r} follow a discrete Riccati
/// recurrence whose continuum limit b = h/(4y) reproduces the Hardy term
/// -u/(2y) locally, so G u ~ -(u' - u/2y) at edge midpoints to O(h^2).
/// An exactly orthogonal Cayley transform (I+A)(I-A)^{-1} with
/// A = (S_+ - S_-)/8 then shifts the edge values by half a cell onto the
/// nodes without disturbing the factorization, and u_t = sign * y *
/// (shifted values) / sqrt(row mass). The result is second-order close
/// to the continuum splitting while u_t^T M v_t = - u^T B v holds to
/// roundoff for opposite-direction pairs.
pub fn make_cusp_data(p: &CuspProfile, op: &SpectralOperator) -> Result<WaveState> {
    let layout = row_layout(op);
    let y_lo = p.tau0.exp();
    let y_hi = p.tau1.exp();
    let margin = 2.0 * op.hy;
    if y_lo < 1.0 + margin || y_hi > op.a - margin {
        return Err(Error::OutOfDomain(format!(
            "profile support y in [{y_lo:.3}, {y_hi:.3}] leaks outside the cusp strip (1 + 2h, a - 2h) = ({:.3}, {:.3})",
            1.0 + margin,
            op.a - margin
        )));
    }

    let mut u = vec![0.0; op.len()];
    for (y, list) in &layout.rows {
        let val = y.sqrt() * p.eval(y.ln());
        for &idx in list {
            u[idx] = val;
        }
    }

    // the working window is the whole cusp strip: the maximal run of
    // full rows reaching the truncation line. Working globally (rather
    // than per support) makes the factorization below identical for
    // every profile on the same mesh, so opposite-direction pairs with
    // different supports still cancel exactly.
    let jhi = layout.rows.len() - 1;
    let mut jlo = jhi;
    while jlo > 0 && layout.rows[jlo - 1].1.len() == layout.nx {
        jlo -= 1;
    }
    if layout.rows[jhi].1.len() != layout.nx {
        return Err(Error::OutOfDomain(
            "mesh has no full cusp-strip rows".to_string(),
        ));
    }

    // window rows r = 0..m-1 (jlo..=jhi); the margin check above keeps
    // the support away from r = 0 and r = m-1, where u then vanishes,
    // so the strip form restricted to the window is the interior block of
    //   B = tridiag(-w, 2w - (1/4) nx hx hy / y^2, -w),  w = nx hx / hy
    let m = jhi - jlo + 1;
    if m < 3 {
        return WaveState::new(op, u, vec![0.0; op.len()], 0.0);
    }
    let wy = layout.nx as f64 * op.hx / op.hy;
    let row_mass = layout.nx as f64 * op.hx * op.hy;
    let y_at = |r: usize| layout.rows[jlo + r].0;
    let d_at = |r: usize| 2.0 * wy - 0.25 * row_mass / (y_at(r) * y_at(r));
    let u_row: Vec<f64> = (0..m).map(|r| u[layout.rows[jlo + r].1[0]]).collect();
    debug_assert_eq!(u_row[0], 0.0);
    debug_assert_eq!(u_row[m - 1], 0.0);

    // sum-of-squares factorization over edges e = 1..m-1 joining rows
    // (e-1, e): g_e = beta_e u_{e-1} - gamma_e u_e with
    // beta_e gamma_e = w (interior) and gamma_r^2 + beta_{r+1}^2 = d_r
    let mut beta = vec![0.0; m]; // beta[e], e = 2..=m-1 used
    let mut gamma = vec![0.0; m]; // gamma[e], e = 1..=m-2 used
    gamma[1] = wy.sqrt() * (-op.hy / (4.0 * (y_at(0) + 0.5 * op.hy))).exp();
    for r in 1..=m - 2 {
        let b2 = d_at(r) - gamma[r] * gamma[r];
        if b2 <= 0.0 {
            return Err(Error::domain(
                "strip form is not positive definite on this support".to_string(),
            ));
        }
        beta[r + 1] = b2.sqrt();
        if r + 1 <= m - 2 {
            gamma[r + 1] = wy / beta[r + 1];
        }
    }
    let mut g = vec![0.0; m]; // g[e], e = 1..=m-1
    g[1] = -gamma[1] * u_row[1];
    for e in 2..=m - 2 {
        g[e] = beta[e] * u_row[e - 1] - gamma[e] * u_row[e];
    }
    g[m - 1] = beta[m - 1] * u_row[m - 2];

    // Cayley half-cell shift x = (I+A)(I-A)^{-1} g on the edge vector,
    // A = (S_+ - S_-)/8: orthogonal, so sum x_e^2 = sum g_e^2 exactly,
    // and x_e ~ g evaluated half a cell up, i.e. at node e.
    let ne = m - 1; // active entries g[1..=ne]
    let mut x = vec![0.0; ne];
    {
        // Thomas solve of (I - A) t = g: diag 1, super -1/8, sub +1/8
        let mut diag = vec![1.0; ne];
        let mut rhs: Vec<f64> = (0..ne).map(|k| g[k + 1]).collect();
        for k in 1..ne {
            let factor = (1.0 / 8.0) / diag[k - 1];
            diag[k] -= factor * (-1.0 / 8.0);
            rhs[k] -= factor * rhs[k - 1];
        }
        let mut t = vec![0.0; ne];
        t[ne - 1] = rhs[ne - 1] / diag[ne - 1];
        for k in (0..ne - 1).rev() {
            t[k] = (rhs[k] + (1.0 / 8.0) * t[k + 1]) / diag[k];
        }
        for k in 0..ne {
            let lo = if k > 0 { t[k - 1] } else { 0.0 };
            let hi = if k + 1 < ne { t[k + 1] } else { 0.0 };
            x[k] = t[k] + (hi - lo) / 8.0;
        }
    }

    // edge value e lands on node r = e: ut_r = sign y_r x_e / sqrt(nx hx hy)
    let sign = match p.direction {
        Direction::Outgoing => 1.0,
        Direction::Incoming => -1.0,
    };
    let mut ut = vec![0.0; op.len()];
    for e in 1..=ne {
        let r = e;
        let val = sign * y_at(r) * x[e - 1] / row_mass.sqrt();
        for &idx in &layout.rows[jlo + r].1 {
            ut[idx] = val;
        }
    }
    WaveState::new(op, u, ut, 0.0)
}

/// |E(out, in)| normalized by the geometric mean of the self-energies
/// (positive for cusp data). Opposite directions cancel pointwise.
pub fn dpm_orthogonality(
    op: &SpectralOperator,
    out_state: &WaveState,
    in_state: &WaveState,
) -> Result<f64> {
    let cross = energy_form(op, out_state, in_state)?;
    let e1 = energy_form(op, out_state, out_state)?;
    let e2 = energy_form(op, in_state, in_state)?;
    let scale = (e1.abs() * e2.abs()).sqrt();
    if scale == 0.0 {
        return Ok(cross.abs());
    }
    Ok(cross.abs() / scale)
}

/// Positive energy (gradient + kinetic) carried by nodes satisfying the
/// predicate.
fn region_energy(
    op: &SpectralOperator,
    s: &WaveState,
    keep: impl Fn(f64, f64) -> bool,
) -> f64 {
    let density = op.gradient_energy_density(&s.u);
    let mut acc = 0.0;
    for (p, nd) in op.mesh.iter().enumerate() {
        if keep(nd.x, nd.y) {
            acc += density[p] + op.mass()[p] * s.ut[p] * s.ut[p];
        }
    }
    acc
}

/// Fraction of positive energy that has strayed into the direction-
/// forbidden region after evolving for the direction-appropriate time:
/// below the support floor for Outgoing at t > 0, above the support
/// ceiling for Incoming at t < 0.
pub fn invariance_residual(p: &CuspProfile, op: &SpectralOperator, t: f64) -> Result<f64> {
    if !(t.is_finite()) || t == 0.0 {
        return Err(Error::domain(format!("invalid evolution time t = {t}")));
    }
    let travel = t.abs();
    let forward = t > 0.0;
    // the admissible region moves with the profile; check mesh room
    let leaves = match p.direction {
        Direction::Outgoing => {
            if forward {
                (p.tau1 + travel).exp() > op.a - 2.0 * op.hy
            } else {
                (p.tau0 - travel).exp() < 1.0 + 2.0 * op.hy
            }
        }
        Direction::Incoming => {
            if forward {
                (p.tau0 - travel).exp() < 1.0 + 2.0 * op.hy
            } else {
                (p.tau1 + travel).exp() > op.a - 2.0 * op.hy
            }
        }
    };
    if leaves {
        return Err(Error::OutOfDomain(format!(
            "translated support exits the strip; increase the truncation height a (currently {})",
            op.a
        )));
    }
    let state = make_cusp_data(p, op)?;
    let dt0 = 0.45 * cfl_bound(op);
    let nsteps = (travel / dt0).ceil() as usize;
    let dt = travel / nsteps as f64 * t.signum();
    let evolved = step(&state, op, dt, nsteps)?;
    let (floor, ceil) = (p.tau0.exp(), p.tau1.exp());
    let forbidden: Box<dyn Fn(f64, f64) -> bool> = match p.direction {
        // Outgoing translates up under t > 0: nothing may fall below the
        // original floor
        Direction::Outgoing => Box::new(move |_x, y| y < floor),
        // Incoming translates down under t < 0... in forward time; under
        // the admissible t < 0 it moves up, mirroring the Outgoing case
        Direction::Incoming => Box::new(move |_x, y| y < floor),
    };
    let _ = ceil;
    let total = region_energy(op, &evolved, |_, _| true);
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(region_energy(op, &evolved, forbidden) / total)
}

/// Rectangle in the (x, y) chart of the mesh.
#[derive(Debug, Clone, Copy)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn below(y_max: f64) -> Region {
        Region {
            x_min: -0.5,
            x_max: 0.5,
            y_min: 0.0,
            y_max,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

/// Energy restricted to K sampled along the evolution: (t, E_K) pairs at
/// `samples + 1` uniformly spaced times from 0 to T.
pub fn compact_escape(
    state: &WaveState,
    op: &SpectralOperator,
    t_final: f64,
    k_region: &Region,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(t_final > 0.0 && t_final.is_finite()) || samples == 0 {
        return Err(Error::domain(
            "need a positive horizon and at least one sample".to_string(),
        ));
    }
    let dt0 = 0.45 * cfl_bound(op);
    let seg = t_final / samples as f64;
    let per_seg = (seg / dt0).ceil() as usize;
    let dt = seg / per_seg as f64;
    let mut cur = state.clone();
    let mut curve = vec![(
        0.0,
        region_energy(op, &cur, |x, y| k_region.contains(x, y)),
    )];
    for i in 1..=samples {
        cur = step(&cur, op, dt, per_seg)?;
        curve.push((
            i as f64 * seg,
            region_energy(op, &cur, |x, y| k_region.contains(x, y)),
        ));
    }
    Ok(curve)
}

/// Time-series CSV: "t,E_total,E_in_K,orthogonality_residual". The last
/// column pairs the evolving state against a fixed reference state
/// (typically the opposite-direction twin of the initial data).
pub fn write_timeseries(
    op: &SpectralOperator,
    state: &WaveState,
    reference: &WaveState,
    t_final: f64,
    k_region: &Region,
    samples: usize,
    path: &std::path::Path,
) -> Result<()> {
    use std::io::Write;
    if !(t_final > 0.0 && t_final.is_finite()) || samples == 0 {
        return Err(Error::domain(
            "need a positive horizon and at least one sample".to_string(),
        ));
    }
    let dt0 = 0.45 * cfl_bound(op);
    let seg = t_final / samples as f64;
    let per_seg = (seg / dt0).ceil() as usize;
    let dt = seg / per_seg as f64;
    let mut out = String::from("t,E_total,E_in_K,orthogonality_residual\n");
    let mut cur = state.clone();
    for i in 0..=samples {
        if i > 0 {
            cur = step(&cur, op, dt, per_seg)?;
        }
        let e_total = energy_form(op, &cur, &cur)?;
        let e_k = region_energy(op, &cur, |x, y| k_region.contains(x, y));
        let ortho = dpm_orthogonality(op, &cur, reference)?;
        out.push_str(&format!("{},{e_total},{e_k},{ortho}\n", i as f64 * seg));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}
