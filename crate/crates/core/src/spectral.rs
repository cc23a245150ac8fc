//! Discretized stability of the radial extremal in the first spherical-harmonic
//! sector.
//!
//! With `s = ln r` the second variation along `v(r) phi_1` becomes the pencil
//!
//! ```text
//! F(v) = ∫ w(s) [ (p-1) (dv/ds)^2 + (n-1) v^2 ] ds,   w = r^{n-2+a} |U'|^{p-2}
//! G(v) = ∫ W(s) v^2 ds,                               W = r^{n-b_a} U^{q-2}
//! ```
//!
//! and `U` fails to be a local minimizer as soon as `F(v) < (q-1) G(v)` for some
//! `v`. On a uniform grid in `s` the stiffness term uses differences between
//! neighbouring nodes with the weight averaged onto the midpoint, the
//! potential and mass terms are lumped, and `v` is clamped to zero at both
//! ends. The pencil is then a symmetric tridiagonal `F` against a positive
//! diagonal `G`; its smallest eigenvalue is found by Sturm bisection followed
//! by shifted inverse iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::RadialExtremal;
use crate::params::CknParams;
use crate::second_variation::{argmin_beta, TestDirection};

/// Margin below `q - 1` required before instability is reported.
pub const CERTIFICATION_MARGIN: f64 = 1e-6;
/// End-of-grid integrand magnitude allowed, relative to the peak.
pub const GRID_DECAY_TOL: f64 = 1e-14;
/// Default node count of the stability grid.
pub const DEFAULT_PENCIL_NODES: usize = 1024;
/// Default node count for the Rayleigh-quotient minimization.
pub const DEFAULT_ENERGY_NODES: usize = 2048;

/// Uniform grid in `s = ln r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    s_min: f64,
    s_max: f64,
    count: usize,
}

impl LogGrid {
    pub fn new(s_min: f64, s_max: f64, count: usize) -> Result<Self> {
        if !(s_min.is_finite() && s_max.is_finite() && s_min < s_max) || count < 16 {
            return Err(Error::Grid(format!(
                "need finite s_min < s_max and count >= 16, got [{s_min}, {s_max}] x {count}"
            )));
        }
        Ok(LogGrid { s_min, s_max, count })
    }

    pub fn symmetric(halfwidth: f64, count: usize) -> Result<Self> {
        LogGrid::new(-halfwidth, halfwidth, count)
    }

    /// Window sized so that the integrands of the quadratic form on the
    /// optimal test direction have decayed below [`GRID_DECAY_TOL`] at both ends.
    pub fn for_pencil(params: &CknParams, count: usize) -> Result<Self> {
        let h = params.h();
        let (p, q) = (params.p(), params.q());
        let big_q = params.big_q();
        let beta = argmin_beta(params);
        let rate0 = h * (p + (p - 2.0) * big_q + 2.0 * beta);
        let rate_inf = h * ((2.0 * q - p) / (p - 1.0) - 2.0 * beta);
        let mut span = 36.0;
        loop {
            let grid = LogGrid::new(-span / rate0, span / rate_inf, count)?;
            if check_pencil_decay(params, &grid).is_ok() {
                return Ok(grid);
            }
            span *= 1.25;
            if span > 500.0 {
                return check_pencil_decay(params, &grid).map(|_| grid);
            }
        }
    }

    /// Window for the radial Rayleigh quotient of `U`: both energy densities
    /// decay like `e^{-36}` at the ends.
    pub fn for_energy(params: &CknParams, count: usize) -> Result<Self> {
        let h = params.h();
        let (p, q) = (params.p(), params.q());
        let rate0 = q * h;
        let rate_inf = p * h / (p - 1.0);
        LogGrid::new(-36.0 / rate0, 36.0 / rate_inf, count)
    }

    /// The grid with every interval halved; its nodes contain these nodes.
    pub fn refined(&self) -> Self {
        LogGrid {
            count: 2 * self.count - 1,
            ..*self
        }
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn step(&self) -> f64 {
        (self.s_max - self.s_min) / (self.count - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.s_max
        } else {
            self.s_min + self.step() * i as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.node(i))
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes().map(f64::exp)
    }

    /// The same grid shifted by `delta` in `s`.
    pub fn shifted(&self, delta: f64) -> Self {
        LogGrid {
            s_min: self.s_min + delta,
            s_max: self.s_max + delta,
            count: self.count,
        }
    }
}

/// Samples of a radial function on a [`LogGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteRadialFunction {
    grid: LogGrid,
    values: Vec<f64>,
}

impl DiscreteRadialFunction {
    pub fn new(grid: LogGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::Grid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Grid("non-finite sample".into()));
        }
        Ok(DiscreteRadialFunction { grid, values })
    }

    /// Samples `f(r)` at the grid radii.
    pub fn sample(grid: LogGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.radii().map(f).collect();
        DiscreteRadialFunction::new(grid, values)
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of strict sign changes, ignoring entries below `1e-12` of the max.
    pub fn sign_changes(&self) -> usize {
        let peak = self.values.iter().fold(0f64, |m, v| m.max(v.abs()));
        let floor = 1e-12 * peak;
        let mut last = 0.0f64;
        let mut changes = 0;
        for &v in &self.values {
            if v.abs() <= floor {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                changes += 1;
            }
            last = v;
        }
        changes
    }
}

/// Node weights of the pencil: `w` (stiffness and potential) and `W` (mass).
fn pencil_weights(ext: &RadialExtremal, s: f64) -> (f64, f64) {
    let prm = ext.params();
    let (n, p, q, a) = (prm.nf(), prm.p(), prm.q(), prm.a());
    let b_a = ext.derived().b_a;
    let w = ((n - 2.0 + a) * s + (p - 2.0) * ext.ln_abs_du_at(s)).exp();
    let mass = ((n - b_a) * s + (q - 2.0) * ext.ln_u_at(s)).exp();
    (w, mass)
}

fn ln_witness(ext: &RadialExtremal, beta: f64, s: f64) -> f64 {
    let prm = ext.params();
    beta * ext.derived().h * s + prm.q() / prm.p() * ext.ln_u_at(s)
}

/// Fails unless `w v^2` and `W v^2`, with `v` the optimal test direction, are
/// below [`GRID_DECAY_TOL`] of their peak at both grid ends.
pub fn check_pencil_decay(params: &CknParams, grid: &LogGrid) -> Result<()> {
    let ext = RadialExtremal::new(params);
    let beta = argmin_beta(params);
    let mut peak = [0f64; 2];
    let mut ends = [[0f64; 2]; 2];
    for (i, s) in grid.nodes().enumerate() {
        let (w, mass) = pencil_weights(&ext, s);
        let v2 = (2.0 * ln_witness(&ext, beta, s)).exp();
        let vals = [w * v2, mass * v2];
        for k in 0..2 {
            peak[k] = peak[k].max(vals[k]);
        }
        if i == 0 {
            ends[0] = vals;
        }
        if i + 1 == grid.count() {
            ends[1] = vals;
        }
    }
    for (k, name) in ["stiffness", "mass"].iter().enumerate() {
        for (side, end) in ["s_min", "s_max"].iter().zip(ends.iter()) {
            let ratio = end[k] / peak[k];
            if !(ratio <= GRID_DECAY_TOL) {
                return Err(Error::Grid(format!(
                    "{name} integrand at {side} is {ratio:e} of its peak (window [{}, {}])",
                    grid.s_min(),
                    grid.s_max()
                )));
            }
        }
    }
    Ok(())
}

/// Symmetric tridiagonal `F` and diagonal `G` on the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    grid: LogGrid,
    /// Diagonal of `F`.
    pub diag: Vec<f64>,
    /// Off-diagonal of `F`, `off[i] = F[i][i+1]`.
    pub off: Vec<f64>,
    /// Diagonal of `G`.
    pub mass: Vec<f64>,
}

impl Pencil {
    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply_f(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    pub fn f_form(&self, x: &[f64]) -> f64 {
        self.apply_f(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn g_form(&self, x: &[f64]) -> f64 {
        self.mass.iter().zip(x).map(|(m, v)| m * v * v).sum()
    }

    /// Interior samples of `f(s)`.
    pub fn interior(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (1..self.grid.count() - 1).map(|i| f(self.grid.node(i))).collect()
    }

    /// Number of eigenvalues of the pencil strictly below `x`, by the inertia
    /// of `F - x G`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut pivot = 1.0;
        for i in 0..self.dim() {
            let d = self.diag[i] - x * self.mass[i];
            pivot = if i == 0 {
                d
            } else {
                let guarded = if pivot.abs() < f64::MIN_POSITIVE {
                    f64::MIN_POSITIVE.copysign(pivot)
                } else {
                    pivot
                };
                d - self.off[i - 1] * self.off[i - 1] / guarded
            };
            if pivot < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Solves `(F - shift G) y = b`; requires `F - shift G` positive definite.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.dim();
        let mut c = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut piv = self.diag[0] - shift * self.mass[0];
        if !(piv > 0.0) {
            return None;
        }
        y[0] = b[0] / piv;
        for i in 1..n {
            c[i - 1] = self.off[i - 1] / piv;
            piv = self.diag[i] - shift * self.mass[i] - self.off[i - 1] * c[i - 1];
            if !(piv > 0.0) {
                return None;
            }
            y[i] = (b[i] - self.off[i - 1] * y[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            y[i] -= c[i] * y[i + 1];
        }
        Some(y)
    }
}

/// Assembles `F` and `G` for `(params, grid)` after checking the grid window.
pub fn assemble_pencil(params: &CknParams, grid: &LogGrid) -> Result<Pencil> {
    check_pencil_decay(params, grid)?;
    Ok(assemble_unchecked(params, grid))
}

fn assemble_unchecked(params: &CknParams, grid: &LogGrid) -> Pencil {
    let ext = RadialExtremal::new(params);
    let (n, p) = (params.nf(), params.p());
    let h = grid.step();
    let count = grid.count();
    let (w, mass): (Vec<f64>, Vec<f64>) = grid.nodes().map(|s| pencil_weights(&ext, s)).unzip();
    // midpoint stiffness weights, one per interval
    let mid: Vec<f64> = w.windows(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect();
    let stiff = (p - 1.0) / h;

    let interior = 1..count - 1;
    let diag = interior
        .clone()
        .map(|i| stiff * (mid[i - 1] + mid[i]) + (n - 1.0) * w[i] * h)
        .collect();
    let off = (1..count - 2).map(|i| -stiff * mid[i]).collect();
    let g = interior.map(|i| mass[i] * h).collect();
    Pencil {
        grid: *grid,
        diag,
        off,
        mass: g,
    }
}

/// Outcome of the discrete stability analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub mu_min: f64,
    /// `q - 1`.
    pub threshold: f64,
    pub certified_breaking: bool,
    /// Ground-state eigenvector on the full grid (zero at both ends), max-normalized.
    pub eigvec: DiscreteRadialFunction,
    /// `F/G` on the optimal test direction.
    pub witness_ratio: f64,
    /// `|F x - mu G x| / |F x|`.
    pub residual: f64,
    pub sign_changes: usize,
}

/// Smallest generalized eigenvalue of `F x = mu G x`.
pub fn mu_min(params: &CknParams, grid: &LogGrid) -> Result<StabilityReport> {
    let pencil = assemble_pencil(params, grid)?;
    let (mu, x, residual) = smallest_eigenpair(&pencil)?;
    let threshold = params.q() - 1.0;
    let wr = ratio_on(&pencil, params, argmin_beta(params));

    let peak = x.iter().fold(0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
    let mut full = Vec::with_capacity(grid.count());
    full.push(0.0);
    full.extend(x.iter().map(|v| v / peak));
    full.push(0.0);
    let eigvec = DiscreteRadialFunction::new(*grid, full)?;
    let sign_changes = eigvec.sign_changes();

    Ok(StabilityReport {
        mu_min: mu,
        threshold,
        certified_breaking: mu < threshold - CERTIFICATION_MARGIN,
        eigvec,
        witness_ratio: wr,
        residual,
        sign_changes,
    })
}

/// Halves the grid step of `grid` until successive `mu_min` differ by at most
/// `tol`, or until the node count would exceed `max_count`.
pub fn converged_mu_min(
    params: &CknParams,
    grid: &LogGrid,
    tol: f64,
    max_count: usize,
) -> Result<(StabilityReport, LogGrid)> {
    let mut grid = *grid;
    let mut rep = mu_min(params, &grid)?;
    loop {
        let next = grid.refined();
        if next.count() > max_count {
            return Err(Error::Convergence(format!(
                "mu_min not converged to {tol:e} within {max_count} nodes (last value {})",
                rep.mu_min
            )));
        }
        let finer = mu_min(params, &next)?;
        let change = (finer.mu_min - rep.mu_min).abs();
        grid = next;
        rep = finer;
        if change <= tol {
            return Ok((rep, grid));
        }
    }
}

fn smallest_eigenpair(pencil: &Pencil) -> Result<(f64, Vec<f64>, f64)> {
    let n = pencil.dim();
    // Gershgorin bound on G^{-1/2} F G^{-1/2}
    let mut lo = f64::INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..n {
        let g = pencil.mass[i];
        let mut radius = 0.0;
        if i > 0 {
            radius += pencil.off[i - 1].abs() / (g * pencil.mass[i - 1]).sqrt();
        }
        if i + 1 < n {
            radius += pencil.off[i].abs() / (g * pencil.mass[i + 1]).sqrt();
        }
        let d = pencil.diag[i] / g;
        lo = lo.min(d - radius);
        hi = hi.min(d);
    }
    lo = lo.min(0.0);
    hi += 1e-12 * hi.abs();
    if pencil.count_below(hi) == 0 {
        return Err(Error::Convergence(format!("no eigenvalue below bound {hi}")));
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pencil.count_below(mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // lo <= mu_min, so F - shift G stays positive definite below lo
    let mut offset = 1e-9 * lo.abs().max(1.0);
    let mut x = vec![1.0; n];
    let mut best = (f64::NAN, x.clone(), f64::INFINITY);
    for _ in 0..50 {
        let gx: Vec<f64> = pencil.mass.iter().zip(&x).map(|(g, v)| g * v).collect();
        let y = loop {
            if let Some(y) = pencil.solve_shifted(lo - offset, &gx) {
                break y;
            }
            offset *= 100.0;
            if offset > lo.abs().max(1.0) {
                return Err(Error::Convergence("shifted pencil lost definiteness".into()));
            }
        };
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Convergence("inverse iteration produced a degenerate vector".into()));
        }
        x = y.into_iter().map(|v| v / norm).collect();
        let fx = pencil.apply_f(&x);
        let mu = fx.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / pencil.g_form(&x);
        let res = fx
            .iter()
            .zip(&x)
            .zip(&pencil.mass)
            .map(|((f, v), g)| (f - mu * g * v).powi(2))
            .sum::<f64>()
            .sqrt();
        let rel = res / fx.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rel < best.2 {
            best = (mu, x.clone(), rel);
        }
        if rel <= 1e-10 {
            return Ok((mu, x, rel));
        }
    }
    Err(Error::Convergence(format!(
        "inverse iteration stalled at relative residual {:e} (mu = {})",
        best.2, best.0
    )))
}

fn ratio_on(pencil: &Pencil, params: &CknParams, beta: f64) -> f64 {
    let ext = RadialExtremal::new(params);
    let x = pencil.interior(|s| ln_witness(&ext, beta, s).exp());
    pencil.f_form(&x) / pencil.g_form(&x)
}

/// `F/G` on samples of `r^{beta H} U^{q/p}`.
pub fn witness_ratio(params: &CknParams, beta: f64, grid: &LogGrid) -> Result<f64> {
    let dir = TestDirection::new(params, beta)?;
    let pencil = assemble_pencil(params, grid)?;
    Ok(ratio_on(&pencil, params, dir.beta()))
}

/// Samples of the extremal `U` on `grid`.
pub fn sample_extremal(params: &CknParams, grid: LogGrid) -> Result<DiscreteRadialFunction> {
    let ext = RadialExtremal::new(params);
    let values = grid.nodes().map(|s| ext.ln_u_at(s).exp()).collect();
    DiscreteRadialFunction::new(grid, values)
}

struct RayleighParts {
    num: f64,
    den: f64,
}

/// Weights `e^{pH s}` at interval midpoints and trapezoid weights `e^{qH s} h`.
fn rayleigh_weights(params: &CknParams, grid: &LogGrid) -> (Vec<f64>, Vec<f64>) {
    let h = grid.step();
    let (ph, qh) = (params.p() * params.h(), params.q() * params.h());
    let count = grid.count();
    let num_w = (0..count - 1)
        .map(|i| (ph * 0.5 * (grid.node(i) + grid.node(i + 1))).exp() * h)
        .collect();
    let den_w = (0..count)
        .map(|i| {
            let end = if i == 0 || i + 1 == count { 0.5 } else { 1.0 };
            (qh * grid.node(i)).exp() * h * end
        })
        .collect();
    (num_w, den_w)
}

fn rayleigh_parts(params: &CknParams, v: &[f64], h: f64, wts: &(Vec<f64>, Vec<f64>)) -> RayleighParts {
    let (p, q) = (params.p(), params.q());
    let num = v
        .windows(2)
        .zip(&wts.0)
        .map(|(pair, w)| w * ((pair[1] - pair[0]) / h).abs().powf(p))
        .sum();
    let den = v.iter().zip(&wts.1).map(|(x, w)| w * x.abs().powf(q)).sum();
    RayleighParts { num, den }
}

/// Discrete radial CKN quotient
/// `omega ∫ r^{n-1+a} |v'|^p dr / (omega ∫ r^{n-1-b_a} |v|^q dr)^{p/q}`.
pub fn radial_rayleigh(params: &CknParams, f: &DiscreteRadialFunction) -> f64 {
    let wts = rayleigh_weights(params, f.grid());
    let parts = rayleigh_parts(params, f.values(), f.grid().step(), &wts);
    quotient(params, &parts)
}

fn quotient(params: &CknParams, parts: &RayleighParts) -> f64 {
    let omega = params.derive().omega;
    let (p, q) = (params.p(), params.q());
    omega * parts.num / (omega * parts.den).powf(p / q)
}

/// Minimizes the discrete radial quotient by normalized gradient descent from
/// `initial`, keeping both end values fixed. Each step starts at length `0.1`
/// (relative to `|v|`) and halves until the quotient decreases; the iteration
/// stops when the relative decrease drops below `tol`, after `max_iters`
/// steps, or when no step above the floor decreases the quotient.
pub fn minimize_radial_rayleigh_from(
    params: &CknParams,
    initial: &DiscreteRadialFunction,
    max_iters: usize,
    tol: f64,
) -> Result<(f64, DiscreteRadialFunction)> {
    const STEP_FLOOR: f64 = 1e-14;
    let grid = *initial.grid();
    let h = grid.step();
    let (p, q) = (params.p(), params.q());
    let omega = params.derive().omega;
    let wts = rayleigh_weights(params, &grid);
    let mut v = initial.values().to_vec();
    let count = v.len();
    let mut parts = rayleigh_parts(params, &v, h, &wts);
    let mut value = quotient(params, &parts);
    if !value.is_finite() {
        return Err(Error::Convergence(format!("initial quotient is {value}")));
    }

    for _ in 0..max_iters {
        // gradient of omega*num / (omega*den)^{p/q}
        let scale_den = (omega * parts.den).powf(-p / q);
        let coef_den = (p / q) * value / parts.den;
        let mut grad = vec![0.0; count];
        for (j, pair) in v.windows(2).enumerate() {
            let d = (pair[1] - pair[0]) / h;
            if d == 0.0 {
                continue;
            }
            let flux = wts.0[j] * p * d.abs().powf(p - 2.0) * d / h;
            grad[j] -= omega * flux * scale_den;
            grad[j + 1] += omega * flux * scale_den;
        }
        for (i, g) in grad.iter_mut().enumerate() {
            let x = v[i];
            if x == 0.0 {
                continue;
            }
            *g -= coef_den * wts.1[i] * q * x.abs().powf(q - 2.0) * x;
        }
        grad[0] = 0.0;
        grad[count - 1] = 0.0;
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !gnorm.is_finite() {
            return Err(Error::Convergence("non-finite gradient".into()));
        }
        if gnorm == 0.0 {
            break;
        }
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();

        let mut step = 0.1;
        let mut accepted = None;
        while step >= STEP_FLOOR {
            let scale = step * vnorm / gnorm;
            let trial: Vec<f64> = v.iter().zip(&grad).map(|(x, g)| x - scale * g).collect();
            let tp = rayleigh_parts(params, &trial, h, &wts);
            let tv = quotient(params, &tp);
            if tv.is_finite() && tv < value {
                accepted = Some((trial, tp, tv));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, tp, tv)) = accepted else {
            break;
        };
        let decrease = (value - tv) / value;
        v = trial;
        parts = tp;
        value = tv;
        if decrease < tol {
            break;
        }
    }
    Ok((value, DiscreteRadialFunction::new(grid, v)?))
}

/// [`minimize_radial_rayleigh_from`] started at the sampled extremal.
pub fn minimize_radial_rayleigh(
    params: &CknParams,
    grid: &LogGrid,
    max_iters: usize,
    tol: f64,
) -> Result<(f64, DiscreteRadialFunction)> {
    let start = sample_extremal(params, *grid)?;
    minimize_radial_rayleigh_from(params, &start, max_iters, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::s_rad;
    use crate::second_variation::{a_star, quadrature_j};
    use crate::special::QuadratureSpec;

    fn prm(n: u32, p: f64, q: f64, a: f64) -> CknParams {
        CknParams::validate(n, p, q, a).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(LogGrid::new(0.0, 1.0, 15).is_err());
        assert!(LogGrid::new(1.0, 1.0, 100).is_err());
        assert!(LogGrid::new(0.0, f64::INFINITY, 100).is_err());
        let g = LogGrid::new(-1.0, 1.0, 17).unwrap();
        assert_eq!(g.step(), 0.125);
        assert_eq!(g.node(16), 1.0);
        let r = g.refined();
        assert_eq!(r.count(), 33);
        assert_eq!(r.node(2), g.node(1));
    }

    #[test]
    fn pencil_structure() {
        let pr = prm(3, 2.0, 4.0, 0.0);
        let grid = LogGrid::for_pencil(&pr, 256).unwrap();
        let pen = assemble_pencil(&pr, &grid).unwrap();
        assert_eq!(pen.dim(), 254);
        assert_eq!(pen.off.len(), 253);
        assert!(pen.mass.iter().all(|g| *g > 0.0));
        assert!(pen.off.iter().all(|o| *o < 0.0));
        // symmetric by construction: check x^T F y = y^T F x
        let x: Vec<f64> = (0..254).map(|i| (i as f64 * 0.1).sin()).collect();
        let y: Vec<f64> = (0..254).map(|i| (i as f64 * 0.37).cos()).collect();
        let xfy: f64 = pen.apply_f(&y).iter().zip(&x).map(|(a, b)| a * b).sum();
        let yfx: f64 = pen.apply_f(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((xfy - yfx).abs() <= 1e-12 * xfy.abs().max(1.0));
    }

    #[test]
    fn narrow_window_is_grid_error() {
        let pr = prm(3, 2.0, 3.0, 0.0);
        let grid = LogGrid::symmetric(12.0, 1024).unwrap();
        assert!(matches!(assemble_pencil(&pr, &grid), Err(Error::Grid(_))));
    }

    #[test]
    fn forms_on_witness_match_quadrature() {
        let pr = prm(3, 2.0, 4.0, 0.0);
        let grid = LogGrid::for_pencil(&pr, DEFAULT_PENCIL_NODES).unwrap();
        let pen = assemble_pencil(&pr, &grid).unwrap();
        let ext = RadialExtremal::new(&pr);
        let beta = argmin_beta(&pr);
        let x = pen.interior(|s| ln_witness(&ext, beta, s).exp());
        let qf = quadrature_j(&pr, beta, &QuadratureSpec::default()).unwrap();
        let omega = pr.derive().omega;
        let f_want = ((pr.p() - 1.0) * qf.g2 + 2.0 * qf.g0) / omega;
        let g_want = qf.gq / omega;
        assert!((pen.f_form(&x) - f_want).abs() <= 1e-4 * f_want, "{} vs {f_want}", pen.f_form(&x));
        assert!((pen.g_form(&x) - g_want).abs() <= 1e-4 * g_want);
    }

    #[test]
    fn sturm_count_brackets_eigenvalue() {
        let pr = prm(3, 2.0, 3.0, 2.0);
        let grid = LogGrid::for_pencil(&pr, 512).unwrap();
        let pen = assemble_pencil(&pr, &grid).unwrap();
        let rep = mu_min(&pr, &grid).unwrap();
        assert_eq!(pen.count_below(rep.mu_min * (1.0 - 1e-9)), 0);
        assert_eq!(pen.count_below(rep.mu_min * (1.0 + 1e-9)), 1);
        assert!(rep.residual <= 1e-10);
    }

    #[test]
    fn breaking_case_is_certified() {
        let pr = prm(3, 2.0, 3.0, 2.0);
        let grid = LogGrid::for_pencil(&pr, DEFAULT_PENCIL_NODES).unwrap();
        let rep = mu_min(&pr, &grid).unwrap();
        assert!(rep.certified_breaking, "{}", rep.mu_min);
        assert!(rep.mu_min <= rep.witness_ratio);
        assert_eq!(rep.sign_changes, 0);
    }

    #[test]
    fn radial_region_is_not_certified() {
        let pr = prm(3, 2.0, 3.0, 0.0);
        let grid = LogGrid::for_pencil(&pr, DEFAULT_PENCIL_NODES).unwrap();
        let rep = mu_min(&pr, &grid).unwrap();
        assert!(!rep.certified_breaking);
        assert!(rep.mu_min >= rep.threshold - 1e-3);
    }

    #[test]
    fn witness_ratio_at_threshold() {
        let at = a_star(3, 2.0, 3.0).unwrap();
        let pr = prm(3, 2.0, 3.0, at);
        let grid = LogGrid::for_pencil(&pr, 2048).unwrap();
        let wr = witness_ratio(&pr, argmin_beta(&pr), &grid).unwrap();
        assert!((wr - 2.0).abs() <= 1e-3, "{wr}");
        let off = witness_ratio(&pr, 0.5 * argmin_beta(&pr), &grid).unwrap();
        assert!(off > 2.0 + 1e-3, "{off}");
    }

    #[test]
    fn rayleigh_of_sampled_extremal() {
        let pr = prm(3, 2.0, 4.0, 0.0);
        let grid = LogGrid::symmetric(12.0, 2048).unwrap();
        let u = sample_extremal(&pr, grid).unwrap();
        let r = radial_rayleigh(&pr, &u);
        assert!((r - s_rad(&pr)).abs() <= 5e-3 * s_rad(&pr), "{r}");
    }

    #[test]
    fn descent_improves_on_perturbed_start() {
        let pr = prm(3, 2.0, 4.0, 0.0);
        let grid = LogGrid::for_energy(&pr, 512).unwrap();
        let ext = RadialExtremal::new(&pr);
        let start = DiscreteRadialFunction::sample(grid, |r| ext.u(r) * (1.0 + 0.3 * (r / (1.0 + r)))).unwrap();
        let r0 = radial_rayleigh(&pr, &start);
        let (value, _) = minimize_radial_rayleigh_from(&pr, &start, 200, 1e-12).unwrap();
        assert!(value < r0);
        assert!(value >= 0.98 * s_rad(&pr));
    }

    #[test]
    fn sign_change_counter() {
        let g = LogGrid::new(0.0, 1.0, 16).unwrap();
        let mut v = vec![1.0; 16];
        v[3] = 0.0;
        v[10] = -1.0;
        let f = DiscreteRadialFunction::new(g, v).unwrap();
        assert_eq!(f.sign_changes(), 2);
        assert!(DiscreteRadialFunction::new(g, vec![1.0; 3]).is_err());
    }
}
