//! Fixed-step fourth-order Runge–Kutta propagation of `i dψ/dt = H(t) ψ`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{CMatrix, CsrMatrix, C64};

/// A time-dependent Hamiltonian acting on complex amplitudes.
pub trait Hamiltonian: Sync {
    fn dim(&self) -> usize;

    /// `out = H(t) psi`
    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]);
}

pub type Coefficient = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// `H(t) = H_0 + Σ_k c_k(t) V_k` with real sparse terms.
pub struct TermHamiltonian {
    pub base: CsrMatrix,
    pub terms: Vec<(Coefficient, CsrMatrix)>,
}

impl TermHamiltonian {
    pub fn new(base: CsrMatrix) -> Self {
        TermHamiltonian { base, terms: Vec::new() }
    }

    pub fn with_term(mut self, coefficient: impl Fn(f64) -> f64 + Send + Sync + 'static, op: CsrMatrix) -> Self {
        assert_eq!(op.dim(), self.base.dim(), "term dimension");
        self.terms.push((Box::new(coefficient), op));
        self
    }

    /// Crude bound on `‖H(t)‖` from row sums, with coefficients sampled at `t`.
    pub fn norm_bound(&self, t: f64) -> f64 {
        self.base.row_sum_bound() + self.terms.iter().map(|(c, op)| c(t).abs() * op.row_sum_bound()).sum::<f64>()
    }

    /// Dense real matrix at time `t`.
    pub fn dense_at(&self, t: f64) -> crate::linalg::RMatrix {
        let mut m = self.base.to_dense();
        for (c, op) in &self.terms {
            m += op.to_dense() * c(t);
        }
        m
    }
}

impl Hamiltonian for TermHamiltonian {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        self.base.mul_add(1.0, psi, out);
        for (c, op) in &self.terms {
            let k = c(t);
            if k != 0.0 {
                op.mul_add(k, psi, out);
            }
        }
    }
}

/// Dense complex Hamiltonian given as a function of time; meant for the
/// few-level effective models.
pub struct DenseHamiltonian<F: Fn(f64) -> CMatrix + Sync> {
    dim: usize,
    matrix: F,
}

impl<F: Fn(f64) -> CMatrix + Sync> DenseHamiltonian<F> {
    pub fn new(dim: usize, matrix: F) -> Self {
        DenseHamiltonian { dim, matrix }
    }

    pub fn at(&self, t: f64) -> CMatrix {
        (self.matrix)(t)
    }
}

impl<F: Fn(f64) -> CMatrix + Sync> Hamiltonian for DenseHamiltonian<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        let h = (self.matrix)(t);
        for i in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.dim {
                acc += h[(i, j)] * psi[j];
            }
            out[i] = acc;
        }
    }
}

/// Samples on an ascending time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    pub times: Vec<f64>,
    pub values: Vec<T>,
}

impl<T> TimeSeries<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn map<U>(&self, f: impl Fn(f64, &T) -> U) -> TimeSeries<U> {
        TimeSeries { times: self.times.clone(), values: self.times.iter().zip(&self.values).map(|(&t, v)| f(t, v)).collect() }
    }

    pub fn last(&self) -> Option<&T> {
        self.values.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    /// Largest internal step; the output spacing is subdivided to respect it.
    pub max_step: f64,
    pub norm_tolerance: f64,
    pub max_halvings: u32,
}

impl StepOptions {
    pub fn with_max_step(max_step: f64) -> Self {
        StepOptions { max_step, norm_tolerance: 1e-6, max_halvings: 6 }
    }

    /// Step `(2π/ω_max)/50` for a spectrum whose largest transition
    /// frequency is `omega_max`.
    pub fn for_max_frequency(omega_max: f64) -> Self {
        Self::with_max_step(2.0 * std::f64::consts::PI / omega_max.max(1e-12) / 50.0)
    }
}

/// Checks the grid is strictly increasing and uniform to 1e-9 relative.
pub fn check_uniform_grid(t_grid: &[f64]) -> Result<f64> {
    if t_grid.is_empty() {
        return Err(Error::invalid("t_grid", "must not be empty"));
    }
    for &t in t_grid {
        ensure_finite("t_grid", t)?;
    }
    if t_grid.len() == 1 {
        return Ok(0.0);
    }
    let dt = (t_grid[t_grid.len() - 1] - t_grid[0]) / (t_grid.len() - 1) as f64;
    if dt <= 0.0 {
        return Err(Error::invalid("t_grid", "must be strictly increasing"));
    }
    for (k, &t) in t_grid.iter().enumerate() {
        let expect = t_grid[0] + dt * k as f64;
        if (t - expect).abs() > 1e-9 * dt.max(t.abs()) {
            return Err(Error::invalid("t_grid", format!("not uniform at index {k}")));
        }
    }
    Ok(dt)
}

pub fn uniform_grid(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    crate::qrm::linear_grid(t0, t1, points)
}

struct Rk4Workspace {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4Workspace {
    fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Rk4Workspace { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }
}

fn rk4_step(ham: &dyn Hamiltonian, t: f64, h: f64, psi: &mut [C64], w: &mut Rk4Workspace) {
    let minus_i = C64::new(0.0, -1.0);
    let n = psi.len();
    ham.apply(t, psi, &mut w.k1);
    for i in 0..n {
        w.tmp[i] = psi[i] + minus_i * w.k1[i] * (0.5 * h);
    }
    ham.apply(t + 0.5 * h, &w.tmp, &mut w.k2);
    for i in 0..n {
        w.tmp[i] = psi[i] + minus_i * w.k2[i] * (0.5 * h);
    }
    ham.apply(t + 0.5 * h, &w.tmp, &mut w.k3);
    for i in 0..n {
        w.tmp[i] = psi[i] + minus_i * w.k3[i] * h;
    }
    ham.apply(t + h, &w.tmp, &mut w.k4);
    for i in 0..n {
        psi[i] += minus_i * (h / 6.0) * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
    }
}

fn norm(psi: &[C64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Propagates `psi0` over `t_grid` and records `observe(t, ψ(t))` at each
/// grid point (including the first).
///
/// The run is repeated with the step halved whenever the norm drifts by
/// more than `opts.norm_tolerance`, at most `opts.max_halvings` times.
pub fn propagate_observe<T>(
    ham: &dyn Hamiltonian,
    psi0: &[C64],
    t_grid: &[f64],
    opts: StepOptions,
    observe: impl Fn(f64, &[C64]) -> T,
) -> Result<TimeSeries<T>> {
    let dim = ham.dim();
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: psi0.len() });
    }
    let n0 = norm(psi0);
    if (n0 - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("psi0", format!("must be normalized, |psi0| = {n0}")));
    }
    if !(opts.max_step > 0.0) {
        return Err(Error::invalid("max_step", "must be > 0"));
    }
    let dt = check_uniform_grid(t_grid)?;
    let mut substeps = if dt > 0.0 { (dt / opts.max_step).ceil().max(1.0) as usize } else { 1 };
    let mut halvings = 0;
    loop {
        let mut psi = psi0.to_vec();
        let mut w = Rk4Workspace::new(dim);
        let mut values = Vec::with_capacity(t_grid.len());
        let mut drift = 0.0_f64;
        let mut failed = false;
        values.push(observe(t_grid[0], &psi));
        let h = dt / substeps as f64;
        for (k, &t_start) in t_grid.iter().enumerate().take(t_grid.len().saturating_sub(1)) {
            let _ = k;
            for s in 0..substeps {
                rk4_step(ham, t_start + h * s as f64, h, &mut psi, &mut w);
            }
            let d = (norm(&psi) - 1.0).abs();
            if !d.is_finite() || d > opts.norm_tolerance {
                drift = if d.is_finite() { d } else { f64::INFINITY };
                failed = true;
                break;
            }
            drift = drift.max(d);
            values.push(observe(t_start + dt, &psi));
        }
        if !failed {
            return Ok(TimeSeries { times: t_grid.to_vec(), values });
        }
        if halvings >= opts.max_halvings {
            return Err(Error::NormDrift { drift, halvings, step: h });
        }
        halvings += 1;
        substeps *= 2;
    }
}

pub fn propagate_schrodinger(
    ham: &dyn Hamiltonian,
    psi0: &[C64],
    t_grid: &[f64],
    opts: StepOptions,
) -> Result<TimeSeries<DVector<C64>>> {
    propagate_observe(ham, psi0, t_grid, opts, |_, psi| DVector::from_column_slice(psi))
}

/// Full propagator `U(t_1, t_0)` by evolving each basis vector.
pub fn propagator(ham: &dyn Hamiltonian, t0: f64, t1: f64, opts: StepOptions) -> Result<CMatrix> {
    let dim = ham.dim();
    let grid = [t0, t1];
    let mut u = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut e = vec![C64::new(0.0, 0.0); dim];
        e[j] = C64::new(1.0, 0.0);
        let traj = propagate_schrodinger(ham, &e, &grid, opts)?;
        u.set_column(j, traj.last().expect("two grid points"));
    }
    Ok(u)
}

/// First sample that reaches `threshold` and is not exceeded by the next
/// one, refined by a parabola through its neighbours.
pub fn first_local_maximum(times: &[f64], values: &[f64], threshold: f64) -> Option<(f64, f64)> {
    let n = times.len().min(values.len());
    for k in 1..n.saturating_sub(1) {
        let (a, b, c) = (values[k - 1], values[k], values[k + 1]);
        if b >= threshold && b >= a && b > c {
            let denom = a - 2.0 * b + c;
            let h = times[k + 1] - times[k];
            let shift = if denom < 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            return Some((times[k] + shift * h, b - 0.25 * (a - c) * shift));
        }
    }
    None
}
