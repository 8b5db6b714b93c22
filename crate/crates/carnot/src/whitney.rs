//! First-order Whitney data on compact time sets: the compatibility modulus,
//! a non-extendability counterexample generator, a constructive step-2
//! extension, and a Lusin-type approximation demo.

use serde::{Deserialize, Serialize};

use crate::curve::{ControlPath, HorizontalCurve, Piece};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::presets::PresetGroup;
use crate::scalar::Scalar;

/// Point of an integration trace nearest to time `t`.
fn trace_point(trace: &[(f64, Vec<f64>)], t: f64) -> &Vec<f64> {
    let idx = trace.partition_point(|(s, _)| *s < t);
    if idx == 0 {
        return &trace[0].1;
    }
    if idx >= trace.len() {
        return &trace[trace.len() - 1].1;
    }
    if (trace[idx].0 - t).abs() < (t - trace[idx - 1].0).abs() {
        &trace[idx].1
    } else {
        &trace[idx - 1].1
    }
}

/// Point/velocity data over a finite set of times: candidate restriction of a
/// C¹_H curve, with `x` the horizontal velocity at each node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhitneyData {
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    pub f: Vec<Vec<f64>>,
    #[serde(rename = "X")]
    pub x: Vec<Vec<f64>>,
}

impl WhitneyData {
    pub fn new(k: Vec<f64>, f: Vec<Vec<f64>>, x: Vec<Vec<f64>>) -> Result<Self> {
        if k.is_empty() || k.len() != f.len() || k.len() != x.len() {
            return Err(Error::InvalidArgument(
                "node, point and velocity lists must share a positive length".into(),
            ));
        }
        if k.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "node times must be strictly increasing".into(),
            ));
        }
        Ok(WhitneyData { k, f, x })
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: WhitneyData = serde_json::from_str(text)?;
        WhitneyData::new(data.k, data.f, data.x)
    }

    /// Sample nodes, points and velocities from an integrated curve.
    pub fn sample_curve(g: &Group, curve: &HorizontalCurve, nodes: &[f64], h: f64) -> Result<Self> {
        let (_, trace) = curve.integrate_magnus4(g, h)?;
        let mut f = Vec::with_capacity(nodes.len());
        let mut x = Vec::with_capacity(nodes.len());
        for &t in nodes {
            f.push(trace_point(&trace, t).clone());
            x.push(curve.control.eval(t));
        }
        WhitneyData::new(nodes.to_vec(), f, x)
    }
}

/// `sup` over pairs `0 < |t - τ| < η` of
/// `gauge_distance(f(t), f(τ)·exp((t−τ)X(τ))) / |t−τ|`.
pub fn whitney_modulus(g: &Group, data: &WhitneyData, eta: f64) -> f64 {
    let n = data.len();
    let dim = g.dim();
    let mut sup = 0.0f64;
    let mut step = vec![0.0; dim];
    for tau in 0..n {
        for t in 0..n {
            if t == tau {
                continue;
            }
            let dt = data.k[t] - data.k[tau];
            if dt.abs() >= eta {
                continue;
            }
            step.fill(0.0);
            for (s, &xi) in step.iter_mut().zip(&data.x[tau]) {
                *s = dt * xi;
            }
            let predicted = g.mul_f64(&data.f[tau], &step);
            let d = g.gauge_distance(&data.f[t], &predicted);
            sup = sup.max(d / dt.abs());
        }
    }
    sup
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusReport {
    pub etas: Vec<f64>,
    pub values: Vec<f64>,
    /// Least-squares slope of log(value) against log(η): positive means the
    /// modulus decays as η shrinks.
    pub decay_exponent: f64,
    pub nonincreasing: bool,
    pub pass: bool,
}

/// Evaluate the modulus on a decreasing η-grid and fit the decay.
pub fn modulus_report(g: &Group, data: &WhitneyData, etas: &[f64]) -> ModulusReport {
    let values: Vec<f64> = etas.iter().map(|&e| whitney_modulus(g, data, e)).collect();
    let nonincreasing = values.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let pts: Vec<(f64, f64)> = etas
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&e, &v)| (e.ln(), v.ln()))
        .collect();
    let decay_exponent = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    } else {
        f64::INFINITY
    };
    let pass = nonincreasing && decay_exponent > 0.0;
    ModulusReport {
        etas: etas.to_vec(),
        values,
        decay_exponent,
        nonincreasing,
        pass,
    }
}

// ---------------------------------------------------------------------------
// Counterexample construction.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    pub data: WhitneyData,
    /// Direction of the hops (unit vector, unreachable side of the registered
    /// obstruction).
    pub direction: Vec<f64>,
    /// Dilation scale of each hop before the gap-length dilation.
    pub sigmas: Vec<f64>,
    /// Gauge of each applied hop `x̃_n`.
    pub hop_gauges: Vec<f64>,
    /// Per-hop closeness thresholds; each is at most `2^{-n}`.
    pub thresholds: Vec<f64>,
    /// Distance bound from the last constructed point to the infinite product.
    pub tail_bound: f64,
}

fn obstruction_direction(pg: &PresetGroup, v: &[f64]) -> Result<Vec<f64>> {
    let a = &pg.algebra;
    let n = a.dim();
    let m = a.horizontal_dim();
    for ob in &pg.obstructions {
        let lambda = v[ob.anchor];
        let on_axis = lambda != 0.0
            && (0..m).all(|i| i == ob.anchor || v[i] == 0.0)
            && v[m..].iter().all(|&c| c == 0.0);
        if !on_axis {
            continue;
        }
        let sign = lambda.signum();
        let h = 1e-6;
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let mut p = v.to_vec();
            let mut q = v.to_vec();
            p[i] += h;
            q[i] -= h;
            grad[i] = sign * ((ob.eval)(&p) - (ob.eval)(&q)) / (2.0 * h);
        }
        let norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        // The obstruction keeps sign·h ≥ 0 over perturbation clouds, so the
        // unreachable side lies against the gradient.
        return Ok(grad.iter().map(|x| -x / norm).collect());
    }
    Err(Error::NoObstructionDirection)
}

/// Largest `σ` (by bisection) such that the dilated hop `δ_σ(dir)` stays
/// within `bound` of the straight curve uniformly over the scale and time
/// grids: `gauge_distance(exp(tV), δ_ρ(δ_σ(dir))·exp(tV)) ≤ bound`.
fn hop_scale(g: &Group, dir: &[f64], v_full: &[f64], bound: f64) -> f64 {
    let deviation = |sigma: f64| -> f64 {
        let hop = g.dilate_f64(sigma, dir);
        let mut worst = 0.0f64;
        for rho_pow in 0..=10 {
            let rho = 0.5f64.powi(rho_pow);
            let scaled = g.dilate_f64(rho, &hop);
            for ti in 0..=32 {
                let t = ti as f64 / 32.0;
                let line: Vec<f64> = v_full.iter().map(|&c| t * c).collect();
                let moved = g.mul_f64(&scaled, &line);
                worst = worst.max(g.gauge_distance(&line, &moved));
            }
        }
        worst
    };
    let mut hi = 1.0f64;
    while deviation(hi) < bound && hi < 1e9 {
        hi *= 2.0;
    }
    let mut lo = 0.0f64;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if deviation(mid) <= bound {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Build Whitney data along `t ↦ exp(tV)` on `K = {1 − 1/n} ∪ {1}` whose
/// perturbation hops shrink fast enough for the modulus to decay while no
/// C¹_H curve can interpolate them: each hop moves into the unreachable side
/// of the preset's obstruction.
pub fn build_counterexample(
    pg: &PresetGroup,
    v: &[f64],
    n_max: usize,
) -> Result<CounterexampleReport> {
    let a = &pg.algebra;
    let n_dim = a.dim();
    if v.len() != n_dim {
        return Err(Error::DimensionMismatch {
            expected: n_dim,
            got: v.len(),
        });
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let direction = obstruction_direction(pg, v)?;
    let g = Group::new(a.clone());
    let m = a.horizontal_dim();

    let mut k = Vec::with_capacity(n_max + 1);
    let mut f = Vec::with_capacity(n_max + 1);
    let mut sigmas = Vec::new();
    let mut hop_gauges = Vec::new();
    let mut thresholds = Vec::new();
    let mut y = vec![0.0; n_dim];
    k.push(0.0);
    f.push(y.clone());
    for n in 1..=n_max {
        let rho = 1.0 / (n as f64 * (n + 1) as f64);
        // Tighter than the 2^{-n} requirement the telescoping bound needs;
        // the faster decay keeps the measured modulus from plateauing.
        let c_n = 0.7 * 0.25f64.powi(n as i32);
        thresholds.push(c_n);
        let sigma = hop_scale(&g, &direction, v, c_n);
        sigmas.push(sigma);
        let hop = g.dilate_f64(rho, &g.dilate_f64(sigma, &direction));
        hop_gauges.push(g.gauge(&hop));
        let line: Vec<f64> = v.iter().map(|&c| rho * c).collect();
        y = g.mul_f64(&g.mul_f64(&y, &line), &hop);
        if n < n_max {
            k.push(1.0 - 1.0 / (n + 1) as f64);
            f.push(y.clone());
        }
    }
    // Run straight from 1 - 1/(n_max+1) to 1; the dropped later hops are
    // covered by the reported tail bound.
    let final_leg: Vec<f64> = v.iter().map(|&c| c / (n_max + 1) as f64).collect();
    y = g.mul_f64(&y, &final_leg);
    k.push(1.0);
    f.push(y);
    let x = vec![v[..m].to_vec(); k.len()];
    let tail_bound = 0.7 * 0.25f64.powi(n_max as i32 + 1) * 4.0 / 3.0;
    Ok(CounterexampleReport {
        data: WhitneyData::new(k, f, x)?,
        direction,
        sigmas,
        hop_gauges,
        thresholds,
        tail_bound,
    })
}

/// Verify `D(i,j) ≤ Σ_{k=i}^{j−1} 2^{−k}` for all node pairs, where `D` is
/// the gauge deviation of the data from the straight curve between nodes.
/// Returns the worst slack (positive slack = bound satisfied).
pub fn telescoping_check(g: &Group, data: &WhitneyData, v: &[f64]) -> (bool, f64) {
    let n = data.len();
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for i in 0..n {
        for j in i + 1..n {
            let dt = data.k[j] - data.k[i];
            let line: Vec<f64> = v.iter().map(|&c| dt * c).collect();
            let predicted = g.mul_f64(&data.f[i], &line);
            let d = g.gauge_distance(&data.f[j], &predicted);
            let bound: f64 = (i + 1..j + 1).map(|kk| 0.5f64.powi(kk as i32)).sum();
            let slack = bound - d;
            worst = worst.min(slack);
            if slack < -1e-9 {
                ok = false;
            }
        }
    }
    (ok, worst)
}

// ---------------------------------------------------------------------------
// Step-2 extension.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ExtensionOptions {
    pub tol: f64,
    pub max_newton: usize,
    /// Solve only the layer-1/2 endpoint equations even on deeper groups
    /// (diagnostic mode; the full gauge residual is still reported).
    pub force_truncated: bool,
    /// Integration steps per gap for the verification pass.
    pub verify_steps: usize,
}

impl Default for ExtensionOptions {
    fn default() -> Self {
        ExtensionOptions {
            tol: 1e-9,
            max_newton: 40,
            force_truncated: false,
            verify_steps: 4000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub a: f64,
    pub b: f64,
    pub converged: bool,
    pub newton_iterations: usize,
    /// Residual of the solved coordinate equations (log chart, unit gap).
    pub equation_residual: f64,
    /// Gauge distance of the integrated gap curve from the target point.
    pub endpoint_gauge: f64,
    /// Sup-deviation of the gap control from the left velocity.
    pub sup_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct ExtensionResult {
    pub control: ControlPath,
    pub start: Vec<f64>,
    pub gaps: Vec<GapReport>,
    /// Gauge distance between the integrated extension and `f` at each node.
    pub node_residuals: Vec<f64>,
    /// Largest symmetric finite-difference control mismatch at interior nodes.
    pub boundary_velocity_mismatch: f64,
    pub max_node_residual: f64,
    pub all_converged: bool,
}

fn pmul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn pint(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + 1];
    for (k, &c) in a.iter().enumerate() {
        out[k + 1] = c / (k + 1) as f64;
    }
    out
}

fn peval(a: &[f64], t: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn pdef_integral(a: &[f64]) -> f64 {
    a.iter()
        .enumerate()
        .map(|(k, &c)| c / (k + 1) as f64)
        .sum()
}

/// One unit-gap problem: find a control on [0,1] with prescribed boundary
/// values steering the identity to `y`, using derivative-flat Hermite data
/// plus bump corrections solved by least-norm Newton on the layer-1/2
/// endpoint equations.
struct GapProblem<'g> {
    g: &'g Group,
    m: usize,
    bumps_per_comp: usize,
    hermite: Vec<Vec<f64>>,
    /// (i, j, layer2-index, coefficient) over horizontal pairs.
    quad_terms: Vec<(usize, usize, usize, f64)>,
    eq_indices: Vec<usize>,
}

impl<'g> GapProblem<'g> {
    fn new(g: &'g Group, x_a: &[f64], x_b: &[f64]) -> Self {
        let a = g.algebra();
        let m = a.horizontal_dim();
        let n = a.dim();
        // value-only Hermite basis: h00 + h01 = 1, flat at both ends
        let h00 = [1.0, 0.0, -3.0, 2.0];
        let h01 = [0.0, 0.0, 3.0, -2.0];
        let hermite: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..4)
                    .map(|k| x_a[i] * h00[k] + x_b[i] * h01[k])
                    .collect()
            })
            .collect();
        let bumps_per_comp = (2 * n).div_ceil(m).clamp(1, 4);
        let mut quad_terms = Vec::new();
        let mut eq_indices: Vec<usize> = (0..m).collect();
        if a.step() >= 2 {
            for i in 0..m {
                for j in i + 1..m {
                    for (k, c) in a.bracket_basis(i, j) {
                        if a.layer_of(k) == 2 {
                            quad_terms.push((i, j, k, c.to_f64()));
                        }
                    }
                }
            }
            eq_indices.extend(a.layer_range(2));
        }
        GapProblem {
            g,
            m,
            bumps_per_comp,
            hermite,
            quad_terms,
            eq_indices,
        }
    }

    fn unknowns(&self) -> usize {
        self.m * self.bumps_per_comp
    }

    /// Control polynomials for a coefficient vector.
    fn controls(&self, c: &[f64]) -> Vec<Vec<f64>> {
        // bump_k(τ) = τ²(1−τ)²·τ^k
        let base = [0.0, 0.0, 1.0, -2.0, 1.0];
        (0..self.m)
            .map(|i| {
                let mut w = self.hermite[i].clone();
                w.resize(4 + self.bumps_per_comp, 0.0);
                for k in 0..self.bumps_per_comp {
                    let coeff = c[i * self.bumps_per_comp + k];
                    for (d, &b) in base.iter().enumerate() {
                        w[d + k] += coeff * b;
                    }
                }
                w
            })
            .collect()
    }

    /// Layer-1 and layer-2 endpoint coordinates of the unit-time flow.
    fn endpoint_coords(&self, c: &[f64]) -> Vec<f64> {
        let n = self.g.dim();
        let w = self.controls(c);
        let u: Vec<Vec<f64>> = w.iter().map(|wi| pint(wi)).collect();
        let mut out = vec![0.0; n];
        for i in 0..self.m {
            out[i] = peval(&u[i], 1.0);
        }
        for &(i, j, k, coeff) in &self.quad_terms {
            let mut cross = pmul(&u[i], &w[j]);
            let neg = pmul(&u[j], &w[i]);
            cross.resize(cross.len().max(neg.len()), 0.0);
            for (a, b) in cross.iter_mut().zip(&neg) {
                *a -= b;
            }
            out[k] += 0.5 * coeff * pdef_integral(&cross);
        }
        out
    }

    fn residual(&self, c: &[f64], y: &[f64]) -> Vec<f64> {
        let e = self.endpoint_coords(c);
        self.eq_indices.iter().map(|&i| e[i] - y[i]).collect()
    }

    fn solve(&self, y: &[f64], tol: f64, max_newton: usize) -> (Vec<f64>, usize, bool) {
        let nu = self.unknowns();
        let ne = self.eq_indices.len();
        let mut c = vec![0.0; nu];
        for it in 0..max_newton {
            let r = self.residual(&c, y);
            let rn = r.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if rn <= tol {
                return (c, it, true);
            }
            let delta = 1e-6;
            let mut jac = nalgebra::DMatrix::<f64>::zeros(ne, nu);
            for j in 0..nu {
                let mut cp = c.clone();
                let mut cm = c.clone();
                cp[j] += delta;
                cm[j] -= delta;
                let rp = self.residual(&cp, y);
                let rm = self.residual(&cm, y);
                for i in 0..ne {
                    jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * delta);
                }
            }
            let rv = nalgebra::DVector::from_vec(r);
            let svd = jac.svd(true, true);
            match svd.solve(&rv, 1e-12) {
                Ok(step) => {
                    for (ci, si) in c.iter_mut().zip(step.iter()) {
                        *ci -= si;
                    }
                }
                Err(_) => break,
            }
        }
        let r = self.residual(&c, y);
        let rn = r.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        (c, max_newton, rn <= tol)
    }
}

/// Solve one gap `[a,b]` with boundary data, returning the control piece in
/// global time plus its report.
fn solve_gap(
    g: &Group,
    a: f64,
    b: f64,
    f_a: &[f64],
    f_b: &[f64],
    x_a: &[f64],
    x_b: &[f64],
    opts: &ExtensionOptions,
) -> Result<(Piece, GapReport)> {
    let len = b - a;
    let y = g.dilate_f64(1.0 / len, &g.left_difference_f64(f_a, f_b));
    let problem = GapProblem::new(g, x_a, x_b);
    let (c, iters, converged) = problem.solve(&y, opts.tol, opts.max_newton);
    let w = problem.controls(&c);
    let r = problem.residual(&c, &y);
    let equation_residual = r.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));

    // Back to global time: u(t) = w((t−a)/len) has coefficients c_k/len^k.
    let coeffs: Vec<Vec<f64>> = w
        .iter()
        .map(|wi| {
            wi.iter()
                .enumerate()
                .map(|(k, &ck)| ck / len.powi(k as i32))
                .collect()
        })
        .collect();
    let piece = Piece {
        t0: a,
        t1: b,
        coeffs,
    };

    // Verification on the ambient (possibly deeper) group.
    let control = ControlPath::new(vec![piece.clone()])?;
    let curve = HorizontalCurve::new(f_a.to_vec(), control.clone());
    let h = len / opts.verify_steps as f64;
    let (end, _) = curve.integrate_magnus4(g, h)?;
    let endpoint_gauge = g.gauge_distance(&end, f_b);
    let mut sup_deviation = 0.0f64;
    for s in 0..=64 {
        let t = a + len * s as f64 / 64.0;
        let u = control.eval(t);
        let dev = u
            .iter()
            .zip(x_a)
            .map(|(ui, xi)| (ui - xi).abs())
            .fold(0.0f64, f64::max);
        sup_deviation = sup_deviation.max(dev);
    }
    Ok((
        piece,
        GapReport {
            a,
            b,
            converged,
            newton_iterations: iters,
            equation_residual,
            endpoint_gauge,
            sup_deviation,
        },
    ))
}

/// Extend Whitney data to a C¹ control on `[min K, max K]` whose curve passes
/// through every `f(tᵢ)` with velocity `X(tᵢ)`.  Exact for algebras of step
/// at most 2, where the endpoint equations close at quadratic order.
pub fn extend_step2(
    g: &Group,
    data: &WhitneyData,
    opts: &ExtensionOptions,
) -> Result<ExtensionResult> {
    let a = g.algebra();
    if a.step() > 2 && !opts.force_truncated {
        return Err(Error::StepTooLarge {
            what: "constructive extension",
            step: a.step(),
            max_step: 2,
        });
    }
    if data.len() < 2 {
        return Err(Error::InvalidArgument(
            "extension needs at least two nodes".into(),
        ));
    }
    let m = a.horizontal_dim();
    for x in &data.x {
        if x.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: x.len(),
            });
        }
    }
    let mut pieces = Vec::new();
    let mut gaps = Vec::new();
    for i in 0..data.len() - 1 {
        let (piece, report) = solve_gap(
            g,
            data.k[i],
            data.k[i + 1],
            &data.f[i],
            &data.f[i + 1],
            &data.x[i],
            &data.x[i + 1],
            opts,
        )?;
        pieces.push(piece);
        gaps.push(report);
    }
    let control = ControlPath::new(pieces)?;
    assemble_result(g, data, control, gaps, opts)
}

fn assemble_result(
    g: &Group,
    data: &WhitneyData,
    control: ControlPath,
    gaps: Vec<GapReport>,
    opts: &ExtensionOptions,
) -> Result<ExtensionResult> {
    let start = data.f[0].clone();
    let curve = HorizontalCurve::new(start.clone(), control.clone());
    let (t0, t1) = control.domain();
    let h = (t1 - t0) / (opts.verify_steps * gaps.len().max(1)) as f64;
    let (_, trace) = curve.integrate_magnus4(g, h)?;
    let mut node_residuals = Vec::with_capacity(data.len());
    for (i, &t) in data.k.iter().enumerate() {
        node_residuals.push(g.gauge_distance(trace_point(&trace, t), &data.f[i]));
    }
    let mut boundary_velocity_mismatch = 0.0f64;
    let delta = 1e-8;
    for &t in &data.k[1..data.len() - 1] {
        let up = control.eval(t + delta);
        let um = control.eval(t - delta);
        let jump = up
            .iter()
            .zip(&um)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        boundary_velocity_mismatch = boundary_velocity_mismatch.max(jump);
    }
    let max_node_residual = node_residuals.iter().cloned().fold(0.0, f64::max);
    let all_converged = gaps.iter().all(|r| r.converged);
    Ok(ExtensionResult {
        control,
        start,
        gaps,
        node_residuals,
        boundary_velocity_mismatch,
        max_node_residual,
        all_converged,
    })
}

// ---------------------------------------------------------------------------
// Lusin-type approximation.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LusinResult {
    /// Closed intervals whose union is the kept set K.
    pub intervals: Vec<(f64, f64)>,
    pub jump_times: Vec<f64>,
    pub complement_measure: f64,
    pub control: ControlPath,
    pub start: Vec<f64>,
    pub gaps: Vec<GapReport>,
    /// Worst gauge deviation from the input curve over sample points of K.
    pub agreement_residual: f64,
}

/// Replace a piecewise-C¹ horizontal curve by a C¹_H curve agreeing with it
/// off small windows around its velocity jumps: K drops an `ε/(2J)` ball
/// around each of the `J` jumps, the curve is kept on K and regapped by the
/// step-2 solver in between.
pub fn lusin_demo(
    g: &Group,
    start: &[f64],
    input: &ControlPath,
    epsilon: f64,
    opts: &ExtensionOptions,
) -> Result<LusinResult> {
    if g.algebra().step() > 2 && !opts.force_truncated {
        return Err(Error::StepTooLarge {
            what: "Lusin approximation",
            step: g.algebra().step(),
            max_step: 2,
        });
    }
    if input.m() != g.algebra().horizontal_dim() {
        return Err(Error::AlgebraMismatch);
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let (t0, t1) = input.domain();
    // Velocity jump times: piece boundaries with a control value jump.
    let mut jump_times = Vec::new();
    let pieces = input.pieces();
    for w in pieces.windows(2) {
        let left = w[0].eval(w[0].len());
        let right = w[1].eval(0.0);
        let jump = left
            .iter()
            .zip(&right)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if jump > 1e-9 {
            jump_times.push(w[0].t1);
        }
    }
    let j = jump_times.len();
    if j == 0 {
        return Ok(LusinResult {
            intervals: vec![(t0, t1)],
            jump_times,
            complement_measure: 0.0,
            control: input.clone(),
            start: start.to_vec(),
            gaps: Vec::new(),
            agreement_residual: 0.0,
        });
    }
    let radius = epsilon / (2.0 * j as f64);
    let mut intervals = Vec::new();
    let mut cursor = t0;
    for &jt in &jump_times {
        let lo = (jt - radius).max(t0);
        if lo > cursor + 1e-12 {
            intervals.push((cursor, lo));
        }
        cursor = (jt + radius).min(t1);
    }
    if cursor < t1 - 1e-12 {
        intervals.push((cursor, t1));
    }
    if intervals.is_empty() {
        return Err(Error::InvalidArgument(
            "epsilon removes the whole domain".into(),
        ));
    }
    let complement_measure =
        (t1 - t0) - intervals.iter().map(|(a, b)| b - a).sum::<f64>();

    // Integrate the input once to read off boundary data.
    let h = (t1 - t0) / 200_000.0;
    let curve = HorizontalCurve::new(start.to_vec(), input.clone());
    let (_, trace) = curve.integrate_magnus4(g, h)?;
    let point_at = |t: f64| -> Vec<f64> { trace_point(&trace, t).clone() };

    // Keep the input on K; bridge the removed windows with gap solutions.
    let mut out_pieces: Vec<Piece> = Vec::new();
    let mut gaps = Vec::new();
    let clip = |a: f64, b: f64, out: &mut Vec<Piece>| {
        for p in input.pieces() {
            let lo = p.t0.max(a);
            let hi = p.t1.min(b);
            if hi - lo < 1e-12 {
                continue;
            }
            // Re-anchor the polynomial at local offset lo − p.t0.
            let shift = lo - p.t0;
            let coeffs: Vec<Vec<f64>> = p
                .coeffs
                .iter()
                .map(|c| shift_poly(c, shift))
                .collect();
            out.push(Piece {
                t0: lo,
                t1: hi,
                coeffs,
            });
        }
    };
    for (idx, &(a, b)) in intervals.iter().enumerate() {
        if idx > 0 {
            let prev_end = intervals[idx - 1].1;
            let (piece, report) = solve_gap(
                g,
                prev_end,
                a,
                &point_at(prev_end),
                &point_at(a),
                &input.eval(prev_end),
                &input.eval(a),
                opts,
            )?;
            out_pieces.push(piece);
            gaps.push(report);
        }
        clip(a, b, &mut out_pieces);
    }
    let control = ControlPath::new(out_pieces)?;

    // Agreement on K.
    let out_curve = HorizontalCurve::new(start.to_vec(), control.clone());
    let (_, out_trace) = out_curve.integrate_magnus4(g, h)?;
    let out_point_at = |t: f64| -> Vec<f64> { trace_point(&out_trace, t).clone() };
    let mut agreement = 0.0f64;
    for &(a, b) in &intervals {
        for s in 0..=20 {
            let t = a + (b - a) * s as f64 / 20.0;
            agreement = agreement.max(g.gauge_distance(&point_at(t), &out_point_at(t)));
        }
    }
    Ok(LusinResult {
        intervals,
        jump_times,
        complement_measure,
        control,
        start: start.to_vec(),
        gaps,
        agreement_residual: agreement,
    })
}

/// Rewrite `p(τ)` as a polynomial in `τ − shift`.
fn shift_poly(c: &[f64], shift: f64) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    for (k, &ck) in c.iter().enumerate() {
        // ck (τ + shift)^k expanded
        let mut term = vec![0.0; k + 1];
        term[0] = 1.0;
        for _ in 0..k {
            // multiply by (τ + shift)
            let mut next = vec![0.0; term.len() + 1];
            for (d, &td) in term.iter().enumerate() {
                next[d] += td * shift;
                next[d + 1] += td;
            }
            term = next;
            term.truncate(k + 1);
        }
        for (d, &td) in term.iter().enumerate() {
            out[d] += ck * td;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;

    fn h1() -> Group {
        Group::new(preset("heisenberg:1").unwrap().algebra)
    }

    #[test]
    fn modulus_vanishes_on_straight_data() {
        let g = h1();
        let v = vec![1.0, 0.5, 0.0];
        let nodes: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let f: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&t| v.iter().map(|&c| t * c).collect())
            .collect();
        let x = vec![vec![1.0, 0.5]; nodes.len()];
        let data = WhitneyData::new(nodes, f, x).unwrap();
        for eta in [1.0, 0.5, 0.1] {
            assert!(whitney_modulus(&g, &data, eta) < 1e-12);
        }
        assert_eq!(whitney_modulus(&g, &WhitneyData::new(vec![0.0], vec![vec![0.0;3]], vec![vec![0.0;2]]).unwrap(), 0.5), 0.0);
    }

    #[test]
    fn modulus_decays_on_smooth_curve_samples() {
        let g = h1();
        let control = ControlPath::new(vec![Piece {
            t0: 0.0,
            t1: 1.0,
            coeffs: vec![vec![1.0, -0.4, 0.2], vec![0.3, 0.8, -0.5]],
        }])
        .unwrap();
        let curve = HorizontalCurve::anchored(control);
        let nodes: Vec<f64> = (0..33).map(|i| i as f64 / 32.0).collect();
        let data = WhitneyData::sample_curve(&g, &curve, &nodes, 1e-5).unwrap();
        let etas = [0.5, 0.25, 0.125, 0.0625];
        let report = modulus_report(&g, &data, &etas);
        assert!(report.nonincreasing, "{:?}", report.values);
        assert!(report.decay_exponent > 0.0, "{:?}", report);
    }

    #[test]
    fn counterexample_respects_thresholds_and_telescoping() {
        let pg = preset("engel").unwrap();
        let v = vec![1.0, 0.0, 0.0, 0.0];
        let report = build_counterexample(&pg, &v, 8).unwrap();
        let g = Group::new(pg.algebra.clone());
        assert_eq!(report.data.len(), 9);
        for (n, (&gauge, &thr)) in report
            .hop_gauges
            .iter()
            .zip(&report.thresholds)
            .enumerate()
        {
            assert!(thr <= 0.5f64.powi(n as i32 + 1) + 1e-15);
            assert!(gauge <= thr + 1e-12, "hop {n}: {gauge} vs {thr}");
        }
        let (ok, slack) = telescoping_check(&g, &report.data, &v);
        assert!(ok, "telescoping slack {slack}");
        // hops point along the top layer
        assert!(report.direction[3].abs() > 0.999);
    }

    #[test]
    fn counterexample_modulus_is_nonincreasing() {
        let pg = preset("engel").unwrap();
        let v = vec![1.0, 0.0, 0.0, 0.0];
        let report = build_counterexample(&pg, &v, 10).unwrap();
        let g = Group::new(pg.algebra.clone());
        let etas: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
        let mr = modulus_report(&g, &report.data, &etas);
        assert!(mr.nonincreasing, "{:?}", mr.values);
        assert!(mr.decay_exponent > 0.0, "{:?}", mr);
    }

    #[test]
    fn superengel_hops_point_down_the_top_layer() {
        let pg = preset("superengel").unwrap();
        let v = vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let report = build_counterexample(&pg, &v, 5).unwrap();
        assert!(report.direction[5] < -0.999, "{:?}", report.direction);
        // consecutive data points differ by a negative top-layer offset
        let g = Group::new(pg.algebra.clone());
        for i in 0..report.data.len() - 1 {
            let dt = report.data.k[i + 1] - report.data.k[i];
            let line: Vec<f64> = v.iter().map(|&c| dt * c).collect();
            let predicted = g.mul_f64(&report.data.f[i], &line);
            let hop = g.left_difference_f64(&predicted, &report.data.f[i + 1]);
            assert!(hop[5] < 0.0, "hop {i}: {hop:?}");
        }
    }

    #[test]
    fn counterexample_requires_an_obstruction() {
        let pg = preset("heisenberg:1").unwrap();
        let err = build_counterexample(&pg, &[1.0, 0.0, 0.0], 4).unwrap_err();
        assert!(matches!(err, Error::NoObstructionDirection));
    }

    #[test]
    fn trivial_gap_stays_straight() {
        let g = h1();
        let v = vec![0.3, -0.2];
        let vf = vec![0.3, -0.2, 0.0];
        let data = WhitneyData::new(
            vec![0.0, 1.0],
            vec![vec![0.0; 3], vf.clone()],
            vec![v.clone(), v.clone()],
        )
        .unwrap();
        let res = extend_step2(&g, &data, &ExtensionOptions::default()).unwrap();
        assert!(res.all_converged);
        // layer-2 roundoff of ~1e-15 appears as ~3e-8 after the gauge root
        assert!(res.max_node_residual < 1e-7, "{:?}", res.node_residuals);
        let gap = &res.gaps[0];
        assert!(gap.sup_deviation < 1e-9, "{}", gap.sup_deviation);
    }

    #[test]
    fn small_vertical_offset_is_absorbed() {
        let g = h1();
        let target = g.mul_f64(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1e-3]);
        let data = WhitneyData::new(
            vec![0.0, 1.0],
            vec![vec![0.0; 3], target],
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let res = extend_step2(&g, &data, &ExtensionOptions::default()).unwrap();
        assert!(res.all_converged);
        let gap = &res.gaps[0];
        assert!(gap.equation_residual < 1e-9, "{}", gap.equation_residual);
        assert!(gap.endpoint_gauge < 1e-6, "{}", gap.endpoint_gauge);
        // deviation scales like the square root of the vertical defect
        assert!(gap.sup_deviation < 0.5, "{}", gap.sup_deviation);
        assert!(gap.sup_deviation > 1e-4);
    }

    #[test]
    fn round_trip_on_cantor_like_nodes() {
        let g = h1();
        let control = ControlPath::new(vec![Piece {
            t0: 0.0,
            t1: 1.0,
            coeffs: vec![vec![0.8, 0.4, -0.3, 0.1], vec![-0.2, 1.0, -0.6]],
        }])
        .unwrap();
        let curve = HorizontalCurve::anchored(control);
        // middle-thirds style nodes
        let mut nodes = vec![0.0, 1.0];
        let mut seg = vec![(0.0, 1.0)];
        while nodes.len() < 8 {
            let mut next = Vec::new();
            for (a, b) in seg {
                let third = (b - a) / 3.0;
                nodes.push(a + third);
                nodes.push(b - third);
                next.push((a, a + third));
                next.push((b - third, b));
            }
            seg = next;
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let data = WhitneyData::sample_curve(&g, &curve, &nodes, 1e-5).unwrap();
        let res = extend_step2(&g, &data, &ExtensionOptions::default()).unwrap();
        assert!(res.all_converged);
        assert!(res.max_node_residual < 1e-6, "{:?}", res.node_residuals);
        assert!(res.boundary_velocity_mismatch < 1e-6);
        for (i, &t) in data.k.iter().enumerate() {
            let u = res.control.eval(t + 1e-13);
            for (a, b) in u.iter().zip(&data.x[i]) {
                assert!((a - b).abs() < 1e-9, "node {t}");
            }
        }
    }

    #[test]
    fn forced_truncated_run_fails_on_counterexample_data() {
        let pg = preset("engel").unwrap();
        let v = vec![1.0, 0.0, 0.0, 0.0];
        let report = build_counterexample(&pg, &v, 6).unwrap();
        let g = Group::new(pg.algebra.clone());
        assert!(extend_step2(&g, &report.data, &ExtensionOptions::default()).is_err());
        let opts = ExtensionOptions {
            force_truncated: true,
            ..ExtensionOptions::default()
        };
        let res = extend_step2(&g, &report.data, &opts).unwrap();
        // The layer-1/2 equations close, but the top layer cannot follow the
        // hops: the full-gauge residual stays far above the solver tolerance.
        let worst = res
            .gaps
            .iter()
            .map(|r| r.endpoint_gauge)
            .fold(0.0f64, f64::max);
        assert!(worst > 1e-3, "expected failure, worst residual {worst}");
    }

    #[test]
    fn lusin_keeps_the_curve_off_jump_windows() {
        let g = h1();
        // L-shaped: velocity X then Y.
        let control = ControlPath::piecewise_constant(
            &[0.0, 0.5, 1.0],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let res = lusin_demo(&g, &[0.0; 3], &control, 0.1, &ExtensionOptions::default())
            .unwrap();
        assert_eq!(res.jump_times, vec![0.5]);
        assert!(res.complement_measure <= 0.1 + 1e-12);
        assert_eq!(res.intervals.len(), 2);
        assert!(res.agreement_residual < 1e-6, "{}", res.agreement_residual);
        // the output is C¹ while the input was not
        assert!(res.control.continuity() != crate::curve::Continuity::Discontinuous);
    }

    #[test]
    fn lusin_with_smooth_input_is_identity() {
        let g = h1();
        let control = ControlPath::new(vec![Piece {
            t0: 0.0,
            t1: 1.0,
            coeffs: vec![vec![1.0, 0.2], vec![0.0, 0.5]],
        }])
        .unwrap();
        let res = lusin_demo(&g, &[0.0; 3], &control, 0.2, &ExtensionOptions::default())
            .unwrap();
        assert_eq!(res.intervals.len(), 1);
        assert_eq!(res.complement_measure, 0.0);
        assert_eq!(res.agreement_residual, 0.0);
    }

    #[test]
    fn whitney_data_round_trips_through_json() {
        let data = WhitneyData::new(
            vec![0.0, 0.5, 1.0],
            vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.1, 0.2], vec![1.0, 0.3, 0.4]],
            vec![vec![1.0, 0.0], vec![0.9, 0.1], vec![1.0, 0.0]],
        )
        .unwrap();
        let text = data.to_json();
        assert!(text.contains("\"K\""));
        assert!(text.contains("\"X\""));
        let back = WhitneyData::from_json(&text).unwrap();
        assert_eq!(back.k, data.k);
        assert_eq!(back.f, data.f);
        assert_eq!(back.x, data.x);
    }
}
