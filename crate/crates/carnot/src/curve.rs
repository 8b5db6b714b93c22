//! Horizontal curves as control paths: piecewise-polynomial controls, group
//! integrators, curve surgeries, connectors, and the shrink-and-flip map.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::LieVector;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::scalar::Scalar;

/// Hard cap on the polynomial degree of a control piece.
pub const MAX_DEGREE: usize = 7;

const KNOT_TOL: f64 = 1e-9;

/// Continuity of a control path across its knots, computed on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    Discontinuous,
    C0,
    C1,
}

/// One polynomial control piece in local time `tau = t - t0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    /// `coeffs[c][k]` is the `tau^k` coefficient of component `c`.
    pub coeffs: Vec<Vec<f64>>,
}

impl Piece {
    pub fn len(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn eval(&self, tau: f64) -> Vec<f64> {
        self.coeffs.iter().map(|p| poly_eval(p, tau)).collect()
    }

    pub fn eval_deriv(&self, tau: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|p| poly_eval(&poly_deriv(p), tau))
            .collect()
    }
}

/// Piecewise-polynomial control `u: [a,b] -> R^m`.
#[derive(Debug, Clone)]
pub struct ControlPath {
    m: usize,
    pieces: Vec<Piece>,
    continuity: Continuity,
}

fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_deriv(p: &[f64]) -> Vec<f64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Real roots of `p` inside `[0, len]`, via companion-matrix eigenvalues.
fn poly_roots_in(p: &[f64], len: f64) -> Vec<f64> {
    let mut p = p.to_vec();
    while p.last().is_some_and(|c| c.abs() < 1e-300) {
        p.pop();
    }
    let deg = p.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        let r = -p[0] / p[1];
        return if (-1e-12..=len + 1e-12).contains(&r) {
            vec![r.clamp(0.0, len)]
        } else {
            Vec::new()
        };
    }
    let lead = p[deg];
    let comp = DMatrix::<f64>::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -p[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    comp.complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() < 1e-8)
        .map(|z| z.re)
        .filter(|r| (-1e-9..=len + 1e-9).contains(r))
        .map(|r| r.clamp(0.0, len))
        .collect()
}

impl ControlPath {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidArgument("control path with no pieces".into()));
        }
        let m = pieces[0].coeffs.len();
        if m == 0 {
            return Err(Error::InvalidArgument("control with no components".into()));
        }
        for p in &pieces {
            if p.coeffs.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: p.coeffs.len(),
                });
            }
            if !(p.t1 > p.t0) || !p.t0.is_finite() || !p.t1.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "bad piece interval [{}, {}]",
                    p.t0, p.t1
                )));
            }
            for c in &p.coeffs {
                if c.len() > MAX_DEGREE + 1 {
                    return Err(Error::InvalidArgument(format!(
                        "piece degree {} exceeds cap {MAX_DEGREE}",
                        c.len() - 1
                    )));
                }
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFiniteControl(f64::NAN));
                }
            }
        }
        for w in pieces.windows(2) {
            if (w[0].t1 - w[1].t0).abs() > KNOT_TOL {
                return Err(Error::InvalidArgument(format!(
                    "pieces do not tile: gap between {} and {}",
                    w[0].t1, w[1].t0
                )));
            }
        }
        let continuity = Self::measure_continuity(&pieces);
        Ok(ControlPath {
            m,
            pieces,
            continuity,
        })
    }

    fn measure_continuity(pieces: &[Piece]) -> Continuity {
        let scale = |v: &[f64]| 1.0 + v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut c1 = true;
        for w in pieces.windows(2) {
            let left = w[0].eval(w[0].len());
            let right = w[1].eval(0.0);
            let jump = left
                .iter()
                .zip(&right)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            if jump > KNOT_TOL * scale(&left) {
                return Continuity::Discontinuous;
            }
            let dl = w[0].eval_deriv(w[0].len());
            let dr = w[1].eval_deriv(0.0);
            let djump = dl
                .iter()
                .zip(&dr)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            if djump > KNOT_TOL * scale(&dl) {
                c1 = false;
            }
        }
        if c1 {
            Continuity::C1
        } else {
            Continuity::C0
        }
    }

    /// Constant control on one interval.
    pub fn constant(a: f64, b: f64, value: &[f64]) -> Result<Self> {
        Self::new(vec![Piece {
            t0: a,
            t1: b,
            coeffs: value.iter().map(|&v| vec![v]).collect(),
        }])
    }

    /// Piecewise-constant control with `knots.len() - 1` pieces.
    pub fn piecewise_constant(knots: &[f64], values: &[Vec<f64>]) -> Result<Self> {
        if knots.len() != values.len() + 1 {
            return Err(Error::InvalidArgument(
                "need one more knot than value".into(),
            ));
        }
        Self::new(
            values
                .iter()
                .zip(knots.windows(2))
                .map(|(v, w)| Piece {
                    t0: w[0],
                    t1: w[1],
                    coeffs: v.iter().map(|&c| vec![c]).collect(),
                })
                .collect(),
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.pieces[0].t0, self.pieces.last().unwrap().t1)
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    fn piece_at(&self, t: f64) -> &Piece {
        let idx = self
            .pieces
            .partition_point(|p| p.t1 < t)
            .min(self.pieces.len() - 1);
        &self.pieces[idx]
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let p = self.piece_at(t);
        p.eval((t - p.t0).clamp(0.0, p.len()))
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct PathJson<'a> {
            pieces: &'a [Piece],
        }
        serde_json::to_string_pretty(&PathJson {
            pieces: &self.pieces,
        })
        .unwrap()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct PathJson {
            pieces: Vec<Piece>,
        }
        let parsed: PathJson = serde_json::from_str(text)?;
        Self::new(parsed.pieces)
    }

    pub fn eval_deriv(&self, t: f64) -> Vec<f64> {
        let p = self.piece_at(t);
        p.eval_deriv((t - p.t0).clamp(0.0, p.len()))
    }

    /// `sup_t |u(t)|` in the Euclidean norm, via critical points of the
    /// squared norm polynomial.
    pub fn sup_norm(&self) -> f64 {
        let mut best: f64 = 0.0;
        for p in &self.pieces {
            let mut sq = vec![0.0];
            for c in &p.coeffs {
                let prod = poly_mul(c, c);
                if sq.len() < prod.len() {
                    sq.resize(prod.len(), 0.0);
                }
                for (a, b) in sq.iter_mut().zip(&prod) {
                    *a += b;
                }
            }
            let mut candidates = vec![0.0, p.len()];
            candidates.extend(poly_roots_in(&poly_deriv(&sq), p.len()));
            for tau in candidates {
                best = best.max(poly_eval(&sq, tau));
            }
        }
        best.sqrt()
    }

}

/// A horizontal curve: a start point and the control driving it through the
/// left-invariant horizontal frame. The curve is C1 in the horizontal sense
/// exactly when the control is continuous.
#[derive(Debug, Clone)]
pub struct HorizontalCurve {
    pub start: Vec<f64>,
    pub control: ControlPath,
}

impl HorizontalCurve {
    pub fn new(start: Vec<f64>, control: ControlPath) -> Self {
        HorizontalCurve { start, control }
    }

    /// Curve anchored at the identity.
    pub fn anchored(control: ControlPath) -> Self {
        // Start dimension is fixed lazily by the integrator; store the
        // horizontal components only.
        HorizontalCurve {
            start: Vec::new(),
            control,
        }
    }

    pub fn is_c1h(&self) -> bool {
        self.control.continuity() != Continuity::Discontinuous
    }

    fn start_point(&self, g: &Group) -> Result<Vec<f64>> {
        if self.start.is_empty() {
            return Ok(vec![0.0; g.dim()]);
        }
        if self.start.len() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim(),
                got: self.start.len(),
            });
        }
        Ok(self.start.clone())
    }

    fn check_m(&self, g: &Group) -> Result<()> {
        if self.control.m() != g.algebra().horizontal_dim() {
            return Err(Error::AlgebraMismatch);
        }
        Ok(())
    }

    /// Velocity as an ambient Lie algebra vector.
    pub fn velocity(&self, g: &Group, t: f64) -> Vec<f64> {
        let u = self.control.eval(t);
        let mut v = vec![0.0; g.dim()];
        v[..u.len()].copy_from_slice(&u);
        v
    }

    /// Midpoint-exponential integration: per step the control value at the
    /// midpoint is frozen and the group moves by its exponential. Exact on
    /// piecewise-constant controls for any step size.
    pub fn integrate(&self, g: &Group, h: f64) -> Result<(Vec<f64>, Vec<(f64, Vec<f64>)>)> {
        self.integrate_impl(g, h, false)
    }

    /// Two-stage Gauss node integration with one commutator correction per
    /// step (fourth order on smooth controls).
    pub fn integrate_magnus4(
        &self,
        g: &Group,
        h: f64,
    ) -> Result<(Vec<f64>, Vec<(f64, Vec<f64>)>)> {
        self.integrate_impl(g, h, true)
    }

    pub fn endpoint(&self, g: &Group, h: f64) -> Result<Vec<f64>> {
        Ok(self.integrate(g, h)?.0)
    }

    fn integrate_impl(
        &self,
        g: &Group,
        h: f64,
        magnus: bool,
    ) -> Result<(Vec<f64>, Vec<(f64, Vec<f64>)>)> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("bad step size {h}")));
        }
        self.check_m(g)?;
        let n = g.dim();
        let mh = self.control.m();
        let mut x = self.start_point(g)?;
        let (a, _) = self.control.domain();
        let mut samples = vec![(a, x.clone())];
        let mut step_vec = vec![0.0; n];
        let mut out = Vec::with_capacity(n);
        let mut bracket = vec![0.0; n];
        for piece in self.control.pieces() {
            let len = piece.len();
            let steps = (len / h).ceil().max(1.0) as usize;
            let hl = len / steps as f64;
            for k in 0..steps {
                let t0 = hl * k as f64;
                step_vec.fill(0.0);
                if magnus {
                    let off = hl * 0.5 * (1.0 - 1.0 / 3.0f64.sqrt());
                    let u1 = piece.eval(t0 + off);
                    let u2 = piece.eval(t0 + hl - off);
                    check_finite(&u1)?;
                    check_finite(&u2)?;
                    let mut a1 = vec![0.0; n];
                    let mut a2 = vec![0.0; n];
                    a1[..mh].copy_from_slice(&u1);
                    a2[..mh].copy_from_slice(&u2);
                    g.algebra().bracket_f64(&a1, &a2, &mut bracket);
                    let c = 3.0f64.sqrt() / 12.0 * hl * hl;
                    for i in 0..n {
                        step_vec[i] = 0.5 * hl * (a1[i] + a2[i]) + c * bracket[i];
                    }
                } else {
                    let u = piece.eval(t0 + 0.5 * hl);
                    check_finite(&u)?;
                    for (i, v) in u.iter().enumerate() {
                        step_vec[i] = hl * v;
                    }
                }
                g.product_f64(&x, &step_vec, &mut out);
                std::mem::swap(&mut x, &mut out);
                samples.push((piece.t0 + hl * (k + 1) as f64, x.clone()));
            }
        }
        Ok((x, samples))
    }
}

fn check_finite(u: &[f64]) -> Result<()> {
    match u.iter().find(|v| !v.is_finite()) {
        Some(&v) => Err(Error::NonFiniteControl(v)),
        None => Ok(()),
    }
}

/// Positive dilation surgery: domain scaled by `lambda`, points dilated,
/// velocity values preserved.
pub fn t1_dilate(g: &Group, curve: &HorizontalCurve, lambda: f64) -> Result<HorizontalCurve> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dilation surgery needs lambda > 0, got {lambda}"
        )));
    }
    scale_curve(g, curve, lambda, 1.0)
}

/// Negative dilation surgery: velocity values are negated.
pub fn t2_dilate(g: &Group, curve: &HorizontalCurve, lambda: f64) -> Result<HorizontalCurve> {
    if !(lambda < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "flip surgery needs lambda < 0, got {lambda}"
        )));
    }
    scale_curve(g, curve, lambda, -1.0)
}

fn scale_curve(
    g: &Group,
    curve: &HorizontalCurve,
    lambda: f64,
    sign: f64,
) -> Result<HorizontalCurve> {
    let al = lambda.abs();
    let pieces = curve
        .control
        .pieces()
        .iter()
        .map(|p| Piece {
            t0: al * p.t0,
            t1: al * p.t1,
            coeffs: p
                .coeffs
                .iter()
                .map(|c| {
                    c.iter()
                        .enumerate()
                        .map(|(k, &x)| sign * x / al.powi(k as i32))
                        .collect()
                })
                .collect(),
        })
        .collect();
    let start = if curve.start.is_empty() {
        Vec::new()
    } else {
        g.dilate_f64(lambda, &curve.start)
    };
    Ok(HorizontalCurve::new(start, ControlPath::new(pieces)?))
}

fn reverse_control(control: &ControlPath, sign: f64) -> Result<ControlPath> {
    let (a, b) = control.domain();
    let pieces = control
        .pieces()
        .iter()
        .rev()
        .map(|p| {
            // Substitute tau -> len - tau and relocate to [a+b-t1, a+b-t0].
            let len = p.len();
            let coeffs = p
                .coeffs
                .iter()
                .map(|c| {
                    let mut out = vec![0.0; c.len()];
                    for (k, &ck) in c.iter().enumerate() {
                        // ck (len - tau)^k expanded binomially.
                        let mut binom = 1.0f64;
                        for j in 0..=k {
                            out[j] += sign
                                * ck
                                * binom
                                * len.powi((k - j) as i32)
                                * if j % 2 == 1 { -1.0 } else { 1.0 };
                            binom = binom * (k - j) as f64 / (j + 1) as f64;
                        }
                    }
                    out
                })
                .collect();
            Piece {
                t0: a + b - p.t1,
                t1: a + b - p.t0,
                coeffs,
            }
        })
        .collect();
    ControlPath::new(pieces)
}

/// Time reversal with left translation to the identity: the result starts
/// at the identity and runs the curve backwards with negated velocity.
pub fn t3_reverse(curve: &HorizontalCurve) -> Result<HorizontalCurve> {
    Ok(HorizontalCurve::anchored(reverse_control(
        &curve.control,
        -1.0,
    )?))
}

/// Time reversal composed with the flip surgery: same velocity values in
/// reversed order, anchored at the identity.
pub fn t4_reverse_keep(curve: &HorizontalCurve) -> Result<HorizontalCurve> {
    Ok(HorizontalCurve::anchored(reverse_control(
        &curve.control,
        1.0,
    )?))
}

/// Concatenation of two identity-anchored curves; the endpoint is the group
/// product of the endpoints.
pub fn t5_concat(c1: &HorizontalCurve, c2: &HorizontalCurve) -> Result<HorizontalCurve> {
    for c in [c1, c2] {
        if !(c.start.is_empty() || c.start.iter().all(|&v| v == 0.0)) {
            return Err(Error::InvalidArgument(
                "concatenation needs identity-anchored curves".into(),
            ));
        }
    }
    let (a1, b1) = c1.control.domain();
    let (a2, _) = c2.control.domain();
    let mut pieces: Vec<Piece> = c1.control.pieces().to_vec();
    let shift = b1 - a2;
    pieces.extend(c2.control.pieces().iter().map(|p| Piece {
        t0: p.t0 + shift,
        t1: p.t1 + shift,
        coeffs: p.coeffs.clone(),
    }));
    let _ = a1;
    Ok(HorizontalCurve::anchored(ControlPath::new(pieces)?))
}

/// Loop that leaves with velocity `v` and returns to its start with
/// velocity `w`, built from two one-directional excursions whose speed
/// profile passes through -1/2. Control sup-norm is `max(|v|, |w|)`.
pub fn connector(r: f64, v: &[f64], w: &[f64]) -> Result<ControlPath> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "connector needs r > 0, got {r}"
        )));
    }
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: w.len(),
        });
    }
    let q = r / 4.0;
    let ramp = |dir: &[f64], from: f64, to: f64| -> Vec<Vec<f64>> {
        dir.iter()
            .map(|&d| vec![d * from, d * (to - from) / q])
            .collect()
    };
    ControlPath::new(vec![
        Piece {
            t0: 0.0,
            t1: q,
            coeffs: ramp(v, 1.0, -0.5),
        },
        Piece {
            t0: q,
            t1: 2.0 * q,
            coeffs: ramp(v, -0.5, 0.0),
        },
        Piece {
            t0: 2.0 * q,
            t1: 3.0 * q,
            coeffs: ramp(w, 0.0, -0.5),
        },
        Piece {
            t0: 3.0 * q,
            t1: r,
            coeffs: ramp(w, -0.5, 1.0),
        },
    ])
}

/// Linear velocity interpolation from `v` to `w` over `[0, rho]`.
pub fn interp_prefix(v: &[f64], w: &[f64], rho: f64) -> Result<ControlPath> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "interpolation needs rho > 0, got {rho}"
        )));
    }
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: w.len(),
        });
    }
    ControlPath::new(vec![Piece {
        t0: 0.0,
        t1: rho,
        coeffs: v
            .iter()
            .zip(w)
            .map(|(&a, &b)| vec![a, (b - a) / rho])
            .collect(),
    }])
}

/// The shrink-and-flip endpoint map `x -> dilate(rho, x) * dilate(rho - 1, x)^{-1}`.
pub fn f_rho_map<S: Scalar>(g: &Group, x: &LieVector<S>, rho: &S) -> LieVector<S> {
    let shrunk = g.dilate(rho, x);
    let flipped = g.dilate(&(rho.clone() - S::one()), x);
    g.product(&shrunk, &g.inverse(&flipped))
}
