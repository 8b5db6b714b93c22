//! Abnormal paths along straight curves and the rigidity trichotomy.
//!
//! A straight curve `t -> exp(tX)` carries abnormal lifts `p(t) = p0 ∘ e^{t ad_X}`
//! where `p0` annihilates every iterated bracket `ad_X^k(V)` of horizontal
//! vectors.  The decision combines the Goh condition `p(t)[V,W] = 0` with the
//! second-order form `Q_{p(t)}(V) = p(t)[V,[X,V]]` on the orthogonal complement
//! of `X` inside the horizontal layer: a member with `Goh ≡ 0` and `Q > 0`
//! certifies rigidity, while a member violating Goh or making `Q` strictly
//! negative somewhere certifies non-rigidity.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Covector, LieVector, StratifiedAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{annihilator, symmetric_definiteness, Definiteness};
use crate::scalar::{ratio, Rat, Scalar};

/// Number of grid points for the `t`-sampled positivity check.
pub const T_GRID: usize = 64;
/// Minimum eigenvalue margin (after basis normalization) demanded of a
/// positivity certificate.
pub const MARGIN_TOL: f64 = 1e-9;
/// Random covector combinations tried per family beyond the signed basis.
pub const MEMBER_SAMPLES: usize = 200;

/// Covector-valued polynomial `t -> sum_k t^k coeffs[k]`.
#[derive(Debug, Clone)]
pub struct CovectorPoly {
    pub coeffs: Vec<Covector<Rat>>,
}

impl CovectorPoly {
    pub fn eval(&self, t: &Rat) -> Covector<Rat> {
        let n = self.coeffs.first().map_or(0, |c| c.len());
        let mut out = Covector::zero(n);
        let mut power: Rat = num_traits::One::one();
        for c in &self.coeffs {
            out.add_scaled(&power, c);
            power *= t.clone();
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| !c.is_zero())
            .unwrap_or(0)
    }
}

/// All abnormal lifts of `t -> exp(tX)`: covectors `p0` annihilating
/// `ad_X^k(V)` for every horizontal `V` and every `k >= 0`, together with the
/// polynomial time law `p(t) = p0 ∘ e^{t ad_X}`.
#[derive(Debug, Clone)]
pub struct AbnormalFamily {
    pub x: LieVector<Rat>,
    pub basis: Vec<Covector<Rat>>,
}

impl AbnormalFamily {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

pub fn abnormal_family(a: &StratifiedAlgebra, x: &LieVector<Rat>) -> Result<AbnormalFamily> {
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: x.len(),
        });
    }
    if !a.is_horizontal(x) {
        return Err(Error::InvalidArgument(
            "abnormal families are defined along horizontal vectors".into(),
        ));
    }
    let span = a.ad_power_span(x);
    let basis = annihilator(span.rows(), a.dim())
        .into_iter()
        .map(Covector)
        .collect();
    Ok(AbnormalFamily { x: x.clone(), basis })
}

/// Exact time law `p(t) = p0 ∘ e^{t ad_X}`, i.e. coefficient `k` equals
/// `p0 ∘ ad_X^k / k!`.  Nilpotency truncates the series below the step.
pub fn time_law(a: &StratifiedAlgebra, x: &LieVector<Rat>, p0: &Covector<Rat>) -> CovectorPoly {
    let ad = a.ad_matrix(x);
    let n = a.dim();
    let mut coeffs = vec![p0.clone()];
    for k in 1..a.step() + 1 {
        let prev = &coeffs[k - 1];
        let mut next = Covector::zero(n);
        for j in 0..n {
            let mut acc = Rat::zero();
            for i in 0..n {
                if !ad[i][j].is_zero() && !prev.0[i].is_zero() {
                    acc += prev.0[i].clone() * ad[i][j].clone();
                }
            }
            next.0[j] = acc / Rat::from_int(k as i64);
        }
        if next.is_zero() {
            break;
        }
        coeffs.push(next);
    }
    CovectorPoly { coeffs }
}

/// Check the defining identity `d/dt p(t)Y = p(t)[X,Y]` coefficient-wise:
/// `(k+1) c_{k+1} = c_k ∘ ad_X`, plus annihilation of the horizontal layer.
pub fn verify_abnormal_law(a: &StratifiedAlgebra, x: &LieVector<Rat>, law: &CovectorPoly) -> bool {
    let ad = a.ad_matrix(x);
    let n = a.dim();
    for k in 0..law.coeffs.len() {
        let c = &law.coeffs[k];
        for j in a.layer_range(1) {
            if !c.0[j].is_zero() {
                return false;
            }
        }
        let mut next = vec![Rat::zero(); n];
        for j in 0..n {
            for i in 0..n {
                if !ad[i][j].is_zero() && !c.0[i].is_zero() {
                    next[j] += c.0[i].clone() * ad[i][j].clone();
                }
            }
        }
        let expected = if k + 1 < law.coeffs.len() {
            law.coeffs[k + 1]
                .0
                .iter()
                .map(|v| v.clone() * Rat::from_int((k + 1) as i64))
                .collect()
        } else {
            vec![Rat::zero(); n]
        };
        if next != expected {
            return false;
        }
    }
    true
}

/// Antisymmetric matrix `G[i][j] = p([X_i, X_j])` over the horizontal basis.
pub fn goh_form(a: &StratifiedAlgebra, p: &Covector<Rat>) -> Vec<Vec<Rat>> {
    let m = a.horizontal_dim();
    let mut g = vec![vec![Rat::zero(); m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let mut val = Rat::zero();
            for (k, c) in a.bracket_basis(i, j) {
                val += p.0[k].clone() * c;
            }
            g[i][j] = val.clone();
            g[j][i] = -val;
        }
    }
    g
}

fn goh_is_zero(g: &[Vec<Rat>]) -> bool {
    g.iter().all(|row| row.iter().all(|v| v.is_zero()))
}

/// Whether the Goh form of `p(t)` vanishes identically in `t` (checked
/// coefficient-by-coefficient, hence exactly as a polynomial identity).
pub fn goh_vanishes_in_t(a: &StratifiedAlgebra, law: &CovectorPoly) -> bool {
    law.coeffs.iter().all(|c| goh_is_zero(&goh_form(a, c)))
}

/// Orthogonal (not normalized) basis of `{V ∈ 𝔊_H : V ⊥ X}` for the standard
/// inner product on the horizontal coordinates.
pub fn x_perp_basis(a: &StratifiedAlgebra, x: &LieVector<Rat>) -> Vec<LieVector<Rat>> {
    let n = a.dim();
    let m = a.horizontal_dim();
    let dot = |u: &LieVector<Rat>, v: &LieVector<Rat>| -> Rat {
        (0..m).fold(Rat::zero(), |acc, i| {
            acc + u.0[i].clone() * v.0[i].clone()
        })
    };
    let mut ortho: Vec<LieVector<Rat>> = Vec::new();
    let mut seed: Vec<LieVector<Rat>> = Vec::new();
    if !x.is_zero() {
        seed.push(x.clone());
    }
    seed.extend((0..m).map(|i| LieVector::basis(n, i)));
    for mut v in seed {
        for w in &ortho {
            let coeff = dot(&v, w) / dot(w, w);
            if !coeff.is_zero() {
                let neg = -coeff;
                v.add_scaled(&neg, w);
            }
        }
        if !v.is_zero() {
            ortho.push(v);
        }
    }
    if !x.is_zero() {
        ortho.remove(0);
    }
    ortho
}

/// Symmetric matrix of `Q_p(V) = p([V,[X,V]])` in the given basis of X-perp.
pub fn q_form_in_basis(
    a: &StratifiedAlgebra,
    p: &Covector<Rat>,
    x: &LieVector<Rat>,
    basis: &[LieVector<Rat>],
) -> Vec<Vec<Rat>> {
    let k = basis.len();
    let half = ratio(1, 2);
    let ad_x: Vec<LieVector<Rat>> = basis.iter().map(|v| a.bracket(x, v)).collect();
    let mut q = vec![vec![Rat::zero(); k]; k];
    for i in 0..k {
        for j in i..k {
            let bij = p.pair(&a.bracket(&basis[i], &ad_x[j]));
            let bji = p.pair(&a.bracket(&basis[j], &ad_x[i]));
            let val = (bij + bji) * half.clone();
            q[i][j] = val.clone();
            q[j][i] = val;
        }
    }
    q
}

/// Quadratic form of `Q_p` on X-perp together with the orthogonal basis used.
pub fn q_form(
    a: &StratifiedAlgebra,
    p: &Covector<Rat>,
    x: &LieVector<Rat>,
) -> (Vec<LieVector<Rat>>, Vec<Vec<Rat>>) {
    let basis = x_perp_basis(a, x);
    let q = q_form_in_basis(a, p, x, &basis);
    (basis, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RigidityTag {
    Rigid,
    NotRigid,
    Unknown,
}

impl RigidityTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RigidityTag::Rigid => "Rigid",
            RigidityTag::NotRigid => "NotRigid",
            RigidityTag::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RigidityVerdict {
    pub tag: RigidityTag,
    /// Certifying abnormal covector, when one exists.
    pub witness: Option<Covector<Rat>>,
    /// For `Rigid`: minimum eigenvalue of the normalized `Q` over the grid.
    /// For a negative-direction witness: the (negative) normalized value.
    pub q_margin: Option<f64>,
    pub reason: &'static str,
    pub family_dim: usize,
}

fn normalized_q_f64(q: &[Vec<Rat>], basis: &[LieVector<Rat>]) -> nalgebra::DMatrix<f64> {
    let k = q.len();
    let norms: Vec<f64> = basis
        .iter()
        .map(|v| v.0.iter().map(|c| c.to_f64() * c.to_f64()).sum::<f64>().sqrt())
        .collect();
    nalgebra::DMatrix::from_fn(k, k, |i, j| q[i][j].to_f64() / (norms[i] * norms[j]))
}

fn min_eigenvalue(m: &nalgebra::DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

struct MemberScan {
    rigid: Option<(Covector<Rat>, f64)>,
    goh_violation: Option<Covector<Rat>>,
    negative: Option<(Covector<Rat>, f64)>,
}

fn scan_member(
    a: &StratifiedAlgebra,
    x: &LieVector<Rat>,
    perp: &[LieVector<Rat>],
    p0: &Covector<Rat>,
    out: &mut MemberScan,
) {
    let law = time_law(a, x, p0);
    if !goh_vanishes_in_t(a, &law) {
        if out.goh_violation.is_none() {
            out.goh_violation = Some(p0.clone());
        }
        return;
    }
    let mut min_margin = f64::INFINITY;
    for i in 0..T_GRID {
        let t = ratio(i as i64, (T_GRID - 1) as i64);
        let pt = law.eval(&t);
        let q = q_form_in_basis(a, &pt, x, perp);
        match symmetric_definiteness(&q) {
            Definiteness::PositiveDefinite => {
                min_margin = min_margin.min(min_eigenvalue(&normalized_q_f64(&q, perp)));
            }
            Definiteness::PositiveSemidefinite => return,
            Definiteness::HasNegativeDirection(w) => {
                if out.negative.is_none() {
                    // Normalized Rayleigh quotient of the witness direction.
                    let qm = normalized_q_f64(&q, perp);
                    let wv: Vec<f64> = {
                        let norms: Vec<f64> = perp
                            .iter()
                            .map(|v| {
                                v.0.iter().map(|c| c.to_f64() * c.to_f64()).sum::<f64>().sqrt()
                            })
                            .collect();
                        w.iter().zip(&norms).map(|(c, n)| c.to_f64() * n).collect()
                    };
                    let wd = nalgebra::DVector::from_vec(wv);
                    let val = (wd.transpose() * &qm * &wd)[(0, 0)] / wd.norm_squared();
                    out.negative = Some((p0.clone(), val));
                }
                return;
            }
        }
    }
    if min_margin > MARGIN_TOL && out.rigid.is_none() {
        out.rigid = Some((p0.clone(), min_margin));
    }
}

/// Decide rigidity of `t -> exp(tX)`.
///
/// Sufficiency is tested before necessity: a single member with `Goh ≡ 0` and
/// `Q > 0` on the whole grid certifies `Rigid` even though other members (its
/// negation, for one) make `Q` negative.  Only when no member certifies
/// rigidity does a Goh violation or a strictly negative direction yield
/// `NotRigid`.
pub fn rigidity_test(a: &StratifiedAlgebra, x: &LieVector<Rat>) -> Result<RigidityVerdict> {
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: x.len(),
        });
    }
    if !a.is_horizontal(x) {
        return Err(Error::InvalidArgument(
            "rigidity is decided for horizontal vectors".into(),
        ));
    }
    if x.is_zero() {
        return Ok(RigidityVerdict {
            tag: RigidityTag::NotRigid,
            witness: None,
            q_margin: None,
            reason: "zero-vector-pliable",
            family_dim: a.dim() - a.horizontal_dim(),
        });
    }
    let family = abnormal_family(a, x)?;
    if family.is_empty() {
        return Ok(RigidityVerdict {
            tag: RigidityTag::NotRigid,
            witness: None,
            q_margin: None,
            reason: "no-abnormal-lift",
            family_dim: 0,
        });
    }
    let perp = x_perp_basis(a, x);
    let mut members: Vec<Covector<Rat>> = Vec::new();
    for b in &family.basis {
        members.push(b.clone());
        members.push(Covector(b.0.iter().map(|c| -c.clone()).collect()));
    }
    if family.dim() > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..MEMBER_SAMPLES {
            let mut p = Covector::zero(a.dim());
            for b in &family.basis {
                let num = rng.gen_range(-3i64..=3);
                let den = rng.gen_range(1i64..=4);
                if num != 0 {
                    p.add_scaled(&ratio(num, den), b);
                }
            }
            if !p.is_zero() {
                members.push(p);
            }
        }
    }
    let mut scan = MemberScan {
        rigid: None,
        goh_violation: None,
        negative: None,
    };
    for p0 in &members {
        scan_member(a, x, &perp, p0, &mut scan);
        if scan.rigid.is_some() {
            break;
        }
    }
    let family_dim = family.dim();
    if let Some((p0, margin)) = scan.rigid {
        return Ok(RigidityVerdict {
            tag: RigidityTag::Rigid,
            witness: Some(p0),
            q_margin: Some(margin),
            reason: "goh-and-positivity-certificate",
            family_dim,
        });
    }
    if let Some(p0) = scan.goh_violation {
        return Ok(RigidityVerdict {
            tag: RigidityTag::NotRigid,
            witness: Some(p0),
            q_margin: None,
            reason: "goh-violation",
            family_dim,
        });
    }
    if let Some((p0, val)) = scan.negative {
        return Ok(RigidityVerdict {
            tag: RigidityTag::NotRigid,
            witness: Some(p0),
            q_margin: Some(val),
            reason: "negative-second-order",
            family_dim,
        });
    }
    Ok(RigidityVerdict {
        tag: RigidityTag::Unknown,
        witness: None,
        q_margin: None,
        reason: "no-certificate-found",
        family_dim,
    })
}
