//! Pliability decisions for horizontal vectors.
//!
//! Three certificate routes feed one pipeline: an empty abnormal family
//! (linear certificate), the Bianchini–Stefani bracket criterion on the
//! control-lifted system (symbolic, exact), and the zero-vector witness
//! construction.  Non-pliability is only ever certified through a rigidity
//! verdict; the numeric reachability probe reports evidence, never a tag.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{LieVector, StratifiedAlgebra};
use crate::curve::{connector, ControlPath, HorizontalCurve, Piece};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::lifted::{drift_ad_tower, lifted_bracket, LiftedField, Monomial};
use crate::linalg::RowSpace;
use crate::presets::PresetGroup;
use crate::rigidity::{abnormal_family, rigidity_test, RigidityTag, RigidityVerdict};
use crate::scalar::Rat;

/// Hard cap on kept bracket elements per enumeration.
pub const BS_KEPT_CAP: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PliabilityTag {
    Pliable,
    NotPliable,
    Unknown,
}

impl PliabilityTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PliabilityTag::Pliable => "Pliable",
            PliabilityTag::NotPliable => "NotPliable",
            PliabilityTag::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    NoAbnormalLift,
    ZeroVector,
    BianchiniStefani,
    RigidHenceNotPliable,
    ProbeEvidenceOnly,
}

impl Certificate {
    pub fn as_str(self) -> &'static str {
        match self {
            Certificate::NoAbnormalLift => "no-abnormal-lift",
            Certificate::ZeroVector => "zero-vector",
            Certificate::BianchiniStefani => "bianchini-stefani",
            Certificate::RigidHenceNotPliable => "rigid-hence-not-pliable",
            Certificate::ProbeEvidenceOnly => "probe-evidence-only",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BsReport {
    pub lmax: usize,
    pub kept: usize,
    pub even_checked: usize,
    pub stabilized: bool,
    pub capped: bool,
    /// First even-multidegree element outside the span of shorter ones.
    pub offender: Option<String>,
    /// Rank of the evaluation span at `(0, ū)` vs. the required `dim𝔊 + m`.
    pub span_rank: usize,
    pub full_rank: usize,
    pub pliable: bool,
}

#[derive(Debug, Clone)]
pub struct PliabilityVerdict {
    pub tag: PliabilityTag,
    pub certificate: Certificate,
    pub bs: Option<BsReport>,
    pub rigidity: Option<RigidityVerdict>,
}

/// True iff the straight curve has no abnormal lift at all.
pub fn no_abnormal_certificate(a: &StratifiedAlgebra, x: &LieVector<Rat>) -> Result<bool> {
    Ok(abnormal_family(a, x)?.is_empty())
}

// ---------------------------------------------------------------------------
// Bianchini–Stefani bracket criterion.
// ---------------------------------------------------------------------------

/// Monomials in `m` variables with total degree at most `deg`, ordered by
/// (total degree, exponents).
fn monomials_up_to(m: usize, deg: u32) -> Vec<Monomial> {
    let mut all = vec![vec![0u32; m]];
    let mut frontier = all.clone();
    for _ in 0..deg {
        let mut next = Vec::new();
        for mono in &frontier {
            for i in 0..m {
                let mut e = mono.clone();
                e[i] += 1;
                if e[..i].iter().zip(&mono[..i]).all(|(a, b)| a == b) {
                    next.push(e);
                }
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all.sort_by_key(|e| (e.iter().sum::<u32>(), e.clone()));
    all.dedup();
    all
}

struct CoeffSpace {
    index: BTreeMap<Monomial, usize>,
    dim: usize,
    m: usize,
}

impl CoeffSpace {
    fn new(a: &StratifiedAlgebra) -> Self {
        let m = a.horizontal_dim();
        let monos = monomials_up_to(m, a.step() as u32);
        let index = monos.into_iter().zip(0..).collect::<BTreeMap<_, _>>();
        CoeffSpace {
            index,
            dim: a.dim(),
            m,
        }
    }

    fn width(&self) -> usize {
        self.index.len() * self.dim + self.m
    }

    fn vectorize(&self, f: &LiftedField) -> Vec<Rat> {
        let mut v = vec![Rat::zero(); self.width()];
        for (mono, coeff) in &f.algebra_part {
            let base = self.index[mono] * self.dim;
            for (i, c) in coeff.0.iter().enumerate() {
                v[base + i] = c.clone();
            }
        }
        let off = self.index.len() * self.dim;
        v[off..off + self.m].clone_from_slice(&f.vertical_part);
        v
    }
}

#[derive(Clone)]
struct BracketElement {
    field: LiftedField,
    multi: Vec<u32>,
    word: String,
}

struct BsSymbolic {
    kept: Vec<BracketElement>,
    even_checked: usize,
    stabilized: bool,
    capped: bool,
    offender: Option<String>,
}

/// Enumerate iterated brackets of `𝒥 = {ad^k_{F₀}Fⱼ : 0 ≤ k ≤ s}` up to total
/// length `lmax`, pruning per multidegree so that every bracket word stays a
/// combination of kept elements of the same multidegree and no greater length.
/// Along the way check the even-multidegree condition: each nonzero candidate
/// whose multidegree is even in every `Fⱼ` must lie in the span of strictly
/// shorter kept elements.
fn bs_symbolic(a: &StratifiedAlgebra, lmax: usize) -> BsSymbolic {
    let m = a.horizontal_dim();
    let s = a.step();
    let coeff = CoeffSpace::new(a);
    let mut kept: Vec<BracketElement> = Vec::new();
    let mut kept_by_len: Vec<Vec<usize>> = vec![Vec::new(); lmax + 1];
    let mut prune: HashMap<Vec<u32>, RowSpace> = HashMap::new();
    let mut shorter = RowSpace::new();
    let mut even_checked = 0usize;
    let mut offender = None;
    let mut capped = false;
    let mut new_at_last = 0usize;

    // 𝒥 towers; nilpotency of ad_{F₀} past the step is checked, not assumed.
    let mut towers: Vec<Vec<LiftedField>> = Vec::new();
    for j in 0..m {
        let tower = drift_ad_tower(a, j, s + 1);
        if !tower[s + 1].is_zero() {
            // Grading violation would falsify the enumeration bound.
            return BsSymbolic {
                kept: Vec::new(),
                even_checked: 0,
                stabilized: false,
                capped: false,
                offender: Some(format!("ad^{}(F0)F{} does not vanish", s + 1, j + 1)),
            };
        }
        towers.push(tower);
    }

    'stage: for len in 1..=lmax {
        let mut candidates: Vec<BracketElement> = Vec::new();
        if len <= s + 1 {
            for j in 0..m {
                let mut word = format!("F{}", j + 1);
                for _ in 0..len - 1 {
                    word = format!("[F0,{word}]");
                }
                let mut multi = vec![0u32; m];
                multi[j] = 1;
                candidates.push(BracketElement {
                    field: towers[j][len - 1].clone(),
                    multi,
                    word,
                });
            }
        }
        for l1 in 1..len {
            let l2 = len - l1;
            if l2 < l1 {
                break;
            }
            for &i in &kept_by_len[l1] {
                for &j in &kept_by_len[l2] {
                    if l1 == l2 && j <= i {
                        continue;
                    }
                    let f = lifted_bracket(a, &kept[i].field, &kept[j].field);
                    if f.is_zero() {
                        continue;
                    }
                    let multi: Vec<u32> = kept[i]
                        .multi
                        .iter()
                        .zip(&kept[j].multi)
                        .map(|(x, y)| x + y)
                        .collect();
                    candidates.push(BracketElement {
                        field: f,
                        multi,
                        word: format!("[{},{}]", kept[i].word, kept[j].word),
                    });
                }
            }
        }

        let mut new_here = 0usize;
        for cand in candidates {
            if cand.field.is_zero() {
                continue;
            }
            let vec = coeff.vectorize(&cand.field);
            let even = cand.multi.iter().all(|&e| e % 2 == 0);
            if even {
                even_checked += 1;
                if !shorter.contains(&vec) && offender.is_none() {
                    offender = Some(cand.word.clone());
                }
            }
            let space = prune.entry(cand.multi.clone()).or_insert_with(RowSpace::new);
            if space.insert(vec) {
                kept_by_len[len].push(kept.len());
                kept.push(cand);
                new_here += 1;
                if kept.len() > BS_KEPT_CAP {
                    capped = true;
                    break 'stage;
                }
            }
        }
        if len == lmax {
            new_at_last = new_here;
        }
        for &i in &kept_by_len[len] {
            shorter.insert(coeff.vectorize(&kept[i].field));
        }
    }

    BsSymbolic {
        kept,
        even_checked,
        stabilized: !capped && new_at_last == 0,
        capped,
        offender,
    }
}

static BS_CACHE: OnceLock<Mutex<HashMap<(String, usize), Arc<BsSymbolic>>>> = OnceLock::new();

fn bs_symbolic_cached(a: &StratifiedAlgebra, lmax: usize) -> Arc<BsSymbolic> {
    let key = (a.canonical_key(), lmax);
    let cache = BS_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(key)
        .or_insert_with(|| Arc::new(bs_symbolic(a, lmax)))
        .clone()
}

/// Default bracket-length bound: algebra parts die above the step and one
/// bracket kills vertical parts, so `2s + 2` suffices; the stabilization flag
/// in the report verifies that the enumeration indeed stopped producing new
/// directions at that length.
pub fn default_lmax(a: &StratifiedAlgebra) -> usize {
    2 * a.step() + 2
}

/// Bianchini–Stefani criterion for `X = Σ ūᵢXᵢ`: Pliable iff (a) the kept
/// brackets evaluated at `(0, ū)` span the full tangent `dim𝔊 + m` and (b)
/// every even-multidegree bracket reduces to strictly shorter ones.
pub fn bianchini_stefani(
    a: &StratifiedAlgebra,
    x: &LieVector<Rat>,
    lmax: Option<usize>,
) -> Result<BsReport> {
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: x.len(),
        });
    }
    if !a.is_horizontal(x) {
        return Err(Error::InvalidArgument(
            "the Bianchini-Stefani test applies to horizontal vectors".into(),
        ));
    }
    let lmax = lmax.unwrap_or_else(|| default_lmax(a));
    let sym = bs_symbolic_cached(a, lmax);
    let m = a.horizontal_dim();
    let full_rank = a.dim() + m;
    let u_bar: Vec<Rat> = x.0[..m].to_vec();
    let mut span = RowSpace::new();
    for el in &sym.kept {
        let alg = el.field.eval_algebra(&u_bar);
        let mut v = alg.0;
        v.extend_from_slice(&el.field.vertical_part);
        span.insert(v);
        if span.rank() == full_rank {
            break;
        }
    }
    let even_ok = sym.offender.is_none();
    let pliable =
        even_ok && sym.stabilized && !sym.capped && span.rank() == full_rank;
    Ok(BsReport {
        lmax,
        kept: sym.kept.len(),
        even_checked: sym.even_checked,
        stabilized: sym.stabilized,
        capped: sym.capped,
        offender: sym.offender.clone(),
        span_rank: span.rank(),
        full_rank,
        pliable,
    })
}

// ---------------------------------------------------------------------------
// Decision pipeline.
// ---------------------------------------------------------------------------

pub fn pliability_test(
    a: &StratifiedAlgebra,
    x: &LieVector<Rat>,
    lmax: Option<usize>,
) -> Result<PliabilityVerdict> {
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: x.len(),
        });
    }
    if !a.is_horizontal(x) {
        return Err(Error::InvalidArgument(
            "pliability is decided for horizontal vectors".into(),
        ));
    }
    if x.is_zero() {
        return Ok(PliabilityVerdict {
            tag: PliabilityTag::Pliable,
            certificate: Certificate::ZeroVector,
            bs: None,
            rigidity: None,
        });
    }
    if no_abnormal_certificate(a, x)? {
        return Ok(PliabilityVerdict {
            tag: PliabilityTag::Pliable,
            certificate: Certificate::NoAbnormalLift,
            bs: None,
            rigidity: None,
        });
    }
    let bs = bianchini_stefani(a, x, lmax)?;
    if bs.pliable {
        return Ok(PliabilityVerdict {
            tag: PliabilityTag::Pliable,
            certificate: Certificate::BianchiniStefani,
            bs: Some(bs),
            rigidity: None,
        });
    }
    let rig = rigidity_test(a, x)?;
    if rig.tag == RigidityTag::Rigid {
        return Ok(PliabilityVerdict {
            tag: PliabilityTag::NotPliable,
            certificate: Certificate::RigidHenceNotPliable,
            bs: Some(bs),
            rigidity: Some(rig),
        });
    }
    Ok(PliabilityVerdict {
        tag: PliabilityTag::Unknown,
        certificate: Certificate::ProbeEvidenceOnly,
        bs: Some(bs),
        rigidity: Some(rig),
    })
}

// ---------------------------------------------------------------------------
// Zero-vector witness: a family of loops through the identity whose endpoint
// map has full rank, assembled from mirrored constant flows joined by
// connector ramps.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ZeroPliableWitness {
    pub control: ControlPath,
    pub endpoint_gauge: f64,
    /// Largest absolute endpoint coordinate (the loop closes exactly in exact
    /// arithmetic; this measures pure floating-point residue).
    pub endpoint_residual: f64,
    pub jacobian_rank: usize,
    pub jacobian_sigma_min: f64,
    pub sup_norm: f64,
    pub flows: usize,
}

fn embed_horizontal(dim: usize, v: &[f64], scale: f64) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (o, x) in out.iter_mut().zip(v) {
        *o = scale * x;
    }
    out
}

fn shift_pieces(path: &ControlPath, offset: f64) -> Vec<Piece> {
    path.pieces()
        .iter()
        .map(|p| Piece {
            t0: p.t0 + offset,
            t1: p.t1 + offset,
            coeffs: p.coeffs.clone(),
        })
        .collect()
}

pub fn zero_pliable_witness(g: &Group, epsilon: f64, seed: u64) -> Result<ZeroPliableWitness> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let n = g.dim();
    let m = g.algebra().horizontal_dim();
    let k = 2 * n;
    let seg = 1.0 / (4 * k + 1) as f64;
    let speed = epsilon / 2.0;

    for attempt in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt * 0x9e3779b9));
        let dirs: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let mut v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
                for x in v.iter_mut() {
                    *x *= speed / norm;
                }
                v
            })
            .collect();

        // Endpoint of the assembled loop as a function of the amplitudes of
        // the first k flows; the mirrored half is fixed, so the base point
        // c = 1 returns to the identity exactly and connectors contribute
        // nothing (each one-directional half integrates to zero).
        let endpoint = |c: &[f64]| -> Vec<f64> {
            let mut y = vec![0.0; n];
            for j in 0..k {
                let step = embed_horizontal(n, &dirs[j], seg * c[j]);
                y = g.mul_f64(&y, &step);
            }
            for j in (0..k).rev() {
                let step = embed_horizontal(n, &dirs[j], -seg);
                y = g.mul_f64(&y, &step);
            }
            y
        };

        let base = vec![1.0; k];
        let delta = 1e-5;
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, k);
        for j in 0..k {
            let mut cp = base.clone();
            let mut cm = base.clone();
            cp[j] += delta;
            cm[j] -= delta;
            let ep = endpoint(&cp);
            let em = endpoint(&cm);
            for i in 0..n {
                jac[(i, j)] = (ep[i] - em[i]) / (2.0 * delta);
            }
        }
        let svd = jac.svd(false, false);
        let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let tol = 1e-9 * sigma_max.max(1.0);
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        let sigma_min = svd
            .singular_values
            .iter()
            .take(n)
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if rank < n {
            continue;
        }

        // Assemble the loop: connector(0 -> V1), flow(V1), ..., connector(Vk -> -Vk),
        // flow(-Vk), ..., flow(-V1), connector(-V1 -> 0).
        let zero = vec![0.0; m];
        let neg = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| -x).collect() };
        let mut velocities: Vec<Vec<f64>> = Vec::new();
        velocities.extend(dirs.iter().cloned());
        velocities.extend(dirs.iter().rev().map(|v| neg(v)));
        let mut pieces: Vec<Piece> = Vec::new();
        let mut t = 0.0;
        let mut prev = zero.clone();
        for v in &velocities {
            let conn = connector(seg, &prev, v)?;
            pieces.extend(shift_pieces(&conn, t));
            t += seg;
            pieces.push(Piece {
                t0: t,
                t1: t + seg,
                coeffs: v.iter().map(|&x| vec![x]).collect(),
            });
            t += seg;
            prev = v.clone();
        }
        let conn = connector(seg, &prev, &zero)?;
        pieces.extend(shift_pieces(&conn, t));
        let control = ControlPath::new(pieces)?;
        let sup_norm = control.sup_norm();
        let curve = HorizontalCurve::anchored(control.clone());
        let (end, _) = curve.integrate(g, seg / 40.0)?;
        let endpoint_gauge = g.gauge(&end);
        let endpoint_residual = end.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        return Ok(ZeroPliableWitness {
            control,
            endpoint_gauge,
            endpoint_residual,
            jacobian_rank: rank,
            jacobian_sigma_min: sigma_min,
            sup_norm,
            flows: 2 * k,
        });
    }
    Err(Error::InvalidArgument(
        "no full-rank witness found within the configured attempts".into(),
    ))
}

// ---------------------------------------------------------------------------
// Reachability probe.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub vector: Vec<f64>,
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    pub separating: bool,
    /// "registered-functional" or "linear" when separating.
    pub method: Option<&'static str>,
    pub functional: Option<String>,
    pub direction: Option<Vec<f64>>,
    pub min_side: f64,
    pub max_side: f64,
    /// Depth of the anchor inside the endpoint cloud when no separation was
    /// found: minimum over probed directions of the maximal inner product.
    pub coverage_radius: Option<f64>,
    pub endpoints: Vec<Vec<f64>>,
}

/// Number of polynomial bump modes per control component.
const PROBE_MODES: usize = 5;
const PROBE_STEP: f64 = 2e-3;

fn probe_cloud(
    g: &Group,
    u_bar: &[f64],
    epsilon: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    let m = u_bar.len();
    let box_half = epsilon / PROBE_MODES as f64;
    let mut cloud = Vec::with_capacity(samples);
    for _ in 0..samples {
        let coeffs: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut c = vec![0.0; PROBE_MODES + 1];
                c[0] = u_bar[i];
                for ck in c.iter_mut().skip(1) {
                    *ck = rng.gen_range(-box_half..box_half);
                }
                c
            })
            .collect();
        let control = ControlPath::new(vec![Piece {
            t0: 0.0,
            t1: 1.0,
            coeffs,
        }])?;
        let curve = HorizontalCurve::anchored(control);
        let (end, _) = curve.integrate_magnus4(g, PROBE_STEP)?;
        cloud.push(end);
    }
    Ok(cloud)
}

fn one_sided(values: &[f64]) -> (bool, f64, f64) {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let delta = 1e-9 * (1.0 + max.abs().max(min.abs()));
    (min >= -delta && max >= 10.0 * delta, min, max)
}

pub fn reachability_probe(
    pg: &PresetGroup,
    x: &[f64],
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let a = &pg.algebra;
    let n = a.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let m = a.horizontal_dim();
    if x[m..].iter().any(|&c| c != 0.0) {
        return Err(Error::InvalidArgument(
            "the probe anchors at a horizontal vector".into(),
        ));
    }
    if !(epsilon > 0.0) || samples == 0 {
        return Err(Error::InvalidArgument(
            "epsilon must be positive and samples nonzero".into(),
        ));
    }
    let g = Group::new(a.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cloud = probe_cloud(&g, &x[..m], epsilon, samples, &mut rng)?;

    let report = |separating,
                  method,
                  functional: Option<String>,
                  direction,
                  min_side,
                  max_side,
                  coverage,
                  endpoints: &Vec<Vec<f64>>| ProbeReport {
        vector: x.to_vec(),
        epsilon,
        samples,
        seed,
        separating,
        method,
        functional,
        direction,
        min_side,
        max_side,
        coverage_radius: coverage,
        endpoints: endpoints.clone(),
    };

    // Preset-specific polynomial obstruction, applicable when the anchor is a
    // scalar multiple of the registered direction.
    for ob in &pg.obstructions {
        let lambda = x[ob.anchor];
        let on_axis =
            lambda != 0.0 && (0..m).all(|i| i == ob.anchor || x[i] == 0.0);
        if !on_axis {
            continue;
        }
        let sign = lambda.signum();
        let values: Vec<f64> = cloud.iter().map(|e| sign * (ob.eval)(e)).collect();
        let (sep, min_side, max_side) = one_sided(&values);
        if sep {
            // Gradient of the signed functional at the anchor endpoint exp(X).
            let h = 1e-6 * (1.0 + g.gauge(x));
            let mut grad = vec![0.0; n];
            for i in 0..n {
                let mut p = x.to_vec();
                let mut q = x.to_vec();
                p[i] += h;
                q[i] -= h;
                grad[i] = sign * ((ob.eval)(&p) - (ob.eval)(&q)) / (2.0 * h);
            }
            let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            for v in grad.iter_mut() {
                *v /= norm;
            }
            return Ok(report(
                true,
                Some("registered-functional"),
                Some(ob.name.to_string()),
                Some(grad),
                min_side,
                max_side,
                None,
                &cloud,
            ));
        }
    }

    // Linear scan in the chart centered at exp(X): coordinate axes plus
    // random directions; the same set doubles as the support-function grid
    // for the coverage radius.
    let chart: Vec<Vec<f64>> = cloud
        .iter()
        .map(|e| e.iter().zip(x).map(|(a, b)| a - b).collect())
        .collect();
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[i] = s;
            directions.push(d);
        }
    }
    for _ in 0..64 {
        let mut d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
        for v in d.iter_mut() {
            *v /= norm;
        }
        directions.push(d);
    }
    let mut coverage = f64::INFINITY;
    for dir in &directions {
        let values: Vec<f64> = chart
            .iter()
            .map(|v| v.iter().zip(dir).map(|(a, b)| a * b).sum())
            .collect();
        let (sep, min_side, max_side) = one_sided(&values);
        if sep {
            return Ok(report(
                true,
                Some("linear"),
                None,
                Some(dir.clone()),
                min_side,
                max_side,
                None,
                &cloud,
            ));
        }
        coverage = coverage.min(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(report(
        false,
        None,
        None,
        None,
        f64::NAN,
        f64::NAN,
        Some(coverage),
        &cloud,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;
    use crate::scalar::rat;

    fn vec_of(n: usize, entries: &[(usize, i64)]) -> LieVector<Rat> {
        let mut v = LieVector::zero(n);
        for &(i, c) in entries {
            v.0[i] = rat(c);
        }
        v
    }

    #[test]
    fn no_abnormal_certificate_matches_family() {
        let h = preset("heisenberg:1").unwrap().algebra;
        assert!(no_abnormal_certificate(&h, &vec_of(3, &[(0, 1)])).unwrap());
        let e = preset("engel").unwrap().algebra;
        assert!(!no_abnormal_certificate(&e, &vec_of(4, &[(0, 1)])).unwrap());
        assert!(!no_abnormal_certificate(&e, &LieVector::zero(4)).unwrap());
    }

    #[test]
    fn step_two_presets_pass_bianchini_stefani() {
        for spec in ["heisenberg:1", "heisenberg:2", "free:3:2", "freequot:2"] {
            let a = preset(spec).unwrap().algebra;
            let n = a.dim();
            for x in [
                LieVector::zero(n),
                vec_of(n, &[(0, 1)]),
                vec_of(n, &[(0, 2), (1, -3)]),
            ] {
                let r = bianchini_stefani(&a, &x, None).unwrap();
                assert!(r.pliable, "{spec}: {r:?}");
                assert!(r.stabilized);
            }
        }
    }

    #[test]
    fn freequot3_passes_bianchini_stefani() {
        let a = preset("freequot:3").unwrap().algebra;
        for x in [
            vec_of(8, &[(0, 1)]),
            vec_of(8, &[(1, 1)]),
            vec_of(8, &[(0, 2), (1, -1), (2, 3)]),
            LieVector::zero(8),
        ] {
            let r = bianchini_stefani(&a, &x, None).unwrap();
            assert!(r.pliable, "{r:?}");
        }
    }

    #[test]
    fn engel_and_superengel_are_inconclusive() {
        let e = preset("engel").unwrap().algebra;
        let r = bianchini_stefani(&e, &vec_of(4, &[(0, 1)]), None).unwrap();
        assert!(!r.pliable);
        assert!(r.offender.is_some(), "an even bracket must fail: {r:?}");
        let s = preset("superengel").unwrap().algebra;
        let r = bianchini_stefani(&s, &vec_of(6, &[(2, 1)]), None).unwrap();
        assert!(!r.pliable);
        assert!(r.offender.is_some());
    }

    #[test]
    fn bianchini_stefani_is_scale_invariant() {
        let a = preset("freequot:3").unwrap().algebra;
        let base = bianchini_stefani(&a, &vec_of(8, &[(0, 1), (1, 1)]), None)
            .unwrap()
            .pliable;
        for lambda in [2, -1, -5] {
            let x = vec_of(8, &[(0, lambda), (1, lambda)]);
            assert_eq!(
                bianchini_stefani(&a, &x, None).unwrap().pliable,
                base,
                "lambda = {lambda}"
            );
        }
    }

    #[test]
    fn pipeline_certificates() {
        let h = preset("heisenberg:2").unwrap().algebra;
        let v = pliability_test(&h, &vec_of(5, &[(0, 1), (2, -2)]), None).unwrap();
        assert_eq!(v.tag, PliabilityTag::Pliable);
        assert_eq!(v.certificate, Certificate::NoAbnormalLift);

        let v = pliability_test(&h, &LieVector::zero(5), None).unwrap();
        assert_eq!(v.certificate, Certificate::ZeroVector);

        let f = preset("freequot:3").unwrap().algebra;
        let v = pliability_test(&f, &vec_of(8, &[(0, 1), (2, 2)]), None).unwrap();
        assert_eq!(v.tag, PliabilityTag::Pliable);

        let e = preset("engel").unwrap().algebra;
        let v = pliability_test(&e, &vec_of(4, &[(0, 1)]), None).unwrap();
        assert_eq!(v.tag, PliabilityTag::NotPliable);
        assert_eq!(v.certificate, Certificate::RigidHenceNotPliable);

        let s = preset("superengel").unwrap().algebra;
        let v = pliability_test(&s, &vec_of(6, &[(2, 1)]), None).unwrap();
        assert_eq!(v.tag, PliabilityTag::Unknown);
        assert_eq!(v.certificate, Certificate::ProbeEvidenceOnly);
    }

    #[test]
    fn zero_witness_on_heisenberg() {
        let g = Group::new(preset("heisenberg:1").unwrap().algebra);
        let w = zero_pliable_witness(&g, 0.1, 5).unwrap();
        assert_eq!(w.jacobian_rank, 3);
        assert!(w.jacobian_sigma_min > 0.0);
        assert!(w.sup_norm < 0.1, "sup norm {}", w.sup_norm);
        assert!(w.endpoint_residual < 1e-12, "residual {}", w.endpoint_residual);
        assert!(w.endpoint_gauge < 1e-6, "gauge {}", w.endpoint_gauge);
        assert!(w.control.continuity() != crate::curve::Continuity::Discontinuous);
    }

    #[test]
    fn zero_witness_on_engel() {
        let g = Group::new(preset("engel").unwrap().algebra);
        let w = zero_pliable_witness(&g, 0.25, 1).unwrap();
        assert_eq!(w.jacobian_rank, 4);
        assert!(w.sup_norm < 0.25);
        assert!(w.endpoint_residual < 1e-12, "residual {}", w.endpoint_residual);
    }

    #[test]
    fn probe_finds_obstruction_on_superengel() {
        let pg = preset("superengel").unwrap();
        let x = vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let r = reachability_probe(&pg, &x, 0.1, 200, 42).unwrap();
        assert!(r.separating);
        assert_eq!(r.method, Some("registered-functional"));
        let dir = r.direction.unwrap();
        assert!(dir[5] > 0.9, "direction concentrates on the top layer: {dir:?}");
        assert!(r.min_side >= -1e-9);
        assert!(r.max_side > 1e-6);
    }

    #[test]
    fn probe_sees_no_obstruction_on_heisenberg() {
        let pg = preset("heisenberg:1").unwrap();
        let x = vec![1.0, 0.0, 0.0];
        let r = reachability_probe(&pg, &x, 0.1, 200, 4).unwrap();
        assert!(!r.separating);
        assert!(r.coverage_radius.unwrap() > 0.0);
    }

    #[test]
    fn probe_on_abelian_plane_is_interior() {
        let pg = preset("free:2:1").unwrap();
        let r = reachability_probe(&pg, &[0.5, -0.25], 0.1, 200, 9).unwrap();
        assert!(!r.separating);
        assert!(r.coverage_radius.unwrap() > 0.0);
    }


    #[test]
    fn registered_functionals_match_their_quadratures() {
        // superengel: h(endpoint) = integral of u_z * y^2 along the curve;
        // engel: h(endpoint) = 1/2 * integral of u_x * y^2.
        let cases: [(&str, usize, Vec<Vec<f64>>, f64); 2] = [
            (
                "superengel",
                2,
                vec![
                    vec![0.0, 0.05, -0.02],
                    vec![0.0, 0.12, -0.04, 0.03],
                    vec![1.0, 0.08, 0.05],
                ],
                1.0,
            ),
            (
                "engel",
                0,
                vec![vec![1.0, 0.07, -0.03], vec![0.0, 0.15, -0.1, 0.02]],
                0.5,
            ),
        ];
        for (spec, uz_index, coeffs, factor) in cases {
            let pg = preset(spec).unwrap();
            let ob = pg
                .obstructions
                .iter()
                .find(|o| o.anchor == uz_index)
                .unwrap();
            let g = Group::new(pg.algebra.clone());
            let control = ControlPath::new(vec![Piece {
                t0: 0.0,
                t1: 1.0,
                coeffs,
            }])
            .unwrap();
            let curve = HorizontalCurve::anchored(control.clone());
            let (end, samples) = curve.integrate(&g, 2e-4).unwrap();
            let mut quad = 0.0;
            for w in samples.windows(2) {
                let (t0, ref p0) = w[0];
                let (t1, ref p1) = w[1];
                let f0 = control.eval(t0)[uz_index] * p0[1] * p0[1];
                let f1 = control.eval(t1)[uz_index] * p1[1] * p1[1];
                quad += 0.5 * (f0 + f1) * (t1 - t0);
            }
            quad *= factor;
            let h_val = (ob.eval)(&end);
            assert!(
                (h_val - quad).abs() < 1e-6,
                "{spec}: functional {} vs quadrature {}",
                h_val,
                quad
            );
        }
    }

    #[test]
    fn probe_is_seed_stable_in_verdict() {
        let pg = preset("superengel").unwrap();
        let x = vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        for seed in 0..5 {
            let r = reachability_probe(&pg, &x, 0.1, 120, seed).unwrap();
            assert!(r.separating, "seed {seed}");
            assert!(r.direction.unwrap()[5] > 0.0, "seed {seed}");
        }
    }
}
