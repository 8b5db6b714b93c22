//! The group law in exponential coordinates of the first kind, dilations,
//! and the homogeneous gauge.
//!
//! Products are evaluated through a universal two-letter commutator table
//! (one per nilpotency step, cached process-wide): each Lyndon word of the
//! free step-`s` algebra on letters {x, y} is evaluated recursively via its
//! standard factorization, then combined with the exact expansion
//! coefficients of `log(exp(x) exp(y))`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{LieVector, StratifiedAlgebra};
use crate::lyndon::{self, Word};
use crate::scalar::{Rat, Scalar};
use crate::tensor::{lyndon_decompose, Series};

/// Evaluation plan for the composition series of one nilpotency step.
#[derive(Debug)]
struct BchPlan {
    /// Two-letter Lyndon words ordered by (length, lex).
    words: Vec<Word>,
    /// Positions of the standard factors of each non-letter word.
    factors: Vec<Option<(usize, usize)>>,
    /// Which word values feed the final combination.
    needed: Vec<bool>,
    coeffs: Vec<(usize, Rat)>,
    coeffs_f64: Vec<(usize, f64)>,
}

fn bch_plan(step: usize) -> Arc<BchPlan> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<BchPlan>>>> = OnceLock::new();
    let mut cache = PLANS.get_or_init(Default::default).lock().unwrap();
    if let Some(p) = cache.get(&step) {
        return p.clone();
    }
    let words = lyndon::lyndon_words(2, step, usize::MAX).expect("two-letter basis");
    let pos: HashMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let factors: Vec<Option<(usize, usize)>> = words
        .iter()
        .map(|w| {
            (w.len() > 1).then(|| {
                let (u, v) = lyndon::standard_factorization(w);
                (pos[&u], pos[&v])
            })
        })
        .collect();
    let x = Series::letter(step, 0);
    let y = Series::letter(step, 1);
    let z = x.exp().mul(&y.exp()).log();
    let coeffs: Vec<(usize, Rat)> = lyndon_decompose(&z)
        .into_iter()
        .map(|(w, c)| (pos[&w], c))
        .collect();
    let mut needed = vec![false; words.len()];
    let mut stack: Vec<usize> = coeffs.iter().map(|&(i, _)| i).collect();
    while let Some(i) = stack.pop() {
        if !needed[i] {
            needed[i] = true;
            if let Some((a, b)) = factors[i] {
                stack.push(a);
                stack.push(b);
            }
        }
    }
    let coeffs_f64 = coeffs.iter().map(|(i, c)| (*i, c.to_f64())).collect();
    let plan = Arc::new(BchPlan {
        words,
        factors,
        needed,
        coeffs,
        coeffs_f64,
    });
    cache.insert(step, plan.clone());
    plan
}

/// A Carnot group: a stratified algebra viewed through the exponential
/// chart, where the group operations act on Lie algebra coordinates.
#[derive(Debug, Clone)]
pub struct Group {
    algebra: Arc<StratifiedAlgebra>,
    plan: Arc<BchPlan>,
}

impl Group {
    pub fn new(algebra: StratifiedAlgebra) -> Self {
        Self::from_arc(Arc::new(algebra))
    }

    pub fn from_arc(algebra: Arc<StratifiedAlgebra>) -> Self {
        let plan = bch_plan(algebra.step());
        Group { algebra, plan }
    }

    pub fn algebra(&self) -> &StratifiedAlgebra {
        &self.algebra
    }

    pub fn algebra_arc(&self) -> Arc<StratifiedAlgebra> {
        self.algebra.clone()
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn identity<S: Scalar>(&self) -> LieVector<S> {
        LieVector::zero(self.dim())
    }

    pub fn product<S: Scalar>(&self, x: &LieVector<S>, y: &LieVector<S>) -> LieVector<S> {
        let plan = &*self.plan;
        let mut vals: Vec<Option<LieVector<S>>> = vec![None; plan.words.len()];
        for i in 0..plan.words.len() {
            if !plan.needed[i] {
                continue;
            }
            vals[i] = Some(match plan.factors[i] {
                None => {
                    if plan.words[i][0] == 0 {
                        x.clone()
                    } else {
                        y.clone()
                    }
                }
                Some((a, b)) => self
                    .algebra
                    .bracket(vals[a].as_ref().unwrap(), vals[b].as_ref().unwrap()),
            });
        }
        let mut z = self.identity::<S>();
        for (i, c) in &plan.coeffs {
            z.add_scaled(&S::from_ratio(c), vals[*i].as_ref().unwrap());
        }
        z
    }

    /// Product on raw `f64` coordinates, for numeric hot loops.
    pub fn product_f64(&self, x: &[f64], y: &[f64], out: &mut Vec<f64>) {
        let plan = &*self.plan;
        let n = self.dim();
        let mut vals: Vec<Vec<f64>> = vec![Vec::new(); plan.words.len()];
        let mut buf = vec![0.0; n];
        for i in 0..plan.words.len() {
            if !plan.needed[i] {
                continue;
            }
            match plan.factors[i] {
                None => {
                    vals[i] = if plan.words[i][0] == 0 {
                        x.to_vec()
                    } else {
                        y.to_vec()
                    }
                }
                Some((a, b)) => {
                    self.algebra.bracket_f64(&vals[a], &vals[b], &mut buf);
                    vals[i] = buf.clone();
                }
            }
        }
        out.clear();
        out.resize(n, 0.0);
        for (i, c) in &plan.coeffs_f64 {
            for (o, v) in out.iter_mut().zip(&vals[*i]) {
                *o += c * v;
            }
        }
    }

    pub fn mul_f64(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        self.product_f64(x, y, &mut out);
        out
    }

    /// In first-kind coordinates the inverse is coordinate negation.
    pub fn inverse<S: Scalar>(&self, x: &LieVector<S>) -> LieVector<S> {
        -x
    }

    pub fn inverse_f64(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|c| -c).collect()
    }

    /// `y^{-1} x`, the left-invariant difference.
    pub fn left_difference_f64(&self, y: &[f64], x: &[f64]) -> Vec<f64> {
        self.mul_f64(&self.inverse_f64(y), x)
    }

    pub fn dilate<S: Scalar>(&self, lambda: &S, x: &LieVector<S>) -> LieVector<S> {
        let mut out = x.clone();
        let mut pow = S::one();
        for k in 1..=self.algebra.step() {
            pow = pow * lambda.clone();
            for i in self.algebra.layer_range(k) {
                out.0[i] = out.0[i].clone() * pow.clone();
            }
        }
        out
    }

    pub fn dilate_f64(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        let mut pow = 1.0;
        for k in 1..=self.algebra.step() {
            pow *= lambda;
            for i in self.algebra.layer_range(k) {
                out[i] *= pow;
            }
        }
        out
    }

    /// Homogeneous gauge `max_k ||x_k||^{1/k}` with Euclidean layer norms.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let mut g: f64 = 0.0;
        for k in 1..=self.algebra.step() {
            let sq: f64 = self.algebra.layer_range(k).map(|i| x[i] * x[i]).sum();
            g = g.max(sq.sqrt().powf(1.0 / k as f64));
        }
        g
    }

    pub fn gauge_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.gauge(&self.left_difference_f64(x, y))
    }

    /// Euclidean norm of the horizontal part.
    pub fn horizontal_norm(&self, v: &[f64]) -> f64 {
        self.algebra
            .layer_range(1)
            .map(|i| v[i] * v[i])
            .sum::<f64>()
            .sqrt()
    }

    /// Random point of the gauge ball around `center`, radius-weighted by
    /// the homogeneous dimension.
    pub fn sample_gauge_ball(
        &self,
        rng: &mut impl Rng,
        center: &[f64],
        radius: f64,
    ) -> Vec<f64> {
        let n = self.dim();
        let q = self.algebra.homogeneous_dim() as f64;
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = self.gauge(&v);
            if g > 1e-3 {
                let u: f64 = rng.gen_range(0.0f64..1.0);
                let w = self.dilate_f64(radius * u.powf(1.0 / q) / g, &v);
                return self.mul_f64(center, &w);
            }
        }
    }

    /// Monte-Carlo estimate of the largest shrink-and-translate tolerance
    /// for which the gauge ball of radius `r` stays inside the perturbed,
    /// slightly shrunk ball of radius `cap_r`. Diagnostic only.
    pub fn brick_constant(
        &self,
        x: &[f64],
        r: f64,
        cap_r: f64,
        samples: usize,
        seed: u64,
    ) -> f64 {
        assert!(0.0 < r && r < cap_r);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = 0.5f64;
        for _ in 0..samples {
            let p = self.sample_gauge_ball(&mut rng, x, r);
            let y = self.sample_gauge_ball(&mut rng, &vec![0.0; self.dim()], 1.0);
            let z = self.sample_gauge_ball(&mut rng, &vec![0.0; self.dim()], 1.0);
            // Inclusion test at tolerance eps: with y, z scaled to gauge eps
            // and rho = eps, the pulled-back point must stay within cap_r.
            let ok = |eps: f64| -> bool {
                let ys = self.dilate_f64(eps, &y);
                let zs = self.dilate_f64(eps, &z);
                let t = self.mul_f64(
                    &self.mul_f64(&self.inverse_f64(&ys), &p),
                    &self.inverse_f64(&zs),
                );
                let t = self.dilate_f64(1.0 / (1.0 - eps), &t);
                self.gauge_distance(x, &t) <= cap_r
            };
            if !ok(1e-6) {
                return 0.0;
            }
            let (mut lo, mut hi) = (1e-6, 0.5f64);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            best = best.min(lo);
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;
    use crate::scalar::{rat, ratio};

    fn lie(c: &[Rat]) -> LieVector<Rat> {
        LieVector(c.to_vec())
    }

    fn rats(c: &[i64]) -> LieVector<Rat> {
        LieVector(c.iter().map(|&v| rat(v)).collect())
    }

    fn random_rat(rng: &mut impl Rng) -> Rat {
        ratio(rng.gen_range(-6..=6), rng.gen_range(1..=4))
    }

    fn random_vec(rng: &mut impl Rng, n: usize) -> LieVector<Rat> {
        LieVector((0..n).map(|_| random_rat(rng)).collect())
    }

    #[test]
    fn heisenberg_product_and_inverse() {
        let g = Group::new(preset("heisenberg:1").unwrap().algebra);
        let p = g.product(&rats(&[1, 0, 0]), &rats(&[0, 1, 0]));
        assert_eq!(p, lie(&[rat(1), rat(1), ratio(1, 2)]));
        assert_eq!(g.inverse(&p), lie(&[rat(-1), rat(-1), ratio(-1, 2)]));
        assert!(g.product(&p, &g.inverse(&p)).is_zero());
        assert_eq!(g.product(&p, &g.identity()), p);
    }

    #[test]
    fn step_two_closed_form() {
        let g = Group::new(preset("heisenberg:2").unwrap().algebra);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = random_vec(&mut rng, 5);
            let y = random_vec(&mut rng, 5);
            let mut expect = &x + &y;
            expect.add_scaled(&ratio(1, 2), &g.algebra().bracket(&x, &y));
            assert_eq!(g.product(&x, &y), expect);
        }
    }

    #[test]
    fn commutator_identity_at_step_two() {
        let g = Group::new(preset("free:2:2").unwrap().algebra);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_vec(&mut rng, 3);
            let y = random_vec(&mut rng, 3);
            let lhs = g.product(
                &g.product(&g.product(&x, &y), &g.inverse(&x)),
                &g.inverse(&y),
            );
            assert_eq!(lhs, g.algebra().bracket(&x, &y));
        }
    }

    #[test]
    fn bch_coefficients_step_three() {
        let g = Group::new(preset("free:2:3").unwrap().algebra);
        let z = g.product(&rats(&[1, 0, 0, 0, 0]), &rats(&[0, 1, 0, 0, 0]));
        assert_eq!(
            z,
            lie(&[rat(1), rat(1), ratio(1, 2), ratio(1, 12), ratio(1, 12)])
        );
    }

    #[test]
    fn associativity_exact() {
        for name in ["engel", "superengel", "free:2:4"] {
            let g = Group::new(preset(name).unwrap().algebra);
            let n = g.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..20 {
                let (x, y, z) = (
                    random_vec(&mut rng, n),
                    random_vec(&mut rng, n),
                    random_vec(&mut rng, n),
                );
                assert_eq!(
                    g.product(&g.product(&x, &y), &z),
                    g.product(&x, &g.product(&y, &z))
                );
            }
        }
    }

    #[test]
    fn dilations_are_homomorphisms() {
        let g = Group::new(preset("engel").unwrap().algebra);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = random_vec(&mut rng, 4);
            let y = random_vec(&mut rng, 4);
            let l = random_rat(&mut rng);
            let m = random_rat(&mut rng);
            assert_eq!(
                g.dilate(&l, &g.product(&x, &y)),
                g.product(&g.dilate(&l, &x), &g.dilate(&l, &y))
            );
            assert_eq!(
                g.dilate(&l, &g.dilate(&m, &x)),
                g.dilate(&(l.clone() * m.clone()), &x)
            );
        }
        assert_eq!(g.dilate(&rat(1), &rats(&[1, 2, 3, 4])), rats(&[1, 2, 3, 4]));
        assert!(g.dilate(&rat(0), &rats(&[1, 2, 3, 4])).is_zero());
    }

    #[test]
    fn heisenberg_dilation_weights() {
        let g = Group::new(preset("heisenberg:1").unwrap().algebra);
        let x = lie(&[rat(1), rat(1), ratio(1, 2)]);
        assert_eq!(g.dilate(&rat(2), &x), rats(&[2, 2, 2]));
    }

    #[test]
    fn gauge_values_and_homogeneity() {
        let g = Group::new(preset("heisenberg:1").unwrap().algebra);
        assert_eq!(g.gauge(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(g.gauge(&[3.0, 4.0, 0.0]), 5.0);
        assert_eq!(g.gauge(&[0.0, 0.0, 4.0]), 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let l: f64 = rng.gen_range(0.1..3.0);
            let lhs = g.gauge(&g.dilate_f64(l, &x));
            let rhs = l * g.gauge(&x);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
    }

    #[test]
    fn gauge_distance_along_one_parameter_lines() {
        let g = Group::new(preset("engel").unwrap().algebra);
        let zero = vec![0.0; 4];
        for t in [0.25, 1.0, 3.0] {
            let p = [2.0 * t, 1.0 * t, 0.0, 0.0];
            let speed = (5.0f64).sqrt();
            assert!((g.gauge_distance(&zero, &p) - t * speed).abs() < 1e-12);
        }
        let x = [0.3, -0.7, 0.2, 0.05];
        assert_eq!(g.gauge_distance(&x, &x), 0.0);
    }

    #[test]
    fn f64_product_matches_exact() {
        let g = Group::new(preset("free:2:5").unwrap().algebra);
        let n = g.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let x = random_vec(&mut rng, n);
            let y = random_vec(&mut rng, n);
            let exact = g.product(&x, &y).to_f64();
            let approx = g.mul_f64(&x.to_f64(), &y.to_f64());
            for (a, b) in exact.0.iter().zip(&approx) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn brick_constant_is_positive_on_small_balls() {
        let g = Group::new(preset("heisenberg:1").unwrap().algebra);
        let eps = g.brick_constant(&[0.5, -0.2, 0.1], 0.5, 1.0, 25, 42);
        assert!(eps > 0.0, "estimate {eps}");
    }
}
