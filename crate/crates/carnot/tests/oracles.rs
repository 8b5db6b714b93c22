//! Cross-checks against independently coded models: the Witt dimension
//! formula, the 3×3 matrix realization of the Heisenberg group, the classical
//! low-order commutator series, and a plain Runge–Kutta integrator.

use carnot::curve::{ControlPath, HorizontalCurve, Piece};
use carnot::scalar::ratio;
use carnot::{preset, Group, LieVectorQ, Rat};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn group(spec: &str) -> Group {
    Group::new(preset(spec).unwrap().algebra)
}

fn random_rat(rng: &mut ChaCha8Rng) -> Rat {
    ratio(rng.gen_range(-6..=6), rng.gen_range(1..=3))
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> LieVectorQ {
    let mut v = LieVectorQ::zero(dim);
    for c in v.0.iter_mut() {
        *c = random_rat(rng);
    }
    v
}

/// Number of necklaces `(1/n) Σ_{d|n} μ(d) m^{n/d}` counting a Hall basis of
/// the degree-`n` layer on `m` generators.
fn witt(m: u64, n: u64) -> u64 {
    let mobius = |mut k: u64| -> i64 {
        let mut mu = 1i64;
        let mut p = 2;
        while p * p <= k {
            if k.is_multiple_of(p) {
                k /= p;
                if k.is_multiple_of(p) {
                    return 0;
                }
                mu = -mu;
            }
            p += 1;
        }
        if k > 1 {
            mu = -mu;
        }
        mu
    };
    let mut total = 0i64;
    for d in 1..=n {
        if n.is_multiple_of(d) {
            total += mobius(d) * (m.pow((n / d) as u32) as i64);
        }
    }
    (total / n as i64) as u64
}

#[test]
fn witt_formula_predicts_free_layer_dimensions() {
    for (m, s) in [(2, 2), (2, 3), (2, 4), (2, 5), (3, 2), (3, 3), (4, 2)] {
        let a = preset(&format!("free:{m}:{s}")).unwrap().algebra;
        let dims = a.layer_dims();
        assert_eq!(dims.len(), s);
        for (k, d) in dims.iter().enumerate() {
            assert_eq!(
                *d as u64,
                witt(m as u64, (k + 1) as u64),
                "free:{m}:{s} layer {}",
                k + 1
            );
        }
    }
}

#[test]
fn heisenberg_product_matches_closed_form() {
    // (a₁,a₂,c)·(b₁,b₂,d) = (a₁+b₁, a₂+b₂, c+d+(a₁b₂−a₂b₁)/2)
    let g = group("heisenberg:1");
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let half = ratio(1, 2);
    for _ in 0..200 {
        let x = random_vec(&mut rng, 3);
        let y = random_vec(&mut rng, 3);
        let z = g.product(&x, &y);
        let cross = (x.0[0].clone() * y.0[1].clone() - x.0[1].clone() * y.0[0].clone())
            * half.clone();
        assert_eq!(z.0[0], x.0[0].clone() + y.0[0].clone());
        assert_eq!(z.0[1], x.0[1].clone() + y.0[1].clone());
        assert_eq!(z.0[2], x.0[2].clone() + y.0[2].clone() + cross);
    }
}

/// Strictly upper-triangular 3×3 matrices: exp sends `(p,q,r)` (coefficients
/// of E₁₂, E₂₃, E₁₃) to the unitriangular matrix with entries `p`, `q`,
/// `r + pq/2`; matrix multiplication must agree with the group product.
#[test]
fn heisenberg_product_matches_matrix_model() {
    let g = group("heisenberg:1");
    let half = ratio(1, 2);
    let to_matrix = |v: &LieVectorQ| -> [Rat; 3] {
        [
            v.0[0].clone(),
            v.0[1].clone(),
            v.0[2].clone() + v.0[0].clone() * v.0[1].clone() * half.clone(),
        ]
    };
    let from_matrix = |m: &[Rat; 3]| -> LieVectorQ {
        let mut v = LieVectorQ::zero(3);
        v.0[0] = m[0].clone();
        v.0[1] = m[1].clone();
        v.0[2] = m[2].clone() - m[0].clone() * m[1].clone() * half.clone();
        v
    };
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..200 {
        let x = random_vec(&mut rng, 3);
        let y = random_vec(&mut rng, 3);
        let (a, b) = (to_matrix(&x), to_matrix(&y));
        // (I + A)(I + B) for strictly upper triangular A, B.
        let prod = [
            a[0].clone() + b[0].clone(),
            a[1].clone() + b[1].clone(),
            a[2].clone() + b[2].clone() + a[0].clone() * b[1].clone(),
        ];
        assert_eq!(g.product(&x, &y), from_matrix(&prod));
    }
}

/// `log(e^X e^Y) = X + Y + ½[X,Y] + 1/12([X,[X,Y]] + [Y,[Y,X]])
///  − 1/24 [Y,[X,[X,Y]]] + …`, checked exactly through degree 4 on the free
/// algebra, where no relation can hide a wrong coefficient.
#[test]
fn product_of_generators_matches_classical_series() {
    for (spec, step) in [("free:2:3", 3usize), ("free:2:4", 4)] {
        let pg = preset(spec).unwrap();
        let g = Group::new(pg.algebra);
        let a = g.algebra();
        let n = a.dim();
        let x = LieVectorQ::basis(n, 0);
        let y = LieVectorQ::basis(n, 1);
        let xy = a.bracket(&x, &y);

        let mut expected = LieVectorQ::zero(n);
        expected.add_scaled(&Rat::one(), &x);
        expected.add_scaled(&Rat::one(), &y);
        expected.add_scaled(&ratio(1, 2), &xy);
        expected.add_scaled(&ratio(1, 12), &a.bracket(&x, &xy));
        expected.add_scaled(&ratio(1, 12), &a.bracket(&y, &a.bracket(&y, &x)));
        if step >= 4 {
            let xxy = a.bracket(&x, &xy);
            expected.add_scaled(&ratio(-1, 24), &a.bracket(&y, &xxy));
        }
        assert_eq!(g.product(&x, &y), expected, "{spec}");
    }
}

/// Fixed-step classical RK4 on the coordinate ODE
/// `ẋ = u₁, ẏ = u₂, ż = (x u₂ − y u₁)/2`.
fn rk4_endpoint(path: &ControlPath, h: f64) -> Vec<f64> {
    let (a, b) = path.domain();
    let field = |t: f64, s: &[f64]| -> [f64; 3] {
        let u = path.eval(t);
        [u[0], u[1], 0.5 * (s[0] * u[1] - s[1] * u[0])]
    };
    let mut state = vec![0.0; 3];
    let steps = ((b - a) / h).ceil() as usize;
    let h = (b - a) / steps as f64;
    let mut t = a;
    for _ in 0..steps {
        let k1 = field(t, &state);
        let s2: Vec<f64> = (0..3).map(|i| state[i] + 0.5 * h * k1[i]).collect();
        let k2 = field(t + 0.5 * h, &s2);
        let s3: Vec<f64> = (0..3).map(|i| state[i] + 0.5 * h * k2[i]).collect();
        let k3 = field(t + 0.5 * h, &s3);
        let s4: Vec<f64> = (0..3).map(|i| state[i] + h * k3[i]).collect();
        let k4 = field(t + h, &s4);
        for i in 0..3 {
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
    state
}

#[test]
fn heisenberg_integrator_matches_textbook_rk4() {
    let g = group("heisenberg:1");
    let path = ControlPath::new(vec![Piece {
        t0: 0.0,
        t1: 1.0,
        coeffs: vec![vec![0.3, 1.1, -0.8, 0.25], vec![-0.5, 0.7, 0.4, -0.6]],
    }])
    .unwrap();
    let oracle = rk4_endpoint(&path, 1e-4);
    let curve = HorizontalCurve::anchored(path);
    let (end, _) = curve.integrate_magnus4(&g, 1e-3).unwrap();
    for i in 0..3 {
        assert!(
            (end[i] - oracle[i]).abs() < 1e-10,
            "coordinate {i}: {} vs {}",
            end[i],
            oracle[i]
        );
    }
}
