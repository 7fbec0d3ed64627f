//! Shared fixtures and independent oracles for the integration suites.
//! Oracles here deliberately avoid the library code paths they check.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rauzy_core::projective::apply_projective;
use rauzy_core::rng::stream_rng;
use rauzy_core::{
    expand, stopping_decomposition, CarriedPolytope, NonclassicalExchange, Scalar,
    TransitionMatrix, WeightVector,
};

/// Exchanges (n ≤ 6) exercised by the suites: classical interval exchanges
/// plus non-classical shapes, including mortal ones whose expansions
/// terminate early by design.
pub fn fixture_exchanges() -> Vec<NonclassicalExchange> {
    [
        "a b | b a",
        "a b c | c b a",
        "a b c d | d c b a",
        "a b c d e | e d c b a",
        "a b a c | c d b d",
        "a a b | b c c",
    ]
    .iter()
    .map(|t| NonclassicalExchange::parse(t).expect("fixture"))
    .collect()
}

/// Interior carried point with ~`bits` of entropy per barycentric
/// coordinate, exact. High entropy keeps exact expansions alive well past
/// the horizon the matrix-relation checks need.
pub fn rational_interior_point(
    poly: &CarriedPolytope,
    rng: &mut ChaCha8Rng,
    bits: u64,
) -> WeightVector<BigRational> {
    let verts = poly.vertices();
    let lams: Vec<BigInt> = (0..verts.len())
        .map(|_| {
            let mut acc = BigInt::one();
            let mut remaining = bits;
            while remaining > 0 {
                let chunk = remaining.min(32);
                acc = (acc << chunk) + BigInt::from(rng.gen::<u32>() >> (32 - chunk));
                remaining -= chunk;
            }
            acc
        })
        .collect();
    let total: BigInt = lams.iter().sum();
    let n = poly.exchange().size();
    let mut values = vec![BigRational::zero(); n];
    for (lam, vert) in lams.iter().zip(verts) {
        let coef = BigRational::new(lam.clone(), total.clone());
        for (out, v) in values.iter_mut().zip(vert.values()) {
            *out += coef.clone() * v.clone();
        }
    }
    WeightVector::new(poly.exchange().alphabet().clone(), values).expect("sized")
}

/// Orthonormal frame of the polytope's direction space (Gram–Schmidt over
/// the vertex differences, in doubles).
pub fn hull_frame(poly: &CarriedPolytope) -> Vec<Vec<f64>> {
    let verts = poly.vertices();
    let n = poly.exchange().size();
    let mut frame: Vec<Vec<f64>> = Vec::new();
    for v in &verts[1..] {
        let mut dir: Vec<f64> = v
            .values()
            .iter()
            .zip(verts[0].values())
            .map(|(a, b)| Scalar::to_f64(a) - Scalar::to_f64(b))
            .collect();
        for basis in &frame {
            let dot: f64 = dir.iter().zip(basis).map(|(a, b)| a * b).sum();
            for (d, b) in dir.iter_mut().zip(basis) {
                *d -= dot * b;
            }
        }
        let norm: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            for d in dir.iter_mut() {
                *d /= norm;
            }
            frame.push(dir);
        }
    }
    assert_eq!(frame.len(), poly.dimension(), "frame spans the hull");
    let _ = n;
    frame
}

fn det_f64(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col].abs() < 1e-300 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                let sub = f * m[col][k];
                m[row][k] -= sub;
            }
        }
    }
    det
}

/// Independent centered finite-difference Jacobian of the normalized map
/// restricted to the polytope: the m-volume scaling factor of `T_Q` at `x`,
/// measured with metric volumes through an orthonormal frame of the hull.
pub fn fd_jacobian(
    q: &TransitionMatrix,
    poly: &CarriedPolytope,
    frame: &[Vec<f64>],
    x: &WeightVector<f64>,
    h: f64,
) -> f64 {
    let alphabet = poly.exchange().alphabet().clone();
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(frame.len());
    for dir in frame {
        let shift = |sign: f64| -> Vec<f64> {
            x.values()
                .iter()
                .zip(dir)
                .map(|(v, d)| v + sign * h * d)
                .collect()
        };
        let plus = apply_projective(
            q,
            &WeightVector::new(alphabet.clone(), shift(1.0)).unwrap(),
        )
        .unwrap();
        let minus = apply_projective(
            q,
            &WeightVector::new(alphabet.clone(), shift(-1.0)).unwrap(),
        )
        .unwrap();
        images.push(
            plus.values()
                .iter()
                .zip(minus.values())
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect(),
        );
    }
    let m = images.len();
    let mut gram = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            gram[i][j] = images[i].iter().zip(&images[j]).map(|(a, b)| a * b).sum();
        }
    }
    det_f64(gram).abs().sqrt()
}

/// Interior sample bounded away from the polytope boundary so centered
/// differences stay inside.
pub fn interior_sample(poly: &CarriedPolytope, rng: &mut ChaCha8Rng) -> WeightVector<f64> {
    loop {
        let x: WeightVector<f64> = poly.sample(rng);
        // convex combination with the centroid keeps a margin
        let centroid = poly.centroid();
        let values: Vec<f64> = x
            .values()
            .iter()
            .zip(centroid.values())
            .map(|(a, c)| 0.7 * a + 0.3 * Scalar::to_f64(c))
            .collect();
        let w = WeightVector::new(poly.exchange().alphabet().clone(), values).unwrap();
        if w.values().iter().all(|&v| v > 1e-4) || poly.dimension() == 0 {
            return w;
        }
    }
}

/// A harvested stage: matrix, its domain polytope, and the exponent taken
/// from the stage's target polytope.
pub struct Stage {
    pub matrix: TransitionMatrix,
    pub domain: CarriedPolytope,
    #[allow(dead_code)] // not every suite consumes the exponent
    pub exponent: u32,
}

/// Harvests stages from seeded expansions across the fixtures until `count`
/// stages are collected.
pub fn harvest_stages(c: f64, count: usize) -> Vec<Stage> {
    let mut stages = Vec::new();
    let exchanges = fixture_exchanges();
    'outer: for seed in 0..200u64 {
        for ex in &exchanges {
            let poly = CarriedPolytope::of(ex).unwrap();
            let w: WeightVector<f64> = poly.sample(&mut stream_rng(9000 + seed, seed));
            let trace = expand(ex, &w, 400);
            let dec = stopping_decomposition(&trace, c);
            for (i, matrix) in dec.stage_matrices.iter().enumerate() {
                let end = dec.stop_indices[i + 1];
                let start = dec.stop_indices[i];
                let domain = CarriedPolytope::of(trace.exchange_at(end)).unwrap();
                let target = CarriedPolytope::of(trace.exchange_at(start)).unwrap();
                stages.push(Stage {
                    matrix: matrix.clone(),
                    domain,
                    exponent: target.exponent(),
                });
                if stages.len() >= count {
                    break 'outer;
                }
            }
        }
    }
    assert!(stages.len() >= count, "harvested only {}", stages.len());
    stages
}

/// Uniform grid-ish sample of `count` points used by distortion sweeps.
pub fn polytope_points(
    poly: &CarriedPolytope,
    count: usize,
    seed: u64,
) -> Vec<WeightVector<f64>> {
    let mut rng = stream_rng(seed, 0);
    (0..count).map(|_| poly.sample(&mut rng)).collect()
}
