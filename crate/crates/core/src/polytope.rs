//! Carried weight polytopes.
//!
//! For a single-switch exchange the carried cone is cut out by one switch
//! equation `d · w = 0` (entries of `d` in {−2, 0, 2}) together with
//! nonnegativity; normalizing to total weight one gives a polytope whose
//! vertices have support of size at most two. Vertices are enumerated
//! exactly, the dimension is computed from the affine hull (never assumed),
//! and uniform sampling goes through an exact simplicial triangulation with
//! volume-weighted simplex choice and uniform barycentric coordinates.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::exchange::NonclassicalExchange;
use crate::numeric::Scalar;
use crate::rng::{stream_rng, uniform_barycentric};
use crate::weights::WeightVector;

#[derive(Debug)]
pub struct CarriedPolytope {
    exchange: NonclassicalExchange,
    vertices: Vec<WeightVector<BigRational>>,
    dimension: usize,
    triangulation: OnceLock<Triangulation>,
}

/// Simplicial decomposition of the polytope: vertex-index simplices plus
/// exact relative volumes (a common unknown scale factor links them to true
/// m-volumes, which is all weighted sampling needs).
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub simplices: Vec<Vec<usize>>,
    pub volumes: Vec<BigRational>,
}

/// Vertices of `{ w >= 0, d·w = 0, sum w = 1 }` as basic feasible solutions:
/// singletons where `d` vanishes and opposite-sign pairs.
pub(crate) fn cone_vertices(d: &[i64]) -> Vec<Vec<BigRational>> {
    let n = d.len();
    let mut vertices = Vec::new();
    for (k, &dk) in d.iter().enumerate() {
        if dk == 0 {
            let mut v = vec![BigRational::zero(); n];
            v[k] = BigRational::one();
            vertices.push(v);
        }
    }
    for (i, &di) in d.iter().enumerate() {
        if di <= 0 {
            continue;
        }
        for (j, &dj) in d.iter().enumerate() {
            if dj >= 0 {
                continue;
            }
            // Solve d_i w_i + d_j w_j = 0, w_i + w_j = 1.
            let span = BigRational::from_integer(BigInt::from(di - dj));
            let mut v = vec![BigRational::zero(); n];
            v[i] = BigRational::from_integer(BigInt::from(-dj)) / span.clone();
            v[j] = BigRational::from_integer(BigInt::from(di)) / span;
            vertices.push(v);
        }
    }
    vertices
}

/// Row echelon over the rationals; returns (rank, pivot columns).
fn echelon(rows: &mut Vec<Vec<BigRational>>) -> (usize, Vec<usize>) {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut pivots = Vec::new();
    for col in 0..ncols {
        let Some(pivot_row) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot_row);
        let pivot = rows[rank][col].clone();
        for r in rank + 1..rows.len() {
            if rows[r][col].is_zero() {
                continue;
            }
            let factor = rows[r][col].clone() / pivot.clone();
            for c in col..ncols {
                let sub = factor.clone() * rows[rank][c].clone();
                rows[r][c] -= sub;
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    (rank, pivots)
}

fn determinant_rational(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(pivot_row) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if pivot_row != col {
            m.swap(col, pivot_row);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det *= pivot.clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone() / pivot.clone();
            for c in col..n {
                let sub = factor.clone() * m[col][c].clone();
                m[r][c] -= sub;
            }
        }
    }
    det
}

impl CarriedPolytope {
    /// Exact vertex enumeration of the normalized carried weights.
    pub fn of(exchange: &NonclassicalExchange) -> Result<Self> {
        let d = exchange.switch_vector();
        let raw = cone_vertices(&d);
        if raw.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        let vertices: Vec<WeightVector<BigRational>> = raw
            .into_iter()
            .map(|v| WeightVector::new(exchange.alphabet().clone(), v).expect("by construction"))
            .collect();
        let dimension = affine_dimension(&vertices);
        Ok(CarriedPolytope {
            exchange: exchange.clone(),
            vertices,
            dimension,
            triangulation: OnceLock::new(),
        })
    }

    pub fn exchange(&self) -> &NonclassicalExchange {
        &self.exchange
    }

    pub fn vertices(&self) -> &[WeightVector<BigRational>] {
        &self.vertices
    }

    /// Affine dimension of the vertex hull, computed exactly.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Jacobian exponent for projective maps into this polytope.
    pub fn exponent(&self) -> u32 {
        self.dimension as u32 + 1
    }

    pub fn triangulation(&self) -> &Triangulation {
        self.triangulation.get_or_init(|| self.build_triangulation())
    }

    /// Staircase triangulation. The polytope is the join of the simplex on
    /// the once-per-row labels with (half of) the product of the simplices on
    /// the top-repeated and bottom-repeated labels; monotone lattice paths in
    /// that product give the maximal simplices, and joining each with the
    /// singleton block triangulates the whole polytope.
    fn build_triangulation(&self) -> Triangulation {
        let d = self.exchange.switch_vector();
        let singles: Vec<usize> = d
            .iter()
            .enumerate()
            .filter(|(_, &dk)| dk == 0)
            .map(|(k, _)| k)
            .collect();
        let tops: Vec<usize> = d
            .iter()
            .enumerate()
            .filter(|(_, &dk)| dk > 0)
            .map(|(k, _)| k)
            .collect();
        let bottoms: Vec<usize> = d
            .iter()
            .enumerate()
            .filter(|(_, &dk)| dk < 0)
            .map(|(k, _)| k)
            .collect();
        let z = singles.len();
        let (p, q) = (tops.len(), bottoms.len());
        // Vertex order produced by cone_vertices: singletons first, then
        // pairs in lexicographic (top, bottom) order.
        let pair_index = |ti: usize, bj: usize| z + ti * q + bj;

        let mut simplices: Vec<Vec<usize>> = Vec::new();
        if p == 0 || q == 0 {
            simplices.push((0..z).collect());
        } else {
            let mut path: Vec<(usize, usize)> = vec![(0, 0)];
            collect_paths(&mut path, p, q, &mut |cells| {
                let mut s: Vec<usize> = (0..z).collect();
                s.extend(cells.iter().map(|&(i, j)| pair_index(i, j)));
                simplices.push(s);
            });
        }

        let volumes = self.simplex_volumes(&simplices);
        Triangulation { simplices, volumes }
    }

    /// Relative m-volumes via an affine chart on the hull: project onto the
    /// pivot coordinates of the direction space and take determinants there.
    fn simplex_volumes(&self, simplices: &[Vec<usize>]) -> Vec<BigRational> {
        let m = self.dimension;
        if m == 0 {
            return vec![BigRational::one(); simplices.len()];
        }
        let base = &self.vertices[0];
        let mut dirs: Vec<Vec<BigRational>> = self.vertices[1..]
            .iter()
            .map(|v| {
                v.values()
                    .iter()
                    .zip(base.values())
                    .map(|(a, b)| a.clone() - b.clone())
                    .collect()
            })
            .collect();
        let (rank, pivots) = echelon(&mut dirs);
        debug_assert_eq!(rank, m);
        let chart = |v: &WeightVector<BigRational>| -> Vec<BigRational> {
            pivots.iter().map(|&c| v.values()[c].clone()).collect()
        };
        simplices
            .iter()
            .map(|s| {
                debug_assert_eq!(s.len(), m + 1);
                let origin = chart(&self.vertices[s[0]]);
                let edges: Vec<Vec<BigRational>> = s[1..]
                    .iter()
                    .map(|&k| {
                        chart(&self.vertices[k])
                            .into_iter()
                            .zip(origin.iter())
                            .map(|(a, b)| a - b.clone())
                            .collect()
                    })
                    .collect();
                Signed::abs(&determinant_rational(edges))
            })
            .collect()
    }

    /// Sum of exact relative volumes (common scale with the per-simplex
    /// volumes of [`Self::triangulation`]).
    pub fn relative_volume(&self) -> BigRational {
        self.triangulation().volumes.iter().cloned().sum()
    }

    /// Exact centroid: volume-weighted average of simplex centroids.
    pub fn centroid(&self) -> WeightVector<BigRational> {
        let tri = self.triangulation();
        let n = self.exchange.size();
        let mut acc = vec![BigRational::zero(); n];
        let mut total = BigRational::zero();
        for (s, vol) in tri.simplices.iter().zip(&tri.volumes) {
            let count = BigRational::from_integer(BigInt::from(s.len()));
            for &k in s {
                for (a, v) in acc.iter_mut().zip(self.vertices[k].values()) {
                    *a += vol.clone() * v.clone() / count.clone();
                }
            }
            total += vol.clone();
        }
        let values = acc.into_iter().map(|a| a / total.clone()).collect();
        WeightVector::new(self.exchange.alphabet().clone(), values).expect("alphabet sized")
    }

    /// Uniform (Lebesgue) sample. Vertices have dyadic coordinates, and the
    /// barycentric coordinates are renormalized exactly in the target mode,
    /// so the switch condition and the normalization hold exactly even in
    /// exact mode.
    pub fn sample<S: Scalar>(&self, rng: &mut impl Rng) -> WeightVector<S> {
        let tri = self.triangulation();
        let simplex = if tri.simplices.len() == 1 {
            &tri.simplices[0]
        } else {
            let weights: Vec<f64> = tri.volumes.iter().map(Scalar::to_f64).collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = tri.simplices.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            &tri.simplices[chosen]
        };
        let lam = uniform_barycentric(rng, simplex.len());
        let lam_s: Vec<S> = lam.iter().map(|&v| S::from_f64(v)).collect();
        let total = lam_s
            .iter()
            .fold(S::zero(), |acc, v| acc + v.clone());
        let n = self.exchange.size();
        let mut values = vec![S::zero(); n];
        for (coef, &k) in lam_s.iter().zip(simplex) {
            let coef = coef.clone() / total.clone();
            for (out, v) in values.iter_mut().zip(self.vertices[k].values()) {
                *out = out.clone() + coef.clone() * S::from_f64(v.to_f64());
            }
        }
        WeightVector::new(self.exchange.alphabet().clone(), values).expect("alphabet sized")
    }

    /// Deterministic seeded sample (substream 0 of `seed`).
    pub fn sample_seeded<S: Scalar>(&self, seed: u64) -> WeightVector<S> {
        self.sample(&mut stream_rng(seed, 0))
    }
}

fn affine_dimension(vertices: &[WeightVector<BigRational>]) -> usize {
    if vertices.len() <= 1 {
        return 0;
    }
    let base = &vertices[0];
    let mut dirs: Vec<Vec<BigRational>> = vertices[1..]
        .iter()
        .map(|v| {
            v.values()
                .iter()
                .zip(base.values())
                .map(|(a, b)| a.clone() - b.clone())
                .collect()
        })
        .collect();
    let (rank, _) = echelon(&mut dirs);
    rank
}

fn collect_paths(
    path: &mut Vec<(usize, usize)>,
    p: usize,
    q: usize,
    emit: &mut impl FnMut(&[(usize, usize)]),
) {
    let &(i, j) = path.last().expect("path starts at (0,0)");
    if i == p - 1 && j == q - 1 {
        emit(path);
        return;
    }
    if i + 1 < p {
        path.push((i + 1, j));
        collect_paths(path, p, q, emit);
        path.pop();
    }
    if j + 1 < q {
        path.push((i, j + 1));
        collect_paths(path, p, q, emit);
        path.pop();
    }
}

/// Convenience wrapper mirroring the operation vocabulary.
pub fn carried_polytope(exchange: &NonclassicalExchange) -> Result<CarriedPolytope> {
    CarriedPolytope::of(exchange)
}
