//! The parameterization of the Kimura 3-parameter variety in Fourier and
//! probability coordinates, its finite sign-flip symmetry group, fibers,
//! and the singular / biologically meaningful predicates.

use std::collections::HashSet;
use std::fmt::Debug;
use std::hash::Hash;
use std::ops::Neg;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num};
use rand::Rng;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::fourier::{EdgeParams, Frame, PatternDistribution, QVector};
use crate::group::{pattern_count, slice_patterns, Nucleotide, Pattern};
use crate::linalg::numeric_rank;
use crate::tree::Tree;

/// Number types the parameterization is generic over (`f64` and exact
/// rationals).
pub trait Scalar: Clone + PartialEq + Debug + Num + Neg<Output = Self> + Send + Sync {}

impl<T> Scalar for T where T: Clone + PartialEq + Debug + Num + Neg<Output = T> + Send + Sync {}

/// Exact rational scalar.
pub type Rational = BigRational;

/// Per-edge Fourier parameters `(P_A, P_C, P_G, P_T)` on a tree, one entry
/// per edge in the tree's canonical edge order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T = f64> {
    tree: Arc<Tree>,
    fourier: Vec<[T; 4]>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(tree: Arc<Tree>, fourier: Vec<[T; 4]>) -> Result<Self> {
        if fourier.len() != tree.edge_count() {
            return Err(Error::LengthMismatch { expected: tree.edge_count(), got: fourier.len() });
        }
        Ok(ModelParams { tree, fourier })
    }

    /// The same parameter vector on every edge.
    pub fn uniform(tree: Arc<Tree>, edge: [T; 4]) -> Self {
        let fourier = vec![edge; tree.edge_count()];
        ModelParams { tree, fourier }
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn shared_tree(&self) -> &Arc<Tree> {
        &self.tree
    }

    pub fn edge(&self, e: usize) -> &[T; 4] {
        &self.fourier[e]
    }

    pub fn edges(&self) -> &[[T; 4]] {
        &self.fourier
    }

    pub fn edges_mut(&mut self) -> &mut [[T; 4]] {
        &mut self.fourier
    }

    /// `q` at one slice pattern: the product of `P^e_{x_e}` over edges.
    pub fn q_at(&self, pattern: &Pattern) -> T {
        let t = &*self.tree;
        (0..t.edge_count()).fold(T::one(), |acc, e| {
            acc * self.fourier[e][t.edge_label(e, pattern).index()].clone()
        })
    }
}

impl ModelParams<f64> {
    /// Converts per-edge parameters from either frame.
    pub fn from_edge_params(tree: Arc<Tree>, edges: &[EdgeParams]) -> Result<Self> {
        let fourier = edges.iter().map(|e| e.to_fourier().coords).collect();
        ModelParams::new(tree, fourier)
    }

    pub fn edge_params(&self, e: usize) -> EdgeParams {
        EdgeParams { coords: self.fourier[e], frame: Frame::Fourier }
    }

    /// Exact rational copy (every finite `f64` is a dyadic rational).
    pub fn to_rational(&self) -> ModelParams<Rational> {
        let fourier = self
            .fourier
            .iter()
            .map(|p| p.map(|x| BigRational::from_f64(x).expect("finite parameter")))
            .collect();
        ModelParams { tree: self.tree.clone(), fourier }
    }
}

/// Rational from a small fraction.
pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Dense `4^n` vector of model coordinates, zero off the slice.
pub fn phi_values<T: Scalar>(params: &ModelParams<T>) -> Vec<T> {
    let n = params.tree().leaf_count();
    let mut out = vec![T::zero(); pattern_count(n)];
    for p in slice_patterns(n) {
        out[p.id()] = params.q_at(&p);
    }
    out
}

/// Fourier coordinates of the model point: `q = prod_e P^e_{x_e}` on the
/// slice, zero elsewhere.
pub fn phi(params: &ModelParams<f64>) -> QVector {
    QVector::new(phi_values(params)).expect("length is 4^n")
}

/// Joint leaf-pattern distribution by the Markov recursion in probability
/// coordinates, uniform root distribution, rooted at leaf position 0.
/// Independent of the Fourier route.
pub fn joint_probability(params: &ModelParams<f64>) -> PatternDistribution {
    let t = params.tree();
    let n = t.leaf_count();
    let mats: Vec<[[f64; 4]; 4]> = (0..t.edge_count())
        .map(|e| params.edge_params(e).substitution_matrix())
        .collect();

    // Postorder of (node, parent edge) for the tree hanging below leaf 0.
    let edge_between = |u: usize, v: usize| -> usize {
        *t.incident_edges(u)
            .iter()
            .find(|e| t.incident_edges(v).contains(e))
            .expect("adjacent nodes share an edge")
    };
    let top = t.neighbors(0)[0];
    let mut order: Vec<(usize, usize, usize)> = Vec::new(); // (node, parent, edge)
    let mut stack = vec![(top, 0usize)];
    while let Some((v, parent)) = stack.pop() {
        order.push((v, parent, edge_between(v, parent)));
        for &w in t.neighbors(v) {
            if w != parent {
                stack.push((w, v));
            }
        }
    }
    order.reverse();

    let mut values = vec![0.0; pattern_count(n)];
    let mut partial = vec![[0.0f64; 4]; t.node_count()];
    for (id, slot) in values.iter_mut().enumerate() {
        let pattern = Pattern::from_raw(n, id as u64);
        for &(v, _, _) in &order {
            partial[v] = if t.is_leaf(v) {
                let mut l = [0.0; 4];
                l[pattern.get(v).index()] = 1.0;
                l
            } else {
                [1.0; 4]
            };
        }
        for &(v, parent, e) in &order {
            let child = partial[v];
            let msg: [f64; 4] =
                std::array::from_fn(|x| (0..4).map(|y| mats[e][x][y] * child[y]).sum::<f64>());
            if parent != 0 {
                for x in 0..4 {
                    partial[parent][x] *= msg[x];
                }
            } else {
                *slot = 0.25 * msg[pattern.get(0).index()];
            }
        }
    }
    PatternDistribution::new(values).expect("length is 4^n")
}

/// An element of `(Z/2 x Z/2)^(n-2)`: one sign pair `(epsilon, delta)` per
/// interior node, in the tree's interior-node order.
///
/// Each pair is packed into a nucleotide: bit 0 set means `epsilon = -1`,
/// bit 1 set means `delta = -1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignAction {
    signs: Vec<Nucleotide>,
}

impl SignAction {
    pub fn identity(tree: &Tree) -> SignAction {
        SignAction { signs: vec![Nucleotide::A; tree.interior_nodes().len()] }
    }

    /// From explicit `(epsilon, delta)` pairs with entries in `{+1, -1}`.
    pub fn from_signs(signs: &[(i8, i8)]) -> SignAction {
        let signs = signs
            .iter()
            .map(|&(eps, delta)| {
                assert!(eps.abs() == 1 && delta.abs() == 1, "signs must be +1 or -1");
                Nucleotide::from_bits(u8::from(eps < 0) | (u8::from(delta < 0) << 1))
            })
            .collect();
        SignAction { signs }
    }

    /// Element number `index` of `0..4^(interior_count)`.
    pub fn from_index(interior_count: usize, index: u64) -> SignAction {
        let signs = (0..interior_count)
            .map(|i| Nucleotide::from_bits((index >> (2 * i)) as u8))
            .collect();
        SignAction { signs }
    }

    /// Every group element, `4^(n-2)` of them.
    pub fn all(tree: &Tree) -> impl Iterator<Item = SignAction> {
        let k = tree.interior_nodes().len();
        (0..1u64 << (2 * k)).map(move |i| SignAction::from_index(k, i))
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> Vec<(i8, i8)> {
        self.signs
            .iter()
            .map(|s| (if s.bits() & 1 == 1 { -1 } else { 1 }, if s.bits() & 2 == 2 { -1 } else { 1 }))
            .collect()
    }

    /// Induced edge signs, packed like the node signs: the product over the
    /// interior endpoints of each edge.
    pub fn edge_signs(&self, tree: &Tree) -> Result<Vec<Nucleotide>> {
        let interior = tree.interior_nodes();
        if interior.len() != self.signs.len() {
            return Err(Error::ActionMismatch { expected: interior.len(), got: self.signs.len() });
        }
        let mut node_sign = vec![Nucleotide::A; tree.node_count()];
        for (&v, &s) in interior.iter().zip(&self.signs) {
            node_sign[v] = s;
        }
        Ok(tree.edges().iter().map(|&(u, v)| node_sign[u] + node_sign[v]).collect())
    }
}

/// Applies a sign action: `(P_A, P_C, P_G, P_T) -> (P_A, eps P_C, delta
/// P_G, eps delta P_T)` with edge signs induced from node signs.
pub fn act<T: Scalar>(g: &SignAction, params: &ModelParams<T>) -> Result<ModelParams<T>> {
    let signs = g.edge_signs(params.tree())?;
    let fourier = params
        .edges()
        .iter()
        .zip(&signs)
        .map(|(p, s)| {
            std::array::from_fn(|x| {
                if s.chi(Nucleotide::from_bits(x as u8)) < 0 {
                    -p[x].clone()
                } else {
                    p[x].clone()
                }
            })
        })
        .collect();
    Ok(ModelParams { tree: params.shared_tree().clone(), fourier })
}

/// Orbit of `params` under all sign actions, deduplicated with a
/// per-coordinate tolerance.
pub fn fiber(params: &ModelParams<f64>, tol: f64) -> Vec<ModelParams<f64>> {
    let mut out: Vec<ModelParams<f64>> = Vec::new();
    for g in SignAction::all(params.tree()) {
        let image = act(&g, params).expect("action built for this tree");
        let dup = out.iter().any(|o| {
            o.edges()
                .iter()
                .zip(image.edges())
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol))
        });
        if !dup {
            out.push(image);
        }
    }
    out
}

/// Orbit of `params` under all sign actions, deduplicated exactly.
pub fn fiber_exact<T: Scalar + Eq + Hash>(params: &ModelParams<T>) -> Vec<ModelParams<T>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for g in SignAction::all(params.tree()) {
        let image = act(&g, params).expect("action built for this tree");
        if seen.insert(image.edges().to_vec()) {
            out.push(image);
        }
    }
    out
}

/// True iff some edge has `P_C P_G P_T = 0` exactly.
pub fn is_singular_parameter<T: Scalar>(params: &ModelParams<T>) -> bool {
    params
        .edges()
        .iter()
        .any(|p| (p[1].clone() * p[2].clone() * p[3].clone()).is_zero())
}

/// Tolerance variant of [`is_singular_parameter`].
pub fn is_singular_parameter_tol(params: &ModelParams<f64>, eps: f64) -> bool {
    params.edges().iter().any(|p| (p[1] * p[2] * p[3]).abs() <= eps)
}

/// Every edge has `P_C, P_G, P_T > 0` and its probability-frame image lies
/// in the closed simplex.
pub fn is_biologically_meaningful(params: &ModelParams<f64>, tol: f64) -> bool {
    (0..params.tree().edge_count()).all(|e| {
        let p = params.edge(e);
        let prob = params.edge_params(e).to_probability().coords;
        p[1] > 0.0
            && p[2] > 0.0
            && p[3] > 0.0
            && prob.iter().all(|&x| x >= -tol)
            && (prob.iter().sum::<f64>() - 1.0).abs() <= tol
    })
}

/// Draws Fourier parameters with `P_A = 1` and `P_C, P_G, P_T` uniform in
/// `[lo, hi]`, rejecting edges whose probability-frame image leaves the
/// simplex.
pub fn sample_meaningful<R: Rng + ?Sized>(tree: Arc<Tree>, rng: &mut R, lo: f64, hi: f64) -> ModelParams<f64> {
    assert!(0.0 < lo && lo <= hi && hi <= 1.0, "need 0 < lo <= hi <= 1");
    let fourier = (0..tree.edge_count())
        .map(|_| loop {
            let p = [1.0, rng.gen_range(lo..=hi), rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)];
            let prob = EdgeParams { coords: p, frame: Frame::Fourier }.to_probability().coords;
            if prob.iter().all(|&x| x >= 0.0) {
                break p;
            }
        })
        .collect();
    ModelParams { tree, fourier }
}

/// Jacobian of the slice coordinates with respect to the free parameters
/// `(P_C, P_G, P_T)` of every edge, by central differences.
pub fn phi_jacobian_fd(params: &ModelParams<f64>, step: f64) -> DMatrix<f64> {
    let n = params.tree().leaf_count();
    let slice: Vec<Pattern> = slice_patterns(n).collect();
    let cols = 3 * params.tree().edge_count();
    let mut jac = DMatrix::zeros(slice.len(), cols);
    for e in 0..params.tree().edge_count() {
        for k in 1..4 {
            let mut plus = params.clone();
            plus.edges_mut()[e][k] += step;
            let mut minus = params.clone();
            minus.edges_mut()[e][k] -= step;
            let col = 3 * e + k - 1;
            for (row, p) in slice.iter().enumerate() {
                jac[(row, col)] = (plus.q_at(p) - minus.q_at(p)) / (2.0 * step);
            }
        }
    }
    jac
}

/// Numeric rank of the parameterization Jacobian, i.e. the local dimension
/// of the variety at this point.
pub fn parameterization_rank(params: &ModelParams<f64>, tol: &Tolerances) -> usize {
    numeric_rank(&phi_jacobian_fd(params, tol.fd_step), tol.dimension_svd_cutoff)
}
