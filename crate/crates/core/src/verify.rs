//! Independent checks on generator sets: the monomial map to edge
//! parameters, exact rational evaluation, and the numeric rank of the
//! analytic Jacobian.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::fourier::QVector;
use crate::group::{slice_patterns, Pattern};
use crate::invariants::{codimension, lci, Binomial, InvariantSet, Monomial};
use crate::linalg::{rank_from_singular_values, singular_values};
use crate::model::{phi, phi_values, sample_meaningful, ModelParams, Rational};
use crate::tree::Tree;

/// Exponent vector of a monomial in the edge parameters `P^e_x`: counts
/// indexed by `4 * edge + x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThetaMonomial {
    counts: Vec<u32>,
}

impl ThetaMonomial {
    pub fn count(&self, edge: usize, x: crate::group::Nucleotide) -> u32 {
        self.counts[4 * edge + x.index()]
    }

    /// Number of factors on one edge.
    pub fn edge_degree(&self, edge: usize) -> u32 {
        self.counts[4 * edge..4 * edge + 4].iter().sum()
    }

    pub fn total_degree(&self) -> u32 {
        self.counts.iter().sum()
    }
}

/// Image of a monomial in the edge parameters: the union of the edge
/// assignments of its factors.
pub fn theta_expand(t: &Tree, m: &Monomial) -> Result<ThetaMonomial> {
    let mut counts = vec![0u32; 4 * t.edge_count()];
    for p in m.factors() {
        if p.len() != t.leaf_count() {
            return Err(Error::LengthMismatch { expected: t.leaf_count(), got: p.len() });
        }
        let x = t.edge_assignment(p).ok_or_else(|| Error::OffSlice(p.to_string()))?;
        for (e, label) in x.as_slice().iter().enumerate() {
            counts[4 * e + label.index()] += 1;
        }
    }
    Ok(ThetaMonomial { counts })
}

/// Exact certificate that a binomial vanishes on the model: both sides map
/// to the same monomial in the edge parameters.
pub fn vanishes_on_model(t: &Tree, b: &Binomial) -> Result<bool> {
    if b.is_hyperplane() {
        return Err(Error::HyperplaneGenerator);
    }
    Ok(theta_expand(t, b.plus())? == theta_expand(t, b.minus())?)
}

/// Analytic Jacobian: one row per generator, one column per slice pattern
/// (in [`slice_patterns`] order).
pub fn jacobian(set: &InvariantSet, q: &QVector) -> DMatrix<f64> {
    let n = set.tree().leaf_count();
    let slice: Vec<Pattern> = slice_patterns(n).collect();
    let mut column = vec![usize::MAX; q.values().len()];
    for (c, p) in slice.iter().enumerate() {
        column[p.id()] = c;
    }
    let values = q.values();
    let mut jac = DMatrix::zeros(set.len(), slice.len());
    for (row, g) in set.generators().iter().enumerate() {
        for (sign, side) in [(1.0, g.plus()), (-1.0, g.minus())] {
            let mut seen: Vec<Pattern> = Vec::new();
            for p in side.factors() {
                if seen.contains(p) {
                    continue;
                }
                seen.push(*p);
                jac[(row, column[p.id()])] += sign * side.derivative(p, values);
            }
        }
    }
    jac
}

/// Rank of the generator Jacobian at `q`, singular values below
/// `svd_cutoff * sigma_max` counted as zero.
pub fn jacobian_rank(set: &InvariantSet, q: &QVector, svd_cutoff: f64) -> usize {
    rank_from_singular_values(&singular_values(&jacobian(set, q)), svd_cutoff)
}

/// Exact values of every generator at the model point of rational
/// parameters.
pub fn rational_evaluate(set: &InvariantSet, params: &ModelParams<Rational>) -> Vec<Rational> {
    let q = phi_values(params);
    set.generators().iter().map(|g| g.evaluate_values(&q)).collect()
}

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub topology: String,
    pub tag: String,
    pub index: usize,
    pub passed: bool,
    pub detail: String,
}

/// Options for [`check_tree`].
#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub seed: u64,
    pub rank: bool,
    pub numeric_points: usize,
    pub tolerances: Tolerances,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { seed: 0, rank: false, numeric_points: 3, tolerances: Tolerances::default() }
    }
}

/// Runs the oracle suite for one tree: generator count, the symbolic
/// vanishing certificate of every generator, numeric vanishing at seeded
/// model points and, optionally, the Jacobian rank.
pub fn check_tree(t: &Tree, opts: &CheckOptions) -> Vec<CheckResult> {
    let newick = t.to_newick();
    let set = lci(t);
    let n = t.leaf_count();
    let mut out = Vec::with_capacity(set.len() + 2);
    out.push(CheckResult {
        topology: newick.clone(),
        tag: "count".into(),
        index: 0,
        passed: set.len() == codimension(n),
        detail: format!("{} generators, expected {}", set.len(), codimension(n)),
    });

    let shared = Arc::new(t.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let points: Vec<QVector> = (0..opts.numeric_points)
        .map(|_| phi(&sample_meaningful(shared.clone(), &mut rng, 0.3, 0.9)))
        .collect();

    let per_generator: Vec<CheckResult> = set
        .generators()
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let (passed, detail) = if g.is_hyperplane() {
                let worst = points.iter().map(|q| g.evaluate(q).abs()).fold(0.0, f64::max);
                (worst < 1e-12, format!("max |q_A..A - 1| = {worst:.3e}"))
            } else {
                let symbolic = vanishes_on_model(t, g).unwrap_or(false);
                let worst = points.iter().map(|q| g.evaluate(q).abs()).fold(0.0, f64::max);
                (symbolic && worst < 1e-12, format!("symbolic={symbolic} max |value| = {worst:.3e}"))
            };
            CheckResult { topology: newick.clone(), tag: g.tag().to_string(), index: i, passed, detail }
        })
        .collect();
    out.extend(per_generator);

    if opts.rank {
        if let Some(q) = points.first() {
            let sv = singular_values(&jacobian(&set, q));
            let rank = rank_from_singular_values(&sv, opts.tolerances.svd_cutoff);
            out.push(CheckResult {
                topology: newick,
                tag: "rank".into(),
                index: 0,
                passed: rank == codimension(n),
                detail: format!("rank {rank}, expected {}", codimension(n)),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Nucleotide::*;
    use crate::invariants::{three_leaf_generators, Tag};
    use crate::model::ratio;
    use crate::tree::{enumerate_topologies, parse_newick};

    fn mono(s: &str) -> Monomial {
        Monomial::new(s.split_whitespace().map(|p| p.parse().unwrap()).collect())
    }

    #[test]
    fn expand_claw_pattern() {
        let t = Tree::claw();
        let th = theta_expand(&t, &mono("TCG")).unwrap();
        assert_eq!(th.count(0, T), 1);
        assert_eq!(th.count(1, C), 1);
        assert_eq!(th.count(2, G), 1);
        assert_eq!(th.total_degree(), 3);

        let th = theta_expand(&t, &mono("AAA AAA AAA")).unwrap();
        for e in 0..3 {
            assert_eq!(th.count(e, A), 3);
        }
        assert!(matches!(theta_expand(&t, &mono("CAA")), Err(Error::OffSlice(_))));
    }

    #[test]
    fn quadric_sides_expand_equally() {
        let t = parse_newick("((1,2),(3,4));").unwrap();
        let plus = theta_expand(&t, &mono("CCCC AAAA")).unwrap();
        let minus = theta_expand(&t, &mono("CCAA AACC")).unwrap();
        assert_eq!(plus, minus);
        assert_eq!(plus.count(4, A), 2);
    }

    #[test]
    fn detects_non_invariant() {
        let t = parse_newick("((1,2),(3,4));").unwrap();
        let bogus = Binomial::new(mono("AAAA CCAA"), mono("CCCC AACC"), Tag::QuadricMinor(A));
        assert!(!vanishes_on_model(&t, &bogus).unwrap());
        assert_eq!(vanishes_on_model(&t, &Binomial::hyperplane(4)), Err(Error::HyperplaneGenerator));
    }

    #[test]
    fn base_quartics_vanish() {
        let t = Tree::claw();
        for h in three_leaf_generators().iter().filter(|h| !h.is_hyperplane()) {
            assert!(vanishes_on_model(&t, h).unwrap());
        }
    }

    #[test]
    fn multi_homogeneity() {
        for t in enumerate_topologies(5).unwrap().iter().take(3) {
            for g in lci(t).generators().iter().filter(|g| !g.is_hyperplane()) {
                for side in [g.plus(), g.minus()] {
                    let th = theta_expand(t, side).unwrap();
                    for e in 0..t.edge_count() {
                        assert_eq!(th.edge_degree(e) as usize, g.degree());
                    }
                }
            }
        }
    }

    #[test]
    fn exact_zero_at_rational_points() {
        for n in 3..=5 {
            for t in enumerate_topologies(n).unwrap().into_iter().take(4) {
                let shared = Arc::new(t);
                let params = ModelParams::uniform(shared.clone(), [ratio(1, 1), ratio(1, 2), ratio(1, 2), ratio(1, 4)]);
                let set = lci(&shared);
                assert!(rational_evaluate(&set, &params).iter().all(|v| *v == ratio(0, 1)));
            }
        }
    }

    #[test]
    fn perturbation_breaks_some_generator() {
        let t = Arc::new(parse_newick("((1,2),(3,4));").unwrap());
        let params = ModelParams::uniform(t.clone(), [ratio(1, 1), ratio(1, 2), ratio(1, 3), ratio(1, 5)]);
        let set = lci(&t);
        let mut q = phi_values(&params);
        let target: Pattern = "CCCC".parse().unwrap();
        q[target.id()] = q[target.id()].clone() + ratio(1, 1000);
        let values: Vec<Rational> = set.generators().iter().map(|g| g.evaluate_values(&q)).collect();
        assert!(values.iter().any(|v| *v != ratio(0, 1)));
        // The hyperplane is untouched by the perturbation.
        assert_eq!(*values.last().unwrap(), ratio(0, 1));
    }

    #[test]
    fn rank_at_no_mutation_point() {
        let t = parse_newick("((1,2),(3,4));").unwrap();
        let q = QVector::new(phi_values(&ModelParams::uniform(Arc::new(t.clone()), [1.0; 4]))).unwrap();
        assert_eq!(jacobian_rank(&lci(&t), &q, 1e-8), 49);
    }

    #[test]
    fn check_tree_passes() {
        let t = parse_newick("((1,2),(3,4));").unwrap();
        let opts = CheckOptions { rank: true, ..Default::default() };
        let results = check_tree(&t, &opts);
        assert_eq!(results.len(), 49 + 2);
        assert!(results.iter().all(|r| r.passed), "{:?}", results.iter().find(|r| !r.passed));
    }
}
