//! Fourier (Hadamard) transform between probability coordinates `p` and
//! Fourier coordinates `q`, for joint pattern distributions and for
//! per-edge parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{pattern_count, Pattern};

/// Vectors at least this long are transformed with rayon.
const PARALLEL_MIN_LEN: usize = 1 << 16;

/// Probability coordinates `p`, indexed by pattern id.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternDistribution {
    n: usize,
    values: Vec<f64>,
}

/// Fourier coordinates `q`, indexed by pattern id (full `4^n` storage).
#[derive(Clone, Debug, PartialEq)]
pub struct QVector {
    n: usize,
    values: Vec<f64>,
}

fn leaf_count_for(len: usize) -> Result<usize> {
    if len < 4 || !len.is_power_of_two() || !len.trailing_zeros().is_multiple_of(2) {
        return Err(Error::NotPowerOfFour(len));
    }
    Ok(len.trailing_zeros() as usize / 2)
}

macro_rules! dense_vector {
    ($t:ident) => {
        impl $t {
            /// Wraps a vector of length `4^n`.
            pub fn new(values: Vec<f64>) -> Result<$t> {
                let n = leaf_count_for(values.len())?;
                Ok($t { n, values })
            }

            pub fn zeros(n: usize) -> $t {
                $t { n, values: vec![0.0; pattern_count(n)] }
            }

            pub fn leaf_count(&self) -> usize {
                self.n
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            #[inline]
            pub fn get(&self, p: &Pattern) -> f64 {
                debug_assert_eq!(p.len(), self.n);
                self.values[p.id()]
            }

            #[inline]
            pub fn set(&mut self, p: &Pattern, value: f64) {
                debug_assert_eq!(p.len(), self.n);
                self.values[p.id()] = value;
            }
        }
    };
}

dense_vector!(PatternDistribution);
dense_vector!(QVector);

impl PatternDistribution {
    /// Point mass at one pattern.
    pub fn point_mass(p: &Pattern) -> PatternDistribution {
        let mut d = PatternDistribution::zeros(p.len());
        d.set(p, 1.0);
        d
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

impl QVector {
    /// Sum of `|q|` over patterns whose entries do not sum to `A`. Zero for
    /// any point of the model.
    pub fn slice_mass(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(id, _)| !Pattern::from_raw(self.n, *id as u64).on_slice())
            .map(|(_, v)| v.abs())
            .sum()
    }

    /// Value at the all-`A` pattern, which is 1 for normalized input.
    pub fn all_a(&self) -> f64 {
        self.values[0]
    }
}

/// One 4-point butterfly with the character matrix.
#[inline(always)]
fn butterfly(v: [f64; 4]) -> [f64; 4] {
    let s0 = v[0] + v[1];
    let d0 = v[0] - v[1];
    let s1 = v[2] + v[3];
    let d1 = v[2] - v[3];
    [s0 + s1, d0 + d1, s0 - s1, d0 - d1]
}

fn axis_pass(chunk: &mut [f64], stride: usize) {
    for offset in 0..stride {
        let i0 = offset;
        let i1 = offset + stride;
        let i2 = offset + 2 * stride;
        let i3 = offset + 3 * stride;
        let out = butterfly([chunk[i0], chunk[i1], chunk[i2], chunk[i3]]);
        chunk[i0] = out[0];
        chunk[i1] = out[1];
        chunk[i2] = out[2];
        chunk[i3] = out[3];
    }
}

/// Applies the character matrix along every tensor axis in place, axis 1
/// (stride 1) first. `O(n 4^n)`; unnormalized, so applying it twice
/// multiplies by `4^n`.
pub fn hadamard_in_place(values: &mut [f64]) -> Result<()> {
    let n = leaf_count_for(values.len())?;
    let parallel = values.len() >= PARALLEL_MIN_LEN;
    for axis in 0..n {
        let stride = 1usize << (2 * axis);
        let block = 4 * stride;
        if parallel {
            values.par_chunks_mut(block).for_each(|c| axis_pass(c, stride));
        } else {
            values.chunks_mut(block).for_each(|c| axis_pass(c, stride));
        }
    }
    Ok(())
}

/// `q = (chi x ... x chi) p`.
pub fn p_to_q(p: &PatternDistribution) -> QVector {
    let mut values = p.values.clone();
    hadamard_in_place(&mut values).expect("length is a power of 4");
    QVector { n: p.n, values }
}

/// Exact inverse of [`p_to_q`]: the same transform divided by `4^n`.
pub fn q_to_p(q: &QVector) -> PatternDistribution {
    let mut values = q.values.clone();
    hadamard_in_place(&mut values).expect("length is a power of 4");
    let scale = 1.0 / values.len() as f64;
    values.iter_mut().for_each(|v| *v *= scale);
    PatternDistribution { n: q.n, values }
}

/// Coordinate frame of a per-edge parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Substitution probabilities `(a, b, c, d)`.
    Probability,
    /// Fourier parameters `(P_A, P_C, P_G, P_T)`.
    Fourier,
}

impl std::str::FromStr for Frame {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Frame, String> {
        match s {
            "prob" | "probability" => Ok(Frame::Probability),
            "fourier" => Ok(Frame::Fourier),
            _ => Err(format!("unknown frame {s:?} (expected prob or fourier)")),
        }
    }
}

/// Four parameters of one edge in a given frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeParams {
    pub coords: [f64; 4],
    pub frame: Frame,
}

impl EdgeParams {
    pub fn probability(a: f64, b: f64, c: f64, d: f64) -> EdgeParams {
        EdgeParams { coords: [a, b, c, d], frame: Frame::Probability }
    }

    pub fn fourier(pa: f64, pc: f64, pg: f64, pt: f64) -> EdgeParams {
        EdgeParams { coords: [pa, pc, pg, pt], frame: Frame::Fourier }
    }

    pub fn to_fourier(self) -> EdgeParams {
        match self.frame {
            Frame::Fourier => self,
            Frame::Probability => params_to_fourier(self),
        }
    }

    pub fn to_probability(self) -> EdgeParams {
        match self.frame {
            Frame::Probability => self,
            Frame::Fourier => params_to_prob(self),
        }
    }

    /// The symmetric substitution matrix `S[x][y] = f(x + y)`.
    pub fn substitution_matrix(self) -> [[f64; 4]; 4] {
        let f = self.to_probability().coords;
        let mut s = [[0.0; 4]; 4];
        for (x, row) in s.iter_mut().enumerate() {
            for (y, v) in row.iter_mut().enumerate() {
                *v = f[x ^ y];
            }
        }
        s
    }
}

/// `(a, b, c, d) -> (a+b+c+d, a-b+c-d, a+b-c-d, a-b-c+d)`.
pub fn params_to_fourier(e: EdgeParams) -> EdgeParams {
    assert_eq!(e.frame, Frame::Probability, "expected probability-frame parameters");
    EdgeParams { coords: butterfly(e.coords), frame: Frame::Fourier }
}

/// Inverse of [`params_to_fourier`]; the sign matrix squares to 4 times
/// the identity.
pub fn params_to_prob(e: EdgeParams) -> EdgeParams {
    assert_eq!(e.frame, Frame::Fourier, "expected fourier-frame parameters");
    let v = butterfly(e.coords);
    EdgeParams { coords: v.map(|x| x / 4.0), frame: Frame::Probability }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Nucleotide;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn point_mass_at_all_a() {
        for n in 1..=5 {
            let p = PatternDistribution::point_mass(&Pattern::constant(n, Nucleotide::A));
            let q = p_to_q(&p);
            assert!(q.values().iter().all(|&v| v == 1.0));
            assert_eq!(q_to_p(&q), p);
        }
    }

    #[test]
    fn uniform_distribution() {
        for n in 1..=5 {
            let len = pattern_count(n);
            let p = PatternDistribution::new(vec![1.0 / len as f64; len]).unwrap();
            let q = p_to_q(&p);
            assert!((q.values()[0] - 1.0).abs() < 1e-15);
            assert!(q.values()[1..].iter().all(|v| v.abs() < 1e-15));
            let mut delta = vec![0.0; len];
            delta[0] = 1.0;
            let back = q_to_p(&QVector::new(delta).unwrap());
            assert!(close(back.values(), p.values(), 1e-18));
        }
    }

    #[test]
    fn two_point_mixture() {
        // 1/2 AAA + 1/2 CCA: q is 1 when g1, g2 are both in {A,G} or both in {C,T}.
        let mut p = PatternDistribution::zeros(3);
        p.set(&"AAA".parse().unwrap(), 0.5);
        p.set(&"CCA".parse().unwrap(), 0.5);
        let q = p_to_q(&p);
        let flips = |g: Nucleotide| matches!(g, Nucleotide::C | Nucleotide::T);
        for id in 0..64u64 {
            let g = Pattern::decode(3, id).unwrap();
            let want = if flips(g.get(0)) == flips(g.get(1)) { 1.0 } else { 0.0 };
            assert_eq!(q.values()[id as usize], want, "{g}");
        }
    }

    #[test]
    fn edge_parameter_transforms() {
        let e = params_to_fourier(EdgeParams::probability(1.0, 0.0, 0.0, 0.0));
        assert_eq!(e.coords, [1.0, 1.0, 1.0, 1.0]);
        let e = params_to_fourier(EdgeParams::probability(0.25, 0.25, 0.25, 0.25));
        assert_eq!(e.coords, [1.0, 0.0, 0.0, 0.0]);
        let e = params_to_fourier(EdgeParams::probability(0.75, 1.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0));
        assert!(close(&e.coords, &[1.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0], 1e-15));

        assert_eq!(params_to_prob(EdgeParams::fourier(1.0, 1.0, 1.0, 1.0)).coords, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(params_to_prob(EdgeParams::fourier(1.0, 0.0, 0.0, 0.0)).coords, [0.25; 4]);
        let e = params_to_prob(EdgeParams::fourier(1.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0));
        assert!(close(&e.coords, &[0.75, 1.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0], 1e-15));
    }

    #[test]
    fn substitution_matrix_shape() {
        let s = EdgeParams::probability(0.7, 0.1, 0.15, 0.05).substitution_matrix();
        assert_eq!(s[0], [0.7, 0.1, 0.15, 0.05]);
        assert_eq!(s[1], [0.1, 0.7, 0.05, 0.15]);
        assert_eq!(s[2], [0.15, 0.05, 0.7, 0.1]);
        assert_eq!(s[3], [0.05, 0.15, 0.1, 0.7]);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert_eq!(QVector::new(vec![0.0; 8]), Err(Error::NotPowerOfFour(8)));
        assert_eq!(QVector::new(vec![0.0; 1]), Err(Error::NotPowerOfFour(1)));
        assert!(hadamard_in_place(&mut [0.0; 12]).is_err());
    }

    #[test]
    fn parallel_path_matches_sequential() {
        let n = 8;
        let len = pattern_count(n);
        let p: Vec<f64> = (0..len).map(|i| ((i * 7919) % 1013) as f64 / 1013.0).collect();
        let mut par = p.clone();
        hadamard_in_place(&mut par).unwrap();
        let mut seq = p;
        for axis in 0..n {
            let stride = 1usize << (2 * axis);
            seq.chunks_mut(4 * stride).for_each(|c| axis_pass(c, stride));
        }
        assert_eq!(par, seq);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip(values in (1usize..6).prop_flat_map(|n| proptest::collection::vec(-1.0f64..1.0, pattern_count(n)))) {
                let p = PatternDistribution::new(values).unwrap();
                let back = q_to_p(&p_to_q(&p));
                prop_assert!(close(back.values(), p.values(), 1e-12));
            }

            #[test]
            fn edge_round_trip(c in proptest::array::uniform4(-2.0f64..2.0)) {
                let e = EdgeParams { coords: c, frame: Frame::Probability };
                let back = params_to_prob(params_to_fourier(e));
                prop_assert!(close(&back.coords, &c, 1e-14));
            }

            #[test]
            fn simplex_maps_to_unit_all_a(raw in proptest::collection::vec(0.0f64..1.0, 64)) {
                let total: f64 = raw.iter().sum();
                prop_assume!(total > 0.0);
                let p = PatternDistribution::new(raw.iter().map(|v| v / total).collect()).unwrap();
                prop_assert!((p_to_q(&p).all_a() - 1.0).abs() < 1e-12);
            }
        }
    }
}
