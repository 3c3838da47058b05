//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;

use kimura::group::Pattern;
use kimura::invariants::{Binomial, Monomial, Tag};

/// `chi(x, y)` over whole patterns: the entries are 2-bit group elements,
/// so the product of characters is the parity of the shared bits.
fn sign(x: usize, y: usize) -> f64 {
    if (x & y).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Textbook `O(16^n)` character sum `q_y = sum_x chi(x, y) p_x`.
pub fn naive_hadamard(p: &[f64]) -> Vec<f64> {
    (0..p.len()).map(|y| p.iter().enumerate().map(|(x, v)| sign(x, y) * v).sum()).collect()
}

/// The same sum for many vectors at once, sharing each sign.
pub fn naive_hadamard_batch(ps: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = ps[0].len();
    let k = ps.len();
    // Transposed input: row x holds entry x of every vector.
    let mut rows = vec![0.0; len * k];
    for (j, p) in ps.iter().enumerate() {
        for (x, v) in p.iter().enumerate() {
            rows[x * k + j] = *v;
        }
    }
    let mut out = vec![vec![0.0; len]; k];
    let mut acc = vec![0.0; k];
    #[allow(clippy::needless_range_loop)]
    for y in 0..len {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for x in 0..len {
            let row = &rows[x * k..(x + 1) * k];
            if (x & y).count_ones().is_multiple_of(2) {
                acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
            } else {
                acc.iter_mut().zip(row).for_each(|(a, v)| *a -= v);
            }
        }
        for j in 0..k {
            out[j][y] = acc[j];
        }
    }
    out
}

/// `max |a - b| / max(1, max |b|)`.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Reads `plus patterns - minus patterns` lines.
pub fn load_binomials(path: &Path, tag: Tag) -> Vec<Binomial> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (plus, minus) = l.split_once(" - ").expect("binomial line");
            let side = |s: &str| Monomial::new(s.split_whitespace().map(|p| p.parse::<Pattern>().unwrap()).collect());
            Binomial::new(side(plus), side(minus), tag)
        })
        .collect()
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    // Resolves from either crate of the workspace.
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data")).join(name)
}
