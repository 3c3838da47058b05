//! Topology reconstruction from alignments: site-pattern frequencies,
//! invariant residual scores, ranking, and simulation from the model.
//!
//! Sequence `i` of an alignment is leaf position `i` (label `i + 1`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Tolerances, DEFAULT_MAX_LEAVES};
use crate::error::{Error, Result};
use crate::fourier::{p_to_q, PatternDistribution, QVector};
use crate::group::{pattern_count, Nucleotide, Pattern};
use crate::invariants::{lci, InvariantSet, Tag};
use crate::model::{joint_probability, ModelParams};
use crate::tree::{enumerate_topologies_up_to, Tree};

/// Aligned sequences reduced to their usable site patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    names: Vec<String>,
    length: usize,
    columns: Vec<Pattern>,
    skipped: usize,
}

impl Alignment {
    pub fn from_columns(names: Vec<String>, columns: Vec<Pattern>) -> Result<Alignment> {
        if names.len() < 3 {
            return Err(Error::Fasta(format!("need at least 3 sequences, got {}", names.len())));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != names.len()) {
            return Err(Error::LengthMismatch { expected: names.len(), got: c.len() });
        }
        Ok(Alignment { length: columns.len(), names, columns, skipped: 0 })
    }

    pub fn sequence_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Site count including skipped columns.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn columns(&self) -> &[Pattern] {
        &self.columns
    }

    /// Columns dropped for containing a symbol other than A, C, G, T.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Count of each pattern, indexed by pattern id.
    pub fn pattern_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; pattern_count(self.sequence_count())];
        for c in &self.columns {
            counts[c.id()] += 1;
        }
        counts
    }

    pub fn to_fasta(&self) -> String {
        let mut out = String::new();
        for (i, name) in self.names.iter().enumerate() {
            out.push('>');
            out.push_str(name);
            out.push('\n');
            let seq: String = self.columns.iter().map(|c| c.get(i).letter()).collect();
            for chunk in seq.as_bytes().chunks(60) {
                out.push_str(std::str::from_utf8(chunk).expect("ascii"));
                out.push('\n');
            }
        }
        out
    }
}

/// Parses a FASTA alignment. Lowercase is uppercased; columns containing
/// any other symbol (gaps, ambiguity codes) are skipped and counted.
pub fn read_fasta(text: &str) -> Result<Alignment> {
    let mut names: Vec<String> = Vec::new();
    let mut seqs: Vec<Vec<u8>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('>') {
            names.push(name.trim().to_string());
            seqs.push(Vec::new());
        } else {
            let seq = seqs
                .last_mut()
                .ok_or_else(|| Error::Fasta(format!("line {}: sequence before any header", lineno + 1)))?;
            seq.extend(line.bytes().filter(|b| !b.is_ascii_whitespace()).map(|b| b.to_ascii_uppercase()));
        }
    }
    if names.len() < 3 {
        return Err(Error::Fasta(format!("need at least 3 records, got {}", names.len())));
    }
    if names.len() > crate::group::MAX_PATTERN_LEN {
        return Err(Error::Fasta(format!("too many records ({})", names.len())));
    }
    let length = seqs[0].len();
    if let Some((i, s)) = seqs.iter().enumerate().find(|(_, s)| s.len() != length) {
        return Err(Error::Fasta(format!(
            "record {:?} has length {}, expected {}",
            names[i],
            s.len(),
            length
        )));
    }
    let mut columns = Vec::with_capacity(length);
    let mut skipped = 0;
    let mut entries = vec![Nucleotide::A; names.len()];
    'site: for site in 0..length {
        for (i, s) in seqs.iter().enumerate() {
            match Nucleotide::from_letter(s[site] as char) {
                Some(x) => entries[i] = x,
                None => {
                    skipped += 1;
                    continue 'site;
                }
            }
        }
        columns.push(Pattern::new(&entries)?);
    }
    if columns.is_empty() {
        return Err(Error::EmptyAlignment);
    }
    Ok(Alignment { names, length, columns, skipped })
}

/// Relative pattern frequencies, with `pseudocount` added to each of the
/// `4^n` cells before normalizing.
pub fn empirical_frequencies(a: &Alignment, pseudocount: f64) -> Result<PatternDistribution> {
    if a.columns.is_empty() {
        return Err(Error::EmptyAlignment);
    }
    let counts = a.pattern_counts();
    let total = a.columns.len() as f64 + pseudocount * counts.len() as f64;
    PatternDistribution::new(counts.iter().map(|&c| (c as f64 + pseudocount) / total).collect())
}

/// How per-generator residuals are combined into one score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    L1,
    L2,
    Max,
}

impl Aggregation {
    pub fn apply(self, values: impl Iterator<Item = f64>) -> f64 {
        match self {
            Aggregation::Mean => {
                let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
                if count == 0 {
                    0.0
                } else {
                    sum / count as f64
                }
            }
            Aggregation::L1 => values.sum(),
            Aggregation::L2 => values.map(|v| v * v).sum::<f64>().sqrt(),
            Aggregation::Max => values.fold(0.0, f64::max),
        }
    }
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Aggregation, String> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "l1" => Ok(Aggregation::L1),
            "l2" => Ok(Aggregation::L2),
            "max" => Ok(Aggregation::Max),
            _ => Err(format!("unknown aggregation {s:?} (expected mean, l1, l2 or max)")),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Mean => "mean",
            Aggregation::L1 => "l1",
            Aggregation::L2 => "l2",
            Aggregation::Max => "max",
        })
    }
}

/// Score of one candidate topology; lower fits better.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologyScore {
    pub tree: Tree,
    pub score: f64,
    /// Normalized residual of every non-hyperplane generator.
    pub per_generator: Vec<(Tag, f64)>,
    /// Fourier mass off the model slice; identical for all topologies.
    pub off_slice_mass: f64,
}

impl TopologyScore {
    /// The same aggregation restricted to each tag family.
    pub fn per_tag_subscores(&self, agg: Aggregation) -> BTreeMap<&'static str, f64> {
        let mut groups: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
        for (tag, v) in &self.per_generator {
            groups.entry(tag.name()).or_default().push(*v);
        }
        groups.into_iter().map(|(k, v)| (k, agg.apply(v.into_iter()))).collect()
    }
}

/// `|P - M| / max(|P| + |M|, floor)` for monomial values `P`, `M`.
pub fn normalized_residual(plus: f64, minus: f64, floor: f64) -> f64 {
    (plus - minus).abs() / (plus.abs() + minus.abs()).max(floor)
}

/// Scores `q` against an already built generator set.
pub fn score_with_set(set: &InvariantSet, q: &QVector, agg: Aggregation, tol: &Tolerances) -> Result<TopologyScore> {
    if (q.all_a() - 1.0).abs() > tol.normalization {
        return Err(Error::Unnormalized(q.all_a()));
    }
    if q.leaf_count() != set.tree().leaf_count() {
        return Err(Error::LengthMismatch { expected: set.tree().leaf_count(), got: q.leaf_count() });
    }
    let per_generator: Vec<(Tag, f64)> = set
        .generators()
        .iter()
        .filter(|g| !g.is_hyperplane())
        .map(|g| {
            let plus = g.plus().eval(q.values());
            let minus = g.minus().eval(q.values());
            (g.tag(), normalized_residual(plus, minus, tol.residual_floor))
        })
        .collect();
    let score = agg.apply(per_generator.iter().map(|(_, v)| *v));
    Ok(TopologyScore { tree: set.tree().clone(), score, per_generator, off_slice_mass: q.slice_mass() })
}

/// Scores `q` against the generators of `t`.
pub fn score_topology(t: &Tree, q: &QVector, agg: Aggregation, tol: &Tolerances) -> Result<TopologyScore> {
    score_with_set(&lci(t), q, agg, tol)
}

/// Options for [`rank_topologies`].
#[derive(Clone, Debug)]
pub struct ScoreOptions {
    pub aggregation: Aggregation,
    pub pseudocount: f64,
    pub max_leaves: usize,
    /// Explicit candidates; all topologies are enumerated when `None`.
    pub candidates: Option<Vec<Tree>>,
    pub tolerances: Tolerances,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            aggregation: Aggregation::Mean,
            pseudocount: 0.0,
            max_leaves: DEFAULT_MAX_LEAVES,
            candidates: None,
            tolerances: Tolerances::default(),
        }
    }
}

/// Candidates sorted by ascending score.
#[derive(Clone, Debug)]
pub struct Ranking {
    pub scores: Vec<TopologyScore>,
    /// The two best scores are equal within the tie tolerance.
    pub tie: bool,
}

impl Ranking {
    pub fn best(&self) -> &TopologyScore {
        &self.scores[0]
    }

    /// Number of candidates tied with the best score.
    pub fn tied_count(&self, tol: f64) -> usize {
        let best = self.scores[0].score;
        self.scores.iter().take_while(|s| (s.score - best).abs() <= tol).count()
    }
}

/// Ranks candidate topologies for a Fourier vector. Ties keep candidate
/// order.
pub fn rank_q(q: &QVector, candidates: &[Tree], agg: Aggregation, tol: &Tolerances) -> Result<Ranking> {
    let mut scores = candidates
        .par_iter()
        .map(|t| score_topology(t, q, agg, tol))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| a.score.total_cmp(&b.score));
    let tie = scores.len() >= 2 && (scores[1].score - scores[0].score).abs() <= tol.tie;
    Ok(Ranking { scores, tie })
}

/// Scores every candidate topology for the alignment.
pub fn rank_topologies(a: &Alignment, opts: &ScoreOptions) -> Result<Ranking> {
    let n = a.sequence_count();
    let candidates = match &opts.candidates {
        Some(c) => {
            if let Some(t) = c.iter().find(|t| t.leaf_count() != n) {
                return Err(Error::LengthMismatch { expected: n, got: t.leaf_count() });
            }
            c.clone()
        }
        None => enumerate_topologies_up_to(n, opts.max_leaves)?,
    };
    let q = p_to_q(&empirical_frequencies(a, opts.pseudocount)?);
    rank_q(&q, &candidates, opts.aggregation, &opts.tolerances)
}

/// Checks that every edge is a stochastic Kimura matrix.
pub fn check_stochastic(params: &ModelParams<f64>, tol: f64) -> Result<()> {
    for e in 0..params.tree().edge_count() {
        let prob = params.edge_params(e).to_probability().coords;
        if let Some(x) = prob.iter().find(|&&x| x < -tol || !x.is_finite()) {
            return Err(Error::NotStochastic { edge: e, reason: format!("entry {x} is negative") });
        }
        let s: f64 = prob.iter().sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::NotStochastic { edge: e, reason: format!("row sums to {s}") });
        }
    }
    Ok(())
}

/// Draws `sites` independent columns from the model distribution by
/// inverse CDF over the `4^n` pattern table.
pub fn simulate(params: &ModelParams<f64>, sites: usize, seed: u64, tol: &Tolerances) -> Result<Alignment> {
    check_stochastic(params, tol.simplex)?;
    let n = params.tree().leaf_count();
    let p = joint_probability(params);
    let mut cdf = Vec::with_capacity(p.values().len());
    let mut acc = 0.0;
    for &v in p.values() {
        acc += v.max(0.0);
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns = (0..sites)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            let id = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            Pattern::decode(n, id as u64).expect("id below 4^n")
        })
        .collect();
    let names = params.tree().labels().iter().map(u32::to_string).collect();
    Alignment::from_columns(names, columns)
}
