//! Local complete intersection generators for the Kimura 3-parameter
//! variety of a trivalent tree.
//!
//! The set for an `n`-leaf tree is built recursively. Pick the cherry
//! holding the highest leaf label and move it to the last two positions.
//! Then take
//!
//! * the set of the tree with that cherry collapsed to one leaf, each
//!   pattern extended by `A` at the last position (`lifted_cherry`),
//! * the six base quartics on the 3-leaf tree spanned by the first leaf and
//!   the cherry, with `A` at every other position (`lifted_claw`),
//! * for each `z`, the `2 x 2` minors of the cherry flattening matrix that
//!   contain `q_{zA..AzA}` (`quadric_minor`),
//! * and the hyperplane `q_{A..A} = 1`.
//!
//! The result has `4^(n-1) - 6n + 9` elements, the codimension of the
//! variety. Patterns are indexed by the tree's leaf-order positions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::QVector;
use crate::group::{pattern_count, Nucleotide, Pattern};
use crate::model::Scalar;
use crate::tree::{parse_newick, Tree};

/// `c(n) = 4^(n-1) - 6n + 9`, the number of generators for `n` leaves.
pub fn codimension(n: usize) -> usize {
    assert!(n >= 3);
    pattern_count(n - 1) + 9 - 6 * n
}

/// Expected generator counts for `n >= 4`: `(lifted_claw, lifted_cherry,
/// quadric_minor, hyperplane)`.
pub fn expected_tag_counts(n: usize) -> (usize, usize, usize, usize) {
    assert!(n >= 4);
    (6, codimension(n - 1) - 1, 12 * (pattern_count(n - 3) - 1), 1)
}

/// A product of Fourier coordinates, stored as a sorted multiset.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<Pattern>);

impl Monomial {
    pub fn new(mut factors: Vec<Pattern>) -> Monomial {
        factors.sort_unstable();
        Monomial(factors)
    }

    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn factors(&self) -> &[Pattern] {
        &self.0
    }

    fn map(&self, f: impl Fn(&Pattern) -> Pattern) -> Monomial {
        Monomial::new(self.0.iter().map(f).collect())
    }

    /// Product of the factors looked up in a dense coordinate vector.
    pub fn eval<T: Scalar>(&self, values: &[T]) -> T {
        self.0.iter().fold(T::one(), |acc, p| acc * values[p.id()].clone())
    }

    /// Partial derivative with respect to the coordinate at `p`.
    pub fn derivative(&self, p: &Pattern, values: &[f64]) -> f64 {
        let k = self.0.iter().filter(|f| *f == p).count();
        if k == 0 {
            return 0.0;
        }
        let mut rest = k as f64;
        let mut skipped = false;
        for f in &self.0 {
            if f == p && !skipped {
                skipped = true;
                continue;
            }
            rest *= values[f.id()];
        }
        rest
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.0.iter().map(Pattern::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Where a generator came from in the recursive construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    /// One of the six quartics of the 3-leaf tree.
    Base3,
    /// Image of a generator of the collapsed tree.
    LiftedCherry,
    /// Image of a base quartic on the first leaf and the cherry.
    LiftedClaw,
    /// Cherry flattening minor through `q_{zA..AzA}`.
    QuadricMinor(Nucleotide),
    /// `q_{A..A} - 1`.
    Hyperplane,
}

impl Tag {
    pub fn name(&self) -> &'static str {
        match self {
            Tag::Base3 => "base3",
            Tag::LiftedCherry => "lifted_cherry",
            Tag::LiftedClaw => "lifted_claw",
            Tag::QuadricMinor(_) => "quadric_minor",
            Tag::Hyperplane => "hyperplane",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::QuadricMinor(z) => write!(f, "quadric_minor({z})"),
            other => f.write_str(other.name()),
        }
    }
}

/// `plus - minus`, with `plus` the lexicographically smaller monomial. The
/// hyperplane element is `q_{A..A} - 1` with an empty `minus`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binomial {
    plus: Monomial,
    minus: Monomial,
    tag: Tag,
}

impl Binomial {
    pub fn new(plus: Monomial, minus: Monomial, tag: Tag) -> Binomial {
        Binomial { plus, minus, tag }.canonicalize()
    }

    pub fn hyperplane(n: usize) -> Binomial {
        Binomial {
            plus: Monomial(vec![Pattern::constant(n, Nucleotide::A)]),
            minus: Monomial::one(),
            tag: Tag::Hyperplane,
        }
    }

    /// Orients the binomial so that `plus < minus`. Idempotent.
    pub fn canonicalize(self) -> Binomial {
        if self.tag != Tag::Hyperplane && self.minus < self.plus {
            Binomial { plus: self.minus, minus: self.plus, tag: self.tag }
        } else {
            self
        }
    }

    pub fn plus(&self) -> &Monomial {
        &self.plus
    }

    pub fn minus(&self) -> &Monomial {
        &self.minus
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn is_hyperplane(&self) -> bool {
        self.tag == Tag::Hyperplane
    }

    pub fn degree(&self) -> usize {
        self.plus.degree()
    }

    pub fn leaf_count(&self) -> usize {
        self.plus.0[0].len()
    }

    /// Equal as polynomials up to a global sign.
    pub fn same_up_to_sign(&self, other: &Binomial) -> bool {
        (self.plus == other.plus && self.minus == other.minus)
            || (self.plus == other.minus && self.minus == other.plus)
    }

    /// Applies `f` to every pattern on both sides.
    pub fn map_patterns(&self, f: impl Fn(&Pattern) -> Pattern, tag: Tag) -> Binomial {
        Binomial::new(self.plus.map(&f), self.minus.map(&f), tag)
    }

    /// Value at a dense coordinate vector of any scalar type.
    pub fn evaluate_values<T: Scalar>(&self, values: &[T]) -> T {
        self.plus.eval(values) - self.minus.eval(values)
    }

    /// `plus - minus` at `q`; the hyperplane evaluates to `q_{A..A} - 1`.
    pub fn evaluate(&self, q: &QVector) -> f64 {
        assert_eq!(q.leaf_count(), self.leaf_count(), "leaf count mismatch");
        self.evaluate_values(q.values())
    }

    /// Every pattern appearing in the binomial.
    pub fn patterns(&self) -> impl Iterator<Item = &Pattern> {
        self.plus.0.iter().chain(self.minus.0.iter())
    }
}

impl fmt::Display for Binomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} - {}", self.plus, self.minus)
    }
}

/// Evaluates a binomial at `q`.
pub fn evaluate(b: &Binomial, q: &QVector) -> f64 {
    b.evaluate(q)
}

/// The generator set of one tree.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantSet {
    tree: Tree,
    generators: Vec<Binomial>,
}

impl InvariantSet {
    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn generators(&self) -> &[Binomial] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Generator counts keyed by tag name.
    pub fn counts_by_tag(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for g in &self.generators {
            *out.entry(g.tag.name()).or_insert(0) += 1;
        }
        out
    }

    /// Values of every generator at `q`, in generator order.
    pub fn evaluate(&self, q: &QVector) -> Vec<f64> {
        use rayon::prelude::*;
        self.generators.par_iter().map(|g| g.evaluate(q)).collect()
    }

    /// Is every generator equal to one of `other`'s, up to sign?
    pub fn same_generators_up_to_sign(&self, other: &[Binomial]) -> bool {
        use std::collections::HashSet;
        let key = |b: &Binomial| {
            let b = b.clone().canonicalize();
            (b.plus, b.minus)
        };
        let mine: HashSet<_> = self.generators.iter().map(key).collect();
        let theirs: HashSet<_> = other.iter().map(key).collect();
        mine.len() == self.generators.len() && mine == theirs
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SetRecord::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<InvariantSet> {
        let record: SetRecord = serde_json::from_str(text).map_err(|e| Error::MalformedSet(e.to_string()))?;
        record.try_into()
    }
}

const BASE_QUARTICS: [(&str, &str); 6] = [
    ("AAA ATT TCG TGC", "ACC AGG TAT TTA"),
    ("CCA CTG TAT TGC", "CAC CGT TCG TTA"),
    ("AGG ATT CAC CCA", "AAA ACC CGT CTG"),
    ("ACC ATT GAG GGA", "AAA AGG GCT GTC"),
    ("CAC CTG GCT GGA", "CCA CGT GAG GTC"),
    ("GGA GTC TAT TCG", "GAG GCT TGC TTA"),
];

fn monomial(text: &str) -> Monomial {
    Monomial::new(text.split_whitespace().map(|s| s.parse().expect("valid pattern")).collect())
}

/// The six quartics `h1..h6` of the 3-leaf tree, in order, followed by
/// `q_{AAA} - 1`.
pub fn three_leaf_generators() -> Vec<Binomial> {
    let mut out: Vec<Binomial> = BASE_QUARTICS
        .iter()
        .map(|(p, m)| Binomial::new(monomial(p), monomial(m), Tag::Base3))
        .collect();
    out.push(Binomial::hyperplane(3));
    out
}

/// Minors `q_{X x y} q_{zA..AzA} - q_{X z A} q_{zA..A x y}` over rows
/// `x + y = z`, `(x, y) != (z, A)` and columns `X` of length `n - 2`
/// summing to `z`, `X != (z, A, .., A)`. Positions `n-2, n-1` hold the
/// cherry.
pub fn quadric_minors(n: usize, z: Nucleotide) -> Result<Vec<Binomial>> {
    if n < 4 {
        return Err(Error::LeafCountOutOfRange { n, min: 4, max: usize::MAX });
    }
    use Nucleotide::A;
    let mut corner_entries = vec![A; n - 2];
    corner_entries[0] = z;
    let corner_col = Pattern::new(&corner_entries).expect("short pattern");
    let rows: Vec<(Nucleotide, Nucleotide)> = Nucleotide::ALL
        .iter()
        .map(|&x| (x, x + z))
        .filter(|&(x, y)| (x, y) != (z, A))
        .collect();
    let cols: Vec<Pattern> = (0..pattern_count(n - 2) as u64)
        .map(|id| Pattern::decode(n - 2, id).expect("id in range"))
        .filter(|c| c.sum() == z && *c != corner_col)
        .collect();
    let corner = corner_col.push(z).push(A);
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for col in &cols {
        for &(x, y) in &rows {
            let plus = Monomial::new(vec![col.push(x).push(y), corner]);
            let minus = Monomial::new(vec![col.push(z).push(A), corner_col.push(x).push(y)]);
            out.push(Binomial::new(plus, minus, Tag::QuadricMinor(z)));
        }
    }
    Ok(out)
}

/// Non-hyperplane generators, indexed by `t`'s leaf positions.
fn generators_by_position(t: &Tree) -> Vec<Binomial> {
    let n = t.leaf_count();
    if n == 3 {
        let mut base = three_leaf_generators();
        base.pop();
        return base;
    }
    let cherry = t.canonical_cherry();
    let pa = t.position_of(cherry.a).expect("cherry leaf");
    let pb = t.position_of(cherry.b).expect("cherry leaf");
    // Working order: order[k] is the original position now at position k.
    let mut order: Vec<usize> = (0..n).filter(|&p| p != pa && p != pb).collect();
    order.push(pa);
    order.push(pb);
    let mut back = vec![0usize; n];
    for (k, &p) in order.iter().enumerate() {
        back[p] = k;
    }
    let to_original = |p: &Pattern| p.permute(&back);

    let collapsed = t.collapse_cherry(&cherry).expect("canonical cherry is a cherry");
    let mut out = Vec::with_capacity(codimension(n) - 1);

    let claw_image = |p: &Pattern| {
        let mut e = vec![Nucleotide::A; n];
        e[0] = p.get(0);
        e[n - 2] = p.get(1);
        e[n - 1] = p.get(2);
        to_original(&Pattern::new(&e).expect("length n"))
    };
    for h in three_leaf_generators().iter().filter(|h| !h.is_hyperplane()) {
        out.push(h.map_patterns(claw_image, Tag::LiftedClaw));
    }
    for g in generators_by_position(&collapsed) {
        out.push(g.map_patterns(|p| to_original(&p.push(Nucleotide::A)), Tag::LiftedCherry));
    }
    for z in Nucleotide::ALL {
        for q in quadric_minors(n, z).expect("n >= 4") {
            out.push(q.map_patterns(to_original, q.tag()));
        }
    }
    out
}

/// The local complete intersection of `t`: `c(n)` generators, hyperplane
/// last.
pub fn lci(t: &Tree) -> InvariantSet {
    let mut generators = generators_by_position(t);
    generators.push(Binomial::hyperplane(t.leaf_count()));
    InvariantSet { tree: t.clone(), generators }
}

#[derive(Serialize, Deserialize)]
struct GeneratorRecord {
    tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z: Option<char>,
    plus: Vec<Pattern>,
    minus: Vec<Pattern>,
}

#[derive(Serialize, Deserialize)]
struct SetRecord {
    leaf_count: usize,
    newick: String,
    /// Leaf labels by pattern position.
    leaf_order: Vec<u32>,
    generators: Vec<GeneratorRecord>,
}

impl From<&InvariantSet> for SetRecord {
    fn from(set: &InvariantSet) -> SetRecord {
        SetRecord {
            leaf_count: set.tree.leaf_count(),
            newick: set.tree.to_newick(),
            leaf_order: set.tree.labels().to_vec(),
            generators: set
                .generators
                .iter()
                .map(|g| GeneratorRecord {
                    tag: g.tag.name().to_string(),
                    z: match g.tag {
                        Tag::QuadricMinor(z) => Some(z.letter()),
                        _ => None,
                    },
                    plus: g.plus.0.clone(),
                    minus: g.minus.0.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<SetRecord> for InvariantSet {
    type Error = Error;

    fn try_from(r: SetRecord) -> Result<InvariantSet> {
        let bad = |msg: String| Error::MalformedSet(msg);
        let parsed = parse_newick(&r.newick)?;
        if parsed.leaf_count() != r.leaf_count {
            return Err(bad(format!("leaf_count {} disagrees with newick", r.leaf_count)));
        }
        let order = r
            .leaf_order
            .iter()
            .map(|&l| parsed.position_of(l).ok_or_else(|| bad(format!("unknown label {l} in leaf_order"))))
            .collect::<Result<Vec<_>>>()?;
        let tree = parsed.with_leaf_order(&order)?;
        let n = r.leaf_count;
        let mut generators = Vec::with_capacity(r.generators.len());
        for (i, g) in r.generators.into_iter().enumerate() {
            let tag = match (g.tag.as_str(), g.z) {
                ("base3", None) => Tag::Base3,
                ("lifted_cherry", None) => Tag::LiftedCherry,
                ("lifted_claw", None) => Tag::LiftedClaw,
                ("hyperplane", None) => Tag::Hyperplane,
                ("quadric_minor", Some(z)) => {
                    Tag::QuadricMinor(Nucleotide::from_letter(z).ok_or_else(|| bad(format!("generator {i}: bad z {z:?}")))?)
                }
                (t, z) => return Err(bad(format!("generator {i}: bad tag {t:?} (z = {z:?})"))),
            };
            if g.plus.iter().chain(&g.minus).any(|p| p.len() != n || !p.on_slice()) {
                return Err(bad(format!("generator {i}: pattern of wrong length or off the slice")));
            }
            let b = if tag == Tag::Hyperplane {
                let h = Binomial::hyperplane(n);
                if g.plus != h.plus.0 || !g.minus.is_empty() {
                    return Err(bad(format!("generator {i}: malformed hyperplane")));
                }
                h
            } else {
                if g.plus.len() != g.minus.len() || g.plus.is_empty() {
                    return Err(bad(format!("generator {i}: unbalanced degrees")));
                }
                Binomial::new(Monomial::new(g.plus), Monomial::new(g.minus), tag)
            };
            generators.push(b);
        }
        Ok(InvariantSet { tree, generators })
    }
}
