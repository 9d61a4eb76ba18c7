//! Prefix-rewrite automorphisms of an adic sequence space.
//!
//! A `CylMap` acts by a table of length-preserving prefix rewrites
//! `u.y -> w.y` whose input cylinders form a prefix-free code, plus finitely
//! many exceptional eventually-periodic points. A map may be lazy: the rule
//! table covers everything except a residual region (e.g. the odometer's
//! unbounded-carry cylinders), and the map is guaranteed to send the input
//! residual bijectively onto the output residual. That guarantee is what
//! makes set images exact even for truncated rule tables.

use num_rational::BigRational;
use thiserror::Error;

use crate::space::{CylSet, Point, SeqSpace, SpaceError, Word};

/// Cap on materialized rule tables; exceeding it is an error, never a silent
/// truncation.
pub const DEFAULT_RULE_BUDGET: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum MapError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("rule {0} -> {1} does not preserve length")]
    LengthMismatch(Word, Word),
    #[error("rule inputs are not prefix-free near {0}")]
    InputsOverlap(Word),
    #[error("rule outputs are not prefix-free near {0}")]
    OutputsOverlap(Word),
    #[error("exceptional point {0} duplicated")]
    DuplicateException(Point),
    #[error("exceptional point {0} lies inside the rewritten region")]
    ExceptionInRules(Point),
    #[error("exceptional image {0} lies inside the rewritten image region")]
    ExceptionImageInRules(Point),
    #[error("rule budget {0} exceeded while composing")]
    RuleBudget(usize),
    #[error("point {0} falls in the unresolved region")]
    UnresolvedPoint(Point),
    #[error("set image meets the unresolved region only partially")]
    UnresolvedImage,
    #[error("cannot push exceptional image {0} through the outer map")]
    ExceptionEscapes(Point),
    #[error("piece cylinders do not partition the space")]
    PiecesDoNotPartition,
}

/// One prefix rewrite: every sequence `input.y` maps to `output.y`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rule {
    pub input: Word,
    pub output: Word,
}

#[derive(Clone, PartialEq)]
pub struct CylMap {
    space: SeqSpace,
    rules: Vec<Rule>,
    exceptions: Vec<(Point, Point)>,
    residual_in: CylSet,
    residual_out: CylSet,
}

impl CylMap {
    pub fn new(
        space: &SeqSpace,
        mut rules: Vec<Rule>,
        exceptions: Vec<(Point, Point)>,
    ) -> Result<Self, MapError> {
        rules.sort_by(|a, b| a.input.cmp(&b.input));
        for r in &rules {
            r.input.validate(space)?;
            r.output.validate(space)?;
            if r.input.len() != r.output.len() {
                return Err(MapError::LengthMismatch(r.input.clone(), r.output.clone()));
            }
        }
        for w in rules.windows(2) {
            if w[0].input.is_prefix_of(&w[1].input) {
                return Err(MapError::InputsOverlap(w[1].input.clone()));
            }
        }
        let mut outputs: Vec<&Word> = rules.iter().map(|r| &r.output).collect();
        outputs.sort();
        for w in outputs.windows(2) {
            if w[0].is_prefix_of(w[1]) {
                return Err(MapError::OutputsOverlap((*w[1]).clone()));
            }
        }
        let in_set = CylSet::from_words(space, rules.iter().map(|r| r.input.clone()).collect())?;
        let out_set = CylSet::from_words(space, rules.iter().map(|r| r.output.clone()).collect())?;
        let residual_in = in_set.complement();
        let residual_out = out_set.complement();
        for (i, (p, q)) in exceptions.iter().enumerate() {
            p.validate(space)?;
            q.validate(space)?;
            if !residual_in.contains_point(p) {
                return Err(MapError::ExceptionInRules(p.clone()));
            }
            if !residual_out.contains_point(q) {
                return Err(MapError::ExceptionImageInRules(q.clone()));
            }
            for (p2, q2) in &exceptions[..i] {
                if p2 == p {
                    return Err(MapError::DuplicateException(p.clone()));
                }
                if q2 == q {
                    return Err(MapError::DuplicateException(q.clone()));
                }
            }
        }
        Ok(CylMap { space: space.clone(), rules, exceptions, residual_in, residual_out })
    }

    pub fn identity(space: &SeqSpace) -> Self {
        CylMap::new(space, vec![Rule { input: Word::root(), output: Word::root() }], vec![])
            .expect("identity is valid")
    }

    /// A fully resolved map permuting the depth-`d` cylinders.
    pub fn depth_permutation(space: &SeqSpace, d: usize, perm: &[usize]) -> Result<Self, MapError> {
        let words = space.words_at_depth(d);
        assert_eq!(words.len(), perm.len());
        let rules = words
            .iter()
            .enumerate()
            .map(|(i, w)| Rule { input: w.clone(), output: words[perm[i]].clone() })
            .collect();
        CylMap::new(space, rules, vec![])
    }

    pub fn space(&self) -> &SeqSpace {
        &self.space
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn exceptions(&self) -> &[(Point, Point)] {
        &self.exceptions
    }

    pub fn residual_in(&self) -> &CylSet {
        &self.residual_in
    }

    pub fn residual_out(&self) -> &CylSet {
        &self.residual_out
    }

    /// Depth at which the rule table is complete; `None` marks a lazy map
    /// with a nonempty residual.
    pub fn resolving_depth(&self) -> Option<usize> {
        if self.residual_in.is_empty() {
            Some(self.max_rule_depth())
        } else {
            None
        }
    }

    pub fn max_rule_depth(&self) -> usize {
        self.rules.iter().map(|r| r.input.len()).max().unwrap_or(0)
    }

    pub fn is_fully_resolved(&self) -> bool {
        self.residual_in.is_empty()
    }

    /// Rewrites the whole cylinder `c` when a single rule covers it.
    pub fn whole_rewrite(&self, c: &Word) -> Option<Word> {
        self.rules
            .iter()
            .find(|r| r.input.is_prefix_of(c))
            .map(|r| r.output.concat(&c.digits()[r.input.len()..]))
    }

    pub fn apply_point(&self, p: &Point) -> Result<Point, MapError> {
        for (src, dst) in &self.exceptions {
            if src == p {
                return Ok(dst.clone());
            }
        }
        for r in &self.rules {
            if p.in_cylinder(&r.input) {
                return Ok(p.with_prefix(r.input.len(), &r.output));
            }
        }
        Err(MapError::UnresolvedPoint(p.clone()))
    }

    /// Exact image of a cylinder union. Exact even across the residual, as
    /// long as the set contains the whole residual or misses it entirely.
    pub fn image(&self, set: &CylSet) -> Result<CylSet, MapError> {
        let mut words = Vec::new();
        for r in &self.rules {
            for a in set.words() {
                if r.input.is_prefix_of(a) {
                    words.push(r.output.concat(&a.digits()[r.input.len()..]));
                } else if a.is_prefix_of(&r.input) {
                    words.push(r.output.clone());
                }
            }
        }
        let mut out = CylSet::from_words(&self.space, words)?;
        if !set.is_disjoint_from(&self.residual_in) {
            if self.residual_in.is_subset_of(set) {
                out = out.union(&self.residual_out);
            } else {
                return Err(MapError::UnresolvedImage);
            }
        }
        Ok(out)
    }

    /// A cylinder union guaranteed to contain the image of `set`; always
    /// computable, exact whenever `image` succeeds.
    pub fn image_bound(&self, set: &CylSet) -> CylSet {
        let mut words = Vec::new();
        for r in &self.rules {
            for a in set.words() {
                if r.input.is_prefix_of(a) {
                    words.push(r.output.concat(&a.digits()[r.input.len()..]));
                } else if a.is_prefix_of(&r.input) {
                    words.push(r.output.clone());
                }
            }
        }
        let mut out = CylSet::from_words(&self.space, words).expect("valid image words");
        if !set.is_disjoint_from(&self.residual_in) {
            out = out.union(&self.residual_out);
        }
        out
    }

    pub fn preimage(&self, set: &CylSet) -> Result<CylSet, MapError> {
        self.invert().image(set)
    }

    pub fn invert(&self) -> CylMap {
        CylMap {
            space: self.space.clone(),
            rules: {
                let mut rules: Vec<Rule> = self
                    .rules
                    .iter()
                    .map(|r| Rule { input: r.output.clone(), output: r.input.clone() })
                    .collect();
                rules.sort_by(|a, b| a.input.cmp(&b.input));
                rules
            },
            exceptions: self.exceptions.iter().map(|(p, q)| (q.clone(), p.clone())).collect(),
            residual_in: self.residual_out.clone(),
            residual_out: self.residual_in.clone(),
        }
    }

    /// The composition `self . other` (apply `other` first).
    pub fn compose(&self, other: &CylMap) -> Result<CylMap, MapError> {
        self.compose_with_budget(other, DEFAULT_RULE_BUDGET)
    }

    pub fn compose_with_budget(&self, other: &CylMap, budget: usize) -> Result<CylMap, MapError> {
        self.space.check_same(&other.space)?;
        let mut rules = Vec::new();
        let mut exceptions: Vec<(Point, Point)> = Vec::new();
        let mut residual_words: Vec<Word> = other.residual_in.words().to_vec();

        for t in &other.rules {
            // how does `self` act on the cylinder [t.output]?
            if let Some(rw) = self.whole_rewrite(&t.output) {
                rules.push(Rule { input: t.input.clone(), output: rw });
            } else {
                for s in &self.rules {
                    if t.output.is_prefix_of(&s.input) && s.input.len() > t.output.len() {
                        let v = &s.input.digits()[t.output.len()..];
                        rules.push(Rule { input: t.input.concat(v), output: s.output.clone() });
                    }
                }
                // parts of [t.output] inside self's residual pull back to
                // residual of the composition
                let t_out_set = CylSet::from_words(&self.space, vec![t.output.clone()])?;
                let meet = t_out_set.intersect(&self.residual_in);
                for m in meet.words() {
                    let v = &m.digits()[t.output.len()..];
                    residual_words.push(t.input.concat(v));
                }
                // exceptional points of self inside [t.output] pull back to
                // exceptional points of the composition
                for (p, q) in &self.exceptions {
                    if p.in_cylinder(&t.output) {
                        let pre = p.with_prefix(t.output.len(), &t.input);
                        exceptions.push((pre, q.clone()));
                    }
                }
            }
            if rules.len() > budget {
                return Err(MapError::RuleBudget(budget));
            }
        }
        for (p, q) in &other.exceptions {
            let image = self
                .apply_point(q)
                .map_err(|_| MapError::ExceptionEscapes(q.clone()))?;
            exceptions.push((p.clone(), image));
        }
        // exceptions whose source is covered by a composed rule were already
        // absorbed (the pullback landed outside the composed residual): keep
        // only residual-bound ones, which CylMap::new will re-validate
        let residual = CylSet::from_words(&self.space, residual_words)?;
        exceptions.retain(|(p, _)| residual.contains_point(p));
        CylMap::new(&self.space, rules, exceptions)
    }

    /// Iterated composition `self^n`, inverting first for negative `n`.
    pub fn power(&self, n: i64, budget: usize) -> Result<CylMap, MapError> {
        let base = if n < 0 { self.invert() } else { self.clone() };
        let mut acc = CylMap::identity(&self.space);
        for _ in 0..n.unsigned_abs() {
            acc = base.compose_with_budget(&acc, budget)?;
        }
        Ok(acc)
    }

    /// True when the two maps visibly act the same way on cylinder `c`:
    /// identical applicable rule fragments, residual traces, and exceptions.
    pub(crate) fn same_action_on(&self, other: &CylMap, c: &Word) -> bool {
        let frag = |m: &CylMap| -> Vec<(Word, Word)> {
            let mut v: Vec<(Word, Word)> = m
                .rules
                .iter()
                .filter_map(|r| {
                    if r.input.is_prefix_of(c) {
                        Some((c.clone(), r.output.concat(&c.digits()[r.input.len()..])))
                    } else if c.is_prefix_of(&r.input) {
                        Some((r.input.clone(), r.output.clone()))
                    } else {
                        None
                    }
                })
                .collect();
            v.sort();
            v
        };
        if frag(self) != frag(other) {
            return false;
        }
        let c_set = CylSet::from_words(&self.space, vec![c.clone()]).expect("valid cylinder");
        if self.residual_in.intersect(&c_set) != other.residual_in.intersect(&c_set) {
            return false;
        }
        let exc = |m: &CylMap| -> Vec<(Point, Point)> {
            let mut v: Vec<(Point, Point)> = m
                .exceptions
                .iter()
                .filter(|(p, _)| p.in_cylinder(c))
                .cloned()
                .collect();
            v.sort_by(|a, b| format!("{:?}", a).cmp(&format!("{:?}", b)));
            v
        };
        exc(self) == exc(other)
    }

    /// Structural validity re-check (used by tests and after compositions).
    pub fn validate(&self) -> Result<(), MapError> {
        CylMap::new(&self.space, self.rules.clone(), self.exceptions.clone()).map(|_| ())
    }
}

impl std::fmt::Debug for CylMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CylMap on {} ({} rules)", self.space, self.rules.len())?;
        for r in &self.rules {
            writeln!(f, "  {} -> {}", r.input, r.output)?;
        }
        for (p, q) in &self.exceptions {
            writeln!(f, "  point {} -> {}", p, q)?;
        }
        Ok(())
    }
}

/// Classification outcome for one cylinder in a difference-set computation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CylClass {
    DefinitelyEqual,
    DefinitelyDifferent,
    Unresolved,
}

/// Partition of the depth-`d` cylinders into definitely-equal,
/// definitely-different, and unresolved classes, with exceptional points
/// reported separately.
#[derive(Clone, Debug)]
pub struct DiffReport {
    pub depth: usize,
    pub classes: Vec<(Word, CylClass)>,
    pub equal: CylSet,
    pub different: CylSet,
    pub unresolved: CylSet,
    /// Exceptional points of either map, with their two images where
    /// resolvable and the pointwise verdict `Sx != Tx` when decidable.
    pub exceptional: Vec<(Point, Option<Point>, Option<Point>, Option<bool>)>,
}

impl DiffReport {
    pub fn all_equal(&self) -> bool {
        self.different.is_empty() && self.unresolved.is_empty()
    }
}

/// Extra refinement depth allowed below the requested classification depth
/// before a cylinder is declared unresolved.
const CLASSIFY_SLACK: usize = 4;

/// Classifies the depth-`d` cylinders by whether `S` and `T` provably agree
/// or provably disagree on every point (forward direction only).
pub fn diff_set(s: &CylMap, t: &CylMap, depth: usize) -> Result<DiffReport, MapError> {
    s.space().check_same(t.space())?;
    let space = s.space().clone();
    let deepest = s
        .max_rule_depth()
        .max(t.max_rule_depth())
        .max(depth)
        + CLASSIFY_SLACK;
    let mut classes = Vec::new();
    for w in space.words_at_depth(depth) {
        let class = classify(s, t, &w, deepest);
        classes.push((w, class));
    }
    let collect = |want: CylClass| -> CylSet {
        CylSet::from_words(
            &space,
            classes
                .iter()
                .filter(|(_, c)| *c == want)
                .map(|(w, _)| w.clone())
                .collect(),
        )
        .expect("classified words are valid")
    };
    let equal = collect(CylClass::DefinitelyEqual);
    let different = collect(CylClass::DefinitelyDifferent);
    let unresolved = collect(CylClass::Unresolved);
    let mut exceptional = Vec::new();
    for (p, _) in s.exceptions().iter().chain(t.exceptions().iter()) {
        if exceptional.iter().any(|(q, _, _, _)| q == p) {
            continue;
        }
        let sp = s.apply_point(p).ok();
        let tp = t.apply_point(p).ok();
        let verdict = match (&sp, &tp) {
            (Some(a), Some(b)) => Some(a != b),
            _ => None,
        };
        exceptional.push((p.clone(), sp, tp, verdict));
    }
    Ok(DiffReport { depth, classes, equal, different, unresolved, exceptional })
}

fn classify(s: &CylMap, t: &CylMap, c: &Word, deepest: usize) -> CylClass {
    match (s.whole_rewrite(c), t.whole_rewrite(c)) {
        (Some(a), Some(b)) => {
            return if a == b { CylClass::DefinitelyEqual } else { CylClass::DefinitelyDifferent };
        }
        _ => {}
    }
    if s.same_action_on(t, c) {
        return CylClass::DefinitelyEqual;
    }
    let c_set = CylSet::from_words(s.space(), vec![c.clone()]).expect("valid cylinder");
    if s.image_bound(&c_set).is_disjoint_from(&t.image_bound(&c_set)) {
        return CylClass::DefinitelyDifferent;
    }
    if c.len() >= deepest {
        return CylClass::Unresolved;
    }
    let mut all_equal = true;
    let mut all_diff = true;
    for a in 0..s.space().radix(c.len()) {
        match classify(s, t, &c.child(a), deepest) {
            CylClass::DefinitelyEqual => all_diff = false,
            CylClass::DefinitelyDifferent => all_equal = false,
            CylClass::Unresolved => {
                all_equal = false;
                all_diff = false;
            }
        }
        if !all_equal && !all_diff {
            return CylClass::Unresolved;
        }
    }
    if all_equal {
        CylClass::DefinitelyEqual
    } else if all_diff {
        CylClass::DefinitelyDifferent
    } else {
        CylClass::Unresolved
    }
}

/// Classification for `E(S,T) = E0(S,T) . E0(S^-1,T^-1)`: a cylinder is
/// different when either direction provably differs, equal when both
/// provably agree.
pub fn e_set(s: &CylMap, t: &CylMap, depth: usize) -> Result<DiffReport, MapError> {
    let fwd = diff_set(s, t, depth)?;
    let bwd = diff_set(&s.invert(), &t.invert(), depth)?;
    let space = s.space().clone();
    let mut classes = Vec::new();
    for ((w, cf), (_, cb)) in fwd.classes.iter().zip(bwd.classes.iter()) {
        let class = match (cf, cb) {
            (CylClass::DefinitelyDifferent, _) | (_, CylClass::DefinitelyDifferent) => {
                CylClass::DefinitelyDifferent
            }
            (CylClass::DefinitelyEqual, CylClass::DefinitelyEqual) => CylClass::DefinitelyEqual,
            _ => CylClass::Unresolved,
        };
        classes.push((w.clone(), class));
    }
    let collect = |want: CylClass| -> CylSet {
        CylSet::from_words(
            &space,
            classes
                .iter()
                .filter(|(_, c)| *c == want)
                .map(|(w, _)| w.clone())
                .collect(),
        )
        .expect("classified words are valid")
    };
    let mut exceptional = fwd.exceptional.clone();
    for entry in bwd.exceptional {
        if !exceptional.iter().any(|(p, _, _, _)| *p == entry.0) {
            exceptional.push(entry);
        }
    }
    Ok(DiffReport {
        depth,
        equal: collect(CylClass::DefinitelyEqual),
        different: collect(CylClass::DefinitelyDifferent),
        unresolved: collect(CylClass::Unresolved),
        classes,
        exceptional,
    })
}

/// `mu(S A)` computed by rewriting the cylinders of `A` through `S`.
pub fn pushforward_measure(
    mu: &crate::measure::MeasureSpec,
    s: &CylMap,
    set: &CylSet,
) -> Result<BigRational, MapError> {
    Ok(mu.set_measure(&s.image(set)?))
}

/// A map given piecewise as integer powers of a base map; the model of a
/// full-group element with its orbit cocycle.
#[derive(Clone, Debug)]
pub struct PiecewisePower {
    pub base: CylMap,
    /// `(piece, exponent)` pairs whose pieces partition the space.
    pub pieces: Vec<(CylSet, i64)>,
}

impl PiecewisePower {
    pub fn new(base: CylMap, pieces: Vec<(CylSet, i64)>) -> Result<Self, MapError> {
        let mut union = CylSet::empty(base.space());
        for (p, _) in &pieces {
            if !union.is_disjoint_from(p) {
                return Err(MapError::PiecesDoNotPartition);
            }
            union = union.union(p);
        }
        if !union.is_whole() {
            return Err(MapError::PiecesDoNotPartition);
        }
        Ok(PiecewisePower { base, pieces })
    }

    /// The values taken by the cocycle `m` with their level sets
    /// `{x : m(x) = n}`.
    pub fn cocycle_levels(&self) -> &[(CylSet, i64)] {
        &self.pieces
    }

    /// Materializes the piecewise map into a single rewrite table and
    /// re-verifies bijectivity.
    pub fn materialize(&self, budget: usize) -> Result<CylMap, MapError> {
        let space = self.base.space().clone();
        let mut rules = Vec::new();
        let mut exceptions = Vec::new();
        for (piece, n) in &self.pieces {
            let restricted = restricted_power(&self.base, piece, *n, budget)?;
            rules.extend(restricted.0);
            exceptions.extend(restricted.1);
            if rules.len() > budget {
                return Err(MapError::RuleBudget(budget));
            }
        }
        CylMap::new(&space, rules, exceptions)
    }
}

/// Rules and exceptions of `base^n` restricted to `piece`.
fn restricted_power(
    base: &CylMap,
    piece: &CylSet,
    n: i64,
    budget: usize,
) -> Result<(Vec<Rule>, Vec<(Point, Point)>), MapError> {
    let step = if n < 0 { base.invert() } else { base.clone() };
    let mut rules: Vec<Rule> = piece
        .words()
        .iter()
        .map(|w| Rule { input: w.clone(), output: w.clone() })
        .collect();
    let mut exceptions: Vec<(Point, Point)> = Vec::new();
    for _ in 0..n.unsigned_abs() {
        // exceptions found in earlier iterations move one more step; the ones
        // collected below already carry this iteration's image
        for (_, q) in exceptions.iter_mut() {
            *q = step.apply_point(q).map_err(|_| MapError::ExceptionEscapes(q.clone()))?;
        }
        let mut next_rules = Vec::new();
        for r in &rules {
            if let Some(rw) = step.whole_rewrite(&r.output) {
                next_rules.push(Rule { input: r.input.clone(), output: rw });
            } else {
                let mut covered = false;
                for s in step.rules() {
                    if r.output.is_prefix_of(&s.input) && s.input.len() > r.output.len() {
                        let v = &s.input.digits()[r.output.len()..];
                        next_rules.push(Rule { input: r.input.concat(v), output: s.output.clone() });
                        covered = true;
                    }
                }
                let out_set = CylSet::from_words(base.space(), vec![r.output.clone()])?;
                let meet = out_set.intersect(step.residual_in());
                if !meet.is_empty() {
                    // the only points we can still carry are the exceptional ones
                    for (p, q) in step.exceptions() {
                        if p.in_cylinder(&r.output) {
                            let pre = p.with_prefix(r.output.len(), &r.input);
                            exceptions.push((pre, q.clone()));
                            covered = true;
                        }
                    }
                    let exc_cover: Vec<&Point> = step
                        .exceptions()
                        .iter()
                        .filter(|(p, _)| p.in_cylinder(&r.output))
                        .map(|(p, _)| p)
                        .collect();
                    // a residual patch wider than its exceptional points
                    // cannot be materialized
                    for m in meet.words() {
                        let exc_here = exc_cover.iter().filter(|p| p.in_cylinder(m)).count();
                        if exc_here == 0 {
                            return Err(MapError::UnresolvedImage);
                        }
                    }
                }
                if !covered {
                    return Err(MapError::UnresolvedImage);
                }
            }
            if next_rules.len() > budget {
                return Err(MapError::RuleBudget(budget));
            }
        }
        rules = next_rules;
    }
    Ok((rules, exceptions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::MeasureSpec;
    use crate::odometer;
    use crate::ratio;

    fn dyadic() -> SeqSpace {
        SeqSpace::uniform(2)
    }

    fn w(digits: &[u32]) -> Word {
        Word::new(digits.to_vec())
    }

    fn add_one(budget_depth: usize) -> CylMap {
        odometer::translation_one(&dyadic(), budget_depth).unwrap()
    }

    /// The period-8 approximant: add-one off [111], and 111y -> 000y.
    fn p3() -> CylMap {
        CylMap::new(
            &dyadic(),
            vec![
                Rule { input: w(&[0]), output: w(&[1]) },
                Rule { input: w(&[1, 0]), output: w(&[0, 1]) },
                Rule { input: w(&[1, 1, 0]), output: w(&[0, 0, 1]) },
                Rule { input: w(&[1, 1, 1]), output: w(&[0, 0, 0]) },
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn identity_and_inversion() {
        let s = dyadic();
        let id = CylMap::identity(&s);
        assert!(id.is_fully_resolved());
        assert_eq!(id.invert(), id);
        let t = add_one(12);
        let tt = t.invert().invert();
        assert_eq!(t, tt);
        // subtract-one table mirrors the carry rules
        let inv = t.invert();
        assert_eq!(inv.whole_rewrite(&w(&[1])), Some(w(&[0])));
        assert_eq!(inv.whole_rewrite(&w(&[0, 1])), Some(w(&[1, 0])));
        assert_eq!(inv.whole_rewrite(&w(&[0, 0, 1])), Some(w(&[1, 1, 0])));
    }

    #[test]
    fn compose_with_identity_is_identity_on_rules() {
        let t = add_one(10);
        let id = CylMap::identity(&dyadic());
        let left = t.compose(&id).unwrap();
        assert_eq!(left.rules(), t.rules());
        let right = id.compose(&t).unwrap();
        assert_eq!(right.rules(), t.rules());
    }

    #[test]
    fn compose_with_inverse_yields_identity_table() {
        let t = add_one(10);
        let round = t.compose(&t.invert()).unwrap();
        // every composed rule rewrites a prefix to itself
        assert!(!round.rules().is_empty());
        assert!(round.rules().iter().all(|r| r.input == r.output));
        let report = diff_set(&round, &CylMap::identity(&dyadic()), 4).unwrap();
        assert!(report.different.is_empty());
        // only the lazy residual (the all-zero stem) stays unresolved
        let zeros = CylSet::from_words(&dyadic(), vec![w(&[0, 0, 0, 0])]).unwrap();
        assert!(report.unresolved.is_subset_of(&zeros));
        // pointwise, the round trip is the identity wherever it resolves
        let x = Point::new(vec![0, 1, 1], vec![0, 1]).unwrap();
        assert_eq!(round.apply_point(&x).unwrap(), x);
        assert_eq!(round.apply_point(&Point::constant(0)).unwrap(), Point::constant(0));
    }

    #[test]
    fn compose_add_one_twice_matches_plus_two_arithmetic() {
        // oracle: 2-adic addition of 2 on every depth-3 prefix with carry out
        let t = add_one(14);
        let t2 = t.compose(&t).unwrap();
        for val in 0..8u32 {
            let digits = [val & 1, (val >> 1) & 1, (val >> 2) & 1];
            let sum = val + 2;
            if sum < 8 {
                let expect = [sum & 1, (sum >> 1) & 1, (sum >> 2) & 1];
                assert_eq!(
                    t2.whole_rewrite(&w(&digits)),
                    Some(w(&expect)),
                    "{val} + 2 should rewrite wholly"
                );
            } else {
                // carry escapes depth 3: no whole rewrite at this depth
                assert_eq!(t2.whole_rewrite(&w(&digits)), None, "{val} + 2 carries out");
            }
        }
        // the carried prefixes resolve at depth 4
        assert_eq!(t2.whole_rewrite(&w(&[0, 1, 1, 0])), Some(w(&[0, 0, 0, 1])));
        assert_eq!(t2.whole_rewrite(&w(&[1, 1, 1, 0])), Some(w(&[1, 0, 0, 1])));
    }

    #[test]
    fn diff_set_same_map_is_all_equal() {
        let t = add_one(10);
        let report = diff_set(&t, &t, 4).unwrap();
        assert!(report.all_equal());
        assert_eq!(report.equal.words(), &[Word::root()]);
    }

    #[test]
    fn diff_set_p3_versus_odometer() {
        let t = add_one(12);
        let report = diff_set(&p3(), &t, 3).unwrap();
        assert_eq!(report.different.words(), &[w(&[1, 1, 1])]);
        assert!(report.unresolved.is_empty());
    }

    #[test]
    fn e_set_p3_versus_odometer() {
        let t = add_one(12);
        let report = e_set(&p3(), &t, 3).unwrap();
        let expected =
            CylSet::from_words(&dyadic(), vec![w(&[0, 0, 0]), w(&[1, 1, 1])]).unwrap();
        assert_eq!(report.different, expected);
        assert!(report.unresolved.is_empty());
        // symmetry under joint inversion
        let inv = e_set(&p3().invert(), &t.invert(), 3).unwrap();
        assert_eq!(inv.different, report.different);
        assert_eq!(inv.equal, report.equal);
    }

    #[test]
    fn space_mismatch_is_an_error() {
        let t2 = add_one(8);
        let t3 = odometer::translation_one(&SeqSpace::uniform(3), 8).unwrap();
        assert!(diff_set(&t2, &t3, 1).is_err());
    }

    #[test]
    fn monotone_refinement_of_classifications() {
        let t = add_one(12);
        let s = p3();
        let coarse = diff_set(&s, &t, 2).unwrap();
        let fine = diff_set(&s, &t, 3).unwrap();
        // definite classes never shrink
        assert!(coarse.equal.is_subset_of(&fine.equal));
        assert!(coarse.different.is_subset_of(&fine.different));
    }

    #[test]
    fn image_is_exact_across_residual() {
        let t = add_one(10);
        let ones = CylSet::from_words(&dyadic(), vec![w(&[1, 1, 1])]).unwrap();
        let img = t.image(&ones).unwrap();
        let zeros = CylSet::from_words(&dyadic(), vec![w(&[0, 0, 0])]).unwrap();
        assert_eq!(img, zeros);
        // a set that cuts the residual region open cannot be imaged exactly
        let thin = CylSet::from_words(&dyadic(), vec![w(&[1; 12])]).unwrap();
        assert!(t.image(&thin).is_err());
    }

    #[test]
    fn pushforward_measures() {
        let s = dyadic();
        let mu = MeasureSpec::uniform(&s);
        let t = add_one(10);
        let zero = CylSet::from_words(&s, vec![w(&[0])]).unwrap();
        assert_eq!(pushforward_measure(&mu, &t, &zero).unwrap(), ratio(1, 2));
        let c = CylSet::from_words(&s, vec![w(&[1, 1, 1, 0])]).unwrap();
        assert_eq!(pushforward_measure(&mu, &p3(), &c).unwrap(), ratio(1, 16));
        let id = CylMap::identity(&s);
        assert_eq!(pushforward_measure(&mu, &id, &c).unwrap(), mu.set_measure(&c));
    }

    #[test]
    fn odometer_preserves_uniform_measure_to_depth_10() {
        let s = dyadic();
        let mu = MeasureSpec::uniform(&s);
        let t = add_one(16);
        for d in 0..=10 {
            for word in s.words_at_depth(d) {
                let c = CylSet::from_words(&s, vec![word]).unwrap();
                assert_eq!(pushforward_measure(&mu, &t, &c).unwrap(), mu.set_measure(&c));
            }
        }
    }

    #[test]
    fn piecewise_power_materializes_p3() {
        let s = dyadic();
        let t = add_one(16);
        let top = CylSet::from_words(&s, vec![w(&[1, 1, 1])]).unwrap();
        let rest = top.complement();
        let pw = PiecewisePower::new(t.clone(), vec![(rest, 1), (top, -7)]).unwrap();
        let built = pw.materialize(DEFAULT_RULE_BUDGET).unwrap();
        built.validate().unwrap();
        let report = diff_set(&built, &p3(), 3).unwrap();
        assert!(report.all_equal(), "materialized P3 disagrees: {:?}", report);
    }

    #[test]
    fn piecewise_power_rejects_non_partition() {
        let s = dyadic();
        let t = add_one(8);
        let half = CylSet::from_words(&s, vec![w(&[0])]).unwrap();
        assert!(PiecewisePower::new(t, vec![(half, 1)]).is_err());
    }
}
