//! Path spaces of ordered diagrams: lexicographic ranking, the height
//! recursion, and the Vershik successor and predecessor in edge-list and
//! coordinate form.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::bratteli::{Diagram, DiagramError, Edge};
use crate::space::Point;

#[derive(Debug, Error)]
pub enum PathError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("edge at level {0} does not continue the path (source {1}, expected {2})")]
    NotAdjacent(usize, usize, usize),
    #[error("path index {0} out of range for height {1}")]
    RankOutOfRange(BigUint, BigUint),
    #[error("no non-extremal edge found within the depth budget {0}")]
    BudgetExceeded(usize),
    #[error("tail rule needs digit {0} below {1} choices at level {2}")]
    BadTailDigit(u32, usize, usize),
}

/// A finite path from the root: `edges[i]` joins level `i` to level `i+1`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PathPrefix {
    pub edges: Vec<Edge>,
}

impl PathPrefix {
    pub fn empty() -> Self {
        PathPrefix { edges: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Vertex reached after the last edge (the root when empty).
    pub fn terminal(&self) -> usize {
        self.edges.last().map_or(0, |e| e.range)
    }

    pub fn validate(&self, d: &Diagram) -> Result<(), PathError> {
        let mut at = 0usize;
        for (i, e) in self.edges.iter().enumerate() {
            if e.source != at {
                return Err(PathError::NotAdjacent(i + 1, e.source, at));
            }
            let level = d.level(i + 1)?;
            if e.range >= level.vertex_count {
                return Err(DiagramError::VertexOutOfRange { level: i + 1, vertex: e.range }.into());
            }
            at = e.range;
        }
        Ok(())
    }

    /// Order labels, one rank per level.
    pub fn labels(&self) -> Vec<u32> {
        self.edges.iter().map(|e| e.rank).collect()
    }
}

/// Lexicographic position of the prefix among all paths from the root into
/// its terminal vertex; minimal path ranks 0.
pub fn rank(d: &Diagram, p: &PathPrefix) -> Result<BigUint, PathError> {
    p.validate(d)?;
    let mut heights: Vec<BigUint> = vec![BigUint::one()];
    let mut total = BigUint::zero();
    for (i, e) in p.edges.iter().enumerate() {
        let n = i + 1;
        let below = d.incoming(n, e.range)?;
        for f in below.iter().filter(|f| f.rank < e.rank) {
            total += &heights[f.source];
        }
        heights = d.heights(n)?;
    }
    Ok(total)
}

/// Inverse of `rank`: the path into `(n, v)` with the given lexicographic
/// position.
pub fn unrank(d: &Diagram, n: usize, v: usize, index: &BigUint) -> Result<PathPrefix, PathError> {
    let h = d.height(n, v)?;
    if index >= &h {
        return Err(PathError::RankOutOfRange(index.clone(), h));
    }
    let mut edges_rev: Vec<Edge> = Vec::with_capacity(n);
    let mut at = v;
    let mut i = index.clone();
    for m in (1..=n).rev() {
        let below = d.heights(m - 1)?;
        let incoming = d.incoming(m, at)?;
        // the last edge splits the enumeration into consecutive blocks of
        // size h(m-1, source), ordered by edge rank
        let mut block = BigUint::zero();
        let mut chosen = None;
        for e in &incoming {
            let size = &below[e.source];
            if &i < &(block.clone() + size) {
                chosen = Some(*e);
                i -= block;
                break;
            }
            block += size;
        }
        let e = chosen.expect("rank below height always lands in a block");
        edges_rev.push(e);
        at = e.source;
    }
    edges_rev.reverse();
    Ok(PathPrefix { edges: edges_rev })
}

/// Minimal (rank-0 everywhere) path from the root into `(n, v)`.
pub fn minimal_path(d: &Diagram, n: usize, v: usize) -> Result<PathPrefix, PathError> {
    unrank(d, n, v, &BigUint::zero())
}

/// Maximal path from the root into `(n, v)`.
pub fn maximal_path(d: &Diagram, n: usize, v: usize) -> Result<PathPrefix, PathError> {
    let h = d.height(n, v)?;
    unrank(d, n, v, &(h - BigUint::one()))
}

/// Deterministic tail generators for lazy paths. The generator contract of
/// the path space (infinitely many non-maximal and non-minimal edges) is the
/// caller's responsibility; `Minimal`/`Maximal` deliberately break it on one
/// side and are used to build extremal paths.
#[derive(Clone, Debug)]
pub enum TailRule {
    Minimal,
    Maximal,
    /// Order rank at level `n` is `(n + offset) mod |r^{-1}(v)|`.
    Cycle(u32),
    /// Ranks follow the digit stream (the odometer coding); digits must stay
    /// below the edge counts.
    Digits(Point),
}

/// An infinite path: explicit head plus a deterministic tail generator with
/// a scan budget.
#[derive(Clone, Debug)]
pub struct LazyPath {
    pub prefix: PathPrefix,
    pub tail: TailRule,
    pub budget: usize,
}

impl LazyPath {
    pub fn new(prefix: PathPrefix, tail: TailRule, budget: usize) -> Self {
        LazyPath { prefix, tail, budget }
    }

    /// Extends the explicit head to `len` edges via the tail rule.
    pub fn materialize(&self, d: &Diagram, len: usize) -> Result<PathPrefix, PathError> {
        if len > self.budget {
            return Err(PathError::BudgetExceeded(self.budget));
        }
        let mut edges = self.prefix.edges.clone();
        while edges.len() < len {
            let n = edges.len() + 1;
            let at = edges.last().map_or(0, |e| e.range);
            // continue into the vertex the generator picks; the tail rule
            // selects among edges leaving `at`
            let level = d.level(n)?;
            let continuations: Vec<Edge> = level
                .edges
                .iter()
                .copied()
                .filter(|e| e.source == at)
                .collect();
            if continuations.is_empty() {
                return Err(PathError::NotAdjacent(n, at, at));
            }
            // deterministic choice: order continuations by (range, rank) and
            // reuse the tail rule on that list
            let mut conts = continuations;
            conts.sort_by_key(|e| (e.range, e.rank));
            let pick = match &self.tail {
                TailRule::Minimal => conts[0],
                TailRule::Maximal => conts[conts.len() - 1],
                TailRule::Cycle(offset) => conts[((n as u32 + offset) as usize) % conts.len()],
                TailRule::Digits(p) => {
                    let dgt = p.digit(n - 1) as usize;
                    if dgt >= conts.len() {
                        return Err(PathError::BadTailDigit(p.digit(n - 1), conts.len(), n));
                    }
                    conts[dgt]
                }
            };
            edges.push(pick);
        }
        edges.truncate(len);
        Ok(PathPrefix { edges })
    }
}

/// The Vershik successor: replace the first non-maximal edge by its order
/// successor and reset everything below to the minimal path.
pub fn successor(d: &Diagram, y: &LazyPath) -> Result<LazyPath, PathError> {
    step(d, y, true)
}

/// The inverse map: first non-minimal edge drops by one and everything
/// below resets to the maximal path.
pub fn predecessor(d: &Diagram, y: &LazyPath) -> Result<LazyPath, PathError> {
    step(d, y, false)
}

fn step(d: &Diagram, y: &LazyPath, forward: bool) -> Result<LazyPath, PathError> {
    let horizon = y.budget.min(d.depth());
    let mut k = None;
    let mut materialized = y.prefix.clone();
    for n in 1..=horizon {
        if materialized.len() < n {
            materialized = y.materialize(d, n)?;
        }
        let e = materialized.edges[n - 1];
        let incoming = d.incoming(n, e.range)?;
        let extremal = if forward { incoming.len() as u32 - 1 } else { 0 };
        if e.rank != extremal {
            k = Some(n);
            break;
        }
    }
    let k = k.ok_or(PathError::BudgetExceeded(horizon))?;
    let e = materialized.edges[k - 1];
    let incoming = d.incoming(k, e.range)?;
    let next_rank = if forward { e.rank + 1 } else { e.rank - 1 };
    let f = incoming[next_rank as usize];
    let reset = if forward {
        minimal_path(d, k - 1, f.source)?
    } else {
        maximal_path(d, k - 1, f.source)?
    };
    let mut edges = reset.edges;
    edges.push(f);
    edges.extend_from_slice(&materialized.edges[k..]);
    Ok(LazyPath { prefix: PathPrefix { edges }, tail: y.tail.clone(), budget: y.budget })
}

/// Coordinate form `(i_n, v_n)` truncated at `n = depth`.
pub fn coords(d: &Diagram, y: &LazyPath, depth: usize) -> Result<Vec<(BigUint, usize)>, PathError> {
    let p = y.materialize(d, depth)?;
    let mut out = Vec::with_capacity(depth);
    for n in 1..=depth {
        let head = PathPrefix { edges: p.edges[..n].to_vec() };
        out.push((rank(d, &head)?, head.terminal()));
    }
    Ok(out)
}

/// All paths from the root into `(n, v)` in lexicographic order; the
/// brute-force counterpart of `rank`/`unrank` used as a test oracle and for
/// small enumerations.
pub fn enumerate_paths(d: &Diagram, n: usize, v: usize) -> Result<Vec<PathPrefix>, PathError> {
    if n == 0 {
        return Ok(vec![PathPrefix::empty()]);
    }
    let incoming = d.incoming(n, v)?;
    let mut out = Vec::new();
    for e in incoming {
        for below in enumerate_paths(d, n - 1, e.source)? {
            let mut edges = below.edges;
            edges.push(e);
            out.push(PathPrefix { edges });
        }
    }
    // lexicographic order with the last edge most significant: incoming was
    // rank-sorted and recursion preserves order, so `out` is already sorted
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bratteli::cyclic_level;
    use crate::odometer::to_vershik_diagram;
    use crate::sampling::{SplitMix, random_diagram};
    use crate::space::SeqSpace;

    fn dyadic_diagram(n: usize) -> Diagram {
        to_vershik_diagram(&SeqSpace::uniform(2), n)
    }

    fn path_from_labels(d: &Diagram, labels: &[u32]) -> PathPrefix {
        let mut edges = Vec::new();
        let mut at = 0usize;
        for (i, &rank) in labels.iter().enumerate() {
            let incoming = d.incoming(i + 1, 0).unwrap();
            let e = incoming[rank as usize];
            assert_eq!(e.source, at);
            edges.push(e);
            at = e.range;
        }
        PathPrefix { edges }
    }

    #[test]
    fn rank_of_dyadic_labels() {
        let d = dyadic_diagram(5);
        let p = path_from_labels(&d, &[1, 1, 0]);
        assert_eq!(rank(&d, &p).unwrap(), BigUint::from(3u32));
        let min = path_from_labels(&d, &[0, 0, 0]);
        assert_eq!(rank(&d, &min).unwrap(), BigUint::zero());
        let max = path_from_labels(&d, &[1, 1, 1, 1]);
        assert_eq!(rank(&d, &max).unwrap(), BigUint::from(15u32));
    }

    #[test]
    fn unrank_inverts_rank_on_dyadic() {
        let d = dyadic_diagram(4);
        let p = unrank(&d, 3, 0, &BigUint::from(3u32)).unwrap();
        assert_eq!(p.labels(), vec![1, 1, 0]);
        for i in 0..16u32 {
            let q = unrank(&d, 4, 0, &BigUint::from(i)).unwrap();
            assert_eq!(rank(&d, &q).unwrap(), BigUint::from(i));
        }
    }

    #[test]
    fn heights_match_enumeration_on_random_diagrams() {
        let mut rng = SplitMix::new(42);
        for _ in 0..20 {
            let d = random_diagram(&mut rng, 4, 4, 3);
            let top = d.depth();
            for v in 0..d.vertex_count(top) {
                let paths = enumerate_paths(&d, top, v).unwrap();
                assert_eq!(
                    BigUint::from(paths.len()),
                    d.height(top, v).unwrap(),
                    "height disagrees with enumeration"
                );
                for (i, p) in paths.iter().enumerate() {
                    assert_eq!(rank(&d, p).unwrap(), BigUint::from(i));
                    assert_eq!(&unrank(&d, top, v, &BigUint::from(i)).unwrap(), p);
                }
            }
        }
    }

    #[test]
    fn successor_on_dyadic_matches_carry() {
        let d = dyadic_diagram(6);
        let y = LazyPath::new(path_from_labels(&d, &[1, 1, 0, 0]), TailRule::Minimal, 6);
        let s = successor(&d, &y).unwrap();
        assert_eq!(s.prefix.labels(), vec![0, 0, 1, 0]);
    }

    #[test]
    fn successor_first_edge_case() {
        let d = dyadic_diagram(4);
        let y = LazyPath::new(path_from_labels(&d, &[0, 1, 1]), TailRule::Minimal, 4);
        let s = successor(&d, &y).unwrap();
        assert_eq!(s.prefix.labels(), vec![1, 1, 1]);
    }

    #[test]
    fn predecessor_mirrors_successor() {
        let d = dyadic_diagram(6);
        let y = LazyPath::new(path_from_labels(&d, &[0, 0, 1, 0]), TailRule::Minimal, 6);
        let p = predecessor(&d, &y).unwrap();
        assert_eq!(p.prefix.labels(), vec![1, 1, 0, 0]);
    }

    #[test]
    fn rank_increment_law_on_dyadic() {
        let d = dyadic_diagram(8);
        let y = LazyPath::new(path_from_labels(&d, &[1, 0, 1, 1, 0, 0]), TailRule::Minimal, 8);
        let s = successor(&d, &y).unwrap();
        let before = coords(&d, &y, 6).unwrap();
        let after = coords(&d, &s, 6).unwrap();
        // k = 2 here: ranks at levels >= 2 increment, vertex parts unchanged
        for n in 2..=6 {
            assert_eq!(after[n - 1].0, &before[n - 1].0 + 1u32);
            assert_eq!(after[n - 1].1, before[n - 1].1);
        }
    }

    #[test]
    fn coords_of_dyadic_labels() {
        let d = dyadic_diagram(4);
        let y = LazyPath::new(path_from_labels(&d, &[1, 1, 0]), TailRule::Minimal, 4);
        let c = coords(&d, &y, 3).unwrap();
        let got: Vec<u32> = c.iter().map(|(i, _)| u32::try_from(i).unwrap()).collect();
        assert_eq!(got, vec![1, 3, 3]);
        let min = LazyPath::new(PathPrefix::empty(), TailRule::Minimal, 4);
        let c0 = coords(&d, &min, 4).unwrap();
        assert!(c0.iter().all(|(i, _)| i.bits() == 0));
    }

    #[test]
    fn successor_orbit_visits_all_ranks_in_order() {
        let d = dyadic_diagram(8);
        for n in 1..=5usize {
            let mut y = LazyPath::new(
                minimal_path(&d, n, 0).unwrap(),
                TailRule::Minimal,
                8,
            );
            for i in 0..(1u64 << n) - 1 {
                let head = PathPrefix { edges: y.materialize(&d, n).unwrap().edges };
                assert_eq!(rank(&d, &head).unwrap(), BigUint::from(i));
                y = successor(&d, &y).unwrap();
                // the step stays within depth n until the very last rank
                assert!(y.prefix.len() <= n || i + 2 == 1 << n);
            }
            let head = y.materialize(&d, n).unwrap();
            assert_eq!(rank(&d, &head).unwrap(), BigUint::from((1u64 << n) - 1));
        }
    }

    #[test]
    fn successor_of_all_maximal_prefix_needs_depth() {
        let d = Diagram::stationary(cyclic_level(2), 3);
        let y = LazyPath::new(
            maximal_path(&d, 3, 0).unwrap(),
            TailRule::Maximal,
            3,
        );
        assert!(matches!(successor(&d, &y), Err(PathError::BudgetExceeded(_))));
    }

    #[test]
    fn successor_predecessor_inverse_on_random_diagrams() {
        let mut rng = SplitMix::new(2024);
        for _ in 0..5 {
            let d = random_diagram(&mut rng, 4, 3, 3);
            let depth = d.depth();
            for trial in 0..50 {
                let y = crate::sampling::random_lazy_path(&mut rng, &d, depth, 64 + trial);
                let forward = match successor(&d, &y) {
                    Ok(s) => s,
                    Err(_) => continue,
                };
                let back = predecessor(&d, &forward).unwrap();
                let a = back.materialize(&d, depth).unwrap();
                let b = y.materialize(&d, depth).unwrap();
                assert_eq!(a, b, "successor/predecessor failed to invert");
            }
        }
    }
}
