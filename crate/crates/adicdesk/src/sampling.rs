//! Deterministic sampling of small diagrams, maps, and paths for the
//! randomized property suites. A fixed-seed generator keeps every run
//! reproducible without pulling a RNG dependency into the library.

use crate::bratteli::{Diagram, Edge, Level};
use crate::cylmap::CylMap;
use crate::space::{Point, SeqSpace};
use crate::vershik::{LazyPath, PathPrefix, TailRule};

/// SplitMix64, the usual small stateless mixer.
#[derive(Clone, Debug)]
pub struct SplitMix {
    state: u64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        SplitMix { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform draw from `0..bound` (bound must be positive).
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }

    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            xs.swap(i, self.below(i + 1));
        }
    }
}

/// A valid ordered diagram with 2..=max_levels levels, 1..=max_vertices
/// vertices per level, and at most `max_multiplicity` parallel edges per
/// (source, range) pair.
pub fn random_diagram(
    rng: &mut SplitMix,
    max_levels: usize,
    max_vertices: usize,
    max_multiplicity: usize,
) -> Diagram {
    let depth = 2 + rng.below(max_levels.saturating_sub(1));
    let mut levels = Vec::with_capacity(depth);
    let mut below = 1usize;
    for _ in 0..depth {
        let verts = 1 + rng.below(max_vertices);
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for v in 0..verts {
            let indeg = 1 + rng.below(2);
            for _ in 0..indeg {
                let src = rng.below(below);
                let mult = 1 + rng.below(max_multiplicity);
                for _ in 0..mult {
                    pairs.push((src, v));
                }
            }
        }
        // every vertex below needs an outgoing edge
        for src in 0..below {
            if !pairs.iter().any(|&(s, _)| s == src) {
                pairs.push((src, rng.below(verts)));
            }
        }
        // assign order ranks per range vertex in shuffled source order
        let mut edges = Vec::with_capacity(pairs.len());
        for v in 0..verts {
            let mut sources: Vec<usize> =
                pairs.iter().filter(|&&(_, r)| r == v).map(|&(s, _)| s).collect();
            rng.shuffle(&mut sources);
            for (rank, src) in sources.into_iter().enumerate() {
                edges.push(Edge { source: src, range: v, rank: rank as u32 });
            }
        }
        levels.push(Level { vertex_count: verts, edges });
        below = verts;
    }
    Diagram::new(levels)
}

/// A lazy path with a uniformly random explicit head and a cycling tail.
pub fn random_lazy_path(
    rng: &mut SplitMix,
    d: &Diagram,
    head_len: usize,
    budget: usize,
) -> LazyPath {
    let mut edges = Vec::with_capacity(head_len);
    let mut at = 0usize;
    for n in 1..=head_len.min(d.depth()) {
        let level = d.level(n).expect("level in range");
        let conts: Vec<Edge> = level.edges.iter().copied().filter(|e| e.source == at).collect();
        let e = conts[rng.below(conts.len())];
        edges.push(e);
        at = e.range;
    }
    LazyPath::new(PathPrefix { edges }, TailRule::Cycle(rng.next_u64() as u32 % 7), budget)
}

/// A fully resolved automorphism permuting the depth-`d` cylinders.
pub fn random_cylmap(rng: &mut SplitMix, space: &SeqSpace, depth: usize) -> CylMap {
    let n = space.word_count(depth) as usize;
    let mut perm: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut perm);
    CylMap::depth_permutation(space, depth, &perm).expect("permutation map is valid")
}

/// An eventually-periodic point with bounded head and period lengths.
pub fn random_point(rng: &mut SplitMix, space: &SeqSpace, max_head: usize) -> Point {
    let head_len = rng.below(max_head + 1);
    let period_len = 1 + rng.below(3);
    let head: Vec<u32> = (0..head_len).map(|i| rng.below(space.radix(i) as usize) as u32).collect();
    let period: Vec<u32> = (0..period_len)
        .map(|k| {
            let mut min_radix = u32::MAX;
            for j in 0..space.period_len().max(1) {
                min_radix = min_radix.min(space.radix(head_len + k + j * period_len));
            }
            rng.below(min_radix as usize) as u32
        })
        .collect();
    Point::new(head, period).expect("sampled point is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_diagrams_validate() {
        let mut rng = SplitMix::new(1);
        for _ in 0..50 {
            let d = random_diagram(&mut rng, 4, 4, 3);
            let report = d.validate(d.depth());
            assert!(report.is_clean(), "defects: {:?}", report.defects);
        }
    }

    #[test]
    fn random_cylmaps_validate() {
        let mut rng = SplitMix::new(2);
        let s = SeqSpace::uniform(2);
        for _ in 0..20 {
            let m = random_cylmap(&mut rng, &s, 3);
            assert!(m.is_fully_resolved());
            m.validate().unwrap();
        }
    }

    #[test]
    fn random_points_are_valid() {
        let mut rng = SplitMix::new(3);
        let s = SeqSpace::new(vec![2], vec![3, 2]).unwrap();
        for _ in 0..50 {
            let p = random_point(&mut rng, &s, 5);
            p.validate(&s).unwrap();
        }
    }
}
