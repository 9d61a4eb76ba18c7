//! Ordered Bratteli / Borel-Bratteli diagrams: the leveled graph model,
//! structural validation, incidence matrices, telescoping and splitting,
//! special-diagram validation, and the cofinal-extremes check.

use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

pub mod format;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("level {0} out of range (diagram holds {1} levels)")]
    LevelOutOfRange(usize, usize),
    #[error("telescoping cuts must be strictly increasing from 0")]
    BadCuts,
    #[error("vertex {vertex} out of range at level {level}")]
    VertexOutOfRange { level: usize, vertex: usize },
}

/// An edge from `source` in `V_{n-1}` to `range` in `V_n`, with its position
/// in the linear order on `r^{-1}(range)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Edge {
    pub source: usize,
    pub range: usize,
    pub rank: u32,
}

/// One level: the vertex count of `V_n` and the edges arriving from
/// `V_{n-1}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Level {
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
}

/// Periodicity metadata: levels `head_levels + 1 ..` repeat with the given
/// period. Set by generators, used to decide path-space questions that a
/// finite truncation cannot answer.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Periodicity {
    pub head_levels: usize,
    pub period: usize,
}

/// A finite truncation of an ordered (Borel-)Bratteli diagram. Level 0 is
/// the implicit root singleton; `levels[i]` describes level `i + 1`.
#[derive(Clone, PartialEq, Eq)]
pub struct Diagram {
    levels: Vec<Level>,
    periodicity: Option<Periodicity>,
    special: Option<SpecialDiagramSpec>,
}

impl Diagram {
    pub fn new(levels: Vec<Level>) -> Self {
        Diagram { levels, periodicity: None, special: None }
    }

    pub fn with_periodicity(mut self, p: Periodicity) -> Self {
        self.periodicity = Some(p);
        self
    }

    pub fn with_special(mut self, s: SpecialDiagramSpec) -> Self {
        self.special = Some(s);
        self
    }

    /// Builds the stationary diagram repeating one level `n` times.
    pub fn stationary(level: Level, n: usize) -> Self {
        Diagram {
            levels: vec![level; n],
            periodicity: Some(Periodicity { head_levels: 0, period: 1 }),
            special: None,
        }
    }

    /// Number of truncated levels (excluding the root level 0).
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn periodicity(&self) -> Option<Periodicity> {
        self.periodicity
    }

    pub fn special(&self) -> Option<&SpecialDiagramSpec> {
        self.special.as_ref()
    }

    pub fn vertex_count(&self, level: usize) -> usize {
        if level == 0 {
            1
        } else {
            self.levels[level - 1].vertex_count
        }
    }

    pub fn level(&self, n: usize) -> Result<&Level, DiagramError> {
        if n == 0 || n > self.levels.len() {
            return Err(DiagramError::LevelOutOfRange(n, self.levels.len()));
        }
        Ok(&self.levels[n - 1])
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Incoming edges of vertex `v` at level `n`, sorted by order rank.
    pub fn incoming(&self, n: usize, v: usize) -> Result<Vec<Edge>, DiagramError> {
        let level = self.level(n)?;
        if v >= level.vertex_count {
            return Err(DiagramError::VertexOutOfRange { level: n, vertex: v });
        }
        let mut edges: Vec<Edge> = level.edges.iter().copied().filter(|e| e.range == v).collect();
        edges.sort_by_key(|e| e.rank);
        Ok(edges)
    }

    /// Height `h(n, v)`: the number of paths from the root into `(n, v)`,
    /// computed by the level recursion from `h(1, v) = |r^{-1}(v)|`.
    pub fn height(&self, n: usize, v: usize) -> Result<BigUint, DiagramError> {
        let heights = self.heights(n)?;
        heights
            .get(v)
            .cloned()
            .ok_or(DiagramError::VertexOutOfRange { level: n, vertex: v })
    }

    /// Heights of every vertex at level `n`.
    pub fn heights(&self, n: usize) -> Result<Vec<BigUint>, DiagramError> {
        if n == 0 {
            return Ok(vec![BigUint::from(1u32)]);
        }
        self.level(n)?;
        let mut prev: Vec<BigUint> = vec![BigUint::from(1u32)];
        for m in 1..=n {
            let level = &self.levels[m - 1];
            let mut cur = vec![BigUint::from(0u32); level.vertex_count];
            for e in &level.edges {
                cur[e.range] += &prev[e.source];
            }
            prev = cur;
        }
        Ok(prev)
    }

    /// Def 4.1 structural validation up to `up_to_level`; defects are report
    /// entries, never failures.
    pub fn validate(&self, up_to_level: usize) -> ValidationReport {
        let mut defects = Vec::new();
        let top = up_to_level.min(self.levels.len());
        for n in 1..=top {
            let level = &self.levels[n - 1];
            let below = self.vertex_count(n - 1);
            if level.vertex_count == 0 {
                defects.push(Defect {
                    level: n,
                    vertex: None,
                    clause: Clause::EmptyLevel,
                });
            }
            let mut has_in = vec![false; level.vertex_count];
            let mut has_out_below = vec![false; below];
            for e in &level.edges {
                if e.range >= level.vertex_count {
                    defects.push(Defect { level: n, vertex: Some(e.range), clause: Clause::RangeOutside });
                    continue;
                }
                if e.source >= below {
                    defects.push(Defect { level: n, vertex: Some(e.source), clause: Clause::SourceOutside });
                    continue;
                }
                has_in[e.range] = true;
                has_out_below[e.source] = true;
            }
            for (v, ok) in has_in.iter().enumerate() {
                if !ok {
                    defects.push(Defect { level: n, vertex: Some(v), clause: Clause::NoIncoming });
                }
            }
            // s^{-1}(v) != empty is checkable only below the truncation edge
            for (v, ok) in has_out_below.iter().enumerate() {
                if !ok {
                    defects.push(Defect { level: n - 1, vertex: Some(v), clause: Clause::NoOutgoing });
                }
            }
            // order ranks within each r^{-1}(v) must be exactly 0..m-1
            for v in 0..level.vertex_count {
                let mut ranks: Vec<u32> = level
                    .edges
                    .iter()
                    .filter(|e| e.range == v && e.source < below)
                    .map(|e| e.rank)
                    .collect();
                ranks.sort_unstable();
                let want: Vec<u32> = (0..ranks.len() as u32).collect();
                if ranks != want {
                    defects.push(Defect { level: n, vertex: Some(v), clause: Clause::BadRanks });
                }
            }
        }
        ValidationReport { checked_to: top, defects }
    }

    /// Incidence matrix `M_n`: entry `(i, k)` counts the edges from
    /// `v_k(n-1)` to `v_i(n)`.
    pub fn incidence(&self, n: usize) -> Result<IncidenceMatrix, DiagramError> {
        let level = self.level(n)?;
        let cols = self.vertex_count(n - 1);
        let mut entries = vec![vec![0u64; cols]; level.vertex_count];
        for e in &level.edges {
            entries[e.range][e.source] += 1;
        }
        Ok(IncidenceMatrix { level: n, entries })
    }

    /// Telescopes over `0 = cuts[0] < cuts[1] < ...`; composite edges carry
    /// the induced lexicographic order (later edges more significant).
    pub fn telescope(&self, cuts: &[usize]) -> Result<Diagram, DiagramError> {
        if cuts.first() != Some(&0) || cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DiagramError::BadCuts);
        }
        if *cuts.last().unwrap() > self.levels.len() {
            return Err(DiagramError::LevelOutOfRange(*cuts.last().unwrap(), self.levels.len()));
        }
        let mut levels = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let vertex_count = self.vertex_count(hi);
            // enumerate composite paths from V_lo to V_hi per range vertex
            let mut edges = Vec::new();
            for v in 0..vertex_count {
                // each path: (source at V_lo, rank tuple most-significant-last)
                let mut paths: Vec<(usize, Vec<u32>)> = vec![(v, Vec::new())];
                for m in (lo + 1..=hi).rev() {
                    let level = &self.levels[m - 1];
                    let mut next = Vec::new();
                    for (end, ranks) in &paths {
                        let mut incoming: Vec<&Edge> =
                            level.edges.iter().filter(|e| e.range == *end).collect();
                        incoming.sort_by_key(|e| e.rank);
                        for e in incoming {
                            let mut r = ranks.clone();
                            r.push(e.rank);
                            next.push((e.source, r));
                        }
                    }
                    paths = next;
                }
                // lex order: the rank tuple was collected top-down, so the
                // most significant entry sits first; sort lexicographically
                paths.sort_by(|a, b| a.1.cmp(&b.1));
                for (rank, (source, _)) in paths.into_iter().enumerate() {
                    edges.push(Edge { source, range: v, rank: rank as u32 });
                }
            }
            levels.push(Level { vertex_count, edges });
        }
        Ok(Diagram { levels, periodicity: None, special: None })
    }

    /// Splits level `n` by inserting one new vertex per edge of `E_n`,
    /// ordered so telescoping the inserted level back yields the original.
    pub fn split(&self, n: usize) -> Result<Diagram, DiagramError> {
        self.level(n)?;
        let mut levels: Vec<Level> = self.levels[..n - 1].to_vec();
        let old = &self.levels[n - 1];
        // inserted level: vertex j mirrors edge j of E_n
        let inserted = Level {
            vertex_count: old.edges.len(),
            edges: old
                .edges
                .iter()
                .enumerate()
                .map(|(j, e)| Edge { source: e.source, range: j, rank: 0 })
                .collect(),
        };
        let replaced = Level {
            vertex_count: old.vertex_count,
            edges: old
                .edges
                .iter()
                .enumerate()
                .map(|(j, e)| Edge { source: j, range: e.range, rank: e.rank })
                .collect(),
        };
        levels.push(inserted);
        levels.push(replaced);
        levels.extend(self.levels[n..].iter().cloned());
        Ok(Diagram { levels, periodicity: None, special: None })
    }

    /// Decides whether the path space has no cofinal minimal or maximal
    /// paths. Decidable only with periodicity metadata or a validated
    /// special structure; otherwise honestly unknown.
    pub fn check_no_cofinal_extremes(&self) -> CofinalAnswer {
        if let Some(p) = self.periodicity {
            if p.head_levels + 1 + p.period <= self.levels.len() {
                let max_cycle = self.extremal_cycle(p, true);
                let min_cycle = self.extremal_cycle(p, false);
                return if max_cycle || min_cycle {
                    CofinalAnswer::No
                } else {
                    CofinalAnswer::Yes
                };
            }
        }
        if let Some(spec) = &self.special {
            if self.validate_special(spec, self.levels.len()).is_clean()
                && self.validate(self.levels.len()).is_clean()
            {
                // the block structure forbids extremal tails: an all-max or
                // all-min tail must keep entering the diagonal blocks, whose
                // extremal in-edges always route through single-edge chains
                // that die at fresh blocks
                return CofinalAnswer::Yes;
            }
        }
        CofinalAnswer::Unknown(self.levels.len())
    }

    /// Cycle detection in the parent graph of extremal (max or min) edges
    /// composed across one period of levels: `parent(v)` is the source of
    /// the extremal edge into `v`, and an infinite extremal tail exists iff
    /// the composed parent function revisits a vertex.
    fn extremal_cycle(&self, p: Periodicity, maximal: bool) -> bool {
        let start = p.head_levels + 1; // first periodic level index
        let verts = self.vertex_count(start);
        let parent = |n: usize, v: usize| -> usize {
            let level = &self.levels[n - 1];
            let mut best: Option<&Edge> = None;
            for e in level.edges.iter().filter(|e| e.range == v) {
                let better = match best {
                    None => true,
                    Some(b) => {
                        if maximal {
                            e.rank > b.rank
                        } else {
                            e.rank < b.rank
                        }
                    }
                };
                if better {
                    best = Some(e);
                }
            }
            best.map(|e| e.source).unwrap_or(0)
        };
        // compose from level start+period down to start+1: V_{start+period}
        // maps onto V_start, which the periodicity identifies with itself
        let composed: Vec<usize> = (0..verts)
            .map(|v0| {
                let mut v = v0;
                for n in ((start + 1)..=(start + p.period)).rev() {
                    v = parent(n, v);
                }
                v
            })
            .collect();
        let mut seen = vec![false; verts];
        let mut v = 0usize;
        for _ in 0..=verts {
            if seen[v] {
                return true;
            }
            seen[v] = true;
            v = composed[v];
        }
        true
    }

    /// Checks every clause of the special-diagram definition up to
    /// `up_to_level`.
    pub fn validate_special(
        &self,
        spec: &SpecialDiagramSpec,
        up_to_level: usize,
    ) -> SpecialReport {
        let mut violations = Vec::new();
        let top = up_to_level.min(self.levels.len()).min(spec.levels.len());
        for n in 1..=top {
            let sl = &spec.levels[n - 1];
            let level = &self.levels[n - 1];
            // (i): blocks partition V_n with indices j >= n
            let mut seen = vec![0usize; level.vertex_count];
            for b in &sl.blocks {
                if b.j < n {
                    violations.push(SpecialViolation { level: n, clause: SpecialClause::BlockIndexBelowLevel, detail: format!("block index {} below level {n}", b.j) });
                }
                for &v in &b.vertices {
                    if v >= level.vertex_count {
                        violations.push(SpecialViolation { level: n, clause: SpecialClause::UnknownVertex, detail: format!("vertex {v}") });
                    } else {
                        seen[v] += 1;
                    }
                }
                if b.vertices.len() < 2 {
                    violations.push(SpecialViolation { level: n, clause: SpecialClause::BlockTooSmall, detail: format!("|V_{{{n},{}}}| = {} < 2", b.j, b.vertices.len()) });
                }
            }
            if seen.iter().any(|&c| c != 1) {
                violations.push(SpecialViolation { level: n, clause: SpecialClause::BlocksNotPartition, detail: format!("level {n} blocks fail to partition the vertex set") });
            }
            // diagonal split
            let diag = sl.blocks.iter().find(|b| b.j == n);
            match diag {
                None => violations.push(SpecialViolation { level: n, clause: SpecialClause::MissingDiagonal, detail: format!("no block V_{{{n},{n}}}") }),
                Some(d) => {
                    let mut split: Vec<usize> = sl.diag0.iter().chain(sl.diag1.iter()).copied().collect();
                    split.sort_unstable();
                    let mut dv = d.vertices.clone();
                    dv.sort_unstable();
                    if split != dv || sl.diag0.iter().any(|v| sl.diag1.contains(v)) {
                        violations.push(SpecialViolation { level: n, clause: SpecialClause::BadDiagonalSplit, detail: format!("V_{{{n},{n}}}(0) and (1) do not split the diagonal block") });
                    }
                    if sl.diag0.len() < 2 {
                        violations.push(SpecialViolation { level: n, clause: SpecialClause::Diag0TooSmall, detail: format!("|V_{{{n},{n}}}(0)| = {} < 2", sl.diag0.len()) });
                    }
                }
            }
            // (ii): edge membership and rank constraints
            let below = if n >= 2 { Some(&spec.levels[n - 2]) } else { None };
            let block_of = |sl: &SpecialLevel, v: usize| -> Option<usize> {
                sl.blocks.iter().find(|b| b.vertices.contains(&v)).map(|b| b.j)
            };
            for v in 0..level.vertex_count {
                let incoming = self.incoming(n, v).unwrap_or_default();
                let j = match block_of(sl, v) {
                    Some(j) => j,
                    None => continue,
                };
                let in_diag0 = sl.diag0.contains(&v);
                let in_diag1 = sl.diag1.contains(&v);
                if j > n || in_diag1 {
                    if incoming.len() != 1 {
                        violations.push(SpecialViolation { level: n, clause: SpecialClause::SingleEdgeExpected, detail: format!("vertex {v}: |r^-1| = {} != 1", incoming.len()) });
                    }
                } else if in_diag0 && incoming.len() < 4 {
                    violations.push(SpecialViolation { level: n, clause: SpecialClause::Diag0NeedsFourEdges, detail: format!("vertex {v}: |r^-1| = {} < 4", incoming.len()) });
                }
                if let Some(bl) = below {
                    let src_block = |u: usize| block_of(bl, u);
                    if j > n {
                        for e in &incoming {
                            if src_block(e.source) != Some(j) {
                                violations.push(SpecialViolation { level: n, clause: SpecialClause::SourceBlockMismatch, detail: format!("edge into ({n},{v}) from block {:?}, expected {j}", src_block(e.source)) });
                            }
                        }
                    } else if in_diag1 {
                        for e in &incoming {
                            if src_block(e.source) != Some(n) {
                                violations.push(SpecialViolation { level: n, clause: SpecialClause::SourceBlockMismatch, detail: format!("diag1 edge into ({n},{v}) must come from V_{{{},{n}}}", n - 1) });
                            }
                        }
                    } else if in_diag0 && incoming.len() >= 2 {
                        let m = incoming.len();
                        let first = &incoming[0];
                        if src_block(first.source) != Some(n) {
                            violations.push(SpecialViolation { level: n, clause: SpecialClause::OrderConstraint, detail: format!("minimal edge into ({n},{v}) must come from V_{{{},{n}}}", n - 1) });
                        }
                        for e in &incoming[1..m - 1] {
                            if src_block(e.source) != Some(n - 1) {
                                violations.push(SpecialViolation { level: n, clause: SpecialClause::OrderConstraint, detail: format!("interior edge into ({n},{v}) must come from V_{{{},{}}}", n - 1, n - 1) });
                            }
                        }
                        let last = &incoming[m - 1];
                        let last_ok = match src_block(last.source) {
                            Some(jj) if jj > n - 1 => true,
                            Some(jj) if jj == n - 1 => bl.diag1.contains(&last.source),
                            _ => false,
                        };
                        if !last_ok {
                            violations.push(SpecialViolation { level: n, clause: SpecialClause::OrderConstraint, detail: format!("maximal edge into ({n},{v}) must come from V_{{{0},{0}}}(1) or a fresh block", n - 1) });
                        }
                    }
                }
            }
            // s(E_nj) = V_{n-1,j} for j > n: sources must exhaust the block
            if let Some(bl) = below {
                for b in sl.blocks.iter().filter(|b| b.j > n) {
                    let mut sources: Vec<usize> = Vec::new();
                    for &v in &b.vertices {
                        for e in self.incoming(n, v).unwrap_or_default() {
                            sources.push(e.source);
                        }
                    }
                    sources.sort_unstable();
                    sources.dedup();
                    if let Some(src_block) = bl.blocks.iter().find(|bb| bb.j == b.j) {
                        let mut want = src_block.vertices.clone();
                        want.sort_unstable();
                        if sources != want {
                            violations.push(SpecialViolation { level: n, clause: SpecialClause::SourceSurjectivity, detail: format!("s(E_{{{n},{}}}) misses part of V_{{{},{}}}", b.j, n - 1, b.j) });
                        }
                    } else {
                        violations.push(SpecialViolation { level: n, clause: SpecialClause::SourceSurjectivity, detail: format!("level {} has no block {}", n - 1, b.j) });
                    }
                }
            }
        }
        SpecialReport { checked_to: top, violations }
    }
}

impl fmt::Debug for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Diagram ({} levels)", self.levels.len())?;
        for (i, l) in self.levels.iter().enumerate() {
            writeln!(f, "  level {}: {} vertices, {} edges", i + 1, l.vertex_count, l.edges.len())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Clause {
    /// Def 4.1 (i): a level must hold at least one vertex.
    EmptyLevel,
    /// Def 4.1 (ii): r(E_i) must land in V_i.
    RangeOutside,
    /// Def 4.1 (ii): s(E_i) must come from V_{i-1}.
    SourceOutside,
    /// Def 4.1 (ii): r^{-1}(v) nonempty for v outside V_0.
    NoIncoming,
    /// Def 4.1 (ii): s^{-1}(v) nonempty.
    NoOutgoing,
    /// Order ranks must be exactly 0..|r^{-1}(v)|-1.
    BadRanks,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Defect {
    pub level: usize,
    pub vertex: Option<usize>,
    pub clause: Clause,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checked_to: usize,
    pub defects: Vec<Defect>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.defects.is_empty()
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IncidenceMatrix {
    pub level: usize,
    /// `entries[i][k] = |E(v_k(n-1), v_i(n))|`.
    pub entries: Vec<Vec<u64>>,
}

impl IncidenceMatrix {
    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries.first().map_or(0, |r| r.len())
    }

    /// Matrix product `self * rhs` (composing `rhs` below `self`).
    pub fn multiply(&self, rhs: &IncidenceMatrix) -> IncidenceMatrix {
        let rows = self.rows();
        let mid = self.cols();
        let cols = rhs.cols();
        assert_eq!(mid, rhs.rows(), "incidence dimensions must chain");
        let mut entries = vec![vec![0u64; cols]; rows];
        for i in 0..rows {
            for k in 0..cols {
                entries[i][k] = (0..mid).map(|m| self.entries[i][m] * rhs.entries[m][k]).sum();
            }
        }
        IncidenceMatrix { level: self.level, entries }
    }

    /// Row sums must equal `|r^{-1}(v_i)|` and every column must be hit.
    pub fn check_row_column_properties(&self, incoming_counts: &[usize]) -> bool {
        let rows_ok = self
            .entries
            .iter()
            .zip(incoming_counts)
            .all(|(row, &c)| row.iter().sum::<u64>() == c as u64);
        let cols_ok =
            (0..self.cols()).all(|k| self.entries.iter().any(|row| row[k] > 0));
        rows_ok && cols_ok
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CofinalAnswer {
    Yes,
    No,
    Unknown(usize),
}

/// Block data of one level of a special diagram: the partition
/// `V_n = union of V_{nj}` and the diagonal split.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpecialLevel {
    pub blocks: Vec<SpecialBlock>,
    pub diag0: Vec<usize>,
    pub diag1: Vec<usize>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpecialBlock {
    pub j: usize,
    pub vertices: Vec<usize>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpecialDiagramSpec {
    /// `levels[n-1]` describes level `n`.
    pub levels: Vec<SpecialLevel>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SpecialClause {
    BlockIndexBelowLevel,
    UnknownVertex,
    BlockTooSmall,
    BlocksNotPartition,
    MissingDiagonal,
    BadDiagonalSplit,
    Diag0TooSmall,
    SingleEdgeExpected,
    Diag0NeedsFourEdges,
    SourceBlockMismatch,
    OrderConstraint,
    SourceSurjectivity,
}

#[derive(Clone, Debug)]
pub struct SpecialViolation {
    pub level: usize,
    pub clause: SpecialClause,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct SpecialReport {
    pub checked_to: usize,
    pub violations: Vec<SpecialViolation>,
}

impl SpecialReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The one-vertex level with `k` parallel edges ordered 0..k-1.
pub fn cyclic_level(k: u32) -> Level {
    Level {
        vertex_count: 1,
        edges: (0..k).map(|rank| Edge { source: 0, range: 0, rank }).collect(),
    }
}

/// A hand-built special diagram truncated at `depth` levels with block
/// indices up to `depth + 1`. Level `n` holds the diagonal block (two
/// vertices in each half of the split) plus two-vertex fresh blocks for
/// every higher index; minimal edges of the diagonal stars route through
/// the fresh blocks, interior edges through the previous diagonal, and
/// maximal edges through the previous split-off half.
pub fn special_example(depth: usize) -> Diagram {
    let j_max = depth + 1;
    // vertex layout at level n: diag0 = {0,1}, diag1 = {2,3}, then block
    // j > n occupies {4 + 2(j-n-1), 4 + 2(j-n-1) + 1}
    let idx = |level: usize, j: usize, i: usize| -> usize {
        if j == level {
            i
        } else {
            4 + 2 * (j - level - 1) + i
        }
    };
    let mut levels = Vec::with_capacity(depth);
    let mut spec_levels = Vec::with_capacity(depth);
    for n in 1..=depth {
        let vertex_count = 4 + 2 * (j_max - n);
        let mut edges = Vec::new();
        if n == 1 {
            for v in 0..vertex_count {
                let fan = if v < 2 { 4 } else { 1 };
                for rank in 0..fan {
                    edges.push(Edge { source: 0, range: v, rank });
                }
            }
        } else {
            // diagonal stars
            for i in 0..2usize {
                let v = idx(n, n, i);
                edges.push(Edge { source: idx(n - 1, n, i), range: v, rank: 0 });
                edges.push(Edge { source: idx(n - 1, n - 1, 0), range: v, rank: 1 });
                edges.push(Edge { source: idx(n - 1, n - 1, 1), range: v, rank: 2 });
                edges.push(Edge { source: idx(n - 1, n - 1, 2 + i), range: v, rank: 3 });
            }
            // split-off half: single edges from the fresh block below
            for i in 0..2usize {
                edges.push(Edge {
                    source: idx(n - 1, n, i),
                    range: idx(n, n, 2 + i),
                    rank: 0,
                });
            }
            // fresh blocks: single edges within the same block index
            for j in n + 1..=j_max {
                for i in 0..2usize {
                    edges.push(Edge {
                        source: idx(n - 1, j, i),
                        range: idx(n, j, i),
                        rank: 0,
                    });
                }
            }
        }
        levels.push(Level { vertex_count, edges });
        let mut blocks = vec![SpecialBlock { j: n, vertices: vec![0, 1, 2, 3] }];
        for j in n + 1..=j_max {
            blocks.push(SpecialBlock { j, vertices: vec![idx(n, j, 0), idx(n, j, 1)] });
        }
        spec_levels.push(SpecialLevel { blocks, diag0: vec![0, 1], diag1: vec![2, 3] });
    }
    Diagram::new(levels).with_special(SpecialDiagramSpec { levels: spec_levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_adic(n: usize) -> Diagram {
        Diagram::stationary(cyclic_level(2), n)
    }

    #[test]
    fn two_adic_validates_clean() {
        let d = two_adic(6);
        assert!(d.validate(6).is_clean());
    }

    #[test]
    fn isolated_vertex_reported() {
        // two vertices at level 1, edges only into vertex 0
        let d = Diagram::new(vec![Level {
            vertex_count: 2,
            edges: vec![Edge { source: 0, range: 0, rank: 0 }],
        }]);
        let report = d.validate(1);
        assert!(report
            .defects
            .iter()
            .any(|x| x.clause == Clause::NoIncoming && x.vertex == Some(1)));
    }

    #[test]
    fn duplicate_ranks_reported() {
        let d = Diagram::new(vec![Level {
            vertex_count: 1,
            edges: vec![
                Edge { source: 0, range: 0, rank: 0 },
                Edge { source: 0, range: 0, rank: 0 },
                Edge { source: 0, range: 0, rank: 1 },
            ],
        }]);
        let report = d.validate(1);
        assert!(report.defects.iter().any(|x| x.clause == Clause::BadRanks));
    }

    #[test]
    fn heights_of_two_adic_double() {
        let d = two_adic(10);
        for n in 1..=10usize {
            assert_eq!(d.height(n, 0).unwrap(), BigUint::from(1u64 << n));
        }
    }

    #[test]
    fn incidence_of_two_adic() {
        let d = two_adic(3);
        let m = d.incidence(2).unwrap();
        assert_eq!(m.entries, vec![vec![2]]);
        assert!(m.check_row_column_properties(&[2]));
    }

    #[test]
    fn telescoping_two_adic_by_pairs_gives_four_edges() {
        let d = two_adic(4);
        let t = d.telescope(&[0, 2, 4]).unwrap();
        assert_eq!(t.depth(), 2);
        let level = t.level(1).unwrap();
        assert_eq!(level.edges.len(), 4);
        assert_eq!(t.incidence(1).unwrap().entries, vec![vec![4]]);
        assert!(t.validate(2).is_clean());
        // heights agree with the original at the cut levels
        assert_eq!(t.height(1, 0).unwrap(), d.height(2, 0).unwrap());
        assert_eq!(t.height(2, 0).unwrap(), d.height(4, 0).unwrap());
    }

    #[test]
    fn identity_telescope_preserves_diagram() {
        let d = two_adic(3);
        let cuts: Vec<usize> = (0..=3).collect();
        let t = d.telescope(&cuts).unwrap();
        assert_eq!(t.levels(), d.levels());
    }

    #[test]
    fn split_then_telescope_round_trips() {
        let d = two_adic(3);
        let s = d.split(2).unwrap();
        assert_eq!(s.depth(), 4);
        assert!(s.validate(4).is_clean());
        // the inserted level has one vertex per split edge
        assert_eq!(s.level(2).unwrap().vertex_count, 2);
        let cuts = vec![0, 1, 3, 4];
        let back = s.telescope(&cuts).unwrap();
        assert_eq!(back.levels(), d.levels());
    }

    #[test]
    fn split_preserves_heights_of_untouched_levels() {
        let d = two_adic(4);
        let s = d.split(2).unwrap();
        assert_eq!(s.height(1, 0).unwrap(), d.height(1, 0).unwrap());
        // levels shift by one beyond the insertion point
        assert_eq!(s.height(3, 0).unwrap(), d.height(2, 0).unwrap());
        assert_eq!(s.height(5, 0).unwrap(), d.height(4, 0).unwrap());
    }

    #[test]
    fn telescoped_incidence_equals_matrix_product() {
        // three-level diagram with 2 then 3 then 2 vertices
        let d = Diagram::new(vec![
            Level {
                vertex_count: 2,
                edges: vec![
                    Edge { source: 0, range: 0, rank: 0 },
                    Edge { source: 0, range: 0, rank: 1 },
                    Edge { source: 0, range: 1, rank: 0 },
                ],
            },
            Level {
                vertex_count: 3,
                edges: vec![
                    Edge { source: 0, range: 0, rank: 0 },
                    Edge { source: 1, range: 0, rank: 1 },
                    Edge { source: 0, range: 1, rank: 0 },
                    Edge { source: 1, range: 2, rank: 0 },
                    Edge { source: 1, range: 2, rank: 1 },
                ],
            },
            Level {
                vertex_count: 2,
                edges: vec![
                    Edge { source: 0, range: 0, rank: 0 },
                    Edge { source: 1, range: 0, rank: 1 },
                    Edge { source: 2, range: 1, rank: 0 },
                    Edge { source: 0, range: 1, rank: 1 },
                ],
            },
        ]);
        assert!(d.validate(3).is_clean());
        let t = d.telescope(&[0, 3]).unwrap();
        let want = d
            .incidence(3)
            .unwrap()
            .multiply(&d.incidence(2).unwrap())
            .multiply(&d.incidence(1).unwrap());
        assert_eq!(t.incidence(1).unwrap().entries, want.entries);
    }

    #[test]
    fn stationary_diagram_has_cofinal_extremes() {
        let d = two_adic(4);
        assert_eq!(d.check_no_cofinal_extremes(), CofinalAnswer::No);
    }

    #[test]
    fn unmarked_diagram_is_unknown() {
        let d = Diagram::new(two_adic(4).levels().to_vec());
        assert_eq!(d.check_no_cofinal_extremes(), CofinalAnswer::Unknown(4));
    }

    #[test]
    fn special_example_validates() {
        let d = special_example(4);
        assert!(d.validate(4).is_clean(), "{:?}", d.validate(4).defects);
        let spec = d.special().unwrap().clone();
        let report = d.validate_special(&spec, 4);
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn special_example_has_no_cofinal_extremes() {
        let d = special_example(4);
        assert_eq!(d.check_no_cofinal_extremes(), CofinalAnswer::Yes);
        // the max-edge parents of the diagonal always route through the
        // split-off half, whose own parent is a fresh-block chain: trace it
        for n in (2..=4usize).rev() {
            let max_edge = d
                .incoming(n, 0)
                .unwrap()
                .into_iter()
                .max_by_key(|e| e.rank)
                .unwrap();
            assert_eq!(max_edge.source, 2, "max edge must come from the split half");
            let chain = d.incoming(n - 1, max_edge.source).unwrap();
            assert_eq!(chain.len(), 1, "the split half hangs on a single-edge chain");
        }
    }

    #[test]
    fn special_mutants_cite_the_right_clause() {
        let base = special_example(3);
        let spec = base.special().unwrap().clone();

        // (1) shrink the diagonal-0 half to one vertex
        let mut m1 = spec.clone();
        m1.levels[1].diag0 = vec![0];
        m1.levels[1].diag1 = vec![1, 2, 3];
        let r1 = base.validate_special(&m1, 3);
        assert!(r1.violations.iter().any(|v| v.clause == SpecialClause::Diag0TooSmall));

        // (2) rewire a fresh-block edge to a source in the wrong block
        let mut levels = base.levels().to_vec();
        let moved = levels[1]
            .edges
            .iter()
            .position(|e| e.range == 6 && e.rank == 0)
            .expect("fresh-block edge");
        levels[1].edges[moved].source = 0;
        let m2 = Diagram::new(levels);
        let r2 = m2.validate_special(&spec, 3);
        assert!(r2.violations.iter().any(|v| v.clause == SpecialClause::SourceBlockMismatch));

        // (3) a one-vertex block
        let mut m3 = spec.clone();
        m3.levels[0].blocks[1].vertices = vec![4];
        let r3 = base.validate_special(&m3, 3);
        assert!(r3.violations.iter().any(|v| v.clause == SpecialClause::BlockTooSmall));

        // (4) drop one edge of a diagonal star
        let mut levels4 = base.levels().to_vec();
        let dropped = levels4[2]
            .edges
            .iter()
            .position(|e| e.range == 0 && e.rank == 3)
            .expect("maximal star edge");
        levels4[2].edges.remove(dropped);
        let m4 = Diagram::new(levels4);
        let r4 = m4.validate_special(&spec, 3);
        assert!(r4.violations.iter().any(|v| v.clause == SpecialClause::Diag0NeedsFourEdges));

        // (5) swap the order so the minimal star edge leaves the previous
        // diagonal instead of the fresh block
        let mut levels5 = base.levels().to_vec();
        for e in levels5[2].edges.iter_mut() {
            if e.range == 0 && e.rank == 0 {
                e.rank = 1;
            } else if e.range == 0 && e.rank == 1 {
                e.rank = 0;
            }
        }
        let m5 = Diagram::new(levels5);
        let r5 = m5.validate_special(&spec, 3);
        assert!(r5.violations.iter().any(|v| v.clause == SpecialClause::OrderConstraint));
    }
}
