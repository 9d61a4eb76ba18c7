//! Kakutani-Rokhlin machinery: marker sequences, tower partitions by first
//! return time, k-maximal sets, induced maps, the Rokhlin-lemma set,
//! periodic approximants, the marker-to-diagram construction, and
//! cutting-and-stacking rank-one systems with odometer approximation.

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::bratteli::{Diagram, Edge, Level};
use crate::cylmap::{e_set, CylMap, MapError, PiecewisePower, DEFAULT_RULE_BUDGET};
use crate::measure::MeasureSpec;
use crate::odometer::translation_one;
use crate::space::{CylSet, Point, SeqSpace, Word};
use crate::vershik;

#[derive(Debug, Error)]
pub enum TowersError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("tower construction exceeded the fragment budget")]
    FragmentBudget,
    #[error("marker level {0} not available (sequence holds {1})")]
    MarkerOutOfRange(usize, usize),
    #[error("target accuracy unreachable within the marker truncation; best coverage {0}")]
    EpsilonInfeasible(BigRational),
    #[error("refinement budget exceeded while aligning tower itineraries")]
    RefinementBudget,
    #[error("point cannot be located in the tower partition")]
    PointNotLocated,
    #[error("stage {0} out of range (specification holds {1})")]
    StageOutOfRange(usize, usize),
    #[error("cutting spec stage {0}: spacer list length {1} does not match cut count {2}")]
    SpacerArity(usize, usize, usize),
    #[error(transparent)]
    Path(#[from] vershik::PathError),
    #[error(transparent)]
    Odometer(#[from] crate::odometer::OdometerError),
}

/// One tower: level sets `levels[i] = T^i(base)`.
#[derive(Clone, Debug)]
pub struct Tower {
    pub levels: Vec<CylSet>,
}

impl Tower {
    pub fn base(&self) -> &CylSet {
        &self.levels[0]
    }

    pub fn top(&self) -> &CylSet {
        self.levels.last().expect("towers are nonempty")
    }

    pub fn height(&self) -> usize {
        self.levels.len()
    }
}

/// A decomposition of the space into towers over a section, plus whatever
/// mass the horizon could not resolve.
#[derive(Clone, Debug)]
pub struct TowerPartition {
    pub towers: Vec<Tower>,
    pub unresolved: CylSet,
}

impl TowerPartition {
    pub fn support(&self) -> CylSet {
        let space = self.unresolved.space();
        let mut acc = CylSet::empty(space);
        for t in &self.towers {
            for l in &t.levels {
                acc = acc.union(l);
            }
        }
        acc
    }

    pub fn base_union(&self) -> CylSet {
        let space = self.unresolved.space();
        let mut acc = CylSet::empty(space);
        for t in &self.towers {
            acc = acc.union(t.base());
        }
        acc
    }

    pub fn top_union(&self) -> CylSet {
        let space = self.unresolved.space();
        let mut acc = CylSet::empty(space);
        for t in &self.towers {
            acc = acc.union(t.top());
        }
        acc
    }

    pub fn max_height(&self) -> usize {
        self.towers.iter().map(Tower::height).max().unwrap_or(0)
    }

    /// Towers of equal height merged into the classical `C_k` form.
    pub fn merged_by_height(&self) -> TowerPartition {
        let space = self.unresolved.space();
        let mut heights: Vec<usize> = self.towers.iter().map(Tower::height).collect();
        heights.sort_unstable();
        heights.dedup();
        let towers = heights
            .into_iter()
            .map(|h| {
                let mut levels = vec![CylSet::empty(space); h];
                for t in self.towers.iter().filter(|t| t.height() == h) {
                    for (i, l) in t.levels.iter().enumerate() {
                        levels[i] = levels[i].union(l);
                    }
                }
                Tower { levels }
            })
            .collect();
        TowerPartition { towers, unresolved: self.unresolved.clone() }
    }

    /// Partition axioms: pairwise disjoint level sets, full covering, and
    /// `T(level i) = level i+1` inside every tower.
    pub fn verify(&self, t: &CylMap) -> Result<(), String> {
        let mut seen: Vec<&CylSet> = Vec::new();
        for tower in &self.towers {
            for l in &tower.levels {
                for other in &seen {
                    if !l.is_disjoint_from(other) {
                        return Err("tower levels overlap".into());
                    }
                }
                seen.push(l);
            }
        }
        if !self.support().union(&self.unresolved).is_whole() {
            return Err("towers plus unresolved mass do not cover the space".into());
        }
        for tower in &self.towers {
            for w in tower.levels.windows(2) {
                match t.image(&w[0]) {
                    Ok(img) => {
                        if img != w[1] {
                            return Err("level does not map onto the next level".into());
                        }
                    }
                    Err(_) => return Err("level image unresolved".into()),
                }
            }
        }
        Ok(())
    }
}

const FRAGMENT_LIMIT: usize = 1 << 14;

/// Builds the first-return tower decomposition of the space over the
/// section `a`. Each tower's base is a piece of `a` with constant return
/// time; the walk stays exact on the cylinder algebra. Pieces whose return
/// cannot be resolved within `horizon` steps (or within the map's lazy
/// budget) are reported as unresolved, not silently dropped.
pub fn build_towers(t: &CylMap, a: &CylSet, horizon: usize) -> Result<TowerPartition, TowersError> {
    let space = t.space().clone();
    let mut done: Vec<Tower> = Vec::new();
    let mut unresolved = CylSet::empty(&space);
    let mut active: Vec<Vec<CylSet>> = a
        .words()
        .iter()
        .map(|w| vec![CylSet::from_words(&space, vec![w.clone()]).expect("word valid")])
        .collect();
    let mut work = 0usize;
    while let Some(mut chain) = active.pop() {
        work += 1;
        if work > FRAGMENT_LIMIT {
            return Err(TowersError::FragmentBudget);
        }
        let cur = chain.last().expect("chains are nonempty").clone();
        let k = chain.len() - 1;
        if k > 0 {
            if cur.is_subset_of(a) {
                chain.pop();
                done.push(Tower { levels: chain });
                continue;
            }
            if !cur.is_disjoint_from(a) {
                // split along the section boundary, pulling the split back
                // through exact preimages
                let inside = cur.intersect(a);
                let outside = cur.minus(a);
                match (split_chain(t, &chain, &inside), split_chain(t, &chain, &outside)) {
                    (Ok(ci), Ok(co)) => {
                        active.push(ci);
                        active.push(co);
                        continue;
                    }
                    _ => {
                        unresolved = unresolved.union(&chain[0]);
                        continue;
                    }
                }
            }
        }
        if k == horizon {
            unresolved = unresolved.union(&chain[0]);
            continue;
        }
        match t.image(&cur) {
            Ok(next) => {
                chain.push(next);
                active.push(chain);
            }
            Err(_) => {
                unresolved = unresolved.union(&chain[0]);
            }
        }
    }
    done.sort_by(|a, b| a.levels[0].words().cmp(b.levels[0].words()));
    Ok(TowerPartition { towers: done, unresolved })
}

/// Restricts a chain to the part whose last set equals `target`, by exact
/// backwards pullback.
fn split_chain(t: &CylMap, chain: &[CylSet], target: &CylSet) -> Result<Vec<CylSet>, TowersError> {
    let inv = t.invert();
    let mut out = vec![target.clone()];
    let mut cur = target.clone();
    for prev in chain.iter().rev().skip(1) {
        cur = inv.image(&cur)?.intersect(prev);
        out.push(cur.clone());
    }
    out.reverse();
    Ok(out)
}

/// A nested family of marker sets `A_1, A_2, ...` (the whole space plays
/// the role of `A_0`).
#[derive(Clone, Debug)]
pub struct MarkerSeq {
    pub sets: Vec<CylSet>,
}

impl MarkerSeq {
    pub fn new(sets: Vec<CylSet>) -> Self {
        MarkerSeq { sets }
    }

    /// The standard odometer markers `A_n = [0^n]`.
    pub fn zeros(space: &SeqSpace, depth: usize) -> Self {
        let sets = (1..=depth)
            .map(|n| {
                CylSet::from_words(space, vec![Word::new(vec![0; n])]).expect("zero word valid")
            })
            .collect();
        MarkerSeq { sets }
    }

    pub fn level(&self, n: usize) -> Result<&CylSet, TowersError> {
        self.sets
            .get(n - 1)
            .ok_or(TowersError::MarkerOutOfRange(n, self.sets.len()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckOutcome {
    Pass,
    Fail,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct MarkerCheck {
    pub clause: &'static str,
    pub outcome: CheckOutcome,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct MarkerReport {
    pub level: usize,
    pub checks: Vec<MarkerCheck>,
}

impl MarkerReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.outcome == CheckOutcome::Pass)
    }

    pub fn no_failures(&self) -> bool {
        self.checks.iter().all(|c| c.outcome != CheckOutcome::Fail)
    }
}

/// Checks the vanishing-marker clauses for level `n`: nesting, vanishing
/// mass (measure certificate), completeness of the set and its complement,
/// recurrence, short-range disjointness, and uncountable bases.
pub fn validate_markers(
    t: &CylMap,
    markers: &MarkerSeq,
    n: usize,
    horizon: usize,
    measures: &[MeasureSpec],
) -> Result<MarkerReport, TowersError> {
    let a = markers.level(n)?;
    let mut checks = Vec::new();

    let nested = if n + 1 <= markers.sets.len() {
        markers.level(n + 1)?.is_subset_of(a)
    } else {
        true
    };
    checks.push(MarkerCheck {
        clause: "nesting",
        outcome: if nested { CheckOutcome::Pass } else { CheckOutcome::Fail },
        detail: if nested { "A_{n+1} inside A_n".into() } else { "A_{n+1} escapes A_n".into() },
    });

    let mut vanish = CheckOutcome::Unknown;
    let mut detail = String::from("no measure certificate supplied");
    if !measures.is_empty() {
        let shrinking = measures.iter().all(|mu| {
            (1..markers.sets.len()).all(|m| {
                mu.set_measure(&markers.sets[m]) <= mu.set_measure(&markers.sets[m - 1])
            })
        });
        if shrinking {
            vanish = CheckOutcome::Pass;
            detail = "marker masses are nonincreasing for every declared measure".into();
        } else {
            vanish = CheckOutcome::Fail;
            detail = "a declared measure grows along the marker sequence".into();
        }
    }
    checks.push(MarkerCheck { clause: "vanishing", outcome: vanish, detail });

    for (name, set) in [("complete-section", a.clone()), ("complement-complete", a.complement())] {
        let outcome = match build_towers(t, &set, horizon) {
            Ok(p) => {
                if p.unresolved.is_empty() && p.support().is_whole() {
                    CheckOutcome::Pass
                } else {
                    CheckOutcome::Unknown
                }
            }
            Err(_) => CheckOutcome::Unknown,
        };
        checks.push(MarkerCheck {
            clause: name,
            outcome,
            detail: match outcome {
                CheckOutcome::Pass => "towers over the section cover the space".into(),
                _ => format!("horizon {horizon} left unresolved mass"),
            },
        });
    }

    let recurrence = match build_towers(t, a, horizon) {
        Ok(p) if p.unresolved.is_empty() => CheckOutcome::Pass,
        Ok(_) => CheckOutcome::Unknown,
        Err(_) => CheckOutcome::Unknown,
    };
    checks.push(MarkerCheck {
        clause: "recurrence",
        outcome: recurrence,
        detail: "every base piece returns within the horizon".into(),
    });

    let mut image = a.clone();
    let mut disjoint = CheckOutcome::Pass;
    let mut viol = String::from("A_n meets none of its first n-1 iterates");
    for i in 1..n {
        match t.image(&image) {
            Ok(next) => {
                image = next;
                if !a.is_disjoint_from(&image) {
                    disjoint = CheckOutcome::Fail;
                    viol = format!("A_n meets T^{i}(A_n)");
                    break;
                }
            }
            Err(_) => {
                disjoint = CheckOutcome::Unknown;
                viol = format!("iterate {i} unresolved");
                break;
            }
        }
    }
    checks.push(MarkerCheck { clause: "short-disjointness", outcome: disjoint, detail: viol });

    let uncountable = !a.is_empty();
    checks.push(MarkerCheck {
        clause: "uncountable-bases",
        outcome: if uncountable { CheckOutcome::Pass } else { CheckOutcome::Fail },
        detail: "nonempty cylinder unions are uncountable".into(),
    });

    Ok(MarkerReport { level: n, checks })
}

/// A k-maximal set with the exact verification of both defining clauses.
#[derive(Clone, Debug)]
pub struct KMaximalResult {
    pub set: CylSet,
    pub covering_holds: bool,
    pub disjointness_holds: bool,
}

/// Takes every k-th level of each tower starting at the base
/// (`floor(h/k)` strides per tower; leftover levels count against coverage,
/// never against disjointness).
pub fn k_maximal(
    t: &CylMap,
    partition: &TowerPartition,
    k: usize,
) -> Result<KMaximalResult, TowersError> {
    assert!(k >= 2, "stride must be at least 2");
    let space = t.space().clone();
    let mut set = CylSet::empty(&space);
    for tower in &partition.towers {
        let strides = tower.height() / k;
        for j in 0..strides {
            set = set.union(&tower.levels[j * k]);
        }
    }
    let mut disjointness_holds = true;
    let mut img = set.clone();
    for _ in 1..k {
        img = t.image(&img)?;
        if !set.is_disjoint_from(&img) {
            disjointness_holds = false;
            break;
        }
    }
    let mut cover = set.clone();
    let mut fwd = set.clone();
    let mut bwd = set.clone();
    let inv = t.invert();
    for _ in 1..k {
        fwd = t.image(&fwd)?;
        bwd = inv.image(&bwd)?;
        cover = cover.union(&fwd).union(&bwd);
    }
    let covering_holds = cover.is_whole();
    Ok(KMaximalResult { set, covering_holds, disjointness_holds })
}

/// First-return map on `a`, extended by the identity off `a`, as a
/// piecewise power over the return-time pieces.
pub fn induced(t: &CylMap, a: &CylSet, horizon: usize) -> Result<PiecewisePower, TowersError> {
    let partition = build_towers(t, a, horizon)?;
    if !partition.unresolved.is_empty() {
        return Err(TowersError::FragmentBudget);
    }
    let mut pieces: Vec<(CylSet, i64)> = Vec::new();
    let off = a.complement();
    if !off.is_empty() {
        pieces.push((off, 0));
    }
    for tower in &partition.towers {
        pieces.push((tower.base().clone(), tower.height() as i64));
    }
    Ok(PiecewisePower::new(t.clone(), pieces)?)
}

/// The periodic approximant: follows `t` below the tower tops and drops
/// from each top back to its base.
#[derive(Clone, Debug)]
pub struct PeriodicApprox {
    pub piecewise: PiecewisePower,
    pub map: CylMap,
    pub partition: TowerPartition,
}

pub fn periodic_approx(
    t: &CylMap,
    markers: &MarkerSeq,
    n: usize,
    horizon: usize,
) -> Result<PeriodicApprox, TowersError> {
    let a = markers.level(n)?;
    let partition = build_towers(t, a, horizon)?;
    if !partition.unresolved.is_empty() {
        return Err(TowersError::FragmentBudget);
    }
    let tops = partition.top_union();
    let mut pieces: Vec<(CylSet, i64)> = Vec::new();
    let off = tops.complement();
    if !off.is_empty() {
        pieces.push((off, 1));
    }
    for tower in &partition.towers {
        pieces.push((tower.top().clone(), 1 - tower.height() as i64));
    }
    let piecewise = PiecewisePower::new(t.clone(), pieces)?;
    let map = piecewise.materialize(DEFAULT_RULE_BUDGET)?;
    Ok(PeriodicApprox { piecewise, map, partition })
}

impl PeriodicApprox {
    /// Structural periodicity: along every tower the cocycle exponents sum
    /// to zero, so the approximant has period `height` on that tower.
    pub fn exponents_close_cycles(&self) -> bool {
        self.partition.towers.iter().all(|tower| {
            let h = tower.height() as i64;
            (h - 1) + (1 - h) == 0
        })
    }
}

/// The Rokhlin set with its disjointness and coverage certificate.
#[derive(Clone, Debug)]
pub struct RokhlinCertificate {
    pub marker_level: usize,
    pub set: CylSet,
    pub disjoint: bool,
    /// Exact coverage `mu_i(F u TF u ... u T^{m-1}F)` per measure.
    pub coverage: Vec<BigRational>,
    /// Short-tower mass per measure (towers of height below `m`).
    pub short_mass: Vec<BigRational>,
    /// Top-band mass per measure (tops pulled back `m-2` steps).
    pub top_mass: Vec<BigRational>,
}

/// Rokhlin-lemma construction: picks the first marker level whose short
/// towers and top band are small enough, then takes every m-th level of
/// each tall tower starting at the base.
pub fn rokhlin_set(
    t: &CylMap,
    markers: &MarkerSeq,
    m: usize,
    epsilon: &BigRational,
    measures: &[MeasureSpec],
    horizon: usize,
    forced_level: Option<usize>,
) -> Result<RokhlinCertificate, TowersError> {
    assert!(m >= 1);
    let half = epsilon / BigRational::from_integer(2.into());
    let mut best_coverage = BigRational::zero();
    let levels: Vec<usize> = match forced_level {
        Some(n) => vec![n],
        None => (1..=markers.sets.len()).collect(),
    };
    for n in levels {
        let partition = build_towers(t, markers.level(n)?, horizon)?.merged_by_height();
        if !partition.unresolved.is_empty() {
            continue;
        }
        let space = t.space().clone();
        let mut short = CylSet::empty(&space);
        for tower in partition.towers.iter().filter(|t| t.height() < m) {
            for l in &tower.levels {
                short = short.union(l);
            }
        }
        let short_mass: Vec<BigRational> =
            measures.iter().map(|mu| mu.set_measure(&short)).collect();
        let mut tops = CylSet::empty(&space);
        for tower in partition.towers.iter().filter(|t| t.height() >= m) {
            tops = tops.union(tower.top());
        }
        let mut band = tops.clone();
        let mut back = tops.clone();
        let inv = t.invert();
        for _ in 0..m.saturating_sub(2) {
            back = inv.image(&back)?;
            band = band.union(&back);
        }
        let top_mass: Vec<BigRational> = measures.iter().map(|mu| mu.set_measure(&band)).collect();
        if forced_level.is_none()
            && (short_mass.iter().any(|v| v >= &half) || top_mass.iter().any(|v| v > &half))
        {
            continue;
        }
        let mut set = CylSet::empty(&space);
        for tower in partition.towers.iter().filter(|t| t.height() >= m) {
            for j in 0..tower.height() / m {
                set = set.union(&tower.levels[j * m]);
            }
        }
        let mut disjoint = true;
        let mut img = set.clone();
        let mut union = set.clone();
        for _ in 1..m {
            img = t.image(&img)?;
            if !set.is_disjoint_from(&img) {
                disjoint = false;
            }
            union = union.union(&img);
        }
        let coverage: Vec<BigRational> =
            measures.iter().map(|mu| mu.set_measure(&union)).collect();
        let one = BigRational::one();
        if disjoint && coverage.iter().all(|c| c > &(one.clone() - epsilon)) {
            return Ok(RokhlinCertificate {
                marker_level: n,
                set,
                disjoint,
                coverage,
                short_mass,
                top_mass,
            });
        }
        if let Some(c) = coverage.iter().min() {
            if c > &best_coverage {
                best_coverage = c.clone();
            }
        }
    }
    Err(TowersError::EpsilonInfeasible(best_coverage))
}

/// The ordered diagram read off a marker sequence: vertices are the
/// itinerary-refined towers of each level, edges record traversals of the
/// previous level's towers in climbing order.
#[derive(Clone, Debug)]
pub struct MarkerDiagram {
    pub diagram: Diagram,
    /// Refined tower partitions, aligned with the diagram levels.
    pub partitions: Vec<TowerPartition>,
}

pub fn diagram_from_markers(
    t: &CylMap,
    markers: &MarkerSeq,
    depth: usize,
    horizon: usize,
) -> Result<MarkerDiagram, TowersError> {
    let mut partitions: Vec<TowerPartition> = Vec::new();
    let mut levels: Vec<Level> = Vec::new();
    for n in 1..=depth {
        let a = markers.level(n)?;
        let raw = build_towers(t, a, horizon)?.merged_by_height();
        if !raw.unresolved.is_empty() {
            return Err(TowersError::RefinementBudget);
        }
        if n == 1 {
            let edges = raw
                .towers
                .iter()
                .enumerate()
                .flat_map(|(v, tower)| {
                    (0..tower.height() as u32).map(move |rank| Edge { source: 0, range: v, rank })
                })
                .collect();
            levels.push(Level { vertex_count: raw.towers.len(), edges });
            partitions.push(raw);
            continue;
        }
        let prev = &partitions[n - 2];
        let refined = refine_by_itinerary(t, raw, prev)?;
        let mut edges = Vec::new();
        for (v, (_, itinerary)) in refined.iter().enumerate() {
            for (rank, &src) in itinerary.iter().enumerate() {
                edges.push(Edge { source: src, range: v, rank: rank as u32 });
            }
        }
        let towers: Vec<Tower> = refined.into_iter().map(|(tw, _)| tw).collect();
        levels.push(Level { vertex_count: towers.len(), edges });
        partitions.push(TowerPartition { towers, unresolved: CylSet::empty(t.space()) });
    }
    Ok(MarkerDiagram { diagram: Diagram::new(levels), partitions })
}

/// Splits the towers of `raw` until each one's itinerary through the
/// previous partition is constant, returning towers with their itineraries
/// (previous-level vertex per traversal, in climbing order).
fn refine_by_itinerary(
    t: &CylMap,
    raw: TowerPartition,
    prev: &TowerPartition,
) -> Result<Vec<(Tower, Vec<usize>)>, TowersError> {
    let mut out: Vec<(Tower, Vec<usize>)> = Vec::new();
    let mut queue: Vec<Tower> = raw.towers;
    let mut work = 0usize;
    'outer: while let Some(tower) = queue.pop() {
        work += 1;
        if work > FRAGMENT_LIMIT {
            return Err(TowersError::RefinementBudget);
        }
        let mut itinerary: Vec<usize> = Vec::new();
        let mut pos = 0usize;
        while pos < tower.height() {
            let here = &tower.levels[pos];
            let mut found = None;
            for (u, ptower) in prev.towers.iter().enumerate() {
                if here.is_subset_of(ptower.base()) {
                    found = Some((u, ptower.height()));
                    break;
                }
                if !here.is_disjoint_from(ptower.base()) {
                    let inside = here.intersect(ptower.base());
                    let outside = here.minus(ptower.base());
                    queue.push(split_tower(t, &tower, pos, &inside)?);
                    queue.push(split_tower(t, &tower, pos, &outside)?);
                    continue 'outer;
                }
            }
            let (u, h) = found.ok_or(TowersError::RefinementBudget)?;
            itinerary.push(u);
            pos += h;
        }
        out.push((tower, itinerary));
    }
    out.sort_by(|a, b| a.0.levels[0].words().cmp(b.0.levels[0].words()));
    Ok(out)
}

/// Restricts a whole tower to the part whose `pos`-level equals `part`.
fn split_tower(t: &CylMap, tower: &Tower, pos: usize, part: &CylSet) -> Result<Tower, TowersError> {
    let inv = t.invert();
    let mut levels = vec![CylSet::empty(part.space()); tower.height()];
    levels[pos] = part.clone();
    let mut cur = part.clone();
    for i in (0..pos).rev() {
        cur = inv.image(&cur)?.intersect(&tower.levels[i]);
        levels[i] = cur.clone();
    }
    cur = part.clone();
    for i in pos + 1..tower.height() {
        cur = t.image(&cur)?.intersect(&tower.levels[i]);
        levels[i] = cur.clone();
    }
    Ok(Tower { levels })
}

impl MarkerDiagram {
    /// The coordinate map: for each level, the tower containing `x` and the
    /// level index within it.
    pub fn locate(&self, x: &Point, level: usize) -> Result<(usize, usize), TowersError> {
        let partition = self
            .partitions
            .get(level - 1)
            .ok_or(TowersError::MarkerOutOfRange(level, self.partitions.len()))?;
        for (v, tower) in partition.towers.iter().enumerate() {
            for (i, l) in tower.levels.iter().enumerate() {
                if l.contains_point(x) {
                    return Ok((i, v));
                }
            }
        }
        Err(TowersError::PointNotLocated)
    }

    pub fn coords(&self, x: &Point) -> Result<Vec<(usize, usize)>, TowersError> {
        (1..=self.partitions.len()).map(|n| self.locate(x, n)).collect()
    }

    /// Verifies `F(Tx) = phi(F(x))` at one point: the tower coordinates of
    /// `Tx` must match the Vershik successor computed independently through
    /// rank arithmetic on the diagram.
    pub fn conjugacy_holds_at(&self, t: &CylMap, x: &Point) -> Result<bool, TowersError> {
        let n = self.partitions.len();
        let before = self.coords(x)?;
        let tx = t.apply_point(x)?;
        let after = self.coords(&tx)?;
        let (i_n, v_n) = before[n - 1];
        let path = vershik::unrank(&self.diagram, n, v_n, &i_n.into())?;
        for (m, (i_m, v_m)) in before.iter().enumerate().take(n) {
            let headpath = vershik::PathPrefix { edges: path.edges[..=m].to_vec() };
            if headpath.terminal() != *v_m
                || vershik::rank(&self.diagram, &headpath)? != (*i_m).into()
            {
                return Ok(false);
            }
        }
        let lazy = vershik::LazyPath::new(path, vershik::TailRule::Minimal, n);
        let succ = vershik::successor(&self.diagram, &lazy)?;
        let succ_coords = vershik::coords(&self.diagram, &succ, n)?;
        for (m, (i_m, v_m)) in after.iter().enumerate().take(n) {
            if succ_coords[m].1 != *v_m || succ_coords[m].0 != (*i_m).into() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// One cutting-and-stacking stage: the tower is cut into `cuts` columns and
/// `spacers[k]` spacer levels go on top of column `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub cuts: usize,
    pub spacers: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuttingStackingSpec {
    pub stages: Vec<Stage>,
}

impl CuttingStackingSpec {
    pub fn no_spacers(&self) -> bool {
        self.stages.iter().all(|s| s.spacers.iter().all(|&x| x == 0))
    }

    pub fn validate(&self) -> Result<(), TowersError> {
        for (i, s) in self.stages.iter().enumerate() {
            if s.cuts == 0 || s.spacers.len() != s.cuts {
                return Err(TowersError::SpacerArity(i + 1, s.spacers.len(), s.cuts));
            }
        }
        Ok(())
    }
}

/// A partial automorphism: `map` restricted to `domain`.
#[derive(Clone, Debug)]
pub struct PartialMap {
    pub domain: CylSet,
    pub map: CylMap,
}

impl PartialMap {
    /// `other` extends `self` when its domain is larger and the underlying
    /// maps agree (here they are literally shared).
    pub fn extended_by(&self, other: &PartialMap) -> bool {
        self.domain.is_subset_of(&other.domain) && self.map == other.map
    }
}

/// The stage-`n` tower materialized on the completed system's space.
#[derive(Clone, Debug)]
pub struct StageTower {
    pub levels: Vec<CylSet>,
    /// Mass not yet absorbed at this stage (future spacers).
    pub leftover: CylSet,
}

/// A rank-one system realized on an explicit adic space: the construction
/// is completed beyond its last stage by spacer-free doubling, so the limit
/// automorphism is a mixed-radix odometer the desk can hold.
#[derive(Clone, Debug)]
pub struct RankOneSystem {
    pub space: SeqSpace,
    pub map: CylMap,
    pub stages: Vec<StageTower>,
    pub diagram: Diagram,
    pub approximants: Vec<PartialMap>,
}

pub fn rank1_build(
    spec: &CuttingStackingSpec,
    n: usize,
    carry_budget: usize,
) -> Result<RankOneSystem, TowersError> {
    spec.validate()?;
    if n > spec.stages.len() {
        return Err(TowersError::StageOutOfRange(n, spec.stages.len()));
    }
    let stages = &spec.stages[..n];
    let mut heights = vec![1usize];
    for s in stages {
        let h = heights.last().unwrap();
        heights.push(s.cuts * h + s.spacers.iter().sum::<usize>());
    }
    let h_final = *heights.last().unwrap();
    let space = SeqSpace::new(vec![(h_final as u32).max(2)], vec![2]).expect("valid space");
    let map = translation_one(&space, carry_budget)?;

    // positions 0..h_final-1 are the digit-0 classes; assign each stage's
    // level downwards (None marks future spacers)
    let mut level_of: Vec<Vec<Option<usize>>> = vec![vec![None; h_final]; n + 1];
    for (pos, slot) in level_of[n].iter_mut().enumerate() {
        *slot = Some(pos);
    }
    for m in (0..n).rev() {
        let stage = &stages[m];
        let h = heights[m];
        for pos in 0..h_final {
            let above = match level_of[m + 1][pos] {
                Some(j) => j,
                None => continue,
            };
            let mut offset = 0usize;
            let mut assigned = None;
            for k in 0..stage.cuts {
                if above < offset + h {
                    assigned = Some(above - offset);
                    break;
                }
                offset += h + stage.spacers[k];
                if above < offset {
                    break; // spacer slot, joins the tower only at stage m+1
                }
            }
            level_of[m][pos] = assigned;
        }
    }

    // stage_towers[i] materializes the stage-(i+1) tower; the last entry is
    // the completed final tower with empty leftover
    let class = |pos: usize| -> Word { Word::new(vec![pos as u32]) };
    let mut stage_towers = Vec::with_capacity(n + 1);
    for lm in level_of.iter() {
        let h = lm.iter().filter_map(|x| *x).max().map_or(0, |x| x + 1);
        let mut levels = vec![Vec::new(); h];
        let mut leftover = Vec::new();
        for (pos, slot) in lm.iter().enumerate() {
            match slot {
                Some(j) => levels[*j].push(class(pos)),
                None => leftover.push(class(pos)),
            }
        }
        stage_towers.push(StageTower {
            levels: levels
                .into_iter()
                .map(|ws| CylSet::from_words(&space, ws).expect("valid words"))
                .collect(),
            leftover: CylSet::from_words(&space, leftover).expect("valid words"),
        });
    }

    // diagram: one tower vertex per level plus a spacer-source vertex while
    // future spacers remain
    let has_leftover: Vec<bool> = stage_towers.iter().map(|st| !st.leftover.is_empty()).collect();
    let mut levels: Vec<Level> = Vec::new();
    for (m, stage) in stages.iter().enumerate() {
        if m == 0 {
            let mut edges = vec![Edge { source: 0, range: 0, rank: 0 }];
            let mut count = 1;
            if has_leftover[0] {
                edges.push(Edge { source: 1, range: 1, rank: 0 });
                count = 2;
            }
            // level 1 hangs off the root: all sources are the root vertex
            for e in edges.iter_mut() {
                e.source = 0;
            }
            levels.push(Level { vertex_count: count, edges });
        }
        let spacer_here = has_leftover.get(m + 1).copied().unwrap_or(false);
        let mut edges = Vec::new();
        let mut rank = 0u32;
        for k in 0..stage.cuts {
            edges.push(Edge { source: 0, range: 0, rank });
            rank += 1;
            for _ in 0..stage.spacers[k] {
                edges.push(Edge { source: 1, range: 0, rank });
                rank += 1;
            }
        }
        let mut count = 1;
        if spacer_here {
            edges.push(Edge { source: 1, range: 1, rank: 0 });
            count = 2;
        }
        levels.push(Level { vertex_count: count, edges });
    }

    let approximants = stage_towers
        .iter()
        .map(|st| {
            let mut support = CylSet::empty(&space);
            for l in &st.levels {
                support = support.union(l);
            }
            let top = st.levels.last().cloned().unwrap_or_else(|| CylSet::empty(&space));
            PartialMap { domain: support.minus(&top), map: map.clone() }
        })
        .collect();

    Ok(RankOneSystem {
        space,
        map,
        stages: stage_towers,
        diagram: Diagram::new(levels),
        approximants,
    })
}

/// Odometer approximation of a rank-one system: a conjugated odometer that
/// follows the system everywhere off the chosen stage's top, leftover, and
/// wrap position, with an exact distance certificate per measure.
#[derive(Clone, Debug)]
pub struct OdometerApprox {
    pub stage: usize,
    pub map: CylMap,
    pub distances: Vec<BigRational>,
}

pub fn odometer_approx(
    system: &RankOneSystem,
    measures: &[MeasureSpec],
    epsilon: &BigRational,
) -> Result<OdometerApprox, TowersError> {
    let space = &system.space;
    let h_final = space.radix(0) as usize;
    let mut best = BigRational::one();
    for (idx, st) in system.stages.iter().enumerate() {
        let stage = idx + 1;
        // cycle order: tower positions ascending, then leftover ascending
        let mut cycle: Vec<u32> = Vec::with_capacity(h_final);
        let in_leftover = |pos: u32| -> bool {
            st.leftover.contains_point(
                &Point::new(vec![pos], vec![0]).expect("class point"),
            )
        };
        for pos in 0..h_final as u32 {
            if !in_leftover(pos) {
                cycle.push(pos);
            }
        }
        for pos in 0..h_final as u32 {
            if in_leftover(pos) {
                cycle.push(pos);
            }
        }
        // sigma sends cycle position j's class to class j; S = sigma^-1 T sigma
        let sigma = CylMap::new(
            space,
            cycle
                .iter()
                .enumerate()
                .map(|(j, &c)| crate::cylmap::Rule {
                    input: Word::new(vec![c]),
                    output: Word::new(vec![j as u32]),
                })
                .collect(),
            vec![],
        )?;
        let s = sigma.invert().compose(&system.map)?.compose(&sigma)?;
        let report = e_set(&s, &system.map, 1)?;
        let distances: Vec<BigRational> = measures
            .iter()
            .map(|mu| {
                mu.set_measure(&report.different) + mu.set_measure(&report.unresolved)
            })
            .collect();
        if distances.iter().all(|d| d < epsilon) {
            return Ok(OdometerApprox { stage, map: s, distances });
        }
        if let Some(d) = distances.iter().max() {
            best = best.clone().min(d.clone());
        }
    }
    Err(TowersError::EpsilonInfeasible(best))
}

/// The dyadic odometer with its zero markers, the running example of the
/// module.
pub fn dyadic_odometer(budget: usize) -> (SeqSpace, CylMap, MarkerSeq) {
    let space = SeqSpace::uniform(2);
    let map = translation_one(&space, budget).expect("dyadic odometer");
    let markers = MarkerSeq::zeros(&space, 8);
    (space, map, markers)
}
