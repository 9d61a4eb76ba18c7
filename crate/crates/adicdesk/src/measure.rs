//! Probability measures on adic sequence spaces: Bernoulli (product), Markov,
//! finitely atomic, and finite mixtures, all with exact rational arithmetic.

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::space::{CylSet, Point, SeqSpace, SpaceError, Word};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("probability vector at level {0} does not sum to 1")]
    BadRowSum(usize),
    #[error("negative probability at level {0}")]
    Negative(usize),
    #[error("vector length {got} does not match alphabet size {want} at level {level}")]
    BadRowLen { level: usize, got: usize, want: usize },
    #[error("atomic weights do not sum to 1")]
    BadAtomWeights,
    #[error("mixture weights do not sum to 1")]
    BadMixWeights,
    #[error("duplicate atom {0}")]
    DuplicateAtom(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Eventually-periodic list of per-level probability vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelVectors {
    pub head: Vec<Vec<BigRational>>,
    pub period: Vec<Vec<BigRational>>,
}

impl LevelVectors {
    pub fn row(&self, level: usize) -> &[BigRational] {
        if level < self.head.len() {
            &self.head[level]
        } else {
            &self.period[(level - self.head.len()) % self.period.len()]
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureSpec {
    /// Product measure with an eventually-periodic family of digit laws.
    Bernoulli { space: SeqSpace, laws: LevelVectors },
    /// Markov measure: initial law plus per-level transition rows.
    Markov {
        space: SeqSpace,
        initial: Vec<BigRational>,
        /// `transitions.row(t)` is the flattened stochastic matrix from the
        /// level-`t` symbol to the level-`t+1` symbol, row-major.
        transitions: LevelVectors,
    },
    /// Purely atomic measure on finitely many eventually-periodic points.
    Atomic { space: SeqSpace, atoms: Vec<(Point, BigRational)> },
    /// Finite convex mixture.
    Mixture { parts: Vec<(BigRational, MeasureSpec)> },
}

impl MeasureSpec {
    /// The uniform Bernoulli measure assigning mass `1/radix` to each digit.
    pub fn uniform(space: &SeqSpace) -> MeasureSpec {
        let row = |r: u32| -> Vec<BigRational> {
            let p = BigRational::new(1.into(), (r as i64).into());
            vec![p; r as usize]
        };
        let head = (0..space.head_len()).map(|i| row(space.radix(i))).collect();
        let period = (space.head_len()..space.head_len() + space.period_len())
            .map(|i| row(space.radix(i)))
            .collect();
        MeasureSpec::Bernoulli { space: space.clone(), laws: LevelVectors { head, period } }
    }

    /// A single Dirac atom.
    pub fn dirac(space: &SeqSpace, p: Point) -> MeasureSpec {
        MeasureSpec::Atomic { space: space.clone(), atoms: vec![(p, BigRational::one())] }
    }

    pub fn space(&self) -> &SeqSpace {
        match self {
            MeasureSpec::Bernoulli { space, .. }
            | MeasureSpec::Markov { space, .. }
            | MeasureSpec::Atomic { space, .. } => space,
            MeasureSpec::Mixture { parts } => parts[0].1.space(),
        }
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        match self {
            MeasureSpec::Bernoulli { space, laws } => {
                let span = space.head_len() + space.period_len();
                let declared = laws.head.len() + laws.period.len();
                for level in 0..span.max(declared) {
                    let row = laws.row(level);
                    check_prob_row(row, level, space.radix(level) as usize)?;
                }
                Ok(())
            }
            MeasureSpec::Markov { space, initial, transitions } => {
                check_prob_row(initial, 0, space.radix(0) as usize)?;
                let span = space.head_len() + 2 * space.period_len()
                    + transitions.head.len()
                    + transitions.period.len();
                for level in 0..span {
                    let from = space.radix(level) as usize;
                    let to = space.radix(level + 1) as usize;
                    let flat = transitions.row(level);
                    if flat.len() != from * to {
                        return Err(MeasureError::BadRowLen {
                            level,
                            got: flat.len(),
                            want: from * to,
                        });
                    }
                    for r in 0..from {
                        check_prob_row(&flat[r * to..(r + 1) * to], level, to)?;
                    }
                }
                Ok(())
            }
            MeasureSpec::Atomic { space, atoms } => {
                let mut total = BigRational::zero();
                for (i, (p, w)) in atoms.iter().enumerate() {
                    p.validate(space)?;
                    if w < &BigRational::zero() {
                        return Err(MeasureError::Negative(i));
                    }
                    total += w;
                    for (q, _) in &atoms[..i] {
                        if q == p {
                            return Err(MeasureError::DuplicateAtom(p.to_string()));
                        }
                    }
                }
                if !total.is_one() {
                    return Err(MeasureError::BadAtomWeights);
                }
                Ok(())
            }
            MeasureSpec::Mixture { parts } => {
                let mut total = BigRational::zero();
                for (w, m) in parts {
                    if w < &BigRational::zero() {
                        return Err(MeasureError::Negative(0));
                    }
                    total += w;
                    m.validate()?;
                    m.space().check_same(parts[0].1.space())?;
                }
                if !total.is_one() {
                    return Err(MeasureError::BadMixWeights);
                }
                Ok(())
            }
        }
    }

    /// Measure of a single cylinder word.
    pub fn word_measure(&self, w: &Word) -> BigRational {
        match self {
            MeasureSpec::Bernoulli { laws, .. } => {
                let mut m = BigRational::one();
                for (level, &d) in w.digits().iter().enumerate() {
                    m *= &laws.row(level)[d as usize];
                }
                m
            }
            MeasureSpec::Markov { space, initial, transitions } => {
                let ds = w.digits();
                if ds.is_empty() {
                    return BigRational::one();
                }
                let mut m = initial[ds[0] as usize].clone();
                for t in 0..ds.len() - 1 {
                    let to = space.radix(t + 1) as usize;
                    m *= &transitions.row(t)[ds[t] as usize * to + ds[t + 1] as usize];
                }
                m
            }
            MeasureSpec::Atomic { atoms, .. } => atoms
                .iter()
                .filter(|(p, _)| p.in_cylinder(w))
                .map(|(_, wt)| wt.clone())
                .sum(),
            MeasureSpec::Mixture { parts } => {
                parts.iter().map(|(c, m)| c * m.word_measure(w)).sum()
            }
        }
    }

    /// Measure of a canonical cylinder union.
    pub fn set_measure(&self, set: &CylSet) -> BigRational {
        set.words().iter().map(|w| self.word_measure(w)).sum()
    }

    /// Mass of a single point.
    pub fn point_mass(&self, p: &Point) -> BigRational {
        match self {
            MeasureSpec::Bernoulli { .. } | MeasureSpec::Markov { .. } => {
                if self.has_atoms() {
                    // degenerate tails can concentrate mass; fall back to the
                    // limit of cylinder measures over one period window
                    let mut depth = self.space().head_len() + self.space().period_len() + 1;
                    let mut prev = self.word_measure(&p.prefix(depth));
                    loop {
                        depth += self.space().period_len();
                        let next = self.word_measure(&p.prefix(depth));
                        if next == prev || next.is_zero() {
                            return next;
                        }
                        prev = next;
                        if depth > 64 * self.space().period_len() {
                            return prev; // stabilizes long before this
                        }
                    }
                } else {
                    BigRational::zero()
                }
            }
            MeasureSpec::Atomic { atoms, .. } => atoms
                .iter()
                .filter(|(q, _)| q == p)
                .map(|(_, w)| w.clone())
                .sum(),
            MeasureSpec::Mixture { parts } => {
                parts.iter().map(|(c, m)| c * m.point_mass(p)).sum()
            }
        }
    }

    /// Decides whether the measure has any atom at all. For Bernoulli and
    /// Markov laws this inspects the periodic tail: positive point mass needs
    /// every tail level to put full mass on a single digit (or transition).
    pub fn has_atoms(&self) -> bool {
        match self {
            MeasureSpec::Bernoulli { laws, .. } => {
                laws.period.iter().all(|row| row.iter().any(|p| p.is_one()))
            }
            MeasureSpec::Markov { space: _, initial: _, transitions } => transitions
                .period
                .iter()
                .all(|flat| flat.iter().any(|p| p.is_one())),
            MeasureSpec::Atomic { atoms, .. } => !atoms.is_empty(),
            MeasureSpec::Mixture { parts } => parts
                .iter()
                .any(|(w, m)| !w.is_zero() && m.has_atoms()),
        }
    }

    /// The atoms the measure can see, with their weights (empty for measures
    /// declared nonatomic).
    pub fn atoms(&self) -> Vec<(Point, BigRational)> {
        match self {
            MeasureSpec::Atomic { atoms, .. } => atoms.clone(),
            MeasureSpec::Mixture { parts } => {
                let mut out: Vec<(Point, BigRational)> = Vec::new();
                for (c, m) in parts {
                    for (p, w) in m.atoms() {
                        if let Some(entry) = out.iter_mut().find(|(q, _)| *q == p) {
                            entry.1 += c * w;
                        } else {
                            out.push((p, c * w));
                        }
                    }
                }
                out
            }
            _ => Vec::new(),
        }
    }
}

fn check_prob_row(row: &[BigRational], level: usize, want: usize) -> Result<(), MeasureError> {
    if row.len() != want {
        return Err(MeasureError::BadRowLen { level, got: row.len(), want });
    }
    let mut total = BigRational::zero();
    for p in row {
        if p < &BigRational::zero() {
            return Err(MeasureError::Negative(level));
        }
        total += p;
    }
    if !total.is_one() {
        return Err(MeasureError::BadRowSum(level));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;

    fn dyadic() -> SeqSpace {
        SeqSpace::uniform(2)
    }

    #[test]
    fn uniform_product_measure() {
        let s = dyadic();
        let mu = MeasureSpec::uniform(&s);
        mu.validate().unwrap();
        assert_eq!(mu.word_measure(&Word::new(vec![1, 1, 1])), ratio(1, 8));
        let set = CylSet::from_words(&s, vec![Word::new(vec![1, 1, 1]), Word::new(vec![0, 0, 0])])
            .unwrap();
        assert_eq!(mu.set_measure(&set), ratio(1, 4));
        assert_eq!(mu.set_measure(&CylSet::whole(&s)), ratio(1, 1));
    }

    #[test]
    fn atomic_measure_on_cylinders() {
        let s = dyadic();
        let mu = MeasureSpec::Atomic {
            space: s.clone(),
            atoms: vec![
                (Point::constant(0), ratio(1, 2)),
                (Point::constant(1), ratio(1, 2)),
            ],
        };
        mu.validate().unwrap();
        let zero_cyl = CylSet::from_words(&s, vec![Word::new(vec![0])]).unwrap();
        assert_eq!(mu.set_measure(&zero_cyl), ratio(1, 2));
        assert!(mu.has_atoms());
        assert_eq!(mu.point_mass(&Point::constant(1)), ratio(1, 2));
    }

    #[test]
    fn markov_measure() {
        let s = dyadic();
        let mu = MeasureSpec::Markov {
            space: s,
            initial: vec![ratio(1, 2), ratio(1, 2)],
            transitions: LevelVectors {
                head: vec![],
                // from 0: (2/3, 1/3); from 1: (1/3, 2/3)
                period: vec![vec![ratio(2, 3), ratio(1, 3), ratio(1, 3), ratio(2, 3)]],
            },
        };
        mu.validate().unwrap();
        assert_eq!(mu.word_measure(&Word::new(vec![0, 1])), ratio(1, 6));
        assert_eq!(
            mu.word_measure(&Word::new(vec![0, 0])) + mu.word_measure(&Word::new(vec![0, 1])),
            ratio(1, 2)
        );
        assert!(!mu.has_atoms());
    }

    #[test]
    fn nonuniform_bernoulli_has_no_atoms_flag() {
        let s = dyadic();
        let mu = MeasureSpec::Bernoulli {
            space: s,
            laws: LevelVectors { head: vec![], period: vec![vec![ratio(1, 3), ratio(2, 3)]] },
        };
        mu.validate().unwrap();
        assert!(!mu.has_atoms());
        assert_eq!(mu.point_mass(&Point::constant(1)), ratio(0, 1));
    }

    #[test]
    fn degenerate_bernoulli_detects_atoms() {
        let s = dyadic();
        let mu = MeasureSpec::Bernoulli {
            space: s,
            laws: LevelVectors { head: vec![], period: vec![vec![ratio(0, 1), ratio(1, 1)]] },
        };
        assert!(mu.has_atoms());
        assert_eq!(mu.point_mass(&Point::constant(1)), ratio(1, 1));
        assert_eq!(mu.point_mass(&Point::constant(0)), ratio(0, 1));
    }

    #[test]
    fn mixture_measure() {
        let s = dyadic();
        let mu = MeasureSpec::Mixture {
            parts: vec![
                (ratio(1, 2), MeasureSpec::uniform(&s)),
                (ratio(1, 2), MeasureSpec::dirac(&s, Point::constant(1))),
            ],
        };
        mu.validate().unwrap();
        let ones = CylSet::from_words(&s, vec![Word::new(vec![1, 1])]).unwrap();
        assert_eq!(mu.set_measure(&ones), ratio(1, 8) + ratio(1, 2));
        assert!(mu.has_atoms());
    }

    #[test]
    fn bad_rows_rejected() {
        let s = dyadic();
        let mu = MeasureSpec::Bernoulli {
            space: s.clone(),
            laws: LevelVectors { head: vec![], period: vec![vec![ratio(1, 3), ratio(1, 3)]] },
        };
        assert!(mu.validate().is_err());
        let nu = MeasureSpec::Atomic {
            space: s,
            atoms: vec![(Point::constant(0), ratio(1, 3))],
        };
        assert!(nu.validate().is_err());
    }
}
