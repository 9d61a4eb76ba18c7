//! Adic sequence spaces, cylinders, eventually-periodic points, and a small
//! exact set algebra over finite unions of cylinders.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("alphabet size {0} at position {1} is below 2")]
    AlphabetTooSmall(u32, usize),
    #[error("empty repeating block in alphabet description")]
    EmptyPeriod,
    #[error("digit {digit} at position {pos} exceeds alphabet size {radix}")]
    DigitOutOfRange { digit: u32, pos: usize, radix: u32 },
    #[error("spaces do not match: {0} vs {1}")]
    SpaceMismatch(String, String),
}

/// A product space of finite alphabets, one per coordinate, described by an
/// eventually-periodic sequence of alphabet sizes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SeqSpace {
    head: Vec<u32>,
    period: Vec<u32>,
}

impl SeqSpace {
    pub fn new(head: Vec<u32>, period: Vec<u32>) -> Result<Self, SpaceError> {
        if period.is_empty() {
            return Err(SpaceError::EmptyPeriod);
        }
        for (i, &r) in head.iter().chain(period.iter()).enumerate() {
            if r < 2 {
                return Err(SpaceError::AlphabetTooSmall(r, i));
            }
        }
        Ok(Self { head, period }.normalized())
    }

    /// The constant-radix space, e.g. `uniform(2)` for the dyadic space.
    pub fn uniform(radix: u32) -> Self {
        Self::new(Vec::new(), vec![radix]).expect("radix >= 2")
    }

    fn normalized(mut self) -> Self {
        // shrink the period to its primitive root
        for len in 1..self.period.len() {
            if self.period.len() % len == 0 && self.period.chunks(len).all(|c| c == &self.period[..len]) {
                self.period.truncate(len);
                break;
            }
        }
        // absorb head digits that already follow the period
        while let Some(&last) = self.head.last() {
            if last == self.period[self.period.len() - 1] {
                self.head.pop();
                self.period.rotate_right(1);
            } else {
                break;
            }
        }
        self
    }

    /// Alphabet size at coordinate `i`.
    pub fn radix(&self, i: usize) -> u32 {
        if i < self.head.len() {
            self.head[i]
        } else {
            self.period[(i - self.head.len()) % self.period.len()]
        }
    }

    pub fn head_len(&self) -> usize {
        self.head.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    pub fn check_same(&self, other: &SeqSpace) -> Result<(), SpaceError> {
        if self == other {
            Ok(())
        } else {
            Err(SpaceError::SpaceMismatch(self.to_string(), other.to_string()))
        }
    }

    /// Number of length-`d` words, i.e. the partial product of alphabet sizes.
    pub fn word_count(&self, d: usize) -> u64 {
        (0..d).map(|i| self.radix(i) as u64).product()
    }

    /// All words of length `d` in lexicographic order.
    pub fn words_at_depth(&self, d: usize) -> Vec<Word> {
        let mut out = vec![Word::root()];
        for i in 0..d {
            let mut next = Vec::with_capacity(out.len() * self.radix(i) as usize);
            for w in &out {
                for a in 0..self.radix(i) {
                    next.push(w.child(a));
                }
            }
            out = next;
        }
        out
    }
}

impl fmt::Display for SeqSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", join_digit_group(&self.head), join_digit_group(&self.period))
    }
}

/// Digit groups print compactly when every entry is a single decimal digit;
/// otherwise they are dot-separated, with a trailing dot disambiguating a
/// lone multi-digit entry from a run of single digits.
pub(crate) fn join_digit_group(ds: &[u32]) -> String {
    if ds.iter().all(|&d| d <= 9) {
        ds.iter().map(|d| d.to_string()).collect()
    } else {
        let joined = ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(".");
        if ds.len() == 1 {
            format!("{joined}.")
        } else {
            joined
        }
    }
}

impl fmt::Debug for SeqSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite digit word; the empty word denotes the whole space.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    digits: Vec<u32>,
}

impl Word {
    pub fn root() -> Self {
        Word { digits: Vec::new() }
    }

    pub fn new(digits: Vec<u32>) -> Self {
        Word { digits }
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn child(&self, a: u32) -> Word {
        let mut digits = self.digits.clone();
        digits.push(a);
        Word { digits }
    }

    pub fn concat(&self, tail: &[u32]) -> Word {
        let mut digits = self.digits.clone();
        digits.extend_from_slice(tail);
        Word { digits }
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.digits.len() >= self.digits.len() && other.digits[..self.digits.len()] == self.digits[..]
    }

    pub fn validate(&self, space: &SeqSpace) -> Result<(), SpaceError> {
        for (pos, &digit) in self.digits.iter().enumerate() {
            let radix = space.radix(pos);
            if digit >= radix {
                return Err(SpaceError::DigitOutOfRange { digit, pos, radix });
            }
        }
        Ok(())
    }

    /// First position where the two words disagree, if any.
    pub fn first_difference(&self, other: &Word) -> Option<usize> {
        let n = self.digits.len().min(other.digits.len());
        (0..n).find(|&i| self.digits[i] != other.digits[i])
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.digits.is_empty() {
            return write!(f, "e");
        }
        write!(f, "{}", join_digit_group(&self.digits))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A cylinder: the set of all sequences extending `word`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cylinder {
    pub word: Word,
}

impl Cylinder {
    pub fn new(word: Word) -> Self {
        Cylinder { word }
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }
}

/// An eventually-periodic digit stream, the decidable model of a point.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Point {
    head: Vec<u32>,
    period: Vec<u32>,
}

impl Point {
    pub fn new(head: Vec<u32>, period: Vec<u32>) -> Result<Self, SpaceError> {
        if period.is_empty() {
            return Err(SpaceError::EmptyPeriod);
        }
        Ok(Self { head, period }.normalized())
    }

    /// The point with constant digit stream, e.g. all zeros.
    pub fn constant(digit: u32) -> Self {
        Point { head: Vec::new(), period: vec![digit] }
    }

    fn normalized(mut self) -> Self {
        for len in 1..self.period.len() {
            if self.period.len() % len == 0 && self.period.chunks(len).all(|c| c == &self.period[..len]) {
                self.period.truncate(len);
                break;
            }
        }
        while let Some(&last) = self.head.last() {
            if last == self.period[self.period.len() - 1] {
                self.head.pop();
                self.period.rotate_right(1);
            } else {
                break;
            }
        }
        self
    }

    pub fn digit(&self, i: usize) -> u32 {
        if i < self.head.len() {
            self.head[i]
        } else {
            self.period[(i - self.head.len()) % self.period.len()]
        }
    }

    pub fn head_len(&self) -> usize {
        self.head.len()
    }

    pub fn period_digits(&self) -> &[u32] {
        &self.period
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word::new((0..len).map(|i| self.digit(i)).collect())
    }

    /// Drops the first `n` digits.
    pub fn shift(&self, n: usize) -> Point {
        if n <= self.head.len() {
            Point { head: self.head[n..].to_vec(), period: self.period.clone() }.normalized()
        } else {
            let excess = (n - self.head.len()) % self.period.len();
            let mut period = self.period.clone();
            period.rotate_left(excess);
            Point { head: Vec::new(), period }.normalized()
        }
    }

    /// Replaces the first `old_len` digits by `prefix`.
    pub fn with_prefix(&self, old_len: usize, prefix: &Word) -> Point {
        let tail = self.shift(old_len);
        let mut head = prefix.digits().to_vec();
        head.extend(tail.head.iter());
        Point { head, period: tail.period }.normalized()
    }

    pub fn in_cylinder(&self, word: &Word) -> bool {
        word.digits().iter().enumerate().all(|(i, &d)| self.digit(i) == d)
    }

    pub fn validate(&self, space: &SeqSpace) -> Result<(), SpaceError> {
        // one full alignment cycle past both heads covers every (digit, radix) pairing
        let span = self.head.len().max(space.head_len())
            + lcm(self.period.len(), space.period_len())
            + 1;
        for i in 0..span {
            let digit = self.digit(i);
            let radix = space.radix(i);
            if digit >= radix {
                return Err(SpaceError::DigitOutOfRange { digit, pos: i, radix });
            }
        }
        Ok(())
    }

    /// Index of the first coordinate where the two streams differ, `None` for
    /// equal points.
    pub fn first_difference(&self, other: &Point) -> Option<usize> {
        if self == other {
            return None;
        }
        let span = self.head.len().max(other.head.len()) + lcm(self.period.len(), other.period.len());
        (0..span).find(|&i| self.digit(i) != other.digit(i))
    }
}

fn lcm(a: usize, b: usize) -> usize {
    num_integer::lcm(a, b)
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", join_digit_group(&self.head), join_digit_group(&self.period))
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite union of cylinders in canonical form: the word list is sorted,
/// prefix-free, and no complete sibling family is left unmerged.
#[derive(Clone, PartialEq, Eq)]
pub struct CylSet {
    space: SeqSpace,
    words: Vec<Word>,
}

impl CylSet {
    pub fn empty(space: &SeqSpace) -> Self {
        CylSet { space: space.clone(), words: Vec::new() }
    }

    pub fn whole(space: &SeqSpace) -> Self {
        CylSet { space: space.clone(), words: vec![Word::root()] }
    }

    pub fn from_words(space: &SeqSpace, words: Vec<Word>) -> Result<Self, SpaceError> {
        for w in &words {
            w.validate(space)?;
        }
        Ok(Self { space: space.clone(), words }.normalized())
    }

    pub fn space(&self) -> &SeqSpace {
        &self.space
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_whole(&self) -> bool {
        self.words.len() == 1 && self.words[0].is_empty()
    }

    fn normalized(mut self) -> Self {
        self.words.sort();
        self.words.dedup();
        // drop words covered by a shorter one
        let mut keep: Vec<Word> = Vec::with_capacity(self.words.len());
        for w in self.words.drain(..) {
            if keep.last().map_or(true, |p: &Word| !p.is_prefix_of(&w)) {
                keep.push(w);
            }
        }
        // merge complete sibling families bottom-up
        loop {
            let mut merged = false;
            let mut out: Vec<Word> = Vec::with_capacity(keep.len());
            let mut i = 0;
            while i < keep.len() {
                let w = &keep[i];
                if !w.is_empty() && *w.digits().last().unwrap() == 0 {
                    let parent_len = w.len() - 1;
                    let radix = self.space.radix(parent_len) as usize;
                    let family_complete = i + radix <= keep.len()
                        && (0..radix).all(|a| {
                            let s = &keep[i + a];
                            s.len() == w.len()
                                && s.digits()[..parent_len] == w.digits()[..parent_len]
                                && s.digits()[parent_len] == a as u32
                        });
                    if family_complete {
                        out.push(Word::new(w.digits()[..parent_len].to_vec()));
                        i += radix;
                        merged = true;
                        continue;
                    }
                }
                out.push(keep[i].clone());
                i += 1;
            }
            keep = out;
            if !merged {
                break;
            }
            keep.sort();
        }
        self.words = keep;
        self
    }

    pub fn union(&self, other: &CylSet) -> CylSet {
        let mut words = self.words.clone();
        words.extend(other.words.iter().cloned());
        CylSet { space: self.space.clone(), words }.normalized()
    }

    pub fn intersect(&self, other: &CylSet) -> CylSet {
        let mut words = Vec::new();
        for a in &self.words {
            for b in &other.words {
                if a.is_prefix_of(b) {
                    words.push(b.clone());
                } else if b.is_prefix_of(a) {
                    words.push(a.clone());
                }
            }
        }
        CylSet { space: self.space.clone(), words }.normalized()
    }

    pub fn complement(&self) -> CylSet {
        let mut words = Vec::new();
        self.complement_into(&Word::root(), &mut words);
        CylSet { space: self.space.clone(), words }.normalized()
    }

    fn complement_into(&self, c: &Word, out: &mut Vec<Word>) {
        if self.words.iter().any(|w| w.is_prefix_of(c)) {
            return; // fully covered
        }
        if !self.words.iter().any(|w| c.is_prefix_of(w)) {
            out.push(c.clone()); // fully outside
            return;
        }
        for a in 0..self.space.radix(c.len()) {
            self.complement_into(&c.child(a), out);
        }
    }

    pub fn minus(&self, other: &CylSet) -> CylSet {
        self.intersect(&other.complement())
    }

    pub fn is_subset_of(&self, other: &CylSet) -> bool {
        self.minus(other).is_empty()
    }

    pub fn is_disjoint_from(&self, other: &CylSet) -> bool {
        self.intersect(other).is_empty()
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        self.words.iter().any(|w| p.in_cylinder(w))
    }

    /// Rewrites the set as a union of cylinders all of depth exactly `d`.
    /// Words deeper than `d` are kept as they are.
    pub fn refined_to_depth(&self, d: usize) -> Vec<Word> {
        let mut out = Vec::new();
        for w in &self.words {
            if w.len() >= d {
                out.push(w.clone());
            } else {
                let mut stack = vec![w.clone()];
                while let Some(x) = stack.pop() {
                    if x.len() == d {
                        out.push(x);
                    } else {
                        for a in (0..self.space.radix(x.len())).rev() {
                            stack.push(x.child(a));
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Largest common prefix shared by every word of the set; `None` when empty.
    pub fn common_prefix_len(&self) -> Option<usize> {
        let first = self.words.first()?;
        let mut len = first.len();
        for w in &self.words[1..] {
            len = len.min(w.len());
            while first.digits()[..len] != w.digits()[..len] {
                len -= 1;
            }
        }
        // a set containing short words can still pin only their common part
        Some(len)
    }
}

impl fmt::Debug for CylSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[{w}]")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic() -> SeqSpace {
        SeqSpace::uniform(2)
    }

    #[test]
    fn space_rejects_small_alphabets() {
        assert!(SeqSpace::new(vec![2, 1], vec![2]).is_err());
        assert!(SeqSpace::new(vec![], vec![]).is_err());
    }

    #[test]
    fn space_normal_form() {
        let a = SeqSpace::new(vec![2, 3], vec![4, 4]).unwrap();
        let b = SeqSpace::new(vec![2, 3, 4], vec![4]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.radix(0), 2);
        assert_eq!(a.radix(1), 3);
        assert_eq!(a.radix(100), 4);
    }

    #[test]
    fn point_normal_form_and_equality() {
        let a = Point::new(vec![1, 0], vec![0]).unwrap();
        let b = Point::new(vec![1], vec![0, 0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digit(0), 1);
        assert_eq!(a.digit(7), 0);
        let c = Point::new(vec![], vec![1, 0]).unwrap();
        let d = Point::new(vec![1, 0], vec![1, 0]).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn point_shift_and_prefix_replacement() {
        let p = Point::new(vec![1, 1, 0], vec![1, 0]).unwrap();
        assert_eq!(p.shift(2).prefix(5), Word::new(vec![0, 1, 0, 1, 0]));
        let q = p.with_prefix(3, &Word::new(vec![0, 0, 1]));
        assert_eq!(q.prefix(6), Word::new(vec![0, 0, 1, 1, 0, 1]));
    }

    #[test]
    fn point_first_difference() {
        let a = Point::new(vec![0, 0, 1], vec![0]).unwrap();
        let b = Point::constant(0);
        assert_eq!(a.first_difference(&b), Some(2));
        assert_eq!(b.first_difference(&b.clone()), None);
        // differences hidden in the periodic tails are still found
        let c = Point::new(vec![], vec![0, 1]).unwrap();
        let d = Point::new(vec![0], vec![1, 0]).unwrap();
        assert_eq!(c.first_difference(&d), None);
    }

    #[test]
    fn cylset_normalization_merges_full_families() {
        let s = dyadic();
        let set = CylSet::from_words(
            &s,
            vec![Word::new(vec![0, 0]), Word::new(vec![0, 1]), Word::new(vec![1])],
        )
        .unwrap();
        assert!(set.is_whole());
    }

    #[test]
    fn cylset_absorbs_nested() {
        let s = dyadic();
        let set = CylSet::from_words(&s, vec![Word::new(vec![0]), Word::new(vec![0, 1])]).unwrap();
        assert_eq!(set.words(), &[Word::new(vec![0])]);
    }

    #[test]
    fn cylset_complement_and_algebra() {
        let s = dyadic();
        let a = CylSet::from_words(&s, vec![Word::new(vec![1, 1, 1])]).unwrap();
        let c = a.complement();
        assert!(a.is_disjoint_from(&c));
        assert!(a.union(&c).is_whole());
        assert!(a.is_subset_of(&CylSet::from_words(&s, vec![Word::new(vec![1])]).unwrap()));
    }

    #[test]
    fn cylset_mixed_radix_complement() {
        let s = SeqSpace::new(vec![2], vec![3]).unwrap();
        let a = CylSet::from_words(&s, vec![Word::new(vec![1, 2])]).unwrap();
        let c = a.complement();
        assert!(a.union(&c).is_whole());
        assert_eq!(c.words().len(), 3); // [0], [1,0], [1,1]
    }

    #[test]
    fn refine_to_depth_counts() {
        let s = dyadic();
        let whole = CylSet::whole(&s);
        assert_eq!(whole.refined_to_depth(4).len(), 16);
    }

    #[test]
    fn contains_point() {
        let s = dyadic();
        let a = CylSet::from_words(&s, vec![Word::new(vec![1, 1])]).unwrap();
        assert!(a.contains_point(&Point::constant(1)));
        assert!(!a.contains_point(&Point::constant(0)));
        let _ = s;
    }
}
