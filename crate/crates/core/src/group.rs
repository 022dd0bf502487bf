//! Exact arithmetic for the free group `F_d` on reduced words and for the
//! integer lattice `Z^k`.
//!
//! A letter is a nonzero signed index: `i` stands for the generator `a_i` and
//! `-i` for its inverse. The identity is the empty word. Words are always kept
//! in reduced form, so equality of [`FreeWord`] values is equality of group
//! elements.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;

use thiserror::Error;

/// Default upper bound on the number of words [`enumerate_ball`] will produce.
pub const DEFAULT_BALL_CAP: u64 = 100_000_000;

/// Signed generator index in `{±1, …, ±d}`.
pub type Letter = i8;

/// Largest supported rank (letters are stored as `i8`).
pub const MAX_RANK: usize = 127;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("rank must be in 1..={MAX_RANK}, got {0}")]
    InvalidRank(usize),
    #[error("letter {letter} out of range for rank {rank}")]
    LetterOutOfRange { letter: i64, rank: usize },
    #[error("word is not reduced at position {0}")]
    NotReduced(usize),
    #[error("malformed token {0:?}")]
    MalformedToken(String),
    #[error("ball of radius {radius} in F_{rank} has {count} words, above the cap {cap}")]
    BallTooLarge {
        rank: usize,
        radius: usize,
        count: u128,
        cap: u64,
    },
}

/// Position of a letter in the dense layout `a_1, a_1^{-1}, a_2, a_2^{-1}, …`.
///
/// Every per-letter vector in this crate (generator masses, `q`, `v`,
/// first-passage values) uses this layout.
#[inline]
pub fn letter_index(letter: Letter) -> usize {
    let i = letter.unsigned_abs() as usize - 1;
    2 * i + usize::from(letter < 0)
}

/// Inverse of [`letter_index`].
#[inline]
pub fn index_letter(index: usize) -> Letter {
    let gen = (index / 2 + 1) as Letter;
    if index % 2 == 0 {
        gen
    } else {
        -gen
    }
}

/// All `2d` letters in dense layout order.
pub fn letters(rank: usize) -> impl Iterator<Item = Letter> + Clone {
    (0..2 * rank).map(index_letter)
}

/// Common interface of group elements carried by sparse measures.
pub trait GroupElement: Clone + Eq + Hash + Ord + fmt::Display + Send + Sync {
    /// The identity of the group this element lives in.
    fn identity_like(&self) -> Self;
    /// Whether `other` lives in the same group (same rank or dimension).
    fn same_group(&self, other: &Self) -> bool;
    /// Group product `self · rhs`. Callers guarantee `same_group`.
    fn compose(&self, rhs: &Self) -> Self;
    fn inverse(&self) -> Self;
    /// Word length (free group) or l1 norm (lattice). Satisfies the triangle
    /// inequality `|gh| <= |g| + |h|`.
    fn norm(&self) -> usize;
}

/// A reduced word in the free group of rank `d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FreeWord {
    rank: u8,
    letters: Vec<Letter>,
}

fn check_rank(rank: usize) -> Result<u8, GroupError> {
    if rank == 0 || rank > MAX_RANK {
        return Err(GroupError::InvalidRank(rank));
    }
    Ok(rank as u8)
}

fn check_letter(letter: i64, rank: usize) -> Result<Letter, GroupError> {
    if letter == 0 || letter.unsigned_abs() as usize > rank {
        return Err(GroupError::LetterOutOfRange { letter, rank });
    }
    Ok(letter as Letter)
}

impl FreeWord {
    pub fn identity(rank: usize) -> Result<Self, GroupError> {
        Ok(Self {
            rank: check_rank(rank)?,
            letters: Vec::new(),
        })
    }

    /// The one-letter word `a_i` (or `a_{|i|}^{-1}` for negative `i`).
    pub fn generator(rank: usize, letter: i64) -> Result<Self, GroupError> {
        let rank8 = check_rank(rank)?;
        Ok(Self {
            rank: rank8,
            letters: vec![check_letter(letter, rank)?],
        })
    }

    /// Checked constructor: the letters must already be reduced.
    pub fn new(rank: usize, letters: &[i64]) -> Result<Self, GroupError> {
        let rank8 = check_rank(rank)?;
        let mut out = Vec::with_capacity(letters.len());
        for (pos, &l) in letters.iter().enumerate() {
            let l = check_letter(l, rank)?;
            if out.last() == Some(&-l) {
                return Err(GroupError::NotReduced(pos));
            }
            out.push(l);
        }
        Ok(Self {
            rank: rank8,
            letters: out,
        })
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn from_letters_reducing(rank: usize, letters: &[i64]) -> Result<Self, GroupError> {
        let rank8 = check_rank(rank)?;
        let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
        for &l in letters {
            let l = check_letter(l, rank)?;
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Ok(Self {
            rank: rank8,
            letters: out,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank as usize
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    /// The prefix of length `min(k, len)`.
    pub fn prefix(&self, k: usize) -> FreeWord {
        FreeWord {
            rank: self.rank,
            letters: self.letters[..k.min(self.letters.len())].to_vec(),
        }
    }

    /// Reduced form of `self · other`.
    pub fn reduce_concat(&self, other: &FreeWord) -> Result<FreeWord, GroupError> {
        if self.rank != other.rank {
            return Err(GroupError::RankMismatch(self.rank(), other.rank()));
        }
        Ok(self.concat_unchecked(other))
    }

    fn concat_unchecked(&self, other: &FreeWord) -> FreeWord {
        let mut cancel = 0;
        let max = self.letters.len().min(other.letters.len());
        while cancel < max
            && self.letters[self.letters.len() - 1 - cancel] == -other.letters[cancel]
        {
            cancel += 1;
        }
        let keep = self.letters.len() - cancel;
        let mut letters = Vec::with_capacity(keep + other.letters.len() - cancel);
        letters.extend_from_slice(&self.letters[..keep]);
        letters.extend_from_slice(&other.letters[cancel..]);
        FreeWord {
            rank: self.rank,
            letters,
        }
    }

    /// Left multiplication by a single letter.
    pub fn left_mul_letter(&self, letter: Letter) -> FreeWord {
        let mut letters = Vec::with_capacity(self.letters.len() + 1);
        if self.letters.first() == Some(&-letter) {
            letters.extend_from_slice(&self.letters[1..]);
        } else {
            letters.push(letter);
            letters.extend_from_slice(&self.letters);
        }
        FreeWord {
            rank: self.rank,
            letters,
        }
    }

    /// Right multiplication by a single letter.
    pub fn right_mul_letter(&self, letter: Letter) -> FreeWord {
        let mut letters = self.letters.clone();
        if letters.last() == Some(&-letter) {
            letters.pop();
        } else {
            letters.push(letter);
        }
        FreeWord {
            rank: self.rank,
            letters,
        }
    }

    pub fn invert(&self) -> FreeWord {
        FreeWord {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|&l| -l).collect(),
        }
    }
}

fn letter_key(l: Letter) -> (u8, bool) {
    (l.unsigned_abs(), l < 0)
}

/// Shortlex order: by length, then letter by letter with
/// `a_1 < a_1^{-1} < a_2 < a_2^{-1} < …`.
impl Ord for FreeWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank
            .cmp(&other.rank)
            .then(self.letters.len().cmp(&other.letters.len()))
            .then_with(|| {
                self.letters
                    .iter()
                    .map(|&l| letter_key(l))
                    .cmp(other.letters.iter().map(|&l| letter_key(l)))
            })
    }
}

impl PartialOrd for FreeWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for (i, &l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "a{}", l.unsigned_abs())?;
            if l < 0 {
                f.write_str("'")?;
            }
        }
        Ok(())
    }
}

impl GroupElement for FreeWord {
    fn identity_like(&self) -> Self {
        FreeWord {
            rank: self.rank,
            letters: Vec::new(),
        }
    }

    fn same_group(&self, other: &Self) -> bool {
        self.rank == other.rank
    }

    fn compose(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.rank, rhs.rank);
        self.concat_unchecked(rhs)
    }

    fn inverse(&self) -> Self {
        self.invert()
    }

    fn norm(&self) -> usize {
        self.letters.len()
    }
}

/// Parses the text syntax `a1.a2'.a1` (apostrophe marks an inverse, `e` is the
/// identity). The result is freely reduced.
pub fn parse_word(text: &str, rank: usize) -> Result<FreeWord, GroupError> {
    let text = text.trim();
    if text == "e" || text.is_empty() {
        return FreeWord::identity(rank);
    }
    let mut letters = Vec::new();
    for token in text.split('.') {
        let token = token.trim();
        let (body, inverse) = match token.strip_suffix('\'') {
            Some(b) => (b, true),
            None => (token, false),
        };
        let digits = body
            .strip_prefix('a')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .ok_or_else(|| GroupError::MalformedToken(token.to_string()))?;
        let index: i64 = digits
            .parse()
            .map_err(|_| GroupError::MalformedToken(token.to_string()))?;
        letters.push(if inverse { -index } else { index });
    }
    FreeWord::from_letters_reducing(rank, &letters)
}

pub fn format_word(word: &FreeWord) -> String {
    word.to_string()
}

/// Number of reduced words of length exactly `k` in `F_d`.
pub fn sphere_size(rank: usize, k: usize) -> u128 {
    if k == 0 {
        return 1;
    }
    let r = 2 * rank as u128 - 1;
    let mut out = 2 * rank as u128;
    for _ in 1..k {
        out = out.saturating_mul(r);
    }
    out
}

/// Number of reduced words of length at most `radius`.
pub fn ball_size(rank: usize, radius: usize) -> u128 {
    (0..=radius).fold(0u128, |acc, k| acc.saturating_add(sphere_size(rank, k)))
}

/// All reduced words of length `<= radius`, in shortlex order.
pub fn enumerate_ball(rank: usize, radius: usize) -> Result<Vec<FreeWord>, GroupError> {
    enumerate_ball_capped(rank, radius, DEFAULT_BALL_CAP)
}

pub fn enumerate_ball_capped(
    rank: usize,
    radius: usize,
    cap: u64,
) -> Result<Vec<FreeWord>, GroupError> {
    check_rank(rank)?;
    let count = ball_size(rank, radius);
    if count > cap as u128 {
        return Err(GroupError::BallTooLarge {
            rank,
            radius,
            count,
            cap,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    out.push(FreeWord::identity(rank)?);
    let mut start = 0;
    for _ in 0..radius {
        let end = out.len();
        for idx in start..end {
            let base = out[idx].clone();
            for l in letters(rank) {
                if base.last() != Some(-l) {
                    out.push(base.right_mul_letter(l));
                }
            }
        }
        start = end;
    }
    Ok(out)
}

/// All reduced words of length exactly `k`, in shortlex order.
pub fn enumerate_sphere(rank: usize, k: usize) -> Result<Vec<FreeWord>, GroupError> {
    let mut ball = enumerate_ball(rank, k)?;
    let skip = ball_size(rank, k) - sphere_size(rank, k);
    Ok(ball.split_off(skip as usize))
}

/// A point of the integer lattice `Z^k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    coords: Vec<i64>,
}

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        Self { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![0; dim],
        }
    }

    /// The unit vector `±e_axis`.
    pub fn unit(dim: usize, axis: usize, sign: i64) -> Self {
        let mut coords = vec![0; dim];
        coords[axis] = sign.signum();
        Self { coords }
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl GroupElement for LatticePoint {
    fn identity_like(&self) -> Self {
        Self::origin(self.dim())
    }

    fn same_group(&self, other: &Self) -> bool {
        self.dim() == other.dim()
    }

    fn compose(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim(), rhs.dim());
        Self {
            coords: self
                .coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    fn inverse(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    fn norm(&self) -> usize {
        self.coords.iter().map(|c| c.unsigned_abs() as usize).sum()
    }
}
