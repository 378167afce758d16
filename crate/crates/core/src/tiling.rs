//! One-dimensional substitution and Sturmian tilings.
//!
//! Letters are referred to by [`LetterId`], an index into the alphabet of the
//! owning [`SubstitutionSystem`]. All combinatorics (factors, collared
//! letters, adjacencies) is computed by scanning substitution expansions until
//! the scanned set stops growing; the expansion depth at which that happened is
//! returned as a [`StabilityCertificate`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadratic::Quadratic;

/// Upper bound on expansion length while waiting for a factor set to settle.
const MAX_EXPANSION_LEN: usize = 1 << 24;

/// Longest period looked for by [`SubstitutionSystem::is_periodic`].
const PERIOD_SEARCH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LetterId(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Letter {
    pub id: char,
    pub length: Rational64,
}

impl Letter {
    pub fn new(id: char) -> Self {
        Self {
            id,
            length: Rational64::from_integer(1),
        }
    }

    pub fn with_length(id: char, length: Rational64) -> Self {
        Self { id, length }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    pub letters: Vec<LetterId>,
    pub origin_index: usize,
}

impl Word {
    pub fn new(letters: Vec<LetterId>, origin_index: usize) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidArgument("word must be nonempty".into()));
        }
        if origin_index >= letters.len() {
            return Err(Error::InvalidArgument(format!(
                "origin index {origin_index} out of bounds for length {}",
                letters.len()
            )));
        }
        Ok(Self {
            letters,
            origin_index,
        })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Renders the word with `a`, `b`, ... for letter indices 0, 1, ...
    pub fn to_abc(&self) -> String {
        self.letters
            .iter()
            .map(|l| (b'a' + l.0 as u8) as char)
            .collect()
    }
}

/// A letter labelled with its `k` left and `k` right neighbours.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CollaredLetter {
    pub center: LetterId,
    pub left: Vec<LetterId>,
    pub right: Vec<LetterId>,
}

impl CollaredLetter {
    pub fn k(&self) -> usize {
        self.left.len()
    }

    /// Builds the collared letter from a factor of odd length `2k + 1`.
    pub fn from_factor(factor: &[LetterId]) -> Self {
        debug_assert!(factor.len() % 2 == 1);
        let k = factor.len() / 2;
        Self {
            center: factor[k],
            left: factor[..k].to_vec(),
            right: factor[k + 1..].to_vec(),
        }
    }

    pub fn factor(&self) -> Vec<LetterId> {
        let mut out = self.left.clone();
        out.push(self.center);
        out.extend_from_slice(&self.right);
        out
    }

    /// Forgets the outermost corona.
    pub fn truncate(&self) -> Self {
        let k = self.k();
        assert!(k > 0, "cannot truncate a 0-collared letter");
        Self {
            center: self.center,
            left: self.left[1..].to_vec(),
            right: self.right[..k - 1].to_vec(),
        }
    }

    pub fn render(&self, sys: &SubstitutionSystem) -> String {
        let w = |ls: &[LetterId]| ls.iter().map(|&l| sys.symbol(l)).collect::<String>();
        if self.k() == 0 {
            sys.symbol(self.center).to_string()
        } else {
            format!(
                "{}^{{{}|{}}}",
                sys.symbol(self.center),
                w(&self.left),
                w(&self.right)
            )
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StabilityCertificate {
    /// Expansion depth after which two further rounds produced nothing new.
    pub rounds: usize,
    pub word_length: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorSet {
    pub length: usize,
    pub factors: BTreeSet<Vec<LetterId>>,
    pub certificate: StabilityCertificate,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollaredAlphabet {
    pub k: usize,
    pub letters: Vec<CollaredLetter>,
    pub certificate: StabilityCertificate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubstitutionSystem {
    alphabet: Vec<Letter>,
    rules: Vec<Vec<LetterId>>,
    seed: LetterId,
}

impl SubstitutionSystem {
    pub fn new(alphabet: Vec<Letter>, rules: BTreeMap<char, String>, seed: char) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::InvalidSystem("empty alphabet".into()));
        }
        let mut index = BTreeMap::new();
        for (i, letter) in alphabet.iter().enumerate() {
            if letter.length <= Rational64::zero() {
                return Err(Error::InvalidSystem(format!(
                    "letter {:?} has non-positive length {}",
                    letter.id, letter.length
                )));
            }
            if index.insert(letter.id, LetterId(i)).is_some() {
                return Err(Error::InvalidSystem(format!("duplicate letter {:?}", letter.id)));
            }
        }
        let lookup = |c: char| {
            index
                .get(&c)
                .copied()
                .ok_or_else(|| Error::InvalidSystem(format!("unknown letter {c:?}")))
        };
        let mut table = vec![None; alphabet.len()];
        for (from, image) in &rules {
            let from = lookup(*from)?;
            if image.is_empty() {
                return Err(Error::InvalidSystem(format!(
                    "empty image for letter {:?}",
                    alphabet[from.0].id
                )));
            }
            let image = image.chars().map(lookup).collect::<Result<Vec<_>>>()?;
            table[from.0] = Some(image);
        }
        let rules = table
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                r.ok_or_else(|| {
                    Error::InvalidSystem(format!("no rule for letter {:?}", alphabet[i].id))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let sys = Self {
            seed: lookup(seed)?,
            alphabet,
            rules,
        };
        let reach = sys.reachable_from(sys.seed);
        if let Some(missing) = (0..sys.alphabet.len()).find(|i| !reach.contains(&LetterId(*i))) {
            return Err(Error::InvalidSystem(format!(
                "letter {:?} is not reachable from the seed",
                sys.alphabet[missing].id
            )));
        }
        Ok(sys)
    }

    /// Shorthand for systems written as `[("a", "ab"), ("b", "a")]` with unit lengths.
    pub fn from_rules(rules: &[(char, &str)], seed: char) -> Result<Self> {
        let alphabet = rules.iter().map(|(c, _)| Letter::new(*c)).collect();
        let rules = rules.iter().map(|(c, s)| (*c, s.to_string())).collect();
        Self::new(alphabet, rules, seed)
    }

    pub fn fibonacci() -> Self {
        Self::from_rules(&[('a', "ab"), ('b', "a")], 'a').expect("valid system")
    }

    pub fn thue_morse() -> Self {
        Self::from_rules(&[('a', "ab"), ('b', "ba")], 'a').expect("valid system")
    }

    pub fn periodic() -> Self {
        Self::from_rules(&[('a', "aa")], 'a').expect("valid system")
    }

    pub fn alphabet(&self) -> &[Letter] {
        &self.alphabet
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn seed(&self) -> LetterId {
        self.seed
    }

    pub fn rule(&self, letter: LetterId) -> &[LetterId] {
        &self.rules[letter.0]
    }

    pub fn symbol(&self, letter: LetterId) -> char {
        self.alphabet[letter.0].id
    }

    pub fn letter_length(&self, letter: LetterId) -> f64 {
        self.alphabet[letter.0].length.to_f64().unwrap_or(f64::NAN)
    }

    pub fn shortest_length(&self) -> f64 {
        (0..self.alphabet.len())
            .map(|i| self.letter_length(LetterId(i)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn render(&self, word: &[LetterId]) -> String {
        word.iter().map(|&l| self.symbol(l)).collect()
    }

    pub fn parse_word(&self, s: &str) -> Result<Vec<LetterId>> {
        s.chars()
            .map(|c| {
                self.alphabet
                    .iter()
                    .position(|l| l.id == c)
                    .map(LetterId)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown letter {c:?}")))
            })
            .collect()
    }

    fn reachable_from(&self, start: LetterId) -> BTreeSet<LetterId> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(l) = stack.pop() {
            for &m in self.rule(l) {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        seen
    }

    /// Abelianization matrix: entry `[i][j]` counts letter `i` in the image of `j`.
    pub fn abelianization(&self) -> Vec<Vec<u64>> {
        let n = self.alphabet.len();
        let mut m = vec![vec![0u64; n]; n];
        for j in 0..n {
            for l in &self.rules[j] {
                m[l.0][j] += 1;
            }
        }
        m
    }

    /// Some power of the abelianization matrix is strictly positive.
    pub fn is_primitive(&self) -> bool {
        let n = self.alphabet.len();
        // Boolean powers; primitivity shows up by exponent (n-1)^2 + 1.
        let base: Vec<Vec<bool>> = self
            .abelianization()
            .into_iter()
            .map(|row| row.into_iter().map(|x| x > 0).collect())
            .collect();
        let mut power = base.clone();
        for _ in 0..((n - 1) * (n - 1) + 1) {
            if power.iter().all(|row| row.iter().all(|&x| x)) {
                return true;
            }
            let mut next = vec![vec![false; n]; n];
            for i in 0..n {
                for j in 0..n {
                    next[i][j] = (0..n).any(|t| power[i][t] && base[t][j]);
                }
            }
            power = next;
        }
        power.iter().all(|row| row.iter().all(|&x| x))
    }

    pub fn apply(&self, word: &[LetterId]) -> Vec<LetterId> {
        word.iter().flat_map(|&l| self.rule(l).iter().copied()).collect()
    }

    fn expand_from(&self, start: LetterId, n: usize) -> Vec<LetterId> {
        let mut w = vec![start];
        for _ in 0..n {
            w = self.apply(&w);
        }
        w
    }

    /// `rule^n(seed)` with origin at index 0.
    pub fn expand(&self, n: usize) -> Word {
        Word {
            letters: self.expand_from(self.seed, n),
            origin_index: 0,
        }
    }

    /// Expands the seed until the word has at least `min_len` letters.
    pub fn expand_to_length(&self, min_len: usize) -> Result<Word> {
        let mut w = vec![self.seed];
        let mut rounds = 0;
        while w.len() < min_len {
            let next = self.apply(&w);
            if next.len() == w.len() && rounds > self.alphabet.len() {
                return Err(Error::InvalidSystem(
                    "substitution is not expanding; cannot reach requested length".into(),
                ));
            }
            w = next;
            rounds += 1;
        }
        Ok(Word {
            letters: w,
            origin_index: 0,
        })
    }

    fn factors_from(&self, start: LetterId, len: usize) -> Result<(BTreeSet<Vec<LetterId>>, StabilityCertificate)> {
        let mut acc = BTreeSet::new();
        let mut quiet_rounds = 0;
        let mut word = vec![start];
        let mut round = 0;
        loop {
            let before = acc.len();
            if word.len() >= len {
                acc.extend(word.windows(len).map(<[LetterId]>::to_vec));
            }
            if word.len() >= len && acc.len() == before && !acc.is_empty() {
                quiet_rounds += 1;
                if quiet_rounds == 2 {
                    return Ok((
                        acc,
                        StabilityCertificate {
                            rounds: round,
                            word_length: word.len(),
                        },
                    ));
                }
            } else {
                quiet_rounds = 0;
            }
            let next = self.apply(&word);
            if next == word {
                // A fixed word contributes nothing new in any later round.
                return Ok((
                    acc,
                    StabilityCertificate {
                        rounds: round,
                        word_length: word.len(),
                    },
                ));
            }
            if next.len() > MAX_EXPANSION_LEN || (next.len() == word.len() && round > 4 * self.alphabet.len() + len) {
                return Err(Error::NoStabilization {
                    rounds: round,
                    len: word.len(),
                });
            }
            word = next;
            round += 1;
        }
    }

    /// All length-`len` factors of the language, one stabilised scan per
    /// starting letter. Differing per-letter languages (non-primitive systems)
    /// produce a warning and the union is returned.
    pub fn legal_factors(&self, len: usize) -> Result<FactorSet> {
        if len == 0 {
            return Err(Error::InvalidArgument("factor length must be at least 1".into()));
        }
        let mut union = BTreeSet::new();
        let mut certificate = StabilityCertificate {
            rounds: 0,
            word_length: 0,
        };
        let mut warnings = Vec::new();
        let mut first: Option<BTreeSet<Vec<LetterId>>> = None;
        for i in 0..self.alphabet.len() {
            let letter = LetterId(i);
            let (set, cert) = self.factors_from(letter, len)?;
            if let Some(f) = &first {
                if *f != set {
                    warnings.push(format!(
                        "length-{len} factors generated from {:?} differ from those of {:?}; taking the union",
                        self.symbol(letter),
                        self.alphabet[0].id
                    ));
                }
            } else {
                first = Some(set.clone());
            }
            if cert.rounds > certificate.rounds || certificate.word_length == 0 {
                certificate = cert;
            }
            union.extend(set);
        }
        Ok(FactorSet {
            length: len,
            factors: union,
            certificate,
            warnings,
        })
    }

    pub fn collared_alphabet(&self, k: usize) -> Result<CollaredAlphabet> {
        let fs = self.legal_factors(2 * k + 1)?;
        Ok(CollaredAlphabet {
            k,
            letters: fs.factors.iter().map(|f| CollaredLetter::from_factor(f)).collect(),
            certificate: fs.certificate,
        })
    }

    /// Whether the language is that of a periodic word, detected by factor
    /// complexity `p(n) ≤ n` for some `n ≤ PERIOD_SEARCH` (Morse–Hedlund).
    pub fn is_periodic(&self) -> Result<bool> {
        for n in 1..=PERIOD_SEARCH {
            if self.legal_factors(n)?.factors.len() <= n {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Legal adjacencies `(left, right)` of `k`-collared letters.
    pub fn collared_adjacencies(&self, k: usize) -> Result<Vec<(CollaredLetter, CollaredLetter)>> {
        let fs = self.legal_factors(2 * k + 2)?;
        Ok(fs
            .factors
            .iter()
            .map(|f| {
                (
                    CollaredLetter::from_factor(&f[..2 * k + 1]),
                    CollaredLetter::from_factor(&f[1..]),
                )
            })
            .collect())
    }
}

impl fmt::Display for SubstitutionSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rules: Vec<String> = (0..self.alphabet.len())
            .map(|i| format!("{}->{}", self.alphabet[i].id, self.render(&self.rules[i])))
            .collect();
        write!(f, "{}", rules.join(", "))
    }
}

/// The `k`-collared letter centred at position `i`.
pub fn neighborhood(w: &Word, i: usize, k: usize) -> Result<CollaredLetter> {
    if i < k || i + k >= w.len() {
        return Err(Error::CollarExceedsPatch {
            index: i,
            k,
            len: w.len(),
        });
    }
    Ok(CollaredLetter::from_factor(&w.letters[i - k..=i + k]))
}

/// Barycentric punctures: a vertex is its own puncture, an edge is punctured
/// at the midpoint of its interval.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum PunctureScheme {
    #[default]
    Barycenter,
}

impl PunctureScheme {
    /// Offset of the edge puncture from the left vertex of a tile.
    pub fn edge_offset(&self, tile_length: f64) -> f64 {
        match self {
            PunctureScheme::Barycenter => tile_length / 2.0,
        }
    }
}

/// A word laid out on the line: `vertices[i]` is the left end of tile `i`,
/// `vertices[len]` the right end of the last tile.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub word: Word,
    pub vertices: Vec<f64>,
}

impl Patch {
    pub fn layout(sys: &SubstitutionSystem, word: Word) -> Self {
        let mut vertices = Vec::with_capacity(word.len() + 1);
        let mut x = 0.0;
        vertices.push(x);
        for &l in &word.letters {
            x += sys.letter_length(l);
            vertices.push(x);
        }
        Self { word, vertices }
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn tile_length(&self, i: usize) -> f64 {
        self.vertices[i + 1] - self.vertices[i]
    }

    pub fn edge_puncture(&self, i: usize, scheme: PunctureScheme) -> f64 {
        self.vertices[i] + scheme.edge_offset(self.tile_length(i))
    }

    /// Tile containing `x`, with the half-open convention `[v_i, v_{i+1})`.
    pub fn tile_at(&self, x: f64) -> Option<usize> {
        if x < self.vertices[0] || x >= *self.vertices.last()? {
            return None;
        }
        let idx = self.vertices.partition_point(|&v| v <= x);
        Some(idx - 1)
    }
}

/// The Sturmian coding `s_n = a` iff `{nθ + x0} ∈ [0, 1 − θ)`, for
/// `n = −N..N`, with the origin at index `N`.
///
/// `x0 = 1 − θ` sits on the interior boundary between the two coding
/// intervals and is rejected; `x0 = 0` is the left edge of the fundamental
/// domain and is resolved by the half-open convention.
pub fn sturmian_word(theta: &Quadratic, x0: &Quadratic, n: usize) -> Result<Word> {
    if !theta.is_irrational() {
        return Err(Error::RationalTheta);
    }
    let zero = Quadratic::zero();
    let one = Quadratic::one();
    if *theta <= zero || *theta >= one {
        return Err(Error::InvalidArgument("theta must lie in (0, 1)".into()));
    }
    if *x0 < zero || *x0 >= one {
        return Err(Error::InvalidArgument("x0 must lie in [0, 1)".into()));
    }
    let split = one - theta.clone();
    if *x0 == split {
        return Err(Error::SingularCodingPoint(format!(
            "x0 = {x0} is the boundary 1 - theta of the coding partition"
        )));
    }
    let n = n as i64;
    let letters = (-n..=n)
        .map(|j| {
            let pos = (theta.scale(j) + x0.clone()).fract();
            if pos < split {
                LetterId(0)
            } else {
                LetterId(1)
            }
        })
        .collect();
    Word::new(letters, n as usize)
}
