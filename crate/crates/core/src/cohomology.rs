//! Integer cohomology of cochain complexes, induced maps, and direct limits of
//! finitely generated abelian groups.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::complex::{CochainComplex, CochainMap};
use crate::error::{Error, Result};
use crate::intmat::IntMatrix;
use crate::snf::smith_normal_form;

/// `Z^rank ⊕ Z/d_1 ⊕ … ⊕ Z/d_m` with `d_i ≥ 2` and `d_i | d_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FGAbelianGroup {
    pub rank: usize,
    pub torsion: Vec<BigInt>,
}

impl FGAbelianGroup {
    pub fn free(rank: usize) -> Self {
        Self {
            rank,
            torsion: Vec::new(),
        }
    }

    pub fn new(rank: usize, torsion: Vec<BigInt>) -> Result<Self> {
        let g = Self { rank, torsion };
        if g.torsion.iter().any(|d| d < &BigInt::from(2)) {
            return Err(Error::InvalidArgument("torsion coefficients must be at least 2".into()));
        }
        if g.torsion.windows(2).any(|w| !w[1].mod_floor(&w[0]).is_zero()) {
            return Err(Error::InvalidArgument("torsion coefficients must form a divisibility chain".into()));
        }
        Ok(g)
    }

    /// Number of generators (torsion generators first, then free ones).
    pub fn generator_count(&self) -> usize {
        self.torsion.len() + self.rank
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    /// Modulus of each generator coordinate, `0` for free coordinates.
    fn moduli(&self) -> Vec<BigInt> {
        self.torsion
            .iter()
            .cloned()
            .chain(std::iter::repeat_n(BigInt::zero(), self.rank))
            .collect()
    }
}

impl fmt::Display for FGAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        parts.extend(self.torsion.iter().map(|d| format!("Z/{d}")));
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" (+) "))
        }
    }
}

impl FromStr for FGAbelianGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(Self::free(0));
        }
        let mut rank = 0;
        let mut torsion = Vec::new();
        for part in s.split("(+)").map(str::trim) {
            if part == "Z" {
                rank += 1;
            } else if let Some(r) = part.strip_prefix("Z^") {
                rank += r
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad rank in {part:?}")))?;
            } else if let Some(d) = part.strip_prefix("Z/") {
                torsion.push(
                    d.parse::<BigInt>()
                        .map_err(|_| Error::InvalidArgument(format!("bad modulus in {part:?}")))?,
                );
            } else {
                return Err(Error::InvalidArgument(format!("cannot parse group summand {part:?}")));
            }
        }
        Self::new(rank, torsion)
    }
}

impl Serialize for FGAbelianGroup {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// `H^n` of a cochain complex together with cocycle representatives of its
/// generators and the data needed to read off coordinates of any cocycle.
#[derive(Clone, Debug)]
pub struct CohomologyGroup {
    pub degree: usize,
    pub group: FGAbelianGroup,
    /// One integer cochain per generator, torsion generators first.
    pub generators: Vec<Vec<BigInt>>,
    cycle_rank: usize,
    v_inv: IntMatrix,
    p: IntMatrix,
    kept: Vec<usize>,
    moduli: Vec<BigInt>,
}

impl CohomologyGroup {
    pub fn cochain_length(&self) -> usize {
        self.v_inv.cols()
    }

    pub fn is_cocycle(&self, z: &[BigInt]) -> bool {
        let y = self.v_inv.mul_vec(z);
        y[..self.cycle_rank].iter().all(Zero::is_zero)
    }

    /// Coordinates of the class of the cocycle `z` in the generator basis;
    /// torsion coordinates are reduced into `[0, d_i)`.
    pub fn coordinates(&self, z: &[BigInt]) -> Result<Vec<BigInt>> {
        if z.len() != self.cochain_length() {
            return Err(Error::DimensionMismatch(format!(
                "cochain of length {} for a group on {} cells",
                z.len(),
                self.cochain_length()
            )));
        }
        let y = self.v_inv.mul_vec(z);
        if !y[..self.cycle_rank].iter().all(Zero::is_zero) {
            return Err(Error::ChainMapFailure(format!(
                "cochain is not a cocycle in degree {}",
                self.degree
            )));
        }
        let w = self.p.mul_vec(&y[self.cycle_rank..]);
        Ok(self
            .kept
            .iter()
            .zip(&self.moduli)
            .map(|(&i, m)| if m.is_zero() { w[i].clone() } else { w[i].mod_floor(m) })
            .collect())
    }
}

/// `ker D^n / im D^{n−1}`.
pub fn cohomology_group(c: &CochainComplex, n: usize) -> Result<CohomologyGroup> {
    if n > c.top_degree() {
        return Err(Error::DimensionMismatch(format!(
            "degree {n} exceeds top degree {}",
            c.top_degree()
        )));
    }
    let d_n = c.differential(n as isize);
    let d_prev = c.differential(n as isize - 1);
    if d_n.cols() != c.cell_counts[n] || d_prev.rows() != c.cell_counts[n] {
        return Err(Error::DimensionMismatch(format!("differentials around degree {n} do not compose")));
    }
    if !(&d_n * &d_prev).is_zero() {
        return Err(Error::DimensionMismatch(format!("D^{n} D^{} is not zero", n as isize - 1)));
    }
    let cells = c.cell_counts[n];
    let s = smith_normal_form(&d_n);
    let r = s.rank();
    let kernel = s.v.submatrix(0, cells, r, cells);
    // Coboundaries expressed in the kernel basis.
    let a = (&s.v_inv * &d_prev).submatrix(r, cells, 0, d_prev.cols());
    let sa = smith_normal_form(&a);
    let diag = sa.diagonal();
    let k = cells - r;
    let mut kept = Vec::new();
    let mut moduli = Vec::new();
    let mut torsion = Vec::new();
    let mut free = 0;
    for i in 0..k {
        let d = diag.get(i).cloned().unwrap_or_else(BigInt::zero);
        if d.is_one() {
            continue;
        }
        kept.push(i);
        if d.is_zero() {
            free += 1;
        } else {
            torsion.push(d.clone());
        }
        moduli.push(d);
    }
    let basis = &kernel * &sa.u_inv;
    let generators = kept.iter().map(|&i| basis.column(i)).collect();
    Ok(CohomologyGroup {
        degree: n,
        group: FGAbelianGroup {
            rank: free,
            torsion,
        },
        generators,
        cycle_rank: r,
        v_inv: s.v_inv,
        p: sa.u,
        kept,
        moduli,
    })
}

pub fn cohomology_groups(c: &CochainComplex) -> Result<Vec<CohomologyGroup>> {
    (0..=c.top_degree()).map(|n| cohomology_group(c, n)).collect()
}

/// A homomorphism in generator coordinates: `matrix` has one row per target
/// generator and one column per source generator.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupHom {
    pub source: FGAbelianGroup,
    pub target: FGAbelianGroup,
    pub matrix: IntMatrix,
}

impl GroupHom {
    pub fn identity(g: &FGAbelianGroup) -> Self {
        Self {
            source: g.clone(),
            target: g.clone(),
            matrix: IntMatrix::identity(g.generator_count()),
        }
    }

    pub fn new(source: FGAbelianGroup, target: FGAbelianGroup, mut matrix: IntMatrix) -> Result<Self> {
        if matrix.rows() != target.generator_count() || matrix.cols() != source.generator_count() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for a map {} -> {}",
                matrix.rows(),
                matrix.cols(),
                source,
                target
            )));
        }
        for (i, m) in target.moduli().iter().enumerate() {
            if !m.is_zero() {
                matrix.reduce_row_mod(i, m);
            }
        }
        Ok(Self {
            source,
            target,
            matrix,
        })
    }

    /// `then ∘ self`.
    pub fn then(&self, then: &GroupHom) -> Result<GroupHom> {
        if self.target != then.source {
            return Err(Error::DimensionMismatch("homomorphisms do not compose".into()));
        }
        GroupHom::new(self.source.clone(), then.target.clone(), &then.matrix * &self.matrix)
    }

    /// The block mapping free generators to free coordinates.
    pub fn free_block(&self) -> IntMatrix {
        let ts = self.source.torsion.len();
        let tt = self.target.torsion.len();
        self.matrix
            .submatrix(tt, self.matrix.rows(), ts, self.matrix.cols())
    }
}

/// `H^n` of a cochain map `f : C^*(Y) → C^*(X)` as a map `H^n(Y) → H^n(X)`.
///
/// Fails unless the images of the generators are cocycles and the images of
/// the coboundaries of `Y` are coboundaries in `X`.
pub fn induced_map(
    f: &CochainMap,
    n: usize,
    source_complex: &CochainComplex,
    source: &CohomologyGroup,
    target: &CohomologyGroup,
) -> Result<GroupHom> {
    let p = f
        .matrices
        .get(n)
        .ok_or_else(|| Error::DimensionMismatch(format!("cochain map has no degree {n}")))?;
    let mut matrix = IntMatrix::zeros(target.group.generator_count(), source.group.generator_count());
    for (j, g) in source.generators.iter().enumerate() {
        let image = p.mul_vec(g);
        let coords = target
            .coordinates(&image)
            .map_err(|e| Error::ChainMapFailure(format!("image of generator {j}: {e}")))?;
        for (i, x) in coords.into_iter().enumerate() {
            matrix[(i, j)] = x;
        }
    }
    let d_prev = source_complex.differential(n as isize - 1);
    for col in 0..d_prev.cols() {
        let image = p.mul_vec(&d_prev.column(col));
        let coords = target
            .coordinates(&image)
            .map_err(|e| Error::ChainMapFailure(format!("image of coboundary {col}: {e}")))?;
        if coords.iter().any(|x| !x.is_zero()) {
            return Err(Error::ChainMapFailure(format!(
                "coboundary {col} maps to a nonzero class"
            )));
        }
    }
    GroupHom::new(source.group.clone(), target.group.clone(), matrix)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectSystem {
    pub groups: Vec<FGAbelianGroup>,
    pub maps: Vec<GroupHom>,
}

impl DirectSystem {
    pub fn new(groups: Vec<FGAbelianGroup>, maps: Vec<GroupHom>) -> Result<Self> {
        if groups.is_empty() || maps.len() + 1 != groups.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} groups need {} maps, got {}",
                groups.len(),
                groups.len().saturating_sub(1),
                maps.len()
            )));
        }
        for (i, m) in maps.iter().enumerate() {
            if m.source != groups[i] || m.target != groups[i + 1] {
                return Err(Error::DimensionMismatch(format!("map {i} does not match its groups")));
            }
        }
        Ok(Self { groups, maps })
    }

    /// `g → g → g → …` along the same endomorphism, `steps` times.
    pub fn constant(hom: &GroupHom, steps: usize) -> Result<Self> {
        if hom.source != hom.target {
            return Err(Error::DimensionMismatch("constant system needs an endomorphism".into()));
        }
        Self::new(vec![hom.source.clone(); steps + 1], vec![hom.clone(); steps])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectLimitResult {
    pub stable: bool,
    pub limit_rank: usize,
    /// Primes `p` for which the limit contains infinitely `p`-divisible
    /// elements, i.e. `p` divides every eventual restricted transition.
    #[serde(serialize_with = "serialize_divisibility")]
    pub divisibility: BTreeMap<u64, bool>,
    #[serde(serialize_with = "serialize_bigints")]
    pub torsion: Vec<BigInt>,
    /// Index of the first map of the stable tail.
    pub certificate: Option<usize>,
    /// Free block of the last transition map, row-major.
    #[serde(serialize_with = "serialize_matrix")]
    pub eventual_matrix: Option<IntMatrix>,
    /// Eventual transition restricted to the eventual image, row-major.
    #[serde(serialize_with = "serialize_matrix")]
    pub restricted_matrix: Option<IntMatrix>,
    pub unimodular: bool,
}

fn serialize_divisibility<S: Serializer>(
    map: &BTreeMap<u64, bool>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    serializer.collect_map(
        map.iter()
            .filter(|(_, v)| **v)
            .map(|(p, _)| (p.to_string(), "infinitely divisible")),
    )
}

fn serialize_bigints<S: Serializer>(xs: &[BigInt], serializer: S) -> std::result::Result<S::Ok, S::Error> {
    serializer.collect_seq(xs.iter().map(ToString::to_string))
}

fn serialize_matrix<S: Serializer>(
    m: &Option<IntMatrix>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Rm {
        rows: usize,
        cols: usize,
        entries: Vec<i64>,
    }
    match m {
        None => serializer.serialize_none(),
        Some(m) => {
            let entries = m
                .to_i64_rows()
                .map(|rows| rows.into_iter().flatten().collect())
                .unwrap_or_default();
            serializer.serialize_some(&Rm {
                rows: m.rows(),
                cols: m.cols(),
                entries,
            })
        }
    }
}

impl DirectLimitResult {
    pub fn is_divisible_by(&self, p: u64) -> bool {
        self.divisibility.get(&p).copied().unwrap_or(false)
    }

    /// The limit as a finitely generated group, when it is one.
    pub fn as_group(&self) -> Option<FGAbelianGroup> {
        (self.stable && !self.divisibility.values().any(|&v| v)).then(|| FGAbelianGroup {
            rank: self.limit_rank,
            torsion: self.torsion.clone(),
        })
    }
}

fn prime_factors(n: &BigInt) -> Vec<u64> {
    let mut n = n.abs();
    let mut out = Vec::new();
    if n.is_zero() {
        return out;
    }
    let mut p = 2u64;
    while BigInt::from(p) * BigInt::from(p) <= n {
        let bp = BigInt::from(p);
        if n.mod_floor(&bp).is_zero() {
            out.push(p);
            while n.mod_floor(&bp).is_zero() {
                n /= &bp;
            }
        }
        p += 1;
    }
    if n > BigInt::one() {
        out.push(n.to_u64().expect("remaining prime factor fits in u64"));
    }
    out
}

/// Quotient of `Z^n` by `ker t`: returns the projection `π` (rows = rank)
/// and a section `s` with `π s = I`.
fn coimage(t: &IntMatrix) -> (IntMatrix, IntMatrix, usize) {
    let s = smith_normal_form(t);
    let r = s.rank();
    let n = t.cols();
    (s.v_inv.submatrix(0, r, 0, n), s.v.submatrix(0, n, 0, r), r)
}

/// Direct limit of the free parts of a system.
///
/// The stable tail starts at the first index `c` where two consecutive maps
/// have equal source/target ranks and equal Smith forms. Along the tail each
/// group is replaced by its quotient by the kernel into the last group; the
/// induced maps between these quotients are injective, and a prime is flagged
/// as infinitely dividing the limit when it divides the determinant of every
/// such map in the tail.
pub fn direct_limit(system: &DirectSystem) -> DirectLimitResult {
    let maps = &system.maps;
    let free: Vec<IntMatrix> = maps.iter().map(GroupHom::free_block).collect();
    let last_group = system.groups.last().expect("nonempty system");
    if maps.is_empty() {
        return DirectLimitResult {
            stable: true,
            limit_rank: last_group.rank,
            divisibility: BTreeMap::new(),
            torsion: last_group.torsion.clone(),
            certificate: Some(0),
            eventual_matrix: None,
            restricted_matrix: None,
            unimodular: true,
        };
    }
    let signature = |m: &IntMatrix| (m.rows(), m.cols(), smith_normal_form(m).diagonal());
    let certificate = (0..free.len().saturating_sub(1))
        .find(|&c| {
            free[c].rows() == free[c].cols() && signature(&free[c]) == signature(&free[c + 1])
        });
    // Composites from each tail index to the last group.
    let start = certificate.unwrap_or(free.len() - 1);
    let n_last = free.len();
    let mut to_last: Vec<IntMatrix> = vec![IntMatrix::identity(last_group.rank); n_last + 1];
    for i in (start..n_last).rev() {
        to_last[i] = &to_last[i + 1] * &free[i];
    }
    let limit_rank = smith_normal_form(&to_last[start]).rank();

    // Induced maps between coimages; the last group has no later kernel to
    // quotient by, so only maps with at least one successor are used.
    let mut restricted = Vec::new();
    for i in start..n_last.saturating_sub(1) {
        let (_, section, r_i) = coimage(&to_last[i]);
        let (proj_next, _, r_next) = coimage(&to_last[i + 1]);
        if r_i != limit_rank || r_next != limit_rank {
            continue;
        }
        restricted.push(&(&proj_next * &free[i]) * &section);
    }
    let stable = certificate.is_some() && !restricted.is_empty();
    let mut divisibility = BTreeMap::new();
    let dets: Vec<BigInt> = restricted.iter().map(IntMatrix::determinant).collect();
    if let Some(first) = dets.first() {
        for p in prime_factors(first) {
            let bp = BigInt::from(p);
            if dets.iter().all(|d| d.mod_floor(&bp).is_zero()) {
                divisibility.insert(p, true);
            }
        }
    }
    let unimodular = !dets.is_empty() && dets.iter().all(|d| d.abs().is_one());
    let torsion_constant = system.groups[start..].iter().all(|g| g.torsion == last_group.torsion);
    let torsion = if unimodular && torsion_constant && limit_rank == last_group.rank {
        last_group.torsion.clone()
    } else {
        Vec::new()
    };
    DirectLimitResult {
        stable,
        limit_rank,
        divisibility,
        torsion,
        certificate,
        eventual_matrix: free.last().cloned(),
        restricted_matrix: restricted.last().cloned(),
        unimodular,
    }
}
