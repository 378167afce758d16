//! PV cochains on the Δ-transversal.
//!
//! A point of the transversal is represented by a finite patch cut from a
//! substitution expansion, an origin face, and a range of tiles around the
//! origin that is trusted to agree with a genuine tiling. Everything that
//! needs to look outside the trusted range fails with
//! [`Error::UndecidableAtRadius`] instead of guessing.
//!
//! Level-`k` PV cochains are value tables on the `n`-cells of `Γ_k`; a cochain
//! is evaluated at a point by reading off the `k`-collared face at its origin.
//! The PV differential is evaluated two ways: pointwise, by translating the
//! origin from an edge puncture to its two vertex punctures, and
//! combinatorially, as the simplicial coboundary of the table.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Sub};
use std::sync::Arc;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, RngExt};
use serde::Serialize;

use crate::apg::{build_gamma, connecting_map, ApComplex, Side};
use crate::complex::ConnectingMap;
use crate::error::{Error, Result};
use crate::tiling::{neighborhood, LetterId, Patch, PunctureScheme, SubstitutionSystem};

/// Values a PV cochain can take: integers, reals, or fixed-size vectors.
pub trait Coefficient: Clone + Debug + PartialEq + Zero + Add<Output = Self> + Sub<Output = Self> {}

impl<T> Coefficient for T where T: Clone + Debug + PartialEq + Zero + Add<Output = T> + Sub<Output = T> {}

/// Relative tolerance when matching a translated origin to a puncture.
const PUNCTURE_MATCH: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Face {
    /// Vertex `i` is the left endpoint of tile `i`.
    Vertex(usize),
    Edge(usize),
}

impl Face {
    pub fn dim(&self) -> usize {
        match self {
            Face::Vertex(_) => 0,
            Face::Edge(_) => 1,
        }
    }

    /// Tiles whose `k`-collars determine the level-`k` face.
    fn support(&self, k: usize) -> (isize, isize) {
        let k = k as isize;
        match *self {
            Face::Vertex(i) => (i as isize - 1 - k, i as isize + k),
            Face::Edge(i) => (i as isize - k, i as isize + k),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransversalPoint {
    pub patch: Arc<Patch>,
    pub origin: Face,
    pub n: usize,
    /// Tile range `[lo, hi]` known to agree with a tiling of the hull.
    pub trusted: (usize, usize),
    pub guarantee_radius: f64,
}

impl TransversalPoint {
    pub fn new(patch: Arc<Patch>, origin: Face, trusted: (usize, usize)) -> Result<Self> {
        if trusted.0 > trusted.1 || trusted.1 >= patch.len() {
            return Err(Error::InvalidArgument("trusted range outside the patch".into()));
        }
        let (lo, hi) = origin.support(0);
        if lo.max(0) < trusted.0 as isize || hi > trusted.1 as isize {
            return Err(Error::InvalidArgument("origin face outside the trusted range".into()));
        }
        let x = origin_coordinate(&patch, origin);
        let radius = (x - patch.vertices[trusted.0]).min(patch.vertices[trusted.1 + 1] - x);
        if radius <= 0.0 {
            return Err(Error::InvalidArgument("guarantee radius must be positive".into()));
        }
        Ok(Self {
            n: origin.dim(),
            patch,
            origin,
            trusted,
            guarantee_radius: radius,
        })
    }

    /// Puncture coordinate of the origin face in patch coordinates.
    pub fn coordinate(&self) -> f64 {
        origin_coordinate(&self.patch, self.origin)
    }

    /// Largest collar radius answerable at the origin.
    pub fn max_collar(&self) -> Option<usize> {
        (0..).take_while(|&k| self.covers(k)).last()
    }

    fn covers(&self, k: usize) -> bool {
        let (lo, hi) = self.origin.support(k);
        lo >= self.trusted.0 as isize && hi <= self.trusted.1 as isize
    }

    /// Moves the origin by `offset`; the result must land on a puncture.
    pub fn translate(&self, offset: f64) -> Result<TransversalPoint> {
        let y = self.coordinate() + offset;
        let face = face_at(&self.patch, y).ok_or_else(|| {
            Error::UndecidableAtRadius(format!("translate by {offset} does not land on a puncture"))
        })?;
        let (lo, hi) = face.support(0);
        if lo < self.trusted.0 as isize || hi > self.trusted.1 as isize {
            return Err(Error::UndecidableAtRadius(format!(
                "translate by {offset} leaves the trusted patch"
            )));
        }
        TransversalPoint::new(self.patch.clone(), face, self.trusted)
    }

    /// The level-`k` cell of `gamma` realized at the origin.
    pub fn zone(&self, gamma: &ApComplex) -> Result<usize> {
        let k = gamma.k;
        if !self.covers(k) {
            return Err(Error::UndecidableAtRadius(format!(
                "level {k} collar at {:?} exceeds trusted tiles {:?}",
                self.origin, self.trusted
            )));
        }
        let w = &self.patch.word;
        let missing = |what: String| Error::CellNotRealized(what);
        match self.origin {
            Face::Edge(i) => {
                let c = neighborhood(w, i, k)?;
                gamma.edge_id(&c).ok_or_else(|| missing(format!("{c:?}")))
            }
            Face::Vertex(i) => {
                let l = neighborhood(w, i - 1, k)?;
                let r = neighborhood(w, i, k)?;
                let le = gamma.edge_id(&l).ok_or_else(|| missing(format!("{l:?}")))?;
                let v = gamma.endpoint(le, Side::Right);
                if gamma.edge_id(&r).map(|re| gamma.endpoint(re, Side::Left)) != Some(v) {
                    return Err(missing(format!("vertex between {l:?} and {r:?}")));
                }
                Ok(v)
            }
        }
    }
}

fn origin_coordinate(patch: &Patch, face: Face) -> f64 {
    match face {
        Face::Vertex(i) => patch.vertices[i],
        Face::Edge(i) => patch.edge_puncture(i, PunctureScheme::Barycenter),
    }
}

fn face_at(patch: &Patch, y: f64) -> Option<Face> {
    let scale = patch.vertices.last().copied().unwrap_or(1.0).abs().max(1.0);
    let close = |a: f64| (a - y).abs() <= PUNCTURE_MATCH * scale;
    let j = patch.vertices.partition_point(|&v| v < y);
    for cand in [j.wrapping_sub(1), j] {
        if cand < patch.vertices.len() && close(patch.vertices[cand]) {
            return Some(Face::Vertex(cand));
        }
    }
    let t = patch.tile_at(y)?;
    close(patch.edge_puncture(t, PunctureScheme::Barycenter)).then_some(Face::Edge(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AcceptanceZone {
    pub k: usize,
    pub n: usize,
    pub cell: usize,
}

impl AcceptanceZone {
    pub fn new(gamma: &ApComplex, n: usize, cell: usize) -> Result<Self> {
        if n > 1 || cell >= gamma.complex.cell_count(n) {
            return Err(Error::InvalidArgument(format!("no {n}-cell {cell} in level {}", gamma.k)));
        }
        Ok(Self { k: gamma.k, n, cell })
    }
}

pub fn zone_membership(xi: &TransversalPoint, zone: &AcceptanceZone, gamma: &ApComplex) -> Result<bool> {
    if gamma.k != zone.k || xi.n != zone.n {
        return Err(Error::InvalidArgument("zone, point and level disagree".into()));
    }
    Ok(xi.zone(gamma)? == zone.cell)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PVCochain<A> {
    pub k: usize,
    pub n: usize,
    pub values: Vec<A>,
}

impl<A: Coefficient> PVCochain<A> {
    pub fn zero(gamma: &ApComplex, n: usize) -> Self {
        Self {
            k: gamma.k,
            n,
            values: vec![A::zero(); gamma.complex.cell_count(n)],
        }
    }

    pub fn constant(gamma: &ApComplex, n: usize, a: A) -> Self {
        Self {
            k: gamma.k,
            n,
            values: vec![a; gamma.complex.cell_count(n)],
        }
    }

    /// The cochain `a` on `cell` and zero elsewhere.
    pub fn indicator(gamma: &ApComplex, n: usize, cell: usize, a: A) -> Self {
        let mut f = Self::zero(gamma, n);
        f.values[cell] = a;
        f
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.k, self.n, self.values.len()) != (other.k, other.n, other.values.len()) {
            return Err(Error::DimensionMismatch("adding PV cochains of different shape".into()));
        }
        Ok(Self {
            k: self.k,
            n: self.n,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a.clone() + b.clone()).collect(),
        })
    }
}

/// `η_k`: a simplicial cochain on `Γ_k` read as a function on the zones.
pub fn eta_embed<A: Coefficient>(gamma: &ApComplex, n: usize, c: Vec<A>) -> Result<PVCochain<A>> {
    if n > 1 || c.len() != gamma.complex.cell_count(n) {
        return Err(Error::DimensionMismatch(format!(
            "cochain of length {} on {n}-cells of level {}",
            c.len(),
            gamma.k
        )));
    }
    Ok(PVCochain { k: gamma.k, n, values: c })
}

pub fn evaluate<A: Coefficient>(f: &PVCochain<A>, xi: &TransversalPoint, gamma: &ApComplex) -> Result<A> {
    if f.k != gamma.k || f.n != xi.n {
        return Err(Error::InvalidArgument(format!(
            "cannot evaluate a level-{} degree-{} cochain on a degree-{} point at level {}",
            f.k, f.n, xi.n, gamma.k
        )));
    }
    Ok(f.values[xi.zone(gamma)?].clone())
}

/// Pullback along the forgetful map `Γ_{k+1} → Γ_k`.
pub fn refine<A: Coefficient>(f: &PVCochain<A>, rho: &ConnectingMap, fine: &ApComplex) -> PVCochain<A> {
    PVCochain {
        k: fine.k,
        n: f.n,
        values: rho.cell_map[f.n].iter().map(|&c| f.values[c].clone()).collect(),
    }
}

/// Puncture offsets `x_{σ,i} = p_{∂_i σ} − p_σ` per uncollared tile. Since
/// punctures are translation invariant one table serves every level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OffsetTable {
    /// `offsets[letter] = [x_0, x_1]`: towards the right and the left vertex.
    pub offsets: Vec<[f64; 2]>,
}

impl OffsetTable {
    pub fn new(sys: &SubstitutionSystem) -> Self {
        let offsets = (0..sys.alphabet_size())
            .map(|l| {
                let len = sys.letter_length(LetterId(l));
                let p = PunctureScheme::Barycenter.edge_offset(len);
                [len - p, -p]
            })
            .collect();
        Self { offsets }
    }

    /// Fault injection: swap the two offsets of one tile type.
    pub fn corrupted(mut self, letter: LetterId) -> Self {
        self.offsets[letter.0].swap(0, 1);
        self
    }
}

/// `d_PV f` at a degree-1 point: `Σ_i (−1)^i f(ξ − x_{σ,i})`, i.e. the value
/// at the right vertex minus the value at the left vertex.
pub fn d_pv_pointwise<A: Coefficient>(
    f: &PVCochain<A>,
    xi: &TransversalPoint,
    gamma: &ApComplex,
    offsets: &OffsetTable,
) -> Result<A> {
    let Face::Edge(i) = xi.origin else {
        return Err(Error::InvalidArgument("d_PV is evaluated at edge punctures".into()));
    };
    if f.n != 0 {
        return Err(Error::InvalidArgument("d_PV of a top-degree cochain".into()));
    }
    let [x0, x1] = offsets.offsets[xi.patch.word.letters[i].0];
    let right = evaluate(f, &xi.translate(x0)?, gamma)?;
    let left = evaluate(f, &xi.translate(x1)?, gamma)?;
    Ok(right - left)
}

/// The combinatorial differential: the simplicial coboundary of the table.
pub fn d_pv_level<A: Coefficient>(f: &PVCochain<A>, gamma: &ApComplex) -> PVCochain<A> {
    if f.n >= 1 {
        return PVCochain {
            k: f.k,
            n: f.n + 1,
            values: vec![],
        };
    }
    let values = (0..gamma.edge_count())
        .map(|e| {
            f.values[gamma.endpoint(e, Side::Right)].clone() - f.values[gamma.endpoint(e, Side::Left)].clone()
        })
        .collect();
    PVCochain { k: f.k, n: 1, values }
}

/// Sup distance between two real cochains on a common level.
pub fn sup_distance(f: &PVCochain<f64>, g: &PVCochain<f64>) -> Result<f64> {
    if (f.k, f.n, f.values.len()) != (g.k, g.n, g.values.len()) {
        return Err(Error::DimensionMismatch("sup distance needs a common level".into()));
    }
    Ok(f.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Sup distance over sample points, the finite stand-in for `δ̃`.
pub fn sampled_sup_distance(
    f: &PVCochain<f64>,
    g: &PVCochain<f64>,
    samples: &[TransversalPoint],
    gamma: &ApComplex,
) -> Result<f64> {
    samples.iter().try_fold(0.0f64, |acc, xi| {
        Ok(acc.max((evaluate(f, xi, gamma)? - evaluate(g, xi, gamma)?).abs()))
    })
}

/// A patch long enough that every level-`k` cell occurs away from its ends.
pub fn sample_patch(sys: &SubstitutionSystem, k: usize) -> Result<Arc<Patch>> {
    let alphabet = sys.collared_alphabet(k + 1)?;
    let len = alphabet.certificate.word_length.max(64) * 4 + 8 * (k + 2);
    Ok(Arc::new(Patch::layout(sys, sys.expand_to_length(len)?)))
}

/// Every `n`-face of `patch` whose `(k+1)`-collar lies inside the patch,
/// trusted out to that collar.
pub fn transversal_points(patch: &Arc<Patch>, k: usize, n: usize) -> Vec<TransversalPoint> {
    let len = patch.len() as isize;
    let faces: Box<dyn Iterator<Item = Face>> = match n {
        0 => Box::new((1..patch.len()).map(Face::Vertex)),
        _ => Box::new((0..patch.len()).map(Face::Edge)),
    };
    faces
        .filter_map(|face| {
            let (lo, hi) = face.support(k + 1);
            (lo >= 0 && hi < len)
                .then(|| TransversalPoint::new(patch.clone(), face, (lo as usize, hi as usize)).ok())
                .flatten()
        })
        .collect()
}

/// `count` points of `Ξ^n` sampled uniformly from the faces of a long
/// expansion, each trusted out to its `(k+1)`-collar.
pub fn sample_transversal<R: Rng>(
    sys: &SubstitutionSystem,
    k: usize,
    n: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<TransversalPoint>> {
    if count == 0 || n > 1 {
        return Err(Error::InvalidArgument("need count >= 1 and n in {0, 1}".into()));
    }
    let patch = sample_patch(sys, k)?;
    let mut points = transversal_points(&patch, k, n);
    if points.is_empty() {
        return Err(Error::NoSamples(format!("no level-{k} {n}-faces fit in the sample patch")));
    }
    points.shuffle(rng);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let take = (count - out.len()).min(points.len());
        out.extend_from_slice(&points[..take]);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainMapFailure {
    pub trial: usize,
    pub cochain: Vec<i64>,
    pub position: usize,
    pub pointwise: Option<i64>,
    pub combinatorial: i64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainMapReport {
    pub system: String,
    pub level: usize,
    pub samples: usize,
    pub trials: usize,
    pub checks: usize,
    pub fault_injected: bool,
    pub failures: Vec<ChainMapFailure>,
}

/// Random integer cochains on the vertices of `Γ_k`, checked pointwise:
/// `d_pv_pointwise(f, ξ) = evaluate(d_pv_level(f), ξ)` on every sample.
/// Only the first few failures are kept as witnesses.
pub fn verify_chain_map<R: Rng>(
    sys: &SubstitutionSystem,
    k: usize,
    samples: usize,
    trials: usize,
    fault: bool,
    rng: &mut R,
) -> Result<ChainMapReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let gamma = build_gamma(sys, k)?;
    let points = sample_transversal(sys, k, 1, samples, rng)?;
    let mut offsets = OffsetTable::new(sys);
    if fault {
        offsets = offsets.corrupted(LetterId(0));
    }
    let mut failures = Vec::new();
    for trial in 0..trials {
        let f = PVCochain {
            k,
            n: 0,
            values: (0..gamma.vertex_count()).map(|_| rng.random_range(-1000i64..=1000)).collect(),
        };
        let df = d_pv_level(&f, &gamma);
        for xi in &points {
            let expected = evaluate(&df, xi, &gamma)?;
            let got = d_pv_pointwise(&f, xi, &gamma, &offsets);
            if got.as_ref().ok() != Some(&expected) {
                if failures.len() < 16 {
                    let Face::Edge(position) = xi.origin else { unreachable!() };
                    failures.push(ChainMapFailure {
                        trial,
                        cochain: f.values.clone(),
                        position,
                        pointwise: got.as_ref().ok().copied(),
                        combinatorial: expected,
                        error: got.err().map(|e| e.to_string()),
                    });
                }
            }
        }
    }
    Ok(ChainMapReport {
        system: sys.to_string(),
        level: k,
        samples,
        trials,
        checks: samples * trials,
        fault_injected: fault,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub n: usize,
    pub cell: usize,
    pub name: String,
    pub position: usize,
    pub coordinate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InjectivityReport {
    pub system: String,
    pub level: usize,
    pub witness_table: Vec<Witness>,
    pub points_checked: usize,
    /// Points that fell in no zone or in more than one.
    pub partition_violations: usize,
}

/// Finds a transversal witness for every cell of `Γ_k` and checks that every
/// sampled point lies in exactly one zone of its degree.
pub fn verify_injectivity(sys: &SubstitutionSystem, k: usize) -> Result<InjectivityReport> {
    let gamma = build_gamma(sys, k)?;
    let patch = sample_patch(sys, k)?;
    let mut witness_table = Vec::new();
    let mut points_checked = 0;
    let mut partition_violations = 0;
    for n in 0..=1 {
        let cells = gamma.complex.cell_count(n);
        let mut found: BTreeMap<usize, Witness> = BTreeMap::new();
        for xi in transversal_points(&patch, k, n) {
            points_checked += 1;
            let mut hits = 0;
            for cell in 0..cells {
                if zone_membership(&xi, &AcceptanceZone { k, n, cell }, &gamma)? {
                    hits += 1;
                    found.entry(cell).or_insert_with(|| Witness {
                        n,
                        cell,
                        name: gamma.complex.name(n, cell).to_string(),
                        position: match xi.origin {
                            Face::Vertex(i) | Face::Edge(i) => i,
                        },
                        coordinate: xi.coordinate(),
                    });
                }
            }
            if hits != 1 {
                partition_violations += 1;
            }
        }
        if let Some(missing) = (0..cells).find(|c| !found.contains_key(c)) {
            return Err(Error::CellNotRealized(format!(
                "{n}-cell {} of level {k}",
                gamma.complex.name(n, missing)
            )));
        }
        witness_table.extend(found.into_values());
    }
    Ok(InjectivityReport {
        system: sys.to_string(),
        level: k,
        witness_table,
        points_checked,
        partition_violations,
    })
}

/// Checks `evaluate(η_k c, ξ) = evaluate(η_{k+1}(ρ^* c), ξ)` on every
/// sample; returns the number of disagreements.
pub fn verify_refinement<A: Coefficient>(
    sys: &SubstitutionSystem,
    f: &PVCochain<A>,
    samples: &[TransversalPoint],
) -> Result<usize> {
    let coarse = build_gamma(sys, f.k)?;
    let fine = build_gamma(sys, f.k + 1)?;
    let rho = connecting_map(&fine, &coarse)?;
    let g = refine(f, &rho, &fine);
    let mut bad = 0;
    for xi in samples {
        if evaluate(f, xi, &coarse)? != evaluate(&g, xi, &fine)? {
            bad += 1;
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn periodic_samples_share_one_edge() {
        let sys = SubstitutionSystem::periodic();
        let gamma = build_gamma(&sys, 0).unwrap();
        let pts = sample_transversal(&sys, 0, 1, 20, &mut rng()).unwrap();
        assert!(pts.iter().all(|p| p.zone(&gamma).unwrap() == 0));
    }

    #[test]
    fn vertex_samples_sit_on_vertices() {
        let sys = SubstitutionSystem::fibonacci();
        for p in sample_transversal(&sys, 1, 0, 30, &mut rng()).unwrap() {
            let Face::Vertex(i) = p.origin else { panic!() };
            assert_eq!(p.coordinate(), p.patch.vertices[i]);
        }
    }

    #[test]
    fn samples_carry_legal_collars() {
        let sys = SubstitutionSystem::fibonacci();
        let alphabet = sys.collared_alphabet(1).unwrap().letters;
        for p in sample_transversal(&sys, 1, 1, 50, &mut rng()).unwrap() {
            let Face::Edge(i) = p.origin else { panic!() };
            assert!(alphabet.contains(&neighborhood(&p.patch.word, i, 1).unwrap()));
        }
    }

    #[test]
    fn zones_partition_and_reject_short_radius() {
        let sys = SubstitutionSystem::fibonacci();
        let g1 = build_gamma(&sys, 1).unwrap();
        let g3 = build_gamma(&sys, 3).unwrap();
        let pts = sample_transversal(&sys, 1, 1, 40, &mut rng()).unwrap();
        for p in &pts {
            let z = p.zone(&g1).unwrap();
            for cell in 0..g1.edge_count() {
                let zone = AcceptanceZone::new(&g1, 1, cell).unwrap();
                assert_eq!(zone_membership(p, &zone, &g1).unwrap(), cell == z);
            }
            // Trusted only out to the 2-collar.
            assert!(matches!(p.zone(&g3), Err(Error::UndecidableAtRadius(_))));
        }
    }

    #[test]
    fn eta_embed_and_evaluate() {
        let sys = SubstitutionSystem::fibonacci();
        let gamma = build_gamma(&sys, 1).unwrap();
        let pts = sample_transversal(&sys, 1, 1, 60, &mut rng()).unwrap();
        let zero = eta_embed(&gamma, 1, vec![0i64; gamma.edge_count()]).unwrap();
        assert_eq!(zero, PVCochain::zero(&gamma, 1));
        let c = PVCochain::constant(&gamma, 1, 5i64);
        for p in &pts {
            assert_eq!(evaluate(&c, p, &gamma).unwrap(), 5);
            let z = p.zone(&gamma).unwrap();
            for cell in 0..gamma.edge_count() {
                let ind = PVCochain::indicator(&gamma, 1, cell, 3i64);
                assert_eq!(evaluate(&ind, p, &gamma).unwrap(), if cell == z { 3 } else { 0 });
            }
        }
    }

    #[test]
    fn pointwise_differential_examples() {
        let sys = SubstitutionSystem::periodic();
        let gamma = build_gamma(&sys, 0).unwrap();
        let offsets = OffsetTable::new(&sys);
        let pts = sample_transversal(&sys, 0, 1, 10, &mut rng()).unwrap();
        let f = PVCochain::indicator(&gamma, 0, 0, 1i64);
        for p in &pts {
            assert_eq!(d_pv_pointwise(&f, p, &gamma, &offsets).unwrap(), 0);
        }
        let sys = SubstitutionSystem::fibonacci();
        let gamma = build_gamma(&sys, 0).unwrap();
        let offsets = OffsetTable::new(&sys);
        let f = PVCochain::indicator(&gamma, 0, 0, 1i64);
        for p in sample_transversal(&sys, 0, 1, 50, &mut rng()).unwrap() {
            assert_eq!(d_pv_pointwise(&f, &p, &gamma, &offsets).unwrap(), 0);
        }
    }

    #[test]
    fn level_differential_is_coboundary_column() {
        let sys = SubstitutionSystem::fibonacci();
        let gamma = build_gamma(&sys, 1).unwrap();
        let d0 = gamma.complex.coboundary_matrices().differential(0);
        for v in 0..gamma.vertex_count() {
            let df = d_pv_level(&PVCochain::indicator(&gamma, 0, v, 4i64), &gamma);
            let col: Vec<i64> = d0.column(v).iter().map(|x| 4 * i64::try_from(x).unwrap()).collect();
            assert_eq!(df.values, col);
        }
        assert!(d_pv_level(&PVCochain::<i64>::zero(&gamma, 0), &gamma).values.iter().all(|&x| x == 0));
        let top = d_pv_level(&PVCochain::<i64>::zero(&gamma, 1), &gamma);
        assert!(top.values.is_empty());
    }

    #[test]
    fn chain_map_small_and_fault_injected() {
        let report = verify_chain_map(&SubstitutionSystem::periodic(), 0, 10, 20, false, &mut rng()).unwrap();
        assert!(report.failures.is_empty());
        let sys = SubstitutionSystem::fibonacci();
        let report = verify_chain_map(&sys, 1, 40, 30, false, &mut rng()).unwrap();
        assert!(report.failures.is_empty());
        let report = verify_chain_map(&sys, 1, 40, 30, true, &mut rng()).unwrap();
        assert!(!report.failures.is_empty());
    }

    #[test]
    fn real_and_vector_coefficients() {
        let sys = SubstitutionSystem::fibonacci();
        let gamma = build_gamma(&sys, 2).unwrap();
        let offsets = OffsetTable::new(&sys);
        let pts = sample_transversal(&sys, 2, 1, 50, &mut rng()).unwrap();
        let mut r = rng();
        let fr = PVCochain {
            k: 2,
            n: 0,
            values: (0..gamma.vertex_count()).map(|_| r.random_range(-1.0..1.0)).collect::<Vec<f64>>(),
        };
        let fv = PVCochain {
            k: 2,
            n: 0,
            values: (0..gamma.vertex_count())
                .map(|_| Vector2::new(r.random_range(-5i64..5), r.random_range(-5i64..5)))
                .collect(),
        };
        let (dr, dv) = (d_pv_level(&fr, &gamma), d_pv_level(&fv, &gamma));
        for p in &pts {
            assert_eq!(d_pv_pointwise(&fr, p, &gamma, &offsets).unwrap(), evaluate(&dr, p, &gamma).unwrap());
            assert_eq!(d_pv_pointwise(&fv, p, &gamma, &offsets).unwrap(), evaluate(&dv, p, &gamma).unwrap());
        }
    }

    #[test]
    fn differentials_are_additive() {
        let sys = SubstitutionSystem::thue_morse();
        let gamma = build_gamma(&sys, 1).unwrap();
        let offsets = OffsetTable::new(&sys);
        let pts = sample_transversal(&sys, 1, 1, 30, &mut rng()).unwrap();
        let mut r = rng();
        for _ in 0..10 {
            let mk = |r: &mut ChaCha8Rng| PVCochain {
                k: 1,
                n: 0,
                values: (0..gamma.vertex_count()).map(|_| r.random_range(-9i64..9)).collect(),
            };
            let (f, g) = (mk(&mut r), mk(&mut r));
            let fg = f.add(&g).unwrap();
            assert_eq!(d_pv_level(&fg, &gamma), d_pv_level(&f, &gamma).add(&d_pv_level(&g, &gamma)).unwrap());
            for p in &pts {
                let lhs = d_pv_pointwise(&fg, p, &gamma, &offsets).unwrap();
                let rhs = d_pv_pointwise(&f, p, &gamma, &offsets).unwrap() + d_pv_pointwise(&g, p, &gamma, &offsets).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn refinement_is_compatible_with_evaluation() {
        let sys = SubstitutionSystem::fibonacci();
        let gamma = build_gamma(&sys, 1).unwrap();
        let mut r = rng();
        for n in 0..=1 {
            // Level-1 samples trusted to the 2-collar, enough for level 2 edges.
            let pts = sample_transversal(&sys, 2, n, 40, &mut r).unwrap();
            let f = PVCochain {
                k: 1,
                n,
                values: (0..gamma.complex.cell_count(n)).map(|_| r.random_range(-9i64..9)).collect(),
            };
            assert_eq!(verify_refinement(&sys, &f, &pts).unwrap(), 0);
        }
    }

    #[test]
    fn injectivity_witnesses() {
        let r = verify_injectivity(&SubstitutionSystem::periodic(), 0).unwrap();
        assert_eq!(r.witness_table.len(), 2);
        let sys = SubstitutionSystem::fibonacci();
        let gamma = build_gamma(&sys, 1).unwrap();
        let r = verify_injectivity(&sys, 1).unwrap();
        assert_eq!(r.witness_table.len(), gamma.vertex_count() + gamma.edge_count());
        assert_eq!(r.partition_violations, 0);
    }

    #[test]
    fn sup_metric_matches_table_on_samples() {
        let sys = SubstitutionSystem::fibonacci();
        let gamma = build_gamma(&sys, 1).unwrap();
        let f = PVCochain { k: 1, n: 1, values: vec![0.0, 1.0, -2.0, 0.5] };
        let g = PVCochain::constant(&gamma, 1, 0.0);
        let pts = transversal_points(&sample_patch(&sys, 1).unwrap(), 1, 1);
        assert_eq!(sup_distance(&f, &g).unwrap(), 2.0);
        assert_eq!(sampled_sup_distance(&f, &g, &pts, &gamma).unwrap(), 2.0);
    }
}
