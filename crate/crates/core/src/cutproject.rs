//! Codimension-one cut&project sets as a rotation of the circle `ℝ/ℤ`.
//!
//! The level-`n` partition of the circle is cut at the points `b + jθ`,
//! `|j| ≤ n`, where `b` runs over the endpoints of the coding partition
//! `{[lo, hi − θ), [hi − θ, hi)}`. Locally constant integer functions on the
//! transversal are functions on these partitions. The `ℤ`-action is the
//! pullback `f ↦ f ∘ R_θ`, which maps level `n` to level `n + 1`; the group
//! cohomology of `ℤ` is computed from the two-term complex `R − ι` per level
//! (`ι` is refinement) and passed to the direct-limit engine.
//!
//! All comparisons are exact in `ℚ(√D)`.

use std::cmp::Ordering;
use std::ops::Sub;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngExt};
use serde::Serialize;

use crate::cohomology::{
    cohomology_groups, direct_limit, induced_map, DirectLimitResult, DirectSystem, FGAbelianGroup,
};
use crate::complex::{CochainComplex, CochainMap};
use crate::error::{Error, Result};
use crate::intmat::IntMatrix;
use crate::quadratic::Quadratic;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutProjectData {
    #[serde(serialize_with = "as_string")]
    pub theta: Quadratic,
    #[serde(serialize_with = "as_string")]
    pub lo: Quadratic,
    #[serde(serialize_with = "as_string")]
    pub hi: Quadratic,
}

fn as_string<S: serde::Serializer>(q: &Quadratic, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(q)
}

impl CutProjectData {
    pub fn new(theta: Quadratic, lo: Quadratic, hi: Quadratic) -> Result<Self> {
        if !theta.is_irrational() {
            return Err(Error::RationalTheta);
        }
        if theta <= Quadratic::zero() || theta >= Quadratic::one() {
            return Err(Error::InvalidArgument("theta must lie in (0, 1)".into()));
        }
        let len = hi.clone() - lo.clone();
        if len <= Quadratic::zero() || len > Quadratic::one() {
            return Err(Error::InvalidWindow(format!("window [{lo}, {hi}) must have length in (0, 1]")));
        }
        for e in [&lo, &hi] {
            if orbit_index(&theta, e, &Quadratic::zero()).is_none() {
                return Err(Error::InvalidWindow(format!("endpoint {e} is not in Z + Z*theta")));
            }
        }
        Ok(Self { theta, lo, hi })
    }

    /// `θ = 2 − φ = (3 − √5)/2` with window `[0, 1)`.
    pub fn fibonacci() -> Self {
        let theta = Quadratic::new(3, -1, 5, 2).expect("valid quadratic");
        Self::new(theta, Quadratic::zero(), Quadratic::one()).expect("valid data")
    }

    /// Endpoints of the coding partition, reduced mod 1, without repeats.
    fn base_points(&self) -> Vec<Quadratic> {
        let mut out: Vec<Quadratic> = Vec::new();
        let split = self.hi.clone() - self.theta.clone();
        for p in [self.lo.clone(), split, self.hi.clone()] {
            let p = p.fract();
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Human-readable record of the circle normalization used.
    pub fn normalization(&self) -> String {
        let split = self.hi.clone() - self.theta.clone();
        format!("coding partition {{[{}, {}), [{}, {})}} on R/Z", self.lo, split, split, self.hi)
    }

    pub fn rotate(&self, x: &Quadratic) -> Quadratic {
        (x.clone() + self.theta.clone()).fract()
    }
}

/// `j` with `x − b ≡ jθ (mod 1)`, if any.
fn orbit_index(theta: &Quadratic, x: &Quadratic, b: &Quadratic) -> Option<i64> {
    let d = x.clone().sub(b.clone());
    let (t0, t1) = (theta.rational_part(), theta.surd_part());
    let (d0, d1) = (d.rational_part(), d.surd_part());
    if !d1.is_zero() && d.radicand() != theta.radicand() {
        return None;
    }
    let j = d1 / t1;
    if !j.is_integer() {
        return None;
    }
    let rest: BigRational = d0 - t0 * &j;
    rest.is_integer().then(|| j.to_integer().to_i64()).flatten()
}

/// A circle point over which the factor map is two-to-one; `a⁺` and `a⁻` are
/// the limits from the right and from the left.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CutPoint {
    #[serde(serialize_with = "as_string")]
    pub location: Quadratic,
    /// Index into the coding-partition endpoints and the rotation exponent.
    pub endpoint: usize,
    pub shift: i64,
}

impl CutPoint {
    pub fn sides(&self) -> (String, String) {
        (format!("{}+", self.location), format!("{}-", self.location))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowPartition {
    pub level: usize,
    /// Sorted cut points in `[0, 1)`.
    pub cut_set: Vec<CutPoint>,
}

impl WindowPartition {
    /// Number of arcs; arc `i` is `[cut_i, cut_{i+1})`, the last one wrapping.
    pub fn interval_count(&self) -> usize {
        self.cut_set.len()
    }

    fn locations(&self) -> impl Iterator<Item = &Quadratic> {
        self.cut_set.iter().map(|c| &c.location)
    }

    /// Arc containing `x` (reduced mod 1).
    pub fn arc_of(&self, x: &Quadratic) -> usize {
        let x = x.fract();
        let idx = self.cut_set.partition_point(|c| c.location <= x);
        if idx == 0 {
            self.cut_set.len() - 1
        } else {
            idx - 1
        }
    }

    pub fn position(&self, x: &Quadratic) -> Option<usize> {
        let x = x.fract();
        self.cut_set.binary_search_by(|c| c.location.cmp(&x)).ok()
    }

    pub fn intervals(&self) -> Vec<(String, String)> {
        let locs: Vec<&Quadratic> = self.locations().collect();
        (0..locs.len())
            .map(|i| (locs[i].to_string(), locs[(i + 1) % locs.len()].to_string()))
            .collect()
    }
}

pub fn window_partition(data: &CutProjectData, n: usize) -> Result<WindowPartition> {
    let n = n as i64;
    let mut cut_set: Vec<CutPoint> = Vec::new();
    for (e, b) in data.base_points().iter().enumerate() {
        for j in -n..=n {
            let location = (b.clone() + data.theta.scale(j)).fract();
            cut_set.push(CutPoint {
                location,
                endpoint: e,
                shift: j,
            });
        }
    }
    cut_set.sort_by(|a, b| a.location.cmp(&b.location).then(a.endpoint.cmp(&b.endpoint)));
    // Different endpoints can share an orbit; keep the first label of each point.
    cut_set.dedup_by(|b, a| a.location == b.location);
    if cut_set.windows(2).any(|w| w[0].location.cmp(&w[1].location) != Ordering::Less) {
        return Err(Error::Internal("cut points are not strictly ordered".into()));
    }
    Ok(WindowPartition {
        level: n as usize,
        cut_set,
    })
}

pub fn cut_points(data: &CutProjectData, n: usize) -> Result<Vec<CutPoint>> {
    Ok(window_partition(data, n)?.cut_set)
}

/// Whether `x` lies on the `θ`-orbit of a coding-partition endpoint.
pub fn on_endpoint_orbit(data: &CutProjectData, x: &Quadratic) -> bool {
    data.base_points().iter().any(|b| orbit_index(&data.theta, x, b).is_some())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocallyConstantFn<A> {
    pub level: usize,
    pub values: Vec<A>,
}

/// The partitions of levels `0..=n_max + 1` and the integer matrices of the
/// rotation pullback and of refinement between consecutive levels.
#[derive(Clone, Debug)]
pub struct PartitionTower {
    pub data: CutProjectData,
    pub partitions: Vec<WindowPartition>,
    /// `pullback[n]`: level `n` → level `n + 1`, `f ↦ f ∘ R_θ`.
    pub pullback: Vec<IntMatrix>,
    /// `refinement[n]`: level `n` → level `n + 1`.
    pub refinement: Vec<IntMatrix>,
}

impl PartitionTower {
    pub fn new(data: &CutProjectData, n_max: usize) -> Result<Self> {
        let partitions = (0..=n_max + 1)
            .map(|n| window_partition(data, n))
            .collect::<Result<Vec<_>>>()?;
        let mut pullback = Vec::new();
        let mut refinement = Vec::new();
        for n in 0..=n_max {
            let (coarse, fine) = (&partitions[n], &partitions[n + 1]);
            let mut r = IntMatrix::zeros(fine.interval_count(), coarse.interval_count());
            let mut i = IntMatrix::zeros(fine.interval_count(), coarse.interval_count());
            for (row, c) in fine.cut_set.iter().enumerate() {
                r[(row, coarse.arc_of(&data.rotate(&c.location)))] = BigInt::one();
                i[(row, coarse.arc_of(&c.location))] = BigInt::one();
            }
            pullback.push(r);
            refinement.push(i);
        }
        Ok(Self {
            data: data.clone(),
            partitions,
            pullback,
            refinement,
        })
    }

    pub fn n_max(&self) -> usize {
        self.pullback.len() - 1
    }

    fn apply<A: Clone>(&self, m: &IntMatrix, f: &LocallyConstantFn<A>) -> LocallyConstantFn<A> {
        let values = (0..m.rows())
            .map(|row| {
                let col = (0..m.cols()).find(|&c| m[(row, c)].is_one()).expect("0/1 selection matrix");
                f.values[col].clone()
            })
            .collect();
        LocallyConstantFn {
            level: f.level + 1,
            values,
        }
    }

    fn check<A>(&self, f: &LocallyConstantFn<A>) -> Result<()> {
        if f.level > self.n_max() || f.values.len() != self.partitions[f.level].interval_count() {
            return Err(Error::DimensionMismatch(format!(
                "function of level {} with {} values outside the tower",
                f.level,
                f.values.len()
            )));
        }
        Ok(())
    }

    /// `f ∘ R_θ` on the next level.
    pub fn rotation_pullback<A: Clone>(&self, f: &LocallyConstantFn<A>) -> Result<LocallyConstantFn<A>> {
        self.check(f)?;
        Ok(self.apply(&self.pullback[f.level], f))
    }

    /// `f` re-expressed on the next level.
    pub fn refine<A: Clone>(&self, f: &LocallyConstantFn<A>) -> Result<LocallyConstantFn<A>> {
        self.check(f)?;
        Ok(self.apply(&self.refinement[f.level], f))
    }

    pub fn value_at<'a, A>(&self, f: &'a LocallyConstantFn<A>, x: &Quadratic) -> &'a A {
        &f.values[self.partitions[f.level].arc_of(x)]
    }
}

pub fn rotation_pullback<A: Clone>(
    data: &CutProjectData,
    f: &LocallyConstantFn<A>,
) -> Result<LocallyConstantFn<A>> {
    PartitionTower::new(data, f.level)?.rotation_pullback(f)
}

/// `τ_a(f) = f(a⁺) − f(a⁻)`; zero when `a` is not a cut point of `f`'s level.
pub fn jump_functional<A>(f: &LocallyConstantFn<A>, a: &Quadratic, partition: &WindowPartition) -> Result<A>
where
    A: Clone + Sub<Output = A> + Zero,
{
    if partition.level != f.level || partition.interval_count() != f.values.len() {
        return Err(Error::DimensionMismatch("partition does not match the function's level".into()));
    }
    Ok(match partition.position(a) {
        Some(i) => {
            let before = (i + f.values.len() - 1) % f.values.len();
            f.values[i].clone() - f.values[before].clone()
        }
        None => A::zero(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupCohomology {
    pub h0: FGAbelianGroup,
    pub h0_per_level: Vec<FGAbelianGroup>,
    pub h1: DirectLimitResult,
    pub h1_per_level: Vec<FGAbelianGroup>,
    pub interval_counts: Vec<usize>,
    pub normalization: String,
}

/// `H^*(ℤ, C_lc(Ξ^0, ℤ))` from the complexes `V_n → V_{n+1}`, `f ↦ f∘R_θ − f`,
/// linked by refinement.
pub fn group_cohomology(data: &CutProjectData, n_max: usize) -> Result<GroupCohomology> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2".into()));
    }
    let tower = PartitionTower::new(data, n_max + 1)?;
    let complexes: Vec<CochainComplex> = (0..=n_max)
        .map(|n| {
            let d = difference(&tower.pullback[n], &tower.refinement[n]);
            CochainComplex {
                cell_counts: vec![d.cols(), d.rows()],
                matrices: vec![d],
            }
        })
        .collect();
    let groups = complexes
        .iter()
        .map(cohomology_groups)
        .collect::<Result<Vec<_>>>()?;
    let mut h0_maps = Vec::new();
    let mut h1_maps = Vec::new();
    for n in 0..n_max {
        let link = CochainMap {
            matrices: vec![tower.refinement[n].clone(), tower.refinement[n + 1].clone()],
        };
        link.verify(&complexes[n], &complexes[n + 1])?;
        h0_maps.push(induced_map(&link, 0, &complexes[n], &groups[n][0], &groups[n + 1][0])?);
        h1_maps.push(induced_map(&link, 1, &complexes[n], &groups[n][1], &groups[n + 1][1])?);
    }
    let per_level = |d: usize| groups.iter().map(|g| g[d].group.clone()).collect::<Vec<_>>();
    let h0_limit = direct_limit(&DirectSystem::new(per_level(0), h0_maps)?);
    let h0 = h0_limit
        .as_group()
        .ok_or_else(|| Error::Internal("H^0 limit is not finitely generated".into()))?;
    let h1 = direct_limit(&DirectSystem::new(per_level(1), h1_maps)?);
    Ok(GroupCohomology {
        h0,
        h0_per_level: per_level(0),
        h1,
        h1_per_level: per_level(1),
        interval_counts: tower.partitions[..=n_max].iter().map(WindowPartition::interval_count).collect(),
        normalization: data.normalization(),
    })
}

fn difference(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let mut d = a.clone();
    for i in 0..d.rows() {
        for j in 0..d.cols() {
            d[(i, j)] -= &b[(i, j)];
        }
    }
    d
}

/// Number of nonzero jumps of `f` over its own cut set.
pub fn jump_count<A>(f: &LocallyConstantFn<A>, partition: &WindowPartition) -> Result<usize>
where
    A: Clone + Sub<Output = A> + Zero + PartialEq,
{
    partition.cut_set.iter().try_fold(0, |acc, c| {
        Ok(acc + usize::from(!jump_functional(f, &c.location, partition)?.is_zero()))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpSuiteReport {
    pub cases: usize,
    pub n_max: usize,
    /// `(case, property)` for every violated property.
    pub failures: Vec<(usize, String)>,
}

fn random_lc<R: Rng>(tower: &PartitionTower, level: usize, rng: &mut R) -> LocallyConstantFn<i64> {
    LocallyConstantFn {
        level,
        values: (0..tower.partitions[level].interval_count())
            .map(|_| rng.random_range(-10i64..=10))
            .collect(),
    }
}

/// Random cases of: linearity, vanishing on constants, the jump-count bound
/// and equivariance `τ_a(f∘R_θ) = τ_{R_θ a}(f)`.
pub fn jump_suite<R: Rng>(data: &CutProjectData, n_max: usize, cases: usize, rng: &mut R) -> Result<JumpSuiteReport> {
    let tower = PartitionTower::new(data, n_max)?;
    let mut failures = Vec::new();
    for case in 0..cases {
        let n = rng.random_range(0..=n_max);
        let (p, q) = (&tower.partitions[n], &tower.partitions[n + 1]);
        let f = random_lc(&tower, n, rng);
        let h = random_lc(&tower, n, rng);
        let (a, b) = (rng.random_range(-3i64..=3), rng.random_range(-3i64..=3));
        let comb = LocallyConstantFn {
            level: n,
            values: f.values.iter().zip(&h.values).map(|(x, y)| a * x + b * y).collect(),
        };
        let constant = LocallyConstantFn {
            level: n,
            values: vec![rng.random_range(-10i64..=10); p.interval_count()],
        };
        let on_p = &p.cut_set[rng.random_range(0..p.cut_set.len())].location;
        let on_q = &q.cut_set[rng.random_range(0..q.cut_set.len())].location;
        let g = tower.rotation_pullback(&f)?;
        let mut check = |ok: bool, what: &str| {
            if !ok {
                failures.push((case, what.to_string()));
            }
        };
        check(jump_functional(&constant, on_p, p)? == 0, "zero on constants");
        check(
            jump_functional(&comb, on_p, p)? == a * jump_functional(&f, on_p, p)? + b * jump_functional(&h, on_p, p)?,
            "linearity",
        );
        check(jump_count(&f, p)? <= p.cut_set.len(), "jump count bound");
        check(
            jump_functional(&g, on_q, q)? == jump_functional(&f, &data.rotate(on_q), p)?,
            "equivariance",
        );
    }
    Ok(JumpSuiteReport { cases, n_max, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jump_suite_is_clean() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let r = jump_suite(&CutProjectData::fibonacci(), 5, 200, &mut rng).unwrap();
        assert!(r.failures.is_empty(), "{:?}", r.failures);
    }

    fn random_fn(tower: &PartitionTower, level: usize, rng: &mut ChaCha8Rng) -> LocallyConstantFn<i64> {
        LocallyConstantFn {
            level,
            values: (0..tower.partitions[level].interval_count())
                .map(|_| rng.random_range(-5i64..=5))
                .collect(),
        }
    }

    #[test]
    fn rational_theta_rejected() {
        let half = Quadratic::new(1, 0, 5, 2).unwrap();
        assert_eq!(
            CutProjectData::new(half, Quadratic::zero(), Quadratic::one()),
            Err(Error::RationalTheta)
        );
    }

    #[test]
    fn level_zero_is_the_coding_partition() {
        let data = CutProjectData::fibonacci();
        let p = window_partition(&data, 0).unwrap();
        assert_eq!(p.interval_count(), 2);
        let locs: Vec<String> = p.cut_set.iter().map(|c| c.location.to_string()).collect();
        assert_eq!(locs, vec!["0".to_string(), (Quadratic::one() - data.theta.clone()).to_string()]);
    }

    #[test]
    fn partitions_nest_and_grow_linearly() {
        let data = CutProjectData::fibonacci();
        let mut prev: Option<WindowPartition> = None;
        for n in 0..8 {
            let p = window_partition(&data, n).unwrap();
            assert_eq!(p.interval_count(), 2 * n + 2);
            if let Some(q) = prev {
                assert!(q.cut_set.iter().all(|c| p.position(&c.location).is_some()));
            }
            assert!(p.cut_set.iter().all(|c| on_endpoint_orbit(&data, &c.location)));
            prev = Some(p);
        }
        assert!(!on_endpoint_orbit(&data, &Quadratic::new(1, 0, 5, 3).unwrap()));
    }

    #[test]
    fn pullback_examples() {
        let data = CutProjectData::fibonacci();
        let tower = PartitionTower::new(&data, 4).unwrap();
        let c = LocallyConstantFn { level: 2, values: vec![7i64; 6] };
        assert_eq!(tower.rotation_pullback(&c).unwrap().values, vec![7; 8]);
        // Indicator of an arc pulls back to the indicator of its preimage.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = random_fn(&tower, 2, &mut rng);
            let g = tower.rotation_pullback(&f).unwrap();
            for c in &tower.partitions[3].cut_set {
                assert_eq!(tower.value_at(&g, &c.location), tower.value_at(&f, &data.rotate(&c.location)));
            }
        }
        // Two steps compose as matrices.
        let two = &tower.pullback[3] * &tower.pullback[2];
        let f = random_fn(&tower, 2, &mut rng);
        let gg = tower.rotation_pullback(&tower.rotation_pullback(&f).unwrap()).unwrap();
        let v: Vec<BigInt> = f.values.iter().map(|&x| BigInt::from(x)).collect();
        let direct: Vec<i64> = two.mul_vec(&v).iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(gg.values, direct);
    }

    #[test]
    fn fibonacci_group_cohomology() {
        let g = group_cohomology(&CutProjectData::fibonacci(), 6).unwrap();
        assert_eq!(g.h0, FGAbelianGroup::free(1));
        assert_eq!(g.h1.as_group(), Some(FGAbelianGroup::free(2)));
        assert!(g.h1.stable);
    }

    #[test]
    fn limit_is_independent_of_depth() {
        let data = CutProjectData::fibonacci();
        let a = group_cohomology(&data, 4).unwrap();
        let b = group_cohomology(&data, 8).unwrap();
        assert_eq!(a.h1.as_group(), b.h1.as_group());
    }

    #[test]
    fn jumps() {
        let data = CutProjectData::fibonacci();
        let tower = PartitionTower::new(&data, 5).unwrap();
        let p = &tower.partitions[3];
        let c = LocallyConstantFn { level: 3, values: vec![4i64; p.interval_count()] };
        for cp in &p.cut_set {
            assert_eq!(jump_functional(&c, &cp.location, p).unwrap(), 0);
        }
        // Indicator of [a, b): unit step at a.
        let mut ind = vec![0i64; p.interval_count()];
        ind[2] = 1;
        let ind = LocallyConstantFn { level: 3, values: ind };
        assert_eq!(jump_functional(&ind, &p.cut_set[2].location, p).unwrap(), 1);
        assert_eq!(jump_functional(&ind, &p.cut_set[3].location, p).unwrap(), -1);
        let interior = Quadratic::new(1, 0, 5, 1000).unwrap();
        assert_eq!(jump_functional(&ind, &interior, p).unwrap(), 0);
    }

    #[test]
    fn jump_properties_on_random_functions() {
        let data = CutProjectData::fibonacci();
        let tower = PartitionTower::new(&data, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(0..5usize);
            let f = random_fn(&tower, n, &mut rng);
            let h = random_fn(&tower, n, &mut rng);
            let (p, q) = (&tower.partitions[n], &tower.partitions[n + 1]);
            assert!(jump_count(&f, p).unwrap() <= p.interval_count());
            let g = tower.rotation_pullback(&f).unwrap();
            let fine = tower.refine(&f).unwrap();
            let sum = LocallyConstantFn {
                level: n,
                values: f.values.iter().zip(&h.values).map(|(a, b)| a + b).collect(),
            };
            for a in &q.cut_set {
                let x = &a.location;
                let lhs = jump_functional(&g, x, q).unwrap();
                let rhs = jump_functional(&f, &data.rotate(x), p).unwrap();
                assert_eq!(lhs, rhs);
                assert_eq!(jump_functional(&fine, x, q).unwrap(), jump_functional(&f, x, p).unwrap());
                if p.position(x).is_none() {
                    assert_eq!(jump_functional(&fine, x, q).unwrap(), 0);
                }
                assert_eq!(
                    jump_functional(&sum, x, p).unwrap(),
                    jump_functional(&f, x, p).unwrap() + jump_functional(&h, x, p).unwrap()
                );
            }
        }
    }

    #[test]
    fn cut_points_start_at_endpoints() {
        let data = CutProjectData::fibonacci();
        let c0 = cut_points(&data, 0).unwrap();
        assert_eq!(c0.iter().map(|c| c.shift).collect::<Vec<_>>(), vec![0, 0]);
        let sides = c0[0].sides();
        assert_eq!(sides, ("0+".to_string(), "0-".to_string()));
    }
}
