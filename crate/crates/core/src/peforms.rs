//! Strongly pattern-equivariant functions and 1-forms on the line, the
//! integration maps `J_0`, `J_1` onto PE cochains, and their right inverses
//! `α_0`, `α_1` built from a smooth partition of unity.
//!
//! Every object is a table of profiles indexed by collared letters; a profile
//! lives on the local tile coordinate `t ∈ [0, 1]`. One-forms are densities
//! against `dx`, so a tile of length `L` carrying density `ρ(t)` has integral
//! `L ∫_0^1 ρ(t) dt`.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand::{Rng, RngExt};
use serde::Serialize;

use crate::apg::{build_gamma, ApComplex, Side};
use crate::error::{Error, Result};
use crate::pv::{evaluate, sample_transversal, Face, PVCochain};
use crate::tiling::{neighborhood, CollaredLetter, Patch, SubstitutionSystem};

/// Default bound on the polynomial degree of random profiles.
pub const MAX_DEGREE: usize = 8;

/// Nodes per panel of the composite rule used for non-polynomial profiles.
const PANEL_NODES: usize = 20;
const MAX_PANELS: usize = 1024;

fn psi(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

/// The C^∞ step `S_δ`: 0 on `[0, δ]`, 1 on `[1 − δ, 1]`, built from
/// `exp(−1/u)` in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Smoothstep {
    pub delta: f64,
}

impl Smoothstep {
    fn u(&self, t: f64) -> f64 {
        (t - self.delta) / (1.0 - 2.0 * self.delta)
    }

    pub fn value(&self, t: f64) -> f64 {
        let u = self.u(t);
        if u <= 0.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            let (a, b) = (psi(u), psi(1.0 - u));
            a / (a + b)
        }
    }

    /// `dS/dt`.
    pub fn slope(&self, t: f64) -> f64 {
        let u = self.u(t);
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let (a, b) = (psi(u), psi(1.0 - u));
        let ds_du = a * b * (1.0 / (u * u) + 1.0 / ((1.0 - u) * (1.0 - u))) / ((a + b) * (a + b));
        ds_du / (1.0 - 2.0 * self.delta)
    }
}

/// `poly(t) + left·(1 − S(t)) + right·S(t) + slope·S'(t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    /// Coefficients in increasing degree.
    pub poly: Vec<f64>,
    pub left: f64,
    pub right: f64,
    pub slope: f64,
    pub step: Smoothstep,
}

impl Profile {
    pub fn polynomial(poly: Vec<f64>) -> Self {
        Self {
            poly,
            left: 0.0,
            right: 0.0,
            slope: 0.0,
            step: Smoothstep { delta: 0.25 },
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.left == 0.0 && self.right == 0.0 && self.slope == 0.0
    }

    pub fn degree(&self) -> usize {
        self.poly.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn value(&self, t: f64) -> f64 {
        let p = self.poly.iter().rev().fold(0.0, |acc, &c| acc * t + c);
        if self.is_polynomial() {
            return p;
        }
        let s = self.step.value(t);
        let mut v = p + self.left * (1.0 - s) + self.right * s;
        if self.slope != 0.0 {
            v += self.slope * self.step.slope(t);
        }
        v
    }

    /// `d/dt`; fails on profiles carrying an `S'` term.
    pub fn derivative(&self) -> Result<Profile> {
        if self.slope != 0.0 {
            return Err(Error::InvalidArgument("cannot differentiate an S' term".into()));
        }
        let poly = self.poly.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect();
        Ok(Profile {
            poly,
            left: 0.0,
            right: 0.0,
            slope: self.right - self.left,
            step: self.step,
        })
    }

    fn scaled(mut self, factor: f64) -> Profile {
        self.poly.iter_mut().for_each(|c| *c *= factor);
        self.left *= factor;
        self.right *= factor;
        self.slope *= factor;
        self
    }

    /// `∫_0^1` with an error estimate (0 for polynomials, which are
    /// integrated by a Gauss rule of sufficient order).
    pub fn integrate(&self) -> (f64, f64) {
        let nodes = NonZeroUsize::new(self.degree() / 2 + 1).expect("nonzero");
        let poly = Profile::polynomial(self.poly.clone());
        let exact = GaussLegendre::new(nodes).integrate(0.0, 1.0, |t| poly.value(t));
        if self.is_polynomial() {
            return (exact, 0.0);
        }
        let rest = Profile {
            poly: vec![],
            ..self.clone()
        };
        let d = self.step.delta;
        let mut total = exact;
        let mut err = 0.0;
        for (a, b) in [(0.0, d), (d, 1.0 - d), (1.0 - d, 1.0)] {
            let (v, e) = adaptive(|t| rest.value(t), a, b);
            total += v;
            err += e;
        }
        (total, err)
    }
}

/// Composite Gauss–Legendre, doubling panels until two passes agree.
fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> (f64, f64) {
    let rule = GaussLegendre::new(NonZeroUsize::new(PANEL_NODES).expect("nonzero"));
    let pass = |m: usize| {
        let h = (b - a) / m as f64;
        (0..m)
            .map(|i| rule.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &f))
            .sum::<f64>()
    };
    let mut m = 1;
    let mut prev = pass(m);
    loop {
        m *= 2;
        let next = pass(m);
        let err = (next - prev).abs();
        if err <= 1e-15 * next.abs().max(1.0) || m >= MAX_PANELS {
            return (next, err);
        }
        prev = next;
    }
}

fn truncate_to(c: &CollaredLetter, k: usize) -> CollaredLetter {
    let mut c = c.clone();
    while c.k() > k {
        c = c.truncate();
    }
    c
}

/// A strongly PE function of range `range`: one profile per `range`-collared
/// letter.
#[derive(Clone, Debug, PartialEq)]
pub struct SPEFunction {
    pub range: usize,
    pub profiles: BTreeMap<CollaredLetter, Profile>,
    pub continuous: bool,
}

/// A strongly PE 1-form: density against `dx` per collared letter.
#[derive(Clone, Debug, PartialEq)]
pub struct SPEOneForm {
    pub range: usize,
    pub profiles: BTreeMap<CollaredLetter, Profile>,
}

impl SPEFunction {
    /// Checks value agreement across every legal adjacency; sets `continuous`.
    pub fn with_continuity_check(mut self, sys: &SubstitutionSystem, tol: f64) -> Result<Self> {
        for (l, r) in sys.collared_adjacencies(self.range)? {
            let (pl, pr) = (self.profile(&l)?, self.profile(&r)?);
            if (pl.value(1.0) - pr.value(0.0)).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "profiles of {} and {} disagree at their shared vertex",
                    l.render(sys),
                    r.render(sys)
                )));
            }
        }
        self.continuous = true;
        Ok(self)
    }

    fn profile(&self, c: &CollaredLetter) -> Result<&Profile> {
        self.profiles
            .get(c)
            .ok_or_else(|| Error::InvalidArgument(format!("no profile for {c:?}")))
    }

    pub fn add(&self, other: &SPEFunction) -> Result<SPEFunction> {
        combine(&self.profiles, &other.profiles, self.range, other.range).map(|profiles| SPEFunction {
            range: self.range,
            profiles,
            continuous: self.continuous && other.continuous,
        })
    }
}

impl SPEOneForm {
    pub fn add(&self, other: &SPEOneForm) -> Result<SPEOneForm> {
        combine(&self.profiles, &other.profiles, self.range, other.range).map(|profiles| SPEOneForm {
            range: self.range,
            profiles,
        })
    }

    /// Density at `x`.
    pub fn density(&self, patch: &Patch, x: f64) -> Result<f64> {
        let (tile, t) = locate(patch, x)?;
        let c = neighborhood(&patch.word, tile, self.range)?;
        let p = self.profiles.get(&c).ok_or_else(|| Error::InvalidArgument(format!("no profile for {c:?}")))?;
        Ok(p.value(t))
    }
}

fn combine(
    a: &BTreeMap<CollaredLetter, Profile>,
    b: &BTreeMap<CollaredLetter, Profile>,
    ra: usize,
    rb: usize,
) -> Result<BTreeMap<CollaredLetter, Profile>> {
    if ra != rb || a.len() != b.len() {
        return Err(Error::DimensionMismatch("adding PE objects of different range".into()));
    }
    a.iter()
        .map(|(c, p)| {
            let q = b.get(c).ok_or_else(|| Error::DimensionMismatch("mismatched profile keys".into()))?;
            if !p.is_polynomial() || !q.is_polynomial() {
                return Err(Error::InvalidArgument("only polynomial profiles can be added".into()));
            }
            let n = p.poly.len().max(q.poly.len());
            let poly = (0..n)
                .map(|i| p.poly.get(i).unwrap_or(&0.0) + q.poly.get(i).unwrap_or(&0.0))
                .collect();
            Ok((c.clone(), Profile::polynomial(poly)))
        })
        .collect()
}

fn locate(patch: &Patch, x: f64) -> Result<(usize, f64)> {
    let tile = patch
        .tile_at(x)
        .ok_or_else(|| Error::InvalidArgument(format!("x = {x} outside the patch")))?;
    Ok((tile, (x - patch.vertices[tile]) / patch.tile_length(tile)))
}

pub fn eval_spe(f: &SPEFunction, patch: &Patch, x: f64) -> Result<f64> {
    let (tile, t) = locate(patch, x)?;
    let c = neighborhood(&patch.word, tile, f.range)?;
    Ok(f.profile(&c)?.value(t))
}

/// `df`: derivative of each profile divided by the tile length.
pub fn differential(f: &SPEFunction, sys: &SubstitutionSystem) -> Result<SPEOneForm> {
    let profiles = f
        .profiles
        .iter()
        .map(|(c, p)| Ok((c.clone(), p.derivative()?.scaled(1.0 / sys.letter_length(c.center)))))
        .collect::<Result<_>>()?;
    Ok(SPEOneForm {
        range: f.range,
        profiles,
    })
}

/// A PE cochain tabulated on the cells of `Γ_level`; `range` records the PE
/// range the cochain was produced with.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PECochain {
    pub level: usize,
    pub range: usize,
    pub n: usize,
    pub values: Vec<f64>,
}

impl PECochain {
    pub fn new(gamma: &ApComplex, n: usize, values: Vec<f64>) -> Result<Self> {
        if n > 1 || values.len() != gamma.complex.cell_count(n) {
            return Err(Error::DimensionMismatch(format!("{} values for {n}-cells of level {}", values.len(), gamma.k)));
        }
        Ok(Self {
            level: gamma.k,
            range: gamma.k,
            n,
            values,
        })
    }

    pub fn max_difference(&self, other: &PECochain) -> Result<f64> {
        if (self.level, self.n, self.values.len()) != (other.level, other.n, other.values.len()) {
            return Err(Error::DimensionMismatch("comparing cochains of different shape".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// Result of an integration map with its quadrature error estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Integrated {
    pub cochain: PECochain,
    pub error_bound: f64,
}

/// Values that different representatives of one cell must agree on.
const CONSISTENCY: f64 = 1e-12;

fn assign(slot: &mut Option<f64>, v: f64, what: &str) -> Result<()> {
    match slot {
        Some(prev) if (*prev - v).abs() > CONSISTENCY * prev.abs().max(1.0) => Err(Error::InvalidArgument(format!(
            "{what} is not determined by its cell class ({prev} vs {v})"
        ))),
        Some(_) => Ok(()),
        None => {
            *slot = Some(v);
            Ok(())
        }
    }
}

/// `J_0`: values at vertex punctures, tabulated on the vertices of `gamma`.
pub fn integrate_j0(f: &SPEFunction, sys: &SubstitutionSystem, gamma: &ApComplex) -> Result<Integrated> {
    let q = f.range.max(gamma.k);
    let mut values = vec![None; gamma.vertex_count()];
    for (l, r) in sys.collared_adjacencies(q)? {
        let v = gamma.vertex_between(&truncate_to(&l, gamma.k), &truncate_to(&r, gamma.k))?;
        let x = f.profile(&truncate_to(&l, f.range))?.value(1.0);
        assign(&mut values[v], x, "J_0")?;
        if f.continuous {
            assign(&mut values[v], f.profile(&truncate_to(&r, f.range))?.value(0.0), "J_0")?;
        }
    }
    let values = values
        .into_iter()
        .map(|v| v.ok_or_else(|| Error::CellNotRealized("vertex without adjacency".into())))
        .collect::<Result<_>>()?;
    Ok(Integrated {
        cochain: PECochain {
            level: gamma.k,
            range: f.range,
            n: 0,
            values,
        },
        error_bound: 0.0,
    })
}

/// `J_1`: integral of the form over each edge class of `gamma`.
pub fn integrate_j1(omega: &SPEOneForm, sys: &SubstitutionSystem, gamma: &ApComplex) -> Result<Integrated> {
    let q = omega.range.max(gamma.k);
    let mut values = vec![None; gamma.edge_count()];
    let mut error_bound: f64 = 0.0;
    for c in sys.collared_alphabet(q)?.letters {
        let e = gamma
            .edge_id(&truncate_to(&c, gamma.k))
            .ok_or_else(|| Error::CellNotRealized(c.render(sys)))?;
        let key = truncate_to(&c, omega.range);
        let p = omega
            .profiles
            .get(&key)
            .ok_or_else(|| Error::InvalidArgument(format!("no profile for {}", key.render(sys))))?;
        let len = sys.letter_length(c.center);
        let (v, err) = p.integrate();
        error_bound = error_bound.max(err * len);
        assign(&mut values[e], v * len, "J_1")?;
    }
    let values = values
        .into_iter()
        .map(|v| v.ok_or_else(|| Error::CellNotRealized("edge without letter".into())))
        .collect::<Result<_>>()?;
    Ok(Integrated {
        cochain: PECochain {
            level: gamma.k,
            range: omega.range,
            n: 1,
            values,
        },
        error_bound,
    })
}

/// The partition of unity `{g_v}`: on a tile with vertices `v_0 < v_1`,
/// `g_{v_0} = 1 − S` and `g_{v_1} = S` with flats of width `ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BumpFamily {
    pub epsilon: f64,
    /// Scale of `g_{v_1}`; exactly 1 unless a fault is injected.
    pub normalization: f64,
}

impl BumpFamily {
    /// `ε` is a quarter of the shortest tile.
    pub fn new(sys: &SubstitutionSystem) -> Self {
        Self {
            epsilon: sys.shortest_length() / 4.0,
            normalization: 1.0,
        }
    }

    pub fn perturbed(mut self, by: f64) -> Self {
        self.normalization += by;
        self
    }

    fn step(&self, len: f64) -> Smoothstep {
        Smoothstep { delta: self.epsilon / len }
    }

    /// `(g_{v_0}, g_{v_1})` at local coordinate `t` of a tile of length `len`.
    pub fn weights(&self, len: f64, t: f64) -> (f64, f64) {
        let s = self.step(len).value(t);
        (1.0 - s, self.normalization * s)
    }
}

/// Range growth of `α_l`.
pub const ALPHA_RANGE_GROWTH: usize = 2;

fn alpha_keys(sys: &SubstitutionSystem, k: usize) -> Result<Vec<CollaredLetter>> {
    Ok(sys.collared_alphabet(k + ALPHA_RANGE_GROWTH)?.letters)
}

/// Level-`k` vertex classes at the two ends of the centre tile of `c`.
fn end_vertices(c: &CollaredLetter, gamma: &ApComplex) -> Result<(usize, usize)> {
    let k = gamma.k;
    let f = c.factor();
    let mid = c.k();
    let col = |center: usize| CollaredLetter::from_factor(&f[center - k..=center + k]);
    let left = gamma.vertex_between(&col(mid - 1), &col(mid))?;
    let right = gamma.vertex_between(&col(mid), &col(mid + 1))?;
    Ok((left, right))
}

/// `α_0(c) = Σ_v c(v) g_v`.
pub fn alpha0(c: &PECochain, sys: &SubstitutionSystem, gamma: &ApComplex, bumps: &BumpFamily) -> Result<SPEFunction> {
    if c.n != 0 || c.level != gamma.k {
        return Err(Error::InvalidArgument("alpha_0 takes a vertex cochain on gamma".into()));
    }
    let mut profiles = BTreeMap::new();
    for key in alpha_keys(sys, gamma.k)? {
        let (v0, v1) = end_vertices(&key, gamma)?;
        let len = sys.letter_length(key.center);
        let p = Profile {
            poly: vec![],
            left: c.values[v0],
            right: bumps.normalization * c.values[v1],
            slope: 0.0,
            step: bumps.step(len),
        };
        profiles.insert(key, p);
    }
    Ok(SPEFunction {
        range: gamma.k + ALPHA_RANGE_GROWTH,
        profiles,
        continuous: bumps.normalization == 1.0,
    })
}

/// `α_1(c) = Σ_e c(e) (g_{v_0} dg_{v_1} − g_{v_1} dg_{v_0})`, which on a tile
/// of length `L` is the density `c(e) S'(t) / L`.
pub fn alpha1(c: &PECochain, sys: &SubstitutionSystem, gamma: &ApComplex, bumps: &BumpFamily) -> Result<SPEOneForm> {
    if c.n != 1 || c.level != gamma.k {
        return Err(Error::InvalidArgument("alpha_1 takes an edge cochain on gamma".into()));
    }
    let mut profiles = BTreeMap::new();
    for key in alpha_keys(sys, gamma.k)? {
        let e = gamma
            .edge_id(&truncate_to(&key, gamma.k))
            .ok_or_else(|| Error::CellNotRealized(key.render(sys)))?;
        let len = sys.letter_length(key.center);
        let p = Profile {
            poly: vec![],
            left: 0.0,
            right: 0.0,
            slope: bumps.normalization * c.values[e] / len,
            step: bumps.step(len),
        };
        profiles.insert(key, p);
    }
    Ok(SPEOneForm {
        range: gamma.k + ALPHA_RANGE_GROWTH,
        profiles,
    })
}

/// `(d_S c)(e) = c(right end) − c(left end)`.
pub fn pe_coboundary(c: &PECochain, gamma: &ApComplex) -> Result<PECochain> {
    if c.n != 0 || c.level != gamma.k {
        return Err(Error::InvalidArgument("pe_coboundary takes a vertex cochain on gamma".into()));
    }
    let values = (0..gamma.edge_count())
        .map(|e| c.values[gamma.endpoint(e, Side::Right)] - c.values[gamma.endpoint(e, Side::Left)])
        .collect();
    Ok(PECochain {
        level: c.level,
        range: c.range + 1,
        n: 1,
        values,
    })
}

/// `φ`: the PV cochain taking the value `c(⟨σ_p⟩)` at the puncture `p`.
pub fn phi_transversal(c: &PECochain, gamma: &ApComplex) -> Result<PVCochain<f64>> {
    if c.level != gamma.k || c.values.len() != gamma.complex.cell_count(c.n) {
        return Err(Error::InvalidArgument(format!(
            "cochain on level {} does not match the built level {}",
            c.level, gamma.k
        )));
    }
    Ok(PVCochain {
        k: c.level,
        n: c.n,
        values: c.values.clone(),
    })
}

/// `s_j(f) = max_{i ≤ j} sup |f^{(i)}|`, for polynomial profiles.
pub fn seminorms(f: &SPEFunction, sys: &SubstitutionSystem, order: usize) -> Result<Vec<f64>> {
    const GRID: usize = 256;
    let mut out = Vec::with_capacity(order + 1);
    let mut best: f64 = 0.0;
    let mut current: Vec<(f64, Profile)> = f
        .profiles
        .iter()
        .map(|(c, p)| {
            if p.is_polynomial() {
                Ok((sys.letter_length(c.center), p.clone()))
            } else {
                Err(Error::InvalidArgument("seminorms need polynomial profiles".into()))
            }
        })
        .collect::<Result<_>>()?;
    for _ in 0..=order {
        for (_, p) in &current {
            for i in 0..=GRID {
                best = best.max(p.value(i as f64 / GRID as f64).abs());
            }
        }
        out.push(best);
        current = current
            .into_iter()
            .map(|(len, p)| Ok((len, p.derivative()?.scaled(1.0 / len))))
            .collect::<Result<_>>()?;
    }
    Ok(out)
}

/// A random continuous polynomial-profile function of range `gamma.k`:
/// `h(v_0)(1 − t) + h(v_1) t + t(1 − t) q(t)` with `h` random on the vertex
/// classes and `q` random per letter.
pub fn random_spe_function<R: Rng>(
    gamma: &ApComplex,
    degree: usize,
    rng: &mut R,
) -> Result<SPEFunction> {
    let h: Vec<f64> = (0..gamma.vertex_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut profiles = BTreeMap::new();
    for (e, c) in gamma.edges.iter().enumerate() {
        let (h0, h1) = (h[gamma.endpoint(e, Side::Left)], h[gamma.endpoint(e, Side::Right)]);
        let q: Vec<f64> = (0..degree.saturating_sub(1)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut poly = vec![0.0; degree.max(1) + 1];
        poly[0] = h0;
        poly[1] = h1 - h0;
        // t(1 − t) q(t) = Σ q_i (t^{i+1} − t^{i+2})
        for (i, qi) in q.iter().enumerate() {
            poly[i + 1] += qi;
            poly[i + 2] -= qi;
        }
        profiles.insert(c.clone(), Profile::polynomial(poly));
    }
    Ok(SPEFunction {
        range: gamma.k,
        profiles,
        continuous: true,
    })
}

pub fn random_cochain<R: Rng>(gamma: &ApComplex, n: usize, rng: &mut R) -> PECochain {
    let values = (0..gamma.complex.cell_count(n)).map(|_| rng.random_range(-1.0..1.0)).collect();
    PECochain {
        level: gamma.k,
        range: gamma.k,
        n,
        values,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeRhamFailure {
    pub trial: usize,
    pub check: String,
    pub cell: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeRhamReport {
    pub system: String,
    pub level: usize,
    pub trials: usize,
    pub patch_tiles: usize,
    pub tolerance: f64,
    pub stokes_max: f64,
    pub alpha0_max: f64,
    pub alpha1_max: f64,
    pub intertwining_max: f64,
    pub partition_of_unity_max: f64,
    pub pe_property_max: f64,
    pub composite_max: f64,
    pub quadrature_error_bound: f64,
    pub alpha_range: usize,
    pub fault_injected: bool,
    pub failures: Vec<DeRhamFailure>,
}

/// Parameters of [`verify_de_rham`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeRhamConfig {
    pub k: usize,
    pub trials: usize,
    /// Residual bound for the Stokes identity.
    pub tol: f64,
    /// Residual bound for `J ∘ α = id` and `α d_S = d α`.
    pub alpha_tol: f64,
    pub partition_tol: f64,
    pub patch_tiles: usize,
    pub degree: usize,
    /// Perturbs the bump normalization.
    pub fault: bool,
}

impl Default for DeRhamConfig {
    fn default() -> Self {
        Self {
            k: 1,
            trials: 100,
            tol: 1e-9,
            alpha_tol: 1e-8,
            partition_tol: 1e-12,
            patch_tiles: 10_000,
            degree: MAX_DEGREE,
            fault: false,
        }
    }
}

/// Random-trial verification of `J_1 d = d_S J_0`, `J α = id`,
/// `α_1 d_S = d α_0`, the partition of unity, the PE property on a long
/// patch, and `φ ∘ J_1` against direct integration at sampled punctures.
pub fn verify_de_rham<R: Rng>(sys: &SubstitutionSystem, cfg: &DeRhamConfig, rng: &mut R) -> Result<DeRhamReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let k = cfg.k;
    let gamma = build_gamma(sys, k)?;
    let patch = Patch::layout(sys, sys.expand_to_length(cfg.patch_tiles)?);
    let mut bumps = BumpFamily::new(sys);
    if cfg.fault {
        bumps = bumps.perturbed(1e-3);
    }
    let mut report = DeRhamReport {
        system: sys.to_string(),
        level: k,
        trials: cfg.trials,
        patch_tiles: patch.len(),
        tolerance: cfg.tol,
        stokes_max: 0.0,
        alpha0_max: 0.0,
        alpha1_max: 0.0,
        intertwining_max: 0.0,
        partition_of_unity_max: 0.0,
        pe_property_max: 0.0,
        composite_max: 0.0,
        quadrature_error_bound: 0.0,
        alpha_range: k + ALPHA_RANGE_GROWTH,
        fault_injected: cfg.fault,
        failures: vec![],
    };
    let fail = |report: &mut DeRhamReport, trial: usize, check: &str, cell: usize, residual: f64| {
        if report.failures.len() < 32 {
            report.failures.push(DeRhamFailure {
                trial,
                check: check.into(),
                cell,
                residual,
            });
        }
    };

    // Partition of unity and sample points on the patch.
    let margin = k + ALPHA_RANGE_GROWTH + 1;
    let inner = (patch.vertices[margin], patch.vertices[patch.len() - margin]);
    let points: Vec<f64> = (0..200).map(|_| rng.random_range(inner.0..inner.1)).collect();
    for &x in &points {
        let (tile, t) = locate(&patch, x)?;
        let (g0, g1) = bumps.weights(patch.tile_length(tile), t);
        let r = (g0 + g1 - 1.0).abs();
        report.partition_of_unity_max = report.partition_of_unity_max.max(r);
        if r > cfg.partition_tol {
            fail(&mut report, 0, "partition_of_unity", tile, r);
        }
    }
    // Positions with congruent k-collars, for the PE property.
    let mut by_class: BTreeMap<CollaredLetter, Vec<usize>> = BTreeMap::new();
    for i in margin..patch.len() - margin {
        by_class.entry(neighborhood(&patch.word, i, k)?).or_default().push(i);
    }
    let edge_samples = sample_transversal(sys, k, 1, 50, rng)?;

    for trial in 0..cfg.trials {
        let f = random_spe_function(&gamma, cfg.degree, rng)?;
        let j0 = integrate_j0(&f, sys, &gamma)?;
        let j1 = integrate_j1(&differential(&f, sys)?, sys, &gamma)?;
        let ds = pe_coboundary(&j0.cochain, &gamma)?;
        for e in 0..gamma.edge_count() {
            let r = (j1.cochain.values[e] - ds.values[e]).abs();
            report.stokes_max = report.stokes_max.max(r);
            if r > cfg.tol {
                fail(&mut report, trial, "stokes", e, r);
            }
        }
        for positions in by_class.values() {
            let a = positions[rng.random_range(0..positions.len())];
            let b = positions[rng.random_range(0..positions.len())];
            let t: f64 = rng.random_range(0.0..1.0);
            let xa = patch.vertices[a] + t * patch.tile_length(a);
            let xb = patch.vertices[b] + t * patch.tile_length(b);
            let r = (eval_spe(&f, &patch, xa)? - eval_spe(&f, &patch, xb)?).abs();
            report.pe_property_max = report.pe_property_max.max(r);
            // Coordinates near the far end of the patch carry ~1e-12 rounding.
            if r > cfg.tol {
                fail(&mut report, trial, "pe_property", a, r);
            }
        }

        let c0 = random_cochain(&gamma, 0, rng);
        let c1 = random_cochain(&gamma, 1, rng);
        let a0 = alpha0(&c0, sys, &gamma, &bumps)?;
        let back0 = integrate_j0(&a0, sys, &gamma)?;
        let r = back0.cochain.max_difference(&c0)?;
        report.alpha0_max = report.alpha0_max.max(r);
        if r > cfg.alpha_tol {
            fail(&mut report, trial, "J0_alpha0", 0, r);
        }
        let back1 = integrate_j1(&alpha1(&c1, sys, &gamma, &bumps)?, sys, &gamma)?;
        report.quadrature_error_bound = report.quadrature_error_bound.max(back1.error_bound);
        let r = back1.cochain.max_difference(&c1)?;
        report.alpha1_max = report.alpha1_max.max(r);
        if r > cfg.alpha_tol {
            fail(&mut report, trial, "J1_alpha1", 0, r);
        }
        let lhs = alpha1(&pe_coboundary(&c0, &gamma)?, sys, &gamma, &bumps)?;
        let rhs = differential(&a0, sys)?;
        for (key, p) in &lhs.profiles {
            let q = &rhs.profiles[key];
            for i in 0..=16 {
                let t = i as f64 / 16.0;
                let r = (p.value(t) - q.value(t)).abs();
                report.intertwining_max = report.intertwining_max.max(r);
                if r > cfg.alpha_tol {
                    fail(&mut report, trial, "alpha_intertwines_d", 0, r);
                }
            }
        }

        // ψ = φ ∘ J_1 at sampled edge punctures against direct integration.
        if trial < 10 {
            let omega = differential(&f, sys)?;
            let psi = phi_transversal(&j1.cochain, &gamma)?;
            for xi in &edge_samples {
                let Face::Edge(i) = xi.origin else { unreachable!() };
                let len = xi.patch.tile_length(i);
                let x0 = xi.patch.vertices[i];
                let direct = GaussLegendre::new(NonZeroUsize::new(cfg.degree + 1).expect("nonzero"))
                    .integrate(x0, x0 + len, |x| omega.density(&xi.patch, x).unwrap_or(f64::NAN));
                let r = (evaluate(&psi, xi, &gamma)? - direct).abs();
                let r = if r.is_nan() { f64::INFINITY } else { r };
                report.composite_max = report.composite_max.max(r);
                if r > cfg.tol {
                    fail(&mut report, trial, "composite", i, r);
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pv::transversal_points;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fib() -> SubstitutionSystem {
        SubstitutionSystem::fibonacci()
    }

    fn constant_function(sys: &SubstitutionSystem, k: usize, c: f64) -> SPEFunction {
        SPEFunction {
            range: k,
            profiles: sys
                .collared_alphabet(k)
                .unwrap()
                .letters
                .into_iter()
                .map(|l| (l, Profile::polynomial(vec![c])))
                .collect(),
            continuous: true,
        }
    }

    #[test]
    fn smoothstep_is_flat_and_monotone() {
        let s = Smoothstep { delta: 0.25 };
        assert_eq!(s.value(0.0), 0.0);
        assert_eq!(s.value(0.25), 0.0);
        assert_eq!(s.value(0.75), 1.0);
        assert_eq!(s.value(1.0), 1.0);
        assert!((s.value(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = s.value(i as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
        // Slope against a central difference.
        for &t in &[0.3, 0.5, 0.6, 0.7] {
            let h = 1e-6;
            let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
            assert!((fd - s.slope(t)).abs() < 1e-6, "{t}: {fd} vs {}", s.slope(t));
        }
    }

    #[test]
    fn differential_examples() {
        let sys = fib();
        let c = constant_function(&sys, 0, 3.0);
        let dc = differential(&c, &sys).unwrap();
        assert!(dc.profiles.values().all(|p| p.poly.iter().all(|&x| x == 0.0)));
        let bubble = SPEFunction {
            range: 0,
            profiles: sys
                .collared_alphabet(0)
                .unwrap()
                .letters
                .into_iter()
                .map(|l| (l, Profile::polynomial(vec![0.0, 1.0, -1.0])))
                .collect(),
            continuous: true,
        };
        let d = differential(&bubble, &sys).unwrap();
        for p in d.profiles.values() {
            assert_eq!(p.poly, vec![1.0, -2.0]);
        }
        let gamma = build_gamma(&sys, 0).unwrap();
        let j1 = integrate_j1(&d, &sys, &gamma).unwrap();
        assert!(j1.cochain.values.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn j0_of_constant_and_linearity() {
        let sys = fib();
        let gamma = build_gamma(&sys, 1).unwrap();
        let c = constant_function(&sys, 1, 2.5);
        assert_eq!(integrate_j0(&c, &sys, &gamma).unwrap().cochain.values, vec![2.5; gamma.vertex_count()]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_spe_function(&gamma, 6, &mut rng).unwrap();
        let g = random_spe_function(&gamma, 6, &mut rng).unwrap();
        let fg = f.add(&g).unwrap();
        let (df, dg, dfg) = (
            differential(&f, &sys).unwrap(),
            differential(&g, &sys).unwrap(),
            differential(&fg, &sys).unwrap(),
        );
        let sum = df.add(&dg).unwrap();
        let a = integrate_j1(&dfg, &sys, &gamma).unwrap().cochain;
        let b = integrate_j1(&sum, &sys, &gamma).unwrap().cochain;
        assert!(a.max_difference(&b).unwrap() < 1e-14);
    }

    #[test]
    fn continuity_is_checked() {
        let sys = fib();
        let gamma = build_gamma(&sys, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_spe_function(&gamma, 4, &mut rng).unwrap();
        assert!(f.clone().with_continuity_check(&sys, 1e-12).is_ok());
        let mut broken = f;
        broken.profiles.values_mut().next().unwrap().poly[0] += 1.0;
        assert!(broken.with_continuity_check(&sys, 1e-12).is_err());
    }

    #[test]
    fn alpha_is_right_inverse() {
        let sys = fib();
        let gamma = build_gamma(&sys, 1).unwrap();
        let bumps = BumpFamily::new(&sys);
        let ones = PECochain::new(&gamma, 0, vec![1.0; gamma.vertex_count()]).unwrap();
        let one = alpha0(&ones, &sys, &gamma, &bumps).unwrap();
        let patch = Patch::layout(&sys, sys.expand_to_length(200).unwrap());
        for i in 0..50 {
            let x = 10.0 + i as f64 * 1.37;
            assert_eq!(eval_spe(&one, &patch, x).unwrap(), 1.0);
        }
        assert_eq!(one.range, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c0 = random_cochain(&gamma, 0, &mut rng);
        assert_eq!(integrate_j0(&alpha0(&c0, &sys, &gamma, &bumps).unwrap(), &sys, &gamma).unwrap().cochain, PECochain { range: 3, ..c0.clone() });
        let c1 = random_cochain(&gamma, 1, &mut rng);
        let back = integrate_j1(&alpha1(&c1, &sys, &gamma, &bumps).unwrap(), &sys, &gamma).unwrap();
        assert!(back.cochain.max_difference(&c1).unwrap() < 1e-12, "{:?}", back);
    }

    #[test]
    fn coboundary_matches_gamma_matrix() {
        let sys = fib();
        let gamma = build_gamma(&sys, 2).unwrap();
        let d0 = gamma.complex.coboundary_matrices().differential(0).to_f64_rows();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_cochain(&gamma, 0, &mut rng);
        let dc = pe_coboundary(&c, &gamma).unwrap();
        for (e, row) in d0.iter().enumerate() {
            let expected: f64 = row.iter().zip(&c.values).map(|(a, b)| a * b).sum();
            assert!((dc.values[e] - expected).abs() < 1e-15);
        }
        let constant = PECochain::new(&gamma, 0, vec![2.0; gamma.vertex_count()]).unwrap();
        assert!(pe_coboundary(&constant, &gamma).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(pe_coboundary(&dc, &gamma).is_err());
    }

    #[test]
    fn phi_evaluates_to_cell_values_and_is_isometric() {
        let sys = fib();
        let gamma = build_gamma(&sys, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let patch = crate::pv::sample_patch(&sys, 1).unwrap();
        for n in 0..=1 {
            let c = random_cochain(&gamma, n, &mut rng);
            let c2 = random_cochain(&gamma, n, &mut rng);
            let (p, p2) = (phi_transversal(&c, &gamma).unwrap(), phi_transversal(&c2, &gamma).unwrap());
            let pts = transversal_points(&patch, 1, n);
            for xi in &pts {
                assert_eq!(evaluate(&p, xi, &gamma).unwrap(), c.values[xi.zone(&gamma).unwrap()]);
            }
            let d = crate::pv::sampled_sup_distance(&p, &p2, &pts, &gamma).unwrap();
            assert_eq!(d, c.max_difference(&c2).unwrap());
        }
    }

    #[test]
    fn seminorms_of_linear_profile() {
        let sys = SubstitutionSystem::periodic();
        let f = SPEFunction {
            range: 0,
            profiles: sys
                .collared_alphabet(0)
                .unwrap()
                .letters
                .into_iter()
                .map(|l| (l, Profile::polynomial(vec![0.0, 2.0])))
                .collect(),
            continuous: false,
        };
        assert_eq!(seminorms(&f, &sys, 2).unwrap(), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn small_de_rham_run_and_negative_control() {
        let sys = fib();
        let cfg = DeRhamConfig {
            trials: 5,
            patch_tiles: 500,
            ..DeRhamConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ok = verify_de_rham(&sys, &cfg, &mut rng).unwrap();
        assert!(ok.failures.is_empty(), "{:?}", ok.failures);
        assert!(ok.stokes_max <= 1e-9 && ok.alpha1_max <= 1e-8);
        let bad = verify_de_rham(&sys, &DeRhamConfig { fault: true, ..cfg }, &mut rng).unwrap();
        assert!(!bad.failures.is_empty());
    }
}
