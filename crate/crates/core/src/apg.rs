//! Approximant complexes `Γ_k` of a one-dimensional substitution tiling.
//!
//! Edges of `Γ_k` are the `k`-collared letters of the language. Every edge has
//! a left and a right endpoint token; a legal adjacency `L R` of collared
//! letters glues the right token of `L` to the left token of `R`, and the
//! vertices are the classes of the transitive closure. Edges are oriented left
//! to right, so `∂_0 e` is the right endpoint and `∂_1 e` the left one.

use std::collections::HashMap;

use num_bigint::BigInt;
use serde::Serialize;

use crate::cohomology::{
    cohomology_groups, direct_limit, induced_map, CohomologyGroup, DirectLimitResult, DirectSystem,
    GroupHom,
};
use crate::complex::{CochainMap, ConnectingMap, DeltaComplex};
use crate::error::{Error, Result};
use crate::intmat::IntMatrix;
use crate::tiling::{CollaredLetter, StabilityCertificate, SubstitutionSystem};
use crate::union_find::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

fn token(edge: usize, side: Side) -> usize {
    2 * edge + matches!(side, Side::Right) as usize
}

#[derive(Clone, Debug)]
pub struct ApComplex {
    pub k: usize,
    pub complex: DeltaComplex,
    pub edges: Vec<CollaredLetter>,
    edge_index: HashMap<CollaredLetter, usize>,
    /// Vertex of each endpoint token, indexed by `2 * edge + (side == Right)`.
    vertex_of_token: Vec<usize>,
    pub certificate: StabilityCertificate,
}

impl ApComplex {
    pub fn edge_id(&self, letter: &CollaredLetter) -> Option<usize> {
        self.edge_index.get(letter).copied()
    }

    pub fn endpoint(&self, edge: usize, side: Side) -> usize {
        self.vertex_of_token[token(edge, side)]
    }

    pub fn vertex_count(&self) -> usize {
        self.complex.cell_count(0)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Vertex between two adjacent collared letters.
    pub fn vertex_between(&self, left: &CollaredLetter, right: &CollaredLetter) -> Result<usize> {
        let l = self
            .edge_id(left)
            .ok_or_else(|| Error::Internal(format!("collared letter {left:?} missing from level {}", self.k)))?;
        let r = self
            .edge_id(right)
            .ok_or_else(|| Error::Internal(format!("collared letter {right:?} missing from level {}", self.k)))?;
        let v = self.endpoint(l, Side::Right);
        if v != self.endpoint(r, Side::Left) {
            return Err(Error::Internal(format!(
                "adjacent letters at level {} do not share a vertex",
                self.k
            )));
        }
        Ok(v)
    }
}

pub fn build_gamma(sys: &SubstitutionSystem, k: usize) -> Result<ApComplex> {
    let alphabet = sys.collared_alphabet(k)?;
    if alphabet.letters.is_empty() {
        return Err(Error::Internal(format!("empty {k}-collared alphabet")));
    }
    let edges = alphabet.letters;
    let edge_index: HashMap<CollaredLetter, usize> =
        edges.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    let mut uf = UnionFind::new(2 * edges.len());
    for (left, right) in sys.collared_adjacencies(k)? {
        let (Some(&l), Some(&r)) = (edge_index.get(&left), edge_index.get(&right)) else {
            return Err(Error::Internal(format!(
                "adjacency at level {k} uses a letter outside the collared alphabet"
            )));
        };
        uf.union(token(l, Side::Right), token(r, Side::Left));
    }
    let (vertex_of_token, vertex_count) = uf.labels();
    let vertex_names = (0..vertex_count).map(|v| format!("v{v}")).collect();
    let edge_names = edges.iter().map(|e| e.render(sys)).collect();
    let faces = vec![
        vec![],
        (0..edges.len())
            .map(|e| {
                vec![
                    vertex_of_token[token(e, Side::Right)],
                    vertex_of_token[token(e, Side::Left)],
                ]
            })
            .collect(),
    ];
    let complex = DeltaComplex::new(vec![vertex_names, edge_names], faces)?;
    Ok(ApComplex {
        k,
        complex,
        edges,
        edge_index,
        vertex_of_token,
        certificate: alphabet.certificate,
    })
}

/// The forgetful map `Γ_{k+1} → Γ_k`, checked to commute with faces and to be
/// onto.
pub fn connecting_map(fine: &ApComplex, coarse: &ApComplex) -> Result<ConnectingMap> {
    if fine.k != coarse.k + 1 {
        return Err(Error::InvalidArgument(format!(
            "connecting map needs levels k+1 -> k, got {} -> {}",
            fine.k, coarse.k
        )));
    }
    let edge_map = fine
        .edges
        .iter()
        .map(|e| {
            coarse
                .edge_id(&e.truncate())
                .ok_or_else(|| Error::Internal(format!("truncation of {e:?} is not a level-{} letter", coarse.k)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut vertex_map = vec![None; fine.vertex_count()];
    for (e, &target) in edge_map.iter().enumerate() {
        for side in [Side::Left, Side::Right] {
            let v = fine.endpoint(e, side);
            let w = coarse.endpoint(target, side);
            match vertex_map[v] {
                None => vertex_map[v] = Some(w),
                Some(prev) if prev != w => {
                    return Err(Error::Internal(format!(
                        "vertex v{v} of level {} has no well-defined image",
                        fine.k
                    )))
                }
                Some(_) => {}
            }
        }
    }
    let vertex_map = vertex_map
        .into_iter()
        .map(|v| v.ok_or_else(|| Error::Internal("isolated vertex".into())))
        .collect::<Result<Vec<_>>>()?;
    let map = ConnectingMap {
        cell_map: vec![vertex_map, edge_map],
    };
    map.verify(&fine.complex, &coarse.complex)
        .map_err(|e| Error::Internal(format!("connecting map: {e}")))?;
    if !map.is_surjective(&coarse.complex) {
        return Err(Error::Internal(format!(
            "connecting map {} -> {} is not onto",
            fine.k, coarse.k
        )));
    }
    Ok(map)
}

/// The cellular self-map of `Γ_k` induced by the substitution: each collared
/// edge goes to the path of collared letters inside its image.
#[derive(Clone, Debug)]
pub struct SubstitutionMap {
    pub edge_paths: Vec<Vec<usize>>,
    pub vertex_map: Vec<usize>,
}

impl SubstitutionMap {
    /// Pullback `C^*(Γ_k) → C^*(Γ_k)`.
    pub fn pullback(&self, gamma: &ApComplex) -> CochainMap {
        let nv = gamma.vertex_count();
        let ne = gamma.edge_count();
        let mut p0 = IntMatrix::zeros(nv, nv);
        for (v, &w) in self.vertex_map.iter().enumerate() {
            p0[(v, w)] = BigInt::from(1);
        }
        let mut p1 = IntMatrix::zeros(ne, ne);
        for (e, path) in self.edge_paths.iter().enumerate() {
            for &f in path {
                p1[(e, f)] += BigInt::from(1);
            }
        }
        CochainMap {
            matrices: vec![p0, p1],
        }
    }
}

pub fn substitution_map(sys: &SubstitutionSystem, gamma: &ApComplex) -> Result<SubstitutionMap> {
    let k = gamma.k;
    let mut edge_paths = Vec::with_capacity(gamma.edge_count());
    let mut vertex_map = vec![None; gamma.vertex_count()];
    let mut assign = |v: usize, w: usize| -> Result<()> {
        match vertex_map[v] {
            Some(prev) if prev != w => Err(Error::Internal(format!(
                "substitution image of vertex v{v} at level {k} is not well defined"
            ))),
            _ => {
                vertex_map[v] = Some(w);
                Ok(())
            }
        }
    };
    for (e, letter) in gamma.edges.iter().enumerate() {
        let left_image = sys.apply(&letter.left);
        let center_image = sys.rule(letter.center);
        let mut image = left_image.clone();
        image.extend_from_slice(center_image);
        image.extend(sys.apply(&letter.right));
        let start = left_image.len();
        let path = (start..start + center_image.len())
            .map(|i| {
                let c = CollaredLetter::from_factor(&image[i - k..=i + k]);
                gamma.edge_id(&c).ok_or_else(|| {
                    Error::Internal(format!("substituted letter {c:?} missing from level {k}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        assign(
            gamma.endpoint(e, Side::Left),
            gamma.endpoint(path[0], Side::Left),
        )?;
        assign(
            gamma.endpoint(e, Side::Right),
            gamma.endpoint(*path.last().expect("nonempty image"), Side::Right),
        )?;
        edge_paths.push(path);
    }
    let vertex_map = vertex_map
        .into_iter()
        .map(|v| v.ok_or_else(|| Error::Internal("isolated vertex".into())))
        .collect::<Result<Vec<_>>>()?;
    let map = SubstitutionMap {
        edge_paths,
        vertex_map,
    };
    let d = gamma.complex.coboundary_matrices();
    map.pullback(gamma)
        .verify(&d, &d)
        .map_err(|e| Error::Internal(format!("substitution map: {e}")))?;
    Ok(map)
}

/// Cohomology of one approximant.
#[derive(Clone, Debug)]
pub struct LevelCohomology {
    pub k: usize,
    pub vertices: usize,
    pub edges: usize,
    pub euler_characteristic: i64,
    pub groups: Vec<CohomologyGroup>,
    pub certificate: StabilityCertificate,
}

/// Which direct limit is the headline `H^1` of the hull.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitRoute {
    /// The substitution-induced self-map on `H^1(Γ_k)`; valid for aperiodic
    /// (hence recognizable) primitive substitutions.
    Substitution,
    /// The forgetful maps `Γ_{k+1} → Γ_k`; used for periodic systems, whose
    /// substitution map is not a homeomorphism of the hull.
    Forgetful,
}

/// Everything the `apg` run reports.
#[derive(Clone, Debug)]
pub struct ApgAnalysis {
    /// Levels `0..=max(k_max, 2)`.
    pub levels: Vec<LevelCohomology>,
    pub complexes: Vec<ApComplex>,
    /// `H^1(Γ_k) → H^1(Γ_{k+1})` induced by the forgetful maps.
    pub forgetful_h1: Vec<GroupHom>,
    pub forgetful_limit: DirectLimitResult,
    /// `H^1(Γ_k) → H^1(Γ_k)` induced by the substitution, per level.
    pub substitution_h1: Vec<GroupHom>,
    /// Direct limit along the substitution at `limit_level`.
    pub substitution_limit: DirectLimitResult,
    pub limit_level: usize,
    pub periodic: bool,
    pub route: LimitRoute,
    /// The headline limit, taken along `route`.
    pub limit: DirectLimitResult,
    pub euler_warning: Option<String>,
}

/// Builds `Γ_0 … Γ_L`, `L = max(k_max, 2)`, and their cohomology, the
/// forgetful and substitution-induced maps on `H^1`, and the direct limits.
///
/// The limit along the substitution is taken at level `max(k_max, 1)`, the
/// first level at which collared letters force their neighbours.
pub fn analyze(sys: &SubstitutionSystem, k_max: usize) -> Result<ApgAnalysis> {
    let top = k_max.max(2);
    let limit_level = k_max.max(1);
    let complexes = (0..=top)
        .map(|k| build_gamma(sys, k))
        .collect::<Result<Vec<_>>>()?;
    let mut levels = Vec::new();
    let mut cochains = Vec::new();
    for g in &complexes {
        let d = g.complex.coboundary_matrices();
        let groups = cohomology_groups(&d)?;
        levels.push(LevelCohomology {
            k: g.k,
            vertices: g.vertex_count(),
            edges: g.edge_count(),
            euler_characteristic: g.complex.euler_characteristic(),
            groups,
            certificate: g.certificate,
        });
        cochains.push(d);
    }
    let mut forgetful_h1 = Vec::new();
    for k in 0..top {
        let rho = connecting_map(&complexes[k + 1], &complexes[k])?;
        let pull = rho.pullback(&complexes[k + 1].complex, &complexes[k].complex);
        forgetful_h1.push(induced_map(
            &pull,
            1,
            &cochains[k],
            &levels[k].groups[1],
            &levels[k + 1].groups[1],
        )?);
    }
    let forgetful_limit = direct_limit(&DirectSystem::new(
        levels.iter().map(|l| l.groups[1].group.clone()).collect(),
        forgetful_h1.clone(),
    )?);
    let mut substitution_h1 = Vec::new();
    for (g, (level, d)) in complexes.iter().zip(levels.iter().zip(&cochains)) {
        let pull = substitution_map(sys, g)?.pullback(g);
        substitution_h1.push(induced_map(&pull, 1, d, &level.groups[1], &level.groups[1])?);
    }
    let eventual = &substitution_h1[limit_level];
    // Enough repetitions for the nilpotent part to die out.
    let steps = eventual.matrix.rows() + 3;
    let substitution_limit = direct_limit(&DirectSystem::constant(eventual, steps)?);
    let chis: Vec<i64> = levels.iter().map(|l| l.euler_characteristic).collect();
    let euler_warning = chis.windows(2).any(|w| w[0] != w[1]).then(|| {
        format!("Euler characteristic is not constant across levels: {chis:?}")
    });
    let periodic = sys.is_periodic()?;
    let (route, limit) = if periodic {
        (LimitRoute::Forgetful, forgetful_limit.clone())
    } else {
        (LimitRoute::Substitution, substitution_limit.clone())
    };
    Ok(ApgAnalysis {
        levels,
        complexes,
        forgetful_h1,
        forgetful_limit,
        substitution_h1,
        substitution_limit,
        limit_level,
        periodic,
        route,
        limit,
        euler_warning,
    })
}
