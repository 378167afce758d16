//! Δ-complexes with ordered face maps, their integer cochain complexes, and
//! maps between them.
//!
//! Cells of dimension `n` are numbered `0..cells[n].len()`. An `n`-cell has
//! faces `∂_0, …, ∂_n`, where `∂_i` omits the `i`-th vertex; for an edge
//! `[v0, v1]` that makes `∂_0 = v1` and `∂_1 = v0`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::intmat::IntMatrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaComplex {
    names: Vec<Vec<String>>,
    /// `faces[n][c][i]` is the index of `∂_i` of the `n`-cell `c`, for `n ≥ 1`.
    faces: Vec<Vec<Vec<usize>>>,
}

impl DeltaComplex {
    /// `names[n]` lists the `n`-cells; `faces[n]` (for `n ≥ 1`) lists the
    /// `n + 1` faces of each `n`-cell. `faces[0]` must be empty.
    pub fn new(names: Vec<Vec<String>>, faces: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidComplex("complex has no dimensions".into()));
        }
        if faces.len() != names.len() {
            return Err(Error::InvalidComplex(format!(
                "{} face tables for {} dimensions",
                faces.len(),
                names.len()
            )));
        }
        let complex = Self { names, faces };
        complex.validate()?;
        Ok(complex)
    }

    fn validate(&self) -> Result<()> {
        if !self.faces[0].iter().all(Vec::is_empty) || self.faces[0].len() > self.names[0].len() {
            return Err(Error::InvalidComplex("vertices have no faces".into()));
        }
        for n in 1..=self.dim() {
            if self.faces[n].len() != self.names[n].len() {
                return Err(Error::InvalidComplex(format!(
                    "dimension {n}: {} cells but {} face lists",
                    self.names[n].len(),
                    self.faces[n].len()
                )));
            }
            for (c, fs) in self.faces[n].iter().enumerate() {
                if fs.len() != n + 1 {
                    return Err(Error::InvalidComplex(format!(
                        "cell {} of dimension {n} has {} faces, expected {}",
                        self.names[n][c],
                        fs.len(),
                        n + 1
                    )));
                }
                if let Some(&bad) = fs.iter().find(|&&f| f >= self.names[n - 1].len()) {
                    return Err(Error::InvalidComplex(format!(
                        "cell {} has face index {bad} outside dimension {}",
                        self.names[n][c],
                        n - 1
                    )));
                }
            }
        }
        if let Some((n, c, i, j)) = self.simplicial_identity_violation() {
            return Err(Error::InvalidComplex(format!(
                "simplicial identity d{i} d{j} = d{} d{i} fails on cell {} of dimension {n}",
                j - 1,
                self.names[n][c]
            )));
        }
        Ok(())
    }

    /// First `(n, cell, i, j)` with `i < j` and `∂_i∂_j ≠ ∂_{j−1}∂_i`.
    pub fn simplicial_identity_violation(&self) -> Option<(usize, usize, usize, usize)> {
        for n in 2..=self.dim() {
            for c in 0..self.cell_count(n) {
                if let Some((i, j)) = self.cell_identity_violation(n, c) {
                    return Some((n, c, i, j));
                }
            }
        }
        None
    }

    fn cell_identity_violation(&self, n: usize, c: usize) -> Option<(usize, usize)> {
        for j in 1..=n {
            for i in 0..j {
                let lhs = self.face(n - 1, self.face(n, c, j), i);
                let rhs = self.face(n - 1, self.face(n, c, i), j - 1);
                if lhs != rhs {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn dim(&self) -> usize {
        self.names.len() - 1
    }

    pub fn cell_count(&self, n: usize) -> usize {
        self.names.get(n).map_or(0, Vec::len)
    }

    pub fn cell_counts(&self) -> Vec<usize> {
        self.names.iter().map(Vec::len).collect()
    }

    pub fn name(&self, n: usize, c: usize) -> &str {
        &self.names[n][c]
    }

    pub fn names(&self, n: usize) -> &[String] {
        &self.names[n]
    }

    /// `∂_i` of the `n`-cell `c`.
    pub fn face(&self, n: usize, c: usize, i: usize) -> usize {
        self.faces[n][c][i]
    }

    pub fn faces_of(&self, n: usize, c: usize) -> &[usize] {
        &self.faces[n][c]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.names
            .iter()
            .enumerate()
            .map(|(n, cs)| if n % 2 == 0 { cs.len() as i64 } else { -(cs.len() as i64) })
            .sum()
    }

    /// Coboundary matrices `D^n : C^n → C^{n+1}`; rows are `(n+1)`-cells,
    /// columns `n`-cells, `D^n[τ, σ] = Σ_{i : ∂_i τ = σ} (−1)^i`.
    pub fn coboundary_matrices(&self) -> CochainComplex {
        let matrices = (0..self.dim())
            .map(|n| {
                let mut d = IntMatrix::zeros(self.cell_count(n + 1), self.cell_count(n));
                for tau in 0..self.cell_count(n + 1) {
                    for (i, &sigma) in self.faces[n + 1][tau].iter().enumerate() {
                        let sign = if i % 2 == 0 { 1 } else { -1 };
                        d[(tau, sigma)] += BigInt::from(sign);
                    }
                }
                d
            })
            .collect();
        CochainComplex {
            cell_counts: self.cell_counts(),
            matrices,
        }
    }

    /// A single vertex.
    pub fn point() -> Self {
        Self::new(vec![vec!["v".into()]], vec![vec![]]).expect("valid complex")
    }

    /// One vertex and one loop edge.
    pub fn circle() -> Self {
        Self::new(
            vec![vec!["v".into()], vec!["e".into()]],
            vec![vec![], vec![vec![0, 0]]],
        )
        .expect("valid complex")
    }

    /// Parses the line-oriented complex format:
    ///
    /// ```text
    /// dim 1
    /// cell 0 v
    /// cell 1 e
    /// face e 0 v
    /// face e 1 v
    /// ```
    ///
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::ComplexParse { line, message };
        let mut dim: Option<usize> = None;
        let mut names: Vec<Vec<String>> = Vec::new();
        let mut index: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
        let mut faces: Vec<Vec<Vec<Option<usize>>>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            match tokens[0] {
                "dim" => {
                    if dim.is_some() {
                        return Err(err(line, "duplicate dim header".into()));
                    }
                    if tokens.len() != 2 {
                        return Err(err(line, "expected `dim <N>`".into()));
                    }
                    let n: usize = tokens[1]
                        .parse()
                        .map_err(|_| err(line, format!("bad dimension {:?}", tokens[1])))?;
                    dim = Some(n);
                    names = vec![Vec::new(); n + 1];
                    faces = vec![Vec::new(); n + 1];
                }
                "cell" => {
                    let n = dim.ok_or_else(|| err(line, "`cell` before `dim` header".into()))?;
                    if tokens.len() != 3 {
                        return Err(err(line, "expected `cell <dim> <name>`".into()));
                    }
                    let d: usize = tokens[1]
                        .parse()
                        .map_err(|_| err(line, format!("bad cell dimension {:?}", tokens[1])))?;
                    if d > n {
                        return Err(err(line, format!("cell dimension {d} exceeds dim {n}")));
                    }
                    let name = tokens[2].to_string();
                    if index.contains_key(&name) {
                        return Err(err(line, format!("duplicate cell name {name:?}")));
                    }
                    index.insert(name.clone(), (d, names[d].len(), line));
                    names[d].push(name);
                    faces[d].push(if d == 0 { Vec::new() } else { vec![None; d + 1] });
                }
                "face" => {
                    if dim.is_none() {
                        return Err(err(line, "`face` before `dim` header".into()));
                    }
                    if tokens.len() != 4 {
                        return Err(err(line, "expected `face <cell> <i> <face>`".into()));
                    }
                    let &(d, c, _) = index
                        .get(tokens[1])
                        .ok_or_else(|| err(line, format!("unknown cell {:?}", tokens[1])))?;
                    if d == 0 {
                        return Err(err(line, format!("vertex {:?} has no faces", tokens[1])));
                    }
                    let i: usize = tokens[2]
                        .parse()
                        .map_err(|_| err(line, format!("bad face index {:?}", tokens[2])))?;
                    if i > d {
                        return Err(err(line, format!("face index {i} out of range 0..={d}")));
                    }
                    let &(fd, f, _) = index
                        .get(tokens[3])
                        .ok_or_else(|| err(line, format!("unknown cell {:?}", tokens[3])))?;
                    if fd + 1 != d {
                        return Err(err(
                            line,
                            format!(
                                "face {:?} has dimension {fd}, expected {}",
                                tokens[3],
                                d - 1
                            ),
                        ));
                    }
                    if faces[d][c][i].replace(f).is_some() {
                        return Err(err(line, format!("face {i} of {:?} given twice", tokens[1])));
                    }
                }
                other => return Err(err(line, format!("unknown directive {other:?}"))),
            }
        }
        if dim.is_none() {
            return Err(err(0, "missing `dim` header".into()));
        }
        let mut resolved = Vec::with_capacity(faces.len());
        for (d, cells) in faces.into_iter().enumerate() {
            let mut dim_faces = Vec::with_capacity(cells.len());
            for (c, fs) in cells.into_iter().enumerate() {
                let decl_line = index[&names[d][c]].2;
                let fs: Option<Vec<usize>> = fs.into_iter().collect();
                dim_faces.push(fs.ok_or_else(|| {
                    err(decl_line, format!("cell {:?} is missing faces", names[d][c]))
                })?);
            }
            resolved.push(dim_faces);
        }
        let complex = Self {
            names,
            faces: resolved,
        };
        if let Some((n, c, i, j)) = complex.simplicial_identity_violation() {
            let name = &complex.names[n][c];
            return Err(err(
                index[name].2,
                format!(
                    "simplicial identity d{i} d{j} = d{} d{i} fails on cell {name:?}",
                    j - 1
                ),
            ));
        }
        Ok(complex)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dim {}", self.dim());
        for (n, cs) in self.names.iter().enumerate() {
            for name in cs {
                let _ = writeln!(out, "cell {n} {name}");
            }
        }
        for n in 1..=self.dim() {
            for (c, fs) in self.faces[n].iter().enumerate() {
                for (i, &f) in fs.iter().enumerate() {
                    let _ = writeln!(out, "face {} {i} {}", self.names[n][c], self.names[n - 1][f]);
                }
            }
        }
        out
    }
}

/// The integer cochain complex `C^0 → C^1 → …` of a Δ-complex.
#[derive(Clone, Debug, PartialEq)]
pub struct CochainComplex {
    pub cell_counts: Vec<usize>,
    /// `matrices[n] = D^n`.
    pub matrices: Vec<IntMatrix>,
}

impl CochainComplex {
    pub fn top_degree(&self) -> usize {
        self.cell_counts.len() - 1
    }

    /// `D^n`, with zero maps past either end.
    pub fn differential(&self, n: isize) -> IntMatrix {
        let count = |d: isize| -> usize {
            if d < 0 {
                0
            } else {
                self.cell_counts.get(d as usize).copied().unwrap_or(0)
            }
        };
        if n >= 0 && (n as usize) < self.matrices.len() {
            self.matrices[n as usize].clone()
        } else {
            IntMatrix::zeros(count(n + 1), count(n))
        }
    }

    /// `D^{n+1} · D^n = 0` for every `n`.
    pub fn squares_to_zero(&self) -> bool {
        self.matrices
            .windows(2)
            .all(|w| (&w[1] * &w[0]).is_zero())
    }
}

/// A cellular map between Δ-complexes sending `n`-cells to `n`-cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectingMap {
    pub cell_map: Vec<Vec<usize>>,
}

impl ConnectingMap {
    pub fn identity(x: &DeltaComplex) -> Self {
        Self {
            cell_map: x.cell_counts().into_iter().map(|n| (0..n).collect()).collect(),
        }
    }

    /// Checks shapes and `∂_i ∘ f = f ∘ ∂_i` on every cell.
    pub fn verify(&self, source: &DeltaComplex, target: &DeltaComplex) -> Result<()> {
        if source.dim() != target.dim() || self.cell_map.len() != source.dim() + 1 {
            return Err(Error::ChainMapFailure("dimension mismatch".into()));
        }
        for (n, map) in self.cell_map.iter().enumerate() {
            if map.len() != source.cell_count(n) {
                return Err(Error::ChainMapFailure(format!("cell map in dimension {n} has wrong length")));
            }
            if map.iter().any(|&t| t >= target.cell_count(n)) {
                return Err(Error::ChainMapFailure(format!("cell map in dimension {n} out of range")));
            }
        }
        for n in 1..=source.dim() {
            for c in 0..source.cell_count(n) {
                for i in 0..=n {
                    let a = target.face(n, self.cell_map[n][c], i);
                    let b = self.cell_map[n - 1][source.face(n, c, i)];
                    if a != b {
                        return Err(Error::ChainMapFailure(format!(
                            "face {i} of {} does not commute",
                            source.name(n, c)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_surjective(&self, target: &DeltaComplex) -> bool {
        self.cell_map.iter().enumerate().all(|(n, map)| {
            let mut hit = vec![false; target.cell_count(n)];
            map.iter().for_each(|&t| hit[t] = true);
            hit.into_iter().all(|h| h)
        })
    }

    pub fn compose(&self, then: &ConnectingMap) -> ConnectingMap {
        ConnectingMap {
            cell_map: self
                .cell_map
                .iter()
                .zip(&then.cell_map)
                .map(|(f, g)| f.iter().map(|&c| g[c]).collect())
                .collect(),
        }
    }

    pub fn pullback(&self, source: &DeltaComplex, target: &DeltaComplex) -> CochainMap {
        CochainMap {
            matrices: self
                .cell_map
                .iter()
                .enumerate()
                .map(|(n, map)| {
                    let mut p = IntMatrix::zeros(source.cell_count(n), target.cell_count(n));
                    for (s, &t) in map.iter().enumerate() {
                        p[(s, t)] = BigInt::from(1);
                    }
                    p
                })
                .collect(),
        }
    }
}

/// Per-degree matrices of a cochain map `C^*(Y) → C^*(X)`; `matrices[n]` has
/// rows indexed by `n`-cells of `X`, columns by `n`-cells of `Y`.
#[derive(Clone, Debug, PartialEq)]
pub struct CochainMap {
    pub matrices: Vec<IntMatrix>,
}

impl CochainMap {
    /// `P^{n+1} D_Y^n = D_X^n P^n` in every degree.
    pub fn verify(&self, from: &CochainComplex, to: &CochainComplex) -> Result<()> {
        for n in 0..self.matrices.len().saturating_sub(1) {
            let lhs = &self.matrices[n + 1] * &from.differential(n as isize);
            let rhs = &to.differential(n as isize) * &self.matrices[n];
            if lhs != rhs {
                return Err(Error::ChainMapFailure(format!(
                    "pullback does not commute with the differential in degree {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn compose(&self, then: &CochainMap) -> CochainMap {
        CochainMap {
            matrices: self
                .matrices
                .iter()
                .zip(&then.matrices)
                .map(|(a, b)| b * a)
                .collect(),
        }
    }
}
