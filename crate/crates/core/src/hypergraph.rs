//! Hypercube networks, sub-hypercube selection and edge switching.
//!
//! Vertices of `Q_n` are bit strings of length `n`. A label is stored as its
//! integer index with the first position of the string as the most
//! significant bit, so `0101` in `Q_4` is vertex 5. Bit positions in this
//! module are 0-based from the most significant end.
//!
//! Given two distinct vertices `x` and `y`, the vertices that agree with both
//! endpoints wherever the endpoints agree form the unique induced
//! sub-hypercube `Q_d` in which `x` and `y` are antipodal (`d` is their
//! Hamming distance). Switching off every coupling that touches a vertex
//! outside that set leaves a graph whose adjacency matrix is block diagonal,
//! `diag(A(Q_d), 0)`, so the transfer dynamics between `x` and `y` are those
//! of `Q_d` alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest ambient dimension accepted for dense graph work.
pub const MAX_DIMENSION: usize = 16;

/// A vertex of `Q_n`: an `n`-bit string, most significant bit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexLabel {
    index: usize,
    dimension: usize,
}

impl VertexLabel {
    pub fn new(index: usize, dimension: usize) -> Result<Self> {
        check_dimension(dimension)?;
        if index >> dimension != 0 {
            return Err(Error::IndexOutOfRange { index, size: 1 << dimension });
        }
        Ok(Self { index, dimension })
    }

    /// Parses a label for `Q_dimension`.
    ///
    /// A string of exactly `dimension` characters drawn from `{0, 1}` is read
    /// as a bit string; anything else must be a decimal vertex index.
    pub fn parse(text: &str, dimension: usize) -> Result<Self> {
        let text = text.trim();
        if text.len() == dimension && text.bytes().all(|b| b == b'0' || b == b'1') {
            return text.parse::<VertexLabel>();
        }
        let index: usize = text.parse().map_err(|_| Error::InvalidLabel(text.to_string()))?;
        Self::new(index, dimension)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Bit at `position`, counting from the most significant end.
    pub fn bit(&self, position: usize) -> Result<bool> {
        if position >= self.dimension {
            return Err(Error::PositionOutOfRange { position, dimension: self.dimension });
        }
        Ok(bit_at(self.index, position, self.dimension))
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.dimension).map(|p| bit_at(self.index, p, self.dimension)).collect()
    }

    /// The vertex that differs in every position.
    pub fn antipode(&self) -> Self {
        Self { index: !self.index & ((1 << self.dimension) - 1), dimension: self.dimension }
    }
}

impl FromStr for VertexLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.len() > MAX_DIMENSION || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::InvalidLabel(s.to_string()));
        }
        let index = s.bytes().fold(0usize, |acc, b| (acc << 1) | usize::from(b == b'1'));
        Self::new(index, s.len())
    }
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.index, width = self.dimension)
    }
}

impl Serialize for VertexLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VertexLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[inline]
fn bit_at(index: usize, position: usize, dimension: usize) -> bool {
    (index >> (dimension - 1 - position)) & 1 == 1
}

fn check_dimension(n: usize) -> Result<()> {
    if (1..=MAX_DIMENSION).contains(&n) {
        Ok(())
    } else {
        Err(Error::DimensionOutOfRange(n))
    }
}

pub fn hamming_distance(x: &VertexLabel, y: &VertexLabel) -> Result<usize> {
    if x.dimension != y.dimension {
        return Err(Error::LengthMismatch(x.dimension, y.dimension));
    }
    Ok((x.index ^ y.index).count_ones() as usize)
}

/// Undirected graph with real, symmetric edge weights and no self loops.
///
/// Weights are dimensionless, in units of the reference coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    num_vertices: usize,
    weights: BTreeMap<(usize, usize), f64>,
    labels: Option<Vec<VertexLabel>>,
}

impl WeightedGraph {
    pub fn new(num_vertices: usize) -> Self {
        Self { num_vertices, weights: BTreeMap::new(), labels: None }
    }

    /// Builds a graph from `(i, j, weight)` triples. Zero weights are dropped.
    pub fn from_edges(num_vertices: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut g = Self::new(num_vertices);
        for (i, j, w) in edges {
            g.set_weight(i, j, w)?;
        }
        Ok(g)
    }

    /// Path graph `P_len` on vertices `0..len`.
    pub fn path(len: usize) -> Self {
        let mut g = Self::new(len);
        for i in 1..len {
            g.weights.insert((i - 1, i), 1.0);
        }
        g
    }

    pub fn complete(len: usize) -> Self {
        let mut g = Self::new(len);
        for i in 0..len {
            for j in i + 1..len {
                g.weights.insert((i, j), 1.0);
            }
        }
        g
    }

    /// Cartesian product; vertex `(a, b)` gets index `a * other.len + b`.
    pub fn cartesian_product(&self, other: &WeightedGraph) -> WeightedGraph {
        let m = other.num_vertices;
        let mut g = WeightedGraph::new(self.num_vertices * m);
        for (&(i, j), &w) in &self.weights {
            for b in 0..m {
                g.weights.insert((i * m + b, j * m + b), w);
            }
        }
        for a in 0..self.num_vertices {
            for (&(i, j), &w) in &other.weights {
                g.weights.insert((a * m + i, a * m + j), w);
            }
        }
        g
    }

    pub fn with_labels(mut self, labels: Vec<VertexLabel>) -> Result<Self> {
        if labels.len() != self.num_vertices {
            return Err(Error::LengthMismatch(labels.len(), self.num_vertices));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn labels(&self) -> Option<&[VertexLabel]> {
        self.labels.as_deref()
    }

    pub fn set_weight(&mut self, i: usize, j: usize, weight: f64) -> Result<()> {
        let key = self.edge_key(i, j)?;
        if !weight.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite weight on ({i}, {j})")));
        }
        if weight == 0.0 {
            self.weights.remove(&key);
        } else {
            self.weights.insert(key, weight);
        }
        Ok(())
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.weights.get(&key).copied().unwrap_or(0.0)
    }

    /// Edges as `(i, j, weight)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    /// Weighted degree.
    pub fn degree(&self, v: usize) -> f64 {
        self.edges().filter(|&(i, j, _)| i == v || j == v).map(|(_, _, w)| w).sum()
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.num_vertices, self.num_vertices);
        for (i, j, w) in self.edges() {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        a
    }

    pub fn degree_matrix(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.num_vertices, self.num_vertices);
        for (i, j, w) in self.edges() {
            d[(i, i)] += w;
            d[(j, j)] += w;
        }
        d
    }

    /// `L = D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        self.degree_matrix() - self.adjacency()
    }

    /// Subgraph keeping only edges with both endpoints in `keep`.
    pub fn restrict_edges(&self, keep: &BTreeSet<usize>) -> WeightedGraph {
        WeightedGraph {
            num_vertices: self.num_vertices,
            weights: self
                .weights
                .iter()
                .filter(|((i, j), _)| keep.contains(i) && keep.contains(j))
                .map(|(&k, &w)| (k, w))
                .collect(),
            labels: self.labels.clone(),
        }
    }

    fn edge_key(&self, i: usize, j: usize) -> Result<(usize, usize)> {
        for v in [i, j] {
            if v >= self.num_vertices {
                return Err(Error::IndexOutOfRange { index: v, size: self.num_vertices });
            }
        }
        if i == j {
            return Err(Error::InvalidParameter(format!("self loop on vertex {i}")));
        }
        Ok(if i < j { (i, j) } else { (j, i) })
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.num_vertices,
            edges: self.edges().map(|(i, j, w)| (i, j, w)).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let g = Self::from_edges(json.n, json.edges.iter().copied())?;
        match &json.labels {
            Some(l) => g.with_labels(l.clone()),
            None => Ok(g),
        }
    }
}

/// Wire form of a graph: `n` is the vertex count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<VertexLabel>>,
}

/// `Q_n`: `2^n` vertices, unit edges between labels at Hamming distance one.
pub fn make_hypercube(n: usize) -> Result<WeightedGraph> {
    check_dimension(n)?;
    let size = 1usize << n;
    let mut weights = BTreeMap::new();
    for v in 0..size {
        for k in 0..n {
            let w = v ^ (1 << k);
            if v < w {
                weights.insert((v, w), 1.0);
            }
        }
    }
    let labels = (0..size).map(|index| VertexLabel { index, dimension: n }).collect();
    Ok(WeightedGraph { num_vertices: size, weights, labels: Some(labels) })
}

/// The induced sub-hypercube that makes a pair of vertices antipodal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcubeSpec {
    pub ambient_n: usize,
    pub d: usize,
    /// Positions where the endpoints agree, with the shared bit value.
    pub fixed_positions: Vec<(usize, bool)>,
    pub free_positions: Vec<usize>,
    /// Vertices of the sub-hypercube in increasing index order.
    pub vertices: Vec<VertexLabel>,
    pub endpoints: (VertexLabel, VertexLabel),
}

impl SubcubeSpec {
    pub fn vertex_set(&self) -> BTreeSet<usize> {
        self.vertices.iter().map(VertexLabel::index).collect()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.fixed_positions.iter().all(|&(p, b)| bit_at(v, p, self.ambient_n) == b)
    }

    /// Index of `v` inside the standard `Q_d`: its free bits read MSB first.
    pub fn compress(&self, v: usize) -> usize {
        self.free_positions
            .iter()
            .fold(0, |acc, &p| (acc << 1) | usize::from(bit_at(v, p, self.ambient_n)))
    }

    pub fn fixed_mask(&self) -> (Vec<usize>, Vec<bool>) {
        self.fixed_positions.iter().copied().unzip()
    }
}

/// Selects the unique induced `Q_d` of `Q_n` with `x` and `y` antipodal.
pub fn induced_subcube(x: &VertexLabel, y: &VertexLabel) -> Result<SubcubeSpec> {
    let d = hamming_distance(x, y)?;
    if d == 0 {
        return Err(Error::DegeneratePair);
    }
    let n = x.dimension;
    let mut fixed_positions = Vec::new();
    let mut free_positions = Vec::new();
    for p in 0..n {
        let (xb, yb) = (bit_at(x.index, p, n), bit_at(y.index, p, n));
        if xb == yb {
            fixed_positions.push((p, xb));
        } else {
            free_positions.push(p);
        }
    }

    // Scatter every d-bit word into the free positions on top of x's fixed bits.
    let free_mask: usize = free_positions.iter().map(|&p| 1 << (n - 1 - p)).sum();
    let base = x.index & !free_mask;
    let mut vertices: Vec<VertexLabel> = (0..1usize << d)
        .map(|word| {
            let scattered = free_positions
                .iter()
                .enumerate()
                .filter(|&(k, _)| (word >> (d - 1 - k)) & 1 == 1)
                .map(|(_, &p)| 1usize << (n - 1 - p))
                .sum::<usize>();
            VertexLabel { index: base | scattered, dimension: n }
        })
        .collect();
    vertices.sort();

    Ok(SubcubeSpec { ambient_n: n, d, fixed_positions, free_positions, vertices, endpoints: (*x, *y) })
}

/// Classical register holding the label of every vertex of `Q_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryRegister {
    dimension: usize,
    cells: Vec<usize>,
}

impl MemoryRegister {
    pub fn new(dimension: usize) -> Result<Self> {
        check_dimension(dimension)?;
        Ok(Self { dimension, cells: (0..1usize << dimension).collect() })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn word(&self, address: usize) -> Option<VertexLabel> {
        self.cells.get(address).map(|&index| VertexLabel { index, dimension: self.dimension })
    }
}

/// Addresses whose stored word carries `pattern` at `positions`.
pub fn memory_select(register: &MemoryRegister, positions: &[usize], pattern: &[bool]) -> Result<Vec<usize>> {
    if positions.len() != pattern.len() {
        return Err(Error::PatternLength { pattern: pattern.len(), positions: positions.len() });
    }
    let n = register.dimension;
    if let Some(&position) = positions.iter().find(|&&p| p >= n) {
        return Err(Error::PositionOutOfRange { position, dimension: n });
    }
    let mut mask = 0usize;
    let mut want = 0usize;
    for (&p, &b) in positions.iter().zip(pattern) {
        let bit = 1 << (n - 1 - p);
        mask |= bit;
        if b {
            want |= bit;
        }
    }
    Ok(register
        .cells
        .iter()
        .enumerate()
        .filter(|&(_, &word)| word & mask == want)
        .map(|(address, _)| address)
        .collect())
}

/// Switches off every coupling with an endpoint outside the subcube.
///
/// Isolated vertices stay in the graph so the state space keeps `2^n` sites.
pub fn switch(graph: &WeightedGraph, spec: &SubcubeSpec) -> Result<WeightedGraph> {
    check_spec_against(graph, spec)?;
    Ok(graph.restrict_edges(&spec.vertex_set()))
}

fn check_spec_against(graph: &WeightedGraph, spec: &SubcubeSpec) -> Result<()> {
    check_dimension(spec.ambient_n)?;
    let expected = 1usize << spec.ambient_n;
    if graph.num_vertices() != expected {
        return Err(Error::SpecMismatch(format!(
            "graph has {} vertices, subcube lives in Q_{} ({} vertices)",
            graph.num_vertices(),
            spec.ambient_n,
            expected
        )));
    }
    if spec.vertices.len() != 1usize << spec.d || spec.fixed_positions.len() + spec.free_positions.len() != spec.ambient_n {
        return Err(Error::SpecMismatch("subcube spec is internally inconsistent".into()));
    }
    Ok(())
}

/// Checks that, with the subcube vertices ordered first, the adjacency is
/// exactly `diag(A(Q_d), 0)` and the `Q_d` block is the standard hypercube
/// under the free-position relabeling.
pub fn verify_block_structure(switched: &WeightedGraph, spec: &SubcubeSpec) -> bool {
    if check_spec_against(switched, spec).is_err() {
        return false;
    }
    let inside = spec.vertex_set();
    if inside.iter().any(|&v| !spec.contains(v)) {
        return false;
    }
    // Off-block and lower-right block must be empty.
    if switched.edges().any(|(i, j, _)| !(inside.contains(&i) && inside.contains(&j))) {
        return false;
    }
    let members: Vec<usize> = inside.iter().copied().collect();
    for (a, &u) in members.iter().enumerate() {
        for &v in &members[a + 1..] {
            let want = if (spec.compress(u) ^ spec.compress(v)).count_ones() == 1 { 1.0 } else { 0.0 };
            if switched.weight(u, v) != want {
                return false;
            }
        }
    }
    true
}
