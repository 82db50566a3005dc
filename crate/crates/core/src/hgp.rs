//! Hypergraph product codes built from one biregular base graph `G`.
//!
//! Qubits live on `V₁×V₂ ⊔ C₁×C₂`, X parity checks on `V₁×C₂` and Z
//! generators on `C₁×V₂`. Adjacency is never materialized: every
//! neighborhood is read off the base graph.
//!
//! Index layout:
//! * qubit `(ν₁, v₂) ∈ V×V` ↦ `ν₁·n + v₂`; qubit `(c₁, ζ₂) ∈ C×C` ↦ `n² + c₁·m + ζ₂`
//! * check `(ν₁, ζ₂)` ↦ `ν₁·m + ζ₂`
//! * generator `(c₁, v₂)` ↦ `c₁·n + v₂`

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::gf2::{self, BitMatrix, BitVector, RowSpace};
use crate::graph::BipartiteGraph;
use crate::Rational;

/// Codes up to this many qubits get a cached generator row space for exact
/// coset checks.
pub const COSET_ORACLE_MAX_QUBITS: usize = 5_000;

/// Base graphs up to this many left vertices get a brute-force design distance.
pub const DESIGN_DISTANCE_MAX_N: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("qubit {0} out of range")]
    QubitOutOfRange(Qubit),
    #[error("check {0} out of range")]
    CheckOutOfRange(Check),
    #[error("generator {0} out of range")]
    GeneratorOutOfRange(Generator),
}

/// A qubit, identified by its coordinates in one of the two blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Qubit {
    /// `(ν₁, v₂) ∈ V₁×V₂`.
    VV(usize, usize),
    /// `(c₁, ζ₂) ∈ C₁×C₂`.
    CC(usize, usize),
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Qubit::VV(a, b) => write!(f, "VV {a} {b}"),
            Qubit::CC(a, b) => write!(f, "CC {a} {b}"),
        }
    }
}

/// An X parity check `(ν₁, ζ₂) ∈ V₁×C₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Check(pub usize, pub usize);

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

/// A Z generator `(c₁, v₂) ∈ C₁×V₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Generator(pub usize, pub usize);

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

/// A set of qubits, kept as its VV and CC parts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct QubitSet {
    vv: BTreeSet<(usize, usize)>,
    cc: BTreeSet<(usize, usize)>,
}

impl QubitSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, q: Qubit) -> bool {
        match q {
            Qubit::VV(a, b) => self.vv.insert((a, b)),
            Qubit::CC(a, b) => self.cc.insert((a, b)),
        }
    }

    pub fn remove(&mut self, q: Qubit) -> bool {
        match q {
            Qubit::VV(a, b) => self.vv.remove(&(a, b)),
            Qubit::CC(a, b) => self.cc.remove(&(a, b)),
        }
    }

    /// Adds `q` if absent, removes it otherwise.
    pub fn toggle(&mut self, q: Qubit) {
        if !self.insert(q) {
            self.remove(q);
        }
    }

    pub fn contains(&self, q: Qubit) -> bool {
        match q {
            Qubit::VV(a, b) => self.vv.contains(&(a, b)),
            Qubit::CC(a, b) => self.cc.contains(&(a, b)),
        }
    }

    pub fn len(&self) -> usize {
        self.vv.len() + self.cc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vv.is_empty() && self.cc.is_empty()
    }

    /// `|S_V|`.
    pub fn len_v(&self) -> usize {
        self.vv.len()
    }

    /// `|S_C|`.
    pub fn len_c(&self) -> usize {
        self.cc.len()
    }

    pub fn vv_part(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.vv.iter().copied()
    }

    pub fn cc_part(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cc.iter().copied()
    }

    /// VV qubits first, each block in coordinate order.
    pub fn iter(&self) -> impl Iterator<Item = Qubit> + '_ {
        self.vv
            .iter()
            .map(|&(a, b)| Qubit::VV(a, b))
            .chain(self.cc.iter().map(|&(a, b)| Qubit::CC(a, b)))
    }

    pub fn symmetric_difference(&self, other: &QubitSet) -> QubitSet {
        QubitSet {
            vv: self.vv.symmetric_difference(&other.vv).copied().collect(),
            cc: self.cc.symmetric_difference(&other.cc).copied().collect(),
        }
    }

    pub fn union(&self, other: &QubitSet) -> QubitSet {
        QubitSet {
            vv: self.vv.union(&other.vv).copied().collect(),
            cc: self.cc.union(&other.cc).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &QubitSet) -> bool {
        self.vv.is_subset(&other.vv) && self.cc.is_subset(&other.cc)
    }

    pub fn is_disjoint(&self, other: &QubitSet) -> bool {
        self.vv.is_disjoint(&other.vv) && self.cc.is_disjoint(&other.cc)
    }
}

impl FromIterator<Qubit> for QubitSet {
    fn from_iter<I: IntoIterator<Item = Qubit>>(iter: I) -> Self {
        let mut s = QubitSet::new();
        for q in iter {
            s.insert(q);
        }
        s
    }
}

impl Extend<Qubit> for QubitSet {
    fn extend<I: IntoIterator<Item = Qubit>>(&mut self, iter: I) {
        for q in iter {
            self.insert(q);
        }
    }
}

/// A set of X parity checks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct CheckSet {
    members: BTreeSet<Check>,
}

impl CheckSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: Check) -> bool {
        self.members.insert(c)
    }

    pub fn contains(&self, c: Check) -> bool {
        self.members.contains(&c)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Check> + '_ {
        self.members.iter().copied()
    }

    pub fn union(&self, other: &CheckSet) -> CheckSet {
        CheckSet {
            members: self.members.union(&other.members).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &CheckSet) -> bool {
        self.members.is_subset(&other.members)
    }
}

impl FromIterator<Check> for CheckSet {
    fn from_iter<I: IntoIterator<Item = Check>>(iter: I) -> Self {
        CheckSet {
            members: iter.into_iter().collect(),
        }
    }
}

/// Classical distance of one of the two base codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Distance {
    Finite(usize),
    /// The code has dimension zero.
    Infinite,
}

/// Which coordinate a [`project`](HgpCode::project) reads off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// `S(ν₁) ⊂ V₂`: second coordinates of VV qubits in row `ν₁`.
    AtV1(usize),
    /// `S(v₂) ⊂ V₁`: first coordinates of VV qubits in column `v₂`.
    AtV2(usize),
    /// `S(c₁) ⊂ C₂`: second coordinates of CC qubits in row `c₁`.
    AtC1(usize),
    /// `S(ζ₂) ⊂ C₁`: first coordinates of CC qubits in column `ζ₂`.
    AtC2(usize),
    /// `S_{V₁}`, union of all `S(v₂)`.
    V1,
    /// `S_{V₂}`, union of all `S(ν₁)`.
    V2,
    /// `S_{C₁}`, union of all `S(ζ₂)`.
    C1,
    /// `S_{C₂}`, union of all `S(c₁)`.
    C2,
}

/// A hypergraph product code.
#[derive(Debug, Clone)]
pub struct HgpCode {
    graph: BipartiteGraph,
    k: usize,
    base_rank: usize,
    design_distance: Option<Distance>,
    coset_space: OnceLock<Option<RowSpace>>,
}

impl PartialEq for HgpCode {
    fn eq(&self, other: &Self) -> bool {
        self.graph == other.graph
    }
}

impl Eq for HgpCode {}

fn min_codeword_weight(h: &BitMatrix) -> Distance {
    let n = h.cols();
    let mut best: Option<usize> = None;
    for mask in 1u64..(1u64 << n) {
        let w = mask.count_ones() as usize;
        if best.is_some_and(|b| w >= b) {
            continue;
        }
        let x = BitVector::from_support(n, (0..n).filter(|i| (mask >> i) & 1 == 1)).expect("in range");
        if h.mul_vec(&x).expect("shape").is_zero() {
            best = Some(w);
        }
    }
    best.map_or(Distance::Infinite, Distance::Finite)
}

impl HgpCode {
    /// Builds the product code of `graph` with itself.
    pub fn new(graph: BipartiteGraph) -> Self {
        let h = base_parity_matrix(&graph);
        let base_rank = gf2::rank(&h);
        let k = graph.n() - base_rank;
        let k_t = graph.m() - base_rank;
        let design_distance = (graph.n() <= DESIGN_DISTANCE_MAX_N).then(|| {
            let d = min_codeword_weight(&h);
            let d_t = min_codeword_weight(&h.transpose());
            d.min(d_t)
        });
        HgpCode {
            graph,
            k: k * k + k_t * k_t,
            base_rank,
            design_distance,
            coset_space: OnceLock::new(),
        }
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn m(&self) -> usize {
        self.graph.m()
    }

    pub fn delta_v(&self) -> usize {
        self.graph.delta_v()
    }

    pub fn delta_c(&self) -> usize {
        self.graph.delta_c()
    }

    /// `Δ = Δ_V·Δ_C`.
    pub fn delta(&self) -> usize {
        self.delta_v() * self.delta_c()
    }

    /// `N = n² + m²`.
    pub fn num_qubits(&self) -> usize {
        self.n() * self.n() + self.m() * self.m()
    }

    pub fn num_checks(&self) -> usize {
        self.n() * self.m()
    }

    pub fn num_generators(&self) -> usize {
        self.m() * self.n()
    }

    /// Number of logical qubits, `k² + k̃²` with `k = n - rank H` and
    /// `k̃ = m - rank H`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// GF(2) rank of the base parity-check matrix.
    pub fn base_rank(&self) -> usize {
        self.base_rank
    }

    /// `min(d, d̃)` by brute force, present only for small base graphs.
    pub fn design_distance_hint(&self) -> Option<Distance> {
        self.design_distance
    }

    /// The code with checks and generators exchanged, obtained from the
    /// transposed base graph. Decoding X errors on `self` is decoding Z
    /// errors on the dual.
    pub fn dual(&self) -> HgpCode {
        HgpCode::new(self.graph.transpose())
    }

    /// Maps a qubit of the dual code to the same physical qubit of `self`.
    pub fn qubit_from_dual(&self, q: Qubit) -> Qubit {
        match q {
            Qubit::VV(a, b) => Qubit::CC(a, b),
            Qubit::CC(a, b) => Qubit::VV(a, b),
        }
    }

    // ---- index maps -------------------------------------------------------

    pub fn is_valid_qubit(&self, q: Qubit) -> bool {
        match q {
            Qubit::VV(a, b) => a < self.n() && b < self.n(),
            Qubit::CC(a, b) => a < self.m() && b < self.m(),
        }
    }

    pub fn is_valid_check(&self, c: Check) -> bool {
        c.0 < self.n() && c.1 < self.m()
    }

    pub fn is_valid_generator(&self, z: Generator) -> bool {
        z.0 < self.m() && z.1 < self.n()
    }

    pub fn validate_qubits(&self, s: &QubitSet) -> Result<(), CodeError> {
        match s.iter().find(|&q| !self.is_valid_qubit(q)) {
            Some(q) => Err(CodeError::QubitOutOfRange(q)),
            None => Ok(()),
        }
    }

    pub fn validate_checks(&self, s: &CheckSet) -> Result<(), CodeError> {
        match s.iter().find(|&c| !self.is_valid_check(c)) {
            Some(c) => Err(CodeError::CheckOutOfRange(c)),
            None => Ok(()),
        }
    }

    #[inline]
    pub fn qubit_index(&self, q: Qubit) -> usize {
        let n = self.n();
        match q {
            Qubit::VV(a, b) => a * n + b,
            Qubit::CC(a, b) => n * n + a * self.m() + b,
        }
    }

    #[inline]
    pub fn qubit_at(&self, index: usize) -> Qubit {
        let n = self.n();
        if index < n * n {
            Qubit::VV(index / n, index % n)
        } else {
            let i = index - n * n;
            Qubit::CC(i / self.m(), i % self.m())
        }
    }

    #[inline]
    pub fn check_index(&self, c: Check) -> usize {
        c.0 * self.m() + c.1
    }

    #[inline]
    pub fn check_at(&self, index: usize) -> Check {
        Check(index / self.m(), index % self.m())
    }

    #[inline]
    pub fn generator_index(&self, z: Generator) -> usize {
        z.0 * self.n() + z.1
    }

    #[inline]
    pub fn generator_at(&self, index: usize) -> Generator {
        Generator(index / self.n(), index % self.n())
    }

    // ---- supports and neighborhoods ---------------------------------------

    /// `supp(z)` for `z ∼ (c, v)`: `Γ(c)×{v} ∪ {c}×Γ(v)`, VV part first in
    /// base-adjacency order. This ordering defines candidate mask bits.
    pub fn generator_support(&self, z: Generator) -> impl Iterator<Item = Qubit> + '_ {
        let Generator(c, v) = z;
        self.graph
            .nbrs_c(c)
            .iter()
            .map(move |&nu| Qubit::VV(nu, v))
            .chain(self.graph.nbrs_v(v).iter().map(move |&zeta| Qubit::CC(c, zeta)))
    }

    /// `supp(χ)` for `χ ∼ (ν, ζ)`: `{ν}×Γ(ζ) ∪ Γ(ν)×{ζ}`.
    pub fn check_support(&self, chk: Check) -> impl Iterator<Item = Qubit> + '_ {
        let Check(nu, zeta) = chk;
        self.graph
            .nbrs_c(zeta)
            .iter()
            .map(move |&v| Qubit::VV(nu, v))
            .chain(self.graph.nbrs_v(nu).iter().map(move |&c| Qubit::CC(c, zeta)))
    }

    pub fn supp_generator(&self, z: Generator) -> Result<QubitSet, CodeError> {
        if !self.is_valid_generator(z) {
            return Err(CodeError::GeneratorOutOfRange(z));
        }
        Ok(self.generator_support(z).collect())
    }

    pub fn supp_check(&self, chk: Check) -> Result<QubitSet, CodeError> {
        if !self.is_valid_check(chk) {
            return Err(CodeError::CheckOutOfRange(chk));
        }
        Ok(self.check_support(chk).collect())
    }

    /// `Γ_Q(q)`: `{ν}×Γ(v)` for a VV qubit, `Γ(c)×{ζ}` for a CC qubit.
    #[inline]
    pub fn qubit_checks(&self, q: Qubit) -> QubitChecks<'_> {
        match q {
            Qubit::VV(nu, v) => QubitChecks::Row { nu, zetas: self.graph.nbrs_v(v).iter() },
            Qubit::CC(c, zeta) => QubitChecks::Col { zeta, nus: self.graph.nbrs_c(c).iter() },
        }
    }

    /// Generators whose support contains `q`.
    pub fn qubit_generators(&self, q: Qubit) -> Vec<Generator> {
        match q {
            Qubit::VV(nu, v) => self.graph.nbrs_v(nu).iter().map(|&c| Generator(c, v)).collect(),
            Qubit::CC(c, zeta) => self.graph.nbrs_c(zeta).iter().map(|&v| Generator(c, v)).collect(),
        }
    }

    /// Generators whose local view `Γ(c)×Γ(v)` contains `chk`.
    pub fn check_generators(&self, chk: Check) -> impl Iterator<Item = Generator> + '_ {
        let Check(nu, zeta) = chk;
        let vs = self.graph.nbrs_c(zeta);
        self.graph
            .nbrs_v(nu)
            .iter()
            .flat_map(move |&c| vs.iter().map(move |&v| Generator(c, v)))
    }

    fn incidences(&self, s: &QubitSet) -> Vec<Check> {
        let mut all: Vec<Check> = s.iter().flat_map(|q| self.qubit_checks(q)).collect();
        all.sort_unstable();
        all
    }

    /// `Γ_Q(S)`.
    pub fn qnbhd(&self, s: &QubitSet) -> CheckSet {
        let mut all = self.incidences(s);
        all.dedup();
        all.into_iter().collect()
    }

    /// `Γ_Q^u(S)`: checks incident to exactly one qubit of `S`.
    pub fn qnbhd_unique(&self, s: &QubitSet) -> CheckSet {
        let all = self.incidences(s);
        runs(&all).filter(|&(_, k)| k == 1).map(|(c, _)| c).collect()
    }

    /// Syndrome `σ`: checks with odd overlap with `E`.
    pub fn syndrome(&self, e: &QubitSet) -> CheckSet {
        let all = self.incidences(e);
        runs(&all).filter(|&(_, k)| k % 2 == 1).map(|(c, _)| c).collect()
    }

    /// Projections of a qubit set onto one factor graph.
    pub fn project(&self, s: &QubitSet, axis: Projection) -> BTreeSet<usize> {
        match axis {
            Projection::AtV1(nu) => s.vv_part().filter(|&(a, _)| a == nu).map(|(_, b)| b).collect(),
            Projection::AtV2(v) => s.vv_part().filter(|&(_, b)| b == v).map(|(a, _)| a).collect(),
            Projection::AtC1(c) => s.cc_part().filter(|&(a, _)| a == c).map(|(_, b)| b).collect(),
            Projection::AtC2(zeta) => s.cc_part().filter(|&(_, b)| b == zeta).map(|(a, _)| a).collect(),
            Projection::V1 => s.vv_part().map(|(a, _)| a).collect(),
            Projection::V2 => s.vv_part().map(|(_, b)| b).collect(),
            Projection::C1 => s.cc_part().map(|(a, _)| a).collect(),
            Projection::C2 => s.cc_part().map(|(_, b)| b).collect(),
        }
    }

    /// `‖S‖ = |S_V|/Δ_C + |S_C|/Δ_V`.
    pub fn weighted_norm(&self, s: &QubitSet) -> Rational {
        Rational::new(s.len_v() as i64, self.delta_c() as i64) + Rational::new(s.len_c() as i64, self.delta_v() as i64)
    }

    /// `Δ‖S‖ = |S_V|·Δ_V + |S_C|·Δ_C`, always an integer.
    pub fn scaled_norm(&self, s: &QubitSet) -> usize {
        s.len_v() * self.delta_v() + s.len_c() * self.delta_c()
    }

    // ---- dense matrices (small codes) -------------------------------------

    /// Dense X parity-check matrix, one row per check index.
    pub fn parity_check_matrix(&self) -> BitMatrix {
        let mut h = BitMatrix::zeros(self.num_checks(), self.num_qubits());
        for r in 0..self.num_checks() {
            for q in self.check_support(self.check_at(r)) {
                h.set_unchecked(r, self.qubit_index(q), true);
            }
        }
        h
    }

    /// Dense Z generator matrix, one row per generator index.
    pub fn generator_matrix(&self) -> BitMatrix {
        let mut g = BitMatrix::zeros(self.num_generators(), self.num_qubits());
        for r in 0..self.num_generators() {
            for q in self.generator_support(self.generator_at(r)) {
                g.set_unchecked(r, self.qubit_index(q), true);
            }
        }
        g
    }

    pub fn to_bitvector(&self, s: &QubitSet) -> BitVector {
        let mut v = BitVector::zeros(self.num_qubits());
        for q in s.iter() {
            v.set_unchecked(self.qubit_index(q), true);
        }
        v
    }

    pub fn from_bitvector(&self, v: &BitVector) -> QubitSet {
        v.support().into_iter().map(|i| self.qubit_at(i)).collect()
    }

    /// Row space of the generator supports, cached. `None` when the code is
    /// above [`COSET_ORACLE_MAX_QUBITS`].
    pub fn coset_space(&self) -> Option<&RowSpace> {
        self.coset_space
            .get_or_init(|| (self.num_qubits() <= COSET_ORACLE_MAX_QUBITS).then(|| RowSpace::new(&self.generator_matrix())))
            .as_ref()
    }

    /// Same as [`coset_space`](Self::coset_space) but builds the row space at
    /// any size. Elimination is cubic in the code size.
    pub fn coset_space_forced(&self) -> RowSpace {
        match self.coset_space() {
            Some(r) => r.clone(),
            None => RowSpace::new(&self.generator_matrix()),
        }
    }
}

/// Dense `m x n` parity matrix of the base graph.
pub fn base_parity_matrix(g: &BipartiteGraph) -> BitMatrix {
    let mut h = BitMatrix::zeros(g.m(), g.n());
    for c in 0..g.m() {
        for &v in g.nbrs_c(c) {
            h.set_unchecked(c, v, true);
        }
    }
    h
}

/// Checks adjacent to one qubit.
pub enum QubitChecks<'a> {
    Row { nu: usize, zetas: std::slice::Iter<'a, usize> },
    Col { zeta: usize, nus: std::slice::Iter<'a, usize> },
}

impl Iterator for QubitChecks<'_> {
    type Item = Check;

    #[inline]
    fn next(&mut self) -> Option<Check> {
        match self {
            QubitChecks::Row { nu, zetas } => zetas.next().map(|&z| Check(*nu, z)),
            QubitChecks::Col { zeta, nus } => nus.next().map(|&n| Check(n, *zeta)),
        }
    }
}

/// `(value, multiplicity)` runs of a sorted slice.
fn runs<T: Copy + PartialEq>(sorted: &[T]) -> impl Iterator<Item = (T, usize)> + '_ {
    let mut i = 0;
    std::iter::from_fn(move || {
        if i >= sorted.len() {
            return None;
        }
        let x = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let k = j - i;
        i = j;
        Some((x, k))
    })
}
