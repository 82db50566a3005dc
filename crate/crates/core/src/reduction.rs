//! Reduced error representatives and the catalog of locally reduced sets.
//!
//! A candidate is a subset `𝒜` of one generator's support, stored as a mask
//! over the support in [`HgpCode::generator_support`] order: the low `Δ_C`
//! bits are the VV part `Γ(c)×{v}`, the next `Δ_V` bits the CC part
//! `{c}×Γ(v)`.

use std::cmp::Ordering;

use thiserror::Error;

use crate::gf2::BitVector;
use crate::hgp::{Generator, HgpCode, Qubit, QubitSet};

/// Default bound on `Δ_V + Δ_C` for candidate enumeration.
pub const DEFAULT_DEGREE_CAP: usize = 20;

/// Largest generator count accepted by exact reduction (`2^|𝒢|` togglings).
pub const EXACT_MAX_GENERATORS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("deltaV + deltaC = {degree} exceeds the configured cap {cap}")]
    DegreeCap { degree: usize, cap: usize },
    #[error("exact reduction needs at most {max} generators, code has {found}")]
    TooManyGenerators { found: usize, max: usize },
    #[error("mask {mask:#x} is not a subset of a support of size {width}")]
    MaskOutOfRange { mask: u32, width: usize },
    #[error("generator {0} out of range")]
    GeneratorOutOfRange(Generator),
}

/// A nonempty locally reduced subset of one generator's support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Candidate {
    pub generator: Generator,
    pub mask: u32,
    /// `|𝒜_V|`.
    pub a_v: usize,
    /// `|𝒜_C|`.
    pub a_c: usize,
}

impl Candidate {
    pub fn qubits(&self, code: &HgpCode) -> QubitSet {
        code.generator_support(self.generator)
            .enumerate()
            .filter(|(i, _)| (self.mask >> i) & 1 == 1)
            .map(|(_, q)| q)
            .collect()
    }

    /// `Δ‖𝒜‖ = a_v·Δ_V + a_c·Δ_C`.
    pub fn scaled_norm(&self, code: &HgpCode) -> usize {
        self.a_v * code.delta_v() + self.a_c * code.delta_c()
    }
}

/// One admissible mask shape, shared by every generator of a code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskShape {
    pub mask: u32,
    /// VV part: bit `i` for the `i`-th member of `Γ(c)`.
    pub rows: u32,
    /// CC part: bit `j` for the `j`-th member of `Γ(v)`.
    pub cols: u32,
    pub a_v: usize,
    pub a_c: usize,
    pub scaled_norm: usize,
}

/// All nonempty locally reduced masks for given degrees, ascending.
#[derive(Debug, Clone)]
pub struct MinsetTable {
    delta_v: usize,
    delta_c: usize,
    shapes: Vec<MaskShape>,
}

impl MinsetTable {
    pub fn new(delta_v: usize, delta_c: usize, cap: usize) -> Result<Self, ReductionError> {
        let width = delta_v + delta_c;
        if width > cap || width > 31 {
            return Err(ReductionError::DegreeCap { degree: width, cap });
        }
        let row_bits = (1u32 << delta_c) - 1;
        let shapes = (1u32..(1u32 << width))
            .filter(|&mask| 2 * mask.count_ones() as usize <= width)
            .map(|mask| {
                let rows = mask & row_bits;
                let cols = mask >> delta_c;
                let a_v = rows.count_ones() as usize;
                let a_c = cols.count_ones() as usize;
                MaskShape {
                    mask,
                    rows,
                    cols,
                    a_v,
                    a_c,
                    scaled_norm: a_v * delta_v + a_c * delta_c,
                }
            })
            .collect();
        Ok(MinsetTable { delta_v, delta_c, shapes })
    }

    pub fn for_code(code: &HgpCode, cap: usize) -> Result<Self, ReductionError> {
        Self::new(code.delta_v(), code.delta_c(), cap)
    }

    pub fn shapes(&self) -> &[MaskShape] {
        &self.shapes
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn delta_v(&self) -> usize {
        self.delta_v
    }

    pub fn delta_c(&self) -> usize {
        self.delta_c
    }
}

/// `|𝒜_V| + |𝒜_C| ≤ (Δ_V + Δ_C)/2`, compared exactly.
pub fn is_locally_reduced(code: &HgpCode, z: Generator, mask: u32) -> Result<bool, ReductionError> {
    if !code.is_valid_generator(z) {
        return Err(ReductionError::GeneratorOutOfRange(z));
    }
    let width = code.delta_v() + code.delta_c();
    if width < 32 && mask >> width != 0 {
        return Err(ReductionError::MaskOutOfRange { mask, width });
    }
    Ok(2 * mask.count_ones() as usize <= width)
}

/// Every nonempty locally reduced subset of `supp(z)`, in ascending mask order.
pub fn enumerate_minsets(code: &HgpCode, z: Generator, cap: usize) -> Result<impl Iterator<Item = Candidate>, ReductionError> {
    if !code.is_valid_generator(z) {
        return Err(ReductionError::GeneratorOutOfRange(z));
    }
    let table = MinsetTable::for_code(code, cap)?;
    Ok(table.shapes.into_iter().map(move |s| Candidate {
        generator: z,
        mask: s.mask,
        a_v: s.a_v,
        a_c: s.a_c,
    }))
}

/// How to pick a low-weight representative of `E + span(generator supports)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionMode {
    /// Global minimum over all generator togglings; ties go to the
    /// lexicographically smallest sorted qubit-index sequence.
    Exact,
    /// Toggle generators while doing so strictly lowers the weight.
    Greedy,
}

/// Returns a reduced representative of the coset of `e`.
pub fn reduce_error(code: &HgpCode, e: &QubitSet, mode: ReductionMode) -> Result<QubitSet, ReductionError> {
    match mode {
        ReductionMode::Exact => reduce_exact(code, e),
        ReductionMode::Greedy => Ok(reduce_greedy(code, e)),
    }
}

/// `Ordering` of two equal-length bit sets by sorted index sequence.
fn lex_cmp(a: &BitVector, b: &BitVector) -> Ordering {
    for (x, y) in a.words().iter().zip(b.words()) {
        let d = x ^ y;
        if d != 0 {
            let low = d & d.wrapping_neg();
            return if x & low != 0 { Ordering::Less } else { Ordering::Greater };
        }
    }
    Ordering::Equal
}

fn reduce_exact(code: &HgpCode, e: &QubitSet) -> Result<QubitSet, ReductionError> {
    let gens = code.num_generators();
    if gens > EXACT_MAX_GENERATORS {
        return Err(ReductionError::TooManyGenerators {
            found: gens,
            max: EXACT_MAX_GENERATORS,
        });
    }
    let supports: Vec<BitVector> = (0..gens)
        .map(|i| code.to_bitvector(&code.generator_support(code.generator_at(i)).collect()))
        .collect();
    let mut current = code.to_bitvector(e);
    let mut best = current.clone();
    let mut best_weight = best.weight();
    // Gray code: step k toggles generator trailing_zeros(k).
    for step in 1u64..(1u64 << gens) {
        let g = step.trailing_zeros() as usize;
        current.xor_assign(&supports[g]).expect("same length");
        let w = current.weight();
        if w < best_weight || (w == best_weight && lex_cmp(&current, &best) == Ordering::Less) {
            best = current.clone();
            best_weight = w;
        }
    }
    Ok(code.from_bitvector(&best))
}

fn reduce_greedy(code: &HgpCode, e: &QubitSet) -> QubitSet {
    let mut e = e.clone();
    let width = code.delta_v() + code.delta_c();
    loop {
        let mut touched: Vec<Generator> = e.iter().flat_map(|q| code.qubit_generators(q)).collect();
        touched.sort_unstable_by_key(|&z| code.generator_index(z));
        touched.dedup();
        let improving = touched.into_iter().find(|&z| {
            let overlap = code.generator_support(z).filter(|&q| e.contains(q)).count();
            2 * overlap > width
        });
        match improving {
            Some(z) => {
                let supp: Vec<Qubit> = code.generator_support(z).collect();
                for q in supp {
                    e.toggle(q);
                }
            }
            None => return e,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_biregular;

    fn code(n: usize, dv: usize, dc: usize, seed: u64) -> HgpCode {
        HgpCode::new(gen_biregular(n, dv, dc, seed).unwrap())
    }

    #[test]
    fn local_reduction_examples() {
        let c = code(12, 3, 6, 0);
        let z = Generator(0, 0);
        // two VV bits and two CC bits
        assert!(is_locally_reduced(&c, z, 0b000011 | (0b011 << 6)).unwrap());
        assert!(!is_locally_reduced(&c, z, 0b000111 | (0b011 << 6)).unwrap());
        assert!(is_locally_reduced(&c, z, 0).unwrap());
        assert!(is_locally_reduced(&c, z, 1 << 9).is_err());
        assert!(is_locally_reduced(&c, Generator(6, 0), 1).is_err());
    }

    #[test]
    fn minsets_of_small_codes() {
        let path = code(2, 1, 2, 0);
        let cands: Vec<Candidate> = enumerate_minsets(&path, Generator(0, 0), DEFAULT_DEGREE_CAP).unwrap().collect();
        assert_eq!(cands.iter().map(|c| c.mask).collect::<Vec<_>>(), vec![0b001, 0b010, 0b100]);

        let edge = code(1, 1, 1, 0);
        let cands: Vec<Candidate> = enumerate_minsets(&edge, Generator(0, 0), DEFAULT_DEGREE_CAP).unwrap().collect();
        assert_eq!(cands.len(), 2);

        let c = code(12, 3, 6, 0);
        let n = enumerate_minsets(&c, Generator(0, 0), DEFAULT_DEGREE_CAP).unwrap().count();
        assert_eq!(n, 9 + 36 + 84 + 126);
        assert!(n <= 1 << 9);
        assert!(matches!(
            enumerate_minsets(&c, Generator(0, 0), 8),
            Err(ReductionError::DegreeCap { .. })
        ));
    }

    #[test]
    fn candidate_qubits_follow_support_order() {
        let c = code(12, 3, 6, 0);
        let z = Generator(2, 5);
        let supp: Vec<Qubit> = c.generator_support(z).collect();
        let cand = Candidate {
            generator: z,
            mask: 0b1 | (0b10 << 6),
            a_v: 1,
            a_c: 1,
        };
        let q = cand.qubits(&c);
        assert!(q.contains(supp[0]) && q.contains(supp[7]));
        assert_eq!(q.len(), 2);
        assert!(matches!(supp[0], Qubit::VV(_, 5)));
        assert!(matches!(supp[7], Qubit::CC(2, _)));
    }

    #[test]
    fn product_bound_fails_only_for_skewed_degrees() {
        // a*b <= (a*dv + b*dc)/4 over locally reduced shapes. The bound breaks
        // when one degree is much larger than the other.
        let mut broken = Vec::new();
        for dv in 1..=11 {
            for dc in 1..=(12 - dv) {
                let t = MinsetTable::new(dv, dc, DEFAULT_DEGREE_CAP).unwrap();
                if t.shapes().iter().any(|s| 4 * s.a_v * s.a_c > s.scaled_norm) {
                    broken.push((dv.min(dc), dv.max(dc)));
                }
            }
        }
        broken.sort_unstable();
        broken.dedup();
        let expected = vec![(1, 5), (1, 7), (1, 8), (1, 9), (1, 10), (1, 11), (2, 8), (2, 10), (3, 7), (3, 9)];
        assert_eq!(broken, expected);
        for (dv, dc) in [(3, 6), (4, 4), (2, 4), (4, 8), (5, 7)] {
            let t = MinsetTable::new(dv, dc, DEFAULT_DEGREE_CAP).unwrap();
            assert!(t.shapes().iter().all(|s| 4 * s.a_v * s.a_c <= s.scaled_norm), "({dv},{dc})");
        }
    }

    #[test]
    fn exact_reduction_examples() {
        let c = code(2, 1, 2, 0);
        let supp = c.supp_generator(Generator(0, 1)).unwrap();
        assert!(reduce_error(&c, &supp, ReductionMode::Exact).unwrap().is_empty());
        let single: QubitSet = [Qubit::CC(0, 0)].into_iter().collect();
        assert_eq!(reduce_error(&c, &single, ReductionMode::Exact).unwrap(), single);
        let big = code(12, 3, 6, 0);
        assert!(matches!(
            reduce_error(&big, &single, ReductionMode::Exact),
            Err(ReductionError::TooManyGenerators { .. })
        ));
    }

    #[test]
    fn greedy_removes_majority_of_a_support() {
        let c = code(12, 3, 6, 0);
        let z = Generator(1, 3);
        let supp: Vec<Qubit> = c.generator_support(z).collect();
        let e: QubitSet = supp[..5].iter().copied().collect();
        let r = reduce_error(&c, &e, ReductionMode::Greedy).unwrap();
        assert_eq!(r, supp[5..].iter().copied().collect());
        assert_eq!(c.syndrome(&r), c.syndrome(&e));
    }

    #[test]
    fn lex_order_of_bitsets() {
        let a = BitVector::from_bits(&[1, 0, 1, 0]);
        let b = BitVector::from_bits(&[0, 1, 1, 0]);
        assert_eq!(lex_cmp(&a, &b), Ordering::Less);
        assert_eq!(lex_cmp(&b, &a), Ordering::Greater);
        assert_eq!(lex_cmp(&a, &a), Ordering::Equal);
    }
}
