//! Classical expander codes: syndromes, Viderman's Find, and erasure decoding.

use std::collections::{BTreeSet, VecDeque};

use num_integer::Integer;
use thiserror::Error;

use crate::gf2::{self, BitMatrix, BitVector, Gf2Error};
use crate::graph::BipartiteGraph;
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassicalError {
    #[error("word length {found} does not match code length {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("check {0} out of range")]
    CheckOutOfRange(usize),
    #[error("bit {0} out of range")]
    BitOutOfRange(usize),
    #[error("epsilon must satisfy 0 <= eps < 1/2, got {0}")]
    BadEpsilon(Rational),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// Why an erasure decode did not produce a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErasureFailure {
    /// No codeword agrees with the unerased positions.
    Inconsistent,
    /// Several codewords agree with the unerased positions.
    Ambiguous,
}

/// The expander code of a bipartite graph: `V` are bits, `C` are parity checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalCode {
    graph: BipartiteGraph,
}

/// Envelope and suspicious checks produced by [`ClassicalCode::find`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FindResult {
    /// Envelope `L`, ascending.
    pub envelope: Vec<usize>,
    /// Suspicious checks `R = σ ∪ Γ(L)`, ascending.
    pub suspicious: Vec<usize>,
    pub iterations: usize,
    /// Bits in the order they entered the envelope.
    pub order: Vec<usize>,
}

/// `⌈(1 - 2ε)Δ⌉`, the integer form of Find's vote threshold.
pub fn find_threshold(epsilon: Rational, degree: usize) -> usize {
    let one = Rational::from_integer(1);
    let h = (one - epsilon * 2) * Rational::from_integer(degree as i64);
    h.numer().div_ceil(h.denom()).max(0) as usize
}

impl ClassicalCode {
    pub fn new(graph: BipartiteGraph) -> Self {
        ClassicalCode { graph }
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.graph.n()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.n() == 0
    }

    /// Dense `m x n` parity-check matrix.
    pub fn parity_check_matrix(&self) -> BitMatrix {
        let g = &self.graph;
        let mut h = BitMatrix::zeros(g.m(), g.n());
        for c in 0..g.m() {
            for &v in g.nbrs_c(c) {
                h.set_unchecked(c, v, true);
            }
        }
        h
    }

    /// Unsatisfied checks of `word`, ascending.
    pub fn syndrome(&self, word: &BitVector) -> Result<Vec<usize>, ClassicalError> {
        if word.len() != self.len() {
            return Err(ClassicalError::LengthMismatch {
                expected: self.len(),
                found: word.len(),
            });
        }
        Ok((0..self.graph.m())
            .filter(|&c| self.graph.nbrs_c(c).iter().filter(|&&v| word.bit(v)).count() % 2 == 1)
            .collect())
    }

    /// Viderman's Find. A bit joins the envelope once at least
    /// `⌈(1-2ε_V)Δ_V⌉` of its checks are suspicious; ties go to the smallest
    /// bit index.
    pub fn find(&self, syndrome: &[usize], epsilon_v: Rational) -> Result<FindResult, ClassicalError> {
        let zero = Rational::from_integer(0);
        if epsilon_v < zero || epsilon_v >= Rational::new(1, 2) {
            return Err(ClassicalError::BadEpsilon(epsilon_v));
        }
        let g = &self.graph;
        if let Some(&c) = syndrome.iter().find(|&&c| c >= g.m()) {
            return Err(ClassicalError::CheckOutOfRange(c));
        }
        let h = find_threshold(epsilon_v, g.delta_v());

        let mut in_r = vec![false; g.m()];
        let mut in_l = vec![false; g.n()];
        let mut votes = vec![0usize; g.n()];
        let mut ready = BTreeSet::new();

        let mark = |c: usize, in_r: &mut [bool], votes: &mut [usize], ready: &mut BTreeSet<usize>, in_l: &[bool]| {
            if in_r[c] {
                return;
            }
            in_r[c] = true;
            for &v in g.nbrs_c(c) {
                votes[v] += 1;
                if votes[v] >= h && !in_l[v] {
                    ready.insert(v);
                }
            }
        };
        for &c in syndrome {
            mark(c, &mut in_r, &mut votes, &mut ready, &in_l);
        }
        let mut order = Vec::new();
        while let Some(v) = ready.pop_first() {
            in_l[v] = true;
            order.push(v);
            for &c in g.nbrs_v(v) {
                mark(c, &mut in_r, &mut votes, &mut ready, &in_l);
            }
        }
        let mut envelope = order.clone();
        envelope.sort_unstable();
        Ok(FindResult {
            iterations: order.len(),
            envelope,
            suspicious: (0..g.m()).filter(|&c| in_r[c]).collect(),
            order,
        })
    }

    /// Recovers the erased positions of `word`. Peels checks with a single
    /// erased bit first, then solves whatever is left as a linear system.
    pub fn erase_decode(&self, word: &BitVector, erasures: &[usize]) -> Result<Result<BitVector, ErasureFailure>, ClassicalError> {
        let g = &self.graph;
        if word.len() != g.n() {
            return Err(ClassicalError::LengthMismatch {
                expected: g.n(),
                found: word.len(),
            });
        }
        if let Some(&v) = erasures.iter().find(|&&v| v >= g.n()) {
            return Err(ClassicalError::BitOutOfRange(v));
        }
        let mut out = word.clone();
        let mut erased = vec![false; g.n()];
        for &v in erasures {
            erased[v] = true;
            out.set_unchecked(v, false);
        }
        let mut pending: Vec<usize> = (0..g.m())
            .map(|c| g.nbrs_c(c).iter().filter(|&&v| erased[v]).count())
            .collect();
        let mut queue: VecDeque<usize> = (0..g.m()).filter(|&c| pending[c] == 1).collect();
        while let Some(c) = queue.pop_front() {
            if pending[c] != 1 {
                continue;
            }
            let nbrs = g.nbrs_c(c);
            let target = *nbrs.iter().find(|&&v| erased[v]).expect("one erased neighbor");
            let parity = nbrs.iter().filter(|&&v| v != target && out.bit(v)).count() % 2 == 1;
            out.set_unchecked(target, parity);
            erased[target] = false;
            for &c2 in g.nbrs_v(target) {
                pending[c2] -= 1;
                if pending[c2] == 1 {
                    queue.push_back(c2);
                }
            }
        }

        let remaining: Vec<usize> = (0..g.n()).filter(|&v| erased[v]).collect();
        let h = self.parity_check_matrix();
        let rhs = h.mul_vec(&out)?;
        if remaining.is_empty() {
            return Ok(if rhs.is_zero() { Ok(out) } else { Err(ErasureFailure::Inconsistent) });
        }
        match gf2::solve_restricted_full(&h, &rhs, &remaining)? {
            None => Ok(Err(ErasureFailure::Inconsistent)),
            Some(sol) if !sol.kernel.is_empty() => Ok(Err(ErasureFailure::Ambiguous)),
            Some(sol) => {
                for v in sol.solution.support() {
                    out.flip(v);
                }
                Ok(Ok(out))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_biregular;

    fn path_code() -> ClassicalCode {
        ClassicalCode::new(gen_biregular(2, 1, 2, 0).unwrap())
    }

    fn k33_code() -> ClassicalCode {
        ClassicalCode::new(gen_biregular(3, 3, 3, 0).unwrap())
    }

    #[test]
    fn syndromes() {
        let p = path_code();
        assert!(p.syndrome(&BitVector::zeros(2)).unwrap().is_empty());
        assert_eq!(p.syndrome(&BitVector::from_bits(&[1, 0])).unwrap(), vec![0]);
        assert!(k33_code().syndrome(&BitVector::from_bits(&[1, 1, 0])).unwrap().is_empty());
        assert!(p.syndrome(&BitVector::zeros(3)).is_err());
    }

    #[test]
    fn threshold_rounds_up() {
        assert_eq!(find_threshold(Rational::new(1, 6), 3), 2);
        assert_eq!(find_threshold(Rational::new(1, 5), 3), 2); // 1.8
        assert_eq!(find_threshold(Rational::from_integer(0), 3), 3);
        assert_eq!(find_threshold(Rational::new(1, 4), 4), 2);
    }

    #[test]
    fn find_on_path_graph() {
        let p = path_code();
        let r = p.find(&[], Rational::from_integer(0)).unwrap();
        assert!(r.envelope.is_empty());
        let r = p.find(&[0], Rational::from_integer(0)).unwrap();
        assert_eq!(r.order, vec![0, 1]);
        assert_eq!(r.envelope, vec![0, 1]);
        assert_eq!(r.suspicious, vec![0]);
        assert_eq!(r.iterations, 2);
    }

    #[test]
    fn find_rejects_bad_epsilon() {
        let p = path_code();
        assert!(p.find(&[], Rational::new(1, 2)).is_err());
        assert!(p.find(&[], Rational::new(-1, 8)).is_err());
        assert!(p.find(&[3], Rational::from_integer(0)).is_err());
    }

    #[test]
    fn find_is_deterministic_and_consistent() {
        let code = ClassicalCode::new(gen_biregular(20, 3, 6, 2).unwrap());
        let word = BitVector::from_bits(&[1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0]);
        let s = code.syndrome(&word).unwrap();
        let a = code.find(&s, Rational::new(1, 6)).unwrap();
        let b = code.find(&s, Rational::new(1, 6)).unwrap();
        assert_eq!(a, b);
        let mut r: BTreeSet<usize> = s.iter().copied().collect();
        for &v in &a.envelope {
            r.extend(code.graph().nbrs_v(v));
        }
        assert_eq!(a.suspicious, r.into_iter().collect::<Vec<_>>());
        assert_eq!(a.iterations, a.envelope.len());
    }

    #[test]
    fn erasure_examples() {
        let p = path_code();
        let w = BitVector::from_bits(&[1, 1]);
        assert_eq!(p.erase_decode(&w, &[]).unwrap(), Ok(w.clone()));
        let corrupted = BitVector::from_bits(&[0, 1]);
        assert_eq!(p.erase_decode(&corrupted, &[0]).unwrap(), Ok(BitVector::from_bits(&[1, 1])));
        assert_eq!(p.erase_decode(&corrupted, &[0, 1]).unwrap(), Err(ErasureFailure::Ambiguous));
        assert_eq!(p.erase_decode(&BitVector::from_bits(&[0, 1]), &[]).unwrap(), Err(ErasureFailure::Inconsistent));
    }
}
