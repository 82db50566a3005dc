//! Erasure decoding on an envelope and stabilizer-equivalence checks.
//!
//! Once the envelope `L` is known, the decode is a linear system: find `x`
//! supported on `L` with `H x = σ`. Only checks adjacent to `L` (plus the
//! syndrome itself) take part, so the system stays small at any code size.

use thiserror::Error;

use crate::gf2::{self, BitMatrix, BitVector, Gf2Error};
use crate::hgp::{base_parity_matrix, CheckSet, CodeError, HgpCode, Qubit, QubitSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ErasureError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeStatus {
    Success,
    NoSolution,
    /// Several corrections fit the syndrome and they differ by a logical operator.
    AmbiguousLogical,
}

impl DecodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DecodeStatus::Success => "success",
            DecodeStatus::NoSolution => "no-solution",
            DecodeStatus::AmbiguousLogical => "ambiguous-logical",
        }
    }
}

impl std::fmt::Display for DecodeStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeVerdict {
    /// Correction `x ⊆ L`. Empty when there is no solution.
    pub correction: QubitSet,
    pub status: DecodeStatus,
    /// Whether `x` matches the true error up to stabilizers; filled in by
    /// [`DecodeVerdict::judge`].
    pub coset_equivalent: Option<bool>,
    /// Rows of the restricted system.
    pub rows_touched: usize,
}

impl DecodeVerdict {
    /// Compares the correction with the true error.
    pub fn judge(mut self, code: &HgpCode, error: &QubitSet) -> Self {
        self.coset_equivalent = Some(self.status != DecodeStatus::NoSolution && verify_coset(code, &self.correction, error));
        self
    }

    /// Succeeded and, when judged, recovered the right coset.
    pub fn recovered(&self) -> bool {
        self.status == DecodeStatus::Success && self.coset_equivalent != Some(false)
    }
}

/// Solves `H x = σ` with `x ⊆ envelope`. Columns are the envelope qubits in
/// index order (VV block first); rows are the checks adjacent to the
/// envelope together with `σ`.
pub fn erase_decode_quantum(code: &HgpCode, sigma: &CheckSet, envelope: &QubitSet) -> Result<DecodeVerdict, ErasureError> {
    code.validate_checks(sigma)?;
    code.validate_qubits(envelope)?;

    let cols: Vec<Qubit> = envelope.iter().collect();
    let mut rows: Vec<usize> = cols
        .iter()
        .flat_map(|&q| code.qubit_checks(q))
        .chain(sigma.iter())
        .map(|c| code.check_index(c))
        .collect();
    rows.sort_unstable();
    rows.dedup();

    let mut a = BitMatrix::zeros(rows.len(), cols.len());
    for (j, &q) in cols.iter().enumerate() {
        for c in code.qubit_checks(q) {
            let i = rows.binary_search(&code.check_index(c)).expect("adjacent row present");
            a.set_unchecked(i, j, true);
        }
    }
    let b = BitVector::from_support(
        rows.len(),
        sigma.iter().map(|c| rows.binary_search(&code.check_index(c)).expect("syndrome row present")),
    )?;
    let all: Vec<usize> = (0..cols.len()).collect();
    let rows_touched = rows.len();

    let Some(sol) = gf2::solve_restricted_full(&a, &b, &all)? else {
        return Ok(DecodeVerdict {
            correction: QubitSet::new(),
            status: DecodeStatus::NoSolution,
            coset_equivalent: None,
            rows_touched,
        });
    };
    let lift = |v: &BitVector| -> QubitSet { v.support().into_iter().map(|j| cols[j]).collect() };
    let correction = lift(&sol.solution);
    let tester = CosetTester::new(code);
    let ambiguous = sol.kernel.iter().any(|k| !tester.is_stabilizer(&lift(k)));
    Ok(DecodeVerdict {
        correction,
        status: if ambiguous {
            DecodeStatus::AmbiguousLogical
        } else {
            DecodeStatus::Success
        },
        coset_equivalent: None,
        rows_touched,
    })
}

/// True iff `x ⊕ e` is a sum of generator supports.
pub fn verify_coset(code: &HgpCode, x: &QubitSet, e: &QubitSet) -> bool {
    CosetTester::new(code).is_stabilizer(&x.symmetric_difference(e))
}

/// Membership in the span of generator supports without the dense
/// `|𝒢| x N` matrix.
///
/// Write a combination of generators as an `m x n` matrix `Y`. Its VV part is
/// `Hᵀ Y` and its CC part is `Y Hᵀ`. Every solution of `Hᵀ Y = D_VV` is
/// `Y₀ + K W` with `K` a kernel basis of `Hᵀ`, so `D` is a stabilizer iff
/// `K W Hᵀ = D_CC + Y₀ Hᵀ` is solvable, which splits into small solves.
pub struct CosetTester<'a> {
    code: &'a HgpCode,
    h: BitMatrix,
    ht: BitMatrix,
    kernel: BitMatrix,
}

impl<'a> CosetTester<'a> {
    pub fn new(code: &'a HgpCode) -> Self {
        let h = base_parity_matrix(code.graph());
        let ht = h.transpose();
        let m = code.m();
        let basis = gf2::solve_restricted_full(&ht, &BitVector::zeros(ht.rows()), &(0..m).collect::<Vec<_>>())
            .expect("dimensions agree")
            .expect("homogeneous system is consistent")
            .kernel;
        let mut kernel = BitMatrix::zeros(m, basis.len());
        for (j, v) in basis.iter().enumerate() {
            for i in v.support() {
                kernel.set_unchecked(i, j, true);
            }
        }
        CosetTester { code, h, ht, kernel }
    }

    pub fn is_stabilizer(&self, d: &QubitSet) -> bool {
        let (n, m) = (self.code.n(), self.code.m());
        let all_m: Vec<usize> = (0..m).collect();
        let all_n: Vec<usize> = (0..n).collect();

        // Columns of D_VV, indexed by v.
        let mut vv_cols = vec![BitVector::zeros(n); n];
        for (nu, v) in d.vv_part() {
            vv_cols[v].set_unchecked(nu, true);
        }
        // Y₀ rows, indexed by c.
        let mut y0 = vec![BitVector::zeros(n); m];
        for (v, col) in vv_cols.iter().enumerate() {
            if col.is_zero() {
                continue;
            }
            match gf2::solve_restricted(&self.ht, col, &all_m).expect("dimensions agree") {
                Some(y) => {
                    for c in y.support() {
                        y0[c].set_unchecked(v, true);
                    }
                }
                None => return false,
            }
        }
        // M = D_CC + Y₀ Hᵀ, built column by column (column ζ indexed by c).
        let mut rhs = vec![BitVector::zeros(m); m];
        for (c, zeta) in d.cc_part() {
            rhs[zeta].flip(c);
        }
        for (c, row) in y0.iter().enumerate() {
            if row.is_zero() {
                continue;
            }
            for (zeta, col) in rhs.iter_mut().enumerate() {
                if row.dot(&self.h.row(zeta).expect("row in range")).expect("lengths agree") {
                    col.flip(c);
                }
            }
        }
        // K P = M, then each row of P must lie in the column space of H.
        let kdim = self.kernel.cols();
        let all_k: Vec<usize> = (0..kdim).collect();
        let mut p_rows = vec![BitVector::zeros(m); kdim];
        for (zeta, col) in rhs.iter().enumerate() {
            if col.is_zero() {
                continue;
            }
            match gf2::solve_restricted(&self.kernel, col, &all_k).expect("dimensions agree") {
                Some(p) => {
                    for i in p.support() {
                        p_rows[i].set_unchecked(zeta, true);
                    }
                }
                None => return false,
            }
        }
        p_rows.iter().all(|row| {
            row.is_zero() || gf2::solve_restricted(&self.h, row, &all_n).expect("dimensions agree").is_some()
        })
    }
}
