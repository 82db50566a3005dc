use proptest::prelude::*;

use ssfind::erasure::{erase_decode_quantum, verify_coset, DecodeStatus};
use ssfind::graph::gen_biregular;
use ssfind::hgp::{HgpCode, QubitSet};
use ssfind::reduction::{reduce_error, ReductionMode};
use ssfind::ssfind::{check_run_invariants, ssfind, DecoderConfig};
use ssfind::Rational;

fn code(seed: u64) -> HgpCode {
    HgpCode::new(gen_biregular(24, 3, 6, seed).unwrap())
}

fn error(code: &HgpCode, idx: &[usize]) -> QubitSet {
    idx.iter().map(|&i| code.qubit_at(i % code.num_qubits())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn greedy_reduction_keeps_the_coset(seed in 0u64..4, idx in proptest::collection::vec(0usize..720, 0..8)) {
        let code = code(seed);
        let e = error(&code, &idx);
        let r = reduce_error(&code, &e, ReductionMode::Greedy).unwrap();
        prop_assert!(r.len() <= e.len());
        prop_assert_eq!(code.syndrome(&r), code.syndrome(&e));
        prop_assert!(verify_coset(&code, &r, &e));
    }

    #[test]
    fn decode_pipeline_is_consistent(
        seed in 0u64..4,
        idx in proptest::collection::vec(0usize..720, 0..6),
        eps in prop::sample::select(vec![Rational::new(1, 20), Rational::new(1, 8), Rational::new(1, 4)]),
    ) {
        let code = code(seed);
        let e = error(&code, &idx);
        let sigma = code.syndrome(&e);
        let cfg = DecoderConfig::new(eps).with_verify_cache(true);
        let out = ssfind(&code, &sigma, &cfg).unwrap();
        check_run_invariants(&code, &sigma, &cfg, &out).unwrap();
        let v = erase_decode_quantum(&code, &sigma, &out.envelope).unwrap();
        prop_assert!(v.correction.is_subset(&out.envelope));
        if v.status != DecodeStatus::NoSolution {
            prop_assert_eq!(code.syndrome(&v.correction), sigma);
        }
        let judged = v.judge(&code, &e);
        if judged.coset_equivalent == Some(true) {
            prop_assert_eq!(code.syndrome(&judged.correction), code.syndrome(&e));
        }
    }
}

#[test]
fn dual_code_swaps_roles() {
    let c = code(1);
    let d = c.dual();
    assert_eq!(d.num_qubits(), c.num_qubits());
    assert_eq!(d.num_checks(), c.num_generators());
    assert_eq!(d.k(), c.k());
}
