use proptest::prelude::*;
use spaceswitch::bgv::{read_ciphertext, write_ciphertext, ToyBgv};
use spaceswitch::compare::{compare, compare_plain, CompareOp, CompareOptions};
use spaceswitch::eval::{ps_nonscalar_bound, ClearEval, EvalPath, Evaluator};
use spaceswitch::params::{BackendKind, ParamSet};
use spaceswitch::query::{
    encrypt_table, plan_params, rank_candidates, reference_answer, run_query, select_params, select_params_with,
    feasible, Headroom, QueryPlan, SelectOptions, Table, TableSpec,
};
use spaceswitch::ring::{base_p_digits, poly_eval_clear, recompose_digits, ring_mul, DensePoly, Residue, RingElem};
use spaceswitch::switch::{estimate_depth, reduce_to_digits, ExtractionStrategy};

const PAIRS: [(u64, u32); 6] = [(3, 2), (3, 4), (5, 2), (5, 3), (7, 3), (11, 2)];

fn pair() -> impl Strategy<Value = (u64, u32)> {
    prop::sample::select(PAIRS.to_vec())
}

fn clear(p: u64, r: u32) -> Evaluator<ClearEval> {
    Evaluator::new(ClearEval::new(0), p, r, usize::MAX / 2).unwrap()
}

fn half(p: u64, r: u32) -> i64 {
    ((p.pow(r) - 1) / 2) as i64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balanced_digits_recompose((p, r) in pair(), seed in any::<u64>()) {
        let m = p.pow(r);
        let x = (seed % m) as i64 - half(p, r);
        let digits = base_p_digits(Residue::from_signed(x, m), p, r).unwrap();
        prop_assert_eq!(digits.len(), r as usize);
        let bound = ((p - 1) / 2) as i64;
        prop_assert!(digits.iter().all(|d| d.abs() <= bound));
        prop_assert_eq!(recompose_digits(&digits, p).balanced(), x);
    }

    #[test]
    fn comparisons_match_integers((p, r) in pair(), s in any::<(u64, u64)>(), op in prop::sample::select(CompareOp::ALL.to_vec()), raise in any::<bool>()) {
        let h = half(p, r);
        let a = (s.0 % (h as u64 + 1)) as i64 - h / 2;
        let b = (s.1 % (h as u64 + 1)) as i64 - h / 2;
        prop_assume!((a - b).abs() <= h);
        let ev = clear(p, r);
        let opts = CompareOptions { raise, ..CompareOptions::default() };
        let (ha, hb) = (ev.encode(&[a]).unwrap(), ev.encode(&[b]).unwrap());
        let out = compare(&ev, op, &ha, &hb, &opts).unwrap();
        prop_assert_eq!(ev.decode(&out.handle).unwrap(), vec![op.holds(a, b) as i64]);
        let out = compare_plain(&ev, op, &ha, b, &opts).unwrap();
        prop_assert_eq!(ev.decode(&out.handle).unwrap(), vec![op.holds(a, b) as i64]);
    }

    #[test]
    fn strategies_agree_on_digits((p, r) in pair(), xs in prop::collection::vec(any::<u64>(), 1..8)) {
        let m = p.pow(r);
        let xs: Vec<i64> = xs.iter().map(|&s| (s % m) as i64 - half(p, r)).collect();
        let ev = clear(p, r);
        let h = ev.encode(&xs).unwrap();
        for strategy in ExtractionStrategy::ALL {
            let bundle = reduce_to_digits(&ev, &h, strategy).unwrap();
            let decoded: Vec<Vec<i64>> = bundle.digits.iter().map(|d| ev.decode(d).unwrap()).collect();
            for (slot, &x) in xs.iter().enumerate() {
                let got: Vec<i64> = decoded.iter().map(|d| d[slot]).collect();
                prop_assert_eq!(got, base_p_digits(Residue::from_signed(x, m), p, r).unwrap());
            }
        }
    }

    #[test]
    fn polynomial_evaluation_matches_horner(coeffs in prop::collection::vec(0u64..625, 2..60), x in 0u64..625) {
        let f = DensePoly::new(coeffs, 625);
        prop_assume!(f.degree() >= 1);
        let ev = clear(5, 4);
        let h = ev.encode(&[Residue::new(x, 625).balanced()]).unwrap();
        let before = ev.ledger().totals();
        let y = ev.ps_eval(&f, &h, EvalPath::Auto).unwrap();
        let spent = ev.ledger().totals().since(&before);
        let want = poly_eval_clear(&f, Residue::new(x, 625)).unwrap();
        prop_assert_eq!(ev.decode_residues(&y).unwrap()[0], want);
        prop_assert!(spent.nonscalar <= ps_nonscalar_bound(f.degree()));
    }

    #[test]
    fn ring_products_commute_and_distribute(a in prop::collection::vec(any::<u64>(), 16), b in prop::collection::vec(any::<u64>(), 16), c in prop::collection::vec(any::<u64>(), 16)) {
        let q = 97u64;
        let elem = |v: &[u64]| RingElem::from_coeffs(v.iter().map(|x| x % q).collect(), q).unwrap();
        let (a, b, c) = (elem(&a), elem(&b), elem(&c));
        prop_assert_eq!(ring_mul(&a, &b).unwrap(), ring_mul(&b, &a).unwrap());
        let lhs = ring_mul(&a, &spaceswitch::ring::ring_add(&b, &c).unwrap()).unwrap();
        let rhs = spaceswitch::ring::ring_add(&ring_mul(&a, &b).unwrap(), &ring_mul(&a, &c).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn queries_match_the_reference(
        rows in prop::collection::vec((0i64..16, 0i64..16), 1..24),
        t in 0i64..16,
        op in prop::sample::select(CompareOp::ALL.to_vec()),
    ) {
        let spec = TableSpec::uniform(&["qty", "price"], 4, rows.len());
        let table = Table::new(spec, rows.iter().map(|&(q, p)| vec![q, p]).collect()).unwrap();
        let pred = format!("qty {op} {t}");
        let plan = QueryPlan::parse(&[pred.as_str()], "qty*price").unwrap();
        let params = plan_params(&plan, &table.spec, BackendKind::Clear, 256, 0).unwrap();
        let ev = Evaluator::new(ClearEval::new(1), params.p, params.r, params.levels()).unwrap();
        let enc = encrypt_table(&ev, &table).unwrap();
        let out = run_query(&ev, &plan, &enc).unwrap();
        prop_assert_eq!(out.result, reference_answer(&plan, &table).unwrap());
        prop_assert!(out.report.is_additive());
    }

    #[test]
    fn selection_is_feasible_and_cheapest(bits in 4u32..=16, budget in 10usize..80) {
        let opts = SelectOptions::default();
        let ranked = rank_candidates(bits, budget, &opts).unwrap();
        match select_params_with(bits, budget, &opts) {
            Ok(ps) => {
                prop_assert!(feasible(ps.p, ps.r, bits, Headroom::Difference));
                prop_assert!(ps.levels() <= budget);
                prop_assert!(estimate_depth(ps.p, ps.r) + opts.query_depth <= budget);
                prop_assert_eq!((ranked[0].p, ranked[0].r), (ps.p, ps.r));
                prop_assert!(ranked.iter().all(|c| c.nonscalar >= ranked[0].nonscalar));
            }
            Err(e) => {
                prop_assert!(ranked.is_empty());
                prop_assert!(matches!(e, spaceswitch::Error::Infeasible(_)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ciphertexts_survive_serialization(x in -12i64..=12, seed in any::<u64>()) {
        let params = ParamSet::new(5, 2, 64, 3, seed, BackendKind::ToyBgv).unwrap();
        let ev = Evaluator::new(ToyBgv::new(params.clone()).unwrap(), 5, 2, 3).unwrap();
        let h = ev.encode(&[x]).unwrap();
        let mut buf = Vec::new();
        write_ciphertext(&mut buf, h.value(), &params).unwrap();
        let ct = read_ciphertext(&mut buf.as_slice(), &params).unwrap();
        prop_assert_eq!(&ct, h.value());
        let bgv = ev.backend();
        prop_assert_eq!(bgv.context().decrypt_balanced(&ct, bgv.secret_key()).unwrap(), x);
    }
}

#[test]
fn wider_inputs_never_get_cheaper_parameters() {
    let mut last = 0;
    for bits in 4..=16 {
        let ps = select_params(bits, 256).unwrap();
        let cost = rank_candidates(bits, 256, &SelectOptions::default()).unwrap()[0].nonscalar;
        assert!(cost >= last, "{bits} bits: {cost} < {last}");
        assert!(ps.modulus() >= 1 << (bits + 1));
        last = cost;
    }
}
