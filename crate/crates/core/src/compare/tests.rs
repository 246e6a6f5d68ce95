use super::*;
use crate::eval::{ClearEval, Counts};

fn clear(p: u64, r: u32) -> Evaluator<ClearEval> {
    Evaluator::new(ClearEval::new(3), p, r, 64).unwrap()
}

/// All pairs of balanced values whose difference does not wrap.
fn valid_pairs(m: u64) -> (Vec<i64>, Vec<i64>) {
    let h = (m / 2) as i64;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for a in -h..=h {
        for b in -h..=h {
            if (a - b).abs() <= h {
                xs.push(a);
                ys.push(b);
            }
        }
    }
    (xs, ys)
}

#[test]
fn small_examples() {
    let ev = clear(5, 2);
    let a = ev.encode(&[7, 12, 9, 11, 3, 11]).unwrap();
    let b = ev.encode(&[12, 7, 9, 11, 8, 8]).unwrap();
    let o = CompareOptions::default();
    assert_eq!(ev.decode(&lt(&ev, &a, &b, &o).unwrap().handle).unwrap(), vec![1, 0, 0, 0, 1, 0]);
    assert_eq!(ev.decode(&eq(&ev, &a, &b, &o).unwrap().handle).unwrap(), vec![0, 0, 1, 1, 0, 0]);
    assert_eq!(ev.decode(&neq(&ev, &a, &b, &o).unwrap().handle).unwrap(), vec![1, 1, 0, 0, 1, 1]);
    assert_eq!(ev.decode(&ge(&ev, &a, &a, &o).unwrap().handle).unwrap(), vec![1; 6]);
}

#[test]
fn exhaustive_all_ops() {
    for (p, r) in [(3u64, 2u32), (5, 2), (7, 2)] {
        let (xs, ys) = valid_pairs(p.pow(r));
        let ev = clear(p, r);
        let a = ev.encode(&xs).unwrap();
        let b = ev.encode(&ys).unwrap();
        for op in CompareOp::ALL {
            let got = ev.decode(&compare(&ev, op, &a, &b, &CompareOptions::default()).unwrap().handle).unwrap();
            for i in 0..xs.len() {
                assert_eq!(got[i], i64::from(op.holds(xs[i], ys[i])), "{op} {} {}", xs[i], ys[i]);
            }
        }
    }
}

#[test]
fn raised_result_is_a_mask() {
    let ev = clear(5, 3);
    let a = ev.encode(&[1, 50, -3]).unwrap();
    let b = ev.encode(&[2, 49, -3]).unwrap();
    let opts = CompareOptions { raise: true, ..Default::default() };
    let m = lt(&ev, &a, &b, &opts).unwrap();
    assert!(m.is_raised());
    let vals = ev.encode(&[40, 41, 42]).unwrap();
    let masked = ev.mul(&m.handle, &vals).unwrap();
    assert_eq!(ev.decode(&masked).unwrap(), vec![40, 0, 0]);
}

#[test]
fn unshared_digit_compare_costs_r_separate_evals() {
    let (p, r) = (7u64, 3u32);
    let one = |f: &crate::ring::DensePoly| -> Counts {
        let ev = Evaluator::new(crate::eval::DryRun, p, 1, 64).unwrap();
        let x = ev.encode(&[0]).unwrap();
        ev.ps_eval(f, &x, EvalPath::Auto).unwrap();
        ev.ledger().totals()
    };
    let per_digit = one(&f_lt_poly(p).unwrap()).nonscalar + one(&f_eq_poly(p).unwrap()).nonscalar;
    let ev = clear(p, r);
    let a = ev.encode(&[5]).unwrap();
    let b = ev.encode(&[-9]).unwrap();
    let opts = CompareOptions { share_powers: false, ..Default::default() };
    lt(&ev, &a, &b, &opts).unwrap();
    let snap = ev.ledger().snapshot();
    assert_eq!(snap.stage(STAGE_DIGIT_COMPARE).nonscalar, r as u64 * per_digit);
    assert_eq!(snap.stage(STAGE_AGGREGATION).nonscalar, 2 * r as u64 - 3);
}

#[test]
fn direct_prime_baseline() {
    let ev = clear(7, 1);
    let (xs, ys) = valid_pairs(7);
    let a = ev.encode(&xs).unwrap();
    let b = ev.encode(&ys).unwrap();
    let got = ev.decode(&lt_direct_prime(&ev, &a, &b).unwrap().handle).unwrap();
    for i in 0..xs.len() {
        assert_eq!(got[i], i64::from(xs[i] < ys[i]));
    }
    let ev = clear(5, 2);
    let x = ev.encode(&[0]).unwrap();
    assert!(lt_direct_prime(&ev, &x, &x).is_err());
    assert_eq!(next_prime(625), 631);
}

#[test]
fn tag_must_be_number_space() {
    let ev = clear(5, 2);
    let a = ev.encode_with_tag(&[1], 1).unwrap();
    let b = ev.encode_with_tag(&[2], 1).unwrap();
    assert!(matches!(lt(&ev, &a, &b, &CompareOptions::default()), Err(Error::TagMismatch { .. })));
}

#[test]
fn op_names_round_trip() {
    for op in CompareOp::ALL {
        assert_eq!(op.as_str().parse::<CompareOp>().unwrap(), op);
    }
}

#[test]
fn constant_operand_matches_encrypted_operand() {
    let ev = clear(5, 3);
    let xs: Vec<i64> = (-62..=62).collect();
    let a = ev.encode(&xs).unwrap();
    for c in [-20i64, 0, 1, 13] {
        let b = ev.encode(&vec![c; xs.len()]).unwrap();
        for op in CompareOp::ALL {
            let o = CompareOptions::default();
            let with_const = ev.decode(&compare_plain(&ev, op, &a, c, &o).unwrap().handle).unwrap();
            let with_handle = ev.decode(&compare(&ev, op, &a, &b, &o).unwrap().handle).unwrap();
            let in_range: Vec<usize> = (0..xs.len()).filter(|&i| (xs[i] - c).abs() <= 62).collect();
            for i in in_range {
                assert_eq!(with_const[i], with_handle[i], "{op} {} {c}", xs[i]);
                assert_eq!(with_const[i], i64::from(op.holds(xs[i], c)));
            }
        }
    }
}
