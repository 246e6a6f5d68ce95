//! Filter+aggregate queries: `SUM(c_1 * ... * c_k)` over rows satisfying a
//! conjunction of column-versus-constant predicates.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::report::{CostReport, ReportParams};
use super::select::{select_params_with, Headroom, SelectOptions, MIN_BITWIDTH};
use super::table::{ColumnHandles, EncryptedTable, Table, TableSpec};
use crate::compare::{compare_plain, CompareOp, CompareOptions};
use crate::error::{Error, Result};
use crate::eval::{Backend, Evaluator, Handle};
use crate::params::{BackendKind, ParamSet};
use crate::ring::modular::ceil_log2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub column: String,
    pub op: CompareOp,
    pub value: i64,
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.column, self.op, self.value)
    }
}

const SYMBOLS: [(&str, CompareOp); 7] = [
    ("<=", CompareOp::Le),
    (">=", CompareOp::Ge),
    ("!=", CompareOp::Neq),
    ("==", CompareOp::Eq),
    ("<", CompareOp::Lt),
    (">", CompareOp::Gt),
    ("=", CompareOp::Eq),
];

impl FromStr for Predicate {
    type Err = Error;

    /// `qty<24`, `qty <= 24` or `qty lt 24`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse predicate {s:?}"));
        let (column, op, value) = if let Some((sym, op)) = SYMBOLS.iter().find(|(sym, _)| s.contains(sym)) {
            let (l, r) = s.split_once(sym).ok_or_else(bad)?;
            (l.trim(), *op, r.trim())
        } else {
            let parts: Vec<&str> = s.split_whitespace().collect();
            match parts[..] {
                [c, o, v] => (c, o.parse::<CompareOp>()?, v),
                _ => return Err(bad()),
            }
        };
        if column.is_empty() {
            return Err(bad());
        }
        Ok(Self {
            column: column.to_string(),
            op,
            value: value.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    /// Combined by AND.
    pub predicates: Vec<Predicate>,
    /// Columns whose product is summed over qualifying rows.
    pub sum_of: Vec<String>,
}

impl QueryPlan {
    /// `sum` is a `*`-separated column list such as `price*disc`.
    pub fn parse(predicates: &[&str], sum: &str) -> Result<Self> {
        Ok(Self {
            predicates: predicates.iter().map(|p| p.parse()).collect::<Result<_>>()?,
            sum_of: sum.split('*').map(|c| c.trim().to_string()).collect(),
        })
    }

    pub fn validate(&self, spec: &TableSpec) -> Result<()> {
        if self.sum_of.is_empty() || self.sum_of.iter().any(String::is_empty) {
            return Err(Error::InvalidParameter("aggregate needs at least one column".into()));
        }
        for c in &self.sum_of {
            spec.column_index(c)?;
        }
        for p in &self.predicates {
            let c = spec.column(&p.column)?;
            if p.value < 0 || (p.value as u64) >> c.bits != 0 {
                return Err(Error::InvalidParameter(format!(
                    "constant in `{p}` does not fit the {}-bit column",
                    c.bits
                )));
            }
        }
        Ok(())
    }

    /// Levels spent after the predicates: an AND tree over the masks and one
    /// level to apply the mask. Without predicates, the product tree alone.
    pub fn query_depth(&self) -> usize {
        let a = ceil_log2(self.predicates.len() as u64) as usize;
        let b = ceil_log2(self.sum_of.len() as u64) as usize;
        if self.predicates.is_empty() {
            b
        } else {
            a.max(b) + 1
        }
    }

    /// Bits the number space must hold exactly: every compared column, and
    /// the product of the aggregate columns. When rows are summed under
    /// encryption the whole sum must fit, not just one row.
    pub fn value_bits(&self, spec: &TableSpec, sum_encrypted: bool) -> Result<u32> {
        self.validate(spec)?;
        let mut bits = 0;
        for p in &self.predicates {
            bits = bits.max(spec.column(&p.column)?.bits);
        }
        let mut prod = 0;
        for c in &self.sum_of {
            prod += spec.column(c)?.bits;
        }
        if sum_encrypted {
            prod += ceil_log2(spec.rows.max(1) as u64);
        }
        Ok(bits.max(prod).max(MIN_BITWIDTH))
    }
}

/// Parameters for running `plan` over a table shaped like `spec`.
pub fn plan_params(plan: &QueryPlan, spec: &TableSpec, backend: BackendKind, depth_budget: usize, seed: u64) -> Result<ParamSet> {
    let per_row = backend == BackendKind::ToyBgv;
    let bits = plan.value_bits(spec, per_row)?;
    let opts = SelectOptions {
        headroom: Headroom::Difference,
        query_depth: plan.query_depth(),
        backend,
        seed,
        ..SelectOptions::default()
    };
    select_params_with(bits, depth_budget, &opts)
}

/// Plaintext reference engine.
pub fn reference_answer(plan: &QueryPlan, table: &Table) -> Result<i64> {
    plan.validate(&table.spec)?;
    let preds = plan
        .predicates
        .iter()
        .map(|p| Ok((table.spec.column_index(&p.column)?, p)))
        .collect::<Result<Vec<_>>>()?;
    let cols = plan
        .sum_of
        .iter()
        .map(|c| table.spec.column_index(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(table
        .rows
        .iter()
        .filter(|row| preds.iter().all(|(j, p)| p.op.holds(row[*j], p.value)))
        .map(|row| cols.iter().map(|&j| row[j]).product::<i64>())
        .sum())
}

#[derive(Clone, Debug)]
pub struct QueryOutcome {
    pub result: i64,
    pub report: CostReport,
}

pub const PACKED_NOTE: &str = "rows summed after decoding the packed slots";
pub const PER_ROW_NOTE: &str = "rows summed homomorphically, one ciphertext per row";

fn step<T>(what: impl FnOnce() -> String, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::LevelExhausted { needed, available } => Error::DepthExhausted {
            step: what(),
            needed,
            available,
        },
        e => e,
    })
}

fn product_tree<B: Backend>(ev: &Evaluator<B>, mut xs: Vec<Handle<B>>) -> Result<Handle<B>> {
    while xs.len() > 1 {
        xs = xs
            .chunks(2)
            .map(|c| match c {
                [x, y] => ev.mul(x, y),
                [x] => Ok(x.clone()),
                _ => unreachable!(),
            })
            .collect::<Result<_>>()?;
    }
    Ok(xs.pop().expect("nonempty"))
}

/// Masked product for one packed handle set or one row.
fn masked_term<B: Backend>(
    ev: &Evaluator<B>,
    plan: &QueryPlan,
    pred_inputs: &[&Handle<B>],
    sum_inputs: &[&Handle<B>],
) -> Result<Handle<B>> {
    let opts = CompareOptions {
        raise: true,
        ..CompareOptions::default()
    };
    let masks = plan
        .predicates
        .iter()
        .zip(pred_inputs)
        .map(|(p, h)| {
            step(
                || format!("predicate `{p}`"),
                compare_plain(ev, p.op, h, p.value, &opts).map(|m| m.handle),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let term = step(
        || "aggregate product".into(),
        product_tree(ev, sum_inputs.iter().map(|h| (*h).clone()).collect()),
    )?;
    if masks.is_empty() {
        return Ok(term);
    }
    let mask = step(|| "predicate conjunction".into(), product_tree(ev, masks))?;
    step(|| "mask application".into(), ev.mul(&mask, &term))
}

/// Runs `plan` on an encrypted table. The returned report covers only this
/// query's operations.
pub fn run_query<B: Backend>(
    ev: &Evaluator<B>,
    plan: &QueryPlan,
    table: &EncryptedTable<B::Value>,
) -> Result<QueryOutcome> {
    plan.validate(&table.spec)?;
    let start = Instant::now();
    let before = ev.ledger().snapshot();
    let pred_cols = plan
        .predicates
        .iter()
        .map(|p| table.column(&p.column))
        .collect::<Result<Vec<_>>>()?;
    let sum_cols = plan
        .sum_of
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>>>()?;
    let packed = |cs: &[&ColumnHandles<B::Value>], row: Option<usize>| -> Result<Vec<Handle<B>>> {
        cs.iter()
            .map(|c| match (c, row) {
                (ColumnHandles::Packed(h), None) => Ok(h.clone()),
                (ColumnHandles::PerRow(hs), Some(i)) => Ok(hs[i].clone()),
                _ => Err(Error::InvalidParameter("mixed column layouts".into())),
            })
            .collect()
    };
    let (result, note) = if table.is_packed() {
        let preds = packed(&pred_cols, None)?;
        let sums = packed(&sum_cols, None)?;
        let h = masked_term(ev, plan, &preds.iter().collect::<Vec<_>>(), &sums.iter().collect::<Vec<_>>())?;
        let total: i64 = ev.decode(&h)?.iter().sum();
        (total, PACKED_NOTE)
    } else {
        let mut acc: Option<Handle<B>> = None;
        for i in 0..table.spec.rows {
            let preds = packed(&pred_cols, Some(i))?;
            let sums = packed(&sum_cols, Some(i))?;
            let h = masked_term(ev, plan, &preds.iter().collect::<Vec<_>>(), &sums.iter().collect::<Vec<_>>())?;
            acc = Some(match acc {
                None => h,
                Some(a) => ev.add(&a, &h)?,
            });
        }
        let acc = acc.ok_or(Error::EmptyPacking)?;
        (ev.decode(&acc)?[0], PER_ROW_NOTE)
    };
    let snap = ev.ledger().snapshot().since(&before);
    let report = CostReport::new(ReportParams::of(ev), &snap, start.elapsed().as_secs_f64() * 1e3).with_note(note);
    Ok(QueryOutcome { result, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ClearEval;
    use crate::query::table::encrypt_table;

    fn sample() -> Table {
        let spec = TableSpec::uniform(&["qty", "price", "disc"], 6, 8);
        let rows = vec![
            vec![10, 5, 3],
            vec![30, 9, 2],
            vec![23, 4, 1],
            vec![24, 63, 7],
            vec![0, 0, 5],
            vec![1, 50, 0],
            vec![63, 12, 9],
            vec![5, 7, 4],
        ];
        Table::new(spec, rows).unwrap()
    }

    #[test]
    fn predicate_grammar() {
        let p: Predicate = "qty<24".parse().unwrap();
        assert_eq!((p.column.as_str(), p.op, p.value), ("qty", CompareOp::Lt, 24));
        assert_eq!("price >= 5".parse::<Predicate>().unwrap().op, CompareOp::Ge);
        assert_eq!("d neq 3".parse::<Predicate>().unwrap().op, CompareOp::Neq);
        assert_eq!("d = 3".parse::<Predicate>().unwrap().op, CompareOp::Eq);
        assert!("<3".parse::<Predicate>().is_err());
        assert!("qty ~ 3".parse::<Predicate>().is_err());
    }

    #[test]
    fn eight_rows_match_reference() {
        let table = sample();
        let plan = QueryPlan::parse(&["qty < 24", "price >= 5"], "price*disc").unwrap();
        let want = reference_answer(&plan, &table).unwrap();
        assert_eq!(want, 5 * 3 + 7 * 4);
        let params = plan_params(&plan, &table.spec, BackendKind::Clear, 200, 0).unwrap();
        let ev = Evaluator::new(ClearEval::new(7), params.p, params.r, params.levels()).unwrap();
        let enc = encrypt_table(&ev, &table).unwrap();
        let out = run_query(&ev, &plan, &enc).unwrap();
        assert_eq!(out.result, want);
        assert!(out.report.is_additive());
        assert!(out.report.depth <= params.levels());
    }

    #[test]
    fn empty_selection_sums_to_zero() {
        let table = sample();
        let plan = QueryPlan::parse(&["qty > 63"], "price").unwrap();
        assert_eq!(reference_answer(&plan, &table).unwrap(), 0);
        let params = plan_params(&plan, &table.spec, BackendKind::Clear, 200, 0).unwrap();
        let ev = Evaluator::new(ClearEval::new(7), params.p, params.r, params.levels()).unwrap();
        let out = run_query(&ev, &plan, &encrypt_table(&ev, &table).unwrap()).unwrap();
        assert_eq!(out.result, 0);
    }

    #[test]
    fn too_few_levels_names_the_step() {
        let table = sample();
        let plan = QueryPlan::parse(&["qty < 24"], "price").unwrap();
        let ev = Evaluator::new(ClearEval::new(7), 11, 3, 5).unwrap();
        let enc = encrypt_table(&ev, &table).unwrap();
        match run_query(&ev, &plan, &enc) {
            Err(Error::DepthExhausted { step, .. }) => assert!(step.contains("qty"), "{step}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn plan_validation() {
        let spec = sample().spec;
        assert!(QueryPlan::parse(&["nope < 3"], "price").unwrap().validate(&spec).is_err());
        assert!(QueryPlan::parse(&["qty < 64"], "price").unwrap().validate(&spec).is_err());
        assert!(QueryPlan::parse(&[], "").unwrap().validate(&spec).is_err());
        let plan = QueryPlan::parse(&["qty < 3", "price > 1"], "price*disc").unwrap();
        assert_eq!(plan.query_depth(), 2);
        assert_eq!(plan.value_bits(&spec, false).unwrap(), 12);
        assert_eq!(plan.value_bits(&spec, true).unwrap(), 15);
    }
}
