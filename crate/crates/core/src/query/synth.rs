//! Seeded tables shaped like a shipping-line-item filter query: a ship date
//! stored as a day offset, quantity, price and a discount in percent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::plan::{Predicate, QueryPlan};
use super::table::{ColumnSpec, Table, TableSpec};
use crate::compare::CompareOp;
use crate::error::{Error, Result};

pub const DISCOUNT_BITS: u32 = 4;
pub const MAX_QUANTITY: i64 = 50;
pub const MAX_DISCOUNT: i64 = 10;

/// `rows` rows with `bits`-bit date, quantity and price columns.
pub fn synthetic_lineitems(rows: usize, bits: u32, seed: u64) -> Result<Table> {
    if !(6..=16).contains(&bits) {
        return Err(Error::InvalidParameter(format!("column width {bits} outside 6..=16")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let top = 1i64 << bits;
    let spec = TableSpec::new(
        vec![
            ColumnSpec { name: "shipdate".into(), bits },
            ColumnSpec { name: "quantity".into(), bits },
            ColumnSpec { name: "price".into(), bits },
            ColumnSpec {
                name: "discount".into(),
                bits: DISCOUNT_BITS,
            },
        ],
        rows,
    );
    let data = (0..rows)
        .map(|_| {
            vec![
                rng.random_range(0..top),
                rng.random_range(1..=MAX_QUANTITY),
                rng.random_range(1..top),
                rng.random_range(0..=MAX_DISCOUNT),
            ]
        })
        .collect();
    Table::new(spec, data)
}

/// `SUM(price * discount) WHERE shipdate >= 2^bits / 4 AND quantity < 24`.
pub fn lineitem_query(bits: u32) -> QueryPlan {
    QueryPlan {
        predicates: vec![
            Predicate {
                column: "shipdate".into(),
                op: CompareOp::Ge,
                value: 1 << (bits - 2),
            },
            Predicate {
                column: "quantity".into(),
                op: CompareOp::Lt,
                value: 24,
            },
        ],
        sum_of: vec!["price".into(), "discount".into()],
    }
}
