use super::Backend;
use crate::error::{Error, Result};

/// Backend that computes nothing; only the ledger moves. Used to predict
/// costs and to choose evaluation plans.
#[derive(Clone, Copy, Debug, Default)]
pub struct DryRun;

impl Backend for DryRun {
    type Value = ();

    fn name(&self) -> &'static str {
        "dry-run"
    }

    fn max_slots(&self) -> usize {
        usize::MAX
    }

    fn encode(&self, _values: &[u64], _m: u64) -> Result<()> {
        Ok(())
    }

    fn decode(&self, _v: &(), _m: u64) -> Result<Vec<u64>> {
        Err(Error::Unsupported("dry-run values carry no data".into()))
    }

    fn add(&self, _a: &(), _b: &(), _m: u64) -> Result<()> {
        Ok(())
    }

    fn sub(&self, _a: &(), _b: &(), _m: u64) -> Result<()> {
        Ok(())
    }

    fn neg(&self, _a: &(), _m: u64) -> Result<()> {
        Ok(())
    }

    fn add_plain(&self, _a: &(), _c: u64, _m: u64) -> Result<()> {
        Ok(())
    }

    fn mul(&self, _a: &(), _b: &(), _m: u64) -> Result<()> {
        Ok(())
    }

    fn mul_plain(&self, _a: &(), _c: u64, _m: u64) -> Result<()> {
        Ok(())
    }

    fn divide_by_p(&self, _a: &(), _p: u64, _m: u64) -> Result<()> {
        Ok(())
    }

    fn change_modulus(&self, _a: &(), _from: u64, _to: u64) -> Result<()> {
        Ok(())
    }

    fn raise_modulus(&self, _a: &(), _from: u64, _to: u64) -> Result<()> {
        Ok(())
    }
}
