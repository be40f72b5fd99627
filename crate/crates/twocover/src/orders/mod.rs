//! p-adic structure of number-field orders: p-maximal orders, splitting of p
//! into primes with ramification and residue data, valuations of field
//! elements, and local square-class coordinates.
//!
//! Everything is computed in the finite rings O/p^k·O for a p-maximal order
//! O, via idempotent decomposition into the local components O_P/p^k. All
//! answers are one-sided: when the working precision cannot certify a value,
//! the operation fails with a precision error instead of guessing.

mod linalg;
mod local;
mod maximal;

pub use linalg::mod_inverse;
pub use local::{FieldAtP, LocalPrimeInfo};

use num_bigint::BigInt;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

use crate::exact::ZPoly;

#[derive(Debug, Error, Clone)]
pub enum OrderError {
    #[error("insufficient p-adic precision (needs level ≥ {needed}, capped at {cap})")]
    Precision { needed: u32, cap: u32 },
    #[error("element is not invertible at this prime")]
    NotInvertible,
    #[error("defining polynomial must be monic and integral")]
    BadPolynomial,
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

/// Hard cap on the working precision exponent; reaching it indicates a bug
/// rather than a legitimately deep computation.
pub const LEVEL_CAP: u32 = 4096;

type CacheKey = (Vec<BigInt>, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<FieldAtP>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<FieldAtP>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The p-adic data of Q[x]/(g) at p, at working level ≥ `min_level`
/// (arithmetic is done modulo p^level). Results are cached per (g, p).
pub fn field_at_p(g: &ZPoly, p: u64, min_level: u32) -> Result<Arc<FieldAtP>, OrderError> {
    if min_level > LEVEL_CAP {
        return Err(OrderError::Precision { needed: min_level, cap: LEVEL_CAP });
    }
    let key: CacheKey = (g.coeffs().to_vec(), p);
    {
        let map = cache().lock().unwrap();
        if let Some(f) = map.get(&key) {
            if f.level() >= min_level {
                return Ok(f.clone());
            }
        }
    }
    let built = Arc::new(FieldAtP::build(g, p, min_level)?);
    let mut map = cache().lock().unwrap();
    let entry = map.entry(key).or_insert_with(|| built.clone());
    if entry.level() < built.level() {
        *entry = built.clone();
    }
    Ok(entry.clone())
}

/// Run `f` against the field data, doubling the working level on precision
/// failures up to the cap.
pub fn with_precision<T>(
    g: &ZPoly,
    p: u64,
    start_level: u32,
    mut f: impl FnMut(&FieldAtP) -> Result<T, OrderError>,
) -> Result<T, OrderError> {
    let mut level = start_level.max(2);
    loop {
        let data = field_at_p(g, p, level)?;
        match f(&data) {
            Err(OrderError::Precision { needed, .. }) => {
                let next = needed.max(level * 2);
                if next > LEVEL_CAP {
                    return Err(OrderError::Precision { needed: next, cap: LEVEL_CAP });
                }
                level = next;
            }
            other => return other,
        }
    }
}
