//! Unit conventions for fitted constants.
//!
//! Fitted exponents are scale-invariant but multipliers are not, so every
//! fitted law carries the convention its constants were produced under.
//! The default is billions for both tokens and parameters with batch sizes
//! in samples; under that convention the published hyperparameter constants
//! reproduce the documented training plans.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchUnit {
    Samples,
    Tokens,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitConvention {
    /// Tokens per unit of `T` (default 1e9).
    pub token_unit: f64,
    /// Parameters per unit of `N` (default 1e9).
    pub param_unit: f64,
    pub batch_unit: BatchUnit,
}

impl UnitConvention {
    pub fn new(token_unit: f64, param_unit: f64, batch_unit: BatchUnit) -> Result<Self> {
        if !(token_unit > 0.0) || !(param_unit > 0.0) {
            return Err(Error::domain("unit scale factors must be positive"));
        }
        Ok(UnitConvention {
            token_unit,
            param_unit,
            batch_unit,
        })
    }

    /// Billions for `T` and `N`, batch sizes in samples.
    pub fn billions() -> Self {
        UnitConvention {
            token_unit: 1e9,
            param_unit: 1e9,
            batch_unit: BatchUnit::Samples,
        }
    }

    /// Raw counts (tokens, parameters, samples); the identity convention.
    pub fn raw() -> Self {
        UnitConvention {
            token_unit: 1.0,
            param_unit: 1.0,
            batch_unit: BatchUnit::Samples,
        }
    }
}

impl Default for UnitConvention {
    fn default() -> Self {
        UnitConvention::billions()
    }
}
