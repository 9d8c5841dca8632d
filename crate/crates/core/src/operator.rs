//! Linear operators on grid fields.

use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::field::{FrequencyField, GridField};

pub trait FieldOperator: Send + Sync {
    fn apply(&self, f: &GridField) -> Result<GridField>;

    /// The operator's Fourier multiplier, if it is translation invariant and
    /// tabulated.
    fn multiplier(&self) -> Option<&FrequencyField> {
        None
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl FieldOperator for Identity {
    fn apply(&self, f: &GridField) -> Result<GridField> {
        Ok(f.clone())
    }
}

/// Convolution operator given by its multiplier on the dual lattice.
#[derive(Clone, Debug)]
pub struct Multiplier {
    symbol: FrequencyField,
}

impl Multiplier {
    pub fn new(symbol: FrequencyField) -> Self {
        Self { symbol }
    }

    pub fn symbol(&self) -> &FrequencyField {
        &self.symbol
    }

    pub fn scaled(&self, c: f64) -> Self {
        let values = self.symbol.values().iter().map(|v| v * c).collect::<Vec<Complex64>>();
        Self { symbol: FrequencyField::from_values(*self.symbol.geometry(), values).expect("same length") }
    }
}

impl FieldOperator for Multiplier {
    fn apply(&self, f: &GridField) -> Result<GridField> {
        crate::field::apply_multiplier(f, &self.symbol)
    }

    fn multiplier(&self) -> Option<&FrequencyField> {
        Some(&self.symbol)
    }
}
