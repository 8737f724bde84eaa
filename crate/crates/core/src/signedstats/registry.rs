use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gaussmodel::BitMatrix;

use super::statistics::{signed_four_cycles, signed_four_cycles_masked, signed_wedges, signed_wedges_masked};

/// A scalar test statistic of an observed matrix.
pub trait TestStatistic: Send + Sync {
    /// Registry key.
    fn name(&self) -> &str;

    /// Whether [`TestStatistic::evaluate`] needs the mask.
    fn uses_mask(&self) -> bool {
        false
    }

    fn evaluate(&self, m: &BitMatrix, mask: Option<&BitMatrix>, p: f64) -> Result<f64>;
}

impl fmt::Debug for dyn TestStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestStatistic({})", self.name())
    }
}

fn require_mask<'a>(name: &str, mask: Option<&'a BitMatrix>) -> Result<&'a BitMatrix> {
    mask.ok_or_else(|| Error::MaskRequired(name.to_string()))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SignedWedges;

impl TestStatistic for SignedWedges {
    fn name(&self) -> &str {
        "wedge"
    }

    fn evaluate(&self, m: &BitMatrix, _mask: Option<&BitMatrix>, p: f64) -> Result<f64> {
        Ok(signed_wedges(m, p))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SignedFourCycles;

impl TestStatistic for SignedFourCycles {
    fn name(&self) -> &str {
        "c4"
    }

    fn evaluate(&self, m: &BitMatrix, _mask: Option<&BitMatrix>, p: f64) -> Result<f64> {
        Ok(signed_four_cycles(m, p))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MaskedSignedWedges;

impl TestStatistic for MaskedSignedWedges {
    fn name(&self) -> &str {
        "wedge-masked"
    }

    fn uses_mask(&self) -> bool {
        true
    }

    fn evaluate(&self, m: &BitMatrix, mask: Option<&BitMatrix>, p: f64) -> Result<f64> {
        signed_wedges_masked(m, require_mask(self.name(), mask)?, p)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MaskedSignedFourCycles;

impl TestStatistic for MaskedSignedFourCycles {
    fn name(&self) -> &str {
        "c4-masked"
    }

    fn uses_mask(&self) -> bool {
        true
    }

    fn evaluate(&self, m: &BitMatrix, mask: Option<&BitMatrix>, p: f64) -> Result<f64> {
        signed_four_cycles_masked(m, require_mask(self.name(), mask)?, p)
    }
}

/// Statistics looked up by name.
#[derive(Clone)]
pub struct StatisticRegistry {
    entries: BTreeMap<String, Arc<dyn TestStatistic>>,
}

impl StatisticRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// `wedge`, `c4`, `wedge-masked` and `c4-masked`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(SignedWedges));
        r.register(Arc::new(SignedFourCycles));
        r.register(Arc::new(MaskedSignedWedges));
        r.register(Arc::new(MaskedSignedFourCycles));
        r
    }

    /// Adds or replaces the entry under `statistic.name()`.
    pub fn register(&mut self, statistic: Arc<dyn TestStatistic>) {
        self.entries.insert(statistic.name().to_string(), statistic);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn TestStatistic>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStatistic(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Default for StatisticRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl fmt::Debug for StatisticRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}
