//! Bundled model-size table and training metadata.

use alloc::string::String;
use alloc::vec::Vec;

use super::scaling::ComputeBudget;
use super::FitError;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegistryRow {
    pub label: String,
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub n: u64,
    /// Compute-optimal ("1xC") token count.
    #[cfg_attr(feature = "serde", serde(rename = "D"))]
    pub one_x_c: u64,
}

impl RegistryRow {
    pub fn budget(&self) -> ComputeBudget {
        ComputeBudget::new(self.n, self.one_x_c)
    }

    pub fn budget_with_tokens(&self, d: u64) -> ComputeBudget {
        ComputeBudget::new(self.n, d)
    }
}

/// Tokens per parameter of the compute-optimal setting.
pub const TOKENS_PER_PARAM: u64 = 20;

const BUNDLED: [(&str, u64, u64); 7] = [
    ("137M", 137_177_856, 2_743_557_120),
    ("300M", 300_880_896, 6_017_617_920),
    ("378M", 377_963_520, 7_559_270_400),
    ("562M", 562_894_080, 11_257_881_600),
    ("1.05B", 1_057_797_888, 21_155_957_760),
    ("1.37B", 1_372_489_728, 27_449_794_560),
    ("3B", 2_926_955_520, 58_539_110_400),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelRegistry {
    rows: Vec<RegistryRow>,
}

impl ModelRegistry {
    /// The seven bundled sizes, validated.
    pub fn bundled() -> Self {
        Self::new(
            BUNDLED
                .iter()
                .map(|&(l, n, d)| RegistryRow { label: String::from(l), n, one_x_c: d })
                .collect(),
        )
        .expect("bundled registry satisfies D = 20 N")
    }

    /// Build a registry, rejecting any row where `D != 20 N`.
    pub fn new(rows: Vec<RegistryRow>) -> Result<Self, FitError> {
        for r in &rows {
            let expected = TOKENS_PER_PARAM as u128 * r.n as u128;
            if r.one_x_c as u128 != expected {
                return Err(FitError::RegistryMismatch { label: r.label.clone(), d: r.one_x_c, expected });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[RegistryRow] {
        &self.rows
    }

    pub fn get(&self, label: &str) -> Option<&RegistryRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Pretraining hyperparameters shared by every run. Carried as metadata only.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingHyperparameters {
    pub warmup_steps: u32,
    pub gradient_accumulation_steps: u32,
    pub train_batch_size_per_device: u32,
    pub max_sequence_length: u32,
    pub lr_scheduler: String,
    pub max_learning_rate: f64,
    pub min_learning_rate: f64,
    pub num_gpus: u32,
}

impl Default for TrainingHyperparameters {
    fn default() -> Self {
        Self {
            warmup_steps: 2000,
            gradient_accumulation_steps: 4,
            train_batch_size_per_device: 512,
            max_sequence_length: 8192,
            lr_scheduler: String::from("cosine"),
            max_learning_rate: 3e-4,
            min_learning_rate: 3e-5,
            num_gpus: 128,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_rows_are_compute_optimal() {
        let reg = ModelRegistry::bundled();
        assert_eq!(reg.rows().len(), 7);
        for r in reg.rows() {
            assert_eq!(r.one_x_c, 20 * r.n);
        }
        assert_eq!(reg.get("137M").unwrap().one_x_c, 2_743_557_120);
    }

    #[test]
    fn mismatched_row_rejected() {
        let bad = RegistryRow { label: "x".into(), n: 10, one_x_c: 201 };
        assert!(matches!(ModelRegistry::new(alloc::vec![bad]), Err(FitError::RegistryMismatch { .. })));
    }
}
