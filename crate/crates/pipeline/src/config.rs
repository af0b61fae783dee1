use serde::{Deserialize, Serialize};

use genplan_core::llm::DEFAULT_MODEL;

/// How the strategy debugging conversation carries over between iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ContextMode {
    /// One conversation grows across all iterations of a run.
    #[default]
    Rolling,
    /// Each iteration starts from the failed task's plan exchange only.
    Fresh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Maximum pseudocode refinements.
    pub k_s: usize,
    /// Maximum revisions per initial program.
    pub k_c: usize,
    /// Number of initial programs.
    pub n: usize,
    pub time_limit_secs: f64,
    pub temperature: f64,
    pub seed: i64,
    pub reflection_enabled: bool,
    pub model: String,
    pub context: ContextMode,
    /// Number of debugging tasks drawn from the dataset.
    pub debug_task_count: usize,
    /// Seed for debugging-task selection, example pairs and permutations.
    pub rng_seed: u64,
    pub replay_loose: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::f3_6()
    }
}

impl PipelineConfig {
    pub fn f3_6() -> Self {
        PipelineConfig {
            k_s: 6,
            k_c: 6,
            n: 3,
            time_limit_secs: 45.0,
            temperature: 0.0,
            seed: 1,
            reflection_enabled: true,
            model: DEFAULT_MODEL.to_string(),
            context: ContextMode::Rolling,
            debug_task_count: 6,
            rng_seed: 1,
            replay_loose: false,
        }
    }

    pub fn f5_3() -> Self {
        PipelineConfig { n: 5, k_c: 3, ..Self::f3_6() }
    }

    /// Named preset: `f3-6`, `f5-3`, or an ablation of F3-6: `-sd` (no
    /// strategy debugging), `-cr` (no code reflection), `-mc` (one program).
    pub fn preset(name: &str) -> Option<Self> {
        let base = Self::f3_6();
        Some(match name.to_ascii_lowercase().as_str() {
            "f3-6" => base,
            "f5-3" => Self::f5_3(),
            "-sd" | "sd" => PipelineConfig { k_s: 0, ..base },
            "-cr" | "cr" => PipelineConfig { reflection_enabled: false, ..base },
            "-mc" | "mc" => PipelineConfig { n: 1, ..base },
            _ => return None,
        })
    }

    /// Upper bound on generated programs.
    pub fn program_budget(&self) -> usize {
        self.n * (self.k_c + 1)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("n must be at least 1".into());
        }
        if self.temperature < 0.0 {
            return Err("temperature must be non-negative".into());
        }
        if !(self.time_limit_secs > 0.0) {
            return Err("time limit must be positive".into());
        }
        if self.debug_task_count < 2 || self.debug_task_count % 2 != 0 {
            return Err("debug_task_count must be an even number of at least 2".into());
        }
        Ok(())
    }
}
