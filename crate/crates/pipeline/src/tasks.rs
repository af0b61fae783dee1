use std::fs;
use std::path::{Path, PathBuf};

use genplan_core::pddl::{parse_domain, parse_problem, DomainModel, Task};

use crate::error::StageError;

/// A domain with the exact text it was parsed from.
#[derive(Debug, Clone)]
pub struct DomainSource {
    pub pddl: String,
    pub model: DomainModel,
}

impl DomainSource {
    pub fn from_text(pddl: impl Into<String>) -> Result<Self, StageError> {
        let pddl = pddl.into();
        let model = parse_domain(&pddl)?;
        Ok(DomainSource { pddl, model })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        Ok(Self::from_text(text)?)
    }
}

/// One problem of the dataset.
#[derive(Debug, Clone)]
pub struct TaskEntry {
    /// File stem, e.g. `p07`.
    pub id: String,
    pub path: PathBuf,
    pub pddl: String,
    pub task: Task,
}

impl TaskEntry {
    pub fn from_text(id: impl Into<String>, pddl: impl Into<String>, domain: &DomainSource) -> Result<Self, StageError> {
        let pddl = pddl.into();
        let problem = parse_problem(&pddl, &domain.model)?;
        Ok(TaskEntry {
            id: id.into(),
            path: PathBuf::new(),
            pddl,
            task: Task::new(domain.model.clone(), problem),
        })
    }
}

/// Every `*.pddl` file in `dir`, sorted by file name.
pub fn load_tasks(dir: &Path, domain: &DomainSource) -> anyhow::Result<Vec<TaskEntry>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| anyhow::anyhow!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pddl"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p)?;
            let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let mut entry = TaskEntry::from_text(id, text, domain).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?;
            entry.path = p;
            Ok(entry)
        })
        .collect()
}

/// A debugging task together with its natural-language description.
#[derive(Debug, Clone)]
pub struct DebugTask {
    pub entry: TaskEntry,
    pub nl: String,
}

impl DebugTask {
    pub fn id(&self) -> &str {
        &self.entry.id
    }
}
