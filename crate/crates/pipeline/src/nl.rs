//! Natural-language descriptions of the domain and the debugging tasks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use genplan_core::llm::{Gateway, Message};
use genplan_core::pddl::parse_domain;

use crate::error::StageError;
use crate::prompts;

/// Descriptions generated during one run; each is requested at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NlDescriptions {
    pub domain: Option<String>,
    pub tasks: BTreeMap<String, String>,
}

impl NlDescriptions {
    pub fn gen_domain_nl(&mut self, domain_pddl: &str, llm: &mut Gateway) -> Result<String, StageError> {
        if let Some(d) = &self.domain {
            return Ok(d.clone());
        }
        if domain_pddl.trim().is_empty() {
            return Err(StageError::Precondition("empty domain source".into()));
        }
        parse_domain(domain_pddl)?;
        let reply = llm.chat(
            "domain_nl",
            vec![Message::system(prompts::SYSTEM), Message::user(prompts::domain_nl(domain_pddl))],
        )?;
        self.domain = Some(reply.clone());
        Ok(reply)
    }

    pub fn gen_task_nl(
        &mut self,
        task_id: &str,
        task_pddl: &str,
        domain_pddl: &str,
        llm: &mut Gateway,
    ) -> Result<String, StageError> {
        if let Some(t) = self.tasks.get(task_id) {
            return Ok(t.clone());
        }
        let domain_nl = self
            .domain
            .clone()
            .ok_or_else(|| StageError::Precondition("domain description must be generated first".into()))?;
        let reply = llm.chat(
            "task_nl",
            vec![
                Message::system(prompts::SYSTEM),
                Message::user(prompts::task_nl(domain_pddl, &domain_nl, task_pddl)),
            ],
        )?;
        self.tasks.insert(task_id.to_string(), reply.clone());
        Ok(reply)
    }
}
