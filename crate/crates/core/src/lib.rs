pub mod encoding;
pub mod executor;
pub mod feedback;
pub mod llm;
pub mod pddl;
pub mod planner;
pub mod validator;
