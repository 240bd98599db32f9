pub mod grammar;
pub mod pcfg;
pub mod search;
pub mod strings;
pub mod arc;
pub mod llm;
pub mod harness;
