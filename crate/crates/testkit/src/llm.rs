//! LLM stand-ins for tests: a scripted provider and fixture-file writers.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::{Arc, Mutex};

use factstory_core::providers::{heuristics, LlmProvider, ProviderError, Providers, StructuredRequest};
use serde_json::Value;

/// Replies from a per-task queue; tasks with an empty queue go to the
/// rule-based responder. Every call is recorded.
#[derive(Default)]
pub struct ScriptedLlm {
    script: Mutex<HashMap<String, VecDeque<Value>>>,
    calls: Mutex<Vec<Call>>,
}

#[derive(Debug, Clone)]
pub struct Call {
    pub task: String,
    pub prompt: String,
    pub feedback: Vec<String>,
}

impl ScriptedLlm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reply(self, task: &str, doc: Value) -> Self {
        self.script.lock().unwrap().entry(task.to_string()).or_default().push_back(doc);
        self
    }

    pub fn reply_n(self, task: &str, doc: Value, n: usize) -> Self {
        (0..n).fold(self, |s, _| s.reply(task, doc.clone()))
    }

    pub fn calls(&self, task: &str) -> Vec<Call> {
        self.calls.lock().unwrap().iter().filter(|c| c.task == task).cloned().collect()
    }
}

impl LlmProvider for ScriptedLlm {
    fn complete(&self, req: &StructuredRequest, feedback: &[String]) -> Result<Value, ProviderError> {
        self.calls.lock().unwrap().push(Call {
            task: req.task_name.clone(),
            prompt: req.prompt.clone(),
            feedback: feedback.to_vec(),
        });
        let scripted = self.script.lock().unwrap().get_mut(&req.task_name).and_then(VecDeque::pop_front);
        match scripted {
            Some(doc) => Ok(doc),
            None => heuristics::respond(req),
        }
    }
}

/// Offline providers whose LLM is `llm`.
pub fn providers_with(llm: Arc<dyn LlmProvider>) -> Providers {
    Providers { llm, ..Providers::offline() }
}

/// Stores `doc` as the recorded answer to `req` under a mock fixture
/// directory.
pub fn write_llm_fixture(dir: &Path, req: &StructuredRequest, doc: &Value) {
    let path = dir.join("llm").join(&req.task_name).join(format!("{}.json", req.key()));
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, serde_json::to_string_pretty(doc).unwrap()).unwrap();
}
