//! Deterministic stand-in for stochastic external calls made via `perform`.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::frame::deep_clone;
use super::value::Value;
use crate::error::RuntimeError;

#[derive(Debug, Clone)]
enum OpMode {
    /// Responses replayed in order; running out is an error.
    Scripted { responses: Vec<Value>, cursor: usize },
    /// Draw keyed by (seed, op, call site, invocation index).
    Seeded { candidates: Vec<Value> },
}

#[derive(Debug, Clone)]
struct FailRule {
    fail_first_n: u64,
    tag: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallRecord {
    pub op: String,
    pub args: Vec<Value>,
    /// Source offset of the `perform` expression.
    pub site: usize,
    /// Prior calls of this op at this site.
    pub invocation: u64,
    /// Response, or the error tag raised.
    pub outcome: Result<Value, String>,
}

impl CallRecord {
    pub fn to_json(&self) -> serde_json::Value {
        let outcome = match &self.outcome {
            Ok(v) => json!({"ok": v.to_json()}),
            Err(tag) => json!({"error": tag}),
        };
        json!({
            "op": self.op,
            "args": self.args.iter().map(Value::to_json).collect::<Vec<_>>(),
            "site": self.site,
            "invocation": self.invocation,
            "outcome": outcome,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct Provider {
    seed: u64,
    ops: BTreeMap<String, OpMode>,
    errors: BTreeMap<String, FailRule>,
    op_calls: BTreeMap<String, u64>,
    invocations: HashMap<(String, usize), u64>,
    log: Vec<CallRecord>,
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for b in part.iter().chain(&[0xff]) {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Index drawn by the seeded mode; a pure function of its arguments.
pub fn seeded_draw(seed: u64, op: &str, site: usize, invocation: u64, n: usize) -> usize {
    let key = fnv1a(&[&seed.to_le_bytes(), op.as_bytes(), &site.to_le_bytes(), &invocation.to_le_bytes()]);
    ChaCha8Rng::seed_from_u64(key).gen_range(0..n)
}

impl Provider {
    pub fn new(seed: u64) -> Self {
        Provider { seed, ..Default::default() }
    }

    pub fn scripted(mut self, op: &str, responses: Vec<Value>) -> Self {
        self.ops.insert(op.to_string(), OpMode::Scripted { responses, cursor: 0 });
        self
    }

    pub fn seeded(mut self, op: &str, candidates: Vec<Value>) -> Self {
        self.ops.insert(op.to_string(), OpMode::Seeded { candidates });
        self
    }

    pub fn fail_first(mut self, op: &str, n: u64, tag: &str) -> Self {
        self.errors.insert(op.to_string(), FailRule { fail_first_n: n, tag: tag.to_string() });
        self
    }

    /// Parses a provider script:
    /// `{"ops": {op: {"mode": "scripted"|"seeded", ...}}, "errors": {op: {"fail_first_n": n, "tag": t}}}`.
    pub fn from_json(j: &serde_json::Value, seed: u64) -> Result<Self, String> {
        let mut p = Provider::new(seed);
        let obj = j.as_object().ok_or("provider script must be a JSON object")?;
        for key in obj.keys() {
            if key != "ops" && key != "errors" {
                return Err(format!("unknown provider section `{key}`"));
            }
        }
        if let Some(ops) = obj.get("ops") {
            let ops = ops.as_object().ok_or("`ops` must be an object")?;
            for (name, cfg) in ops {
                let mode = cfg.get("mode").and_then(|m| m.as_str()).ok_or(format!("op `{name}` needs a mode"))?;
                let list = |field: &str| -> Result<Vec<Value>, String> {
                    let arr = cfg.get(field).and_then(|r| r.as_array());
                    let arr = arr.ok_or(format!("op `{name}` needs a `{field}` array"))?;
                    Ok(arr.iter().map(Value::from_json).collect())
                };
                p = match mode {
                    "scripted" => p.scripted(name, list("responses")?),
                    "seeded" => p.seeded(name, list("candidates")?),
                    other => return Err(format!("op `{name}` has unknown mode `{other}`")),
                };
            }
        }
        if let Some(errors) = obj.get("errors") {
            let errors = errors.as_object().ok_or("`errors` must be an object")?;
            for (name, rule) in errors {
                let n = rule.get("fail_first_n").and_then(|n| n.as_u64());
                let n = n.ok_or(format!("error rule for `{name}` needs fail_first_n"))?;
                let tag = rule.get("tag").and_then(|t| t.as_str()).unwrap_or("ProviderError");
                p = p.fail_first(name, n, tag);
            }
        }
        Ok(p)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn log(&self) -> &[CallRecord] {
        &self.log
    }

    pub fn call(&mut self, op: &str, args: Vec<Value>, site: usize) -> Result<Value, RuntimeError> {
        let n = self.op_calls.entry(op.to_string()).or_insert(0);
        let nth = *n;
        *n += 1;
        let inv = self.invocations.entry((op.to_string(), site)).or_insert(0);
        let invocation = *inv;
        *inv += 1;
        let outcome = match self.errors.get(op) {
            Some(rule) if nth < rule.fail_first_n => {
                Err(RuntimeError::new(rule.tag.clone(), format!("{op} failed (call {})", nth + 1)))
            }
            _ => self.respond(op, site, invocation),
        };
        self.log.push(CallRecord {
            op: op.to_string(),
            // Snapshot: later in-place mutation must not rewrite history.
            args: args.iter().map(deep_clone).collect(),
            site,
            invocation,
            outcome: outcome.clone().map_err(|e| e.tag),
        });
        outcome
    }

    fn respond(&mut self, op: &str, site: usize, invocation: u64) -> Result<Value, RuntimeError> {
        let exhausted = |why: &str| RuntimeError::new("ProviderExhausted", format!("{op}: {why}"));
        match self.ops.get_mut(op) {
            None => Err(exhausted("no provider configured")),
            Some(OpMode::Scripted { responses, cursor }) => {
                let r = responses.get(*cursor).cloned().ok_or_else(|| exhausted("scripted responses used up"))?;
                *cursor += 1;
                Ok(r)
            }
            Some(OpMode::Seeded { candidates }) if candidates.is_empty() => Err(exhausted("no candidates")),
            Some(OpMode::Seeded { candidates }) => {
                Ok(candidates[seeded_draw(self.seed, op, site, invocation, candidates.len())].clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_replays_in_order_then_exhausts() {
        let mut p = Provider::new(0).scripted("llm.generate", vec!["A".into(), "B".into()]);
        assert_eq!(p.call("llm.generate", vec![], 0).unwrap(), Value::str("A"));
        assert_eq!(p.call("llm.generate", vec![], 0).unwrap(), Value::str("B"));
        assert_eq!(p.call("llm.generate", vec![], 0).unwrap_err().tag, "ProviderExhausted");
        assert_eq!(p.call("other", vec![], 0).unwrap_err().tag, "ProviderExhausted");
        assert_eq!(p.log().len(), 4);
    }

    #[test]
    fn seeded_is_pure() {
        let cands: Vec<Value> = (0..10).map(Value::Int).collect();
        let run = |seed| {
            let mut p = Provider::new(seed).seeded("s", cands.clone());
            (0..20).map(|i| p.call("s", vec![], i % 3).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn fail_first_n_then_succeed() {
        let mut p = Provider::new(0).scripted("f", vec!["ok".into()]).fail_first("f", 2, "ProviderError");
        assert_eq!(p.call("f", vec![], 0).unwrap_err().tag, "ProviderError");
        assert_eq!(p.call("f", vec![], 0).unwrap_err().tag, "ProviderError");
        assert_eq!(p.call("f", vec![], 0).unwrap(), Value::str("ok"));
    }

    #[test]
    fn parses_script_file_format() {
        let j = serde_json::json!({
            "ops": {
                "llm.generate": {"mode": "scripted", "responses": ["x", "y"]},
                "llm.score": {"mode": "seeded", "candidates": [0.1, 0.5, 0.9]}
            },
            "errors": {"llm.flaky": {"fail_first_n": 2, "tag": "ProviderError"}}
        });
        let mut p = Provider::from_json(&j, 1).unwrap();
        assert_eq!(p.call("llm.generate", vec![], 0).unwrap(), Value::str("x"));
        assert!(matches!(p.call("llm.score", vec![], 0).unwrap(), Value::Float(_)));
        assert!(Provider::from_json(&serde_json::json!({"ops": {"a": {"mode": "x"}}}), 0).is_err());
    }
}
