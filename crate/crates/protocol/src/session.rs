//! One client's view of the protocol: at most one live episode, requests
//! answered strictly in order.

use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use mapf_core::episode::{EpisodeConfig, EpisodeState, ObsMode, StepResult};
use mapf_core::grid::CollisionModel;
use mapf_core::layouts::{all_reference_models, resolve_layout, TaskSet, VariantParams};

use crate::codec::{decode_actions, encode_observation};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Default)]
pub struct SessionDefaults {
    /// Extra directory searched for layout files by name.
    pub layout_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
enum Request {
    Info,
    Reset(ResetRequest),
    Step {
        actions: Option<Value>,
        batch: Option<Vec<Value>>,
    },
    ActionMask,
    Trace,
    Close,
}

#[derive(Debug, Deserialize)]
struct ResetRequest {
    layout: String,
    variant: Option<String>,
    n_agents: Option<usize>,
    seed: Option<u64>,
    obs_mode: Option<ObsMode>,
    sensor_range: Option<usize>,
    t_max: Option<usize>,
    collision: Option<CollisionModel>,
    action_mask: Option<bool>,
    tasks: Option<TaskSet>,
    #[serde(default)]
    random_tasks: bool,
    #[serde(default)]
    params: VariantParams,
}

/// Response text and whether the session should end after sending it.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub line: String,
    pub close: bool,
}

fn ok(mut body: Map<String, Value>) -> Value {
    body.insert("ok".into(), Value::Bool(true));
    Value::Object(body)
}

fn err(message: impl std::fmt::Display) -> Value {
    json!({ "ok": false, "error": message.to_string() })
}

#[derive(Debug, Default)]
pub struct Session {
    defaults: SessionDefaults,
    episode: Option<EpisodeState>,
}

impl Session {
    pub fn new(defaults: SessionDefaults) -> Self {
        Session {
            defaults,
            episode: None,
        }
    }

    pub fn episode(&self) -> Option<&EpisodeState> {
        self.episode.as_ref()
    }

    /// Answer one request line. Malformed input produces an error response
    /// and leaves the session as it was.
    pub fn handle_line(&mut self, line: &str) -> Reply {
        let request: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                return Reply {
                    line: err(format!("malformed request: {e}")).to_string(),
                    close: false,
                }
            }
        };
        let close = matches!(request, Request::Close);
        let body = match self.dispatch(request) {
            Ok(v) => v,
            Err(e) => err(e),
        };
        Reply {
            line: body.to_string(),
            close,
        }
    }

    fn dispatch(&mut self, request: Request) -> Result<Value, String> {
        match request {
            Request::Info => Ok(info()),
            Request::Reset(r) => self.reset(r),
            Request::Step { actions, batch } => self.step(actions, batch),
            Request::ActionMask => {
                let state = self.episode.as_ref().ok_or("no active episode")?;
                Ok(ok(Map::from_iter([("mask".into(), masks(state))])))
            }
            Request::Trace => {
                let state = self.episode.as_ref().ok_or("no active episode")?;
                let trace = serde_json::to_value(state.trace()).map_err(|e| e.to_string())?;
                Ok(ok(Map::from_iter([("trace".into(), trace)])))
            }
            Request::Close => {
                self.episode = None;
                Ok(ok(Map::new()))
            }
        }
    }

    fn reset(&mut self, r: ResetRequest) -> Result<Value, String> {
        let mut params = r.params.clone();
        if r.tasks.is_none() && !r.random_tasks {
            params.n_agents = params.n_agents.or(r.n_agents);
        }
        let built = resolve_layout(&r.layout, r.variant.as_deref(), &params, self.defaults.layout_dir.as_deref())
            .map_err(|e| e.to_string())?;
        let tasks = match (r.tasks, built.default_tasks) {
            (Some(tasks), _) => Some(tasks),
            (None, Some(defaults)) if !r.random_tasks => Some(defaults),
            _ => None,
        };
        let n_agents = match &tasks {
            Some(t) => t.len(),
            None => r.n_agents.ok_or("n_agents is required when tasks are sampled")?,
        };
        let mut config = EpisodeConfig::new(built.grid, n_agents);
        config.tasks = tasks;
        if let Some(mode) = r.obs_mode {
            config.obs_mode = mode;
        }
        if let Some(range) = r.sensor_range {
            config.sensor_range = range;
        }
        if let Some(t_max) = r.t_max {
            config.t_max = t_max;
        }
        if let Some(model) = r.collision {
            config.collision = model;
        }
        config.action_mask = r.action_mask.unwrap_or(false);
        let state = EpisodeState::reset(Arc::new(config), r.seed.unwrap_or(DEFAULT_SEED)).map_err(|e| e.to_string())?;
        let mut body = Map::new();
        body.insert("t".into(), json!(0));
        body.insert("n_agents".into(), json!(state.n_agents()));
        body.insert("positions".into(), json!(state.positions()));
        body.insert("goals".into(), json!(state.tasks().goals()));
        body.insert("obs".into(), encode_observation(&state.observe()));
        if state.config().action_mask {
            body.insert("action_mask".into(), masks(&state));
        }
        self.episode = Some(state);
        Ok(ok(body))
    }

    fn step(&mut self, actions: Option<Value>, batch: Option<Vec<Value>>) -> Result<Value, String> {
        let state = self.episode.as_mut().ok_or("no active episode")?;
        match (actions, batch) {
            (Some(actions), None) => {
                let joint = decode_actions(&actions, state.n_agents()).map_err(|e| e.to_string())?;
                let result = state.step(&joint).map_err(|e| e.to_string())?;
                Ok(ok(step_body(state, &result)))
            }
            (None, Some(batch)) => {
                let mut results = Vec::with_capacity(batch.len());
                for actions in &batch {
                    let outcome = decode_actions(actions, state.n_agents())
                        .map_err(|e| e.to_string())
                        .and_then(|joint| state.step(&joint).map_err(|e| e.to_string()));
                    match outcome {
                        Ok(result) => results.push(Value::Object(step_body(state, &result))),
                        Err(e) => {
                            return Ok(json!({ "ok": false, "error": e, "completed": results.len(), "results": results }));
                        }
                    }
                }
                Ok(ok(Map::from_iter([("results".into(), Value::Array(results))])))
            }
            _ => Err("step needs exactly one of actions or batch".into()),
        }
    }
}

fn masks(state: &EpisodeState) -> Value {
    Value::Object(
        (0..state.n_agents())
            .map(|i| {
                let codes: Vec<u8> = state.action_mask(i).iter().map(|a| a.code()).collect();
                (i.to_string(), json!(codes))
            })
            .collect(),
    )
}

fn step_body(state: &EpisodeState, result: &StepResult) -> Map<String, Value> {
    let mut body = Map::new();
    body.insert("t".into(), json!(state.t()));
    body.insert("obs".into(), encode_observation(&result.observation));
    body.insert("rewards".into(), json!(result.rewards));
    body.insert("terminated".into(), json!(result.terminated));
    body.insert("truncated".into(), json!(result.truncated));
    body.insert("info".into(), json!(result.info));
    if state.config().action_mask && !state.is_finished() {
        body.insert("action_mask".into(), masks(state));
    }
    body
}

pub fn info() -> Value {
    let layouts: Vec<String> = all_reference_models().iter().map(|id| id.name()).collect();
    json!({
        "ok": true,
        "protocol_version": PROTOCOL_VERSION,
        "version": env!("CARGO_PKG_VERSION"),
        "layouts": layouts,
        "obs_modes": ["cte", "local"],
    })
}
