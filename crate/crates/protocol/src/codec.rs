//! JSON forms of observations and joint actions.

use serde_json::{json, Map, Value};

use mapf_core::episode::{CteObservation, LocalObservation, Observation};
use mapf_core::grid::{Action, JointAction, Position};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("actions must be an object keyed by agent id")]
    NotAnObject,
    #[error("missing action for agent {0}")]
    Missing(usize),
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("action for agent {agent} is not an integer")]
    NotAnInteger { agent: usize },
    #[error("action code {code} for agent {agent} is outside 0..=4")]
    OutOfRange { agent: usize, code: i64 },
}

fn pos(p: Position) -> Value {
    json!([p.x, p.y])
}

pub fn encode_local(obs: &LocalObservation) -> Value {
    json!({ "grid": obs.grid, "pos": pos(obs.pos), "goal": pos(obs.goal) })
}

pub fn encode_cte(obs: &CteObservation) -> Value {
    let positions: Map<String, Value> = obs
        .positions
        .iter()
        .enumerate()
        .map(|(i, p)| (i.to_string(), pos(*p)))
        .collect();
    json!({ "grid": obs.grid, "positions": positions })
}

/// Local observations become an object keyed by agent id; the centralized
/// observation is a single object.
pub fn encode_observation(obs: &Observation) -> Value {
    match obs {
        Observation::Cte(cte) => encode_cte(cte),
        Observation::Local(per_agent) => Value::Object(
            per_agent
                .iter()
                .enumerate()
                .map(|(i, o)| (i.to_string(), encode_local(o)))
                .collect(),
        ),
    }
}

pub fn encode_actions(actions: &JointAction) -> Value {
    Value::Object(
        actions
            .0
            .iter()
            .enumerate()
            .map(|(i, a)| (i.to_string(), json!(a.code())))
            .collect(),
    )
}

/// Parse `{"0": code, "1": code, ...}` for exactly `n` agents.
pub fn decode_actions(value: &Value, n: usize) -> Result<JointAction, DecodeError> {
    let map = value.as_object().ok_or(DecodeError::NotAnObject)?;
    for key in map.keys() {
        match key.parse::<usize>() {
            Ok(i) if i < n => {}
            _ => return Err(DecodeError::UnknownAgent(key.clone())),
        }
    }
    (0..n)
        .map(|agent| {
            let v = map.get(&agent.to_string()).ok_or(DecodeError::Missing(agent))?;
            let code = v.as_i64().ok_or(DecodeError::NotAnInteger { agent })?;
            u8::try_from(code)
                .ok()
                .and_then(Action::from_code)
                .ok_or(DecodeError::OutOfRange { agent, code })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(JointAction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn actions_round_trip() {
        let a = JointAction(vec![Action::Stay, Action::Left, Action::Down]);
        let v = encode_actions(&a);
        assert_eq!(v, json!({"0": 0, "1": 4, "2": 3}));
        assert_eq!(decode_actions(&v, 3).unwrap(), a);
    }

    #[test]
    fn decode_errors() {
        assert_eq!(decode_actions(&json!({"0": 7}), 1), Err(DecodeError::OutOfRange { agent: 0, code: 7 }));
        assert_eq!(decode_actions(&json!({"0": -1}), 1), Err(DecodeError::OutOfRange { agent: 0, code: -1 }));
        assert_eq!(
            decode_actions(&json!({"0": 1, "1": 1}), 3).unwrap_err().to_string(),
            "missing action for agent 2"
        );
        assert!(matches!(decode_actions(&json!({"0": 1, "x": 1}), 1), Err(DecodeError::UnknownAgent(_))));
        assert!(matches!(decode_actions(&json!({"0": 1, "1": 0}), 1), Err(DecodeError::UnknownAgent(_))));
        assert_eq!(decode_actions(&json!([1]), 1), Err(DecodeError::NotAnObject));
        assert_eq!(decode_actions(&json!({"0": 1.5}), 1), Err(DecodeError::NotAnInteger { agent: 0 }));
    }

    #[test]
    fn local_encoding_shape() {
        let obs = LocalObservation {
            grid: vec![vec![1; 5]; 5],
            pos: Position::new(3, 4),
            goal: Position::new(0, 1),
        };
        let v = encode_local(&obs);
        assert_eq!(v["pos"], json!([3, 4]));
        assert_eq!(v["goal"], json!([0, 1]));
        let cells: Vec<i64> = v["grid"]
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|r| r.as_array().unwrap().iter().map(|c| c.as_i64().unwrap()))
            .collect();
        assert_eq!(cells.len(), 25);
    }
}
