//! Policies living in another process. Each step the harness writes one
//! JSON line `{"t", "n_agents", "obs", "action_mask"?}` to the child's
//! stdin and reads back one line holding an action object keyed by agent
//! id, in the same encoding the protocol server accepts.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde_json::{json, Map, Value};

use mapf_core::episode::EpisodeState;
use mapf_core::grid::JointAction;
use mapf_protocol::{decode_actions, encode_observation};

use crate::error::BenchError;

pub struct ExternalPolicy {
    child: Child,
    stdin: Option<BufWriter<ChildStdin>>,
    stdout: BufReader<ChildStdout>,
}

impl ExternalPolicy {
    /// Start `cmd` through the shell.
    pub fn spawn(cmd: &str) -> Result<Self, BenchError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| BenchError::Policy(format!("cannot start {cmd:?}: {e}")))?;
        let stdin = child.stdin.take().map(BufWriter::new);
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalPolicy { child, stdin, stdout })
    }

    pub fn act(&mut self, state: &EpisodeState) -> Result<JointAction, BenchError> {
        let mut request = json!({
            "t": state.t(),
            "n_agents": state.n_agents(),
            "obs": encode_observation(&state.observe()),
        });
        if state.config().action_mask {
            let masks: Map<String, Value> = (0..state.n_agents())
                .map(|i| {
                    let codes: Vec<u8> = state.action_mask(i).iter().map(|a| a.code()).collect();
                    (i.to_string(), json!(codes))
                })
                .collect();
            request["action_mask"] = Value::Object(masks);
        }
        let stdin = self.stdin.as_mut().ok_or_else(|| BenchError::Policy("stdin closed".into()))?;
        writeln!(stdin, "{request}")
            .and_then(|_| stdin.flush())
            .map_err(|e| BenchError::Policy(format!("write failed: {e}")))?;
        let mut line = String::new();
        let read = self
            .stdout
            .read_line(&mut line)
            .map_err(|e| BenchError::Policy(format!("read failed: {e}")))?;
        if read == 0 {
            return Err(BenchError::Policy("policy exited before answering".into()));
        }
        let value: Value =
            serde_json::from_str(line.trim()).map_err(|e| BenchError::Policy(format!("bad reply {line:?}: {e}")))?;
        decode_actions(&value, state.n_agents()).map_err(|e| BenchError::Policy(e.to_string()))
    }

    /// Close the policy's input and wait for it to exit.
    pub fn finish(mut self) -> Result<(), BenchError> {
        drop(self.stdin.take());
        self.child
            .wait()
            .map(|_| ())
            .map_err(|e| BenchError::Policy(format!("wait failed: {e}")))
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        if self.stdin.take().is_some() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}
