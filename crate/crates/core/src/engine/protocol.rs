//! Line-delimited JSON spoken between the harness and an engine adapter.
//!
//! Patterns and inputs travel base64-encoded so arbitrary bytes survive.
//! One response line answers each request line; unknown fields are ignored.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{EngineVerdict, MatchResult};

/// Environment variable naming the adapter's coverage counter file.
pub const COV_FILE_ENV: &str = "RETEST_COV_FILE";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRequest {
    pub id: u64,
    pub cmd: String,
    pub pattern_b64: String,
    pub input_b64: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WireResponse {
    Ok { id: u64, matched: bool, span: Option<[usize; 2]>, fullmatch: bool },
    CompileError { id: u64, message: String },
}

impl WireResponse {
    pub fn id(&self) -> u64 {
        match self {
            WireResponse::Ok { id, .. } | WireResponse::CompileError { id, .. } => *id,
        }
    }

    /// The response for a verdict, if it is one the wire can carry.
    pub fn from_verdict(id: u64, v: &EngineVerdict) -> Option<WireResponse> {
        match v {
            EngineVerdict::Ok(m) => Some(WireResponse::Ok {
                id,
                matched: m.matched,
                span: m.span.map(|(s, e)| [s, e]),
                fullmatch: m.fullmatch,
            }),
            EngineVerdict::CompileError(message) => Some(WireResponse::CompileError { id, message: message.clone() }),
            _ => None,
        }
    }

    /// Converts back, rejecting results that break the span invariants.
    pub fn into_verdict(self, input_len: usize) -> Result<EngineVerdict, String> {
        match self {
            WireResponse::CompileError { message, .. } => Ok(EngineVerdict::CompileError(message)),
            WireResponse::Ok { matched, span, fullmatch, .. } => {
                let span = span.map(|[s, e]| (s, e));
                match span {
                    Some((s, e)) if s > e || e > input_len => return Err(format!("span {s}..{e} out of range")),
                    _ => {}
                }
                if matched != span.is_some() || (fullmatch && !matched) {
                    return Err("inconsistent match fields".to_string());
                }
                Ok(EngineVerdict::Ok(MatchResult { matched, span, fullmatch }))
            }
        }
    }
}

pub fn encode(bytes: &[u8]) -> String {
    STANDARD.encode(bytes)
}

pub fn decode(text: &str) -> Result<Vec<u8>, base64::DecodeError> {
    STANDARD.decode(text)
}

impl WireRequest {
    pub fn search(id: u64, pattern: &[u8], input: &[u8]) -> Self {
        WireRequest { id, cmd: "search".to_string(), pattern_b64: encode(pattern), input_b64: encode(input) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_shape() {
        let r = WireRequest::search(7, b"a|b", b"\xff");
        let line = serde_json::to_string(&r).unwrap();
        assert_eq!(line, r#"{"id":7,"cmd":"search","pattern_b64":"YXxi","input_b64":"/w=="}"#);
    }

    #[test]
    fn response_shapes() {
        let ok: WireResponse =
            serde_json::from_str(r#"{"id":1,"status":"ok","matched":true,"span":[0,1],"fullmatch":false,"extra":3}"#)
                .unwrap();
        assert_eq!(ok, WireResponse::Ok { id: 1, matched: true, span: Some([0, 1]), fullmatch: false });
        let ce: WireResponse = serde_json::from_str(r#"{"id":2,"status":"compile_error","message":"x"}"#).unwrap();
        assert_eq!(ce.id(), 2);
        assert!(ok.into_verdict(0).is_err());
    }
}
