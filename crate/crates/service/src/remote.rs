//! Backend that posts rendered prompts to a model endpoint over HTTP.
//!
//! The request body is the full instruction text; the response body must
//! contain the triples JSON object, optionally surrounded by other text.

use std::time::Duration;

use nestgraph_core::decomposition::{BackendError, BackendRequest, ExtractionBackend, RawTriples};

pub struct RemoteBackend {
    url: String,
    credential: Option<String>,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(url: impl Into<String>, credential: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self {
            url: url.into(),
            credential,
            agent,
        }
    }
}

/// The outermost `{...}` of a model answer.
fn json_object(body: &str) -> Option<&str> {
    let start = body.find('{')?;
    let end = body.rfind('}')?;
    (start < end).then(|| &body[start..=end])
}

pub fn parse_answer(body: &str) -> Result<RawTriples, BackendError> {
    let json = json_object(body).ok_or_else(|| BackendError::Malformed("no JSON object in response".into()))?;
    serde_json::from_str(json).map_err(|e| BackendError::Malformed(e.to_string()))
}

impl ExtractionBackend for RemoteBackend {
    fn mode_name(&self) -> &str {
        "remote"
    }

    fn complete(&self, request: &BackendRequest) -> Result<RawTriples, BackendError> {
        let prompt = request.render_prompt()?;
        let mut call = self.agent.post(&self.url).header("content-type", "text/plain; charset=utf-8");
        if let Some(key) = &self.credential {
            call = call.header("authorization", format!("Bearer {key}"));
        }
        let mut response = call.send(prompt).map_err(|e| BackendError::Unreachable(e.to_string()))?;
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Unreachable(e.to_string()))?;
        parse_answer(&body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answers_may_wrap_the_json() {
        let raw = parse_answer("Sure:\n```json\n{\"entities\": [{\"key\": \"a\", \"label\": \"x\"}]}\n```").unwrap();
        assert_eq!(raw.entities.len(), 1);
        assert!(raw.relations.is_empty());
        assert!(matches!(parse_answer("no idea"), Err(BackendError::Malformed(_))));
        assert!(matches!(parse_answer("{\"entities\": 3}"), Err(BackendError::Malformed(_))));
    }
}
