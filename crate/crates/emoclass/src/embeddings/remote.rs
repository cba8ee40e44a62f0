//! HTTP client for an external encoder service.
//!
//! The protocol is a single JSON POST: `{texts, max_tokens}` in, and
//! `{dim, vectors}` back, with vectors in request order. Any encoder runtime
//! can sit behind it; this artifact never loads the encoder itself.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, EmbedderConfig, EmbeddingError, EmbeddingVector, TextEmbedder};

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
    max_tokens: usize,
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(60)))
        .build()
        .new_agent()
}

/// Request embeddings for a batch of texts. One vector comes back per text,
/// in request order.
pub fn embed_remote(
    texts: &[String],
    config: &EmbedderConfig,
) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
    let endpoint = config
        .endpoint
        .as_deref()
        .ok_or(EmbeddingError::MissingEndpoint)?;
    let url = format!("{}/embed", endpoint.trim_end_matches('/'));
    let request = EmbedRequest {
        texts,
        max_tokens: config.max_tokens,
    };

    let mut response = agent()
        .post(&url)
        .send_json(&request)
        .map_err(|e| EmbeddingError::Network(e.to_string()))?;

    let status = response.status().as_u16();
    if status >= 400 {
        let message = response
            .body_mut()
            .read_to_string()
            .unwrap_or_default()
            .chars()
            .take(500)
            .collect();
        return Err(EmbeddingError::Remote { status, message });
    }

    let body: EmbedResponse = response
        .body_mut()
        .read_json()
        .map_err(|e| EmbeddingError::Format(format!("bad response body: {e}")))?;

    if body.dim != config.dim {
        return Err(EmbeddingError::DimMismatch {
            expected: config.dim,
            got: body.dim,
        });
    }
    if body.vectors.len() != texts.len() {
        return Err(EmbeddingError::DimMismatch {
            expected: texts.len(),
            got: body.vectors.len(),
        });
    }
    let mut vectors = Vec::with_capacity(body.vectors.len());
    for values in body.vectors {
        if values.len() != config.dim {
            return Err(EmbeddingError::DimMismatch {
                expected: config.dim,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::Format("non-finite value in response".into()));
        }
        vectors.push(EmbeddingVector(values));
    }
    Ok(vectors)
}

/// [`TextEmbedder`] wrapper around [`embed_remote`].
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    config: EmbedderConfig,
}

impl RemoteEmbedder {
    pub fn new(config: EmbedderConfig) -> Result<Self, EmbeddingError> {
        if config.backend != Backend::Remote {
            return Err(EmbeddingError::Config(format!(
                "remote embedder needs a remote config, got {}",
                config.backend.as_str()
            )));
        }
        if config.endpoint.is_none() {
            return Err(EmbeddingError::MissingEndpoint);
        }
        Ok(Self { config })
    }
}

impl TextEmbedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn fingerprint(&self) -> String {
        self.config.fingerprint()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        let mut vectors = embed_remote(&[text.to_string()], &self.config)?;
        Ok(vectors.remove(0))
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        embed_remote(texts, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::thread;

    /// One-shot HTTP stub: answers the next `count` requests on a local port
    /// with a fixed status and body, then exits.
    fn spawn_stub(status: u16, body: String, count: usize) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        thread::spawn(move || {
            for _ in 0..count {
                let (stream, _) = match listener.accept() {
                    Ok(pair) => pair,
                    Err(_) => return,
                };
                let mut reader = BufReader::new(stream);
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        break;
                    }
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        content_length = v.trim().parse().unwrap_or(0);
                    }
                }
                let mut payload = vec![0u8; content_length];
                reader.read_exact(&mut payload).ok();
                let mut stream = reader.into_inner();
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).ok();
            }
        });
        format!("http://{addr}")
    }

    fn texts(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn two_texts_come_back_in_order() {
        let endpoint = spawn_stub(
            200,
            r#"{"dim":3,"vectors":[[1.0,0.0,0.0],[0.0,1.0,0.0]]}"#.to_string(),
            1,
        );
        let config = EmbedderConfig::remote(endpoint, 3).unwrap();
        let vectors = embed_remote(&texts(&["first", "second"]), &config).unwrap();
        assert_eq!(vectors.len(), 2);
        assert_eq!(vectors[0].as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(vectors[1].as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn server_error_is_remote_error() {
        let endpoint = spawn_stub(500, "encoder on fire".to_string(), 1);
        let config = EmbedderConfig::remote(endpoint, 3).unwrap();
        match embed_remote(&texts(&["x"]), &config) {
            Err(EmbeddingError::Remote { status: 500, message }) => {
                assert!(message.contains("encoder on fire"));
            }
            other => panic!("expected RemoteError, got {other:?}"),
        }
    }

    #[test]
    fn wrong_length_vector_is_dim_mismatch() {
        let endpoint = spawn_stub(200, r#"{"dim":3,"vectors":[[1.0,2.0]]}"#.to_string(), 1);
        let config = EmbedderConfig::remote(endpoint, 3).unwrap();
        assert!(matches!(
            embed_remote(&texts(&["x"]), &config),
            Err(EmbeddingError::DimMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn wrong_declared_dim_is_dim_mismatch() {
        let endpoint = spawn_stub(200, r#"{"dim":2,"vectors":[[1.0,2.0]]}"#.to_string(), 1);
        let config = EmbedderConfig::remote(endpoint, 3).unwrap();
        assert!(matches!(
            embed_remote(&texts(&["x"]), &config),
            Err(EmbeddingError::DimMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn wrong_vector_count_is_rejected() {
        let endpoint = spawn_stub(200, r#"{"dim":3,"vectors":[[1.0,2.0,3.0]]}"#.to_string(), 1);
        let config = EmbedderConfig::remote(endpoint, 3).unwrap();
        assert!(embed_remote(&texts(&["a", "b"]), &config).is_err());
    }

    #[test]
    fn unreachable_endpoint_is_network_error() {
        // Port 1 is reserved; connections fail fast.
        let config = EmbedderConfig::remote("http://127.0.0.1:1", 3).unwrap();
        assert!(matches!(
            embed_remote(&texts(&["x"]), &config),
            Err(EmbeddingError::Network(_))
        ));
    }

    #[test]
    fn missing_endpoint_is_an_error() {
        let mut config = EmbedderConfig::remote("http://x", 3).unwrap();
        config.endpoint = None;
        assert!(matches!(
            embed_remote(&texts(&["x"]), &config),
            Err(EmbeddingError::MissingEndpoint)
        ));
    }
}
