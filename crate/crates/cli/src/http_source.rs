//! Blocking UniProt REST page source.
//!
//! The next-page cursor is the full URL from the `Link: <...>; rel="next"`
//! response header.

use std::time::Duration;

use hpslpred::dataset::uniprot::{Page, PageSource, TSV_FIELDS};
use hpslpred::dataset::DatasetError;
use reqwest::blocking::Client;
use reqwest::header::LINK;
use reqwest::StatusCode;

pub const PAGE_SIZE: usize = 500;

pub struct HttpSource {
    client: Client,
    endpoint: String,
    retries: u32,
    backoff: Duration,
}

impl HttpSource {
    pub fn new(endpoint: &str) -> Result<Self, DatasetError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(120))
            .user_agent(concat!("hpslpred/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| DatasetError::Transport(e.to_string()))?;
        Ok(HttpSource { client, endpoint: endpoint.to_string(), retries: 3, backoff: Duration::from_secs(2) })
    }

    fn first_url(&self, query: &str) -> Result<reqwest::Url, DatasetError> {
        reqwest::Url::parse_with_params(
            &self.endpoint,
            &[("query", query), ("format", "tsv"), ("fields", TSV_FIELDS), ("size", &PAGE_SIZE.to_string())],
        )
        .map_err(|e| DatasetError::Transport(format!("bad endpoint {}: {e}", self.endpoint)))
    }
}

/// Extract the `rel="next"` target from a `Link` header value.
pub fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let (url, params) = part.split_once(';')?;
        params
            .split(';')
            .any(|p| p.trim().replace(' ', "") == "rel=\"next\"")
            .then(|| url.trim().trim_start_matches('<').trim_end_matches('>').to_string())
    })
}

fn retryable(status: StatusCode) -> bool {
    status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS
}

impl PageSource for HttpSource {
    fn fetch_page(&self, query: &str, cursor: Option<&str>) -> Result<Page, DatasetError> {
        let url = match cursor {
            Some(c) => reqwest::Url::parse(c).map_err(|e| DatasetError::Transport(format!("bad cursor {c}: {e}")))?,
            None => self.first_url(query)?,
        };
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                log::warn!("retrying {url} ({attempt}/{}): {last}", self.retries);
                std::thread::sleep(self.backoff * attempt);
            }
            let resp = match self.client.get(url.clone()).send() {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status();
            if retryable(status) {
                last = format!("HTTP {status}");
                continue;
            }
            if !status.is_success() {
                return Err(DatasetError::Transport(format!("{url}: HTTP {status}")));
            }
            let next = resp.headers().get(LINK).and_then(|v| v.to_str().ok()).and_then(next_link);
            let body = resp.text().map_err(|e| DatasetError::Transport(e.to_string()))?;
            return Ok(Page { body, next });
        }
        Err(DatasetError::Transport(format!("{url}: giving up after {} attempts: {last}", self.retries + 1)))
    }
}
