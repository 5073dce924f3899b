use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Duration;

use async_trait::async_trait;
use scraper::{Html, Node};
use serde::Deserialize;
use serde_json::Value;

use super::{http_client, str_arg, SideEffects, Tool, ToolError, ToolOutput, ToolSpec};
use crate::llm::{Schema, TypeTag};

/// Elements whose text never reaches the model.
const SKIPPED: &[&str] = &["script", "style", "nav", "noscript", "template", "svg", "head"];

/// Visible text of the `<body>`, whitespace collapsed.
pub fn body_text(html: &str) -> String {
    let doc = Html::parse_document(html);
    let Some(body) = doc
        .root_element()
        .descendants()
        .find(|n| n.value().as_element().is_some_and(|e| e.name() == "body"))
    else {
        return String::new();
    };
    let mut words: Vec<&str> = Vec::new();
    for node in body.descendants() {
        let Node::Text(text) = node.value() else { continue };
        let hidden = node
            .ancestors()
            .any(|a| a.value().as_element().is_some_and(|e| SKIPPED.contains(&e.name())));
        if !hidden {
            words.extend(text.split_whitespace());
        }
    }
    words.join(" ")
}

#[derive(Deserialize)]
struct WebIndex {
    pages: HashMap<String, String>,
}

pub enum WebSource {
    Http(reqwest::Client),
    /// Committed pages keyed by URL through `index.json`.
    Fixture { dir: PathBuf, pages: HashMap<String, String> },
}

impl WebSource {
    pub fn http(timeout: Duration) -> Result<Self, ToolError> {
        Ok(Self::Http(http_client(timeout)?))
    }

    pub fn fixture(dir: impl Into<PathBuf>) -> Result<Self, ToolError> {
        let dir = dir.into();
        let index_path = dir.join("index.json");
        let text = std::fs::read_to_string(&index_path)
            .map_err(|e| ToolError::Unavailable(format!("{}: {e}", index_path.display())))?;
        let index: WebIndex =
            serde_json::from_str(&text).map_err(|e| ToolError::Unavailable(format!("{}: {e}", index_path.display())))?;
        Ok(Self::Fixture { dir, pages: index.pages })
    }

    /// Body and whether it is HTML.
    async fn get(&self, url: &str) -> Result<(String, bool), ToolError> {
        match self {
            WebSource::Http(client) => {
                let resp = client.get(url).send().await.map_err(|e| ToolError::Unavailable(e.to_string()))?;
                let status = resp.status();
                if !status.is_success() {
                    return Err(ToolError::Fetch {
                        status: status.as_u16(),
                        url: url.to_string(),
                    });
                }
                let is_html = resp
                    .headers()
                    .get(reqwest::header::CONTENT_TYPE)
                    .and_then(|v| v.to_str().ok())
                    .is_some_and(|v| v.contains("html"));
                let body = resp.text().await.map_err(|e| ToolError::Unavailable(e.to_string()))?;
                Ok((body, is_html))
            }
            WebSource::Fixture { dir, pages } => {
                let file = pages.get(url).ok_or_else(|| ToolError::Fetch {
                    status: 404,
                    url: url.to_string(),
                })?;
                let body = tokio::fs::read_to_string(dir.join(file))
                    .await
                    .map_err(|e| ToolError::Unavailable(format!("{file}: {e}")))?;
                Ok((body, file.ends_with(".html") || file.ends_with(".htm")))
            }
        }
    }
}

pub struct WebFetchTool {
    spec: ToolSpec,
    source: WebSource,
}

impl WebFetchTool {
    pub fn new(source: WebSource) -> Self {
        Self {
            spec: ToolSpec {
                name: "web_fetch",
                description: "Fetch a web page (protocol docs, announcements, news) and return the visible body text.",
                args: Schema::new().required("url", TypeTag::String),
                side_effects: SideEffects::ReadOnly,
            },
            source,
        }
    }

    /// Body text for HTML, raw text otherwise.
    pub async fn fetch(&self, url: &str) -> Result<ToolOutput, ToolError> {
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            return Err(ToolError::InvalidArgs {
                tool: "web_fetch".into(),
                message: format!("not an http(s) url: {url}"),
            });
        }
        let (body, is_html) = self.source.get(url).await?;
        let text = if is_html { body_text(&body) } else { body };
        Ok(ToolOutput::new(text, Some(url.to_string())))
    }
}

#[async_trait]
impl Tool for WebFetchTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    async fn call(&self, args: &Value) -> Result<ToolOutput, ToolError> {
        self.fetch(str_arg("web_fetch", args, "url")?).await
    }
}
