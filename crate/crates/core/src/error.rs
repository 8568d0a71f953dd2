use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("outcome distribution not normalized: {0}")]
    Normalization(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("malformed dataset ({} bad line(s)): {}", .0.len(), format_lines(.0))]
    MalformedRecords(Vec<(usize, String)>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_lines(lines: &[(usize, String)]) -> String {
    let shown: Vec<String> = lines
        .iter()
        .take(20)
        .map(|(line, msg)| format!("line {line}: {msg}"))
        .collect();
    let mut out = shown.join("; ");
    if lines.len() > 20 {
        out.push_str(&format!("; ... {} more", lines.len() - 20));
    }
    out
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
