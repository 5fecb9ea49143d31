use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("payload length mismatch: {0} vs {1} bytes")]
    LengthMismatch(usize, usize),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error("decoder delivered a corrupted payload for symbol {0}")]
    DecodeMismatch(u64),

    #[error("failed to parse experiment file: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("failed to serialize experiment file: {0}")]
    Serialize(#[from] toml::ser::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
