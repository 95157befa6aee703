use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The scenario violates an assumption of the echo model, e.g. the
    /// round-trip delay is longer than one OFDM symbol.
    #[error("model validity: {0}")]
    ModelValidity(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("trial failed at snr={snr_db} dB, pn={pn}, trial={trial}: {source}")]
    Trial {
        snr_db: f64,
        pn: String,
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
