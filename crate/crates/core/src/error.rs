use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "field {field_au:.6e} au ({field_v_per_cm:.2} V/cm) is not below the classical ionization \
         threshold F_c = {threshold_au:.6e} au ({threshold_v_per_cm:.2} V/cm){detail}"
    )]
    AboveThreshold {
        field_au: f64,
        field_v_per_cm: f64,
        threshold_au: f64,
        threshold_v_per_cm: f64,
        detail: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("packet construction error: {0}")]
    Construction(String),

    #[error("no period found for {what} below search bound {bound}")]
    SearchBound { what: String, bound: i64 },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}
