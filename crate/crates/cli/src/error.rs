use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Invariant(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Numerical(_) => "numerical",
            Self::Invariant(_) => "invariant",
        }
    }

    /// `error kind=<kind> reason="<message>"` on a single line.
    pub fn line(&self) -> String {
        let reason = self.to_string().replace('\n', " ").replace('"', "'");
        format!("error kind={} reason=\"{}\"", self.kind(), reason)
    }
}

/// Errors raised while checking inputs.
pub fn config(e: nlgauge::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Errors raised during computation.
pub fn compute(e: nlgauge::Error) -> CliError {
    use nlgauge::Error as E;
    match e {
        E::Invariant(_) => CliError::Invariant(e.to_string()),
        E::Blowup { .. } | E::NormDrift { .. } | E::NonFinite(_) => CliError::Numerical(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}
