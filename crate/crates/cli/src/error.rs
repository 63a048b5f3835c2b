use std::fmt;

/// Exit-code classes: 2 usage, 3 applicability, 4 verification failure.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Applicability(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Applicability(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Applicability(m) | CliError::Verification(m) => f.write_str(m),
        }
    }
}

impl From<cf_certify::Error> for CliError {
    fn from(e: cf_certify::Error) -> Self {
        use cf_certify::Error as E;
        match e {
            E::AlphaOutOfRange { .. } | E::Infeasible { .. } | E::TransformDomain(_) => {
                CliError::Applicability(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
