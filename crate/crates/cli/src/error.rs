//! Two-way error split driving the process exit code.

/// Usage errors exit 1, data errors exit 2.
pub enum CliError {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

pub fn usage<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Usage(e.into())
}

pub fn data<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Data(e.into())
}
