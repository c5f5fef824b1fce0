use std::fmt;

/// Front-end failure, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(bnstruct::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Lib(bnstruct::Error::Resource(_)) => 3,
            CliError::Lib(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<bnstruct::Error> for CliError {
    fn from(e: bnstruct::Error) -> Self {
        CliError::Lib(e)
    }
}
