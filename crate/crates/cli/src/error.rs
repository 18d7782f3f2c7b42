use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] disambig_core::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const DATA: u8 = 3;
    pub const SCHEMA: u8 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use disambig_core::Error as E;
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io(_) => exit::FAILURE,
            CliError::Core(e) => match e {
                E::UnknownKey { .. } | E::InvalidConfig(_) => exit::USAGE,
                E::Io { .. }
                | E::Parse { .. }
                | E::Integrity(_)
                | E::Dimension(_)
                | E::Coverage(_)
                | E::InvalidName(_) => exit::DATA,
                E::SchemaMismatch { .. } => exit::SCHEMA,
                E::DegenerateSplit(_) | E::SingleClass | E::Empty(_) => exit::FAILURE,
            },
        }
    }
}
