use std::fmt;
use std::path::PathBuf;

/// Exit codes of the `certify` verdicts.
pub const EXIT_CERTIFIED: u8 = 0;
pub const EXIT_INCONCLUSIVE: u8 = 10;
pub const EXIT_FAILED: u8 = 20;
/// Exit codes of errors that stop a run before it produces its report.
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_LOCKED: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Io(String),
    Locked(PathBuf),
    Stage { stage: &'static str, message: String },
}

impl Failure {
    pub fn stage(stage: &'static str) -> impl FnOnce(hyperlat_core::Error) -> Failure {
        move |e| Failure::Stage { stage, message: e.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Io(_) => EXIT_IO,
            Failure::Locked(_) => EXIT_LOCKED,
            Failure::Stage { .. } => EXIT_FAILED,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "invalid configuration {m}"),
            Failure::Io(m) => write!(f, "{m}"),
            Failure::Locked(p) => write!(f, "output directory is locked by another run ({} exists)", p.display()),
            Failure::Stage { stage, message } => write!(f, "stage {stage} failed: {message}"),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}
