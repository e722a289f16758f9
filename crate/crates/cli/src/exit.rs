//! Exit-code contract and the error-to-code mapping.

use polycontact::Error;
use serde_json::Value;

pub const OK: u8 = 0;
pub const FAILED: u8 = 1;
pub const UNDETERMINED: u8 = 2;
pub const MALFORMED: u8 = 64;

pub struct Outcome {
    pub command: &'static str,
    pub inputs: Value,
    pub result: Value,
    pub text: String,
    pub code: u8,
}

impl Outcome {
    pub fn new(command: &'static str, inputs: Value, result: Value, text: String, code: u8) -> Self {
        Self {
            command,
            inputs,
            result,
            text,
            code,
        }
    }
}

pub struct Failure {
    pub error: anyhow::Error,
    pub code: u8,
}

impl Failure {
    pub fn malformed(error: anyhow::Error) -> Self {
        Self { error, code: MALFORMED }
    }

    pub fn failed(error: anyhow::Error) -> Self {
        Self { error, code: FAILED }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::NotSkew { .. }
            | Error::DegenerateMetric
            | Error::MixedAlgebra { .. }
            | Error::NotComplexStructure(_)
            | Error::LatticeMismatch(_)
            | Error::OffSphere(_)
            | Error::OffHypersurface(_) => MALFORMED,
            _ => FAILED,
        };
        Self { error: e.into(), code }
    }
}
