use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariant {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// `value <= threshold` for `at_most`, `value >= threshold` for `at_least`.
    pub relation: &'static str,
    pub threshold: f64,
}

impl Invariant {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Invariant {
            name: name.into(),
            passed: value <= threshold,
            value,
            relation: "<=",
            threshold,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Invariant {
            name: name.into(),
            passed: value >= threshold,
            value,
            relation: ">=",
            threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    InvariantFailure,
    ConfigError,
    NumericalError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::InvariantFailure => 1,
            Status::ConfigError => 2,
            Status::NumericalError => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub fracspec: &'static str,
    pub float_format: &'static str,
    pub libm_note: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Versions {
            fracspec: env!("CARGO_PKG_VERSION"),
            float_format: "{:.17e}, '.' decimal, ',' separator, LF",
            libm_note:
                "exp/powf/gamma go through the platform libm; last-bit differences across platforms are possible",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub task: String,
    pub seed: u64,
    pub config: String,
    pub versions: Versions,
    pub threads: usize,
    pub wall_time_s: f64,
    pub status: Status,
    pub error: Option<String>,
    pub invariants: Vec<Invariant>,
    pub files: Vec<String>,
}
