use alloc::string::String;
use core::fmt;

/// Rejected configuration or out-of-range parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl core::error::Error for ConfigError {}

#[macro_export]
macro_rules! config_err {
    ($($arg:tt)*) => {
        $crate::error::ConfigError(alloc::format!($($arg)*))
    };
}
