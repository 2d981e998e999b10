//! Flat `key = value` configuration with `#` comments.
//!
//! Command-line overrides use the same keys (`key=value` or `--key=value`)
//! and replace file values.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::CliError;

/// Every key the front end understands. Anything else is rejected.
pub const KNOWN_KEYS: &[&str] = &[
    "model",
    "r",
    "alpha",
    "sigma",
    "L",
    "rho",
    "pm",
    "method",
    "trials",
    "seed",
    "sweep",
    "values",
    "out",
    "topology",
    "fixture_malice",
    "tail_mass",
    "layout_samples",
    "grid_step",
    "quadrature",
    "max_relays",
    "record_runtime",
    "eps",
    "input",
    "x",
    "title",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    origin: String,
    line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, Entry>,
}

fn config_error(origin: &str, line: usize, message: impl Into<String>) -> CliError {
    CliError::Config {
        origin: origin.to_string(),
        line,
        message: message.into(),
    }
}

impl ConfigMap {
    /// Parses a config file body. `origin` names the source in diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut map = ConfigMap::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(config_error(
                    origin,
                    line,
                    format!("expected `key = value`, got {body:?}"),
                ));
            };
            let key = key.trim();
            if map.entries.contains_key(key) {
                return Err(config_error(origin, line, format!("duplicate key `{key}`")));
            }
            map.insert(key, value.trim(), origin, line)?;
        }
        Ok(map)
    }

    fn insert(
        &mut self,
        key: &str,
        value: &str,
        origin: &str,
        line: usize,
    ) -> Result<(), CliError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(config_error(origin, line, format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(config_error(
                origin,
                line,
                format!("empty value for `{key}`"),
            ));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                origin: origin.to_string(),
                line,
            },
        );
        Ok(())
    }

    /// Applies command-line overrides. Errors cite the 1-based argument index.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, args: &[S]) -> Result<(), CliError> {
        for (idx, arg) in args.iter().enumerate() {
            let arg = arg.as_ref();
            let body = arg.strip_prefix("--").unwrap_or(arg);
            let Some((key, value)) = body.split_once('=') else {
                return Err(config_error(
                    "command line",
                    idx + 1,
                    format!("expected `key=value`, got {arg:?}"),
                ));
            };
            self.insert(key.trim(), value.trim(), "command line", idx + 1)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        self.insert(key, value, "built-in", 0)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    /// Typed lookup; a value that does not parse is reported at its line.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|err| {
                config_error(&e.origin, e.line, format!("bad value for `{key}`: {err}"))
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::MissingKey(key.to_string()))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|item| {
                item.trim().parse().map_err(|err| {
                    config_error(
                        &e.origin,
                        e.line,
                        format!("bad item {item:?} in `{key}`: {err}"),
                    )
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    pub fn error_at(&self, key: &str, message: impl Into<String>) -> CliError {
        match self.entries.get(key) {
            Some(e) => config_error(&e.origin, e.line, message),
            None => CliError::Input(message.into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let c = ConfigMap::parse(
            "# header\nmodel = unit_disk\n\n  r=250 # trailing\nL = 3000\n",
            "cfg",
        )
        .unwrap();
        assert_eq!(c.raw("model"), Some("unit_disk"));
        assert_eq!(c.get::<f64>("r").unwrap(), Some(250.0));
        assert_eq!(c.require::<f64>("L").unwrap(), 3000.0);
        assert_eq!(c.get::<f64>("rho").unwrap(), None);
    }

    #[test]
    fn unknown_key_is_named_with_its_line() {
        let err = ConfigMap::parse("r = 250\nfoo=1\n", "cfg").unwrap_err();
        assert_eq!(err.to_string(), "cfg:2: unknown key `foo`");
    }

    #[test]
    fn syntax_and_value_errors() {
        assert_eq!(
            ConfigMap::parse("r 250\n", "cfg").unwrap_err().to_string(),
            "cfg:1: expected `key = value`, got \"r 250\""
        );
        assert!(ConfigMap::parse("r=1\nr=2\n", "cfg").is_err());
        let c = ConfigMap::parse("\nr = wide\n", "cfg").unwrap();
        let err = c.get::<f64>("r").unwrap_err().to_string();
        assert!(err.starts_with("cfg:2: bad value for `r`"), "{err}");
        assert!(matches!(
            c.require::<f64>("L"),
            Err(CliError::MissingKey(_))
        ));
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut c = ConfigMap::parse("pm = 0.1\n", "cfg").unwrap();
        c.apply_overrides(&["pm=0.3", "--trials=10"]).unwrap();
        assert_eq!(c.get::<f64>("pm").unwrap(), Some(0.3));
        assert_eq!(c.get::<u64>("trials").unwrap(), Some(10));
        assert!(c.apply_overrides(&["bogus=1"]).is_err());
        assert!(c.apply_overrides(&["pm"]).is_err());
    }

    #[test]
    fn lists() {
        let c = ConfigMap::parse("values = 0, 0.1,0.2\n", "cfg").unwrap();
        assert_eq!(
            c.get_list::<f64>("values").unwrap(),
            Some(vec![0.0, 0.1, 0.2])
        );
    }
}
