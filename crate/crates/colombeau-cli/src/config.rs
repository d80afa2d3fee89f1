//! Plain-text experiment configs: `key = value` lines grouped under
//! `[experiment]` section headers, `#` comments, no quoting. Unknown keys
//! are rejected with the offending line number.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Mollifier,
    Sweep,
    Classify,
    DiffeoCheck,
    Fixtures,
    Ode,
    Wave,
}

impl Kind {
    fn parse(s: &str) -> Option<Kind> {
        Some(match s {
            "mollifier" => Kind::Mollifier,
            "sweep" => Kind::Sweep,
            "classify" => Kind::Classify,
            "diffeo-check" => Kind::DiffeoCheck,
            "fixtures" => Kind::Fixtures,
            "ode" => Kind::Ode,
            "wave" => Kind::Wave,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Mollifier => "mollifier",
            Kind::Sweep => "sweep",
            Kind::Classify => "classify",
            Kind::DiffeoCheck => "diffeo-check",
            Kind::Fixtures => "fixtures",
            Kind::Ode => "ode",
            Kind::Wave => "wave",
        }
    }

    /// The complete key set admitted for this kind (each key has a
    /// default, so a bare `kind = ...` section is a valid experiment).
    fn allowed_keys(&self) -> &'static [&'static str] {
        const COMMON: &[&str] = &["kind", "name"];
        match self {
            Kind::Mollifier => {
                const K: &[&str] = &["kind", "name", "q", "r", "s", "n"];
                K
            }
            Kind::Sweep => {
                const K: &[&str] = &[
                    "kind",
                    "name",
                    "rep",
                    "q",
                    "n",
                    "battery",
                    "eps0",
                    "factor",
                    "count",
                    "k_lo",
                    "k_hi",
                    "alpha",
                    "min_slope",
                ];
                K
            }
            Kind::Classify => {
                const K: &[&str] = &[
                    "kind", "name", "rep", "q", "n", "battery", "mode", "order", "eps0",
                    "factor", "count", "k_lo", "k_hi", "expect",
                ];
                K
            }
            Kind::DiffeoCheck => {
                const K: &[&str] = &["kind", "name", "map", "q", "n", "k_lo", "k_hi", "count"];
                K
            }
            Kind::Fixtures => COMMON,
            Kind::Ode => {
                const K: &[&str] = &[
                    "kind", "name", "f", "c", "x0", "xdot0", "eps", "t_end", "q", "n",
                ];
                K
            }
            Kind::Wave => {
                const K: &[&str] = &["kind", "name", "dim", "nx", "nt", "t_end", "eta", "lip"];
                K
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub kind: Kind,
    pub name: String,
    params: BTreeMap<String, String>,
}

#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl Experiment {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(|s| s.as_str())
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64, String> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| format!("parameter '{key}' must be a number, got '{v}'")),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize, String> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| format!("parameter '{key}' must be an integer, got '{v}'")),
        }
    }

    pub fn get_u32(&self, key: &str, default: u32) -> Result<u32, String> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u32>()
                .map_err(|_| format!("parameter '{key}' must be an integer, got '{v}'")),
        }
    }

    pub fn get_str<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.params.get(key).map(|s| s.as_str()).unwrap_or(default)
    }
}

/// Parse a whole config file into its experiment sections.
pub fn parse(text: &str) -> Result<Vec<Experiment>, ParseError> {
    let mut experiments: Vec<(usize, BTreeMap<String, String>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line != "[experiment]" {
                return Err(ParseError {
                    line: lineno,
                    message: format!("unknown section '{line}' (expected [experiment])"),
                });
            }
            experiments.push((lineno, BTreeMap::new()));
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ParseError {
                line: lineno,
                message: format!("expected key = value, got '{line}'"),
            });
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        let Some((_, current)) = experiments.last_mut() else {
            return Err(ParseError {
                line: lineno,
                message: "key outside any [experiment] section".into(),
            });
        };
        if current.insert(key.clone(), value).is_some() {
            return Err(ParseError {
                line: lineno,
                message: format!("duplicate key '{key}'"),
            });
        }
    }
    if experiments.is_empty() {
        return Err(ParseError {
            line: 0,
            message: "config contains no [experiment] section".into(),
        });
    }
    let mut out = Vec::new();
    for (i, (section_line, params)) in experiments.into_iter().enumerate() {
        let kind_str = params.get("kind").cloned().ok_or(ParseError {
            line: section_line,
            message: "experiment is missing the 'kind' key".into(),
        })?;
        let kind = Kind::parse(&kind_str).ok_or(ParseError {
            line: section_line,
            message: format!(
                "unknown kind '{kind_str}' (expected mollifier, sweep, classify, \
                 diffeo-check, fixtures, ode or wave)"
            ),
        })?;
        for key in params.keys() {
            if !kind.allowed_keys().contains(&key.as_str()) {
                return Err(ParseError {
                    line: section_line,
                    message: format!("unknown key '{key}' for kind '{kind_str}'"),
                });
            }
        }
        let name = params
            .get("name")
            .cloned()
            .unwrap_or_else(|| format!("{}-{}", kind.name(), i + 1));
        out.push(Experiment { kind, name, params });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_sections_with_defaults() {
        let text = "# demo\n[experiment]\nkind = fixtures\n\n[experiment]\nkind = sweep\nq = 2\n";
        let exps = parse(text).unwrap();
        assert_eq!(exps.len(), 2);
        assert_eq!(exps[0].kind, Kind::Fixtures);
        assert_eq!(exps[1].get_u32("q", 0).unwrap(), 2);
        assert_eq!(exps[1].name, "sweep-2");
    }

    #[test]
    fn rejects_unknown_key_with_line() {
        let text = "[experiment]\nkind = mollifier\nbogus = 1\n";
        let err = parse(text).unwrap_err();
        assert!(err.message.contains("bogus"));
    }

    #[test]
    fn rejects_malformed_line() {
        let err = parse("[experiment]\nkind mollifier\n").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn rejects_key_outside_section() {
        let err = parse("kind = mollifier\n").unwrap_err();
        assert_eq!(err.line, 1);
    }
}
