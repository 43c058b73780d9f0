//! String identifiers for catalog states, e.g. `ho:k=0,omega=1` or
//! `product(ho:k=0,ho:k=0)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::real::{product, BoxState, HoEigenstate, UnitState};
use super::two_vector::{compose, HoSuperposition, RotatingEigenstate, UnitTwoVector};
use super::{SharedReal, SharedTwoVector};
use crate::error::{Error, Result};

/// Parsed form of a state identifier.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Leaf {
        kind: String,
        params: BTreeMap<String, String>,
    },
    Call {
        name: String,
        args: Vec<StateSpec>,
    },
}

fn err(id: &str, reason: impl Into<String>) -> Error {
    Error::StateId {
        id: id.to_string(),
        reason: reason.into(),
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut depth = 0i32;
    let mut start = 0;
    let mut parts = Vec::new();
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// A comma-separated token opens a new state unless it is a `key=value` pair.
fn starts_state(token: &str) -> bool {
    match (token.find('='), token.find([':', '('])) {
        (None, _) => true,
        (Some(eq), Some(sep)) => sep < eq,
        (Some(_), None) => false,
    }
}

impl StateSpec {
    pub fn parse(id: &str) -> Result<StateSpec> {
        let s: String = id.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(err(id, "empty identifier"));
        }
        if let Some(open) = s.find('(') {
            let colon = s.find(':');
            if colon.is_none_or(|c| open < c) {
                if !s.ends_with(')') {
                    return Err(err(id, "unbalanced parentheses"));
                }
                let name = s[..open].to_string();
                let inner = &s[open + 1..s.len() - 1];
                let mut groups: Vec<String> = Vec::new();
                for tok in split_top_level(inner) {
                    if tok.is_empty() {
                        return Err(err(id, "empty argument"));
                    }
                    match groups.last_mut() {
                        Some(last) if !starts_state(tok) => {
                            last.push(',');
                            last.push_str(tok);
                        }
                        _ => groups.push(tok.to_string()),
                    }
                }
                let args = groups.iter().map(|g| StateSpec::parse(g)).collect::<Result<_>>()?;
                return Ok(StateSpec::Call { name, args });
            }
        }
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k.to_string(), r),
            None => (s.clone(), ""),
        };
        let mut params = BTreeMap::new();
        if !rest.is_empty() {
            for pair in rest.split(',') {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| err(id, format!("expected key=value, got `{pair}`")))?;
                if params.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(err(id, format!("parameter `{k}` repeated")));
                }
            }
        }
        Ok(StateSpec::Leaf { kind, params })
    }
}

struct Params<'a> {
    id: &'a str,
    map: BTreeMap<String, String>,
}

impl Params<'_> {
    fn float(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.map.remove(key) {
            Some(v) => v
                .parse()
                .map_err(|_| err(self.id, format!("`{key}` is not a number: `{v}`"))),
            None => default.ok_or_else(|| err(self.id, format!("missing parameter `{key}`"))),
        }
    }

    fn level(&mut self, key: &str, default: Option<u32>) -> Result<u32> {
        match self.map.remove(key) {
            Some(v) => v
                .parse()
                .map_err(|_| err(self.id, format!("`{key}` is not a level: `{v}`"))),
            None => default.ok_or_else(|| err(self.id, format!("missing parameter `{key}`"))),
        }
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<String>>> {
        Ok(self.map.remove(key).map(|v| v.split('|').map(str::to_string).collect()))
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(err(self.id, format!("unknown parameter `{k}`"))),
            None => Ok(()),
        }
    }
}

fn build_real(spec: &StateSpec, id: &str, hbar: f64) -> Result<SharedReal> {
    match spec {
        StateSpec::Leaf { kind, params } => {
            let mut p = Params {
                id,
                map: params.clone(),
            };
            let state: SharedReal = match kind.as_str() {
                "ho" => {
                    let k = p.level("k", Some(0))?;
                    let omega = p.float("omega", Some(1.0))?;
                    let mass = p.float("mass", Some(1.0))?;
                    Arc::new(HoEigenstate::new(k, omega, mass, hbar)?)
                }
                "box" => {
                    let k = p.level("k", Some(1))?;
                    let width = p.float("width", None)?;
                    Arc::new(BoxState::new(k, width, hbar)?)
                }
                "unit" => Arc::new(UnitState::new(hbar)),
                other => return Err(err(id, format!("unknown real state `{other}`"))),
            };
            p.finish()?;
            Ok(state)
        }
        StateSpec::Call { name, args } if name == "product" => {
            let mut it = args.iter().map(|a| build_real(a, id, hbar));
            let first = it.next().ok_or_else(|| err(id, "product needs arguments"))??;
            it.try_fold(first, |acc, next| Ok(Arc::new(product(acc, next?)?) as SharedReal))
        }
        StateSpec::Call { name, .. } => Err(err(id, format!("unknown real combinator `{name}`"))),
    }
}

fn build_two_vector(spec: &StateSpec, id: &str, hbar: f64) -> Result<SharedTwoVector> {
    match spec {
        StateSpec::Leaf { kind, params } => {
            let mut p = Params {
                id,
                map: params.clone(),
            };
            let state: SharedTwoVector = match kind.as_str() {
                "hosup" => {
                    let levels = p
                        .list("levels")?
                        .ok_or_else(|| err(id, "missing parameter `levels`"))?;
                    let weights = p.list("weights")?.unwrap_or_else(|| vec!["1".into(); levels.len()]);
                    if weights.len() != levels.len() {
                        return Err(err(id, "levels and weights differ in length"));
                    }
                    let pairs = levels
                        .iter()
                        .zip(&weights)
                        .map(|(l, w)| {
                            Ok((
                                l.parse().map_err(|_| err(id, format!("bad level `{l}`")))?,
                                w.parse().map_err(|_| err(id, format!("bad weight `{w}`")))?,
                            ))
                        })
                        .collect::<Result<Vec<(u32, f64)>>>()?;
                    let omega = p.float("omega", Some(1.0))?;
                    let mass = p.float("mass", Some(1.0))?;
                    Arc::new(HoSuperposition::new(&pairs, omega, mass, hbar)?)
                }
                "unit" => Arc::new(UnitTwoVector::new(hbar)),
                other => return Err(err(id, format!("unknown two-vector state `{other}`"))),
            };
            p.finish()?;
            Ok(state)
        }
        StateSpec::Call { name, args } => match name.as_str() {
            "rotating" => {
                let [inner] = args.as_slice() else {
                    return Err(err(id, "rotating takes one real state"));
                };
                Ok(Arc::new(RotatingEigenstate::new(build_real(inner, id, hbar)?)))
            }
            "compose" => {
                let mut it = args.iter().map(|a| build_two_vector(a, id, hbar));
                let first = it.next().ok_or_else(|| err(id, "compose needs arguments"))??;
                it.try_fold(first, |acc, next| Ok(Arc::new(compose(acc, next?)?) as SharedTwoVector))
            }
            other => Err(err(id, format!("unknown two-vector combinator `{other}`"))),
        },
    }
}

/// Builds a real stationary state from its identifier.
pub fn parse_real_state(id: &str, hbar: f64) -> Result<SharedReal> {
    build_real(&StateSpec::parse(id)?, id, hbar)
}

/// Builds a two-vector state from its identifier.
pub fn parse_two_vector_state(id: &str, hbar: f64) -> Result<SharedTwoVector> {
    build_two_vector(&StateSpec::parse(id)?, id, hbar)
}
