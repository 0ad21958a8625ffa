//! String identifiers for the built-in supremands: `name[:key=value,...]`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::builtins::{
    HCompose, LowerOrderExample, PureHessianNorm, SmoothedHessianNorm, SquaredHessian,
};
use super::profile::{EtaWeighted, IdentityProfile, Profile, SlopeWeighted, SquareProfile};
use super::Supremand;
use crate::error::{Error, Result};

/// A parsed identifier such as `smoothed-hessian-norm:eps=0.1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupremandSpec {
    pub name: String,
    pub params: Vec<(String, String)>,
}

impl FromStr for SupremandSpec {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let parse_err = |reason: &str| Error::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = input.trim();
        let (name, rest) = match trimmed.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (trimmed, None),
        };
        if name.is_empty() {
            return Err(parse_err("empty supremand name"));
        }
        let mut params = Vec::new();
        if let Some(rest) = rest {
            for item in rest.split(',') {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| parse_err(&format!("expected key=value, found `{item}`")))?;
                let (k, v) = (k.trim(), v.trim());
                if k.is_empty() || v.is_empty() {
                    return Err(parse_err(&format!("empty key or value in `{item}`")));
                }
                if params.iter().any(|(pk, _): &(String, String)| pk == k) {
                    return Err(parse_err(&format!("duplicate key `{k}`")));
                }
                params.push((k.to_string(), v.to_string()));
            }
        }
        Ok(SupremandSpec {
            name: name.to_string(),
            params,
        })
    }
}

impl fmt::Display for SupremandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { ':' } else { ',' })?;
        }
        Ok(())
    }
}

impl SupremandSpec {
    fn err(&self, reason: String) -> Error {
        Error::Parse {
            input: self.to_string(),
            reason,
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.params {
            if !allowed.contains(&k.as_str()) {
                return Err(self.err(format!(
                    "unknown key `{k}` for `{}` (allowed: {})",
                    self.name,
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn float(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.raw(key) {
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| self.err(format!("`{key}` must be a decimal number, found `{v}`"))),
            None => default.ok_or_else(|| self.err(format!("missing required key `{key}`"))),
        }
    }

    /// Builds the supremand in dimension `dim`.
    pub fn build(&self, dim: usize) -> Result<Arc<dyn Supremand>> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        let h: Arc<dyn Supremand> = match self.name.as_str() {
            "pure-hessian-norm" => {
                self.check_keys(&[])?;
                Arc::new(PureHessianNorm::new(dim))
            }
            "smoothed-hessian-norm" => {
                self.check_keys(&["eps"])?;
                let eps = self.float("eps", None)?;
                if eps <= 0.0 {
                    return Err(self.err(format!("eps must be > 0, found {eps}")));
                }
                Arc::new(SmoothedHessianNorm::new(dim, eps))
            }
            "squared-hessian" => {
                self.check_keys(&[])?;
                Arc::new(SquaredHessian::new(dim))
            }
            "lower-order" => {
                self.check_keys(&["s", "t", "beta"])?;
                let s = self.float("s", Some(0.5))?;
                let t = self.float("t", Some(0.5))?;
                let beta = self.float("beta", Some(1.0))?;
                Arc::new(
                    LowerOrderExample::new(dim, s, t, beta).map_err(|e| self.err(e.to_string()))?,
                )
            }
            "h-compose" => {
                self.check_keys(&["profile"])?;
                let profile = parse_profile(self.raw("profile").unwrap_or("identity"))?;
                Arc::new(HCompose::new(dim, profile))
            }
            other => return Err(self.err(format!("unknown supremand `{other}`"))),
        };
        Ok(h)
    }
}

/// Parses and builds a supremand from its identifier.
pub fn parse_supremand(spec: &str, dim: usize) -> Result<Arc<dyn Supremand>> {
    spec.parse::<SupremandSpec>()?.build(dim)
}

/// Looks up a built-in profile by name.
pub fn parse_profile(name: &str) -> Result<Arc<dyn Profile>> {
    Ok(match name.trim() {
        "identity" => Arc::new(IdentityProfile),
        "square" => Arc::new(SquareProfile),
        "eta-weighted" => Arc::new(EtaWeighted),
        "slope-weighted" => Arc::new(SlopeWeighted),
        other => {
            return Err(Error::Parse {
                input: other.to_string(),
                reason:
                    "unknown profile (expected identity, square, eta-weighted or slope-weighted)"
                        .into(),
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names_and_params() {
        let s: SupremandSpec = "smoothed-hessian-norm:eps=0.1".parse().unwrap();
        assert_eq!(s.name, "smoothed-hessian-norm");
        assert_eq!(s.params, vec![("eps".to_string(), "0.1".to_string())]);
        assert_eq!(s.to_string(), "smoothed-hessian-norm:eps=0.1");
        let h = parse_supremand("lower-order:s=0.25,t=0.5,beta=2", 1).unwrap();
        assert_eq!(h.info().name, "lower-order:s=0.25,t=0.5,beta=2");
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "nope",
            "smoothed-hessian-norm",
            "smoothed-hessian-norm:eps",
            "smoothed-hessian-norm:eps=abc",
            "smoothed-hessian-norm:eps=-1",
            "pure-hessian-norm:eps=1",
            "lower-order:s=0.5,s=0.5",
            "h-compose:profile=cubic",
        ] {
            assert!(parse_supremand(bad, 1).is_err(), "{bad}");
        }
    }
}
