use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use axum::extract::FromRequestParts;
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use serde::{Deserialize, Serialize};

use crate::api::ApiError;
use crate::AppState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Curator,
    Operator,
    DataUser,
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "curator" => Ok(Role::Curator),
            "operator" => Ok(Role::Operator),
            "data_user" => Ok(Role::DataUser),
            _ => Err(format!("unknown role `{s}`")),
        }
    }
}

/// Static bearer tokens, one role per token.
#[derive(Clone, Debug, Default)]
pub struct Tokens(HashMap<String, Role>);

impl Tokens {
    /// Parses `token role` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(token), Some(role), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(format!("line {}: expected `token role`", i + 1));
            };
            if map.insert(token.to_string(), role.parse()?).is_some() {
                return Err(format!("line {}: duplicate token", i + 1));
            }
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Role)>) -> Self {
        Self(pairs.into_iter().map(|(t, r)| (t.to_string(), r)).collect())
    }

    pub fn role(&self, token: &str) -> Option<Role> {
        self.0.get(token).copied()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Principal {
    pub role: Role,
}

impl Principal {
    pub fn require(&self, allowed: &[Role]) -> Result<(), ApiError> {
        if allowed.contains(&self.role) {
            Ok(())
        } else {
            Err(ApiError::new(StatusCode::FORBIDDEN, "role not permitted for this endpoint"))
        }
    }
}

impl FromRequestParts<Arc<AppState>> for Principal {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Arc<AppState>) -> Result<Self, ApiError> {
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim);
        match token.and_then(|t| state.tokens.role(t)) {
            Some(role) => Ok(Principal { role }),
            None => Err(ApiError::new(StatusCode::UNAUTHORIZED, "missing or unknown bearer token")),
        }
    }
}
