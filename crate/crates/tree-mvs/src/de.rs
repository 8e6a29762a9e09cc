//! Strict deserialization of internally tagged objects.
//!
//! Serde ignores `deny_unknown_fields` inside internally tagged enums, so a
//! config typo like a stray `"p"` next to `{"kind": "mean"}` would pass
//! silently. The tagged enums below route through this key-checked map
//! instead.

use serde::de::{DeserializeOwned, Error};
use serde_json::{Map, Value};

pub(crate) struct StrictTagged<'a> {
    tag_key: &'static str,
    tag: &'a str,
    map: &'a Map<String, Value>,
}

impl<'a> StrictTagged<'a> {
    pub fn new<E: Error>(value: &'a Value, tag_key: &'static str) -> Result<Self, E> {
        let map = value
            .as_object()
            .ok_or_else(|| E::custom(format!("expected an object carrying a `{tag_key}` tag")))?;
        let tag = map
            .get(tag_key)
            .and_then(Value::as_str)
            .ok_or_else(|| E::custom(format!("missing or non-string `{tag_key}` tag")))?;
        Ok(StrictTagged { tag_key, tag, map })
    }

    pub fn tag(&self) -> &str {
        self.tag
    }

    /// Rejects any key outside `allowed` (the tag key itself is always fine).
    pub fn allow<E: Error>(&self, allowed: &[&str]) -> Result<(), E> {
        for key in self.map.keys() {
            if key != self.tag_key && !allowed.iter().any(|a| a == key) {
                return Err(E::custom(format!(
                    "unknown field `{key}` for {} `{}`",
                    self.tag_key, self.tag
                )));
            }
        }
        Ok(())
    }

    pub fn required<T: DeserializeOwned, E: Error>(&self, field: &str) -> Result<T, E> {
        let value = self.map.get(field).ok_or_else(|| {
            E::custom(format!("{} `{}` requires field `{field}`", self.tag_key, self.tag))
        })?;
        serde_json::from_value(value.clone())
            .map_err(|e| E::custom(format!("field `{field}`: {e}")))
    }

    pub fn optional<T: DeserializeOwned, E: Error>(&self, field: &str) -> Result<Option<T>, E> {
        match self.map.get(field) {
            None | Some(Value::Null) => Ok(None),
            Some(value) => serde_json::from_value(value.clone())
                .map(Some)
                .map_err(|e| E::custom(format!("field `{field}`: {e}"))),
        }
    }

    pub fn unknown_tag<T, E: Error>(&self, known: &[&str]) -> Result<T, E> {
        Err(E::custom(format!(
            "unknown {} `{}`, expected one of: {}",
            self.tag_key,
            self.tag,
            known.join(", ")
        )))
    }
}
