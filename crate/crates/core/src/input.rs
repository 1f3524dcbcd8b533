//! JSON input documents with field-level diagnostics.

use std::fmt;

use serde::de::DeserializeOwned;

/// A rejected input document, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError {
    /// Dotted field path such as `targets[0].radius`; `.` for the document root.
    pub field: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl InputError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "field `{}`", self.field)?;
        if let (Some(line), Some(column)) = (self.line, self.column) {
            write!(f, " (line {line}, column {column})")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for InputError {}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let field = err.path().to_string();
        let inner = err.into_inner();
        // serde_json appends " at line L column C"; report position separately
        let mut message = inner.to_string();
        if let Some(idx) = message.rfind(" at line ") {
            message.truncate(idx);
        }
        InputError {
            field,
            line: Some(inner.line()),
            column: Some(inner.column()),
            message,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Deserialize)]
    #[allow(dead_code)]
    struct Doc {
        inner: Vec<Inner>,
    }

    #[derive(Debug, Deserialize)]
    #[allow(dead_code)]
    struct Inner {
        n: u32,
    }

    #[test]
    fn names_nested_field() {
        let err = from_json::<Doc>(r#"{"inner":[{"n":1},{"n":"x"}]}"#).unwrap_err();
        assert_eq!(err.field, "inner[1].n");
        assert_eq!(err.line, Some(1));
        assert!(err.message.contains("invalid type"), "{}", err.message);
        assert!(err.to_string().starts_with("field `inner[1].n` (line 1"));
    }

    #[test]
    fn syntax_errors_have_positions() {
        let err = from_json::<Doc>("{\n  \"inner\": [\n").unwrap_err();
        assert_eq!(err.line, Some(3));
    }
}
