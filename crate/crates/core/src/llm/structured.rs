//! Pulling JSON objects out of free-form model output.

use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeTag {
    String,
    Number,
    Integer,
    Bool,
    Array(Box<TypeTag>),
    Object,
    Any,
}

impl TypeTag {
    fn check(&self, v: &Value) -> bool {
        match self {
            TypeTag::String => v.is_string(),
            TypeTag::Number => v.is_number(),
            TypeTag::Integer => v.is_i64() || v.is_u64(),
            TypeTag::Bool => v.is_boolean(),
            TypeTag::Array(inner) => v.as_array().is_some_and(|items| items.iter().all(|i| inner.check(i))),
            TypeTag::Object => v.is_object(),
            TypeTag::Any => true,
        }
    }

    fn describe(&self) -> String {
        match self {
            TypeTag::String => "string".into(),
            TypeTag::Number => "number".into(),
            TypeTag::Integer => "integer".into(),
            TypeTag::Bool => "boolean".into(),
            TypeTag::Array(inner) => format!("array of {}", inner.describe()),
            TypeTag::Object => "object".into(),
            TypeTag::Any => "any value".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: &'static str,
    pub tag: TypeTag,
    pub required: bool,
}

/// Expected shape of a JSON object: field names with type tags.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    pub fields: Vec<FieldSpec>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn required(mut self, name: &'static str, tag: TypeTag) -> Self {
        self.fields.push(FieldSpec { name, tag, required: true });
        self
    }

    pub fn optional(mut self, name: &'static str, tag: TypeTag) -> Self {
        self.fields.push(FieldSpec {
            name,
            tag,
            required: false,
        });
        self
    }

    pub fn validate(&self, value: &Value) -> Result<(), String> {
        let obj = value.as_object().ok_or("expected a JSON object")?;
        for f in &self.fields {
            match obj.get(f.name) {
                None | Some(Value::Null) if f.required => return Err(format!("missing field \"{}\"", f.name)),
                None | Some(Value::Null) => {}
                Some(v) if !f.tag.check(v) => {
                    return Err(format!("field \"{}\" must be {}", f.name, f.tag.describe()));
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// One-line description used in prompts and repair messages.
    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .fields
            .iter()
            .map(|f| {
                format!(
                    "\"{}\": {}{}",
                    f.name,
                    f.tag.describe(),
                    if f.required { "" } else { " (optional)" }
                )
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// End index (exclusive) of the balanced object starting at `start`.
fn object_end(text: &str, start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(start + i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

fn first_object(text: &str) -> Option<Value> {
    let mut from = 0;
    while let Some(rel) = text[from..].find('{') {
        let start = from + rel;
        if let Some(end) = object_end(text, start) {
            if let Ok(v) = serde_json::from_str::<Value>(&text[start..end]) {
                return Some(v);
            }
        }
        from = start + 1;
    }
    None
}

/// First JSON object in `text`, preferring the body of a code fence.
pub fn extract_json(text: &str) -> Option<Value> {
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let body_start = after.find('\n').map_or(0, |n| n + 1);
        let Some(close) = after[body_start..].find("```") else {
            break;
        };
        if let Some(v) = first_object(&after[body_start..body_start + close]) {
            return Some(v);
        }
        rest = &after[body_start + close + 3..];
    }
    first_object(text)
}

/// Extracts and validates; the error text is suitable for a repair prompt.
pub fn parse_with_schema(text: &str, schema: &Schema) -> Result<Value, String> {
    let value = extract_json(text).ok_or("no JSON object found in the reply")?;
    schema.validate(&value)?;
    Ok(value)
}
