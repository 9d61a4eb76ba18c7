//! Self-check of structured output: every verb's document must carry its
//! required keys with the right JSON types before it is printed.

use serde_json::Value;

/// `(key, type)` pairs; types are `s` string, `b` bool, `u` unsigned,
/// `a` array, `i` integer (possibly signed).
fn requirements(verb: &str) -> &'static [(&'static str, char)] {
    match verb {
        "validate" => &[("file", 's'), ("checked_to", 'u'), ("clean", 'b'), ("defects", 'a'), ("cofinal", 's')],
        "fmt" => &[("file", 's'), ("canonical", 's')],
        "telescope" => &[("file", 's'), ("cuts", 'a'), ("canonical", 's')],
        "split" => &[("file", 's'), ("level", 'u'), ("canonical", 's')],
        "heights" => &[("file", 's'), ("level", 'u'), ("heights", 'a')],
        "rank" => &[("labels", 'a'), ("coords", 'a')],
        "successor" => &[("steps", 'i'), ("labels", 's')],
        "orbit" => &[("steps", 'u'), ("orbit", 'a')],
        "odometer" => &[("space", 's')],
        "towers" => &[("space", 's'), ("level", 'u'), ("towers", 'a'), ("resolved", 'b')],
        "rokhlin" => &[("marker_level", 'u'), ("m", 'u'), ("eps", 's'), ("disjoint", 'b'), ("coverage", 'a')],
        "approx" => &[("stage", 'u'), ("eps", 's'), ("distances", 'a')],
        "build-diagram" => &[("depth", 'u'), ("canonical", 's'), ("conjugacy_holds", 'b'), ("conjugacy_samples", 'u')],
        "rank1" => &[("space", 's'), ("heights", 'a'), ("canonical", 's')],
        "distance" => &[("depth", 'u'), ("rows", 'a'), ("metric", 'o')],
        "witness" => &[("rows", 'a')],
        _ => &[],
    }
}

pub fn validate(verb: &str, doc: &Value) -> Result<(), String> {
    let obj = doc.as_object().ok_or("structured output must be an object")?;
    match obj.get("verb").and_then(Value::as_str) {
        Some(v) if v == verb => {}
        other => return Err(format!("document verb {other:?} does not match `{verb}`")),
    }
    for (key, ty) in requirements(verb) {
        let value = obj.get(*key).ok_or_else(|| format!("`{verb}` output misses key `{key}`"))?;
        let ok = match ty {
            's' => value.is_string(),
            'b' => value.is_boolean(),
            'u' => value.is_u64(),
            'i' => value.is_i64() || value.is_u64(),
            'a' => value.is_array(),
            'o' => value.is_object(),
            _ => false,
        };
        if !ok {
            return Err(format!("`{verb}` output key `{key}` has the wrong type"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn accepts_matching_documents() {
        let doc = json!({ "verb": "fmt", "file": "x.bbd", "canonical": "bbd 1\n" });
        assert!(validate("fmt", &doc).is_ok());
    }

    #[test]
    fn rejects_missing_keys_and_wrong_types() {
        let doc = json!({ "verb": "fmt", "file": "x.bbd" });
        assert!(validate("fmt", &doc).is_err());
        let doc = json!({ "verb": "fmt", "file": 3, "canonical": "x" });
        assert!(validate("fmt", &doc).is_err());
        let doc = json!({ "verb": "other", "file": "x", "canonical": "x" });
        assert!(validate("fmt", &doc).is_err());
    }
}
