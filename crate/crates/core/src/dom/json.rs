use serde_json::{Map, Value};

use super::{DomError, DomTree, NodeId, TreeBuilder, TEXT_ATTR, TEXT_TAG};

/// Parses the recursive `{tag, attrs, children}` JSON format.
pub fn parse_dom_json(src: &str) -> Result<DomTree, DomError> {
    let v: Value = serde_json::from_str(src).map_err(|e| DomError::Json(e.to_string()))?;
    let mut b = TreeBuilder::default();
    build(&v, None, "$", &mut b)?;
    Ok(b.finish())
}

fn err(path: &str, msg: impl Into<String>) -> DomError {
    DomError::Node { path: path.to_string(), msg: msg.into() }
}

fn build(v: &Value, parent: Option<NodeId>, path: &str, b: &mut TreeBuilder) -> Result<NodeId, DomError> {
    let obj = v.as_object().ok_or_else(|| err(path, "expected an object"))?;
    for k in obj.keys() {
        if !matches!(k.as_str(), "tag" | "attrs" | "children") {
            return Err(err(path, format!("unknown field `{k}`")));
        }
    }
    let tag = obj
        .get("tag")
        .and_then(Value::as_str)
        .ok_or_else(|| err(path, "missing string field `tag`"))?
        .to_ascii_lowercase();
    if tag.is_empty() {
        return Err(err(path, "empty tag"));
    }
    let empty = Map::new();
    let attrs_v = match obj.get("attrs") {
        None => &empty,
        Some(a) => a.as_object().ok_or_else(|| err(path, "`attrs` must be an object"))?,
    };
    let mut attrs = Vec::with_capacity(attrs_v.len());
    for (k, val) in attrs_v {
        let s = val.as_str().ok_or_else(|| err(path, format!("attribute `{k}` is not a string")))?;
        attrs.push((k.clone(), s.to_string()));
    }
    let kids: &[Value] = match obj.get("children") {
        None => &[],
        Some(c) => c.as_array().ok_or_else(|| err(path, "`children` must be an array"))?,
    };
    let path = format!("{path}/{tag}");
    if tag == TEXT_TAG {
        if !kids.is_empty() {
            return Err(err(&path, "text node has children"));
        }
        if attrs.len() != 1 || attrs[0].0 != TEXT_ATTR {
            return Err(err(&path, "text node must carry exactly one `text` attribute"));
        }
    }
    let id = b.push(tag, attrs, parent);
    for (i, c) in kids.iter().enumerate() {
        build(c, Some(id), &format!("{path}[{i}]"), b)?;
    }
    Ok(id)
}

/// Serializes a tree back into the JSON DOM format.
pub fn to_dom_json(tree: &DomTree) -> Value {
    fn go(t: &DomTree, id: NodeId) -> Value {
        let n = t.node(id);
        let mut attrs = Map::new();
        for (k, v) in &n.attrs {
            attrs.insert(k.clone(), Value::String(v.clone()));
        }
        let mut o = Map::new();
        o.insert("tag".into(), Value::String(n.tag.clone()));
        o.insert("attrs".into(), Value::Object(attrs));
        o.insert("children".into(), Value::Array(n.children.iter().map(|&c| go(t, c)).collect()));
        Value::Object(o)
    }
    go(tree, tree.root)
}
