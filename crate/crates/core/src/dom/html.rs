use super::{DomError, DomTree, NodeId, TreeBuilder, TEXT_ATTR, TEXT_TAG};

const VOID: &[&str] =
    &["area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source", "track", "wbr"];

/// Parses a small HTML subset: elements, double-quoted or bare attributes,
/// text, comments and doctype. Whitespace-only text is dropped and other
/// text runs are trimmed with inner whitespace collapsed.
pub fn parse_html_min(src: &str) -> Result<DomTree, DomError> {
    Parser { src: src.as_bytes(), text: src, at: 0, b: TreeBuilder::default(), stack: Vec::new(), root_done: false }
        .run()
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    at: usize,
    b: TreeBuilder,
    stack: Vec<(NodeId, String)>,
    root_done: bool,
}

impl<'a> Parser<'a> {
    fn fail(&self, at: usize, msg: impl Into<String>) -> DomError {
        let before = &self.text[..at.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        DomError::Html { line, col, msg: msg.into() }
    }

    fn run(mut self) -> Result<DomTree, DomError> {
        while self.at < self.src.len() {
            if self.src[self.at] == b'<' {
                self.tag()?;
            } else {
                self.text_run()?;
            }
        }
        if let Some((_, name)) = self.stack.last() {
            return Err(self.fail(self.at, format!("unclosed <{name}>")));
        }
        if self.b.nodes.is_empty() {
            return Err(self.fail(self.at, "no root element"));
        }
        Ok(self.b.finish())
    }

    fn starts(&self, s: &str) -> bool {
        self.src[self.at..].len() >= s.len() && self.src[self.at..self.at + s.len()].eq_ignore_ascii_case(s.as_bytes())
    }

    fn skip_until(&mut self, end: &str, what: &str) -> Result<(), DomError> {
        let start = self.at;
        match self.text[self.at..].find(end) {
            Some(i) => {
                self.at += i + end.len();
                Ok(())
            }
            None => Err(self.fail(start, format!("unterminated {what}"))),
        }
    }

    fn open(&mut self, at: usize, tag: String, attrs: Vec<(String, String)>) -> Result<NodeId, DomError> {
        let parent = self.stack.last().map(|(id, _)| *id);
        if parent.is_none() {
            if self.root_done {
                return Err(self.fail(at, "content after the root element"));
            }
            self.root_done = true;
        }
        Ok(self.b.push(tag, attrs, parent))
    }

    fn text_run(&mut self) -> Result<(), DomError> {
        let start = self.at;
        let end = self.text[start..].find('<').map_or(self.src.len(), |i| start + i);
        self.at = end;
        let raw = &self.text[start..end];
        if raw.trim().is_empty() {
            return Ok(());
        }
        if self.stack.is_empty() {
            return Err(self.fail(start, "text outside the root element"));
        }
        let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        let txt = decode_entities(&collapsed);
        self.open(start, TEXT_TAG.into(), vec![(TEXT_ATTR.into(), txt)])?;
        Ok(())
    }

    fn name(&mut self) -> String {
        let s = self.at;
        while self.at < self.src.len() {
            let c = self.src[self.at];
            if c.is_ascii_alphanumeric() || c == b'-' || c == b'_' || c == b':' {
                self.at += 1;
            } else {
                break;
            }
        }
        self.text[s..self.at].to_ascii_lowercase()
    }

    fn ws(&mut self) {
        while self.at < self.src.len() && self.src[self.at].is_ascii_whitespace() {
            self.at += 1;
        }
    }

    fn tag(&mut self) -> Result<(), DomError> {
        let lt = self.at;
        if self.starts("<!--") {
            return self.skip_until("-->", "comment");
        }
        if self.starts("<!") || self.starts("<?") {
            return self.skip_until(">", "declaration");
        }
        self.at += 1;
        let closing = self.at < self.src.len() && self.src[self.at] == b'/';
        if closing {
            self.at += 1;
        }
        let name = self.name();
        if name.is_empty() {
            return Err(self.fail(lt, "expected a tag name"));
        }
        if closing {
            self.ws();
            if self.at >= self.src.len() || self.src[self.at] != b'>' {
                return Err(self.fail(lt, format!("malformed </{name}>")));
            }
            self.at += 1;
            if VOID.contains(&name.as_str()) {
                return Ok(());
            }
            return match self.stack.pop() {
                Some((_, open)) if open == name => Ok(()),
                Some((_, open)) => Err(self.fail(lt, format!("</{name}> closes <{open}>"))),
                None => Err(self.fail(lt, format!("</{name}> without an open element"))),
            };
        }
        let mut attrs: Vec<(String, String)> = Vec::new();
        let self_closing = loop {
            self.ws();
            if self.at >= self.src.len() {
                return Err(self.fail(lt, format!("unterminated <{name}>")));
            }
            match self.src[self.at] {
                b'>' => {
                    self.at += 1;
                    break false;
                }
                b'/' if self.src.get(self.at + 1) == Some(&b'>') => {
                    self.at += 2;
                    break true;
                }
                _ => {}
            }
            let an = self.name();
            if an.is_empty() {
                return Err(self.fail(self.at, "bad attribute"));
            }
            self.ws();
            let mut val = String::new();
            if self.src.get(self.at) == Some(&b'=') {
                self.at += 1;
                self.ws();
                if self.src.get(self.at) != Some(&b'"') {
                    return Err(self.fail(self.at, format!("attribute `{an}` value must be double-quoted")));
                }
                let vs = self.at + 1;
                let Some(len) = self.text[vs..].find('"') else {
                    return Err(self.fail(self.at, "unterminated attribute value"));
                };
                val = decode_entities(&self.text[vs..vs + len]);
                self.at = vs + len + 1;
            }
            if !attrs.iter().any(|(k, _)| *k == an) {
                attrs.push((an, val));
            }
        };
        let id = self.open(lt, name.clone(), attrs)?;
        if !self_closing && !VOID.contains(&name.as_str()) {
            if name == "script" || name == "style" {
                let close = format!("</{name}");
                let start = self.at;
                match self.text[start..].to_ascii_lowercase().find(&close) {
                    Some(i) => self.at = start + i,
                    None => return Err(self.fail(lt, format!("unclosed <{name}>"))),
                }
            }
            self.stack.push((id, name));
        }
        Ok(())
    }
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        let Some(semi) = rest[..rest.len().min(10)].find(';') else {
            out.push('&');
            rest = &rest[1..];
            continue;
        };
        let ent = &rest[1..semi];
        let ch = match ent {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            "nbsp" => Some(' '),
            _ if ent.starts_with("#x") || ent.starts_with("#X") => {
                u32::from_str_radix(&ent[2..], 16).ok().and_then(char::from_u32)
            }
            _ if ent.starts_with('#') => ent[1..].parse().ok().and_then(char::from_u32),
            _ => None,
        };
        match ch {
            Some(c) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
