//! Addresses of nodes inside an extraction document, e.g.
//! `output_materials[2].measurements[0]` or `synthesis_groups["annealing[Temp]"][0]`.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    Index(usize),
    Key(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DocumentPath(Vec<Segment>);

impl DocumentPath {
    pub fn root() -> Self {
        DocumentPath(Vec::new())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn key(&self, k: impl Into<String>) -> Self {
        let mut p = self.clone();
        p.0.push(Segment::Key(k.into()));
        p
    }

    pub fn index(&self, i: usize) -> Self {
        let mut p = self.clone();
        p.0.push(Segment::Index(i));
        p
    }

    /// `prefix` followed by this path.
    pub fn under(&self, prefix: &DocumentPath) -> Self {
        let mut segs = prefix.0.clone();
        segs.extend(self.0.iter().cloned());
        DocumentPath(segs)
    }

    pub fn parent(&self) -> Option<DocumentPath> {
        if self.0.is_empty() {
            None
        } else {
            Some(DocumentPath(self.0[..self.0.len() - 1].to_vec()))
        }
    }
}

fn is_identifier(k: &str) -> bool {
    let mut chars = k.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for DocumentPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("$");
        }
        for (i, seg) in self.0.iter().enumerate() {
            match seg {
                Segment::Index(n) => write!(f, "[{n}]")?,
                Segment::Key(k) if is_identifier(k) => {
                    if i > 0 {
                        f.write_str(".")?;
                    }
                    f.write_str(k)?;
                }
                Segment::Key(k) => {
                    let quoted = serde_json::to_string(k).map_err(|_| fmt::Error)?;
                    write!(f, "[{quoted}]")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed document path `{0}`")]
pub struct PathParseError(pub String);

impl FromStr for DocumentPath {
    type Err = PathParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PathParseError(s.to_string());
        if s == "$" {
            return Ok(DocumentPath::root());
        }
        let bytes = s.as_bytes();
        let mut segs = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'[' if bytes.get(i + 1) == Some(&b'"') => {
                    // JSON string up to the matching unescaped quote
                    let mut j = i + 2;
                    while j < bytes.len() && bytes[j] != b'"' {
                        j += if bytes[j] == b'\\' { 2 } else { 1 };
                    }
                    if bytes.get(j + 1) != Some(&b']') {
                        return Err(err());
                    }
                    let key: String = serde_json::from_str(&s[i + 1..=j]).map_err(|_| err())?;
                    segs.push(Segment::Key(key));
                    i = j + 2;
                }
                b'[' => {
                    let close = s[i..].find(']').ok_or_else(err)? + i;
                    let n = s[i + 1..close].parse().map_err(|_| err())?;
                    segs.push(Segment::Index(n));
                    i = close + 1;
                }
                b'.' if !segs.is_empty() => {
                    i += 1;
                    let start = i;
                    while i < bytes.len() && bytes[i] != b'.' && bytes[i] != b'[' {
                        i += 1;
                    }
                    let k = &s[start..i];
                    if !is_identifier(k) {
                        return Err(err());
                    }
                    segs.push(Segment::Key(k.to_string()));
                }
                _ if segs.is_empty() => {
                    let start = i;
                    while i < bytes.len() && bytes[i] != b'.' && bytes[i] != b'[' {
                        i += 1;
                    }
                    let k = &s[start..i];
                    if !is_identifier(k) {
                        return Err(err());
                    }
                    segs.push(Segment::Key(k.to_string()));
                }
                _ => return Err(err()),
            }
        }
        Ok(DocumentPath(segs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn renders() {
        let p = DocumentPath::root()
            .key("output_materials")
            .index(2)
            .key("measurements")
            .index(0);
        assert_eq!(p.to_string(), "output_materials[2].measurements[0]");
        let g = DocumentPath::root()
            .key("synthesis_groups")
            .key("annealing[Temp]")
            .index(0);
        assert_eq!(g.to_string(), "synthesis_groups[\"annealing[Temp]\"][0]");
        assert_eq!(DocumentPath::root().to_string(), "$");
        assert_eq!(
            DocumentPath::root()
                .index(0)
                .key("raw_materials")
                .to_string(),
            "[0].raw_materials"
        );
    }

    #[test]
    fn ordering_is_structural() {
        let a = DocumentPath::root().key("m").index(2);
        let b = DocumentPath::root().key("m").index(10);
        assert!(a < b);
    }

    fn segment() -> impl Strategy<Value = Segment> {
        prop_oneof![
            (0usize..50).prop_map(Segment::Index),
            "[a-z_][a-z0-9_]{0,6}".prop_map(Segment::Key),
            "[ -~]{0,8}".prop_map(Segment::Key),
        ]
    }

    proptest! {
        #[test]
        fn parse_render_round_trip(segs in proptest::collection::vec(segment(), 0..6)) {
            let p = DocumentPath(segs);
            let text = p.to_string();
            prop_assert_eq!(text.parse::<DocumentPath>().unwrap(), p);
        }
    }
}
