//! A small EBNF engine covering the constructs the two response grammars use:
//! string literals, character classes, `.`, grouping, alternation and the
//! `*`, `+`, `?` quantifiers.
//!
//! Recognition tracks the full set of reachable input positions, so it accepts
//! exactly the grammar's language even where ordered choice would commit too
//! early (e.g. `"0" | "0." [0-9]+`). On rejection the reported offset is the
//! length of the longest prefix that some derivation could still extend.

use std::collections::HashMap;

use rand::Rng;

use super::ProtocolError;

/// Grammar for localization responses, byte-for-byte as sent to the model server.
pub const LOCALIZATION_GRAMMAR: &str = r#"root        ::= "{" ws "\"reasoning\"" ws ":" ws string
                    ws "," ws "\"boxes\"" ws ":" ws box_list
                    ws "}"

box_list    ::= "[" ws "]" | "[" ws box (ws "," ws box)* ws "]"

box         ::= "{" ws "\"x_min\"" ws ":" ws integer
                    ws "," ws "\"y_min\"" ws ":" ws integer
                    ws "," ws "\"x_max\"" ws ":" ws integer
                    ws "," ws "\"y_max\"" ws ":" ws integer
                    ws "}"

integer     ::= "0" | [1-9] [0-9]*
string      ::= "\"" ( [^"\\] | "\\" . )* "\""
ws          ::= ( " " | "\t" | "\n" | "\r" )*
"#;

/// Grammar for point-labeling responses.
pub const LABELING_GRAMMAR: &str = r#"root        ::= "{" ws "\"labels\"" ws ":" ws label_list ws "}"

label_list  ::= "[" ws label (ws "," ws label)* ws "]"

label       ::= "{" ws "\"label\"" ws ":" ws label_enum
                    ws "," ws "\"confidence\"" ws ":" ws confidence
                    ws "}"

label_enum  ::= "\"positive\"" | "\"negative\""

confidence  ::= "0" | "1" | "0." [0-9]+ | "1.0" | "1.00"

ws          ::= ( " " | "\t" | "\n" | "\r" )*
"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrammarId {
    Localization,
    Labeling,
}

impl GrammarId {
    pub fn source(self) -> &'static str {
        match self {
            GrammarId::Localization => LOCALIZATION_GRAMMAR,
            GrammarId::Labeling => LABELING_GRAMMAR,
        }
    }

    pub fn grammar(self) -> &'static Grammar {
        use std::sync::OnceLock;
        static LOC: OnceLock<Grammar> = OnceLock::new();
        static LAB: OnceLock<Grammar> = OnceLock::new();
        let cell = match self {
            GrammarId::Localization => &LOC,
            GrammarId::Labeling => &LAB,
        };
        cell.get_or_init(|| Grammar::parse(self.source()).expect("embedded grammar is well-formed"))
    }
}

impl std::fmt::Display for GrammarId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GrammarId::Localization => "localization",
            GrammarId::Labeling => "labeling",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Literal(Vec<u8>),
    Class {
        negated: bool,
        ranges: Vec<(u8, u8)>,
    },
    Any,
    Rule(usize),
    Seq(Vec<Node>),
    Alt(Vec<Node>),
    Star(Box<Node>),
    Plus(Box<Node>),
    Opt(Box<Node>),
}

/// A parsed grammar whose start symbol is `root`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    names: Vec<String>,
    rules: Vec<Node>,
    root: usize,
}

/// Outcome of [`Grammar::check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrammarCheck {
    pub accepted: bool,
    /// Offset of the first byte no derivation can consume; `None` when accepted.
    pub offset: Option<usize>,
}

fn def_err(msg: impl Into<String>) -> ProtocolError {
    ProtocolError::GrammarDefinition(msg.into())
}

struct DefParser<'a> {
    src: &'a [u8],
    pos: usize,
    names: &'a HashMap<String, usize>,
}

impl DefParser<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn escaped(&mut self) -> Result<u8, ProtocolError> {
        let c = self.peek().ok_or_else(|| def_err("dangling escape"))?;
        self.pos += 1;
        Ok(match c {
            b'n' => b'\n',
            b't' => b'\t',
            b'r' => b'\r',
            other => other,
        })
    }

    fn alternation(&mut self) -> Result<Node, ProtocolError> {
        let mut alts = vec![self.sequence()?];
        loop {
            self.skip_space();
            if self.peek() == Some(b'|') {
                self.pos += 1;
                alts.push(self.sequence()?);
            } else {
                break;
            }
        }
        Ok(if alts.len() == 1 {
            alts.pop().unwrap()
        } else {
            Node::Alt(alts)
        })
    }

    fn sequence(&mut self) -> Result<Node, ProtocolError> {
        let mut items = Vec::new();
        loop {
            self.skip_space();
            match self.peek() {
                None | Some(b'|') | Some(b')') => break,
                _ => items.push(self.quantified()?),
            }
        }
        if items.is_empty() {
            return Err(def_err(format!("empty sequence at byte {}", self.pos)));
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Node::Seq(items)
        })
    }

    fn quantified(&mut self) -> Result<Node, ProtocolError> {
        let atom = self.atom()?;
        Ok(match self.peek() {
            Some(b'*') => {
                self.pos += 1;
                Node::Star(Box::new(atom))
            }
            Some(b'+') => {
                self.pos += 1;
                Node::Plus(Box::new(atom))
            }
            Some(b'?') => {
                self.pos += 1;
                Node::Opt(Box::new(atom))
            }
            _ => atom,
        })
    }

    fn atom(&mut self) -> Result<Node, ProtocolError> {
        match self.peek() {
            Some(b'"') => {
                self.pos += 1;
                let mut lit = Vec::new();
                loop {
                    match self.peek() {
                        None => return Err(def_err("unterminated literal")),
                        Some(b'"') => {
                            self.pos += 1;
                            break;
                        }
                        Some(b'\\') => {
                            self.pos += 1;
                            lit.push(self.escaped()?);
                        }
                        Some(c) => {
                            self.pos += 1;
                            lit.push(c);
                        }
                    }
                }
                Ok(Node::Literal(lit))
            }
            Some(b'[') => {
                self.pos += 1;
                let negated = self.peek() == Some(b'^');
                if negated {
                    self.pos += 1;
                }
                let mut ranges = Vec::new();
                loop {
                    let c = match self.peek() {
                        None => return Err(def_err("unterminated class")),
                        Some(b']') => {
                            self.pos += 1;
                            break;
                        }
                        Some(b'\\') => {
                            self.pos += 1;
                            self.escaped()?
                        }
                        Some(c) => {
                            self.pos += 1;
                            c
                        }
                    };
                    if self.peek() == Some(b'-') && self.src.get(self.pos + 1) != Some(&b']') {
                        self.pos += 1;
                        let hi = match self.peek() {
                            Some(b'\\') => {
                                self.pos += 1;
                                self.escaped()?
                            }
                            Some(h) => {
                                self.pos += 1;
                                h
                            }
                            None => return Err(def_err("unterminated range")),
                        };
                        ranges.push((c, hi));
                    } else {
                        ranges.push((c, c));
                    }
                }
                Ok(Node::Class { negated, ranges })
            }
            Some(b'.') => {
                self.pos += 1;
                Ok(Node::Any)
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.alternation()?;
                self.skip_space();
                if self.peek() != Some(b')') {
                    return Err(def_err(format!("expected `)` at byte {}", self.pos)));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                self.names
                    .get(name)
                    .map(|&i| Node::Rule(i))
                    .ok_or_else(|| def_err(format!("undefined rule `{name}`")))
            }
            other => Err(def_err(format!(
                "unexpected {:?} at byte {}",
                other.map(|c| c as char),
                self.pos
            ))),
        }
    }
}

/// Splits `name ::= body` definitions; continuation lines belong to the previous rule.
fn split_rules(src: &str) -> Result<Vec<(String, String)>, ProtocolError> {
    let mut rules: Vec<(String, String)> = Vec::new();
    for line in src.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let head = line.split_once("::=").filter(|(name, _)| {
            let n = name.trim();
            !n.is_empty()
                && n.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'_')
                && !line.starts_with(' ')
        });
        match head {
            Some((name, body)) => rules.push((name.trim().to_string(), body.to_string())),
            None => {
                let last = rules
                    .last_mut()
                    .ok_or_else(|| def_err("continuation before any rule"))?;
                last.1.push('\n');
                last.1.push_str(line);
            }
        }
    }
    Ok(rules)
}

impl Grammar {
    pub fn parse(src: &str) -> Result<Self, ProtocolError> {
        let defs = split_rules(src)?;
        let names: HashMap<String, usize> = defs
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.clone(), i))
            .collect();
        if names.len() != defs.len() {
            return Err(def_err("duplicate rule"));
        }
        let root = *names
            .get("root")
            .ok_or_else(|| def_err("missing `root` rule"))?;
        let mut rules = Vec::with_capacity(defs.len());
        for (name, body) in &defs {
            let mut p = DefParser {
                src: body.as_bytes(),
                pos: 0,
                names: &names,
            };
            let node = p.alternation()?;
            p.skip_space();
            if p.pos != body.len() {
                return Err(def_err(format!("trailing input in rule `{name}`")));
            }
            rules.push(node);
        }
        Ok(Self {
            names: defs.into_iter().map(|(n, _)| n).collect(),
            rules,
            root,
        })
    }

    pub fn rule_names(&self) -> &[String] {
        &self.names
    }

    /// Recognizes `input` against the full language of the grammar.
    pub fn check(&self, input: &[u8]) -> GrammarCheck {
        let mut farthest = 0usize;
        let ends = self.matches(&self.rules[self.root], input, &[0], &mut farthest);
        if ends.last() == Some(&input.len()) {
            return GrammarCheck {
                accepted: true,
                offset: None,
            };
        }
        let reached = ends.last().copied().unwrap_or(0).max(farthest);
        GrammarCheck {
            accepted: false,
            offset: Some(reached.min(input.len())),
        }
    }

    /// Positions reachable after matching `node` from any of `starts` (sorted, deduplicated).
    fn matches(
        &self,
        node: &Node,
        input: &[u8],
        starts: &[usize],
        farthest: &mut usize,
    ) -> Vec<usize> {
        let mut out = Vec::new();
        match node {
            Node::Literal(lit) => {
                for &s in starts {
                    let n = lit
                        .iter()
                        .zip(&input[s.min(input.len())..])
                        .take_while(|(a, b)| a == b)
                        .count();
                    if n == lit.len() {
                        out.push(s + n);
                    } else {
                        *farthest = (*farthest).max(s + n);
                    }
                }
            }
            Node::Class { negated, ranges } => {
                for &s in starts {
                    match input.get(s) {
                        Some(&c)
                            if ranges.iter().any(|&(lo, hi)| lo <= c && c <= hi) != *negated =>
                        {
                            out.push(s + 1)
                        }
                        _ => *farthest = (*farthest).max(s),
                    }
                }
            }
            Node::Any => {
                for &s in starts {
                    if s < input.len() {
                        out.push(s + 1);
                    } else {
                        *farthest = (*farthest).max(s);
                    }
                }
            }
            Node::Rule(i) => return self.matches(&self.rules[*i], input, starts, farthest),
            Node::Seq(items) => {
                let mut cur = starts.to_vec();
                for item in items {
                    if cur.is_empty() {
                        break;
                    }
                    cur = self.matches(item, input, &cur, farthest);
                }
                return cur;
            }
            Node::Alt(alts) => {
                for alt in alts {
                    out.extend(self.matches(alt, input, starts, farthest));
                }
            }
            Node::Star(inner) | Node::Plus(inner) => {
                let mut seen: Vec<usize> = if matches!(node, Node::Star(_)) {
                    starts.to_vec()
                } else {
                    Vec::new()
                };
                let mut frontier = starts.to_vec();
                loop {
                    let next = self.matches(inner, input, &frontier, farthest);
                    frontier = next.into_iter().filter(|p| !seen.contains(p)).collect();
                    frontier.sort_unstable();
                    frontier.dedup();
                    if frontier.is_empty() {
                        break;
                    }
                    seen.extend_from_slice(&frontier);
                }
                out = seen;
            }
            Node::Opt(inner) => {
                out = starts.to_vec();
                out.extend(self.matches(inner, input, starts, farthest));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Random member of the grammar's language. Repetitions stop with probability
    /// `1 - continue_p` after each iteration; wildcard bytes are printable ASCII.
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R, continue_p: f64) -> String {
        let mut out = Vec::new();
        self.expand(&self.rules[self.root], rng, continue_p, &mut out);
        String::from_utf8(out).expect("generator emits ASCII")
    }

    fn expand<R: Rng + ?Sized>(&self, node: &Node, rng: &mut R, p: f64, out: &mut Vec<u8>) {
        match node {
            Node::Literal(lit) => out.extend_from_slice(lit),
            Node::Class { negated, ranges } => {
                let allowed: Vec<u8> = (0x20u8..0x7f)
                    .chain([b'\t', b'\n'])
                    .filter(|c| ranges.iter().any(|&(lo, hi)| lo <= *c && *c <= hi) != *negated)
                    .collect();
                out.push(allowed[rng.random_range(0..allowed.len())]);
            }
            Node::Any => out.push(rng.random_range(0x20u8..0x7f)),
            Node::Rule(i) => self.expand(&self.rules[*i], rng, p, out),
            Node::Seq(items) => items.iter().for_each(|n| self.expand(n, rng, p, out)),
            Node::Alt(alts) => self.expand(&alts[rng.random_range(0..alts.len())], rng, p, out),
            Node::Star(inner) => {
                while rng.random_bool(p) {
                    self.expand(inner, rng, p, out);
                }
            }
            Node::Plus(inner) => loop {
                self.expand(inner, rng, p, out);
                if !rng.random_bool(p) {
                    break;
                }
            },
            Node::Opt(inner) => {
                if rng.random_bool(0.5) {
                    self.expand(inner, rng, p, out);
                }
            }
        }
    }
}

/// Recognizes `raw` against one of the two response grammars.
pub fn grammar_check(raw: &str, id: GrammarId) -> GrammarCheck {
    id.grammar().check(raw.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embedded_grammars_parse() {
        assert_eq!(
            GrammarId::Localization.grammar().rule_names(),
            ["root", "box_list", "box", "integer", "string", "ws"]
        );
        assert_eq!(
            GrammarId::Labeling.grammar().rule_names(),
            [
                "root",
                "label_list",
                "label",
                "label_enum",
                "confidence",
                "ws"
            ]
        );
    }

    #[test]
    fn localization_examples() {
        let ok = [
            r#"{"reasoning":"no match","boxes":[]}"#,
            r#"{"reasoning":"r","boxes":[{"x_min":1,"y_min":2,"x_max":5,"y_max":9}]}"#,
            "{ \"reasoning\" :\t\"a \\\" b\" ,\n\"boxes\": [ ] }",
        ];
        for s in ok {
            assert!(grammar_check(s, GrammarId::Localization).accepted, "{s}");
        }
        let trailing = r#"{"reasoning":"r","boxes":[{"x_min":1,"y_min":2,"x_max":5,"y_max":9},]}"#;
        let c = grammar_check(trailing, GrammarId::Localization);
        assert!(!c.accepted);
        assert_eq!(c.offset, Some(trailing.find(",]").unwrap() + 1));
        // leading zeros are not integers
        assert!(
            !grammar_check(
                r#"{"reasoning":"","boxes":[{"x_min":01,"y_min":2,"x_max":5,"y_max":9}]}"#,
                GrammarId::Localization
            )
            .accepted
        );
        // trailing garbage
        let c = grammar_check(r#"{"reasoning":"","boxes":[]}x"#, GrammarId::Localization);
        assert_eq!(c.offset, Some(27));
    }

    #[test]
    fn confidence_lexemes() {
        let wrap = |c: &str| format!(r#"{{"labels":[{{"label":"positive","confidence":{c}}}]}}"#);
        for ok in ["0", "1", "0.95", "0.000", "1.0", "1.00"] {
            assert!(
                grammar_check(&wrap(ok), GrammarId::Labeling).accepted,
                "{ok}"
            );
        }
        for bad in ["95%", "1.5", "0.", ".5", "1.000", "-0.1", "01"] {
            assert!(
                !grammar_check(&wrap(bad), GrammarId::Labeling).accepted,
                "{bad}"
            );
        }
        // the label list may not be empty
        assert!(!grammar_check(r#"{"labels":[]}"#, GrammarId::Labeling).accepted);
    }

    #[test]
    fn generator_output_is_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for id in [GrammarId::Localization, GrammarId::Labeling] {
            for _ in 0..200 {
                let s = id.grammar().generate(&mut rng, 0.4);
                assert!(grammar_check(&s, id).accepted, "{s}");
            }
        }
    }

    #[test]
    fn malformed_definitions_are_rejected() {
        assert!(Grammar::parse("root ::= \"a\" missing").is_err());
        assert!(Grammar::parse("start ::= \"a\"").is_err());
        assert!(Grammar::parse("root ::= ( \"a\"").is_err());
    }
}
