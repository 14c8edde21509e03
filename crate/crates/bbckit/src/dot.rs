//! Reading and writing machines in a small DOT dialect.
//!
//! The dialect is line oriented: a `digraph <name> {` header, one
//! statement per line ending in `;`, and a closing `}`. Statements are
//! graph attributes (`inputs="a,b";`), node declarations (`s0;`, finals
//! as `s0 [shape=doublecircle];`), edges (`s0 -> s1 [label="i/o1,o2"];`),
//! and the start marker (`__start0 -> s0;` with its conventional node
//! declaration). Anything outside this shape is rejected with a line and
//! column. Unknown attributes are ignored on input and never written.
//!
//! Serialization is canonical: states in index order named `s0..`,
//! edges sorted by source and label, alphabets declared up front. Parsing
//! a serialized machine reproduces it exactly, indices included.

use bbckit_core::alphabet::{Alphabet, AlphabetError, Word};
use bbckit_core::dfa::{Dfa, DfaBuilder, StateId};
use bbckit_core::mealy::{MealyBuilder, MealyMachine};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DotError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("no start marker: expected a __start0 edge or an initial attribute")]
    MissingStart,
    #[error("symbol {0:?} cannot be serialized: delimiters and whitespace are reserved")]
    UnserializableSymbol(String),
}

fn invalid(line: usize, message: impl Into<String>) -> DotError {
    DotError::Invalid {
        line,
        message: message.into(),
    }
}

/// One parsed statement-level cursor with position tracking.
struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str, line: usize) -> Cursor<'a> {
        Cursor {
            s: s.as_bytes(),
            pos: 0,
            line,
        }
    }

    fn err(&self, message: impl Into<String>) -> DotError {
        DotError::Syntax {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && (self.s[self.pos] as char).is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn done(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.s.len()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.s.get(self.pos).map(|&b| b as char)
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), DotError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected {tok:?}")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, DotError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len()
            && matches!(self.s[self.pos] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected an identifier"));
        }
        Ok(std::str::from_utf8(&self.s[start..self.pos]).unwrap())
    }

    /// A value: quoted string (verbatim, no escapes) or bare identifier.
    fn value(&mut self) -> Result<&'a str, DotError> {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&b'"') {
            let start = self.pos + 1;
            let mut end = start;
            while end < self.s.len() && self.s[end] != b'"' {
                end += 1;
            }
            if end == self.s.len() {
                return Err(self.err("unterminated string"));
            }
            self.pos = end + 1;
            Ok(std::str::from_utf8(&self.s[start..end]).unwrap())
        } else {
            self.ident()
        }
    }

    /// `[k=v,k2="v2"]`, empty list allowed.
    fn attrs(&mut self) -> Result<Vec<(String, String)>, DotError> {
        let mut out = Vec::new();
        self.expect("[")?;
        if self.eat("]") {
            return Ok(out);
        }
        loop {
            let k = self.ident()?.to_string();
            self.expect("=")?;
            let v = self.value()?.to_string();
            out.push((k, v));
            if self.eat("]") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }
}

enum Statement {
    GraphAttr { key: String, value: String },
    Node { id: String, attrs: Vec<(String, String)> },
    Edge { src: String, dst: String, attrs: Vec<(String, String)> },
}

struct Document {
    /// Statements with their 1-based source lines.
    statements: Vec<(usize, Statement)>,
}

fn parse_document(text: &str) -> Result<Document, DotError> {
    let mut statements = Vec::new();
    let mut seen_header = false;
    let mut seen_close = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if seen_close {
            return Err(invalid(line, "content after closing brace"));
        }
        if !seen_header {
            let mut c = Cursor::new(raw, line);
            c.expect("digraph")?;
            c.ident()?;
            c.expect("{")?;
            if !c.done() {
                return Err(c.err("expected end of line after header"));
            }
            seen_header = true;
            continue;
        }
        if trimmed == "}" {
            seen_close = true;
            continue;
        }
        let mut c = Cursor::new(raw, line);
        let first = c.ident()?.to_string();
        let statement = match c.peek() {
            Some('=') => {
                c.expect("=")?;
                let value = c.value()?.to_string();
                Statement::GraphAttr { key: first, value }
            }
            Some('-') => {
                c.expect("->")?;
                let dst = c.ident()?.to_string();
                let attrs = if c.peek() == Some('[') { c.attrs()? } else { Vec::new() };
                Statement::Edge { src: first, dst, attrs }
            }
            _ => {
                let attrs = if c.peek() == Some('[') { c.attrs()? } else { Vec::new() };
                Statement::Node { id: first, attrs }
            }
        };
        c.expect(";")?;
        if !c.done() {
            return Err(c.err("expected end of line after statement"));
        }
        statements.push((line, statement));
    }
    if !seen_header {
        return Err(invalid(1, "missing digraph header"));
    }
    if !seen_close {
        return Err(invalid(text.lines().count().max(1), "missing closing brace"));
    }
    Ok(Document { statements })
}

const START: &str = "__start0";

type Attrs = Vec<(String, String)>;

/// State ids in first-appearance order (declarations, then edge
/// endpoints), plus the initial state resolved from the start marker.
struct Skeleton {
    ids: Vec<String>,
    initial: usize,
    node_attrs: Vec<(usize, Attrs)>,
    edges: Vec<(usize, usize, usize, Attrs)>,
    graph_attrs: HashMap<String, (usize, String)>,
}

fn skeleton(doc: &Document) -> Result<Skeleton, DotError> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let intern = |id: &str, ids: &mut Vec<String>, index: &mut HashMap<String, usize>| {
        *index.entry(id.to_string()).or_insert_with(|| {
            ids.push(id.to_string());
            ids.len() - 1
        })
    };
    let mut start: Option<(usize, String)> = None;
    let mut node_attrs = Vec::new();
    let mut edges = Vec::new();
    let mut graph_attrs: HashMap<String, (usize, String)> = HashMap::new();
    for (line, s) in &doc.statements {
        match s {
            Statement::GraphAttr { key, value } => {
                if graph_attrs.insert(key.clone(), (*line, value.clone())).is_some() {
                    return Err(invalid(*line, format!("duplicate attribute {key:?}")));
                }
            }
            Statement::Node { id, attrs } => {
                if id == START {
                    continue;
                }
                let q = intern(id, &mut ids, &mut index);
                node_attrs.push((q, attrs.clone()));
            }
            Statement::Edge { src, dst, attrs } => {
                if src == START {
                    if start.is_some() {
                        return Err(invalid(*line, "second start marker"));
                    }
                    start = Some((*line, dst.clone()));
                    continue;
                }
                if dst == START {
                    return Err(invalid(*line, "edge into the start marker"));
                }
                let s = intern(src, &mut ids, &mut index);
                let d = intern(dst, &mut ids, &mut index);
                edges.push((*line, s, d, attrs.clone()));
            }
        }
    }
    let initial = match (start, graph_attrs.get("initial")) {
        (Some(_), Some((line, _))) => {
            return Err(invalid(*line, "both a start marker and an initial attribute"))
        }
        (Some((line, id)), None) => *index
            .get(&id)
            .ok_or_else(|| invalid(line, format!("initial state {id:?} has no transitions or declaration")))?,
        (None, Some((line, id))) => *index
            .get(id)
            .ok_or_else(|| invalid(*line, format!("initial state {id:?} has no transitions or declaration")))?,
        (None, None) => return Err(DotError::MissingStart),
    };
    Ok(Skeleton {
        ids,
        initial,
        node_attrs,
        edges,
        graph_attrs,
    })
}

fn symbol_list(line: usize, value: &str) -> Result<Vec<String>, DotError> {
    let mut out = Vec::new();
    for part in value.split(',') {
        if part.is_empty() {
            return Err(invalid(line, "empty symbol in alphabet declaration"));
        }
        out.push(part.to_string());
    }
    Ok(out)
}

fn build_alphabet(line: usize, texts: &[String]) -> Result<Alphabet, DotError> {
    Alphabet::new(texts.iter().map(|s| s.as_str()))
        .map_err(|e: AlphabetError| invalid(line, e.to_string()))
}

/// Splits a Mealy edge label into its input and output texts.
fn split_label(line: usize, label: &str) -> Result<(String, Vec<String>), DotError> {
    let Some((input, rest)) = label.split_once('/') else {
        return Err(invalid(line, format!("label {label:?} has no '/' separator")));
    };
    if input.is_empty() {
        return Err(invalid(line, format!("label {label:?} has an empty input")));
    }
    if rest.contains('/') {
        return Err(invalid(line, format!("label {label:?} has more than one '/'")));
    }
    let outputs = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(',')
            .map(|p| {
                if p.is_empty() {
                    Err(invalid(line, format!("label {label:?} has an empty output")))
                } else {
                    Ok(p.to_string())
                }
            })
            .collect::<Result<_, _>>()?
    };
    Ok((input.to_string(), outputs))
}

fn attr<'a>(attrs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

/// Parses a Mealy machine. Alphabets come from `inputs=`/`outputs=` graph
/// attributes when present and are inferred from the labels in
/// first-appearance order otherwise.
pub fn parse_mealy(text: &str) -> Result<MealyMachine, DotError> {
    let doc = parse_document(text)?;
    let sk = skeleton(&doc)?;

    let mut labels = Vec::with_capacity(sk.edges.len());
    for (line, src, dst, attrs) in &sk.edges {
        let label = attr(attrs, "label")
            .ok_or_else(|| invalid(*line, "edge is missing a label"))?;
        let (input, outputs) = split_label(*line, label)?;
        labels.push((*line, *src, *dst, input, outputs));
    }

    let inputs = match sk.graph_attrs.get("inputs") {
        Some((line, v)) => build_alphabet(*line, &symbol_list(*line, v)?)?,
        None => {
            let mut seen = Vec::new();
            for (_, _, _, input, _) in &labels {
                if !seen.contains(input) {
                    seen.push(input.clone());
                }
            }
            build_alphabet(1, &seen)?
        }
    };
    let outputs = match sk.graph_attrs.get("outputs") {
        Some((line, v)) => build_alphabet(*line, &symbol_list(*line, v)?)?,
        None => {
            let mut seen = Vec::new();
            for (_, _, _, _, outs) in &labels {
                for o in outs {
                    if !seen.contains(o) {
                        seen.push(o.clone());
                    }
                }
            }
            build_alphabet(1, &seen)?
        }
    };

    let mut b = MealyBuilder::new(inputs.clone(), outputs.clone())
        .map_err(|e| invalid(1, e.to_string()))?;
    let mut states = Vec::with_capacity(sk.ids.len());
    for _ in 0..sk.ids.len() {
        states.push(b.add_state());
    }
    if sk.ids.is_empty() {
        return Err(DotError::MissingStart);
    }
    b.set_initial(states[sk.initial]);
    for (line, src, dst, input, outs) in &labels {
        let i = inputs
            .get(input)
            .ok_or_else(|| invalid(*line, format!("input {input:?} is not in the declared alphabet")))?;
        let mut w = Word::new();
        for o in outs {
            let s = outputs.get(o).ok_or_else(|| {
                invalid(*line, format!("output {o:?} is not in the declared alphabet"))
            })?;
            w.push(s);
        }
        b.add_transition(states[*src], i, w, states[*dst])
            .map_err(|e| invalid(*line, e.to_string()))?;
    }
    b.build().map_err(|e| invalid(1, e.to_string()))
}

/// Parses a partial DFA. Finals are `shape=doublecircle` nodes (or
/// `accepting=true`). The alphabet comes from the `alphabet=` graph
/// attribute or from the labels in first-appearance order.
pub fn parse_dfa(text: &str) -> Result<Dfa, DotError> {
    let doc = parse_document(text)?;
    let sk = skeleton(&doc)?;

    let mut labels = Vec::with_capacity(sk.edges.len());
    for (line, src, dst, attrs) in &sk.edges {
        let label = attr(attrs, "label")
            .ok_or_else(|| invalid(*line, "edge is missing a label"))?;
        if label.is_empty() {
            return Err(invalid(*line, "empty edge label"));
        }
        labels.push((*line, *src, *dst, label.to_string()));
    }
    let alphabet = match sk.graph_attrs.get("alphabet") {
        Some((line, v)) => build_alphabet(*line, &symbol_list(*line, v)?)?,
        None => {
            let mut seen = Vec::new();
            for (_, _, _, label) in &labels {
                if !seen.contains(label) {
                    seen.push(label.clone());
                }
            }
            build_alphabet(1, &seen)?
        }
    };

    let mut finals = vec![false; sk.ids.len()];
    for (q, attrs) in &sk.node_attrs {
        if attr(attrs, "shape") == Some("doublecircle") || attr(attrs, "accepting") == Some("true")
        {
            finals[*q] = true;
        }
    }
    let mut b = DfaBuilder::new(alphabet.clone());
    let states: Vec<StateId> = finals.iter().map(|&f| b.add_state(f)).collect();
    if states.is_empty() {
        return Err(DotError::MissingStart);
    }
    b.set_initial(states[sk.initial]);
    let mut defined: Vec<Vec<bool>> = vec![vec![false; alphabet.len()]; states.len()];
    for (line, src, dst, label) in &labels {
        let a = alphabet
            .get(label)
            .ok_or_else(|| invalid(*line, format!("symbol {label:?} is not in the declared alphabet")))?;
        if defined[*src][a.index()] {
            return Err(invalid(
                *line,
                format!("second transition from {:?} on {label:?}", sk.ids[*src]),
            ));
        }
        defined[*src][a.index()] = true;
        b.add_transition(states[*src], a, states[*dst])
            .map_err(|e| invalid(*line, e.to_string()))?;
    }
    b.build().map_err(|e| invalid(1, e.to_string()))
}

fn check_symbol(text: &str) -> Result<(), DotError> {
    let reserved = |c: char| c == '/' || c == ',' || c == '"' || c == ';' || c.is_whitespace();
    if text.is_empty() || text.chars().any(reserved) {
        return Err(DotError::UnserializableSymbol(text.to_string()));
    }
    Ok(())
}

fn alphabet_attr(out: &mut String, key: &str, alphabet: &Alphabet) -> Result<(), DotError> {
    let mut texts = Vec::with_capacity(alphabet.len());
    for t in alphabet.texts() {
        check_symbol(t)?;
        texts.push(t);
    }
    writeln!(out, "  {key}=\"{}\";", texts.join(",")).unwrap();
    Ok(())
}

/// Serializes a machine canonically: states `s0..` in index order, edges
/// sorted by source and label. Output is byte-stable for equal machines.
pub fn serialize_mealy(m: &MealyMachine) -> Result<String, DotError> {
    let mut out = String::from("digraph g {\n");
    alphabet_attr(&mut out, "inputs", m.inputs())?;
    alphabet_attr(&mut out, "outputs", m.outputs())?;
    writeln!(out, "  {START} [shape=none,label=\"\"];").unwrap();
    writeln!(out, "  {START} -> s{};", m.initial().index()).unwrap();
    for q in 0..m.n_states() {
        writeln!(out, "  s{q};").unwrap();
    }
    let mut edges: Vec<(usize, String, usize)> = Vec::new();
    for (q, i, w, to) in m.transitions() {
        let outs: Vec<&str> = w.iter().map(|s| m.outputs().text(s)).collect();
        let label = format!("{}/{}", m.inputs().text(i), outs.join(","));
        edges.push((q.index(), label, to.index()));
    }
    edges.sort();
    for (q, label, to) in edges {
        writeln!(out, "  s{q} -> s{to} [label=\"{label}\"];").unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}

/// Serializes a DFA canonically, finals as doublecircle nodes.
pub fn serialize_dfa(d: &Dfa) -> Result<String, DotError> {
    let mut out = String::from("digraph g {\n");
    alphabet_attr(&mut out, "alphabet", d.alphabet())?;
    writeln!(out, "  {START} [shape=none,label=\"\"];").unwrap();
    writeln!(out, "  {START} -> s{};", d.initial().index()).unwrap();
    for q in 0..d.n_states() {
        if d.is_final(StateId(q as u32)) {
            writeln!(out, "  s{q} [shape=doublecircle];").unwrap();
        } else {
            writeln!(out, "  s{q};").unwrap();
        }
    }
    let mut edges: Vec<(usize, String, usize)> = d
        .transitions()
        .map(|(q, a, t)| (q.index(), d.alphabet().text(a).to_string(), t.index()))
        .collect();
    edges.sort();
    for (q, label, to) in edges {
        writeln!(out, "  s{q} -> s{to} [label=\"{label}\"];").unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bbckit_core::machines;

    #[test]
    fn parses_the_two_state_double_output_machine() {
        let text = r#"digraph g {
  __start0 [shape=none,label=""];
  __start0 -> q;
  q -> p [label="i/o,o"];
  q -> p [label="j/o"];
  p -> p [label="j/"];
}"#;
        let m = parse_mealy(text).unwrap();
        assert_eq!(m.n_states(), 2);
        assert_eq!(m.inputs().texts().collect::<Vec<_>>(), ["i", "j"]);
        let w = m.inputs().word(&["i"]).unwrap();
        let t = m.run(&w).unwrap();
        assert_eq!(t.step(0).unwrap().1.len(), 2);
        let w = m.inputs().word(&["j", "j"]).unwrap();
        let t = m.run(&w).unwrap();
        assert_eq!(t.step(1).unwrap().1.len(), 0);
    }

    #[test]
    fn one_node_document_is_a_silent_machine() {
        let text = "digraph g {\n  inputs=\"a\";\n  outputs=\"o\";\n  __start0 [shape=none,label=\"\"];\n  __start0 -> s0;\n  s0;\n}\n";
        let m = parse_mealy(text).unwrap();
        assert_eq!(m.n_states(), 1);
        assert_eq!(m.inputs().len(), 1);
        assert!(m.step(m.initial(), m.inputs().symbols().next().unwrap()).is_none());
    }

    #[test]
    fn nondeterminism_is_rejected_with_the_line() {
        let text = "digraph g {\n  __start0 -> a;\n  a -> a [label=\"i/o\"];\n  a -> a [label=\"i/o\"];\n}\n";
        match parse_mealy(text) {
            Err(DotError::Invalid { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected a line-bearing error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let text = "digraph g {\n  a => b;\n}\n";
        match parse_mealy(text) {
            Err(DotError::Syntax { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column >= 5);
            }
            other => panic!("expected a syntax error, got {other:?}"),
        }
    }

    #[test]
    fn missing_start_marker_is_rejected() {
        let text = "digraph g {\n  a -> a [label=\"i/o\"];\n}\n";
        assert_eq!(parse_mealy(text), Err(DotError::MissingStart));
    }

    #[test]
    fn mealy_round_trip_is_exact() {
        for seed in 0..20 {
            let m = machines::random_machine(seed, 1 + (seed as usize % 6), 2, 3);
            let text = serialize_mealy(&m).unwrap();
            let back = parse_mealy(&text).unwrap();
            assert_eq!(serialize_mealy(&back).unwrap(), text);
            assert_eq!(back.n_states(), m.n_states());
            assert_eq!(back.initial(), m.initial());
            assert!(*back.inputs() == *m.inputs() && *back.outputs() == *m.outputs());
        }
    }

    #[test]
    fn dfa_round_trip_keeps_finals_and_partiality() {
        let mut rng = bbckit_core::rng::stream(99, 7);
        for _ in 0..20 {
            let d = machines::random_dfa(&mut rng, 5, &machines::letters(3));
            let text = serialize_dfa(&d).unwrap();
            let back = parse_dfa(&text).unwrap();
            assert_eq!(serialize_dfa(&back).unwrap(), text);
            assert_eq!(back.n_states(), d.n_states());
            assert_eq!(back.n_transitions(), d.n_transitions());
        }
    }

    #[test]
    fn initial_attribute_replaces_the_start_marker() {
        let text = "digraph g {\n  initial=\"b\";\n  a -> b [label=\"i/o\"];\n  b -> a [label=\"i/o\"];\n}\n";
        let m = parse_mealy(text).unwrap();
        assert_eq!(m.initial().index(), 1);
        let both = "digraph g {\n  initial=\"a\";\n  __start0 -> a;\n  a -> a [label=\"i/o\"];\n}\n";
        assert!(matches!(parse_mealy(both), Err(DotError::Invalid { .. })));
    }

    #[test]
    fn reserved_symbol_texts_refuse_to_serialize() {
        let m = machines::responder(&["a"], &["x,y"], &[("a", "x,y")]);
        assert!(matches!(
            serialize_mealy(&m),
            Err(DotError::UnserializableSymbol(_))
        ));
    }

    #[test]
    fn unknown_attributes_are_ignored() {
        let text = "digraph g {\n  rankdir=\"LR\";\n  __start0 [shape=none,label=\"\"];\n  __start0 -> a;\n  a [color=red];\n  a -> a [label=\"i/o\", penwidth=2];\n}\n";
        let m = parse_mealy(text).unwrap();
        assert_eq!(m.n_states(), 1);
    }
}
