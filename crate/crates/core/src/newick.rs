//! Extended Newick and JSON edge-list formats.
//!
//! Every numeric literal is read as an exact rational. Parsers only reject
//! malformed text; structural problems (normality, unlabeled leaves, ...)
//! are left to [`PhyloNetwork::validate`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{Map, Value};

use crate::error::{ApdError, Result};
use crate::network::{NetworkBuilder, NodeId, PhyloNetwork, Severity};
use crate::rational::{exact_decimal, exact_literal, fraction, parse_rational, Rational};

/// One message produced while parsing, anchored at a byte offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostics {
    pub position: usize,
    pub message: String,
    pub severity: Severity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

impl From<ParseError> for ParseDiagnostics {
    fn from(e: ParseError) -> Self {
        ParseDiagnostics {
            position: e.position,
            message: e.message,
            severity: Severity::Error,
        }
    }
}

/// A parsed network with the warnings raised along the way.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub network: PhyloNetwork,
    pub warnings: Vec<ParseDiagnostics>,
}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        position,
        message: message.into(),
    })
}

pub fn parse_enewick(text: &str) -> Result<PhyloNetwork> {
    Ok(parse_enewick_with_warnings(text)?.network)
}

/// Annotation attached to one occurrence of a node: the edge from its
/// parent into it.
#[derive(Debug, Default, Clone)]
struct EdgeNote {
    length: Option<Rational>,
    prob: Option<Rational>,
}

struct Occurrence {
    node: usize,
    note: EdgeNote,
    position: usize,
}

#[derive(Default)]
struct RawNode {
    label: Option<String>,
    label_position: usize,
    hybrid: Option<String>,
    has_children: bool,
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    nodes: Vec<RawNode>,
    /// (parent, occurrence) in document order.
    edges: Vec<(usize, Occurrence)>,
    hybrids: HashMap<String, usize>,
    warnings: Vec<ParseDiagnostics>,
}

const DELIMITERS: &[u8] = b"()[]:;,'";

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            nodes: Vec::new(),
            edges: Vec::new(),
            hybrids: HashMap::new(),
            warnings: Vec::new(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    /// Skips whitespace and comments, collecting `&prob=` / `&length=`.
    fn skip_trivia(&mut self, note: &mut EdgeNote) -> Result<(), ParseError> {
        loop {
            self.skip_ws();
            if self.peek() != Some(b'[') {
                return Ok(());
            }
            let start = self.pos;
            let Some(len) = self.text[start..].find(']') else {
                return err(start, "unterminated comment");
            };
            let body = &self.text[start + 1..start + len];
            self.pos = start + len + 1;
            if let Some(rest) = body.strip_prefix('&') {
                for item in rest.split(',') {
                    let Some((key, value)) = item.split_once('=') else {
                        continue;
                    };
                    let value = value.trim();
                    match key.trim() {
                        "prob" | "gamma" => {
                            note.prob = Some(self.probability(value, start + 1)?);
                        }
                        "length" => {
                            note.length = Some(
                                parse_rational(value).or_else(|m| err(start + 1, m))?,
                            );
                        }
                        _ => {}
                    }
                }
            }
        }
    }

    fn probability(&self, literal: &str, position: usize) -> Result<Rational, ParseError> {
        let p = parse_rational(literal).or_else(|m| err(position, m))?;
        if p <= Rational::zero() || p > Rational::one() {
            return err(position, format!("probability {literal} outside (0,1]"));
        }
        Ok(p)
    }

    /// The label text and whether it was quoted.
    fn label(&mut self) -> Result<Option<(String, bool)>, ParseError> {
        match self.peek() {
            Some(b'\'') => {
                let start = self.pos;
                self.pos += 1;
                let mut out = String::new();
                loop {
                    let Some(i) = self.text[self.pos..].find('\'') else {
                        return err(start, "unterminated quoted label");
                    };
                    out.push_str(&self.text[self.pos..self.pos + i]);
                    self.pos += i + 1;
                    if self.peek() == Some(b'\'') {
                        out.push('\'');
                        self.pos += 1;
                    } else {
                        return Ok(Some((out, true)));
                    }
                }
            }
            _ => {
                let start = self.pos;
                while matches!(self.peek(), Some(b) if !b.is_ascii_whitespace() && !DELIMITERS.contains(&b))
                {
                    self.pos += 1;
                }
                Ok((self.pos > start).then(|| (self.text[start..self.pos].to_string(), false)))
            }
        }
    }

    /// Colon-separated `length:support:probability`, any part may be empty.
    fn annotation(&mut self, note: &mut EdgeNote) -> Result<(), ParseError> {
        for field in 0..3 {
            self.skip_trivia(note)?;
            if self.peek() != Some(b':') {
                return Ok(());
            }
            self.pos += 1;
            self.skip_trivia(note)?;
            let start = self.pos;
            while matches!(self.peek(), Some(b) if !b.is_ascii_whitespace() && !DELIMITERS.contains(&b))
            {
                self.pos += 1;
            }
            let literal = &self.text[start..self.pos];
            if literal.is_empty() {
                continue;
            }
            match field {
                0 => note.length = Some(parse_rational(literal).or_else(|m| err(start, m))?),
                1 => {
                    parse_rational(literal).or_else(|m| err(start, m))?;
                }
                _ => note.prob = Some(self.probability(literal, start)?),
            }
        }
        self.skip_trivia(note)?;
        if self.peek() == Some(b':') {
            return err(self.pos, "more than three edge annotation fields");
        }
        Ok(())
    }

    /// Parses one subtree and returns the occurrence pointing at it.
    fn subtree(&mut self, depth: usize) -> Result<Occurrence, ParseError> {
        if depth > 50_000 {
            return err(self.pos, "nesting too deep");
        }
        let mut note = EdgeNote::default();
        self.skip_trivia(&mut note)?;
        let mut children = Vec::new();
        let open = self.pos;
        if self.peek() == Some(b'(') {
            self.pos += 1;
            loop {
                children.push(self.subtree(depth + 1)?);
                self.skip_trivia(&mut note)?;
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    Some(c) => return err(self.pos, format!("expected ',' or ')', found '{}'", c as char)),
                    None => return err(self.pos, format!("unclosed '(' opened at byte {open}")),
                }
            }
        }
        self.skip_trivia(&mut note)?;
        let label_position = self.pos;
        let raw = self.label()?;
        let (name, hybrid) = match raw {
            Some((l, true)) => (Some(l), None),
            Some((l, false)) => match l.find('#') {
                Some(i) => {
                    let tag = &l[i + 1..];
                    if tag.is_empty() {
                        return err(label_position, "empty hybrid tag");
                    }
                    let name = &l[..i];
                    ((!name.is_empty()).then(|| name.to_string()), Some(tag.to_string()))
                }
                None => (Some(l), None),
            },
            None => (None, None),
        };
        self.annotation(&mut note)?;

        let node = match &hybrid {
            Some(tag) => match self.hybrids.get(tag) {
                Some(&id) => id,
                None => {
                    self.nodes.push(RawNode {
                        hybrid: Some(tag.clone()),
                        ..RawNode::default()
                    });
                    let id = self.nodes.len() - 1;
                    self.hybrids.insert(tag.clone(), id);
                    id
                }
            },
            None => {
                self.nodes.push(RawNode::default());
                self.nodes.len() - 1
            }
        };
        let raw_node = &mut self.nodes[node];
        if let Some(name) = name {
            match &raw_node.label {
                Some(old) if *old != name => {
                    return err(
                        label_position,
                        format!(
                            "hybrid #{} labelled both '{old}' and '{name}'",
                            hybrid.unwrap_or_default()
                        ),
                    )
                }
                _ => {
                    raw_node.label = Some(name);
                    raw_node.label_position = label_position;
                }
            }
        }
        if !children.is_empty() {
            if raw_node.has_children {
                return err(
                    open,
                    format!(
                        "hybrid #{} is given children more than once",
                        hybrid.unwrap_or_default()
                    ),
                );
            }
            raw_node.has_children = true;
            for child in children {
                if child.node == node {
                    return err(child.position, "hybrid node is its own child");
                }
                self.edges.push((node, child));
            }
        }
        Ok(Occurrence {
            node,
            note,
            position: label_position,
        })
    }

    fn finish(mut self) -> Result<Parsed, ParseError> {
        let root = self.subtree(0)?;
        let mut tail = EdgeNote::default();
        self.skip_trivia(&mut tail)?;
        if self.peek() != Some(b';') {
            return err(self.pos, "expected ';'");
        }
        self.pos += 1;
        self.skip_trivia(&mut tail)?;
        if self.pos < self.bytes.len() {
            return err(self.pos, "text after ';'");
        }
        if matches!(&root.note.length, Some(l) if !l.is_zero()) {
            self.warnings.push(ParseDiagnostics {
                position: root.position,
                message: "root edge length ignored".into(),
                severity: Severity::Warning,
            });
        }

        let mut b = NetworkBuilder::new();
        let ids: Vec<NodeId> = (0..self.nodes.len()).map(|_| b.add_node()).collect();
        let mut taxa: HashMap<String, usize> = HashMap::new();
        for (i, raw) in self.nodes.iter().enumerate() {
            let Some(label) = &raw.label else { continue };
            if raw.has_children {
                b.set_name(ids[i], label.clone());
            } else {
                if let Some(&first) = taxa.get(label) {
                    let _ = first;
                    return err(raw.label_position, format!("duplicate taxon '{label}'"));
                }
                taxa.insert(label.clone(), i);
                b.set_taxon(ids[i], label.clone());
            }
        }

        let mut incoming: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, (_, occ)) in self.edges.iter().enumerate() {
            incoming.entry(occ.node).or_default().push(i);
        }
        let mut probs: Vec<Rational> = vec![Rational::one(); self.edges.len()];
        for (&node, edges) in &incoming {
            let missing: Vec<usize> = edges
                .iter()
                .copied()
                .filter(|&e| self.edges[e].1.note.prob.is_none())
                .collect();
            let given: Rational = edges
                .iter()
                .filter_map(|&e| self.edges[e].1.note.prob.clone())
                .sum();
            for &e in edges {
                if let Some(p) = &self.edges[e].1.note.prob {
                    probs[e] = p.clone();
                }
            }
            if missing.is_empty() {
                continue;
            }
            let share = (Rational::one() - given) / Rational::from_integer(missing.len().into());
            if missing.len() > 1 && edges.len() > 1 {
                self.warnings.push(ParseDiagnostics {
                    position: self.edges[missing[0]].1.position,
                    message: format!(
                        "{} in-edges of hybrid #{} lack a probability; each gets {}",
                        missing.len(),
                        self.nodes[node].hybrid.clone().unwrap_or_default(),
                        fraction(&share)
                    ),
                    severity: Severity::Warning,
                });
            }
            for e in missing {
                probs[e] = share.clone();
            }
        }
        for (i, (parent, occ)) in self.edges.iter().enumerate() {
            b.add_edge(
                ids[*parent],
                ids[occ.node],
                occ.note.length.clone().unwrap_or_else(Rational::zero),
                probs[i].clone(),
            );
        }
        let network = b.build().map_err(|e| ParseError {
            position: 0,
            message: e.to_string(),
        })?;
        Ok(Parsed {
            network,
            warnings: self.warnings,
        })
    }
}

/// Parses a single extended-Newick statement.
pub fn parse_enewick_with_warnings(text: &str) -> Result<Parsed, ParseError> {
    Parser::new(text).finish()
}

fn needs_quotes(label: &str) -> bool {
    label.is_empty()
        || label
            .bytes()
            .any(|b| b.is_ascii_whitespace() || DELIMITERS.contains(&b) || b == b'#')
}

fn quote(label: &str) -> String {
    if needs_quotes(label) {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

/// Serializes a valid network. Reticulations become `#H<k>` nodes defined
/// under their first parent in depth-first order. Lengths and probabilities
/// that have no finite decimal expansion go into `[&length=..]` and
/// `[&prob=..]` comments.
pub fn emit_enewick(net: &PhyloNetwork) -> Result<String> {
    net.require_valid()?;
    let root = net.require_root()?;
    let mut tags: HashMap<NodeId, usize> = HashMap::new();
    let mut defined = vec![false; net.node_count()];
    let mut out = String::new();

    enum Step {
        Enter(NodeId, Option<crate::network::EdgeId>),
        Close(NodeId, Option<crate::network::EdgeId>),
        Comma,
    }
    let mut stack = vec![Step::Enter(root, None)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Comma => out.push(','),
            Step::Enter(v, via) => {
                let hybrid = net.is_reticulation(v);
                if hybrid && !tags.contains_key(&v) {
                    let k = tags.len() + 1;
                    tags.insert(v, k);
                }
                if !defined[v.0] && net.out_degree(v) > 0 {
                    defined[v.0] = true;
                    out.push('(');
                    stack.push(Step::Close(v, via));
                    let kids = net.out_edges(v);
                    for (i, &e) in kids.iter().enumerate().rev() {
                        stack.push(Step::Enter(net.edge(e).head, Some(e)));
                        if i > 0 {
                            stack.push(Step::Comma);
                        }
                    }
                } else {
                    let first = !defined[v.0];
                    defined[v.0] = true;
                    write_node(net, v, via, first, &tags, &mut out);
                }
            }
            Step::Close(v, via) => {
                out.push(')');
                write_node(net, v, via, true, &tags, &mut out);
            }
        }
    }
    out.push(';');
    Ok(out)
}

fn write_node(
    net: &PhyloNetwork,
    v: NodeId,
    via: Option<crate::network::EdgeId>,
    defining: bool,
    tags: &HashMap<NodeId, usize>,
    out: &mut String,
) {
    let label = if defining {
        net.taxon(v).or_else(|| net.name(v))
    } else {
        None
    };
    match (label, tags.get(&v)) {
        (Some(l), Some(k)) => out.push_str(&format!("{}#H{k}", quote(l))),
        (Some(l), None) => out.push_str(&quote(l)),
        (None, Some(k)) => out.push_str(&format!("#H{k}")),
        (None, None) => {}
    }
    let Some(e) = via else { return };
    let edge = net.edge(e);
    let mut comments = Vec::new();
    let length = match exact_decimal(&edge.weight) {
        Some(d) => d,
        None => {
            comments.push(format!("length={}", fraction(&edge.weight)));
            String::new()
        }
    };
    let write_prob = net.is_reticulation(v) || !edge.prob.is_one();
    let prob = if write_prob {
        match exact_decimal(&edge.prob) {
            Some(d) => d,
            None => {
                comments.push(format!("prob={}", fraction(&edge.prob)));
                String::new()
            }
        }
    } else {
        String::new()
    };
    if !length.is_empty() {
        out.push(':');
        out.push_str(&length);
    }
    if !prob.is_empty() {
        if length.is_empty() {
            out.push(':');
        }
        out.push_str("::");
        out.push_str(&prob);
    }
    if !comments.is_empty() {
        out.push_str(&format!("[&{}]", comments.join(",")));
    }
}

fn json_rational(value: &Value, what: &str) -> Result<Rational> {
    let text = match value {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(ApdError::Input(format!("{what}: expected a number or string, got {other}"))),
    };
    parse_rational(&text).map_err(|m| ApdError::Input(format!("{what}: {m}")))
}

/// Reads `{"nodes":[{"id":..,"taxon"?:..,"name"?:..}],"edges":[{"tail","head","weight","prob"}]}`.
/// Node ids may be any distinct integers or strings; `weight` defaults to 0
/// and `prob` to 1.
pub fn parse_json(text: &str) -> Result<PhyloNetwork> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| ApdError::Input(format!("malformed JSON: {e}")))?;
    let nodes = doc
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or_else(|| ApdError::Input("missing `nodes` array".into()))?;
    let empty = Vec::new();
    let edges = match doc.get("edges") {
        None => &empty,
        Some(v) => v
            .as_array()
            .ok_or_else(|| ApdError::Input("`edges` must be an array".into()))?,
    };
    let key = |v: &Value, what: &str| -> Result<String> {
        match v {
            Value::Number(n) => Ok(n.to_string()),
            Value::String(s) => Ok(s.clone()),
            _ => Err(ApdError::Input(format!("{what} must be a number or string"))),
        }
    };
    let mut b = NetworkBuilder::new();
    let mut index: HashMap<String, NodeId> = HashMap::new();
    for (i, node) in nodes.iter().enumerate() {
        let id = match node.get("id") {
            Some(v) => key(v, "node id")?,
            None => i.to_string(),
        };
        let v = b.add_node();
        if index.insert(id.clone(), v).is_some() {
            return Err(ApdError::Input(format!("duplicate node id {id}")));
        }
        if let Some(t) = node.get("taxon") {
            let t = t
                .as_str()
                .ok_or_else(|| ApdError::Input(format!("taxon of node {id} must be a string")))?;
            b.set_taxon(v, t);
        }
        if let Some(n) = node.get("name").and_then(Value::as_str) {
            b.set_name(v, n);
        }
    }
    for (i, edge) in edges.iter().enumerate() {
        let end = |field: &str| -> Result<NodeId> {
            let raw = edge
                .get(field)
                .ok_or_else(|| ApdError::Input(format!("edge {i} lacks `{field}`")))?;
            let k = key(raw, field)?;
            index
                .get(&k)
                .copied()
                .ok_or_else(|| ApdError::Input(format!("edge {i} refers to unknown node {k}")))
        };
        let (tail, head) = (end("tail")?, end("head")?);
        let weight = match edge.get("weight") {
            Some(v) => json_rational(v, &format!("weight of edge {i}"))?,
            None => Rational::zero(),
        };
        let prob = match edge.get("prob") {
            Some(v) => json_rational(v, &format!("prob of edge {i}"))?,
            None => Rational::one(),
        };
        b.add_edge(tail, head, weight, prob);
    }
    b.build()
}

fn literal_value(r: &Rational) -> Value {
    let text = exact_literal(r);
    if text.contains('/') {
        Value::String(text)
    } else {
        serde_json::from_str(&text).unwrap_or(Value::String(text))
    }
}

/// Writes the JSON edge-list format with dense ids. Terminating decimals are
/// written as JSON numbers, other rationals as `"p/q"` strings.
pub fn emit_json(net: &PhyloNetwork) -> String {
    let nodes: Vec<Value> = net
        .nodes()
        .map(|v| {
            let mut m = Map::new();
            m.insert("id".into(), Value::from(v.0));
            if let Some(t) = net.taxon(v) {
                m.insert("taxon".into(), Value::from(t));
            }
            if let Some(n) = net.name(v) {
                m.insert("name".into(), Value::from(n));
            }
            Value::Object(m)
        })
        .collect();
    let edges: Vec<Value> = net
        .edges()
        .iter()
        .map(|e| {
            let mut m = Map::new();
            m.insert("tail".into(), Value::from(e.tail.0));
            m.insert("head".into(), Value::from(e.head.0));
            m.insert("weight".into(), literal_value(&e.weight));
            m.insert("prob".into(), literal_value(&e.prob));
            Value::Object(m)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("nodes".into(), Value::Array(nodes));
    doc.insert("edges".into(), Value::Array(edges));
    serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable")
}

/// Reads JSON when the text starts with `{`, extended Newick otherwise.
pub fn parse_network(text: &str) -> Result<PhyloNetwork> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_enewick(text)
    }
}

/// Canonical description of the labelled DAG below the root: two networks
/// with equal signatures and equal node and edge counts are isomorphic for
/// all practical test purposes. Exponential on deeply shared structure.
pub fn structural_signature(net: &PhyloNetwork) -> Result<String> {
    let order = net.require_topological_order()?;
    let mut sig: Vec<String> = vec![String::new(); net.node_count()];
    for &v in order.iter().rev() {
        let mut kids: Vec<String> = net
            .out_edges(v)
            .iter()
            .map(|&e| {
                let edge = net.edge(e);
                format!(
                    "{}<{}|{}>",
                    sig[edge.head.0],
                    fraction(&edge.weight),
                    fraction(&edge.prob)
                )
            })
            .collect();
        kids.sort();
        let label = net.taxon(v).map(|t| format!("'{t}'")).or_else(|| net.name(v).map(|n| format!("\"{n}\"")));
        sig[v.0] = format!(
            "{}{}({})",
            label.unwrap_or_default(),
            if net.is_reticulation(v) { "#" } else { "" },
            kids.join(",")
        );
    }
    let root = net.require_root()?;
    Ok(format!(
        "{}n{}m{}",
        sig[root.0],
        net.node_count(),
        net.edge_count()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::samples::{diamond_chain, figure_one};

    #[test]
    fn cherry_with_stem() {
        let net = parse_enewick("((a:1,b:2):3);").unwrap();
        assert_eq!(net.node_count(), 4);
        assert!(net.validate().is_empty());
        let mut w: Vec<Rational> = net.edges().iter().map(|e| e.weight.clone()).collect();
        w.sort();
        assert_eq!(w, vec![int(1), int(2), int(3)]);
        assert!(net.edges().iter().all(|e| e.prob.is_one()));
    }

    #[test]
    fn hybrid_occurrences_merge() {
        let net = parse_enewick("((x:1,(y:2)#H1:1::0.3):2,(#H1:4::0.7,z:1):2);").unwrap();
        assert!(net.validate().is_valid());
        let r = net.reticulations();
        assert_eq!(r.len(), 1);
        let mut p: Vec<Rational> = net.in_edges(r[0]).iter().map(|&e| net.edge(e).prob.clone()).collect();
        p.sort();
        assert_eq!(p, vec![ratio(3, 10), ratio(7, 10)]);
        assert_eq!(net.leaves().len(), 3);
    }

    #[test]
    fn default_probabilities() {
        let one_missing = parse_enewick("((#H1:::0.25,a),(b)#H1);").unwrap();
        let r = one_missing.reticulations()[0];
        let probs: Vec<Rational> = one_missing.in_edges(r).iter().map(|&e| one_missing.edge(e).prob.clone()).collect();
        assert!(probs.contains(&ratio(1, 4)) && probs.contains(&ratio(3, 4)));

        let parsed = parse_enewick_with_warnings("((#H1,a),(b)#H1);").unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        let net = parsed.network;
        let r = net.reticulations()[0];
        assert!(net.in_edges(r).iter().all(|&e| net.edge(e).prob == ratio(1, 2)));
    }

    #[test]
    fn comment_annotations() {
        let net = parse_enewick("((a[&length=1/3],(b)#H1[&prob=1/3]),#H1[&prob=2/3]);").unwrap();
        assert!(net.validate().is_valid());
        assert!(net.edges().iter().any(|e| e.weight == ratio(1, 3)));
        assert!(net.edges().iter().any(|e| e.prob == ratio(2, 3)));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_enewick_with_warnings("((a,b);").unwrap_err();
        assert_eq!(e.position, 6);
        let e = parse_enewick_with_warnings("(a,b)").unwrap_err();
        assert!(e.message.contains("';'"));
        let e = parse_enewick_with_warnings("(a,a);").unwrap_err();
        assert!(e.message.contains("duplicate taxon"));
        assert_eq!(e.position, 3);
        let e = parse_enewick_with_warnings("((a)#H1,(b)#H1);").unwrap_err();
        assert!(e.message.contains("more than once"));
        let e = parse_enewick_with_warnings("((a)#H1:::1.5,#H1);").unwrap_err();
        assert!(e.message.contains("outside (0,1]"));
        let e = parse_enewick_with_warnings("(a:x,b);").unwrap_err();
        assert_eq!(e.position, 3);
    }

    #[test]
    fn quoted_labels() {
        let net = parse_enewick("('a b':1,'it''s':2);").unwrap();
        assert!(net.node_by_taxon("a b").is_some());
        assert!(net.node_by_taxon("it's").is_some());
        let again = parse_enewick(&emit_enewick(&net).unwrap()).unwrap();
        assert_eq!(structural_signature(&net).unwrap(), structural_signature(&again).unwrap());
    }

    #[test]
    fn figure_one_round_trips() {
        let net = figure_one();
        let sig = structural_signature(&net).unwrap();
        let text = emit_enewick(&net).unwrap();
        let back = parse_enewick(&text).unwrap();
        assert!(back.validate().is_empty(), "{text}");
        assert_eq!(structural_signature(&back).unwrap(), sig, "{text}");
        let json = parse_json(&emit_json(&net)).unwrap();
        assert_eq!(structural_signature(&json).unwrap(), sig);
        let chain = diamond_chain();
        let back = parse_enewick(&emit_enewick(&chain).unwrap()).unwrap();
        assert_eq!(structural_signature(&back).unwrap(), structural_signature(&chain).unwrap());
    }

    #[test]
    fn figure_one_json() {
        let text = r#"{"nodes":[{"id":"rho"},{"id":"u"},{"id":"v"},{"id":"p"},{"id":"q"},{"id":"r"},{"id":"s"},{"id":"w"},
            {"id":"a","taxon":"a"},{"id":"b","taxon":"b"},{"id":"c","taxon":"c"},{"id":"d","taxon":"d"},{"id":"e","taxon":"e"}],
          "edges":[{"tail":"rho","head":"u","weight":2,"prob":1},{"tail":"u","head":"p","weight":5,"prob":1},
            {"tail":"p","head":"a","weight":1,"prob":1},{"tail":"u","head":"r","weight":1,"prob":0.3},
            {"tail":"p","head":"q","weight":1,"prob":1},{"tail":"q","head":"b","weight":2,"prob":1},
            {"tail":"q","head":"s","weight":4,"prob":"0.4"},{"tail":"s","head":"c","weight":1,"prob":1},
            {"tail":"rho","head":"v","weight":2,"prob":1},{"tail":"v","head":"w","weight":1,"prob":1},
            {"tail":"w","head":"d","weight":1,"prob":1},{"tail":"w","head":"e","weight":2,"prob":1},
            {"tail":"v","head":"r","weight":6,"prob":"7/10"},{"tail":"r","head":"s","weight":8,"prob":0.6}]}"#;
        let net = parse_json(text).unwrap();
        assert!(net.validate().is_empty());
        assert_eq!(net.edge_count(), 14);
        assert_eq!(net.reticulations().len(), 2);
    }

    #[test]
    fn json_edge_cases() {
        let single = parse_json(r#"{"nodes":[{"id":0,"taxon":"a"}],"edges":[]}"#).unwrap();
        assert!(single.validate().is_empty());
        let third = parse_json(
            r#"{"nodes":[{"id":0},{"id":1,"taxon":"a"}],"edges":[{"tail":0,"head":1,"weight":"1/3","prob":1}]}"#,
        )
        .unwrap();
        assert_eq!(third.edge(crate::network::EdgeId(0)).weight, ratio(1, 3));
        let again = parse_json(&emit_json(&third)).unwrap();
        assert_eq!(again.edge(crate::network::EdgeId(0)).weight, ratio(1, 3));
        assert!(parse_json("{").is_err());
        assert!(parse_json(r#"{"nodes":[{"id":0}],"edges":[{"tail":0,"head":7}]}"#).is_err());
        assert!(parse_json(r#"{"nodes":[{"id":0},{"id":1,"taxon":"a"}],"edges":[{"tail":0,"head":1,"weight":"pi"}]}"#).is_err());
    }

    #[test]
    fn non_normal_input_is_not_a_parse_error() {
        let net = parse_enewick("((a)#H1:::0.5,#H1:::0.4);").unwrap();
        assert!(!net.validate().is_valid());
    }
}
