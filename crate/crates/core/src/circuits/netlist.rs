//! Netlist text format.
//!
//! ```text
//! # comment
//! INPUTS 4          # optional; otherwise n is the largest digit used
//! a = INPUT 1
//! b = INPUT 2
//! g = AND a b       # also OR with any fan-in ≥ 1, and NOT with fan-in 1
//! OUTPUT g
//! ```
//!
//! Statements end at a newline or `;`. Ids may be used before they are
//! defined; the definitions must form a DAG.

use std::collections::HashMap;

use super::{Circuit, Gate, Node};
use crate::{Error, Result};

#[derive(Debug)]
enum Kind {
    Input(u32),
    And(Vec<String>),
    Or(Vec<String>),
    Not(String),
}

#[derive(Debug)]
struct Statement {
    line: usize,
    id: String,
    kind: Kind,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn identifier(line: usize, s: &str) -> Result<String> {
    if is_identifier(s) {
        Ok(s.to_string())
    } else {
        Err(parse_err(line, format!("invalid identifier `{s}`")))
    }
}

fn parse_statement(line: usize, text: &str) -> Result<Option<Statement>> {
    let (id, rhs) = match text.split_once('=') {
        Some((l, r)) => (identifier(line, l.trim())?, r),
        None => return Err(parse_err(line, format!("expected `<id> = <gate> …`, found `{text}`"))),
    };
    let mut words = rhs.split_whitespace();
    let op = words
        .next()
        .ok_or_else(|| parse_err(line, format!("missing gate type for `{id}`")))?
        .to_ascii_uppercase();
    let args: Vec<&str> = words.collect();
    let kind = match op.as_str() {
        "INPUT" => {
            let [digit] = args[..] else {
                return Err(parse_err(line, format!("INPUT `{id}` takes one digit index")));
            };
            let i: u32 = digit
                .parse()
                .map_err(|_| parse_err(line, format!("bad digit index `{digit}`")))?;
            if i == 0 || i > 63 {
                return Err(parse_err(line, format!("digit index {i} out of range 1..=63")));
            }
            Kind::Input(i)
        }
        "NOT" => {
            let [c] = args[..] else {
                return Err(parse_err(line, format!("NOT `{id}` has fan-in {}, expected 1", args.len())));
            };
            Kind::Not(identifier(line, c)?)
        }
        "AND" | "OR" => {
            if args.is_empty() {
                return Err(parse_err(line, format!("{op} `{id}` has fan-in 0")));
            }
            let cs = args.iter().map(|a| identifier(line, a)).collect::<Result<Vec<_>>>()?;
            if op == "AND" { Kind::And(cs) } else { Kind::Or(cs) }
        }
        other => return Err(parse_err(line, format!("unknown gate type `{other}`"))),
    };
    Ok(Some(Statement { line, id, kind }))
}

/// Parses and validates a netlist.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut statements: Vec<Statement> = Vec::new();
    let mut output: Option<(usize, String)> = None;
    let mut declared_n: Option<(usize, u32)> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let code = raw.split('#').next().unwrap_or("");
        for part in code.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let mut words = part.split_whitespace();
            let head = words.next().unwrap_or("");
            if !part.contains('=') && head.eq_ignore_ascii_case("OUTPUT") {
                let rest: Vec<&str> = words.collect();
                let [id] = rest[..] else {
                    return Err(parse_err(line, "OUTPUT takes exactly one id"));
                };
                if output.is_some() {
                    return Err(parse_err(line, "second OUTPUT statement"));
                }
                output = Some((line, identifier(line, id)?));
            } else if !part.contains('=') && head.eq_ignore_ascii_case("INPUTS") {
                let rest: Vec<&str> = words.collect();
                let n = match rest[..] {
                    [v] => v.parse::<u32>().ok().filter(|&n| (1..=63).contains(&n)),
                    _ => None,
                }
                .ok_or_else(|| parse_err(line, "INPUTS takes one count in 1..=63"))?;
                declared_n = Some((line, n));
            } else if let Some(st) = parse_statement(line, part)? {
                statements.push(st);
            }
        }
    }

    let (out_line, out_id) = output.ok_or_else(|| parse_err(text.lines().count().max(1), "missing OUTPUT statement"))?;

    let mut index: HashMap<&str, usize> = HashMap::new();
    for (k, st) in statements.iter().enumerate() {
        if let Some(&prev) = index.get(st.id.as_str()) {
            return Err(parse_err(
                st.line,
                format!("`{}` already defined on line {}", st.id, statements[prev].line),
            ));
        }
        index.insert(&st.id, k);
    }

    let lookup = |line: usize, id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| parse_err(line, format!("undefined id `{id}`")))
    };
    let mut children: Vec<Vec<usize>> = Vec::with_capacity(statements.len());
    for st in &statements {
        let ids: Vec<&String> = match &st.kind {
            Kind::Input(_) => vec![],
            Kind::And(cs) | Kind::Or(cs) => cs.iter().collect(),
            Kind::Not(c) => vec![c],
        };
        children.push(ids.iter().map(|c| lookup(st.line, c)).collect::<Result<_>>()?);
    }
    let out_index = lookup(out_line, &out_id)?;

    // Iterative DFS; post-order is a topological order.
    const NEW: u8 = 0;
    const OPEN: u8 = 1;
    const DONE: u8 = 2;
    let mut state = vec![NEW; statements.len()];
    let mut order: Vec<usize> = Vec::with_capacity(statements.len());
    for root in 0..statements.len() {
        if state[root] != NEW {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = OPEN;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&c) = children[v].get(*next) {
                *next += 1;
                match state[c] {
                    NEW => {
                        state[c] = OPEN;
                        stack.push((c, 0));
                    }
                    OPEN => {
                        return Err(parse_err(
                            statements[v].line,
                            format!("cycle: `{}` depends on `{}`", statements[v].id, statements[c].id),
                        ));
                    }
                    _ => {}
                }
            } else {
                state[v] = DONE;
                order.push(v);
                stack.pop();
            }
        }
    }

    let mut position = vec![0usize; statements.len()];
    for (pos, &k) in order.iter().enumerate() {
        position[k] = pos;
    }
    let max_digit = statements
        .iter()
        .filter_map(|st| match st.kind {
            Kind::Input(i) => Some((st.line, i)),
            _ => None,
        })
        .max_by_key(|&(_, i)| i);
    let n = match (declared_n, max_digit) {
        (Some((_, n)), Some((line, i))) if i > n => {
            return Err(parse_err(line, format!("digit index {i} out of range 1..={n}")));
        }
        (Some((_, n)), _) => n,
        (None, Some((_, i))) => i,
        (None, None) => return Err(parse_err(out_line, "circuit has no INPUT nodes")),
    };

    let mut statements: Vec<Option<Statement>> = statements.into_iter().map(Some).collect();
    let nodes: Vec<Node> = order
        .iter()
        .map(|&k| {
            let st = statements[k].take().expect("each statement placed once");
            let gate = match st.kind {
                Kind::Input(i) => Gate::Input(i),
                Kind::And(_) => Gate::And(children[k].iter().map(|&c| position[c]).collect()),
                Kind::Or(_) => Gate::Or(children[k].iter().map(|&c| position[c]).collect()),
                Kind::Not(_) => Gate::Not(position[children[k][0]]),
            };
            Node { id: st.id, gate }
        })
        .collect();
    Circuit::new(n, nodes, position[out_index])
}
