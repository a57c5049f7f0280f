//! Recursive-descent parser for the schedule pattern language.
//!
//! ```text
//! schedule := item ((',' | whitespace) item)*
//! item     := LABEL | '(' schedule ')' repeat?
//! repeat   := 'x' UINT | '*'
//! LABEL    := [A-Za-z_][A-Za-z0-9_]*
//! ```
//!
//! `(...)xN` repeats a group N times. `(...)*` cycles its group until the
//! target length is reached (possibly stopping mid-cycle) and is only legal
//! as the last top-level item. Positions in errors are byte offsets.

use super::{Schedule, ScheduleError};

/// Deepest group nesting accepted before the parser gives up.
pub const MAX_NESTING: usize = 64;

#[derive(Debug)]
enum Node<'a> {
    Label(&'a str),
    Group { items: Vec<Node<'a>>, repeat: Repeat },
}

#[derive(Debug, Clone, Copy)]
enum Repeat {
    Once,
    Times(u64),
    Cycle,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    /// First `(...)*` found anywhere other than the final top-level item.
    misplaced_star: Option<usize>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn syntax(&self, expected: &str) -> ScheduleError {
        ScheduleError::Syntax {
            position: self.pos,
            expected: expected.to_string(),
        }
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        self.pos > start
    }

    /// Parses items until end of input or an unconsumed ')'.
    /// Returns the items with the byte offset of each cycling group.
    fn sequence(&mut self, depth: usize) -> Result<Vec<(Node<'a>, Option<usize>)>, ScheduleError> {
        let mut items = Vec::new();
        self.skip_ws();
        loop {
            items.push(self.item(depth)?);
            let had_ws = self.skip_ws();
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                    self.skip_ws();
                }
                None | Some(b')') => break,
                Some(_) if had_ws => {}
                Some(_) => {
                    return Err(self.syntax(if depth == 0 {
                        "',' or end of input"
                    } else {
                        "',' or ')'"
                    }))
                }
            }
        }
        Ok(items)
    }

    fn item(&mut self, depth: usize) -> Result<(Node<'a>, Option<usize>), ScheduleError> {
        match self.peek() {
            Some(b'(') => {
                let open = self.pos;
                if depth >= MAX_NESTING {
                    return Err(self.syntax("at most 64 nested groups"));
                }
                self.pos += 1;
                let inner = self.sequence(depth + 1)?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("')'"));
                }
                self.pos += 1;
                let repeat = self.repeat()?;
                let mut items = Vec::with_capacity(inner.len());
                for (node, star) in inner {
                    // Any cycling group nested inside another group is misplaced.
                    if let Some(p) = star {
                        self.misplaced_star.get_or_insert(p);
                    }
                    items.push(node);
                }
                let star = matches!(repeat, Repeat::Cycle).then_some(open);
                Ok((Node::Group { items, repeat }, star))
            }
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {
                let start = self.pos;
                while self
                    .peek()
                    .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_')
                {
                    self.pos += 1;
                }
                Ok((Node::Label(&self.src[start..self.pos]), None))
            }
            _ => Err(self.syntax("label or '('")),
        }
    }

    fn repeat(&mut self) -> Result<Repeat, ScheduleError> {
        match self.peek() {
            Some(b'*') => {
                self.pos += 1;
                Ok(Repeat::Cycle)
            }
            Some(b'x') => {
                self.pos += 1;
                let start = self.pos;
                while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                    self.pos += 1;
                }
                if start == self.pos {
                    return Err(self.syntax("repeat count"));
                }
                self.src[start..self.pos].parse::<u64>().map(Repeat::Times).map_err(|_| {
                    ScheduleError::Syntax {
                        position: start,
                        expected: "repeat count below 2^64".to_string(),
                    }
                })
            }
            _ => Ok(Repeat::Once),
        }
    }
}

/// Number of labels a node expands to, saturating at `usize::MAX`.
fn fixed_len(node: &Node<'_>) -> usize {
    match node {
        Node::Label(_) => 1,
        Node::Group { items, repeat } => {
            let once = items
                .iter()
                .fold(0usize, |acc, n| acc.saturating_add(fixed_len(n)));
            match repeat {
                Repeat::Once | Repeat::Cycle => once,
                Repeat::Times(n) => {
                    once.saturating_mul(usize::try_from(*n).unwrap_or(usize::MAX))
                }
            }
        }
    }
}

/// Expands a node whose total length is already known to fit.
fn expand<'a>(node: &Node<'a>, out: &mut Vec<&'a str>) {
    match node {
        Node::Label(l) => out.push(l),
        Node::Group { items, repeat } => {
            let times = match repeat {
                Repeat::Times(n) => *n,
                Repeat::Once | Repeat::Cycle => 1,
            };
            if fixed_len(node) == 0 {
                return;
            }
            for _ in 0..times {
                for item in items {
                    expand(item, out);
                }
            }
        }
    }
}

/// Parses `pattern` and expands it to exactly `target_length` labels.
pub fn parse_schedule(pattern: &str, target_length: usize) -> Result<Schedule, ScheduleError> {
    let mut parser = Parser {
        src: pattern,
        pos: 0,
        misplaced_star: None,
    };
    let items = parser.sequence(0)?;
    if parser.pos != pattern.len() {
        // The only way `sequence` stops early at depth 0 is a stray ')'.
        return Err(parser.syntax("',' or end of input"));
    }
    let last = items.len() - 1;
    for (i, (_, star)) in items.iter().enumerate() {
        if let (Some(p), true) = (star, i != last) {
            parser.misplaced_star.get_or_insert(*p);
        }
    }
    if let Some(position) = parser.misplaced_star {
        return Err(ScheduleError::StarNotLast { position });
    }
    if target_length == 0 {
        return Err(ScheduleError::Empty);
    }

    let cycling = items[last].1.is_some();
    let fixed_items = if cycling { &items[..last] } else { &items[..] };
    let fixed = fixed_items
        .iter()
        .fold(0usize, |acc, (n, _)| acc.saturating_add(fixed_len(n)));
    if fixed > target_length {
        return Err(ScheduleError::LengthOverflow {
            expanded: fixed,
            target: target_length,
        });
    }
    let mut out = Vec::with_capacity(target_length);
    for (node, _) in fixed_items {
        expand(node, &mut out);
    }
    if cycling {
        let mut cycle = Vec::new();
        let cycle_len = fixed_len(&items[last].0);
        if cycle_len == 0 && fixed < target_length {
            return Err(ScheduleError::LengthUnderflow {
                expanded: fixed,
                target: target_length,
            });
        }
        // One pass of the cycle is at most target_length labels when it fits;
        // longer cycles are simply truncated.
        if cycle_len <= target_length {
            expand(&items[last].0, &mut cycle);
        } else {
            let mut partial = Vec::new();
            expand_bounded(&items[last].0, target_length - fixed, &mut partial);
            cycle = partial;
        }
        let mut i = 0;
        while out.len() < target_length {
            out.push(cycle[i % cycle.len()]);
            i += 1;
        }
    } else if out.len() < target_length {
        return Err(ScheduleError::LengthUnderflow {
            expanded: out.len(),
            target: target_length,
        });
    }
    Schedule::new(out)
}

/// Like [`expand`], stopping once `limit` labels have been produced.
fn expand_bounded<'a>(node: &Node<'a>, limit: usize, out: &mut Vec<&'a str>) {
    if out.len() >= limit {
        return;
    }
    match node {
        Node::Label(l) => out.push(l),
        Node::Group { items, repeat } => {
            if fixed_len(node) == 0 {
                return;
            }
            let times = match repeat {
                Repeat::Times(n) => *n,
                Repeat::Once | Repeat::Cycle => 1,
            };
            for _ in 0..times {
                for item in items {
                    expand_bounded(item, limit, out);
                    if out.len() >= limit {
                        return;
                    }
                }
            }
        }
    }
}
