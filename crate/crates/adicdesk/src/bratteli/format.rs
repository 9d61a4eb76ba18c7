//! The `BBD1` diagram text format: a line-oriented description with a
//! byte-stable canonical form, parse diagnostics carrying line numbers, and
//! an optional stationary-generator stanza that expands at parse time.
//!
//! Canonical form: `bbd 1` header, an optional `periodic` line, levels in
//! ascending order as `level <n> vertices <k>` followed by that level's
//! `edge <n> <src> <dst> <rank>` lines sorted by (dst, rank), then optional
//! special-structure stanzas (`block`, `diag0`, `diag1`). UTF-8, LF line
//! endings, `#` comments (parse-only).

use std::fmt::Write as _;

use thiserror::Error;

use super::{
    Diagram, Edge, Level, Periodicity, SpecialBlock, SpecialDiagramSpec, SpecialLevel,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {message}")]
    Semantic { line: usize, message: String },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Semantic { line, .. } => *line,
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

fn semantic(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Semantic { line, message: message.into() }
}

/// Serializes a diagram to its canonical byte-stable form.
pub fn serialize(d: &Diagram) -> String {
    let mut out = String::from("bbd 1\n");
    if let Some(p) = d.periodicity() {
        let _ = writeln!(out, "periodic {} {}", p.head_levels, p.period);
    }
    for (i, level) in d.levels().iter().enumerate() {
        let n = i + 1;
        let _ = writeln!(out, "level {} vertices {}", n, level.vertex_count);
        let mut edges = level.edges.clone();
        edges.sort_by_key(|e| (e.range, e.rank, e.source));
        for e in edges {
            let _ = writeln!(out, "edge {} {} {} {}", n, e.source, e.range, e.rank);
        }
    }
    if let Some(spec) = d.special() {
        for (i, sl) in spec.levels.iter().enumerate() {
            let n = i + 1;
            let mut blocks = sl.blocks.clone();
            blocks.sort_by_key(|b| b.j);
            for b in blocks {
                let _ = write!(out, "block {} {}", n, b.j);
                for v in &b.vertices {
                    let _ = write!(out, " {v}");
                }
                out.push('\n');
            }
            let _ = write!(out, "diag0 {n}");
            for v in &sl.diag0 {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
            let _ = write!(out, "diag1 {n}");
            for v in &sl.diag1 {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
    }
    out
}

struct GeneratorSpec {
    line: usize,
    levels: usize,
    size: usize,
    rows: Vec<Option<Vec<usize>>>,
    orders: Vec<Option<Vec<u32>>>,
}

/// Parses `BBD1` text, expanding any generator stanza.
pub fn parse(text: &str) -> Result<Diagram, ParseError> {
    let mut header_seen = false;
    let mut periodicity: Option<Periodicity> = None;
    let mut levels: Vec<Level> = Vec::new();
    let mut special: Vec<SpecialLevel> = Vec::new();
    let mut generator: Option<GeneratorSpec> = None;

    let parse_nums = |line: usize, parts: &[&str]| -> Result<Vec<usize>, ParseError> {
        parts
            .iter()
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| syntax(line, format!("expected an integer, found `{p}`")))
            })
            .collect()
    };

    for (lineno, raw) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let parts: Vec<&str> = body.split_whitespace().collect();
        if !header_seen {
            if parts == ["bbd", "1"] {
                header_seen = true;
                continue;
            }
            return Err(syntax(lineno, "expected header `bbd 1`"));
        }
        match parts[0] {
            "periodic" => {
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.len() != 2 || nums[1] == 0 {
                    return Err(syntax(lineno, "expected `periodic <head> <period>` with period > 0"));
                }
                periodicity = Some(Periodicity { head_levels: nums[0], period: nums[1] });
            }
            "level" => {
                if parts.len() != 4 || parts[2] != "vertices" {
                    return Err(syntax(lineno, "expected `level <n> vertices <k>`"));
                }
                let n = parse_nums(lineno, &parts[1..2])?[0];
                let k = parse_nums(lineno, &parts[3..4])?[0];
                if n != levels.len() + 1 {
                    return Err(semantic(
                        lineno,
                        format!("level {n} out of order, expected {}", levels.len() + 1),
                    ));
                }
                if k == 0 {
                    return Err(semantic(lineno, "a level needs at least one vertex"));
                }
                levels.push(Level { vertex_count: k, edges: Vec::new() });
            }
            "edge" => {
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.len() != 4 {
                    return Err(syntax(lineno, "expected `edge <level> <src> <dst> <rank>`"));
                }
                let (n, src, dst, rank) = (nums[0], nums[1], nums[2], nums[3]);
                if n == 0 || n > levels.len() {
                    return Err(semantic(lineno, format!("edge references undeclared level {n}")));
                }
                let below = if n == 1 { 1 } else { levels[n - 2].vertex_count };
                let level = &mut levels[n - 1];
                if src >= below {
                    return Err(semantic(
                        lineno,
                        format!("source vertex {src} undeclared at level {}", n - 1),
                    ));
                }
                if dst >= level.vertex_count {
                    return Err(semantic(lineno, format!("range vertex {dst} undeclared at level {n}")));
                }
                if level.edges.iter().any(|e| e.range == dst && e.rank == rank as u32) {
                    return Err(semantic(
                        lineno,
                        format!("duplicate rank {rank} on vertex {dst} at level {n}"),
                    ));
                }
                level.edges.push(Edge { source: src, range: dst, rank: rank as u32 });
            }
            "block" => {
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.len() < 2 {
                    return Err(syntax(lineno, "expected `block <n> <j> <vertices...>`"));
                }
                let n = nums[0];
                ensure_special_level(&mut special, n, lineno)?;
                special[n - 1].blocks.push(SpecialBlock { j: nums[1], vertices: nums[2..].to_vec() });
            }
            "diag0" | "diag1" => {
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.is_empty() {
                    return Err(syntax(lineno, format!("expected `{} <n> <vertices...>`", parts[0])));
                }
                let n = nums[0];
                ensure_special_level(&mut special, n, lineno)?;
                if parts[0] == "diag0" {
                    special[n - 1].diag0 = nums[1..].to_vec();
                } else {
                    special[n - 1].diag1 = nums[1..].to_vec();
                }
            }
            "generator" => {
                if parts.len() != 6
                    || parts[1] != "stationary"
                    || parts[2] != "levels"
                    || parts[4] != "size"
                {
                    return Err(syntax(lineno, "expected `generator stationary levels <n> size <k>`"));
                }
                let n = parse_nums(lineno, &parts[3..4])?[0];
                let k = parse_nums(lineno, &parts[5..6])?[0];
                if n == 0 || k == 0 {
                    return Err(semantic(lineno, "generator needs positive level and vertex counts"));
                }
                generator = Some(GeneratorSpec {
                    line: lineno,
                    levels: n,
                    size: k,
                    rows: vec![None; k],
                    orders: vec![None; k],
                });
            }
            "row" => {
                let gen = generator
                    .as_mut()
                    .ok_or_else(|| semantic(lineno, "`row` outside a generator stanza"))?;
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.len() != gen.size + 1 || nums[0] >= gen.size {
                    return Err(syntax(lineno, format!("expected `row <i> <{} entries>`", gen.size)));
                }
                gen.rows[nums[0]] = Some(nums[1..].to_vec());
            }
            "order" => {
                let gen = generator
                    .as_mut()
                    .ok_or_else(|| semantic(lineno, "`order` outside a generator stanza"))?;
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.is_empty() || nums[0] >= gen.size {
                    return Err(syntax(lineno, "expected `order <i> <ranks...>`"));
                }
                gen.orders[nums[0]] = Some(nums[1..].iter().map(|&x| x as u32).collect());
            }
            other => return Err(syntax(lineno, format!("unknown directive `{other}`"))),
        }
    }
    if !header_seen {
        return Err(syntax(1, "empty input: expected header `bbd 1`"));
    }

    if let Some(gen) = generator {
        if !levels.is_empty() {
            return Err(semantic(gen.line, "generator stanza cannot mix with explicit levels"));
        }
        return expand_generator(gen);
    }

    let mut d = Diagram::new(levels);
    if let Some(p) = periodicity {
        d = d.with_periodicity(p);
    }
    if !special.is_empty() {
        d = d.with_special(SpecialDiagramSpec { levels: special });
    }
    Ok(d)
}

fn ensure_special_level(
    special: &mut Vec<SpecialLevel>,
    n: usize,
    lineno: usize,
) -> Result<(), ParseError> {
    if n == 0 {
        return Err(semantic(lineno, "special stanzas start at level 1"));
    }
    while special.len() < n {
        special.push(SpecialLevel { blocks: Vec::new(), diag0: Vec::new(), diag1: Vec::new() });
    }
    Ok(())
}

fn expand_generator(gen: GeneratorSpec) -> Result<Diagram, ParseError> {
    let k = gen.size;
    let mut template_edges: Vec<Edge> = Vec::new();
    for v in 0..k {
        let row = gen.rows[v]
            .as_ref()
            .ok_or_else(|| semantic(gen.line, format!("generator misses `row {v}`")))?;
        let total: usize = row.iter().sum();
        let order: Vec<u32> = match &gen.orders[v] {
            Some(o) => o.clone(),
            None => (0..total as u32).collect(),
        };
        if order.len() != total {
            return Err(semantic(
                gen.line,
                format!("order table for vertex {v} has {} entries, row sum is {total}", order.len()),
            ));
        }
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..total as u32).collect::<Vec<_>>() {
            return Err(semantic(
                gen.line,
                format!("order table for vertex {v} is not a permutation of 0..{total}"),
            ));
        }
        let mut slot = 0usize;
        for (src, &count) in row.iter().enumerate() {
            for _ in 0..count {
                template_edges.push(Edge { source: src, range: v, rank: order[slot] });
                slot += 1;
            }
        }
    }
    // level 1 collapses all sources onto the root vertex
    let mut levels = Vec::with_capacity(gen.levels);
    levels.push(Level {
        vertex_count: k,
        edges: template_edges.iter().map(|e| Edge { source: 0, ..*e }).collect(),
    });
    for _ in 1..gen.levels {
        levels.push(Level { vertex_count: k, edges: template_edges.clone() });
    }
    Ok(Diagram::new(levels).with_periodicity(Periodicity { head_levels: 0, period: 1 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bratteli::{cyclic_level, special_example};

    #[test]
    fn round_trip_canonical_bytes() {
        let d = Diagram::stationary(cyclic_level(2), 3);
        let text = serialize(&d);
        let parsed = parse(&text).unwrap();
        assert_eq!(parsed, d);
        assert_eq!(serialize(&parsed), text);
    }

    #[test]
    fn round_trip_special_diagram() {
        let d = special_example(3);
        let text = serialize(&d);
        let parsed = parse(&text).unwrap();
        assert_eq!(serialize(&parsed), text);
        assert!(parsed.special().is_some());
    }

    #[test]
    fn dangling_vertex_reported_with_line() {
        let text = "bbd 1\nlevel 1 vertices 1\nedge 1 0 9 0\n";
        let err = parse(text).unwrap_err();
        assert_eq!(err.line(), 3);
        assert!(matches!(err, ParseError::Semantic { .. }));
    }

    #[test]
    fn duplicate_rank_reported() {
        let text = "bbd 1\nlevel 1 vertices 1\nedge 1 0 0 0\nedge 1 0 0 0\n";
        let err = parse(text).unwrap_err();
        assert_eq!(err.line(), 4);
    }

    #[test]
    fn missing_header_rejected() {
        assert!(parse("level 1 vertices 1\n").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# a diagram\nbbd 1\n\nlevel 1 vertices 1 # the only level\nedge 1 0 0 0\nedge 1 0 0 1\n";
        let d = parse(text).unwrap();
        assert_eq!(d.depth(), 1);
        assert_eq!(d.level(1).unwrap().edges.len(), 2);
    }

    #[test]
    fn generator_expands_to_stationary_diagram() {
        let text = "bbd 1\ngenerator stationary levels 4 size 1\nrow 0 2\norder 0 0 1\n";
        let d = parse(text).unwrap();
        assert_eq!(d.depth(), 4);
        assert!(d.validate(4).is_clean());
        assert_eq!(d.incidence(3).unwrap().entries, vec![vec![2]]);
        assert_eq!(d.periodicity(), Some(Periodicity { head_levels: 0, period: 1 }));
        // expansion serializes to the explicit canonical form
        let expanded = parse(&serialize(&d)).unwrap();
        assert_eq!(expanded.levels(), d.levels());
    }

    #[test]
    fn generator_with_two_vertices() {
        let text = "bbd 1\ngenerator stationary levels 3 size 2\nrow 0 1 1\nrow 1 1 0\norder 0 1 0\norder 1 0\n";
        let d = parse(text).unwrap();
        assert!(d.validate(3).is_clean());
        let m = d.incidence(2).unwrap();
        assert_eq!(m.entries, vec![vec![1, 1], vec![1, 0]]);
    }

    #[test]
    fn generator_rejects_bad_order_table() {
        let text = "bbd 1\ngenerator stationary levels 2 size 1\nrow 0 2\norder 0 0 0\n";
        assert!(parse(text).is_err());
    }

    #[test]
    fn periodic_metadata_round_trips() {
        let d = Diagram::stationary(cyclic_level(3), 2);
        let text = serialize(&d);
        assert!(text.contains("periodic 0 1"));
        let parsed = parse(&text).unwrap();
        assert_eq!(parsed.periodicity(), d.periodicity());
    }
}
