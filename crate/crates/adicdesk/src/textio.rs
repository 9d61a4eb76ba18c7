//! Text forms for the non-diagram artifacts: alphabet specs and point
//! literals (`HEAD(PERIOD)`), adic integers (`digits@lambda`), rewrite maps
//! (one `u -> w` rule per line), measures (stanza blocks), and
//! cutting-and-stacking specifications.

use num_rational::BigRational;
use thiserror::Error;

use crate::cylmap::{CylMap, MapError, Rule};
use crate::measure::{LevelVectors, MeasureSpec};
use crate::odometer::AdicInt;
use crate::space::{Point, SeqSpace, SpaceError, Word};
use crate::towers::{CuttingStackingSpec, Stage};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {0}: {1}")]
    Line(usize, String),
    #[error("bad literal `{0}`: {1}")]
    Literal(String, String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Map(#[from] MapError),
}

fn digits_of(part: &str, what: &str) -> Result<Vec<u32>, TextError> {
    if part.is_empty() {
        return Ok(Vec::new());
    }
    if part.contains('.') {
        // dotted form; a trailing dot marks a lone multi-digit entry
        part.trim_end_matches('.')
            .split('.')
            .map(|d| {
                d.parse::<u32>()
                    .map_err(|_| TextError::Literal(part.into(), format!("bad {what} digit `{d}`")))
            })
            .collect()
    } else {
        part.chars()
            .map(|c| {
                c.to_digit(10)
                    .ok_or_else(|| TextError::Literal(part.into(), format!("bad {what} digit `{c}`")))
            })
            .collect()
    }
}

/// Splits a `HEAD(PERIOD)` literal into its two digit lists.
fn head_period(text: &str, what: &str) -> Result<(Vec<u32>, Vec<u32>), TextError> {
    let open = text.find('(');
    match open {
        Some(i) => {
            if !text.ends_with(')') {
                return Err(TextError::Literal(text.into(), "missing closing parenthesis".into()));
            }
            let head = digits_of(&text[..i], what)?;
            let period = digits_of(&text[i + 1..text.len() - 1], what)?;
            Ok((head, period))
        }
        None => {
            // a bare literal is a constant stream
            let ds = digits_of(text, what)?;
            if ds.len() == 1 {
                Ok((Vec::new(), ds))
            } else {
                Err(TextError::Literal(text.into(), "expected HEAD(PERIOD) or a single digit".into()))
            }
        }
    }
}

/// Parses an alphabet spec like `(2)`, `2`, or `23(4)`.
pub fn parse_space(text: &str) -> Result<SeqSpace, TextError> {
    if !text.contains('(') {
        let n = text
            .parse::<u32>()
            .map_err(|_| TextError::Literal(text.into(), "expected a radix or HEAD(PERIOD)".into()))?;
        return Ok(SeqSpace::uniform(n));
    }
    let (head, period) = head_period(text, "alphabet")?;
    Ok(SeqSpace::new(head, period)?)
}

pub fn format_space(space: &SeqSpace) -> String {
    space.to_string()
}

/// Parses a point literal `HEAD(PERIOD)`, e.g. `110(0)`.
pub fn parse_point(text: &str, space: &SeqSpace) -> Result<Point, TextError> {
    let (head, period) = head_period(text, "point")?;
    let p = Point::new(head, if period.is_empty() { vec![0] } else { period })
        .map_err(TextError::from)?;
    p.validate(space)?;
    Ok(p)
}

pub fn format_point(p: &Point) -> String {
    p.to_string()
}

/// Parses an adic integer literal `HEAD(PERIOD)@lambda`, e.g. `110(0)@2`.
pub fn parse_adic(text: &str) -> Result<AdicInt, TextError> {
    let (digits, lambda) = text
        .split_once('@')
        .ok_or_else(|| TextError::Literal(text.into(), "expected digits@lambda".into()))?;
    let space = parse_space(lambda)?;
    let point = parse_point(digits, &space)?;
    AdicInt::new(&space, point).map_err(|e| TextError::Literal(text.into(), e.to_string()))
}

pub fn format_adic(x: &AdicInt) -> String {
    format!("{}@{}", x.digits(), x.space())
}

/// Serializes a rewrite map: a `space` header, one rule per line, then the
/// exceptional points.
pub fn format_cylmap(m: &CylMap) -> String {
    let mut out = format!("space {}\n", m.space());
    for r in m.rules() {
        out.push_str(&format!("{} -> {}\n", r.input, r.output));
    }
    for (p, q) in m.exceptions() {
        out.push_str(&format!("point {} -> {}\n", p, q));
    }
    out
}

/// Parses the rewrite-map form produced by `format_cylmap`.
pub fn parse_cylmap(text: &str) -> Result<CylMap, TextError> {
    let mut space: Option<SeqSpace> = None;
    let mut rules = Vec::new();
    let mut exceptions = Vec::new();
    for (lineno, raw) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix("space ") {
            space = Some(parse_space(rest.trim())?);
            continue;
        }
        let sp = space
            .as_ref()
            .ok_or_else(|| TextError::Line(lineno, "rule before `space` header".into()))?;
        if let Some(rest) = body.strip_prefix("point ") {
            let (lhs, rhs) = rest
                .split_once("->")
                .ok_or_else(|| TextError::Line(lineno, "expected `point p -> q`".into()))?;
            exceptions.push((parse_point(lhs.trim(), sp)?, parse_point(rhs.trim(), sp)?));
            continue;
        }
        let (lhs, rhs) = body
            .split_once("->")
            .ok_or_else(|| TextError::Line(lineno, "expected `u -> w`".into()))?;
        let parse_word = |part: &str| -> Result<Word, TextError> {
            let part = part.trim();
            if part == "e" {
                return Ok(Word::root());
            }
            Ok(Word::new(digits_of(part, "rule")?))
        };
        rules.push(Rule { input: parse_word(lhs)?, output: parse_word(rhs)? });
    }
    let space = space.ok_or_else(|| TextError::Line(1, "missing `space` header".into()))?;
    Ok(CylMap::new(&space, rules, exceptions)?)
}

fn parse_ratio(text: &str, lineno: usize) -> Result<BigRational, TextError> {
    let parse_int = |t: &str| -> Result<num_bigint::BigInt, TextError> {
        t.parse::<num_bigint::BigInt>()
            .map_err(|_| TextError::Line(lineno, format!("bad rational `{text}`")))
    };
    match text.split_once('/') {
        Some((n, d)) => Ok(BigRational::new(parse_int(n)?, parse_int(d)?)),
        None => Ok(BigRational::from_integer(parse_int(text)?)),
    }
}

fn format_ratio(r: &BigRational) -> String {
    r.to_string()
}

/// Serializes a measure as a stanza block.
pub fn format_measure(mu: &MeasureSpec) -> String {
    fn rows(out: &mut String, laws: &LevelVectors) {
        for row in &laws.head {
            out.push_str(&row.iter().map(format_ratio).collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
        out.push_str("repeat\n");
        for row in &laws.period {
            out.push_str(&row.iter().map(format_ratio).collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
    }
    let mut out = String::new();
    match mu {
        MeasureSpec::Bernoulli { space, laws } => {
            out.push_str(&format!("bernoulli {space}\n"));
            rows(&mut out, laws);
        }
        MeasureSpec::Markov { space, initial, transitions } => {
            out.push_str(&format!("markov {space}\n"));
            out.push_str("initial ");
            out.push_str(&initial.iter().map(format_ratio).collect::<Vec<_>>().join(" "));
            out.push('\n');
            rows(&mut out, transitions);
        }
        MeasureSpec::Atomic { space, atoms } => {
            out.push_str(&format!("atomic {space}\n"));
            for (p, w) in atoms {
                out.push_str(&format!("atom {} {}\n", p, format_ratio(w)));
            }
        }
        MeasureSpec::Mixture { parts } => {
            out.push_str("mix\n");
            for (w, m) in parts {
                out.push_str(&format!("weight {}\n", format_ratio(w)));
                out.push_str(&format_measure(m));
                out.push_str("end\n");
            }
        }
    }
    out
}

/// Parses the stanza form produced by `format_measure`.
pub fn parse_measure(text: &str) -> Result<MeasureSpec, TextError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut pos = 0usize;
    let mu = parse_measure_block(&lines, &mut pos)?;
    if pos != lines.len() {
        return Err(TextError::Line(lines[pos].0, "trailing content after measure".into()));
    }
    mu.validate()
        .map_err(|e| TextError::Line(lines.first().map_or(1, |(n, _)| *n), e.to_string()))?;
    Ok(mu)
}

fn parse_measure_block(
    lines: &[(usize, &str)],
    pos: &mut usize,
) -> Result<MeasureSpec, TextError> {
    let (lineno, header) = *lines
        .get(*pos)
        .ok_or_else(|| TextError::Line(1, "empty measure block".into()))?;
    *pos += 1;
    let mut parts = header.split_whitespace();
    let kind = parts.next().unwrap_or("");
    match kind {
        "bernoulli" | "markov" => {
            let space = parse_space(
                parts
                    .next()
                    .ok_or_else(|| TextError::Line(lineno, "missing alphabet spec".into()))?,
            )?;
            let mut initial: Option<Vec<BigRational>> = None;
            let mut head = Vec::new();
            let mut period = Vec::new();
            let mut in_period = false;
            while *pos < lines.len() {
                let (ln, body) = lines[*pos];
                if body == "repeat" {
                    in_period = true;
                    *pos += 1;
                    continue;
                }
                if body == "end" || body.starts_with("weight ") {
                    break;
                }
                if let Some(rest) = body.strip_prefix("initial ") {
                    initial = Some(
                        rest.split_whitespace()
                            .map(|t| parse_ratio(t, ln))
                            .collect::<Result<_, _>>()?,
                    );
                    *pos += 1;
                    continue;
                }
                // a fresh stanza keyword ends this block
                if body.split_whitespace().next().map_or(false, |w| {
                    ["bernoulli", "markov", "atomic", "mix"].contains(&w)
                }) {
                    break;
                }
                let row: Vec<BigRational> = body
                    .split_whitespace()
                    .map(|t| parse_ratio(t, ln))
                    .collect::<Result<_, _>>()?;
                if in_period {
                    period.push(row);
                } else {
                    head.push(row);
                }
                *pos += 1;
            }
            if period.is_empty() {
                return Err(TextError::Line(lineno, "measure needs a `repeat` block".into()));
            }
            let laws = LevelVectors { head, period };
            if kind == "bernoulli" {
                Ok(MeasureSpec::Bernoulli { space, laws })
            } else {
                let initial = initial
                    .ok_or_else(|| TextError::Line(lineno, "markov needs an `initial` row".into()))?;
                Ok(MeasureSpec::Markov { space, initial, transitions: laws })
            }
        }
        "atomic" => {
            let space = parse_space(
                parts
                    .next()
                    .ok_or_else(|| TextError::Line(lineno, "missing alphabet spec".into()))?,
            )?;
            let mut atoms = Vec::new();
            while *pos < lines.len() {
                let (ln, body) = lines[*pos];
                let Some(rest) = body.strip_prefix("atom ") else { break };
                let mut it = rest.split_whitespace();
                let lit = it
                    .next()
                    .ok_or_else(|| TextError::Line(ln, "expected `atom <point> <weight>`".into()))?;
                let w = it
                    .next()
                    .ok_or_else(|| TextError::Line(ln, "expected `atom <point> <weight>`".into()))?;
                atoms.push((parse_point(lit, &space)?, parse_ratio(w, ln)?));
                *pos += 1;
            }
            Ok(MeasureSpec::Atomic { space, atoms })
        }
        "mix" => {
            let mut mix = Vec::new();
            while *pos < lines.len() {
                let (ln, body) = lines[*pos];
                let Some(rest) = body.strip_prefix("weight ") else { break };
                let w = parse_ratio(rest.trim(), ln)?;
                *pos += 1;
                let inner = parse_measure_block(lines, pos)?;
                if lines.get(*pos).map(|(_, b)| *b) == Some("end") {
                    *pos += 1;
                } else {
                    return Err(TextError::Line(ln, "mixture part misses `end`".into()));
                }
                mix.push((w, inner));
            }
            Ok(MeasureSpec::Mixture { parts: mix })
        }
        other => Err(TextError::Line(lineno, format!("unknown measure stanza `{other}`"))),
    }
}

/// Serializes a cutting-and-stacking spec, one stage per line.
pub fn format_cutstack(spec: &CuttingStackingSpec) -> String {
    let mut out = String::new();
    for (i, s) in spec.stages.iter().enumerate() {
        out.push_str(&format!("stage {} cuts {} spacers", i + 1, s.cuts));
        for m in &s.spacers {
            out.push_str(&format!(" {m}"));
        }
        out.push('\n');
    }
    out
}

/// Parses `stage <n> cuts <p> spacers <m_1> ... <m_p>` lines.
pub fn parse_cutstack(text: &str) -> Result<CuttingStackingSpec, TextError> {
    let mut stages = Vec::new();
    for (lineno, raw) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let parts: Vec<&str> = body.split_whitespace().collect();
        if parts.len() < 5 || parts[0] != "stage" || parts[2] != "cuts" || parts[4] != "spacers" {
            return Err(TextError::Line(
                lineno,
                "expected `stage <n> cuts <p> spacers <m_1> ... <m_p>`".into(),
            ));
        }
        let n: usize = parts[1]
            .parse()
            .map_err(|_| TextError::Line(lineno, "bad stage number".into()))?;
        if n != stages.len() + 1 {
            return Err(TextError::Line(lineno, format!("stage {n} out of order")));
        }
        let cuts: usize = parts[3]
            .parse()
            .map_err(|_| TextError::Line(lineno, "bad cut count".into()))?;
        let spacers: Vec<usize> = parts[5..]
            .iter()
            .map(|t| t.parse().map_err(|_| TextError::Line(lineno, "bad spacer count".into())))
            .collect::<Result<_, _>>()?;
        if spacers.len() != cuts {
            return Err(TextError::Line(
                lineno,
                format!("{} spacer counts for {} cuts", spacers.len(), cuts),
            ));
        }
        stages.push(Stage { cuts, spacers });
    }
    Ok(CuttingStackingSpec { stages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odometer::translation_one;
    use crate::ratio;

    #[test]
    fn space_literals() {
        assert_eq!(parse_space("2").unwrap(), SeqSpace::uniform(2));
        assert_eq!(parse_space("(2)").unwrap(), SeqSpace::uniform(2));
        let mixed = parse_space("23(4)").unwrap();
        assert_eq!(mixed, SeqSpace::new(vec![2, 3], vec![4]).unwrap());
        assert_eq!(parse_space(&format_space(&mixed)).unwrap(), mixed);
        let wide = SeqSpace::new(vec![12], vec![3]).unwrap();
        assert_eq!(parse_space(&format_space(&wide)).unwrap(), wide);
        assert!(parse_space("x").is_err());
    }

    #[test]
    fn point_and_adic_literals() {
        let s = SeqSpace::uniform(2);
        let p = parse_point("110(0)", &s).unwrap();
        assert_eq!(p, Point::new(vec![1, 1, 0], vec![0]).unwrap());
        let x = parse_adic("110(0)@2").unwrap();
        assert_eq!(x, AdicInt::from_u64(&s, 3));
        assert_eq!(parse_adic(&format_adic(&x)).unwrap(), x);
        // digit out of range
        assert!(parse_point("2(0)", &s).is_err());
    }

    #[test]
    fn cylmap_round_trip() {
        let s = SeqSpace::uniform(2);
        let t = translation_one(&s, 10).unwrap();
        let text = format_cylmap(&t);
        let parsed = parse_cylmap(&text).unwrap();
        assert_eq!(parsed, t);
        assert_eq!(format_cylmap(&parsed), text);
    }

    #[test]
    fn cylmap_identity_round_trip() {
        let s = SeqSpace::uniform(3);
        let id = CylMap::identity(&s);
        let parsed = parse_cylmap(&format_cylmap(&id)).unwrap();
        assert_eq!(parsed, id);
    }

    #[test]
    fn measure_round_trips() {
        let s = SeqSpace::uniform(2);
        let uni = MeasureSpec::uniform(&s);
        assert_eq!(parse_measure(&format_measure(&uni)).unwrap(), uni);
        let atomic = MeasureSpec::Atomic {
            space: s.clone(),
            atoms: vec![
                (Point::constant(0), ratio(1, 2)),
                (Point::constant(1), ratio(1, 2)),
            ],
        };
        assert_eq!(parse_measure(&format_measure(&atomic)).unwrap(), atomic);
        let mix = MeasureSpec::Mixture {
            parts: vec![(ratio(1, 2), uni.clone()), (ratio(1, 2), atomic.clone())],
        };
        assert_eq!(parse_measure(&format_measure(&mix)).unwrap(), mix);
        let markov = MeasureSpec::Markov {
            space: s,
            initial: vec![ratio(1, 2), ratio(1, 2)],
            transitions: LevelVectors {
                head: vec![],
                period: vec![vec![ratio(2, 3), ratio(1, 3), ratio(1, 3), ratio(2, 3)]],
            },
        };
        assert_eq!(parse_measure(&format_measure(&markov)).unwrap(), markov);
    }

    #[test]
    fn invalid_measure_rejected() {
        let text = "bernoulli (2)\nrepeat\n1/3 1/3\n";
        assert!(parse_measure(text).is_err());
    }

    #[test]
    fn cutstack_round_trip() {
        let spec = CuttingStackingSpec {
            stages: vec![
                Stage { cuts: 2, spacers: vec![1, 0] },
                Stage { cuts: 3, spacers: vec![0, 2, 0] },
            ],
        };
        let text = format_cutstack(&spec);
        assert_eq!(text, "stage 1 cuts 2 spacers 1 0\nstage 2 cuts 3 spacers 0 2 0\n");
        assert_eq!(parse_cutstack(&text).unwrap(), spec);
        assert!(parse_cutstack("stage 1 cuts 2 spacers 1\n").is_err());
    }
}
