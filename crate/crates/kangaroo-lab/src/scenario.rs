//! Line-oriented scenario and search-space files: `[section]` headers with
//! `key = value` entries, `#` comments, polynomials in the text grammar.

use crate::blowup::BlowupChart;
use crate::contact::Divisor;
use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::ideal::Ideal;
use crate::poly::{parse_poly, parse_scalar_expr, Poly};
use std::collections::BTreeSet;
use std::sync::Arc;

pub const DEFAULT_PRECISION: u32 = 64;

#[derive(Clone, Debug)]
pub struct Scenario {
    pub field: Arc<Field>,
    pub n: usize,
    pub precision: u32,
    pub generators: Vec<Poly>,
    pub divisor: Divisor,
    pub chart: Option<BlowupChart>,
}

impl Scenario {
    pub fn ideal(&self) -> Result<Ideal> {
        Ideal::new(self.generators.clone())
    }

    pub fn chart(&self) -> Result<&BlowupChart> {
        self.chart
            .as_ref()
            .ok_or_else(|| Error::Parse {
                line: 0,
                msg: "scenario has no [chart] section".into(),
            })
    }
}

/// Exhaustive space of weighted homogeneous candidates z^c + F under a
/// fixed chart, with F running over the non-p^e-th-power homogeneous
/// polynomials of the listed degrees.
#[derive(Clone, Debug)]
pub struct SearchSpace {
    pub field: Arc<Field>,
    pub n: usize,
    pub c: u32,
    pub degrees: Vec<u32>,
    pub chart: BlowupChart,
    /// Degree bound for the brute-force comparison polynomials H.
    pub h_degree: u32,
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?;
            sections.push(Section {
                name: name.trim().to_string(),
                line,
                entries: vec![],
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, "expected `key = value`"))?;
        let section = sections
            .last_mut()
            .ok_or_else(|| err(line, "entry before any [section] header"))?;
        section.entries.push(Entry {
            line,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(sections)
}

fn parse_usize(e: &Entry) -> Result<usize> {
    e.value
        .parse()
        .map_err(|_| err(e.line, format!("bad integer `{}`", e.value)))
}

fn parse_u32(e: &Entry) -> Result<u32> {
    e.value
        .parse()
        .map_err(|_| err(e.line, format!("bad integer `{}`", e.value)))
}

fn parse_list_u32(e: &Entry) -> Result<Vec<u32>> {
    e.value
        .split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| err(e.line, format!("bad integer `{}`", part.trim())))
        })
        .collect()
}

fn parse_index_set(e: &Entry, n: usize) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    for part in e.value.split(',') {
        let i: usize = part
            .trim()
            .parse()
            .map_err(|_| err(e.line, format!("bad index `{}`", part.trim())))?;
        if i < 1 || i > n {
            return Err(err(e.line, format!("index {i} outside 1..{n}")));
        }
        out.insert(i);
    }
    Ok(out)
}

struct FieldBuilder {
    p: Option<u64>,
    k: u32,
    modulus: Option<Vec<u64>>,
    line: usize,
}

impl FieldBuilder {
    fn build(self) -> Result<Arc<Field>> {
        let p = self.p.ok_or_else(|| err(self.line, "missing p"))?;
        Field::extension(p, self.k, self.modulus).map_err(|e| match e {
            Error::InvalidField(msg) => err(self.line, msg),
            other => other,
        })
    }
}

fn parse_field_section(section: &Section) -> Result<FieldBuilder> {
    let mut fb = FieldBuilder {
        p: None,
        k: 1,
        modulus: None,
        line: section.line,
    };
    for e in &section.entries {
        match e.key.as_str() {
            "p" => {
                fb.p = Some(
                    e.value
                        .parse()
                        .map_err(|_| err(e.line, format!("bad prime `{}`", e.value)))?,
                )
            }
            "k" => fb.k = parse_u32(e)?,
            "modulus" => {
                fb.modulus = Some(
                    e.value
                        .split(',')
                        .map(|part| {
                            part.trim().parse().map_err(|_| {
                                err(e.line, format!("bad coefficient `{}`", part.trim()))
                            })
                        })
                        .collect::<Result<Vec<u64>>>()?,
                )
            }
            other => return Err(err(e.line, format!("unknown field key `{other}`"))),
        }
    }
    Ok(fb)
}

struct ChartBuilder {
    s: BTreeSet<usize>,
    t: BTreeSet<usize>,
    trans: Vec<(usize, Scalar, usize)>,
    line: usize,
}

fn parse_chart_section(
    section: &Section,
    field: &Arc<Field>,
    n: usize,
) -> Result<ChartBuilder> {
    let mut cb = ChartBuilder {
        s: BTreeSet::new(),
        t: BTreeSet::new(),
        trans: vec![],
        line: section.line,
    };
    for e in &section.entries {
        match e.key.as_str() {
            "S" => cb.s = parse_index_set(e, n)?,
            "T" => cb.t = parse_index_set(e, n)?,
            key if key.starts_with('t') => {
                let i: usize = key[1..]
                    .parse()
                    .map_err(|_| err(e.line, format!("unknown chart key `{key}`")))?;
                let val = parse_scalar_expr(field, &e.value)
                    .map_err(|_| err(e.line, format!("malformed coefficient `{}`", e.value)))?;
                cb.trans.push((i, val, e.line));
            }
            other => return Err(err(e.line, format!("unknown chart key `{other}`"))),
        }
    }
    Ok(cb)
}

fn build_chart(cb: ChartBuilder) -> Result<BlowupChart> {
    if !cb.s.contains(&1) {
        return Err(err(cb.line, "S must contain 1"));
    }
    if !cb.t.contains(&1) {
        return Err(err(cb.line, "T must contain 1"));
    }
    if !cb.t.is_subset(&cb.s) {
        return Err(err(cb.line, "T must be a subset of S"));
    }
    let mut t_map = Vec::new();
    for (i, val, line) in &cb.trans {
        if !cb.t.contains(i) {
            return Err(err(*line, format!("t{i} given but {i} is not in T")));
        }
        if *val == 0 {
            return Err(err(*line, "translation constant must be nonzero"));
        }
        t_map.push((*i, *val));
    }
    for &i in &cb.t {
        if i != 1 && !t_map.iter().any(|(j, _)| *j == i) {
            return Err(err(cb.line, format!("missing translation t{i}")));
        }
    }
    BlowupChart::new(cb.s.iter().copied(), t_map).map_err(|e| match e {
        Error::Internal(msg) => err(cb.line, msg),
        other => other,
    })
}

/// Parse a scenario file. `precision_override` replaces the file's (or
/// default) jet precision when given.
pub fn parse_scenario(text: &str, precision_override: Option<u32>) -> Result<Scenario> {
    let sections = split_sections(text)?;
    let mut field: Option<Arc<Field>> = None;
    let mut n: Option<usize> = None;
    let mut precision = DEFAULT_PRECISION;
    let mut gen_entries: Vec<(usize, String)> = vec![];
    let mut divisor: Option<(usize, Vec<u32>)> = None;
    let mut chart_section: Option<usize> = None;

    for (si, section) in sections.iter().enumerate() {
        match section.name.as_str() {
            "field" => field = Some(parse_field_section(section)?.build()?),
            "ring" => {
                for e in &section.entries {
                    match e.key.as_str() {
                        "n" => n = Some(parse_usize(e)?),
                        "precision" => precision = parse_u32(e)?,
                        other => return Err(err(e.line, format!("unknown ring key `{other}`"))),
                    }
                }
            }
            "ideal" => {
                for e in &section.entries {
                    match e.key.as_str() {
                        "gen" => gen_entries.push((e.line, e.value.clone())),
                        other => return Err(err(e.line, format!("unknown ideal key `{other}`"))),
                    }
                }
            }
            "divisor" => {
                for e in &section.entries {
                    match e.key.as_str() {
                        "s" => divisor = Some((e.line, parse_list_u32(e)?)),
                        other => {
                            return Err(err(e.line, format!("unknown divisor key `{other}`")))
                        }
                    }
                }
            }
            "chart" => chart_section = Some(si),
            other => return Err(err(section.line, format!("unknown section `[{other}]`"))),
        }
    }

    let field = field.ok_or_else(|| err(0, "missing [field] section"))?;
    let n = n.ok_or_else(|| err(0, "missing [ring] section with n"))?;
    let precision = precision_override.unwrap_or(precision);
    if precision == 0 {
        return Err(err(0, "precision must be positive"));
    }
    if gen_entries.is_empty() {
        return Err(err(0, "empty generator list"));
    }
    let generators = gen_entries
        .iter()
        .map(|(line, src)| {
            parse_poly(&field, n, precision, src).map_err(|e| match e {
                Error::Parse { msg, .. } => err(*line, msg),
                other => other,
            })
        })
        .collect::<Result<Vec<Poly>>>()?;
    if generators.iter().all(|g| g.is_zero()) {
        return Err(err(0, "all generators are zero"));
    }
    let divisor = match divisor {
        Some((line, s)) => {
            if s.len() != n {
                return Err(err(line, format!("divisor needs {n} entries")));
            }
            Divisor::new(s)
        }
        None => Divisor::new(vec![0; n]),
    };
    let chart = match chart_section {
        Some(si) => Some(build_chart(parse_chart_section(&sections[si], &field, n)?)?),
        None => None,
    };
    Ok(Scenario {
        field,
        n,
        precision,
        generators,
        divisor,
        chart,
    })
}

/// Parse a search-space file: a single `[search]` section plus an optional
/// `[chart]` section (defaults to S = T = {1..n} with all t_i = 1).
pub fn parse_search_space(text: &str) -> Result<SearchSpace> {
    let sections = split_sections(text)?;
    let mut fb: Option<FieldBuilder> = None;
    let mut n: Option<usize> = None;
    let mut c: Option<u32> = None;
    let mut degrees: Vec<u32> = vec![];
    let mut h_degree = 2u32;
    let mut chart_section: Option<usize> = None;

    for (si, section) in sections.iter().enumerate() {
        match section.name.as_str() {
            "search" => {
                let mut field_part = FieldBuilder {
                    p: None,
                    k: 1,
                    modulus: None,
                    line: section.line,
                };
                for e in &section.entries {
                    match e.key.as_str() {
                        "p" => {
                            field_part.p = Some(e.value.parse().map_err(|_| {
                                err(e.line, format!("bad prime `{}`", e.value))
                            })?)
                        }
                        "k" => field_part.k = parse_u32(e)?,
                        "n" => n = Some(parse_usize(e)?),
                        "c" => c = Some(parse_u32(e)?),
                        "degrees" => degrees = parse_list_u32(e)?,
                        "h_degree" => h_degree = parse_u32(e)?,
                        other => {
                            return Err(err(e.line, format!("unknown search key `{other}`")))
                        }
                    }
                }
                fb = Some(field_part);
            }
            "chart" => chart_section = Some(si),
            other => return Err(err(section.line, format!("unknown section `[{other}]`"))),
        }
    }

    let fb = fb.ok_or_else(|| err(0, "missing [search] section"))?;
    let field = fb.build()?;
    let n = n.ok_or_else(|| err(0, "missing n"))?;
    let c = c.ok_or_else(|| err(0, "missing c"))?;
    if c < 1 {
        return Err(err(0, "c must be positive"));
    }
    if degrees.is_empty() {
        return Err(err(0, "missing degrees"));
    }
    let chart = match chart_section {
        Some(si) => build_chart(parse_chart_section(&sections[si], &field, n)?)?,
        None => {
            let one = field.embed_int(1);
            BlowupChart::new(1..=n, (2..=n).map(|i| (i, one)))?
        }
    };
    Ok(SearchSpace {
        field,
        n,
        c,
        degrees,
        chart,
        h_degree,
    })
}

/// The reference scenario used throughout the test suite: an order-two
/// hypersurface in two variables whose residual order rises from 2 to 3
/// in the translated chart.
pub const WORKED: &str = "\
# worked example
[field]
p = 2

[ring]
n = 2

[ideal]
gen = z^2 + x1^3*x2 + x1*x2^3

[divisor]
s = 1, 1

[chart]
S = 1, 2
T = 1, 2
t2 = 1
";
