//! Script lexer and parser.
//!
//! A script is a sequence of calls, one per line. Arguments are literals:
//! numbers, quoted strings, `true`/`false`, `[lists]` and `{key: value}`
//! maps. A call may span several lines while a bracket is open. `#` starts a
//! comment outside strings.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::DslError;
use crate::space::Direction;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Literal {
    Number(f64),
    Str(String),
    Bool(bool),
    List(Vec<Literal>),
    Map(BTreeMap<String, Literal>),
}

impl Literal {
    pub fn type_name(&self) -> &'static str {
        match self {
            Literal::Number(_) => "number",
            Literal::Str(_) => "string",
            Literal::Bool(_) => "boolean",
            Literal::List(_) => "list",
            Literal::Map(_) => "map",
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(x) => write!(f, "{x}"),
            Literal::Str(s) => write!(f, "'{s}'"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::List(items) => {
                write!(f, "[")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
            Literal::Map(m) => {
                write!(f, "{{")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "'{k}': {v}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    OpenDb(Vec<String>),
    Constraint(String),
    Metric(String),
    SelectBest { metric: String, direction: Direction },
    RankAndTrim { metric: String, fraction: f64 },
    Delete,
    UpdateMetrics,
    SetOption { key: String, value: Literal },
    Performance { target: Option<f64> },
    Network { topology: String },
    Ups { backup_min: Option<f64> },
    AddGroup(String),
    Place { params: BTreeMap<String, Literal> },
    Cables { file: Option<String> },
    PrintDesign { file: Option<String> },
    DrawRows { rows: Vec<usize>, file: String },
}

/// Every command name the interpreter accepts.
pub const VOCABULARY: [&str; 16] = [
    "open_db",
    "constraint",
    "metric",
    "select_best",
    "rank_and_trim",
    "delete",
    "update_metrics",
    "set_option",
    "performance",
    "network",
    "ups",
    "add_group",
    "place",
    "cables",
    "print_design",
    "draw_rows",
];

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::OpenDb(_) => "open_db",
            Command::Constraint(_) => "constraint",
            Command::Metric(_) => "metric",
            Command::SelectBest { .. } => "select_best",
            Command::RankAndTrim { .. } => "rank_and_trim",
            Command::Delete => "delete",
            Command::UpdateMetrics => "update_metrics",
            Command::SetOption { .. } => "set_option",
            Command::Performance { .. } => "performance",
            Command::Network { .. } => "network",
            Command::Ups { .. } => "ups",
            Command::AddGroup(_) => "add_group",
            Command::Place { .. } => "place",
            Command::Cables { .. } => "cables",
            Command::PrintDesign { .. } => "print_design",
            Command::DrawRows { .. } => "draw_rows",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub line: usize,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Script {
    pub statements: Vec<Statement>,
}

impl Script {
    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Open(char),
    Close(char),
    Comma,
    Colon,
    Eq,
    Newline,
}

fn syntax(line: usize, msg: impl Into<String>) -> DslError {
    DslError::Parse {
        line,
        msg: msg.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut line = 1;
    let mut depth = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                if depth == 0 {
                    out.push((Tok::Newline, line));
                }
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' | '[' | '{' => {
                depth += 1;
                out.push((Tok::Open(c), line));
                i += 1;
            }
            ')' | ']' | '}' => {
                depth = depth.saturating_sub(1);
                out.push((Tok::Close(c), line));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, line));
                i += 1;
            }
            ':' => {
                out.push((Tok::Colon, line));
                i += 1;
            }
            '=' => {
                out.push((Tok::Eq, line));
                i += 1;
            }
            '\'' | '"' => {
                let start_line = line;
                let mut j = i + 1;
                while j < chars.len() && chars[j] != c {
                    if chars[j] == '\n' {
                        line += 1;
                    }
                    j += 1;
                }
                if j == chars.len() {
                    return Err(syntax(start_line, "unterminated string"));
                }
                out.push((Tok::Str(chars[i + 1..j].iter().collect()), start_line));
                i = j + 1;
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut j = i + 1;
                while j < chars.len()
                    && (chars[j].is_ascii_alphanumeric()
                        || chars[j] == '.'
                        || chars[j] == '_'
                        || ((chars[j] == '-' || chars[j] == '+')
                            && matches!(chars[j - 1], 'e' | 'E')))
                {
                    j += 1;
                }
                let text: String = chars[i..j].iter().filter(|&&c| c != '_').collect();
                let x: f64 = text
                    .parse()
                    .ok()
                    .filter(|x: &f64| x.is_finite())
                    .ok_or_else(|| syntax(line, format!("malformed number {text:?}")))?;
                out.push((Tok::Number(x), line));
                i = j;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                out.push((Tok::Ident(chars[i..j].iter().collect()), line));
                i = j;
            }
            other => return Err(syntax(line, format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    last_line: usize,
}

enum Arg {
    Positional(Literal),
    Keyword(String, Literal),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map_or(self.last_line, |t| t.1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t.map(|t| t.0)
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), DslError> {
        let line = self.line();
        match self.next() {
            Some(t) if &t == want => Ok(()),
            Some(t) => Err(syntax(line, format!("expected {what}, found {}", describe(&t)))),
            None => Err(syntax(line, format!("expected {what}, found end of script"))),
        }
    }

    fn literal(&mut self) -> Result<Literal, DslError> {
        let line = self.line();
        match self.next() {
            Some(Tok::Number(x)) => Ok(Literal::Number(x)),
            Some(Tok::Str(s)) => Ok(Literal::Str(s)),
            Some(Tok::Ident(id)) if id == "true" || id == "True" => Ok(Literal::Bool(true)),
            Some(Tok::Ident(id)) if id == "false" || id == "False" => Ok(Literal::Bool(false)),
            Some(Tok::Open('[')) => {
                let mut items = Vec::new();
                loop {
                    if self.peek() == Some(&Tok::Close(']')) {
                        self.next();
                        return Ok(Literal::List(items));
                    }
                    items.push(self.literal()?);
                    match self.next() {
                        Some(Tok::Comma) => {}
                        Some(Tok::Close(']')) => return Ok(Literal::List(items)),
                        _ => return Err(syntax(line, "malformed list literal")),
                    }
                }
            }
            Some(Tok::Open('{')) => {
                let mut map = BTreeMap::new();
                loop {
                    let key = match self.next() {
                        Some(Tok::Close('}')) => return Ok(Literal::Map(map)),
                        Some(Tok::Str(k)) | Some(Tok::Ident(k)) => k,
                        _ => return Err(syntax(line, "malformed map literal: expected a key")),
                    };
                    self.expect(&Tok::Colon, "':' after map key")?;
                    let value = self.literal()?;
                    if map.insert(key.clone(), value).is_some() {
                        return Err(syntax(line, format!("duplicate map key {key:?}")));
                    }
                    match self.next() {
                        Some(Tok::Comma) => {}
                        Some(Tok::Close('}')) => return Ok(Literal::Map(map)),
                        _ => return Err(syntax(line, "malformed map literal")),
                    }
                }
            }
            Some(t) => Err(syntax(line, format!("expected a literal, found {}", describe(&t)))),
            None => Err(syntax(line, "expected a literal, found end of script")),
        }
    }

    fn args(&mut self) -> Result<Vec<Arg>, DslError> {
        self.expect(&Tok::Open('('), "'('")?;
        let mut args = Vec::new();
        loop {
            if self.peek() == Some(&Tok::Close(')')) {
                self.next();
                return Ok(args);
            }
            let keyword = match (self.peek(), self.toks.get(self.pos + 1).map(|t| &t.0)) {
                (Some(Tok::Ident(name)), Some(Tok::Eq)) => Some(name.clone()),
                _ => None,
            };
            if let Some(name) = keyword {
                self.pos += 2;
                args.push(Arg::Keyword(name, self.literal()?));
            } else {
                args.push(Arg::Positional(self.literal()?));
            }
            let line = self.line();
            match self.next() {
                Some(Tok::Comma) => {}
                Some(Tok::Close(')')) => return Ok(args),
                Some(t) => return Err(syntax(line, format!("expected ',' or ')', found {}", describe(&t)))),
                None => return Err(syntax(line, "unclosed argument list")),
            }
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier {s:?}"),
        Tok::Number(x) => format!("number {x}"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Open(c) | Tok::Close(c) => format!("'{c}'"),
        Tok::Comma => "','".into(),
        Tok::Colon => "':'".into(),
        Tok::Eq => "'='".into(),
        Tok::Newline => "end of line".into(),
    }
}

/// Binds arguments to parameter slots by position, then by keyword.
fn bind(line: usize, cmd: &str, args: Vec<Arg>, params: &[&str]) -> Result<Vec<Option<Literal>>, DslError> {
    let mut slots: Vec<Option<Literal>> = vec![None; params.len()];
    let mut next = 0;
    for arg in args {
        let (i, value) = match arg {
            Arg::Positional(v) => {
                if next >= params.len() {
                    return Err(syntax(
                        line,
                        format!("{cmd}() takes at most {} argument(s)", params.len()),
                    ));
                }
                next += 1;
                (next - 1, v)
            }
            Arg::Keyword(name, v) => {
                let i = params
                    .iter()
                    .position(|p| *p == name)
                    .ok_or_else(|| syntax(line, format!("{cmd}() has no parameter {name:?}")))?;
                (i, v)
            }
        };
        if slots[i].replace(value).is_some() {
            return Err(syntax(line, format!("{cmd}(): {} given twice", params[i])));
        }
    }
    Ok(slots)
}

struct Args<'a> {
    line: usize,
    cmd: &'a str,
    params: &'a [&'a str],
    slots: Vec<Option<Literal>>,
}

impl Args<'_> {
    fn err(&self, i: usize, want: &str, got: &Literal) -> DslError {
        syntax(
            self.line,
            format!("{}(): {} must be a {want}, found {}", self.cmd, self.params[i], got.type_name()),
        )
    }

    fn take(&mut self, i: usize) -> Option<Literal> {
        self.slots[i].take()
    }

    fn required(&mut self, i: usize) -> Result<Literal, DslError> {
        self.take(i).ok_or_else(|| {
            syntax(self.line, format!("{}(): missing argument {}", self.cmd, self.params[i]))
        })
    }

    fn opt_str(&mut self, i: usize) -> Result<Option<String>, DslError> {
        match self.take(i) {
            None => Ok(None),
            Some(Literal::Str(s)) => Ok(Some(s)),
            Some(other) => Err(self.err(i, "string", &other)),
        }
    }

    fn str(&mut self, i: usize) -> Result<String, DslError> {
        match self.required(i)? {
            Literal::Str(s) => Ok(s),
            other => Err(self.err(i, "string", &other)),
        }
    }

    fn opt_num(&mut self, i: usize) -> Result<Option<f64>, DslError> {
        match self.take(i) {
            None => Ok(None),
            Some(Literal::Number(x)) => Ok(Some(x)),
            Some(other) => Err(self.err(i, "number", &other)),
        }
    }

    fn list(&mut self, i: usize) -> Result<Vec<Literal>, DslError> {
        match self.required(i)? {
            Literal::List(items) => Ok(items),
            other => Err(self.err(i, "list", &other)),
        }
    }
}

fn command(name: &str, line: usize, raw: Vec<Arg>) -> Result<Command, DslError> {
    let params: &[&str] = match name {
        "open_db" => &["files"],
        "constraint" => &["formula"],
        "metric" => &["formula"],
        "select_best" => &["metric", "direction"],
        "rank_and_trim" => &["metric", "fraction"],
        "delete" | "update_metrics" => &[],
        "set_option" => &["key", "value"],
        "performance" => &["target"],
        "network" => &["topology"],
        "ups" => &["backup_min"],
        "add_group" => &["name"],
        "place" => &["place_params"],
        "cables" => &["file"],
        "print_design" => &["file"],
        "draw_rows" => &["rows", "file"],
        _ => return Err(syntax(line, format!("unknown command {name:?}"))),
    };
    let slots = bind(line, name, raw, params)?;
    let mut a = Args {
        line,
        cmd: name,
        params,
        slots,
    };
    let cmd = match name {
        "open_db" => {
            let files = a
                .list(0)?
                .into_iter()
                .map(|f| match f {
                    Literal::Str(s) => Ok(s),
                    other => Err(a.err(0, "list of strings", &other)),
                })
                .collect::<Result<_, _>>()?;
            Command::OpenDb(files)
        }
        "constraint" => Command::Constraint(a.str(0)?),
        "metric" => Command::Metric(a.str(0)?),
        "select_best" => {
            let metric = a.str(0)?;
            let direction = match a.opt_str(1)?.as_deref() {
                None | Some("min") => Direction::Min,
                Some("max") => Direction::Max,
                Some(other) => {
                    return Err(syntax(line, format!("select_best(): direction {other:?} is not 'min' or 'max'")))
                }
            };
            Command::SelectBest { metric, direction }
        }
        "rank_and_trim" => {
            let metric = a.str(0)?;
            let fraction = a
                .opt_num(1)?
                .ok_or_else(|| syntax(line, "rank_and_trim(): missing argument fraction"))?;
            Command::RankAndTrim { metric, fraction }
        }
        "delete" => Command::Delete,
        "update_metrics" => Command::UpdateMetrics,
        "set_option" => Command::SetOption {
            key: a.str(0)?,
            value: a.required(1)?,
        },
        "performance" => Command::Performance { target: a.opt_num(0)? },
        "network" => {
            let topology = a.opt_str(0)?.unwrap_or_else(|| "fat-tree".to_string());
            if topology != "fat-tree" {
                return Err(syntax(line, format!("network(): unsupported topology {topology:?}")));
            }
            Command::Network { topology }
        }
        "ups" => Command::Ups {
            backup_min: a.opt_num(0)?,
        },
        "add_group" => Command::AddGroup(a.str(0)?),
        "place" => {
            let params = match a.take(0) {
                None => BTreeMap::new(),
                Some(Literal::Map(m)) => m,
                Some(other) => return Err(a.err(0, "map", &other)),
            };
            Command::Place { params }
        }
        "cables" => Command::Cables { file: a.opt_str(0)? },
        "print_design" => Command::PrintDesign { file: a.opt_str(0)? },
        "draw_rows" => {
            let rows = a
                .list(0)?
                .into_iter()
                .map(|r| match r {
                    Literal::Number(x) if x >= 0.0 && x.fract() == 0.0 => Ok(x as usize),
                    other => Err(syntax(
                        line,
                        format!("draw_rows(): row index must be a whole number, found {other}"),
                    )),
                })
                .collect::<Result<_, _>>()?;
            Command::DrawRows { rows, file: a.str(1)? }
        }
        _ => unreachable!("vocabulary checked above"),
    };
    Ok(cmd)
}

pub fn parse_script(src: &str) -> Result<Script, DslError> {
    let toks = lex(src)?;
    let last_line = src.lines().count().max(1);
    let mut p = Parser {
        toks,
        pos: 0,
        last_line,
    };
    let mut statements = Vec::new();
    while let Some(t) = p.peek().cloned() {
        let line = p.line();
        match t {
            Tok::Newline => {
                p.next();
            }
            Tok::Ident(name) => {
                p.next();
                if !VOCABULARY.contains(&name.as_str()) {
                    return Err(syntax(line, format!("unknown command {name:?}")));
                }
                let args = p.args()?;
                let command = command(&name, line, args)?;
                match p.next() {
                    None | Some(Tok::Newline) => {}
                    Some(t) => {
                        return Err(syntax(
                            line,
                            format!("expected end of line after {name}(), found {}", describe(&t)),
                        ))
                    }
                }
                statements.push(Statement { line, command });
            }
            other => return Err(syntax(line, format!("expected a command, found {}", describe(&other)))),
        }
    }
    Ok(Script { statements })
}

/// Parses a single literal, as given to `--option key=value`.
pub fn parse_literal(src: &str) -> Result<Literal, DslError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        last_line: 1,
    };
    let lit = p.literal()?;
    if p.peek().is_some() {
        return Err(syntax(1, format!("trailing input after literal in {src:?}")));
    }
    Ok(lit)
}
