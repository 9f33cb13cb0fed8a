use indexmap::IndexSet;
use thiserror::Error;

use super::fluent::FluentDef;
use super::formula::Formula;
use crate::model::EventLabel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropsError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{line}:{column}: duplicate name {name}")]
    DuplicateName { name: String, line: usize, column: usize },
}

/// A named property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub name: String,
    pub formula: Formula,
}

/// Contents of a property file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Props {
    pub fluents: Vec<FluentDef>,
    pub assertions: Vec<Assertion>,
}

impl Props {
    pub fn fluent(&self, name: &str) -> Option<&FluentDef> {
        self.fluents.iter().find(|f| f.name == name)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Param(String),
    Not,
    And,
    Or,
    Implies,
    Iff,
    Eventually,
    Always,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Eq,
    Lt,
    Gt,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("'{n}'"),
            Tok::Param(n) => format!("'${n}'"),
            Tok::Not => "'!'".into(),
            Tok::And => "'&&'".into(),
            Tok::Or => "'||'".into(),
            Tok::Implies => "'->'".into(),
            Tok::Iff => "'<->'".into(),
            Tok::Eventually => "'<>'".into(),
            Tok::Always => "'[]'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Comma => "','".into(),
            Tok::Eq => "'='".into(),
            Tok::Lt => "'<'".into(),
            Tok::Gt => "'>'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

const KEYWORDS: &[&str] = &["X", "U", "W", "R", "true", "false", "fluent", "assert", "initially"];

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn lex(src: &str) -> Result<Vec<Spanned>, PropsError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let peek = |k: usize| chars.get(i + k).copied();
        let (start_line, start_col) = (line, col);
        let err = |message: String| PropsError::Syntax { line: start_line, column: start_col, message };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && peek(1) == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tok, len) = match c {
            '!' => (Tok::Not, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            ',' => (Tok::Comma, 1),
            '=' => (Tok::Eq, 1),
            '>' => (Tok::Gt, 1),
            '&' if peek(1) == Some('&') => (Tok::And, 2),
            '|' if peek(1) == Some('|') => (Tok::Or, 2),
            '-' if peek(1) == Some('>') => (Tok::Implies, 2),
            '[' if peek(1) == Some(']') => (Tok::Always, 2),
            '<' if peek(1) == Some('>') => (Tok::Eventually, 2),
            '<' if peek(1) == Some('-') && peek(2) == Some('>') => (Tok::Iff, 3),
            '<' => (Tok::Lt, 1),
            '$' => {
                let mut j = i + 1;
                while j < chars.len() && is_name_char(chars[j]) {
                    j += 1;
                }
                if j == i + 1 {
                    return Err(err("expected placeholder name after '$'".into()));
                }
                (Tok::Param(chars[i + 1..j].iter().collect()), j - i)
            }
            c if is_name_char(c) => {
                let mut j = i;
                while j < chars.len()
                    && (is_name_char(chars[j]) || (chars[j] == '-' && chars.get(j + 1) != Some(&'>')))
                {
                    j += 1;
                }
                (Tok::Name(chars[i..j].iter().collect()), j - i)
            }
            other => return Err(err(format!("unexpected character {other:?}"))),
        };
        out.push(Spanned { tok, line: start_line, column: start_col });
        i += len;
        col += len;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    allow_params: bool,
    end: (usize, usize),
}

impl Parser {
    fn new(src: &str, allow_params: bool) -> Result<Self, PropsError> {
        let toks = lex(src)?;
        let lines = src.split('\n').count();
        let last_col = src.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Ok(Parser { toks, pos: 0, allow_params, end: (lines, last_col) })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |s| (s.line, s.column))
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, PropsError> {
        let (line, column) = self.here();
        Err(PropsError::Syntax { line, column, message: message.into() })
    }

    fn unexpected<T>(&self, expected: &str) -> Result<T, PropsError> {
        match self.peek() {
            Some(t) => self.error(format!("expected {expected}, found {}", t.describe())),
            None => self.error(format!("expected {expected}, found end of input")),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), PropsError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Name(n)) if n == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// A declaration name: plain identifier, not a keyword, no path separator.
    fn decl_name(&mut self) -> Result<String, PropsError> {
        match self.peek() {
            Some(Tok::Name(n)) if !KEYWORDS.contains(&n.as_str()) && !n.contains('.') && !n.contains('-') => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => self.unexpected("a name"),
        }
    }

    fn label(&mut self) -> Result<EventLabel, PropsError> {
        match self.peek() {
            Some(Tok::Name(n)) if !KEYWORDS.contains(&n.as_str()) => {
                let l = EventLabel::from(n.as_str());
                self.pos += 1;
                Ok(l)
            }
            _ => self.unexpected("an event label"),
        }
    }

    fn event_set(&mut self) -> Result<IndexSet<EventLabel>, PropsError> {
        self.expect(Tok::LBrace)?;
        let mut set = IndexSet::new();
        if self.eat(&Tok::RBrace) {
            return Ok(set);
        }
        loop {
            set.insert(self.label()?);
            if self.eat(&Tok::RBrace) {
                return Ok(set);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn formula(&mut self) -> Result<Formula, PropsError> {
        let mut lhs = self.implication()?;
        while self.eat(&Tok::Iff) {
            lhs = Formula::iff(lhs, self.implication()?);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, PropsError> {
        let lhs = self.temporal()?;
        if self.eat(&Tok::Implies) {
            Ok(Formula::implies(lhs, self.implication()?))
        } else {
            Ok(lhs)
        }
    }

    fn temporal(&mut self) -> Result<Formula, PropsError> {
        let lhs = self.disjunction()?;
        if self.eat_keyword("U") {
            Ok(Formula::until(lhs, self.temporal()?))
        } else if self.eat_keyword("W") {
            Ok(Formula::weak_until(lhs, self.temporal()?))
        } else if self.eat_keyword("R") {
            Ok(Formula::release(lhs, self.temporal()?))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<Formula, PropsError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Tok::Or) {
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, PropsError> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::And) {
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, PropsError> {
        if self.eat(&Tok::Not) {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat(&Tok::Eventually) {
            return Ok(Formula::eventually(self.unary()?));
        }
        if self.eat(&Tok::Always) {
            return Ok(Formula::always(self.unary()?));
        }
        if self.eat_keyword("X") {
            return Ok(Formula::next(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, PropsError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(Tok::Name(n)) if n == "true" => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some(Tok::Name(n)) if n == "false" => {
                self.pos += 1;
                Ok(Formula::False)
            }
            Some(Tok::Name(n)) if !KEYWORDS.contains(&n.as_str()) => {
                self.pos += 1;
                Ok(Formula::atom(&n))
            }
            Some(Tok::Param(n)) if self.allow_params => {
                self.pos += 1;
                Ok(Formula::Param(n))
            }
            Some(Tok::Param(_)) => self.error("placeholders are only allowed in template skeletons"),
            _ => self.unexpected("a formula"),
        }
    }

    fn props(&mut self) -> Result<Props, PropsError> {
        let mut props = Props::default();
        let mut names: IndexSet<String> = IndexSet::new();
        while self.peek().is_some() {
            let (line, column) = self.here();
            if self.eat_keyword("fluent") {
                let name = self.decl_name()?;
                self.expect(Tok::Eq)?;
                self.expect(Tok::Lt)?;
                let initiating = self.event_set()?;
                self.expect(Tok::Comma)?;
                let terminating = self.event_set()?;
                self.expect(Tok::Gt)?;
                let mut initially = false;
                if self.eat_keyword("initially") {
                    initially = match self.peek() {
                        Some(Tok::Name(v)) if v == "true" || v == "1" => true,
                        Some(Tok::Name(v)) if v == "false" || v == "0" => false,
                        _ => return self.unexpected("'true' or 'false'"),
                    };
                    self.pos += 1;
                }
                if !names.insert(name.clone()) {
                    return Err(PropsError::DuplicateName { name, line, column });
                }
                props.fluents.push(FluentDef { name, initiating, terminating, initially });
            } else if self.eat_keyword("assert") {
                let name = self.decl_name()?;
                self.expect(Tok::Eq)?;
                let formula = self.formula()?;
                if !names.insert(name.clone()) {
                    return Err(PropsError::DuplicateName { name, line, column });
                }
                props.assertions.push(Assertion { name, formula });
            } else {
                return self.unexpected("'fluent' or 'assert'");
            }
        }
        Ok(props)
    }
}

/// Parses a property file: fluent declarations, assertions and `//` comments.
pub fn parse_props(src: &str) -> Result<Props, PropsError> {
    Parser::new(src, false)?.props()
}

/// Parses a single closed formula.
pub fn parse_formula(src: &str) -> Result<Formula, PropsError> {
    let mut p = Parser::new(src, false)?;
    let f = p.formula()?;
    match p.peek() {
        None => Ok(f),
        Some(_) => p.unexpected("end of formula"),
    }
}

/// Parses a template skeleton, where `$name` placeholders are allowed.
pub fn parse_skeleton(src: &str) -> Result<Formula, PropsError> {
    let mut p = Parser::new(src, true)?;
    let f = p.formula()?;
    match p.peek() {
        None => Ok(f),
        Some(_) => p.unexpected("end of formula"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str) -> Formula {
        Formula::Event(EventLabel::from(s))
    }

    fn fl(s: &str) -> Formula {
        Formula::Fluent(s.into())
    }

    #[test]
    fn somebook_file() {
        let src = "// trip properties\n\
                   fluent SomeBook = <{flight.start,hotel.start,car.start},{pay.end}> initially false\n\
                   assert Resp = [](SomeBook -> <>pay.start)\n";
        let props = parse_props(src).unwrap();
        assert_eq!(props.fluents.len(), 1);
        let sb = &props.fluents[0];
        assert_eq!(sb.name, "SomeBook");
        let init: Vec<&str> = sb.initiating.iter().map(EventLabel::as_str).collect();
        assert_eq!(init, ["flight.start", "hotel.start", "car.start"]);
        assert!(!sb.initially);
        assert_eq!(props.assertions.len(), 1);
        assert_eq!(
            props.assertions[0].formula,
            Formula::always(Formula::implies(fl("SomeBook"), Formula::eventually(ev("pay.start"))))
        );
    }

    #[test]
    fn nesting_and_associativity() {
        let p = parse_props("assert T = []<>x.start").unwrap();
        assert_eq!(p.assertions[0].formula, Formula::always(Formula::eventually(ev("x.start"))));
        assert_eq!(
            parse_formula("a -> b -> c").unwrap(),
            Formula::implies(fl("a"), Formula::implies(fl("b"), fl("c")))
        );
    }

    #[test]
    fn precedence_levels() {
        // unary > && > || > U > -> > <->
        assert_eq!(
            parse_formula("!a && b || c U d -> e <-> f").unwrap(),
            Formula::iff(
                Formula::implies(
                    Formula::until(
                        Formula::or(Formula::and(Formula::not(fl("a")), fl("b")), fl("c")),
                        fl("d")
                    ),
                    fl("e")
                ),
                fl("f")
            )
        );
        assert_eq!(
            parse_formula("X a.start W b R c").unwrap(),
            Formula::weak_until(Formula::next(ev("a.start")), Formula::release(fl("b"), fl("c")))
        );
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_props("fluent F = <{a.start},{b.end}>\nassert A = [](F -> )").unwrap_err();
        assert_eq!(
            err,
            PropsError::Syntax { line: 2, column: 20, message: "expected a formula, found ')'".into() }
        );
    }

    #[test]
    fn duplicate_names() {
        let err = parse_props("assert A = true\nassert A = false").unwrap_err();
        assert!(matches!(err, PropsError::DuplicateName { ref name, line: 2, .. } if name == "A"));
    }

    #[test]
    fn empty_terminating_set_and_initially() {
        let p = parse_props("fluent On = <{a.start},{}> initially true").unwrap();
        assert!(p.fluents[0].terminating.is_empty());
        assert!(p.fluents[0].initially);
    }

    #[test]
    fn placeholders_only_in_skeletons() {
        assert!(parse_formula("[]($A -> <>$B)").is_err());
        let s = parse_skeleton("[]($A -> <>$B)").unwrap();
        assert_eq!(s.params().into_iter().collect::<Vec<_>>(), ["A", "B"]);
    }

    #[test]
    fn reserved_events() {
        assert_eq!(parse_formula("<> _terminate").unwrap(), Formula::eventually(ev("_terminate")));
        assert_eq!(parse_formula("[] ! _deadlock").unwrap(), Formula::always(Formula::not(ev("_deadlock"))));
    }
}
