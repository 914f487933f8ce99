//! Recursive-descent parser working directly on the source text.
//!
//! Block structure is keyword driven and indentation is ignored. Free text
//! (scenario titles, action texts, Given descriptions) runs to the end of
//! its line; bare literal values run to the end of the line or to the next
//! `AND`/`OR` connective.

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{message}{}", expected_suffix(.expected))]
    Syntax { message: String, expected: Vec<String> },
    #[error("undeclared variable \"{0}\"")]
    UndeclaredVariable(String),
    #[error("variable \"{0}\" is declared twice")]
    DuplicateVariable(String),
    #[error("\"{0}\" names both a variable and a structure attribute")]
    NameCollision(String),
    #[error("attribute \"{0}\" is listed but not described, or described but not listed")]
    AttributeMismatch(String),
    #[error("duplicate scenario title '{0}'")]
    DuplicateTitle(String),
    #[error("a test case needs at least one step")]
    NoSteps,
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!("; expected {}", expected.join(" or "))
    }
}

type Result<T> = std::result::Result<T, ParseError>;

/// Parses a specification suite.
pub fn parse_spec(text: &str) -> Result<SpecSuite> {
    let mut p = Parser::new(text, true);
    p.spec()
}

/// Parses a test case. Variable identifiers are not checked against any
/// declarations; that happens when the values are resolved against a suite.
pub fn parse_testcase(text: &str) -> Result<TestCase> {
    let mut p = Parser::new(text, false);
    p.testcase()
}

/// Parses the text of one step without its leading keyword, as produced by
/// `print_step`. `vars` lists the variable identifiers in scope.
pub fn parse_step(text: &str, kind: StepKind, vars: impl IntoIterator<Item = String>) -> Result<Step> {
    let mut p = Parser::new(text, false);
    p.vars = vars.into_iter().collect();
    let step = p.step(kind)?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.unexpected(&["end of step"]));
    }
    Ok(step)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    /// Declared variable identifiers. Decides whether a quoted identifier
    /// after a connective inside a structure guard is an attribute.
    vars: BTreeSet<String>,
    check_vars: bool,
}

const STEP_KEYWORDS: [&str; 5] = ["Given", "When", "Then", "And", "Scenario"];

impl<'a> Parser<'a> {
    fn new(src: &'a str, check_vars: bool) -> Self {
        Parser { src, pos: 0, vars: BTreeSet::new(), check_vars }
    }

    // ---- diagnostics ----

    fn error_at(&self, pos: usize, kind: ParseErrorKind) -> ParseError {
        let before = &self.src[..pos];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError { line, column, kind }
    }

    fn syntax(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        self.error_at(
            self.pos,
            ParseErrorKind::Syntax {
                message: message.into(),
                expected: expected.iter().map(|s| s.to_string()).collect(),
            },
        )
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let found: String = self.rest().lines().next().unwrap_or("").chars().take(24).collect();
        let message = if self.rest().is_empty() {
            "unexpected end of input".to_string()
        } else if found.trim().is_empty() {
            "unexpected end of line".to_string()
        } else {
            format!("unexpected '{}'", found.trim())
        };
        self.syntax(message, expected)
    }

    // ---- low-level scanning ----

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn line_prefix_blank(&self) -> bool {
        let start = self.src[..self.pos].rfind('\n').map_or(0, |i| i + 1);
        self.src[start..self.pos].chars().all(char::is_whitespace)
    }

    /// Skips whitespace, line breaks and `#` comment lines.
    fn skip_ws(&mut self) {
        loop {
            let Some(c) = self.rest().chars().next() else { return };
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else if c == '#' && self.line_prefix_blank() {
                self.pos += self.rest().find('\n').unwrap_or(self.rest().len());
            } else {
                return;
            }
        }
    }

    fn skip_inline(&mut self) {
        let n = self.rest().len() - self.rest().trim_start_matches([' ', '\t', '\r']).len();
        self.pos += n;
    }

    fn at_eol(&mut self) -> bool {
        self.skip_inline();
        self.at_end() || self.rest().starts_with('\n')
    }

    fn boundary_at(&self, idx: usize) -> bool {
        self.src[idx..].chars().next().is_none_or(|c| !(c.is_alphanumeric() || c == '_'))
    }

    /// Matches the words of `phrase` separated by spaces or tabs.
    fn try_phrase(&mut self, phrase: &str) -> bool {
        let save = self.pos;
        for word in phrase.split(' ') {
            self.skip_inline();
            let wordy = word.chars().last().is_some_and(|c| c.is_alphanumeric());
            if self.rest().starts_with(word) && (!wordy || self.boundary_at(self.pos + word.len())) {
                self.pos += word.len();
            } else {
                self.pos = save;
                return false;
            }
        }
        true
    }

    fn peek_phrase(&mut self, phrase: &str) -> bool {
        let save = self.pos;
        let found = self.try_phrase(phrase);
        self.pos = save;
        found
    }

    fn expect_phrase(&mut self, phrase: &str) -> Result<()> {
        if self.try_phrase(phrase) {
            Ok(())
        } else {
            Err(self.unexpected(&[phrase]))
        }
    }

    fn peek_char(&mut self) -> Option<char> {
        self.skip_inline();
        self.rest().chars().next()
    }

    fn expect_char(&mut self, c: char) -> Result<()> {
        if self.peek_char() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("'{c}'")]))
        }
    }

    /// A `"quoted"` identifier on the current line.
    fn quoted(&mut self) -> Result<Option<String>> {
        if self.peek_char() != Some('"') {
            return Ok(None);
        }
        let body = &self.rest()[1..];
        match body.find(['"', '\n']) {
            Some(i) if body[i..].starts_with('"') => {
                let id = body[..i].to_string();
                if id.trim().is_empty() {
                    return Err(self.syntax("empty identifier", &["identifier"]));
                }
                self.pos += i + 2;
                Ok(Some(id))
            }
            _ => Err(self.syntax("unterminated identifier", &["'\"'"])),
        }
    }

    fn expect_quoted(&mut self) -> Result<String> {
        match self.quoted()? {
            Some(id) => Ok(id),
            None => Err(self.unexpected(&["quoted identifier"])),
        }
    }

    fn declared(&self, id: &str, at: usize) -> Result<()> {
        if self.check_vars && !self.vars.contains(id) {
            return Err(self.error_at(at, ParseErrorKind::UndeclaredVariable(id.to_string())));
        }
        Ok(())
    }

    fn quoted_var(&mut self) -> Result<Option<String>> {
        self.skip_inline();
        let at = self.pos;
        let id = self.quoted()?;
        if let Some(id) = &id {
            self.declared(id, at)?;
        }
        Ok(id)
    }

    fn number<T: std::str::FromStr>(&mut self) -> Result<T> {
        self.skip_inline();
        let digits = self.rest().len() - self.rest().trim_start_matches(|c: char| c.is_ascii_digit()).len();
        let parsed = self.rest()[..digits].parse().ok();
        match parsed {
            Some(n) if digits > 0 => {
                self.pos += digits;
                Ok(n)
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }

    fn rest_of_line(&mut self) -> &'a str {
        let line = self.rest().split('\n').next().unwrap_or("");
        self.pos += line.len();
        line.trim()
    }

    fn try_conj(&mut self) -> Option<Conj> {
        if self.try_phrase("AND") {
            Some(Conj::And)
        } else if self.try_phrase("OR") {
            Some(Conj::Or)
        } else {
            None
        }
    }

    // ---- specification suites ----

    fn spec(&mut self) -> Result<SpecSuite> {
        self.skip_ws();
        self.expect_phrase("Variable Settings")?;
        let mut variables: Vec<VarDecl> = Vec::new();
        loop {
            self.skip_ws();
            let at = self.pos;
            let Some(id) = self.quoted()? else { break };
            if variables.iter().any(|v| v.id == id) {
                return Err(self.error_at(at, ParseErrorKind::DuplicateVariable(id)));
            }
            let ty = self.type_desc()?;
            variables.push(VarDecl { id, ty });
        }
        self.vars = variables.iter().map(|v| v.id.clone()).collect();
        let mut attrs = BTreeSet::new();
        for v in &variables {
            collect_attrs(&v.ty, &mut attrs);
        }
        if let Some(clash) = variables.iter().find(|v| attrs.contains(&v.id)) {
            return Err(self.error_at(0, ParseErrorKind::NameCollision(clash.id.clone())));
        }
        let mut scenarios: Vec<Scenario> = Vec::new();
        loop {
            self.skip_ws();
            if self.at_end() {
                break;
            }
            let at = self.pos;
            if !self.try_phrase("Scenario") {
                let expected: &[&str] = if scenarios.is_empty() {
                    &["quoted identifier", "Scenario"]
                } else {
                    &["Scenario", "And", "end of input"]
                };
                return Err(self.unexpected(expected));
            }
            let sc = self.scenario()?;
            if scenarios.iter().any(|s| s.title == sc.title) {
                return Err(self.error_at(at, ParseErrorKind::DuplicateTitle(sc.title)));
            }
            scenarios.push(sc);
        }
        if scenarios.is_empty() {
            return Err(self.syntax("a suite needs at least one scenario", &["Scenario"]));
        }
        Ok(SpecSuite { variables, scenarios })
    }

    fn type_desc(&mut self) -> Result<TypeDesc> {
        self.skip_ws();
        if self.try_phrase("is an array of") {
            let cardinality = if self.try_phrase("at most") {
                Cardinality::AtMost(self.number()?)
            } else if self.try_phrase("exactly") {
                Cardinality::Exactly(self.number()?)
            } else if self.try_phrase("between") {
                let lo = self.number()?;
                self.expect_phrase("and")?;
                Cardinality::Between(lo, self.number()?)
            } else {
                return Err(self.unexpected(&["at most", "exactly", "between"]));
            };
            self.expect_phrase("elements")?;
            if !self.try_phrase("where") && !self.try_phrase("such that") {
                return Err(self.unexpected(&["where", "such that"]));
            }
            self.expect_phrase("each element")?;
            let element = Box::new(self.type_desc()?);
            return Ok(TypeDesc::Array { cardinality, element });
        }
        if self.try_phrase("is a structure with attributes") {
            let mut header = vec![self.expect_quoted()?];
            while self.peek_char() == Some(',') {
                self.pos += 1;
                header.push(self.expect_quoted()?);
            }
            self.expect_phrase("such that:")?;
            let mut attrs: Vec<(String, TypeDesc)> = Vec::new();
            loop {
                let save = self.pos;
                self.skip_ws();
                let at = self.pos;
                match self.quoted()? {
                    Some(id) if header.contains(&id) && !attrs.iter().any(|(k, _)| *k == id) => {
                        let ty = self.type_desc()?;
                        attrs.push((id, ty));
                    }
                    Some(id) if !header.contains(&id) && attrs.len() < header.len() && self.peek_phrase("is") => {
                        return Err(self.error_at(at, ParseErrorKind::AttributeMismatch(id)));
                    }
                    _ => {
                        self.pos = save;
                        break;
                    }
                }
            }
            if let Some(missing) = header.iter().find(|h| !attrs.iter().any(|(k, _)| k == *h)) {
                return Err(self.error_at(self.pos, ParseErrorKind::AttributeMismatch(missing.clone())));
            }
            return Ok(TypeDesc::Struct { header, attrs });
        }
        if !(self.try_phrase("is an") || self.try_phrase("is a")) {
            return Err(self.unexpected(&["is a", "is an", "is an array of", "is a structure with attributes"]));
        }
        let ty = if self.try_phrase("boolean") {
            PrimType::Boolean
        } else if self.try_phrase("integer") {
            PrimType::Integer
        } else if self.try_phrase("decimal") {
            PrimType::Decimal
        } else if self.try_phrase("string") {
            PrimType::String
        } else {
            return Err(self.unexpected(&["boolean", "integer", "decimal", "string"]));
        };
        self.expect_phrase("with range")?;
        let range = self.range()?;
        Ok(TypeDesc::Primitive { ty, range })
    }

    fn range(&mut self) -> Result<RangeAst> {
        let open = self.peek_char();
        let close = match open {
            Some('{') => '}',
            Some('[') | Some('(') => ']',
            _ => return Err(self.unexpected(&["'{'", "'['", "'('"])),
        };
        let body_start = self.pos + 1;
        let line_end = self.rest().find('\n').map_or(self.src.len(), |i| self.pos + i);
        let end = self.src[body_start..line_end]
            .find(|c: char| if close == '}' { c == '}' } else { c == ']' || c == ')' })
            .map(|i| body_start + i);
        let Some(end) = end else {
            self.pos = line_end;
            return Err(self.syntax("unterminated range", &[if close == '}' { "'}'" } else { "']'" }]));
        };
        let body = &self.src[body_start..end];
        let parts: Vec<String> = body.split(',').map(|s| s.trim().to_string()).collect();
        if parts.iter().any(String::is_empty) {
            return Err(self.syntax("empty range element", &["value"]));
        }
        let closing = self.src[end..].chars().next();
        self.pos = end + 1;
        if open == Some('{') {
            return Ok(RangeAst::Set(parts));
        }
        let lo_closed = open == Some('[');
        let hi_closed = closing == Some(']');
        match &parts[..] {
            [lo, hi] => Ok(RangeAst::Interval { lo: lo.clone(), lo_closed, hi: hi.clone(), hi_closed }),
            [v] if lo_closed && hi_closed => {
                Ok(RangeAst::Interval { lo: v.clone(), lo_closed, hi: v.clone(), hi_closed })
            }
            _ => Err(self.syntax("an interval has two endpoints", &["lo,hi"])),
        }
    }

    fn scenario(&mut self) -> Result<Scenario> {
        let title = self.rest_of_line().to_string();
        if title.is_empty() {
            return Err(self.syntax("missing scenario title", &["title"]));
        }
        self.skip_ws();
        let given = if self.try_phrase("Given") { Some(self.given()?) } else { None };
        self.skip_ws();
        if !self.try_phrase("When") {
            return Err(self.unexpected(if given.is_some() { &["When"] } else { &["Given", "When"] }));
        }
        let mut when = vec![self.step(StepKind::Input)?];
        loop {
            self.skip_ws();
            if self.try_phrase("And") {
                when.push(self.step(StepKind::Input)?);
            } else {
                break;
            }
        }
        if !self.try_phrase("Then") {
            return Err(self.unexpected(&["And", "Then"]));
        }
        let mut then = vec![self.step(StepKind::Output)?];
        loop {
            let save = self.pos;
            self.skip_ws();
            if self.try_phrase("And") {
                then.push(self.step(StepKind::Output)?);
            } else {
                self.pos = save;
                break;
            }
        }
        Ok(Scenario { title, given, when, then })
    }

    fn given(&mut self) -> Result<Given> {
        self.skip_inline();
        let initial = self.try_phrase("the system is in its initial state")
            || self.try_phrase("The system is in its initial state");
        let mut description = None;
        let mut referenced = Vec::new();
        let mut guard = None;
        let has_line = if initial {
            if self.at_eol() {
                let save = self.pos;
                self.skip_ws();
                if self.try_phrase("And") {
                    true
                } else {
                    self.pos = save;
                    false
                }
            } else {
                true
            }
        } else {
            true
        };
        if has_line {
            let (desc, ids, such_that) = self.prose_line()?;
            description = desc;
            referenced = ids;
            if such_that {
                guard = Some(self.guard_block()?);
            }
        }
        Ok(Given { initial, description, referenced, guard })
    }

    /// Free text up to `such that:` or the end of the line. Quoted
    /// identifiers are collected separately from the surrounding prose.
    fn prose_line(&mut self) -> Result<(Option<String>, Vec<String>, bool)> {
        let mut pieces: Vec<&str> = Vec::new();
        let mut ids = Vec::new();
        loop {
            if self.at_eol() {
                break;
            }
            if self.try_phrase("such that:") {
                let desc = join_prose(&pieces);
                return Ok((desc, ids, true));
            }
            if let Some(id) = self.quoted_var()? {
                ids.push(id);
                continue;
            }
            let rest = self.rest();
            let mut end = rest.find(['"', '\n']).unwrap_or(rest.len());
            if let Some(i) = rest[..end].find(" such that:") {
                end = i + 1;
            }
            pieces.push(&rest[..end]);
            self.pos += end;
        }
        Ok((join_prose(&pieces), ids, false))
    }

    fn step(&mut self, kind: StepKind) -> Result<Step> {
        self.skip_inline();
        let rest = self.rest();
        let end = rest.find(['"', '\n']).unwrap_or(rest.len());
        let action = rest[..end].trim().to_string();
        if action.is_empty() {
            return Err(self.unexpected(&["action text"]));
        }
        if STEP_KEYWORDS.iter().any(|k| action == *k) {
            return Err(self.syntax(format!("'{action}' cannot start an action text"), &["action text"]));
        }
        self.pos += end;
        let params = self.params()?;
        let guard = self.step_guard(&params)?;
        Ok(Step { kind, action, params, guard })
    }

    fn params(&mut self) -> Result<Vec<String>> {
        let mut params: Vec<String> = Vec::new();
        loop {
            let at = self.pos;
            if !params.is_empty() && self.peek_char() == Some(',') {
                self.pos += 1;
            }
            match self.quoted_var()? {
                Some(id) => {
                    if params.contains(&id) {
                        return Err(self.syntax(format!("parameter \"{id}\" is repeated"), &[]));
                    }
                    params.push(id)
                }
                None => {
                    self.pos = at;
                    return Ok(params);
                }
            }
        }
    }

    fn step_guard(&mut self, params: &[String]) -> Result<Option<GuardBlock>> {
        if params.is_empty() {
            return if self.at_eol() { Ok(None) } else { Err(self.unexpected(&["end of line"])) };
        }
        if self.try_phrase("such that:") {
            return Ok(Some(self.guard_block()?));
        }
        if params.len() == 1 && !self.at_eol() {
            // one-line form: `"x" equal to V`
            let guard = self.prim_guard()?;
            let var = VarRef { id: params[0].clone(), stored: false };
            return Ok(Some(GuardBlock { clauses: vec![GuardClause { var, guard }], conjs: vec![] }));
        }
        Err(self.unexpected(&["such that:"]))
    }

    fn guard_block(&mut self) -> Result<GuardBlock> {
        let mut clauses = vec![self.clause()?];
        let mut conjs = Vec::new();
        loop {
            let save = self.pos;
            self.skip_ws();
            match self.try_conj() {
                Some(c) => {
                    conjs.push(c);
                    clauses.push(self.clause()?);
                }
                None => {
                    self.pos = save;
                    return Ok(GuardBlock { clauses, conjs });
                }
            }
        }
    }

    fn clause(&mut self) -> Result<GuardClause> {
        self.skip_ws();
        let stored = self.try_phrase("stored");
        let Some(id) = self.quoted_var()? else {
            return Err(self.unexpected(&["quoted identifier"]));
        };
        let guard = self.guard()?;
        Ok(GuardClause { var: VarRef { id, stored }, guard })
    }

    fn guard(&mut self) -> Result<Guard> {
        self.skip_ws();
        if self.try_phrase("has attributes such that:") {
            return self.struct_guard();
        }
        if self.try_phrase("has a value") {
            return self.prim_guard();
        }
        if self.try_phrase("has") {
            let quantifier = if self.try_phrase("at least") {
                Quantifier::AtLeast(self.number()?)
            } else if self.try_phrase("at most") {
                Quantifier::AtMost(self.number()?)
            } else if self.try_phrase("exactly") {
                Quantifier::Exactly(self.number()?)
            } else if self.try_phrase("all") {
                Quantifier::All
            } else {
                return Err(self.unexpected(&[
                    "at least",
                    "at most",
                    "exactly",
                    "all",
                    "attributes such that:",
                    "a value",
                ]));
            };
            self.expect_phrase("elements")?;
            if !self.try_phrase("where") && !self.try_phrase("such that") {
                return Err(self.unexpected(&["where", "such that"]));
            }
            self.expect_phrase("each element")?;
            let element = Box::new(self.guard()?);
            return Ok(Guard::Array { quantifier, element });
        }
        self.prim_guard()
    }

    fn struct_guard(&mut self) -> Result<Guard> {
        let mut attrs = Vec::new();
        let mut conjs = Vec::new();
        loop {
            self.skip_ws();
            let key = self.expect_quoted()?;
            let guard = self.guard()?;
            attrs.push((key, guard));
            let save = self.pos;
            self.skip_ws();
            if let Some(c) = self.try_conj() {
                self.skip_ws();
                let next = self.pos;
                if let Some(id) = self.quoted()? {
                    if !self.vars.contains(&id) {
                        self.pos = next;
                        conjs.push(c);
                        continue;
                    }
                }
            }
            self.pos = save;
            return Ok(Guard::Struct { attrs, conjs });
        }
    }

    fn prim_guard(&mut self) -> Result<Guard> {
        self.try_phrase("is");
        const OPS: [(&str, Op); 6] = [
            ("not equal to", Op::Ne),
            ("equal to", Op::Eq),
            ("greater or equal than", Op::Ge),
            ("greater than", Op::Gt),
            ("lower or equal than", Op::Le),
            ("lower than", Op::Lt),
        ];
        for (phrase, op) in OPS {
            if self.try_phrase(phrase) {
                let rhs = self.rhs()?;
                return Ok(Guard::Compare { op, rhs });
            }
        }
        if self.try_phrase("between") {
            let lo = self.operand()?;
            self.expect_phrase("and")?;
            let hi = self.operand()?;
            return Ok(Guard::Between { lo, hi });
        }
        Err(self.unexpected(&[
            "equal to",
            "not equal to",
            "greater than",
            "lower than",
            "greater or equal than",
            "lower or equal than",
            "between",
            "has",
        ]))
    }

    fn var_rhs(&mut self) -> Result<Option<Rhs>> {
        let save = self.pos;
        let stored = self.try_phrase("stored");
        match self.quoted_var()? {
            Some(id) => Ok(Some(Rhs::Var(VarRef { id, stored }))),
            None if stored => Err(self.unexpected(&["quoted identifier"])),
            None => {
                self.pos = save;
                Ok(None)
            }
        }
    }

    fn rhs(&mut self) -> Result<Rhs> {
        if let Some(v) = self.var_rhs()? {
            return Ok(v);
        }
        match self.peek_char() {
            Some('[' | '(' | '{') => Ok(Rhs::Range(self.range()?)),
            Some('\'') => Ok(Rhs::Literal(self.single_quoted()?)),
            _ => {
                let rest = self.rest();
                let mut end = rest.find('\n').unwrap_or(rest.len());
                if let Some(i) = find_connective(&rest[..end]) {
                    end = i;
                }
                let text = rest[..end].trim();
                if text.is_empty() {
                    return Err(self.unexpected(&["value", "quoted identifier"]));
                }
                self.pos += end;
                Ok(Rhs::Literal(text.to_string()))
            }
        }
    }

    fn operand(&mut self) -> Result<Rhs> {
        if let Some(v) = self.var_rhs()? {
            return Ok(v);
        }
        if self.peek_char() == Some('\'') {
            return Ok(Rhs::Literal(self.single_quoted()?));
        }
        let rest = self.rest();
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        if end == 0 {
            return Err(self.unexpected(&["value"]));
        }
        self.pos += end;
        Ok(Rhs::Literal(rest[..end].to_string()))
    }

    fn single_quoted(&mut self) -> Result<String> {
        let body = &self.rest()[1..];
        match body.find(['\'', '\n']) {
            Some(i) if body[i..].starts_with('\'') => {
                self.pos += i + 2;
                Ok(body[..i].to_string())
            }
            _ => Err(self.syntax("unterminated literal", &["'"])),
        }
    }

    // ---- test cases ----

    fn testcase(&mut self) -> Result<TestCase> {
        self.skip_ws();
        self.expect_phrase("Given the system is initialized with values:")?;
        let given = self.value_defs()?;
        if given.is_empty() {
            return Err(self.unexpected(&["value definition"]));
        }
        self.vars = given.iter().map(|d| d.id.clone()).collect();
        let mut steps = Vec::new();
        let mut last: Option<StepKind> = None;
        loop {
            self.skip_ws();
            if self.at_end() {
                break;
            }
            let kind = if self.try_phrase("When") {
                StepKind::Input
            } else if self.try_phrase("Then") {
                StepKind::Output
            } else if self.try_phrase("And") {
                match last {
                    Some(k) => k,
                    None => return Err(self.syntax("'And' needs a preceding step", &["When", "Then"])),
                }
            } else {
                return Err(self.unexpected(&["When", "Then", "And"]));
            };
            last = Some(kind);
            match kind {
                StepKind::Input => steps.push(self.test_input()?),
                StepKind::Output => steps.push(TestStep::Output(self.step(StepKind::Output)?)),
            }
        }
        if steps.is_empty() {
            return Err(self.error_at(self.pos, ParseErrorKind::NoSteps));
        }
        Ok(TestCase { given, steps })
    }

    fn test_input(&mut self) -> Result<TestStep> {
        self.skip_inline();
        let rest = self.rest();
        let end = rest.find(['"', '\n']).unwrap_or(rest.len());
        let action = rest[..end].trim().to_string();
        if action.is_empty() {
            return Err(self.unexpected(&["action text"]));
        }
        self.pos += end;
        let params = self.params()?;
        let mut values = Vec::new();
        if !params.is_empty() {
            self.expect_phrase("with values:")?;
            values = self.value_defs()?;
            if values.is_empty() {
                return Err(self.unexpected(&["value definition"]));
            }
        } else if !self.at_eol() {
            return Err(self.unexpected(&["end of line"]));
        }
        Ok(TestStep::Input { action, params, values })
    }

    fn value_defs(&mut self) -> Result<Vec<ValueDef>> {
        let mut defs = Vec::new();
        loop {
            let save = self.pos;
            self.skip_ws();
            let Some(id) = self.quoted()? else {
                self.pos = save;
                return Ok(defs);
            };
            self.expect_char(':')?;
            let value = if self.at_eol() { self.indexed_lines()? } else { self.value(false)? };
            defs.push(ValueDef { id, value });
        }
    }

    fn indexed_lines(&mut self) -> Result<ValueAst> {
        let mut entries = Vec::new();
        loop {
            let save = self.pos;
            self.skip_ws();
            if !self.rest().starts_with(|c: char| c.is_ascii_digit()) {
                self.pos = save;
                break;
            }
            let n = self.number()?;
            self.expect_char(':')?;
            entries.push((n, self.value(false)?));
        }
        if entries.is_empty() {
            return Err(self.unexpected(&["value", "indexed entry"]));
        }
        Ok(ValueAst::Indexed(entries))
    }

    fn value(&mut self, nested: bool) -> Result<ValueAst> {
        match self.peek_char() {
            Some('{') => {
                self.pos += 1;
                let mut entries = Vec::new();
                loop {
                    self.skip_ws();
                    if self.rest().starts_with('}') && entries.is_empty() {
                        return Err(self.unexpected(&["quoted identifier"]));
                    }
                    let key = self.expect_quoted()?;
                    self.expect_char(':')?;
                    entries.push((key, self.value(true)?));
                    self.skip_ws();
                    match self.rest().chars().next() {
                        Some(',') => self.pos += 1,
                        Some('}') => {
                            self.pos += 1;
                            return Ok(ValueAst::Keyed(entries));
                        }
                        _ => return Err(self.unexpected(&["','", "'}'"])),
                    }
                }
            }
            Some('[') => {
                self.pos += 1;
                let mut entries = Vec::new();
                loop {
                    self.skip_ws();
                    let n = self.number()?;
                    self.expect_char(':')?;
                    entries.push((n, self.value(true)?));
                    self.skip_ws();
                    match self.rest().chars().next() {
                        Some(',') => self.pos += 1,
                        Some(']') => {
                            self.pos += 1;
                            return Ok(ValueAst::Indexed(entries));
                        }
                        _ => return Err(self.unexpected(&["','", "']'"])),
                    }
                }
            }
            Some('\'') => Ok(ValueAst::Scalar(self.single_quoted()?)),
            _ => {
                let rest = self.rest();
                let stops: &[char] = if nested { &['\n', ',', '}', ']'] } else { &['\n'] };
                let end = rest.find(stops).unwrap_or(rest.len());
                let text = rest[..end].trim();
                if text.is_empty() {
                    return Err(self.unexpected(&["value"]));
                }
                self.pos += end;
                Ok(ValueAst::Scalar(text.to_string()))
            }
        }
    }
}

fn join_prose(pieces: &[&str]) -> Option<String> {
    let words: Vec<&str> = pieces.iter().map(|p| p.trim().trim_matches(',').trim()).filter(|p| !p.is_empty()).collect();
    if words.is_empty() {
        None
    } else {
        Some(words.join(" ").split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

/// Byte offset of the first ` AND`/` OR` word in `text`, if any.
pub(crate) fn find_connective(text: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    for (i, _) in text.char_indices() {
        if i > 0 && !(bytes[i - 1] as char).is_whitespace() {
            continue;
        }
        for kw in ["AND", "OR"] {
            if text[i..].starts_with(kw) {
                let after = text[i + kw.len()..].chars().next();
                if after.is_none_or(char::is_whitespace) {
                    return Some(i);
                }
            }
        }
    }
    None
}

fn collect_attrs(ty: &TypeDesc, out: &mut BTreeSet<String>) {
    match ty {
        TypeDesc::Primitive { .. } => {}
        TypeDesc::Array { element, .. } => collect_attrs(element, out),
        TypeDesc::Struct { attrs, .. } => {
            for (k, t) in attrs {
                out.insert(k.clone());
                collect_attrs(t, out);
            }
        }
    }
}
