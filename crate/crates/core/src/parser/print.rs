//! Canonical formatter. Output re-parses to an equal syntax tree.

use super::ast::*;
use super::parse::find_connective;

const INDENT: &str = "  ";

pub fn print_spec(suite: &SpecSuite) -> String {
    let mut out = String::from("Variable Settings\n");
    for v in &suite.variables {
        out.push_str(&format!("\"{}\" ", v.id));
        type_desc(&v.ty, 0, &mut out);
        out.push('\n');
    }
    for sc in &suite.scenarios {
        out.push('\n');
        out.push_str(&format!("Scenario {}\n", sc.title));
        if let Some(g) = &sc.given {
            given(g, &mut out);
        }
        for (i, s) in sc.when.iter().enumerate() {
            out.push_str(if i == 0 { "When " } else { "And " });
            out.push_str(&print_step(s));
            out.push('\n');
        }
        for (i, s) in sc.then.iter().enumerate() {
            out.push_str(if i == 0 { "Then " } else { "And " });
            out.push_str(&print_step(s));
            out.push('\n');
        }
    }
    out
}

pub fn print_testcase(tc: &TestCase) -> String {
    let mut out = String::from("Given the system is initialized with values:\n");
    for d in &tc.given {
        value_def(d, 1, &mut out);
    }
    let mut last = None;
    for step in &tc.steps {
        let kind = match step {
            TestStep::Input { .. } => StepKind::Input,
            TestStep::Output(_) => StepKind::Output,
        };
        out.push_str(match (last == Some(kind), kind) {
            (true, _) => "And ",
            (false, StepKind::Input) => "When ",
            (false, StepKind::Output) => "Then ",
        });
        last = Some(kind);
        match step {
            TestStep::Input { action, params, values } => {
                out.push_str(action);
                if !params.is_empty() {
                    out.push(' ');
                    out.push_str(&quoted_list(params));
                    out.push_str(" with values:\n");
                    for d in values {
                        value_def(d, 1, &mut out);
                    }
                } else {
                    out.push('\n');
                }
            }
            TestStep::Output(s) => {
                out.push_str(&print_step(s));
                out.push('\n');
            }
        }
    }
    out
}

/// A When/Then step without its leading keyword. Guard block lines are
/// indented one level.
pub fn print_step(step: &Step) -> String {
    let mut out = step.action.clone();
    if step.params.is_empty() {
        return out;
    }
    out.push(' ');
    out.push_str(&quoted_list(&step.params));
    let Some(gb) = &step.guard else { return out };
    if let ([c], [p]) = (&gb.clauses[..], &step.params[..]) {
        if c.var.id == *p && !c.var.stored {
            if let Some(line) = one_line(&c.guard) {
                out.push(' ');
                out.push_str(&line);
                return out;
            }
        }
    }
    out.push_str(" such that:");
    for line in guard_block_lines(gb, 1) {
        out.push('\n');
        out.push_str(&line);
    }
    out
}

/// Guard block rendered as lines, each prefixed with `level` indents.
pub fn guard_block_lines(gb: &GuardBlock, level: usize) -> Vec<String> {
    let ind = INDENT.repeat(level);
    let mut out = Vec::new();
    for (i, c) in gb.clauses.iter().enumerate() {
        let stored = if c.var.stored { "stored " } else { "" };
        let mut lines = guard_lines(format!("{ind}{stored}\"{}\"", c.var.id), &c.guard, level);
        if let Some(conj) = gb.conjs.get(i) {
            if let Some(last) = lines.last_mut() {
                last.push(' ');
                last.push_str(conj.keyword());
            }
        }
        out.extend(lines);
    }
    out
}

fn one_line(g: &Guard) -> Option<String> {
    match g {
        Guard::Compare { op, rhs } => Some(format!("{} {}", op.phrase(), rhs_text(rhs))),
        Guard::Between { lo, hi } => Some(format!("between {} and {}", operand_text(lo), operand_text(hi))),
        _ => None,
    }
}

fn guard_lines(prefix: String, g: &Guard, level: usize) -> Vec<String> {
    match g {
        Guard::Compare { .. } | Guard::Between { .. } => {
            vec![format!("{prefix} is {}", one_line(g).unwrap_or_default())]
        }
        Guard::Array { quantifier, element } => {
            let q = match quantifier {
                Quantifier::AtLeast(n) => format!("at least {n}"),
                Quantifier::AtMost(n) => format!("at most {n}"),
                Quantifier::Exactly(n) => format!("exactly {n}"),
                Quantifier::All => "all".to_string(),
            };
            guard_lines(format!("{prefix} has {q} elements where each element"), element, level)
        }
        Guard::Struct { attrs, conjs } => {
            let mut out = vec![format!("{prefix} has attributes such that:")];
            let ind = INDENT.repeat(level + 1);
            for (i, (key, g)) in attrs.iter().enumerate() {
                let mut lines = guard_lines(format!("{ind}\"{key}\""), g, level + 1);
                if let Some(conj) = conjs.get(i) {
                    if let Some(last) = lines.last_mut() {
                        last.push(' ');
                        last.push_str(conj.keyword());
                    }
                }
                out.extend(lines);
            }
            out
        }
    }
}

fn rhs_text(rhs: &Rhs) -> String {
    match rhs {
        Rhs::Literal(text) => literal(text, false),
        Rhs::Range(r) => range(r),
        Rhs::Var(v) => format!("{}\"{}\"", if v.stored { "stored " } else { "" }, v.id),
    }
}

fn operand_text(rhs: &Rhs) -> String {
    match rhs {
        Rhs::Literal(text) if text.contains(char::is_whitespace) => format!("'{text}'"),
        Rhs::Literal(text) => literal(text, false),
        other => rhs_text(other),
    }
}

/// Literal text, single-quoted when the bare form would not read back.
fn literal(text: &str, nested: bool) -> String {
    let awkward = text.is_empty()
        || text != text.trim()
        || text.starts_with(['"', '\'', '[', '(', '{'])
        || text.starts_with("stored ")
        || text == "stored"
        || find_connective(text).is_some()
        || (nested && text.contains([',', '}', ']']));
    if awkward && !text.contains(['\'', '\n']) {
        format!("'{text}'")
    } else {
        text.to_string()
    }
}

fn range(r: &RangeAst) -> String {
    match r {
        RangeAst::Set(items) => format!("{{{}}}", items.join(", ")),
        RangeAst::Interval { lo, lo_closed, hi, hi_closed } => {
            format!("{}{lo},{hi}{}", if *lo_closed { '[' } else { '(' }, if *hi_closed { ']' } else { ')' })
        }
    }
}

fn quoted_list(ids: &[String]) -> String {
    ids.iter().map(|p| format!("\"{p}\"")).collect::<Vec<_>>().join(", ")
}

fn type_desc(t: &TypeDesc, level: usize, out: &mut String) {
    match t {
        TypeDesc::Primitive { ty, range: r } => {
            let article = if *ty == PrimType::Integer { "an" } else { "a" };
            out.push_str(&format!("is {article} {} with range {}", ty.keyword(), range(r)));
        }
        TypeDesc::Array { cardinality, element } => {
            let card = match cardinality {
                Cardinality::AtMost(n) => format!("at most {n}"),
                Cardinality::Exactly(n) => format!("exactly {n}"),
                Cardinality::Between(a, b) => format!("between {a} and {b}"),
            };
            out.push_str(&format!("is an array of {card} elements where each element "));
            type_desc(element, level, out);
        }
        TypeDesc::Struct { header, attrs } => {
            out.push_str(&format!("is a structure with attributes {} such that:", quoted_list(header)));
            let ind = INDENT.repeat(level + 1);
            for (k, t) in attrs {
                out.push_str(&format!("\n{ind}\"{k}\" "));
                type_desc(t, level + 1, out);
            }
        }
    }
}

fn given(g: &Given, out: &mut String) {
    let mut line = String::new();
    if let Some(d) = &g.description {
        line.push_str(d);
    }
    if !g.referenced.is_empty() {
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(&quoted_list(&g.referenced));
    }
    if g.guard.is_some() {
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str("such that:");
    }
    match (g.initial, line.is_empty()) {
        (true, true) => out.push_str("Given the system is in its initial state\n"),
        (true, false) => out.push_str(&format!("Given the system is in its initial state\nAnd {line}\n")),
        (false, _) => out.push_str(&format!("Given {line}\n")),
    }
    if let Some(gb) = &g.guard {
        for l in guard_block_lines(gb, 1) {
            out.push_str(&l);
            out.push('\n');
        }
    }
}

fn value_def(d: &ValueDef, level: usize, out: &mut String) {
    let ind = INDENT.repeat(level);
    match &d.value {
        ValueAst::Indexed(entries) => {
            out.push_str(&format!("{ind}\"{}\":\n", d.id));
            let inner = INDENT.repeat(level + 1);
            for (n, v) in entries {
                out.push_str(&format!("{inner}{n}: {}\n", inline_value(v, false)));
            }
        }
        v => out.push_str(&format!("{ind}\"{}\": {}\n", d.id, inline_value(v, false))),
    }
}

/// A value on a single line. Nested arrays use the bracketed form.
pub fn inline_value(v: &ValueAst, nested: bool) -> String {
    match v {
        ValueAst::Scalar(text) => literal(text, nested),
        ValueAst::Keyed(entries) => {
            let parts: Vec<String> =
                entries.iter().map(|(k, v)| format!("\"{k}\": {}", inline_value(v, true))).collect();
            format!("{{{}}}", parts.join(", "))
        }
        ValueAst::Indexed(entries) => {
            let parts: Vec<String> = entries.iter().map(|(n, v)| format!("{n}: {}", inline_value(v, true))).collect();
            format!("[{}]", parts.join(", "))
        }
    }
}
