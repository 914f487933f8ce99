//! PicklesDSL front end: syntax trees, parser and canonical printer.

pub mod ast;
mod parse;
mod print;

pub use parse::{parse_spec, parse_step, parse_testcase, ParseError, ParseErrorKind};
pub use print::{guard_block_lines, inline_value, print_spec, print_step, print_testcase};

#[cfg(test)]
mod tests;
