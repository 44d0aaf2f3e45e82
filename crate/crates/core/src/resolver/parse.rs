//! The textual command notation.
//!
//! ```text
//! # one command per line, `&` joins commands into a compound
//! limb_11 @ distal_11 -> left-high * 3
//! limb_11 @ distal_11 -> left-high * 1 & limb_21 @ distal_21 -> right-high * 1
//! c_1 @ c_1 -> forward-middle * 2
//! ```

use std::fmt;

use super::CommandQuery;
use crate::label::Label;
use crate::vsam::{DirectionPull, SizeIndex};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unknown direction name `{name}` at line {line}, column {col}")]
    UnknownDirectionName { line: usize, col: usize, name: String },
}

impl ParseError {
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "SyntaxError",
            ParseError::UnknownDirectionName { .. } => "UnknownDirectionName",
        }
    }

    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. } | ParseError::UnknownDirectionName { line, .. } => *line,
        }
    }
}

/// The commands of one input line, executed together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandLine {
    /// 1-based line number in the source text.
    pub line: usize,
    pub commands: Vec<CommandQuery>,
}

impl fmt::Display for CommandLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.commands.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(" & "))
    }
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Word(&'a str),
    At,
    Arrow,
    Star,
    Amp,
}

/// Splits a comment-free line into tokens with their 1-based columns.
fn tokenize(text: &str, line: usize) -> Result<Vec<(Token<'_>, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let col = i + 1;
        match c {
            b' ' | b'\t' | b'\r' => i += 1,
            b'@' => {
                out.push((Token::At, col));
                i += 1;
            }
            b'*' => {
                out.push((Token::Star, col));
                i += 1;
            }
            b'&' => {
                out.push((Token::Amp, col));
                i += 1;
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                out.push((Token::Arrow, col));
                i += 2;
            }
            c if c.is_ascii_alphanumeric() || c == b'_' || c == b'-' => {
                let start = i;
                while i < bytes.len() {
                    let c = bytes[i];
                    let arrow = c == b'-' && bytes.get(i + 1) == Some(&b'>');
                    if !(c.is_ascii_alphanumeric() || c == b'_' || c == b'-') || arrow {
                        break;
                    }
                    i += 1;
                }
                out.push((Token::Word(&text[start..i]), col));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    line,
                    col,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    Ok(out)
}

/// Parses a command file into lines of (possibly compound) commands, skipping
/// blank lines and `#` comments.
pub fn parse_commands(text: &str) -> Result<Vec<CommandLine>, ParseError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(body, line)?;
        if tokens.is_empty() {
            continue;
        }
        let mut commands = Vec::new();
        let mut rest = tokens.as_slice();
        loop {
            let (cmd, after) = parse_one(rest, line, body.len() + 1)?;
            commands.push(cmd);
            match after {
                [] => break,
                [(Token::Amp, _), tail @ ..] => rest = tail,
                [(_, col), ..] => {
                    return Err(ParseError::Syntax {
                        line,
                        col: *col,
                        message: "expected `&` or end of line".into(),
                    })
                }
            }
        }
        out.push(CommandLine { line, commands });
    }
    Ok(out)
}

/// Parses exactly one command (no compound, no comments beyond a trailing one).
pub fn parse_command(text: &str) -> Result<CommandQuery, ParseError> {
    let mut lines = parse_commands(text)?;
    match (lines.len(), lines.first().map(|l| l.commands.len())) {
        (1, Some(1)) => Ok(lines.remove(0).commands.remove(0)),
        _ => Err(ParseError::Syntax {
            line: 1,
            col: 1,
            message: "expected exactly one command".into(),
        }),
    }
}

fn parse_one<'t, 'a>(
    tokens: &'t [(Token<'a>, usize)],
    line: usize,
    eol: usize,
) -> Result<(CommandQuery, &'t [(Token<'a>, usize)]), ParseError> {
    let mut pos = 0;
    let syntax = |pos: usize, message: &str| ParseError::Syntax {
        line,
        col: tokens.get(pos).map_or(eol, |t| t.1),
        message: message.to_string(),
    };
    let word = |pos: &mut usize, what: &str| -> Result<(&'a str, usize), ParseError> {
        match tokens.get(*pos) {
            Some((Token::Word(w), col)) => {
                *pos += 1;
                Ok((w, *col))
            }
            _ => Err(syntax(*pos, &format!("expected {what}"))),
        }
    };
    let expect = |pos: &mut usize, tok: Token, what: &str| -> Result<(), ParseError> {
        match tokens.get(*pos) {
            Some((t, _)) if *t == tok => {
                *pos += 1;
                Ok(())
            }
            _ => Err(syntax(*pos, &format!("expected `{what}`"))),
        }
    };
    let label = |(w, col): (&str, usize)| -> Result<Label, ParseError> {
        w.parse().map_err(|_| ParseError::Syntax {
            line,
            col,
            message: format!("`{w}` is not a body-part label"),
        })
    };

    let limb = label(word(&mut pos, "a limb or core label")?)?;
    expect(&mut pos, Token::At, "@")?;
    let origin = label(word(&mut pos, "an origin label")?)?;
    expect(&mut pos, Token::Arrow, "->")?;
    let (name, col) = word(&mut pos, "a direction name")?;
    let direction: DirectionPull = name.parse().map_err(|_| ParseError::UnknownDirectionName {
        line,
        col,
        name: name.to_string(),
    })?;
    expect(&mut pos, Token::Star, "*")?;
    let (digits, col) = word(&mut pos, "a size")?;
    let size = digits
        .parse::<u32>()
        .ok()
        .and_then(SizeIndex::new)
        .ok_or_else(|| ParseError::Syntax {
            line,
            col,
            message: format!("size `{digits}` is not a positive integer"),
        })?;
    let cmd = CommandQuery {
        limb,
        origin,
        direction,
        size,
    };
    Ok((cmd, &tokens[pos..]))
}
