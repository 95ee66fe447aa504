//! Line-oriented scenario format.
//!
//! ```text
//! name <words...>
//! [$var =] invoke <functionality> <args...> [expect ok | expect abort <CODE>]
//! adjust-version <delta>
//! trigger-events [<EVENT_TYPE>|*] [<ref>|*]
//! event-loop on [<interval-ms>] | event-loop off
//! sleep <ms>
//! assert-field <ref> <path> <expected>
//! assert-version <ref> <version>
//! assert-handled <count>
//! ```
//!
//! `#` starts a comment. Tokens are whitespace separated; double quotes
//! group a token that contains spaces or is empty. A `<ref>` is either a
//! `$var` bound by an earlier invoke or a literal aggregate id.

use std::fmt;

use crate::error::ErrorCode;
use crate::quizzes::StudentEventKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    Ok,
    Abort(ErrorCode),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Invoke {
        bind: Option<String>,
        functionality: String,
        args: Vec<String>,
        expect: Expectation,
    },
    AdjustVersion(i64),
    TriggerEvents {
        kind: Option<StudentEventKind>,
        subscriber: Option<String>,
    },
    EventLoop {
        enabled: bool,
        interval_ms: Option<u64>,
    },
    Sleep(u64),
    AssertField {
        target: String,
        path: String,
        expected: String,
    },
    AssertVersion {
        target: String,
        expected: u64,
    },
    AssertHandled(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("PARSE_ERROR line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn quote(token: &str) -> String {
    if token.is_empty() || token.contains(char::is_whitespace) || token.contains('#') {
        format!("\"{token}\"")
    } else {
        token.to_owned()
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Invoke {
                bind,
                functionality,
                args,
                expect,
            } => {
                if let Some(var) = bind {
                    write!(f, "${var} = ")?;
                }
                write!(f, "invoke {functionality}")?;
                for a in args {
                    write!(f, " {}", quote(a))?;
                }
                match expect {
                    Expectation::Ok => Ok(()),
                    Expectation::Abort(code) => write!(f, " expect abort {code}"),
                }
            }
            Step::AdjustVersion(delta) => write!(f, "adjust-version {delta:+}"),
            Step::TriggerEvents { kind, subscriber } => {
                write!(f, "trigger-events")?;
                match (kind, subscriber) {
                    (None, None) => Ok(()),
                    (Some(k), None) => write!(f, " {k}"),
                    (k, Some(s)) => write!(f, " {} {s}", k.map_or("*".to_owned(), |k| k.to_string())),
                }
            }
            Step::EventLoop { enabled: false, .. } => write!(f, "event-loop off"),
            Step::EventLoop {
                enabled: true,
                interval_ms,
            } => match interval_ms {
                Some(ms) => write!(f, "event-loop on {ms}"),
                None => write!(f, "event-loop on"),
            },
            Step::Sleep(ms) => write!(f, "sleep {ms}"),
            Step::AssertField { target, path, expected } => {
                write!(f, "assert-field {target} {path} {}", quote(expected))
            }
            Step::AssertVersion { target, expected } => write!(f, "assert-version {target} {expected}"),
            Step::AssertHandled(n) => write!(f, "assert-handled {n}"),
        }
    }
}

/// Splits a line into tokens, honouring double quotes and dropping comments.
fn tokenize(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '#' {
            break;
        } else if c == '"' {
            chars.next();
            let mut token = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(c) => token.push(c),
                    None => return Err("unterminated quote".into()),
                }
            }
            tokens.push(token);
        } else {
            let mut token = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || c == '#' {
                    break;
                }
                token.push(c);
                chars.next();
            }
            tokens.push(token);
        }
    }
    Ok(tokens)
}

fn number<T: std::str::FromStr>(token: &str, what: &str) -> Result<T, String> {
    token.parse().map_err(|_| format!("expected {what}, found `{token}`"))
}

fn reference(token: &str) -> Result<String, String> {
    let ok = match token.strip_prefix('$') {
        Some(var) => !var.is_empty(),
        None => token.parse::<u64>().is_ok(),
    };
    if ok {
        Ok(token.to_owned())
    } else {
        Err(format!("`{token}` is neither a $variable nor an aggregate id"))
    }
}

fn arity(tokens: &[String], min: usize, max: usize) -> Result<(), String> {
    let n = tokens.len() - 1;
    if n < min || n > max {
        Err(format!("`{}` takes {min}..={max} arguments, found {n}", tokens[0]))
    } else {
        Ok(())
    }
}

fn parse_invoke(bind: Option<String>, rest: &[String]) -> Result<Step, String> {
    let (functionality, mut args) = rest.split_first().ok_or("invoke needs a functionality")?;
    let mut expect = Expectation::Ok;
    if let Some(pos) = args.iter().position(|t| t == "expect") {
        expect = match &args[pos + 1..] {
            [ok] if ok == "ok" => Expectation::Ok,
            [abort, code] if abort == "abort" => {
                Expectation::Abort(ErrorCode::parse(code).ok_or_else(|| format!("unknown error code `{code}`"))?)
            }
            _ => return Err("expected `expect ok` or `expect abort <CODE>`".into()),
        };
        args = &args[..pos];
    }
    Ok(Step::Invoke {
        bind,
        functionality: functionality.clone(),
        args: args.to_vec(),
        expect,
    })
}

fn parse_step(tokens: &[String]) -> Result<Step, String> {
    if tokens.len() >= 2 && tokens[0].starts_with('$') && tokens[1] == "=" {
        let var = tokens[0][1..].to_owned();
        if var.is_empty() {
            return Err("empty variable name".into());
        }
        return match tokens.get(2).map(String::as_str) {
            Some("invoke") => parse_invoke(Some(var), &tokens[3..]),
            _ => Err("only invoke results can be bound".into()),
        };
    }
    let t = tokens;
    match t[0].as_str() {
        "invoke" => parse_invoke(None, &t[1..]),
        "adjust-version" => {
            arity(t, 1, 1)?;
            Ok(Step::AdjustVersion(number(
                t[1].trim_start_matches('+'),
                "a version delta",
            )?))
        }
        "trigger-events" => {
            arity(t, 0, 2)?;
            let kind = match t.get(1).map(String::as_str) {
                None | Some("*") => None,
                Some(k) => Some(k.parse().map_err(|_| format!("unknown event type `{k}`"))?),
            };
            let subscriber = match t.get(2).map(String::as_str) {
                None | Some("*") => None,
                Some(s) => Some(reference(s)?),
            };
            Ok(Step::TriggerEvents { kind, subscriber })
        }
        "event-loop" => {
            arity(t, 1, 2)?;
            match (t[1].as_str(), t.get(2)) {
                ("on", ms) => Ok(Step::EventLoop {
                    enabled: true,
                    interval_ms: ms.map(|m| number(m, "an interval in ms")).transpose()?,
                }),
                ("off", None) => Ok(Step::EventLoop {
                    enabled: false,
                    interval_ms: None,
                }),
                _ => Err("expected `event-loop on [ms]` or `event-loop off`".into()),
            }
        }
        "sleep" => {
            arity(t, 1, 1)?;
            Ok(Step::Sleep(number(&t[1], "milliseconds")?))
        }
        "assert-field" => {
            arity(t, 3, 3)?;
            Ok(Step::AssertField {
                target: reference(&t[1])?,
                path: t[2].clone(),
                expected: t[3].clone(),
            })
        }
        "assert-version" => {
            arity(t, 2, 2)?;
            Ok(Step::AssertVersion {
                target: reference(&t[1])?,
                expected: number(&t[2], "a version")?,
            })
        }
        "assert-handled" => {
            arity(t, 1, 1)?;
            Ok(Step::AssertHandled(number(&t[1], "a count")?))
        }
        other => Err(format!("unknown step `{other}`")),
    }
}

/// Parses a scenario file. Blank and comment-only lines are skipped.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut scenario = Scenario::default();
    for (i, line) in text.lines().enumerate() {
        let fail = |message: String| ParseError { line: i + 1, message };
        let tokens = tokenize(line).map_err(fail)?;
        if tokens.is_empty() {
            continue;
        }
        if tokens[0] == "name" {
            scenario.name = tokens[1..].join(" ");
            continue;
        }
        scenario.steps.push(parse_step(&tokens).map_err(fail)?);
    }
    Ok(scenario)
}
