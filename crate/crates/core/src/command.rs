//! The device command language.
//!
//! Commands are single-line function calls over integer arguments:
//!
//! ```text
//! go(left_steps, right_steps)
//! go(left_steps, right_steps, speed)
//! stop()
//! ```
//!
//! Negative step counts reverse the wheel. The speed, when omitted, is filled
//! in by the device (see [`crate::sim::RobotParams::default_speed`]); the
//! parser itself applies no policy beyond the sanity bounds below.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sim::RobotParams;

/// Longest command line accepted, in bytes.
pub const MAX_COMMAND_LEN: usize = 256;

/// Sanity bound on the magnitude of a step count.
pub const MAX_STEPS: i32 = 1_000_000;

/// A parsed `go` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MotionCommand {
    pub left_steps: i32,
    pub right_steps: i32,
    /// Steps per second shared by both wheels.
    pub speed: Option<u32>,
}

impl MotionCommand {
    pub fn new(left_steps: i32, right_steps: i32, speed: Option<u32>) -> Self {
        Self {
            left_steps,
            right_steps,
            speed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CommandAst {
    Go(MotionCommand),
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    UnknownFunction,
    BadArity,
    BadArgument,
    Malformed,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::UnknownFunction => "UnknownFunction",
            ErrorKind::BadArity => "BadArity",
            ErrorKind::BadArgument => "BadArgument",
            ErrorKind::Malformed => "Malformed",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "UnknownFunction" => Ok(ErrorKind::UnknownFunction),
            "BadArity" => Ok(ErrorKind::BadArity),
            "BadArgument" => Ok(ErrorKind::BadArgument),
            "Malformed" => Ok(ErrorKind::Malformed),
            _ => Err(()),
        }
    }
}

/// A rejected command. `position` is a byte offset into the input and never
/// exceeds its length.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at byte {position}: {message}")]
pub struct ParseError {
    pub kind: ErrorKind,
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(kind: ErrorKind, position: usize, message: impl Into<String>) -> Self {
        Self {
            kind,
            position,
            message: message.into(),
        }
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
    }

    fn take_while(&mut self, pred: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&pred) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }
}

/// Parses raw link bytes. Invalid UTF-8 is reported as `Malformed` at the first
/// bad byte.
pub fn parse_bytes(bytes: &[u8]) -> Result<CommandAst, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(e) => Err(ParseError::new(
            ErrorKind::Malformed,
            e.valid_up_to(),
            "input is not valid UTF-8",
        )),
    }
}

pub fn parse(text: &str) -> Result<CommandAst, ParseError> {
    if text.len() > MAX_COMMAND_LEN {
        return Err(ParseError::new(
            ErrorKind::Malformed,
            MAX_COMMAND_LEN,
            format!("command longer than {MAX_COMMAND_LEN} bytes"),
        ));
    }
    let mut cur = Cursor { src: text, pos: 0 };
    cur.skip_ws();
    let name_pos = cur.pos;
    let name = cur.take_while(|b| b.is_ascii_alphanumeric() || b == b'_');
    if name.is_empty() {
        return Err(ParseError::new(
            ErrorKind::Malformed,
            name_pos,
            "expected a function name",
        ));
    }
    cur.skip_ws();
    if cur.peek() != Some(b'(') {
        return Err(ParseError::new(ErrorKind::Malformed, cur.pos, "expected '('"));
    }
    cur.pos += 1;

    // Collect raw argument tokens up to the closing paren.
    let mut args: Vec<(usize, &str)> = Vec::new();
    cur.skip_ws();
    if cur.peek() == Some(b')') {
        cur.pos += 1;
    } else {
        loop {
            cur.skip_ws();
            let arg_pos = cur.pos;
            let token = cur.take_while(|b| !matches!(b, b',' | b')' | b'(' | b' ' | b'\t'));
            cur.skip_ws();
            args.push((arg_pos, token));
            match cur.peek() {
                Some(b',') => cur.pos += 1,
                Some(b')') => {
                    cur.pos += 1;
                    break;
                }
                Some(b'(') => {
                    return Err(ParseError::new(
                        ErrorKind::Malformed,
                        cur.pos,
                        "unexpected '(' in argument list",
                    ))
                }
                Some(_) => {
                    return Err(ParseError::new(
                        ErrorKind::BadArgument,
                        arg_pos,
                        "argument is not a single integer",
                    ))
                }
                None => {
                    return Err(ParseError::new(
                        ErrorKind::Malformed,
                        cur.pos,
                        "unbalanced parentheses",
                    ))
                }
            }
        }
    }
    cur.skip_ws();
    if !cur.at_end() {
        return Err(ParseError::new(
            ErrorKind::Malformed,
            cur.pos,
            "trailing characters after command",
        ));
    }

    match name {
        "stop" => {
            if !args.is_empty() {
                return Err(ParseError::new(
                    ErrorKind::BadArity,
                    name_pos,
                    format!("stop takes no arguments, got {}", args.len()),
                ));
            }
            Ok(CommandAst::Stop)
        }
        "go" => {
            if args.len() != 2 && args.len() != 3 {
                return Err(ParseError::new(
                    ErrorKind::BadArity,
                    name_pos,
                    format!("go takes 2 or 3 arguments, got {}", args.len()),
                ));
            }
            let left = steps_arg(args[0], "left_steps")?;
            let right = steps_arg(args[1], "right_steps")?;
            let speed = match args.get(2) {
                Some(&(pos, token)) => {
                    let v = integer(pos, token, "speed")?;
                    if !(1..=u32::MAX as i64).contains(&v) {
                        return Err(ParseError::new(
                            ErrorKind::BadArgument,
                            pos,
                            "speed must be a positive integer",
                        ));
                    }
                    Some(v as u32)
                }
                None => None,
            };
            Ok(CommandAst::Go(MotionCommand::new(left, right, speed)))
        }
        other => Err(ParseError::new(
            ErrorKind::UnknownFunction,
            name_pos,
            format!("unknown function `{other}`"),
        )),
    }
}

fn integer(pos: usize, token: &str, field: &str) -> Result<i64, ParseError> {
    let digits = token.strip_prefix('-').unwrap_or(token);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseError::new(
            ErrorKind::BadArgument,
            pos,
            format!("{field}: `{token}` is not an integer"),
        ));
    }
    token.parse::<i64>().map_err(|_| {
        ParseError::new(
            ErrorKind::BadArgument,
            pos,
            format!("{field}: `{token}` is out of range"),
        )
    })
}

fn steps_arg((pos, token): (usize, &str), field: &str) -> Result<i32, ParseError> {
    let v = integer(pos, token, field)?;
    if v.abs() > MAX_STEPS as i64 {
        return Err(ParseError::new(
            ErrorKind::BadArgument,
            pos,
            format!("{field}: |{v}| exceeds {MAX_STEPS}"),
        ));
    }
    Ok(v as i32)
}

/// Canonical form: no spaces, speed omitted when absent.
pub fn format(ast: &CommandAst) -> String {
    ast.to_string()
}

impl fmt::Display for CommandAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandAst::Stop => f.write_str("stop()"),
            CommandAst::Go(MotionCommand {
                left_steps,
                right_steps,
                speed: Some(speed),
            }) => write!(f, "go({left_steps},{right_steps},{speed})"),
            CommandAst::Go(MotionCommand {
                left_steps,
                right_steps,
                speed: None,
            }) => write!(f, "go({left_steps},{right_steps})"),
        }
    }
}

impl FromStr for CommandAst {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse(s)
    }
}

/// Checks a parsed command against the robot's limits.
pub fn validate(ast: &CommandAst, limits: &RobotParams) -> Result<(), ParseError> {
    let CommandAst::Go(cmd) = ast else {
        return Ok(());
    };
    for (field, steps) in [("left_steps", cmd.left_steps), ("right_steps", cmd.right_steps)] {
        if steps.unsigned_abs() > MAX_STEPS as u32 {
            return Err(ParseError::new(
                ErrorKind::BadArgument,
                0,
                format!("{field}: |{steps}| exceeds {MAX_STEPS}"),
            ));
        }
    }
    if let Some(speed) = cmd.speed {
        if speed == 0 || speed > limits.max_speed {
            return Err(ParseError::new(
                ErrorKind::BadArgument,
                0,
                format!("speed: {speed} outside [1, {}]", limits.max_speed),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn go(l: i32, r: i32, s: Option<u32>) -> CommandAst {
        CommandAst::Go(MotionCommand::new(l, r, s))
    }

    #[test]
    fn parses_the_forward_example() {
        assert_eq!(parse("go(1000, 1000, 1000)"), Ok(go(1000, 1000, Some(1000))));
    }

    #[test]
    fn speed_is_optional() {
        assert_eq!(parse("go(0,0)"), Ok(go(0, 0, None)));
        assert_eq!(parse("go(100, -100)"), Ok(go(100, -100, None)));
    }

    #[test]
    fn stop_parses() {
        assert_eq!(parse("stop()"), Ok(CommandAst::Stop));
        assert_eq!(parse(" stop ( ) "), Ok(CommandAst::Stop));
    }

    #[test]
    fn unknown_function_points_at_name() {
        let err = parse("fly(1)").unwrap_err();
        assert_eq!(err.kind, ErrorKind::UnknownFunction);
        assert_eq!(err.position, 0);
    }

    #[test]
    fn arity_errors() {
        assert_eq!(parse("go(1)").unwrap_err().kind, ErrorKind::BadArity);
        assert_eq!(parse("go(1,2,3,4)").unwrap_err().kind, ErrorKind::BadArity);
        assert_eq!(parse("go()").unwrap_err().kind, ErrorKind::BadArity);
        assert_eq!(parse("stop(1)").unwrap_err().kind, ErrorKind::BadArity);
    }

    #[test]
    fn argument_errors() {
        let err = parse("go(1, x)").unwrap_err();
        assert_eq!(err.kind, ErrorKind::BadArgument);
        assert_eq!(err.position, 6);
        assert_eq!(parse("go(1.5,2)").unwrap_err().kind, ErrorKind::BadArgument);
        assert_eq!(parse("go(1,,2)").unwrap_err().kind, ErrorKind::BadArgument);
        assert_eq!(parse("go(1 2,3)").unwrap_err().kind, ErrorKind::BadArgument);
        assert_eq!(parse("go(2000000,0)").unwrap_err().kind, ErrorKind::BadArgument);
        assert_eq!(parse("go(1,1,0)").unwrap_err().kind, ErrorKind::BadArgument);
        assert_eq!(parse("go(1,1,-5)").unwrap_err().kind, ErrorKind::BadArgument);
        assert_eq!(
            parse("go(99999999999999999999,1)").unwrap_err().kind,
            ErrorKind::BadArgument
        );
    }

    #[test]
    fn malformed_inputs() {
        for input in ["go(1,2", "go 1,2)", "go(1,2))", "go(1,2);", "", "   ", "(1,2)", "go((1),2)"] {
            let err = parse(input).unwrap_err();
            assert_eq!(err.kind, ErrorKind::Malformed, "{input:?}");
            assert!(err.position <= input.len());
        }
        let long = format!("go(1,{})", " ".repeat(300));
        assert_eq!(parse(&long).unwrap_err().kind, ErrorKind::Malformed);
    }

    #[test]
    fn invalid_utf8_is_malformed() {
        let err = parse_bytes(b"go(\xff,1)").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Malformed);
        assert_eq!(err.position, 3);
    }

    #[test]
    fn canonical_formatting() {
        assert_eq!(format(&go(1000, 1000, Some(1000))), "go(1000,1000,1000)");
        assert_eq!(format(&CommandAst::Stop), "stop()");
        assert_eq!(format(&go(-5, 5, None)), "go(-5,5)");
    }

    #[test]
    fn validation_against_limits() {
        let params = RobotParams::default();
        let err = validate(&go(100, 100, Some(5000)), &params).unwrap_err();
        assert_eq!(err.kind, ErrorKind::BadArgument);
        assert!(err.message.starts_with("speed"));
        assert!(validate(&go(0, 0, None), &params).is_ok());
        let err = validate(&go(2_000_000, 0, None), &params).unwrap_err();
        assert!(err.message.starts_with("left_steps"));
        assert!(validate(&CommandAst::Stop, &params).is_ok());
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(parse("go( 1 , 2 , 3 )"), parse("go(1,2,3)"));
        assert_eq!(parse("\tgo (1,\t2) "), parse("go(1,2)"));
    }

    pub(crate) fn any_ast() -> impl Strategy<Value = CommandAst> {
        prop_oneof![
            1 => Just(CommandAst::Stop),
            8 => (
                -MAX_STEPS..=MAX_STEPS,
                -MAX_STEPS..=MAX_STEPS,
                proptest::option::of(1u32..=u32::MAX)
            )
                .prop_map(|(l, r, s)| go(l, r, s)),
        ]
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(ast in any_ast()) {
            prop_assert_eq!(parse(&format(&ast)), Ok(ast));
        }

        #[test]
        fn parse_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..=MAX_COMMAND_LEN)) {
            if let Err(e) = parse_bytes(&bytes) {
                prop_assert!(e.position <= bytes.len());
            }
        }

        #[test]
        fn parse_is_total_on_grammar_like_text(s in "[gostp(), 0-9-]{0,64}") {
            if let Err(e) = parse(&s) {
                prop_assert!(e.position <= s.len());
            }
        }
    }
}
