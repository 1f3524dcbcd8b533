//! The device command language: parse, print, validate.
//!
//! cargo run --example command_language -- 'go(100, -100, 800)'

use curio::command::{self, CommandAst};
use curio::sim::RobotParams;

fn show(src: &str, params: &RobotParams) {
    match command::parse(src) {
        Ok(ast) => {
            let verdict = match command::validate(&ast, params) {
                Ok(()) => "valid".to_string(),
                Err(e) => format!("rejected by device: {e}"),
            };
            println!("{src:<24} -> {ast:<20} {verdict}");
        }
        Err(e) => println!("{src:<24} -> err {} at {}: {}", e.kind, e.position, e.message),
    }
}

fn main() {
    let params = RobotParams::default();
    let args: Vec<String> = std::env::args().skip(1).collect();
    if !args.is_empty() {
        for a in &args {
            show(a, &params);
        }
        return;
    }
    for src in [
        "go(1000, 1000, 1000)",
        "go(100,-100)",
        "  stop ( )  ",
        "go(0,0,5000)",
        "go(1,2",
        "move(1,2)",
        "go(1,2,0)",
        "go(99999999,0)",
    ] {
        show(src, &params);
    }
    let ast = CommandAst::Stop;
    assert_eq!(command::parse(&command::format(&ast)).unwrap(), ast);
}
