use clap::Parser;
use solvmetric_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let outcome = run(&cli);
    for d in &outcome.diagnostics {
        eprintln!("{}: {d}", outcome.command);
    }
    if cli.options.json {
        println!("{}", serde_json::to_string_pretty(&outcome.to_json()).expect("json"));
    } else {
        print!("{}", outcome.to_text());
    }
    std::process::exit(outcome.code());
}
