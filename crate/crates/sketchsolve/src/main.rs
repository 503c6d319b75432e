use std::process::exit;

fn main() {
    exit(sketchsolve::cli::cli_main(std::env::args()));
}
