use std::process::ExitCode;

fn main() -> ExitCode {
    chsh_bounds::cli::main_entry()
}
