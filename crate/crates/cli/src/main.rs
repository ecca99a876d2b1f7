fn main() -> std::process::ExitCode {
    sburgers_cli::run_cli(std::env::args_os())
}
