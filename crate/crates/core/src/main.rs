fn main() -> std::process::ExitCode {
    gslab::cli::main_with_args(std::env::args_os())
}
