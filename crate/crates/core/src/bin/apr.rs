fn main() -> std::process::ExitCode {
    apr_core::cli::main_with_args(std::env::args_os())
}
