fn main() -> std::process::ExitCode {
    swingleg_cli::main_with_exit_code()
}
