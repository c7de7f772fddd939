fn main() -> std::process::ExitCode {
    quakener::cli::main()
}
