fn main() -> std::process::ExitCode {
    headforge::cli::run()
}
