fn main() -> std::process::ExitCode {
    phaseless::cli::main()
}
