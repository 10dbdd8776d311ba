fn main() -> std::process::ExitCode {
    weakmeas::cli::main()
}
