fn main() -> std::process::ExitCode {
    navier_cpi::cli::main()
}
