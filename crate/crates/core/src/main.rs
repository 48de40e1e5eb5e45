fn main() -> std::process::ExitCode {
    mechgraph::cli::main()
}
