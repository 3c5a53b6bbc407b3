fn main() -> std::process::ExitCode {
    stable_tree::cli::main()
}
