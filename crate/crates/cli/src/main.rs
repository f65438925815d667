fn main() -> std::process::ExitCode {
    constxr_cli::main_with_args()
}
