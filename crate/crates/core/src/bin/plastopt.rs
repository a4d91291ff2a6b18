fn main() {
    std::process::exit(plastopt::diagnostics::cli::cli_main(std::env::args_os()));
}
