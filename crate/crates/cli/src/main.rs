fn main() {
    std::process::exit(roughbook_cli::main_with(std::env::args_os()));
}
