fn main() {
    std::process::exit(monofix::cli::main_with_args(std::env::args_os()));
}
