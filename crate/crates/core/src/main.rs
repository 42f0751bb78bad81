fn main() {
    std::process::exit(porocell::cli::main_with_args(std::env::args_os()));
}
