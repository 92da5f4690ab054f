fn main() {
    std::process::exit(lapt::cli::main_with_args(std::env::args_os()));
}
