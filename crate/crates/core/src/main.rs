fn main() {
    std::process::exit(fdcoop::cli::main_with_args(std::env::args_os()));
}
