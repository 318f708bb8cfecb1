fn main() {
    std::process::exit(magic_core::cli::main_with_args(std::env::args()));
}
