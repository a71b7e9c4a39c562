fn main() {
    std::process::exit(vector_epi::cli::main_with_args(std::env::args_os()));
}
