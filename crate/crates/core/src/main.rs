fn main() {
    std::process::exit(amrnn::cli::main_with_args(std::env::args_os()));
}
