fn main() {
    std::process::exit(scatter_tomo::cli::main(std::env::args_os()));
}
