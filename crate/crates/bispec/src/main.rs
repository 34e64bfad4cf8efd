fn main() {
    std::process::exit(bispec::cli::run(std::env::args_os()));
}
