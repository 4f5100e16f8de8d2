fn main() {
    std::process::exit(facetforge::cli::run(std::env::args_os()));
}
