fn main() {
    std::process::exit(specscan::cli::run(std::env::args_os()));
}
