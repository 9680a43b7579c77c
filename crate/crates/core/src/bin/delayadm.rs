fn main() {
    std::process::exit(delayadm::cli::run(std::env::args_os()));
}
