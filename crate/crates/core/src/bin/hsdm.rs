fn main() {
    std::process::exit(hsdm::cli::run(std::env::args_os()));
}
