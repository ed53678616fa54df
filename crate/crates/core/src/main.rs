fn main() {
    std::process::exit(gcrkit::cli::run(std::env::args_os()));
}
