fn main() {
    std::process::exit(eventsel::cli::run(std::env::args_os()));
}
