fn main() {
    std::process::exit(activeft::cli::run(std::env::args_os()));
}
