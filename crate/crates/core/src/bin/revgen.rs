fn main() {
    std::process::exit(revgen::cli::run(std::env::args_os()));
}
