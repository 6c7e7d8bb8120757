fn main() {
    std::process::exit(socnav::cli::run(std::env::args_os()));
}
