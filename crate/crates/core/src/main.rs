fn main() {
    std::process::exit(cavfeed::cli::run(std::env::args_os()));
}
