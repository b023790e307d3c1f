fn main() {
    std::process::exit(lsmlab::cli::run(std::env::args_os()));
}
