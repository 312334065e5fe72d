fn main() {
    std::process::exit(bhacs::cli::run(std::env::args_os()));
}
