fn main() {
    std::process::exit(dtrunc::cli::run(std::env::args_os()));
}
