fn main() {
    std::process::exit(estraus::cli::run(std::env::args_os()));
}
