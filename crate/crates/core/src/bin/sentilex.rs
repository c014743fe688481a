fn main() {
    std::process::exit(sentilex::cli::run(std::env::args_os()));
}
