fn main() {
    std::process::exit(jamlab::cli::main_from(std::env::args_os()));
}
