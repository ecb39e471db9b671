fn main() {
    std::process::exit(cif::cli::run(std::env::args_os()));
}
