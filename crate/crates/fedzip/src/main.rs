fn main() {
    std::process::exit(fedzip::cli::run(std::env::args_os()));
}
