fn main() {
    std::process::exit(htp::cli::main(std::env::args_os()));
}
