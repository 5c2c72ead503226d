fn main() {
    std::process::exit(ddlab::cli::main(std::env::args_os()));
}
