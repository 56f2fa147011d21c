fn main() {
    std::process::exit(estnet::cli::main_with(std::env::args_os()));
}
