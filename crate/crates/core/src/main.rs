fn main() {
    std::process::exit(acsense::cli::main_with(std::env::args_os()));
}
