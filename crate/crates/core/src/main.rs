fn main() {
    std::process::exit(cdwhitney::cli::main_with(std::env::args_os()));
}
