fn main() {
    std::process::exit(hawkes_diffusive::cli::main_from(std::env::args_os()));
}
