fn main() {
    std::process::exit(rotor_stages::cli::main_with_args(std::env::args_os()));
}
