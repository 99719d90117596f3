fn main() {
    std::process::exit(spiking_reservoir::cli::main_with_args(std::env::args_os()));
}
