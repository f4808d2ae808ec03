fn main() {
    std::process::exit(structsynth::cli::main_with_args(std::env::args_os()));
}
