fn main() {
    std::process::exit(pnrsynth::cli::run(std::env::args_os()));
}
