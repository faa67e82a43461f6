fn main() {
    std::process::exit(mating_lab_cli::run(std::env::args_os()));
}
