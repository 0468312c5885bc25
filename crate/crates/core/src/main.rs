fn main() {
    std::process::exit(stab_adams::cli::run(std::env::args_os()));
}
