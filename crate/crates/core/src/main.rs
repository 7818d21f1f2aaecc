fn main() {
    std::process::exit(dpd_doa::cli::main_with_args(std::env::args_os()));
}
