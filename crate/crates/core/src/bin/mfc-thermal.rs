fn main() {
    std::process::exit(mfc_thermal::cli::main_from_args(std::env::args_os()));
}
