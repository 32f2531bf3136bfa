fn main() {
    std::process::exit(hslg_lab::cli::main_from_env());
}
