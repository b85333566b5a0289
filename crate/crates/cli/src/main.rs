fn main() {
    std::process::exit(stcomb_cli::main_from_env());
}
