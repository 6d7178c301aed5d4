fn main() {
    std::process::exit(ogr_core::cli::main_with_env());
}
