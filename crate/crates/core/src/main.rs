fn main() {
    std::process::exit(pottslab_core::cli::main());
}
