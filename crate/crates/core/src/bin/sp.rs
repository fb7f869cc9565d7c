fn main() {
    std::process::exit(sp_core::shell::main());
}
