fn main() {
    std::process::exit(bslab::main_with(std::env::args_os().collect()));
}
