fn main() {
    std::process::exit(gpilab::main_with_args(std::env::args_os()));
}
