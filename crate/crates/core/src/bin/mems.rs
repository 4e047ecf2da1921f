fn main() {
    std::process::exit(mems_core::app::main_with_args(std::env::args_os()));
}
