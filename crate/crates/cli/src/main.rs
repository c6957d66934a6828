fn main() {
    std::process::exit(actuator_lab::main_with_args(std::env::args_os()));
}
