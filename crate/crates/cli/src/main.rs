fn main() {
    std::process::exit(dmi_cli::run(std::env::args_os()));
}
