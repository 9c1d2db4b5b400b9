fn main() {
    std::process::exit(uipilot::run());
}
