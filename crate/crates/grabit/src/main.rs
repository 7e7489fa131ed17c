fn main() {
    std::process::exit(grabit::run());
}
