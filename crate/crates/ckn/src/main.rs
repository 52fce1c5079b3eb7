fn main() {
    std::process::exit(ckn::run());
}
