fn main() {
    eprintln!("qsolve: not yet wired up");
    std::process::exit(2);
}
