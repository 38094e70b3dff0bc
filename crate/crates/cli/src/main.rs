fn main() {
    eprintln!("herzflow: not wired up yet");
    std::process::exit(1);
}
