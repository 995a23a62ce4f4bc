fn main() {
    // CLI wiring lands with the driver modules.
    eprintln!("dihedral-shock: CLI not yet wired");
    std::process::exit(2);
}
