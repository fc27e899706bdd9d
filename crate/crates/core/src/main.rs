fn main() {
    hintsmith::cli::main()
}
