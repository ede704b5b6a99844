fn main() {
    std::process::exit(bolocor::cli::run())
}
