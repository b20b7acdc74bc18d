use dirac_bench::corpus::run_corpus;

fn main() {
    match run_corpus(200, 1, 16, 9) {
        Ok(rep) => println!("{}", serde_json::to_string_pretty(&rep).unwrap()),
        Err(e) => println!("corpus error: {}", e),
    }
}
