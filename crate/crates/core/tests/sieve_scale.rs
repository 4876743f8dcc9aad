use narrowlab_core::FactorSieve;

#[test]
fn prime_count_to_ten_million() {
    let s = FactorSieve::new(10_000_000).unwrap();
    assert_eq!(s.prime_count(), 664_579);
    assert_eq!(FactorSieve::segmented(10_000_000, 1 << 16).unwrap(), s);
}

// needs about 400 MB
#[test]
#[ignore]
fn prime_count_to_hundred_million() {
    assert_eq!(FactorSieve::new(100_000_000).unwrap().prime_count(), 5_761_455);
}
