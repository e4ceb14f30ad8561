//! The text normalization pipeline step by step: lowercase, URL and mention
//! removal, non-Latin stripping, digit removal, stopwords, Porter stemming.
//!
//! ```bash
//! cargo run --example preprocess_text
//! ```

use cascadescope::textprep::{normalize, porter, tokenize_stem, StopwordList};

fn main() {
    let stopwords = StopwordList::default_english();
    println!(
        "stopwords: {} base words + extensions {:?}\n",
        stopwords.base_len(),
        stopwords.extensions()
    );

    let tweets = [
        "Check https://t.co/xyz @WHO 19 cases!",
        "Hospitals need more ventilators NOW #covid19",
        "مرحبا doctors are tired 你好",
        "RT @user: masks and ICU beds running out…",
    ];
    for tweet in tweets {
        let cleaned = normalize(tweet);
        let tokens = tokenize_stem(&cleaned, &stopwords);
        println!("raw:     {tweet}");
        println!("cleaned: {cleaned}");
        println!("tokens:  {tokens:?}\n");
    }

    for word in [
        "hospitals",
        "ventilators",
        "doctors",
        "relational",
        "stayhome",
    ] {
        println!("stem({word}) = {}", porter::stem(word));
    }
}
