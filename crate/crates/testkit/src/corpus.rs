//! Random article corpora in the `<name>.txt` + `<name>.meta.json` layout.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const TOPICS: &[&str] = &["remote work", "urban cycling", "solar power", "coffee consumption", "electric cars", "recycling"];
const PLACES: &[&str] = &["the U.S.", "Canada", "Germany", "Japan", "Brazil", "India"];
const GROUPS: &[&str] = &["adults", "students", "households", "employers", "cities", "retailers"];

fn sentence(rng: &mut ChaCha8Rng, topic: &str) -> String {
    let place = PLACES.choose(rng).unwrap();
    let group = GROUPS.choose(rng).unwrap();
    let year = rng.random_range(2010..=2024);
    let pct = rng.random_range(10..=900) as f64 / 10.0;
    let count = rng.random_range(2..=95) as f64 / 10.0;
    let money = rng.random_range(5..=500) * 10;
    match rng.random_range(0..6) {
        0 => format!("In {year}, about {pct}% of {group} in {place} reported interest in {topic}."),
        1 => format!("Roughly {count} million {group} in {place} were involved with {topic} in {year}."),
        2 => format!("Spending on {topic} in {place} reached ${money} per household in {year}."),
        3 => {
            let later = year + rng.random_range(1..=5);
            let pct2 = rng.random_range(10..=900) as f64 / 10.0;
            format!("Support for {topic} among {group} moved from {pct}% in {year} to {pct2}% in {later}.")
        }
        4 => format!("A survey of {group} found that {pct}% cite cost as the main barrier to {topic}."),
        _ => format!("Observers in {place} describe {topic} as a long-running public debate."),
    }
}

/// Writes a corpus of 2-5 articles with number-bearing sentences about a
/// random topic and returns the query.
pub fn write_random_corpus(dir: &Path, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topic = *TOPICS.choose(&mut rng).unwrap();
    std::fs::create_dir_all(dir).unwrap();
    let n_articles = rng.random_range(2..=5);
    for a in 0..n_articles {
        let n_paras = rng.random_range(2..=5);
        let paras: Vec<String> = (0..n_paras)
            .map(|_| {
                let n = rng.random_range(1..=3);
                (0..n).map(|_| sentence(&mut rng, topic)).collect::<Vec<_>>().join(" ")
            })
            .collect();
        let name = format!("r{a}");
        std::fs::write(dir.join(format!("{name}.txt")), paras.join("\n\n")).unwrap();
        let domain = format!("site{a}.example.com");
        let meta = json!({
            "title": format!("Notes on {topic} #{a}"),
            "url": format!("https://{domain}/articles/{seed}-{a}"),
            "year": rng.random_range(2015..=2024),
            "domain": domain,
        });
        std::fs::write(dir.join(format!("{name}.meta.json")), meta.to_string()).unwrap();
    }
    format!("{topic} statistics")
}
