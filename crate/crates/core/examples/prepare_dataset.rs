//! Loads tab-separated triplet files, keeps the frequent relations, writes
//! the filtered splits and prints statistics and relation categories.
//!
//! cargo run --example prepare_dataset -- [train valid test [min_count]]
//!
//! Without arguments a small generated dataset is written to a temporary
//! directory and used instead.

use std::path::PathBuf;

use relembed::data::{classify_relations, RelationCategory, DEFAULT_CATEGORY_THRESHOLD};
use relembed::synthetic::random_kb;
use relembed::{Split, TripletStore};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tmp = tempfile::tempdir()?;
    let (paths, min_count): ([PathBuf; 3], usize) = if args.len() >= 3 {
        let min = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(100);
        ([0, 1, 2].map(|i| PathBuf::from(&args[i])), min)
    } else {
        let demo = random_kb(40, 8, 400, 7)?;
        let paths = Split::ALL.map(|s| tmp.path().join(format!("{}.txt", s.name())));
        for (split, path) in Split::ALL.iter().zip(&paths) {
            demo.write_split(*split, path)?;
        }
        (paths, 30)
    };

    let [train, valid, test] = paths;
    let store = TripletStore::load(&train, &valid, &test)?;
    println!("loaded:\n{}", store.stats());

    let filtered = store.filter_frequent_relations(min_count);
    println!("relations with at least {min_count} training triplets:\n{}", filtered.stats());

    if filtered.num_relations() > 0 {
        let table = classify_relations(&filtered, DEFAULT_CATEGORY_THRESHOLD)?;
        for category in RelationCategory::ALL {
            let n = table.categories.iter().filter(|&&c| c == category).count();
            println!("{:8} {n}", category.label());
        }
    }

    let out = tmp.path().join("prepared");
    std::fs::create_dir_all(&out)?;
    for split in Split::ALL {
        filtered.write_split(split, out.join(format!("{}.tsv", split.name())))?;
    }
    println!("wrote filtered splits to {}", out.display());
    Ok(())
}
