//! Build a query set from a word-vector table and a code corpus.
//!
//! cargo run --example build_queries -- [WORD_VECTORS] [CORPUS]

use std::path::PathBuf;

use gradprint::lexical::{build_query_set, load_corpus, QuerySpec, WordVectorTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let mut args = std::env::args().skip(1);
    let vectors = args.next().map(PathBuf::from).unwrap_or_else(|| data.join("words50.txt"));
    let corpus = args.next().map(PathBuf::from).unwrap_or_else(|| data.join("corpus5.txt"));

    let table = WordVectorTable::load(&vectors)?;
    let snippets = load_corpus(&corpus)?;
    let spec = QuerySpec::default();
    let qs = build_query_set(&snippets, &table, &spec)?;

    println!("{} words x {} dims, {} snippets", table.len(), table.dim(), snippets.len());
    println!("content hash {}", qs.content_hash);
    print!("{}", qs.to_text());
    Ok(())
}
