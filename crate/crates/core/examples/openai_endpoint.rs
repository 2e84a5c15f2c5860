//! Fingerprint a live OpenAI-compatible deployment.
//!
//! CHAT_URL=http://localhost:8000 CHAT_MODEL=my-model \
//! EMBED_URL=http://localhost:8001 EMBED_MODEL=all-mpnet-base-v2 \
//! cargo run --example openai_endpoint -- queries.txt
//!
//! The bearer token, if any, is read from OPENAI_API_KEY.

use gradprint::clients::{ChatClient, ChatEndpoint, EmbeddingClient, EmbeddingEndpoint, TextOracle};
use gradprint::fingerprint::{extract_fingerprint, save_fingerprint, ExtractConfig};
use gradprint::lexical::QuerySet;

fn var(name: &str) -> Result<String, String> {
    std::env::var(name).map_err(|_| format!("set {name}"))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let queries = std::env::args().nth(1).ok_or("usage: openai_endpoint QUERIES")?;
    let qs = QuerySet::from_text(&std::fs::read_to_string(queries)?)?;

    let mut chat = ChatEndpoint::new(var("CHAT_URL")?, var("CHAT_MODEL")?);
    chat.auth_token_env = Some("OPENAI_API_KEY".into());
    let mut embed = EmbeddingEndpoint::new(var("EMBED_URL")?, var("EMBED_MODEL")?, 768);
    embed.auth_token_env = Some("OPENAI_API_KEY".into());

    let cfg = ExtractConfig {
        parallelism: 4,
        model: chat.model_id.clone(),
        ..ExtractConfig::default()
    };
    let oracle = TextOracle {
        chat: ChatClient::new(chat)?,
        embedder: EmbeddingClient::new(embed.clone())?,
    };
    let fp = extract_fingerprint(&oracle, &EmbeddingClient::new(embed)?, &qs, &cfg)?;
    let out = format!("{}.zpfp", cfg.model.replace('/', "_"));
    save_fingerprint(&fp, &out)?;
    println!("wrote {out} from {} base queries", fp.meta.n_used);
    Ok(())
}
