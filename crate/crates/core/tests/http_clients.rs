mod common;

use std::time::Duration;

use common::{chat_reply, dead_url, embedding_reply, StubServer};
use gradprint::clients::{
    collect_responses, complete, embed_text, ChatClient, ChatEndpoint, ClientError, Embedder, EmbeddingClient,
    EmbeddingEndpoint,
};
use gradprint::lexical::QuerySet;

const FAST: Duration = Duration::from_millis(1);

#[test]
fn chat_returns_content_and_sends_wire_fields() {
    let server = StubServer::start(vec![(200, chat_reply("OK"))]);
    let mut ep = ChatEndpoint::new(server.url.clone(), "tiny-model");
    ep.auth_token_env = Some("GRADPRINT_TEST_CHAT_TOKEN".into());
    std::env::set_var("GRADPRINT_TEST_CHAT_TOKEN", "sekret");
    assert_eq!(complete(&ep, "def f(x):").unwrap(), "OK");

    let reqs = server.requests();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].path, "/v1/chat/completions");
    assert_eq!(reqs[0].header("authorization"), Some("Bearer sekret"));
    let body = reqs[0].json();
    assert_eq!(body["model"], "tiny-model");
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "def f(x):");
    assert_eq!(body["temperature"], 0.7);
    assert_eq!(body["max_tokens"], 256);
}

#[test]
fn retries_server_errors_then_succeeds() {
    let err = (500, "{}".to_string());
    let server = StubServer::start(vec![err.clone(), err.clone(), err, (200, chat_reply("OK"))]);
    let client = ChatClient::new(ChatEndpoint::new(server.url.clone(), "m")).unwrap().with_backoff(FAST);
    assert_eq!(client.send("hi").unwrap(), "OK");
    assert_eq!(client.retry_count(), 3);
    assert_eq!(server.requests().len(), 4);
}

#[test]
fn gives_up_after_three_retries() {
    let server = StubServer::start(vec![(503, "busy".to_string())]);
    let client = ChatClient::new(ChatEndpoint::new(server.url.clone(), "m")).unwrap().with_backoff(FAST);
    match client.send("hi") {
        Err(ClientError::Status { status: 503, body }) => assert_eq!(body, "busy"),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(client.retry_count(), 3);
    assert_eq!(server.requests().len(), 4);
}

#[test]
fn client_errors_are_not_retried() {
    let server = StubServer::start(vec![(404, "nope".to_string())]);
    let client = ChatClient::new(ChatEndpoint::new(server.url.clone(), "m")).unwrap().with_backoff(FAST);
    assert!(matches!(client.send("hi"), Err(ClientError::Status { status: 404, .. })));
    assert_eq!(client.retry_count(), 0);
}

#[test]
fn malformed_and_empty_replies_are_distinguished() {
    let server = StubServer::start(vec![(200, r#"{"id": "x"}"#.to_string())]);
    let ep = ChatEndpoint::new(server.url.clone(), "m");
    assert!(matches!(complete(&ep, "hi"), Err(ClientError::Malformed(_))));

    let server = StubServer::start(vec![(200, chat_reply(""))]);
    let ep = ChatEndpoint::new(server.url.clone(), "m");
    assert!(matches!(complete(&ep, "hi"), Err(ClientError::EmptyContent)));

    let server = StubServer::start(vec![(200, "not json".to_string())]);
    let ep = ChatEndpoint::new(server.url.clone(), "m");
    assert!(matches!(complete(&ep, "hi"), Err(ClientError::Malformed(_))));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let client = ChatClient::new(ChatEndpoint::new(dead_url(), "m")).unwrap().with_backoff(FAST);
    match client.send("hi") {
        Err(ClientError::Transport { attempts, .. }) => assert_eq!(attempts, 4),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn embedding_roundtrip_and_dimension_check() {
    let v = [0.25, -1.0, 0.5, 3.0];
    let server = StubServer::start(vec![(200, embedding_reply(&v))]);
    let ep = EmbeddingEndpoint::new(server.url.clone(), "mpnet", 4);
    assert_eq!(embed_text(&ep, "text").unwrap(), v);
    assert_eq!(embed_text(&ep, "text").unwrap(), embed_text(&ep, "text").unwrap());
    let req = &server.requests()[0];
    assert_eq!(req.path, "/v1/embeddings");
    assert_eq!(req.json(), serde_json::json!({"model": "mpnet", "input": "text"}));

    let server = StubServer::start(vec![(200, embedding_reply(&v[..3]))]);
    let client = EmbeddingClient::new(EmbeddingEndpoint::new(server.url.clone(), "mpnet", 4)).unwrap();
    assert_eq!(client.id(), "mpnet");
    assert!(matches!(
        client.embed("text"),
        Err(ClientError::DimensionMismatch { expected: 4, found: 3 })
    ));
}

#[test]
fn empty_base_url_is_rejected() {
    assert!(matches!(
        ChatClient::new(ChatEndpoint::new("", "m")),
        Err(ClientError::InvalidConfig(_))
    ));
    assert!(matches!(
        EmbeddingClient::new(EmbeddingEndpoint::new("http://x", "m", 0)),
        Err(ClientError::InvalidConfig(_))
    ));
}

#[test]
fn collection_over_http_stores_every_repeat() {
    let server = StubServer::start(vec![(200, chat_reply("pass"))]);
    let client = ChatClient::new(ChatEndpoint::new(server.url.clone(), "m")).unwrap();
    let qs = QuerySet::from_parts(
        gradprint::lexical::QuerySpec {
            n: 1,
            m: 1,
            ..Default::default()
        },
        vec!["a b".into()],
        vec![vec!["a c".into()]],
    )
    .unwrap();
    let rs = collect_responses(&client, &qs, 3, 200, 2).unwrap();
    assert_eq!(rs.total_calls, 6);
    assert_eq!(server.requests().len(), 6);
    for id in qs.ids() {
        assert_eq!(rs.get(id).unwrap(), ["pass", "pass", "pass"]);
    }
}
