//! Gateway behaviour through the public API.

use std::sync::Arc;

use proptest::prelude::*;
use taskalloc::gateway::{
    complete, install_mock, request_body, ChatMessage, CompletionRequest, Decoding, GatewayError, MockEntry,
    ModelBinding, RecordingTransport, ReplayTransport,
};

fn messages(system: &str, user: &str) -> Vec<ChatMessage> {
    vec![ChatMessage::system(system), ChatMessage::user(user)]
}

proptest! {
    #[test]
    fn request_bodies_are_byte_stable(model in "[a-z0-9.-]{1,20}", system in ".{0,80}", user in ".{0,200}",
        temperature in 0.0f64..2.0, max_tokens in 1u32..10_000) {
        let b = ModelBinding::offline(&model);
        let d = Decoding { temperature, max_tokens };
        let first = request_body(&b, &messages(&system, &user), d);
        let second = request_body(&b.clone(), &messages(&system, &user), d);
        prop_assert_eq!(&first, &second);
        let parsed: CompletionRequest = serde_json::from_str(&first).unwrap();
        prop_assert_eq!(parsed.model, model);
        prop_assert_eq!(parsed.messages[1].content.as_str(), user.as_str());
    }

    #[test]
    fn reported_usage_passes_through(tin in 0u64..1_000_000, tout in 0u64..1_000_000, text in "[ -~]{0,60}") {
        let mock = install_mock(vec![MockEntry::reply(&text, tin, tout)]);
        let r = complete(&mock, &ModelBinding::offline("m"), &messages("s", "u"), Decoding::greedy()).unwrap();
        prop_assert_eq!((r.tokens_in, r.tokens_out), (tin, tout));
        prop_assert_eq!(r.text, text);
    }
}

#[test]
fn transient_failures_retry_then_succeed() {
    let mock = install_mock(vec![
        MockEntry::TransientFailure,
        MockEntry::TransientFailure,
        MockEntry::reply("ok", 5, 1),
    ]);
    let r = complete(&mock, &ModelBinding::offline("m"), &messages("s", "u"), Decoding::greedy()).unwrap();
    assert_eq!(r.attempt, 3);
    assert_eq!(mock.requests().len(), 3);
    assert!(mock.requests().windows(2).all(|w| w[0] == w[1]), "retries resend the same bytes");
}

#[test]
fn retries_are_bounded() {
    let mock = install_mock(vec![MockEntry::TransientFailure; 10]);
    let binding = ModelBinding { max_retries: 2, ..ModelBinding::offline("m") };
    let err = complete(&mock, &binding, &messages("s", "u"), Decoding::greedy()).unwrap_err();
    assert!(matches!(err, GatewayError::RetriesExhausted { attempts: 3, .. }));
    assert_eq!(mock.remaining(), 7);
}

#[test]
fn malformed_is_not_retried() {
    let mock = install_mock(vec![MockEntry::Malformed, MockEntry::reply("late", 1, 1)]);
    let err = complete(&mock, &ModelBinding::offline("m"), &messages("s", "u"), Decoding::greedy()).unwrap_err();
    assert!(matches!(err, GatewayError::MalformedResponse(_)));
    assert_eq!(mock.remaining(), 1);
}

#[test]
fn recorded_exchanges_replay_exactly() {
    let inner = Arc::new(install_mock(vec![MockEntry::reply("first", 10, 2), MockEntry::reply("second", 20, 4)]));
    let recorder = RecordingTransport::new(inner);
    let b = ModelBinding::offline("gpt-4o");
    let a1 = complete(&recorder, &b, &messages("s", "one"), Decoding::greedy()).unwrap();
    let a2 = complete(&recorder, &b, &messages("s", "two"), Decoding::greedy()).unwrap();

    let replay = ReplayTransport::from_jsonl(&recorder.to_jsonl()).unwrap();
    // Order does not matter; the request bytes select the response.
    let r2 = complete(&replay, &b, &messages("s", "two"), Decoding::greedy()).unwrap();
    let r1 = complete(&replay, &b, &messages("s", "one"), Decoding::greedy()).unwrap();
    assert_eq!((r1.text, r1.tokens_in), (a1.text, a1.tokens_in));
    assert_eq!((r2.text, r2.tokens_out), (a2.text, a2.tokens_out));
    assert!(complete(&replay, &b, &messages("s", "three"), Decoding::greedy()).is_err());
}
