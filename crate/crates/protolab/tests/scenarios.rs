use coffeescan_protolab::scenario::{run, Defense, Leak, Outcome, Scenario, ScenarioKind, Transcript};
use serde_json::Value;

fn play(kind: ScenarioKind, leak: Leak, defense: Defense, tweak: impl FnOnce(&mut Scenario)) -> Transcript {
    let mut s = Scenario::new(kind, leak, defense);
    tweak(&mut s);
    run(&s)
}

fn events(t: &Transcript) -> Vec<Value> {
    t.jsonl().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn blocked(t: &Transcript, op: &str, reason: &str) {
    assert_eq!(t.outcome, Outcome::Blocked, "{}", t.jsonl());
    assert_eq!(t.blocked_at.as_deref(), Some(op));
    assert_eq!(t.reason.as_deref(), Some(reason));
}

#[test]
fn hijack_succeeds_iff_mk_leaked_and_undefended() {
    for leak in [Leak::None, Leak::Mk] {
        for defense in [Defense::None, Defense::Integrity] {
            let t = play(ScenarioKind::Hijack, leak, defense, |_| {});
            let want = leak == Leak::Mk && defense == Defense::None;
            assert_eq!(t.outcome == Outcome::Success, want, "{leak:?} {defense:?}\n{}", t.jsonl());
        }
    }
}

#[test]
fn hijack_transcript_details() {
    let t = play(ScenarioKind::Hijack, Leak::Mk, Defense::None, |_| {});
    assert_eq!(t.result["account"], "victim");
    assert_eq!(t.result["phone"], "189****3630");
    let ev = events(&t);
    let tamper = ev.iter().find(|e| e["op"] == "tamper").unwrap();
    assert_eq!(tamper["detail"]["phoneNumber"]["from"], "137****7089");
    assert_eq!(tamper["detail"]["phoneNumber"]["to"], "189****3630");
    assert!(t.attacker_decrypted);

    blocked(&play(ScenarioKind::Hijack, Leak::None, Defense::None, |_| {}), "ws_code2session", "invalid_mk");
    blocked(&play(ScenarioKind::Hijack, Leak::Mk, Defense::Integrity, |_| {}), "mb_consume", "integrity_failure");
}

#[test]
fn hijack_with_exported_session_key() {
    let t = play(ScenarioKind::Hijack, Leak::Ek, Defense::None, |_| {});
    assert_eq!(t.outcome, Outcome::Success);
    blocked(&play(ScenarioKind::Hijack, Leak::Ek, Defense::Integrity, |_| {}), "mb_consume", "integrity_failure");
}

#[test]
fn every_line_has_actor_op_outcome() {
    for kind in ScenarioKind::ALL {
        let t = play(kind, Leak::Mk, Defense::None, |s| s.params.n = 10);
        for e in events(&t) {
            for key in ["actor", "op", "outcome", "seq", "t"] {
                assert!(e.get(key).is_some(), "{kind:?} {e}");
            }
        }
        let last = events(&t).pop().unwrap();
        assert_eq!(last["op"], "outcome");
    }
}

#[test]
fn replay_after_ttl_is_blocked() {
    blocked(&play(ScenarioKind::Replay, Leak::None, Defense::None, |_| {}), "mb_consume", "decrypt_failure");
    blocked(&play(ScenarioKind::Replay, Leak::None, Defense::Integrity, |_| {}), "mb_consume", "decrypt_failure");
    let t = play(ScenarioKind::Replay, Leak::None, Defense::None, |s| s.params.delay = Some(299));
    assert_eq!(t.outcome, Outcome::Success);
    assert!(!t.attacker_decrypted);
}

#[test]
fn login_token_expiry_and_reuse() {
    let t = play(ScenarioKind::LtExpiry, Leak::None, Defense::None, |_| {});
    blocked(&t, "ws_code2session", "invalid_lt");
    let last_call = events(&t).into_iter().rfind(|e| e["op"] == "ws_code2session").unwrap();
    assert_eq!(last_call["t"], 301);
    blocked(&play(ScenarioKind::LtExpiry, Leak::None, Defense::None, |s| s.params.delay = Some(300)), "ws_code2session", "invalid_lt");
    let ok = play(ScenarioKind::LtExpiry, Leak::None, Defense::None, |s| s.params.delay = Some(299));
    assert_eq!(ok.outcome, Outcome::Success);

    blocked(&play(ScenarioKind::LtReuse, Leak::None, Defense::None, |_| {}), "ws_code2session", "invalid_lt");
    blocked(&play(ScenarioKind::LtReuse, Leak::Mk, Defense::None, |s| s.params.delay = Some(1)), "ws_code2session", "invalid_lt");
}

#[test]
fn access_token_expiry_and_caching() {
    let t = play(ScenarioKind::AtExpiry, Leak::None, Defense::None, |_| {});
    blocked(&t, "ws_invoke_service", "at_expired");
    let ev = events(&t);
    assert_eq!(ev.iter().find(|e| e["op"] == "compare_at").unwrap()["detail"]["same"], true);
    assert_eq!(ev.iter().rfind(|e| e["op"] == "ws_invoke_service").unwrap()["t"], 7201);
    let ok = play(ScenarioKind::AtExpiry, Leak::None, Defense::None, |s| s.params.delay = Some(7199));
    assert_eq!(ok.outcome, Outcome::Success);
}

#[test]
fn same_ek_within_ttl() {
    let t = play(ScenarioKind::SameEk, Leak::Mk, Defense::None, |_| {});
    assert_eq!(t.outcome, Outcome::Success);
    blocked(&play(ScenarioKind::SameEk, Leak::Mk, Defense::None, |s| s.params.delay = Some(300)), "compare_ek", "different_keys");
    let longer = play(ScenarioKind::SameEk, Leak::Mk, Defense::None, |s| {
        s.params.delay = Some(1000);
        s.params.ek_ttl = 3600;
    });
    assert_eq!(longer.outcome, Outcome::Success);
    blocked(&play(ScenarioKind::SameEk, Leak::None, Defense::None, |_| {}), "ws_code2session", "invalid_mk");
}

#[test]
fn service_theft_bills_victim() {
    let t = play(ScenarioKind::ServiceTheft, Leak::Mk, Defense::None, |_| {});
    assert_eq!(t.outcome, Outcome::Success);
    assert_eq!(t.result["n"], 1_000_000);
    assert_eq!(t.result["cost_usd"].as_f64(), Some(1000.0));

    let zero = play(ScenarioKind::ServiceTheft, Leak::Mk, Defense::None, |s| s.params.n = 0);
    assert_eq!(zero.result["cost_usd"].as_f64(), Some(0.0));
    let free = play(ScenarioKind::ServiceTheft, Leak::Mk, Defense::None, |s| {
        s.params.service = "jokebot".into();
        s.params.n = 5000;
    });
    assert_eq!(free.result["cost_usd"].as_f64(), Some(0.0));
    let half = play(ScenarioKind::ServiceTheft, Leak::Mk, Defense::None, |s| {
        s.params.service = "img.superresolution".into();
        s.params.n = 3000;
    });
    assert_eq!(half.result["cost_usd"].as_f64(), Some(1.5));

    blocked(
        &play(ScenarioKind::ServiceTheft, Leak::Mk, Defense::None, |s| s.params.service = "ocr.driving".into()),
        "ws_invoke_service",
        "service_disabled",
    );
    blocked(&play(ScenarioKind::ServiceTheft, Leak::None, Defense::None, |_| {}), "ws_get_access_token", "invalid_mk");
}

#[test]
fn werun_forgery_carries_forged_step() {
    let t = play(ScenarioKind::Werun, Leak::Mk, Defense::None, |_| {});
    assert_eq!(t.outcome, Outcome::Success);
    assert_eq!(t.result["step"], 100_000);
    assert_eq!(t.result["points"], 1000);
    let award = events(&t).into_iter().rfind(|e| e["op"] == "mb_consume").unwrap();
    assert_eq!(award["detail"]["step"], 100_000);
    blocked(&play(ScenarioKind::Werun, Leak::Mk, Defense::Integrity, |_| {}), "mb_consume", "integrity_failure");
}

#[test]
fn share_awards_per_unseen_group() {
    let t = play(ScenarioKind::Share, Leak::Mk, Defense::None, |_| {});
    assert_eq!(t.result["packets"], 10);
    let awards: Vec<u64> = t.result["awards"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(awards.len(), 10);
    assert!(awards.iter().all(|c| (1..=10).contains(c)));
    assert_eq!(t.result["total_cents"].as_u64().unwrap(), awards.iter().sum::<u64>());

    let dup = play(ScenarioKind::Share, Leak::Mk, Defense::None, |s| {
        s.params.groups = Some(vec!["Ga".into(), "Gb".into(), "Ga".into()]);
    });
    assert_eq!(dup.result["packets"], 2);
    assert_eq!(dup.result["denied"], 1);
    blocked(&play(ScenarioKind::Share, Leak::Mk, Defense::Integrity, |_| {}), "mb_consume", "integrity_failure");
}

#[test]
fn scripts_parse_from_json() {
    let s = Scenario::from_json(r#"{"scenario":"service_theft","leak":"mk","defense":"none","expect":"success","service":"ocr.bankCard","n":2000}"#).unwrap();
    let t = run(&s);
    assert!(t.matches(s.expect));
    assert_eq!(t.result["cost_usd"].as_f64(), Some(2.0));
}
