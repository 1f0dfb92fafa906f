use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use coffeescan_protolab::backend::Backend;
use coffeescan_protolab::crypto::{decrypt, encrypt, sign, verify};
use coffeescan_protolab::platform::{Envelope, Platform, PlatformConfig, RecordKind};
use coffeescan_protolab::LabError;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Vectors computed with Python's `cryptography` (AES-CBC, PKCS7) and `hmac`.
const KAT_PT: &str = r#"{"phoneNumber":"189****3630","countryCode":"86"}"#;
const KAT_CT: &str = "68b85e773a3e67a7ace735be607a3db2232a145cf1092e30229e5d58d8f35d80ff664780e4fccf4e58ae446aa21f9253a6b0acf8b921b3146501bc318b6fcee7";
const KAT_MAC: &str = "40831315bde64164e57950be3cf84c819d8ab86a90479ee9bd048b0cdc0d5e75";

fn kat_key_iv() -> ([u8; 16], [u8; 16]) {
    let key: [u8; 16] = std::array::from_fn(|i| i as u8);
    let iv: [u8; 16] = std::array::from_fn(|i| 16 + i as u8);
    (key, iv)
}

#[test]
fn aes_cbc_known_answer() {
    let (key, iv) = kat_key_iv();
    let ct = encrypt(&key, &iv, KAT_PT.as_bytes());
    assert_eq!(hex::encode(&ct), KAT_CT);
    assert_eq!(decrypt(&key, &iv, &ct).unwrap(), KAT_PT.as_bytes());
}

#[test]
fn envelope_mac_known_answer() {
    let (_, iv) = kat_key_iv();
    let ct = hex::decode(KAT_CT).unwrap();
    let mac = sign(b"platform-integrity-key", "wx0123456789abcdef", &iv, &ct);
    assert_eq!(hex::encode(mac), KAT_MAC);
    assert!(verify(b"platform-integrity-key", "wx0123456789abcdef", &iv, &ct, &mac));
}

#[test]
fn thousand_random_roundtrips() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
    for _ in 0..1000 {
        let key: [u8; 16] = rng.random();
        let iv: [u8; 16] = rng.random();
        let mut pt = vec![0u8; rng.random_range(0..200)];
        rng.fill_bytes(&mut pt);
        let ct = encrypt(&key, &iv, &pt);
        assert_eq!(ct.len(), (pt.len() / 16 + 1) * 16);
        assert_eq!(decrypt(&key, &iv, &ct).unwrap(), pt);
    }
}

#[test]
fn every_ciphertext_bit_flip_is_rejected_under_integrity() {
    let mut p = Platform::new(
        11,
        PlatformConfig {
            integrity: true,
            ..Default::default()
        },
    );
    p.register_app("wxapp", "mk", Vec::<String>::new());
    p.register_user("u", "189****3630");
    let mut be = Backend::new("wxapp", "mk", 0);
    be.check_integrity = true;
    let env = p.ws_fetch_encrypted("u", "wxapp", RecordKind::PhoneNumber).unwrap();
    let ct = env.ciphertext().unwrap();
    assert_eq!(ct.len() * 8, 256);
    assert!(be.consume(&mut p, &env, RecordKind::PhoneNumber).is_ok());

    let mut rejected = 0;
    for bit in 0..ct.len() * 8 {
        let mut flipped = ct.clone();
        flipped[bit / 8] ^= 1 << (bit % 8);
        let bad = Envelope {
            encrypted_data: B64.encode(&flipped),
            ..env.clone()
        };
        if be.consume(&mut p, &bad, RecordKind::PhoneNumber) == Err(LabError::IntegrityFailure) {
            rejected += 1;
        }
    }
    assert_eq!(rejected, 256);
}

#[test]
fn leading_blocks_are_malleable_without_mac() {
    // CBC alone is malleable: flipping a bit in the first block garbles it
    // but still leaves valid padding in the last.
    let (key, iv) = kat_key_iv();
    let ct = encrypt(&key, &iv, KAT_PT.as_bytes());
    let accepted = (0..128)
        .filter(|bit| {
            let mut c = ct.clone();
            c[bit / 8] ^= 1 << (bit % 8);
            decrypt(&key, &iv, &c).is_ok()
        })
        .count();
    assert_eq!(accepted, 128);
}
