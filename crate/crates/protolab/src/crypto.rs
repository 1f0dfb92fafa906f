//! AES-128-CBC with PKCS#7 padding and the platform's envelope MAC.

use aes::Aes128;
use cbc::cipher::block_padding::Pkcs7;
use cbc::cipher::{BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use hmac::{Hmac, Mac};
use sha2::Sha256;

type Encryptor = cbc::Encryptor<Aes128>;
type Decryptor = cbc::Decryptor<Aes128>;
type HmacSha256 = Hmac<Sha256>;

pub const KEY_LEN: usize = 16;
pub const IV_LEN: usize = 16;
pub const MAC_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("ciphertext is not a positive multiple of the block size or has bad padding")]
    BadPadding,
}

pub fn encrypt(key: &[u8; KEY_LEN], iv: &[u8; IV_LEN], plaintext: &[u8]) -> Vec<u8> {
    Encryptor::new(key.into(), iv.into()).encrypt_padded_vec_mut::<Pkcs7>(plaintext)
}

pub fn decrypt(key: &[u8; KEY_LEN], iv: &[u8; IV_LEN], ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    Decryptor::new(key.into(), iv.into())
        .decrypt_padded_vec_mut::<Pkcs7>(ciphertext)
        .map_err(|_| CryptoError::BadPadding)
}

/// HMAC-SHA256 over `len(app_id) ‖ app_id ‖ len(iv) ‖ iv ‖ len(ct) ‖ ct`,
/// lengths as big-endian u32 so field boundaries cannot shift.
fn envelope_mac(key: &[u8], app_id: &str, iv: &[u8], ciphertext: &[u8]) -> HmacSha256 {
    let mut mac = HmacSha256::new_from_slice(key).expect("HMAC accepts any key length");
    for part in [app_id.as_bytes(), iv, ciphertext] {
        mac.update(&(part.len() as u32).to_be_bytes());
        mac.update(part);
    }
    mac
}

pub fn sign(key: &[u8], app_id: &str, iv: &[u8], ciphertext: &[u8]) -> [u8; MAC_LEN] {
    envelope_mac(key, app_id, iv, ciphertext).finalize().into_bytes().into()
}

/// Constant-time check of a signature produced by [`sign`].
pub fn verify(key: &[u8], app_id: &str, iv: &[u8], ciphertext: &[u8], signature: &[u8]) -> bool {
    envelope_mac(key, app_id, iv, ciphertext).verify_slice(signature).is_ok()
}
