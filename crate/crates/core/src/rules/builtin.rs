//! The shipped rule set: one rule per cell entry of the TLS, symmetric,
//! asymmetric, hash and random-number parameter tables.

use super::facts::{
    DigestPurpose, DigestStrength, KeyPairAlgorithm, Material, SeedEvent, SnippetFacts,
    Transformation, TrustManagerKind, VerifierKind,
};
use super::{Category, ContextCondition, PatternRule, Severity};

use Category::{AsymmetricCrypto as Asym, Hash, SecureRandom as Rng, SymmetricCrypto as Sym, Tls};
use ContextCondition::{Any, ClientServer, NonClientServer};
use Severity::{InsecureIndicator as Bad, SecureIndicator as Good};

fn transform(f: &SnippetFacts, pred: impl Fn(&Transformation) -> bool) -> bool {
    f.transformations.iter().any(pred)
}

fn suite(f: &SnippetFacts, pred: impl Fn(&str) -> bool) -> bool {
    f.cipher_suites.iter().any(|s| pred(&s.to_ascii_uppercase()))
}

/// Key size of `AES_<bits>_<mode>` inside a cipher-suite name.
fn aes_suite(s: &str, mode: &str) -> Option<u32> {
    let mut rest = s;
    while let Some(p) = rest.find("AES_") {
        let tail = &rest[p + 4..];
        let digits: String = tail.chars().take_while(|c| c.is_ascii_digit()).collect();
        if !digits.is_empty() && tail[digits.len()..].starts_with(&format!("_{mode}")) {
            return digits.parse().ok();
        }
        rest = tail;
    }
    None
}

/// `None` for strings that are not protocol versions.
pub(super) fn tls_version_ok(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "ssl" | "sslv2" | "sslv3" | "tlsv1" | "tlsv1.0" => Some(false),
        "tls" | "tlsv1.1" | "tlsv1.2" | "tlsv1.3" | "default" => Some(true),
        _ => None,
    }
}

fn digest(f: &SnippetFacts, purpose: DigestPurpose, strength: DigestStrength) -> bool {
    f.digests.contains(&(purpose, strength))
}

fn key_size(f: &SnippetFacts, alg: KeyPairAlgorithm, pred: impl Fn(u64) -> bool) -> bool {
    f.key_sizes.iter().any(|&(a, b)| a == alg && pred(b))
}

fn oaep_sha2(p: &str) -> bool {
    ["OAEPWITHSHA-256ANDMGF1PADDING", "OAEPWITHSHA-384ANDMGF1PADDING", "OAEPWITHSHA-512ANDMGF1PADDING"]
        .contains(&p)
}

fn seeded_before_output(events: &[SeedEvent]) -> bool {
    let first_next = events.iter().position(|e| *e == SeedEvent::NextBytes);
    let first_seed = events.iter().position(|e| matches!(e, SeedEvent::SetSeed { .. }));
    matches!((first_seed, first_next), (Some(s), Some(n)) if s < n)
}

fn static_seed_replaces(events: &[SeedEvent]) -> bool {
    let first_next = events
        .iter()
        .position(|e| *e == SeedEvent::NextBytes)
        .unwrap_or(usize::MAX);
    events
        .iter()
        .enumerate()
        .any(|(i, e)| *e == SeedEvent::SetSeed { literal: true } && i < first_next)
}

macro_rules! rule {
    ($id:literal, $cat:expr, $sev:expr, $ctx:expr, $desc:literal, $m:expr) => {
        PatternRule {
            id: $id,
            category: $cat,
            severity: $sev,
            context: $ctx,
            description: $desc,
            matcher: $m,
        }
    };
}

pub(super) fn rules() -> Vec<PatternRule> {
    vec![
        // Hostname verifier.
        rule!("TLS-hv-browser-compatible", Tls, Good, Any, "browser-compatible hostname verifier",
            |f| f.verifiers.contains(&VerifierKind::BrowserCompatible)),
        rule!("TLS-hv-strict", Tls, Good, Any, "strict hostname verifier",
            |f| f.verifiers.contains(&VerifierKind::Strict)),
        rule!("TLS-hv-allow-all", Tls, Bad, Any, "hostname verifier accepts every host",
            |f| f.verifiers.contains(&VerifierKind::AllowAll)),
        // Trust manager.
        rule!("TLS-tm-default", Tls, Good, Any, "platform trust manager or delegation to it",
            |f| f.trust_managers.contains(&TrustManagerKind::Default)),
        rule!("TLS-tm-secure-pinning", Tls, Good, Any, "pins the server public key and rejects mismatches",
            |f| f.trust_managers.contains(&TrustManagerKind::SecurePinning)),
        rule!("TLS-tm-trust-all", Tls, Bad, Any, "checkServerTrusted accepts every chain",
            |f| f.trust_managers.contains(&TrustManagerKind::TrustAll)),
        rule!("TLS-tm-bad-pinning", Tls, Bad, Any, "pins on serial number or distinguished name",
            |f| f.trust_managers.contains(&TrustManagerKind::BadPinning)),
        rule!("TLS-tm-validity-only", Tls, Bad, Any, "only checks certificate validity dates",
            |f| f.trust_managers.contains(&TrustManagerKind::ValidityOnly)),
        // Protocol version.
        rule!("TLS-version-ge-1.1", Tls, Good, Any, "TLS 1.1 or newer",
            |f| f.tls_versions.iter().any(|v| tls_version_ok(v) == Some(true))),
        rule!("TLS-version-lt-1.1", Tls, Bad, Any, "SSL or TLS 1.0",
            |f| f.tls_versions.iter().any(|v| tls_version_ok(v) == Some(false))),
        // Cipher suites.
        rule!("TLS-suite-dhe-rsa-ecdhe", Tls, Good, Any, "forward-secret key exchange (DHE_RSA, ECDHE)",
            |f| suite(f, |s| s.contains("ECDHE_") || s.contains("DHE_RSA"))),
        rule!("TLS-suite-aes-gcm", Tls, Good, Any, "AES-GCM with at least 128-bit keys",
            |f| suite(f, |s| aes_suite(s, "GCM").is_some_and(|b| b >= 128))),
        rule!("TLS-suite-sha-ge-256", Tls, Good, Any, "SHA-256 or stronger suite MAC",
            |f| suite(f, |s| s.ends_with("_SHA256") || s.ends_with("_SHA384"))),
        rule!("TLS-suite-rc4-3des", Tls, Bad, Any, "RC4 or 3DES suite",
            |f| suite(f, |s| s.contains("RC4") || s.contains("3DES") || s.contains("DES_EDE") || s.contains("_DES_") || s.contains("DES40"))),
        rule!("TLS-suite-aes-cbc", Tls, Bad, Any, "AES-CBC suite",
            |f| suite(f, |s| aes_suite(s, "CBC").is_some())),
        rule!("TLS-suite-md5-md2", Tls, Bad, Any, "MD5 or MD2 suite MAC",
            |f| suite(f, |s| s.ends_with("_MD5") || s.ends_with("_MD2"))),
        // WebView error handler.
        rule!("TLS-ssl-error-cancel", Tls, Good, Any, "onReceivedSslError cancels the load",
            |f| f.ssl_error_cancel),
        rule!("TLS-ssl-error-proceed", Tls, Bad, Any, "onReceivedSslError proceeds despite the error",
            |f| f.ssl_error_proceed),
        // Symmetric ciphers and modes.
        rule!("SYM-aes-gcm", Sym, Good, Any, "AES in GCM mode",
            |f| transform(f, |t| t.is_aes() && t.mode_is("GCM"))),
        rule!("SYM-aes-cfb", Sym, Good, Any, "AES in CFB mode",
            |f| transform(f, |t| t.is_aes() && t.mode.as_deref().is_some_and(|m| m.starts_with("CFB")))),
        rule!("SYM-aes-cbc-non-client-server", Sym, Good, NonClientServer, "AES-CBC without a padding oracle",
            |f| transform(f, |t| t.is_aes() && t.mode_is("CBC"))),
        rule!("SYM-aes-cbc-client-server", Sym, Bad, ClientServer, "AES-CBC exposed to padding oracles",
            |f| transform(f, |t| t.is_aes() && t.mode_is("CBC"))),
        rule!("SYM-rc2", Sym, Bad, Any, "RC2 cipher",
            |f| transform(f, |t| t.algorithm == "RC2")),
        rule!("SYM-rc4", Sym, Bad, Any, "RC4 cipher",
            |f| transform(f, |t| matches!(t.algorithm.as_str(), "RC4" | "ARCFOUR" | "ARC4"))),
        rule!("SYM-des", Sym, Bad, Any, "single DES",
            |f| transform(f, |t| t.algorithm == "DES")),
        rule!("SYM-3des", Sym, Bad, Any, "triple DES",
            |f| transform(f, |t| matches!(t.algorithm.as_str(), "DESEDE" | "TRIPLEDES" | "3DES" | "DESEDEWRAP"))),
        rule!("SYM-aes-ecb", Sym, Bad, Any, "AES in ECB mode, including the bare \"AES\" default",
            |f| transform(f, |t| t.is_aes() && (t.mode.is_none() || t.mode_is("ECB")))),
        rule!("SYM-blowfish", Sym, Bad, Any, "Blowfish cipher",
            |f| transform(f, |t| t.algorithm == "BLOWFISH")),
        // Keys.
        rule!("SYM-key-provider-generated", Sym, Good, Any, "key from a key generator or KDF",
            |f| f.keys.contains(&Material::ProviderGenerated)),
        rule!("SYM-key-static", Sym, Bad, Any, "hard-coded key bytes",
            |f| f.keys.contains(&Material::Static) || f.keys.contains(&Material::Zeroed)),
        rule!("SYM-key-bad-derivation", Sym, Bad, Any, "key taken directly from text or a plain digest of it",
            |f| f.keys.contains(&Material::BadDerivation)),
        // IVs.
        rule!("SYM-iv-provider-generated", Sym, Good, Any, "IV from a secure random source or the provider",
            |f| f.ivs.contains(&Material::ProviderGenerated)),
        rule!("SYM-iv-zeroed", Sym, Bad, Any, "all-zero IV",
            |f| f.ivs.contains(&Material::Zeroed)),
        rule!("SYM-iv-static", Sym, Bad, Any, "hard-coded IV",
            |f| f.ivs.contains(&Material::Static)),
        rule!("SYM-iv-bad-derivation", Sym, Bad, Any, "IV derived from text or from the key",
            |f| f.ivs.contains(&Material::BadDerivation)),
        // Password-based encryption.
        rule!("SYM-pbe-iterations-ge-1k", Sym, Good, Any, "at least 1000 PBE iterations",
            |f| f.pbe.iter().any(|p| p.iterations.is_some_and(|n| n >= 1000))),
        rule!("SYM-pbe-iterations-lt-1k", Sym, Bad, Any, "fewer than 1000 PBE iterations",
            |f| f.pbe.iter().any(|p| p.iterations.is_some_and(|n| n < 1000))),
        rule!("SYM-pbe-salt-ge-64bit", Sym, Good, Any, "salt of at least 64 bits",
            |f| f.pbe.iter().any(|p| p.salt_bits.is_some_and(|b| b >= 64))),
        rule!("SYM-pbe-salt-lt-64bit", Sym, Bad, Any, "salt shorter than 64 bits",
            |f| f.pbe.iter().any(|p| p.salt_bits.is_some_and(|b| b < 64))),
        rule!("SYM-pbe-salt-non-static", Sym, Good, Any, "randomly generated salt",
            |f| f.pbe.iter().any(|p| p.salt == Some(Material::ProviderGenerated))),
        rule!("SYM-pbe-salt-static", Sym, Bad, Any, "hard-coded salt",
            |f| f.pbe.iter().any(|p| p.salt == Some(Material::Static))),
        // Asymmetric transformations.
        rule!("ASYM-rsa", Asym, Good, Any, "RSA without explicit mode",
            |f| transform(f, |t| t.is_rsa() && t.mode.is_none())),
        rule!("ASYM-rsa-ecb", Asym, Good, Any, "RSA/ECB (mode ignored by providers)",
            |f| transform(f, |t| t.is_rsa() && t.mode_is("ECB"))),
        rule!("ASYM-rsa-none", Asym, Good, Any, "RSA/None",
            |f| transform(f, |t| t.is_rsa() && t.mode_is("NONE"))),
        rule!("ASYM-pkcs1-non-client-server", Asym, Good, NonClientServer, "PKCS#1 v1.5 padding without an oracle",
            |f| transform(f, |t| t.is_rsa() && t.padding.as_deref().is_some_and(|p| p.starts_with("PKCS1")))),
        rule!("ASYM-pkcs1-client-server", Asym, Bad, ClientServer, "PKCS#1 v1.5 padding exposed to padding oracles",
            |f| transform(f, |t| t.is_rsa() && t.padding.as_deref().is_some_and(|p| p.starts_with("PKCS1")))),
        rule!("ASYM-pkcs8", Asym, Good, Any, "PKCS#8 key encoding",
            |f| f.pkcs8),
        rule!("ASYM-oaep-sha256-mgf1", Asym, Good, Any, "OAEP with SHA-2 and MGF1",
            |f| transform(f, |t| t.is_rsa() && t.padding.as_deref().is_some_and(oaep_sha2))),
        rule!("ASYM-rsa-key-ge-2048", Asym, Good, Any, "RSA key of at least 2048 bits",
            |f| key_size(f, KeyPairAlgorithm::Rsa, |b| b >= 2048)),
        rule!("ASYM-rsa-key-lt-2048", Asym, Bad, Any, "RSA key shorter than 2048 bits",
            |f| key_size(f, KeyPairAlgorithm::Rsa, |b| b < 2048)),
        rule!("ASYM-ecc-key-ge-224", Asym, Good, Any, "elliptic-curve key of at least 224 bits",
            |f| key_size(f, KeyPairAlgorithm::Ec, |b| b >= 224)),
        rule!("ASYM-ecc-key-lt-224", Asym, Bad, Any, "elliptic-curve key shorter than 224 bits",
            |f| key_size(f, KeyPairAlgorithm::Ec, |b| b < 224)),
        // Hash functions.
        rule!("HASH-pbkdf-sha224-plus", Hash, Good, Any, "password KDF over SHA-224 or stronger",
            |f| digest(f, DigestPurpose::Pbkdf, DigestStrength::Strong)),
        rule!("HASH-pbkdf-md2-md5", Hash, Bad, Any, "password KDF over MD2 or MD5",
            |f| digest(f, DigestPurpose::Pbkdf, DigestStrength::Weak)),
        rule!("HASH-signature-gt-sha1", Hash, Good, Any, "signature digest stronger than SHA-1",
            |f| digest(f, DigestPurpose::Signature, DigestStrength::Strong)),
        rule!("HASH-signature-md2-md5", Hash, Bad, Any, "signature over MD2 or MD5",
            |f| digest(f, DigestPurpose::Signature, DigestStrength::Weak)),
        rule!("HASH-credentials-gt-sha1", Hash, Good, Any, "credentials hashed with SHA-2 or stronger",
            |f| f.credential_context && digest(f, DigestPurpose::Plain, DigestStrength::Strong)),
        rule!("HASH-credentials-md2-md5", Hash, Bad, Any, "credentials hashed with MD2 or MD5",
            |f| f.credential_context && digest(f, DigestPurpose::Plain, DigestStrength::Weak)),
        // Random numbers.
        rule!("RNG-type-SecureRandom", Rng, Good, Any, "SecureRandom generator",
            |f| f.secure_random),
        rule!("RNG-type-Random", Rng, Bad, Any, "java.util.Random used for security material",
            |f| f.insecure_random),
        rule!("seed-nextBytes", Rng, Good, Any, "self-seeded: nextBytes without setSeed",
            |f| f.seeding_has(|s| s.contains(&SeedEvent::NextBytes) && !s.iter().any(|e| matches!(e, SeedEvent::SetSeed { .. })))),
        rule!("seed-nextBytes-then-setSeed", Rng, Good, Any, "setSeed only supplements after nextBytes",
            |f| f.seeding_has(|s| {
                let n = s.iter().position(|e| *e == SeedEvent::NextBytes);
                let z = s.iter().position(|e| matches!(e, SeedEvent::SetSeed { .. }));
                matches!((n, z), (Some(n), Some(z)) if n < z)
            })),
        rule!("seed-setSeed-then-nextBytes", Rng, Bad, Any, "setSeed before the first nextBytes replaces the seed",
            |f| f.seeding_has(seeded_before_output)),
        rule!("seed-setSeed-static", Rng, Bad, Any, "seeded with a static value",
            |f| f.seeding_has(static_seed_replaces)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aes_suite_parsing() {
        assert_eq!(aes_suite("TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256", "GCM"), Some(128));
        assert_eq!(aes_suite("TLS_RSA_WITH_AES_256_CBC_SHA", "CBC"), Some(256));
        assert_eq!(aes_suite("TLS_RSA_WITH_AES_256_CBC_SHA", "GCM"), None);
    }

    #[test]
    fn versions() {
        assert_eq!(tls_version_ok("SSLv3"), Some(false));
        assert_eq!(tls_version_ok("TLSv1"), Some(false));
        assert_eq!(tls_version_ok("TLSv1.2"), Some(true));
        assert_eq!(tls_version_ok("SSLv2Hello"), None);
    }

    #[test]
    fn every_row_is_one_rule() {
        let rs = rules();
        assert_eq!(rs.len(), 64);
        let ids: std::collections::BTreeSet<_> = rs.iter().map(|r| r.id).collect();
        assert_eq!(ids.len(), rs.len());
    }
}
