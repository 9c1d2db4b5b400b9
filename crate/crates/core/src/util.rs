//! Small shared helpers.

/// Incremental FNV-1a 64-bit hasher. Stable across platforms and runs, which
/// is what the session-log digests and bug dedup keys need.
pub struct Fnv1a(u64);

impl Fnv1a {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;

    pub fn new() -> Self {
        Fnv1a(Self::OFFSET)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = Fnv1a::new();
    h.write(bytes);
    h.finish()
}

/// Digest used in dialogue logs: 16 hex chars plus the first 200 characters
/// of the text, so a log line stays readable without unbounded growth.
pub fn text_digest(text: &str) -> String {
    let head: String = text.chars().take(200).collect();
    format!("{:016x}:{}", fnv1a64(text.as_bytes()), head)
}
