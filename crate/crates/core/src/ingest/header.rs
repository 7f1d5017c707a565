//! Whitespace-separated ASCII header tokenizer shared by the Netpbm-family
//! readers. `#` starts a comment that runs to end of line.

use super::IngestError;

pub(crate) struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    pub(crate) fn token(&mut self) -> Result<&'a [u8], IngestError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(IngestError::MalformedHeader("unexpected end of header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    pub(crate) fn usize_token(&mut self, what: &str) -> Result<usize, IngestError> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                IngestError::MalformedHeader(format!(
                    "bad {what} {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }

    /// Consumes the single whitespace byte that ends the header and
    /// returns everything after it.
    pub(crate) fn payload(&mut self) -> Result<&'a [u8], IngestError> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(IngestError::MalformedHeader(
                "header not terminated by whitespace".into(),
            )),
        }
    }

    /// Remaining bytes after the current position, for ASCII bodies.
    pub(crate) fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}
