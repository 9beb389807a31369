//! JSON emission with fixed-width floats.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};

pub const SCHEMA: &str = include_str!("../schema/output.schema.json");
pub const SCHEMA_VERSION: &str = "1.0.0";

/// Writes every float with 17 significant digits so reruns diff cleanly.
struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn write_null<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        CompactFormatter.write_null(writer)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser).expect("serialising to memory cannot fail");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Non-finite values have no JSON form; they become null.
pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}
