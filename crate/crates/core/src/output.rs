//! Serialization shared by the CLI and the experiment drivers.
//!
//! JSON numbers carry 17 significant digits, CSV numbers 12. Every CSV file
//! starts with one `#` metadata line.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::sampling::GENERATOR;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Pretty JSON formatter printing every float as `d.dddddddddddddddde±x`.
struct Sig17<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

/// One CSV number, 12 significant digits; empty when undefined.
pub fn csv_num(value: Option<f64>) -> String {
    match value {
        Some(v) if v.is_finite() => format!("{v:.11e}"),
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// `# key=value ...` line that opens every CSV file.
pub fn metadata_line(fields: &[(&str, String)]) -> String {
    let mut line = String::from("#");
    for (k, v) in fields {
        line.push_str(&format!(" {k}={v}"));
    }
    line.push_str(&format!(" generator=\"{GENERATOR}\" version={VERSION}\n"));
    line
}
