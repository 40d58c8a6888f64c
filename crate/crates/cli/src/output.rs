//! Deterministic JSON and CSV writers.

use std::io::{self, Write};

use serde::Serialize;

/// Doubles are written with 17 significant digits; integral values below `1e15` keep a short form.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() && v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v:.16e}")
    }
}

struct Precise;

impl serde_json::ser::Formatter for Precise {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            w.write_all(fmt_f64(v).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut w, Precise);
    value.serialize(&mut ser).map_err(io::Error::other)?;
    w.write_all(b"\n")?;
    w.flush()
}

pub fn write_csv<W: Write>(header: &[String], rows: &[Vec<String>], w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(io::Error::other)?;
    for row in rows {
        out.write_record(row).map_err(io::Error::other)?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            std::f64::consts::PI,
            1.0,
            -0.0,
            1e16,
        ] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn json_is_valid() {
        let mut buf = Vec::new();
        write_json(&(0.1, f64::NAN, [1.0, 2.5]), &mut buf).unwrap();
        let back: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back[0].as_f64(), Some(0.1));
        assert!(back[1].is_null());
    }
}
