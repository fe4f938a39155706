use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

/// Shortest decimal form of `v` rounded to 17 significant digits, which
/// parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if !v.is_finite() {
        return "null".into();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0" } else { "0.0" }.into();
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let (sign, mant) = match mant.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mant),
    };
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    if (-5..17).contains(&exp) {
        let (int, frac) = if exp >= 0 {
            let e = exp as usize + 1;
            if digits.len() > e {
                (digits[..e].to_string(), digits[e..].to_string())
            } else {
                (format!("{digits:0<e$}"), String::new())
            }
        } else {
            ("0".to_string(), format!("{}{digits}", "0".repeat((-exp - 1) as usize)))
        };
        let frac = if frac.is_empty() { "0".to_string() } else { frac };
        format!("{sign}{int}.{frac}")
    } else {
        let (d0, rest) = digits.split_at(1);
        let rest = if rest.is_empty() { "0" } else { rest };
        format!("{sign}{d0}.{rest}e{exp}")
    }
}

struct Digits<F>(F);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl<F: Formatter> Formatter for Digits<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        w.write_all(fmt_f64(v as f64).as_bytes())
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

fn encode<T: Serialize + ?Sized, F: Formatter>(value: &T, f: F) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits(f));
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Single-line JSON; also the canonical form hashed for `config_hash`.
pub fn to_json_line<T: Serialize + ?Sized>(value: &T) -> String {
    encode(value, CompactFormatter)
}

/// Two-space indented JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = encode(value, PrettyFormatter::new());
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(fmt_f64(1.0), "1.0");
        assert_eq!(fmt_f64(0.1), "0.10000000000000001");
        assert_eq!(fmt_f64(-2.5), "-2.5");
        assert_eq!(fmt_f64(123456.0), "123456.0");
        assert_eq!(fmt_f64(1e-7), "9.9999999999999995e-8");
        assert_eq!(fmt_f64(1e20), "1.0e20");
        assert_eq!(fmt_f64(0.00123), "0.00123");
        assert_eq!(fmt_f64(0.0), "0.0");
        assert_eq!(fmt_f64(f64::NAN), "null");
    }

    #[test]
    fn round_trips() {
        let mut x = 0.123_456_789_f64;
        for _ in 0..2000 {
            x = (x * 7.3 + 0.37).fract() * 10f64.powi(((x * 1e6) as i32 % 40) - 20);
            for v in [x, -x, x as f32 as f64] {
                let s = fmt_f64(v);
                assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
                assert_eq!(serde_json::from_str::<f64>(&s).unwrap(), v, "{s}");
            }
        }
    }

    #[test]
    fn structures() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<f32>,
        }
        let s = S {
            a: 0.5,
            b: vec![1.0, 0.1],
        };
        assert_eq!(to_json_line(&s), r#"{"a":0.5,"b":[1.0,0.10000000149011612]}"#);
        assert_eq!(
            to_json_pretty(&s),
            "{\n  \"a\": 0.5,\n  \"b\": [\n    1.0,\n    0.10000000149011612\n  ]\n}\n"
        );
    }
}
