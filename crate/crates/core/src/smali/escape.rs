use alloc::string::String;
use core::fmt::Write;

/// Decodes the body of a smali string literal (without the surrounding
/// quotes). Lone surrogates in `\u` escapes decode to U+FFFD.
pub fn unescape_string(body: &str) -> Result<String, &'static str> {
    let mut out = String::with_capacity(body.len());
    let mut units: alloc::vec::Vec<u16> = alloc::vec::Vec::new();
    let mut chars = body.chars();

    fn flush(units: &mut alloc::vec::Vec<u16>, out: &mut String) {
        if !units.is_empty() {
            out.extend(
                char::decode_utf16(units.drain(..))
                    .map(|r| r.unwrap_or(char::REPLACEMENT_CHARACTER)),
            );
        }
    }

    while let Some(c) = chars.next() {
        if c == '"' {
            return Err("unescaped quote in string literal");
        }
        if c != '\\' {
            flush(&mut units, &mut out);
            out.push(c);
            continue;
        }
        let decoded = match chars.next().ok_or("dangling backslash")? {
            'u' => {
                let mut code = 0u16;
                for _ in 0..4 {
                    let digit = chars
                        .next()
                        .and_then(|d| d.to_digit(16))
                        .ok_or("bad \\u escape")?;
                    code = code * 16 + digit as u16;
                }
                units.push(code);
                continue;
            }
            'n' => '\n',
            't' => '\t',
            'r' => '\r',
            'b' => '\u{8}',
            'f' => '\u{c}',
            '"' => '"',
            '\'' => '\'',
            '\\' => '\\',
            _ => return Err("unknown escape"),
        };
        flush(&mut units, &mut out);
        out.push(decoded);
    }
    flush(&mut units, &mut out);
    Ok(out)
}

/// Encodes a string as the body of a smali literal. Printable ASCII passes
/// through; everything else becomes an escape.
pub fn escape_string(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            ' '..='~' => out.push(c),
            _ => {
                let mut buf = [0u16; 2];
                for unit in c.encode_utf16(&mut buf) {
                    let _ = write!(out, "\\u{:04x}", unit);
                }
            }
        }
    }
    out
}
