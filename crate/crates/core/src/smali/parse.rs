use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{
    escape::unescape_string, is_object_descriptor, ClassDef, Instruction, InvokeKind, MethodDef,
    MethodRef, Op,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: malformed directive: {message}")]
    MalformedDirective { line: usize, message: String },
    #[error("line {line}: malformed instruction: {message}")]
    MalformedInstruction { line: usize, message: String },
    #[error("line {line}: .method without matching .end method")]
    UnterminatedMethod { line: usize },
    #[error("line {line}: duplicate method {name}{proto}")]
    DuplicateMethod {
        line: usize,
        name: String,
        proto: String,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::MalformedDirective { line, .. }
            | ParseError::MalformedInstruction { line, .. }
            | ParseError::UnterminatedMethod { line }
            | ParseError::DuplicateMethod { line, .. } => *line,
        }
    }
}

fn directive(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::MalformedDirective {
        line,
        message: message.into(),
    }
}

fn instruction(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::MalformedInstruction {
        line,
        message: message.into(),
    }
}

/// Returns the directive keyword of a trimmed line (`.method`, `.end`, ...),
/// or `None` if the line is not a directive.
fn directive_word(trimmed: &str) -> Option<&str> {
    if trimmed.starts_with('.') {
        trimmed.split_whitespace().next()
    } else {
        None
    }
}

struct OpenMethod {
    def: MethodDef,
}

/// Parses one smali class file.
///
/// Body lines starting with `invoke-`, `const-string` or `new-instance` are
/// interpreted; every other body line is kept as [`Op::Opaque`]. Non-blank
/// lines outside methods other than `.class`/`.super` go to
/// [`ClassDef::metadata`].
pub fn parse_class(text: &str, source_file: &str) -> Result<ClassDef, ParseError> {
    let mut header: Option<(Vec<String>, String)> = None;
    let mut super_descriptor: Option<String> = None;
    let mut metadata = Vec::new();
    let mut methods: Vec<MethodDef> = Vec::new();
    let mut open: Option<OpenMethod> = None;

    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }

    for (idx, raw) in lines.into_iter().enumerate() {
        let lineno = idx + 1;
        let trimmed = raw.trim();
        let word = directive_word(trimmed);

        if let Some(current) = open.as_mut() {
            match word {
                Some(".end") if trimmed.split_whitespace().nth(1) == Some("method") => {
                    let done = open.take().unwrap().def;
                    if methods
                        .iter()
                        .any(|m| m.name == done.name && m.proto == done.proto)
                    {
                        return Err(ParseError::DuplicateMethod {
                            line: done.source_line,
                            name: done.name,
                            proto: done.proto,
                        });
                    }
                    methods.push(done);
                }
                Some(".method") => {
                    return Err(ParseError::UnterminatedMethod {
                        line: current.def.source_line,
                    })
                }
                _ => current.def.body.push(Instruction {
                    op: parse_body_line(raw, trimmed, lineno)?,
                    source_line: lineno,
                }),
            }
            continue;
        }

        match word {
            Some(".class") => {
                if header.is_some() {
                    return Err(directive(lineno, "second .class directive"));
                }
                let mut tokens: Vec<String> = trimmed
                    .split_whitespace()
                    .skip(1)
                    .map(String::from)
                    .collect();
                let descriptor = tokens
                    .pop()
                    .ok_or_else(|| directive(lineno, ".class without a descriptor"))?;
                if !is_object_descriptor(&descriptor) {
                    return Err(directive(
                        lineno,
                        alloc::format!("bad class descriptor {descriptor:?}"),
                    ));
                }
                header = Some((tokens, descriptor));
            }
            Some(".super") => {
                if super_descriptor.is_some() {
                    return Err(directive(lineno, "second .super directive"));
                }
                let mut tokens = trimmed.split_whitespace().skip(1);
                match (tokens.next(), tokens.next()) {
                    (Some(d), None) if is_object_descriptor(d) => {
                        super_descriptor = Some(d.to_string())
                    }
                    _ => return Err(directive(lineno, "bad .super directive")),
                }
            }
            Some(".method") => {
                let Some((_, owner)) = header.as_ref() else {
                    return Err(directive(lineno, ".method before .class"));
                };
                let mut tokens: Vec<String> = trimmed
                    .split_whitespace()
                    .skip(1)
                    .map(String::from)
                    .collect();
                let signature = tokens
                    .pop()
                    .ok_or_else(|| directive(lineno, ".method without a signature"))?;
                let (name, proto) = split_signature(&signature).ok_or_else(|| {
                    directive(lineno, alloc::format!("bad method signature {signature:?}"))
                })?;
                open = Some(OpenMethod {
                    def: MethodDef {
                        owner: owner.clone(),
                        name: name.into(),
                        proto: proto.into(),
                        flags: tokens,
                        body: Vec::new(),
                        source_line: lineno,
                    },
                });
            }
            Some(".end") if trimmed.split_whitespace().nth(1) == Some("method") => {
                return Err(directive(lineno, ".end method outside a method"));
            }
            _ if trimmed.is_empty() => {}
            _ => metadata.push(raw.to_string()),
        }
    }

    if let Some(current) = open {
        return Err(ParseError::UnterminatedMethod {
            line: current.def.source_line,
        });
    }
    let (flags, descriptor) = header.ok_or_else(|| directive(1, "missing .class directive"))?;

    Ok(ClassDef {
        descriptor,
        super_descriptor: super_descriptor.unwrap_or_default(),
        flags,
        metadata,
        methods,
        source_file: source_file.into(),
    })
}

/// Splits `name(args)ret` into `("name", "(args)ret")`.
fn split_signature(sig: &str) -> Option<(&str, &str)> {
    let open = sig.find('(')?;
    let (name, proto) = sig.split_at(open);
    let close = proto.find(')')?;
    if name.is_empty() || close + 1 >= proto.len() || name.contains("->") {
        return None;
    }
    Some((name, proto))
}

/// Parses `Lpkg/Cls;->name(args)ret`.
pub fn parse_method_ref(text: &str) -> Option<MethodRef> {
    let (class, rest) = text.split_once("->")?;
    if !is_object_descriptor(class) {
        return None;
    }
    let (name, proto) = split_signature(rest)?;
    Some(MethodRef::new(class, name, proto))
}

fn strip_trailing_comment(s: &str) -> &str {
    match s.find('#') {
        Some(i) => s[..i].trim_end(),
        None => s,
    }
}

fn parse_body_line(raw: &str, trimmed: &str, lineno: usize) -> Result<Op, ParseError> {
    let (opcode, operands) = match trimmed.split_once(char::is_whitespace) {
        Some((op, rest)) => (op, rest.trim()),
        None => (trimmed, ""),
    };

    if let Some(kind_text) = opcode.strip_prefix("invoke-") {
        let (kind_name, range) = match kind_text.strip_suffix("/range") {
            Some(k) => (k, true),
            None => (kind_text, false),
        };
        // invoke-polymorphic / invoke-custom have no single plain target.
        let Some(kind) = InvokeKind::from_name(kind_name) else {
            return Ok(Op::Opaque(raw.into()));
        };
        let operands = strip_trailing_comment(operands);
        let regs_end = operands
            .strip_prefix('{')
            .and_then(|r| r.find('}'))
            .ok_or_else(|| instruction(lineno, "invoke without register list"))?;
        let registers = operands[1..regs_end + 1].trim();
        let target_text = operands[regs_end + 2..]
            .trim_start()
            .strip_prefix(',')
            .ok_or_else(|| instruction(lineno, "invoke without target"))?
            .trim();
        // Array receivers (e.g. `[I->clone()`) are never app methods, path
        // sources or sinks.
        if target_text.starts_with('[') {
            return Ok(Op::Opaque(raw.into()));
        }
        let target = parse_method_ref(target_text).ok_or_else(|| {
            instruction(
                lineno,
                alloc::format!("bad method reference {target_text:?}"),
            )
        })?;
        return Ok(Op::Invoke {
            kind,
            range,
            registers: registers.into(),
            target,
        });
    }

    if opcode == "const-string" || opcode == "const-string/jumbo" {
        let (register, literal) = operands
            .split_once(',')
            .ok_or_else(|| instruction(lineno, "const-string without a literal"))?;
        let literal = literal.trim();
        let body = literal
            .strip_prefix('"')
            .ok_or_else(|| instruction(lineno, "const-string literal is not quoted"))?;
        let close = closing_quote(body)
            .ok_or_else(|| instruction(lineno, "unterminated string literal"))?;
        let tail = body[close + 1..].trim();
        if !(tail.is_empty() || tail.starts_with('#')) {
            return Err(instruction(lineno, "trailing text after string literal"));
        }
        let value = unescape_string(&body[..close]).map_err(|m| instruction(lineno, m))?;
        return Ok(Op::StringConst {
            register: register.trim().into(),
            value,
            jumbo: opcode.ends_with("/jumbo"),
        });
    }

    if opcode == "new-instance" {
        let (register, ty) = strip_trailing_comment(operands)
            .split_once(',')
            .ok_or_else(|| instruction(lineno, "new-instance without a type"))?;
        let ty = ty.trim();
        if !is_object_descriptor(ty) {
            return Err(instruction(
                lineno,
                alloc::format!("bad type descriptor {ty:?}"),
            ));
        }
        return Ok(Op::NewInstance {
            register: register.trim().into(),
            type_descriptor: ty.into(),
        });
    }

    Ok(Op::Opaque(raw.into()))
}

/// Index of the first unescaped `"` in a literal body.
fn closing_quote(body: &str) -> Option<usize> {
    let mut escaped = false;
    for (i, c) in body.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' => escaped = true,
            '"' => return Some(i),
            _ => {}
        }
    }
    None
}
