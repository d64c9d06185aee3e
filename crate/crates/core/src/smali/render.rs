use alloc::string::String;
use core::fmt::Write;

use super::{escape::escape_string, ClassDef, Op};

/// Renders a class back to smali text.
///
/// Interpreted instructions are written in canonical form with four-space
/// indentation; opaque and metadata lines are emitted byte-for-byte.
pub fn render_class(class: &ClassDef) -> String {
    let mut out = String::new();
    out.push_str(".class");
    for flag in &class.flags {
        out.push(' ');
        out.push_str(flag);
    }
    out.push(' ');
    out.push_str(&class.descriptor);
    out.push('\n');
    if !class.super_descriptor.is_empty() {
        let _ = writeln!(out, ".super {}", class.super_descriptor);
    }
    for line in &class.metadata {
        out.push_str(line);
        out.push('\n');
    }

    for method in &class.methods {
        out.push_str("\n.method");
        for flag in &method.flags {
            out.push(' ');
            out.push_str(flag);
        }
        let _ = writeln!(out, " {}{}", method.name, method.proto);
        for insn in &method.body {
            render_op(&mut out, &insn.op);
            out.push('\n');
        }
        out.push_str(".end method\n");
    }
    out
}

fn render_op(out: &mut String, op: &Op) {
    let _ = match op {
        Op::Invoke {
            kind,
            range,
            registers,
            target,
        } => write!(
            out,
            "    invoke-{}{} {{{}}}, {}",
            kind.as_str(),
            if *range { "/range" } else { "" },
            registers,
            target
        ),
        Op::StringConst {
            register,
            value,
            jumbo,
        } => write!(
            out,
            "    const-string{} {}, \"{}\"",
            if *jumbo { "/jumbo" } else { "" },
            register,
            escape_string(value)
        ),
        Op::NewInstance {
            register,
            type_descriptor,
        } => write!(out, "    new-instance {}, {}", register, type_descriptor),
        Op::Opaque(raw) => {
            out.push_str(raw);
            Ok(())
        }
    };
}
