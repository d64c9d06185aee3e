//! Instruction-level IR for a pragmatic subset of smali.
//!
//! Only three instruction families are interpreted: `invoke-*`,
//! `const-string` (including `/jumbo`) and `new-instance`. Every other body
//! line is kept verbatim as [`Op::Opaque`], so a parsed class can be rendered
//! back to smali without losing anything the detector does not understand.

mod escape;
mod parse;
mod render;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use escape::{escape_string, unescape_string};
pub use parse::{parse_class, parse_method_ref, ParseError};
pub use render::render_class;

/// A method reference in smali form, e.g.
/// `Landroid/os/Environment;->getExternalStorageDirectory()Ljava/io/File;`.
///
/// The same triple is the identity of a method defined in an app, so it also
/// serves as [`MethodId`]. Ordering is lexical on
/// `(class_descriptor, name, proto)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodRef {
    pub class_descriptor: String,
    pub name: String,
    pub proto: String,
}

/// Identity key of a method defined in an app.
pub type MethodId = MethodRef;

impl MethodRef {
    pub fn new(
        class_descriptor: impl Into<String>,
        name: impl Into<String>,
        proto: impl Into<String>,
    ) -> Self {
        MethodRef {
            class_descriptor: class_descriptor.into(),
            name: name.into(),
            proto: proto.into(),
        }
    }
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}{}", self.class_descriptor, self.name, self.proto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InvokeKind {
    Virtual,
    Static,
    Direct,
    Interface,
    Super,
}

impl InvokeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InvokeKind::Virtual => "virtual",
            InvokeKind::Static => "static",
            InvokeKind::Direct => "direct",
            InvokeKind::Interface => "interface",
            InvokeKind::Super => "super",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "virtual" => InvokeKind::Virtual,
            "static" => InvokeKind::Static,
            "direct" => InvokeKind::Direct,
            "interface" => InvokeKind::Interface,
            "super" => InvokeKind::Super,
            _ => return None,
        })
    }
}

/// The interpreted content of one method body line.
///
/// Register operands are kept as text so the instruction can be rendered
/// again; they carry no meaning for detection.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Op {
    Invoke {
        kind: InvokeKind,
        range: bool,
        registers: String,
        target: MethodRef,
    },
    StringConst {
        register: String,
        value: String,
        jumbo: bool,
    },
    NewInstance {
        register: String,
        type_descriptor: String,
    },
    /// Any other line, byte-for-byte (including indentation).
    Opaque(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Op,
    /// 1-based line in the source file.
    pub source_line: usize,
}

impl Instruction {
    pub fn is_opaque(&self) -> bool {
        matches!(self.op, Op::Opaque(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDef {
    pub owner: String,
    pub name: String,
    pub proto: String,
    pub flags: Vec<String>,
    pub body: Vec<Instruction>,
    /// Line of the `.method` directive.
    pub source_line: usize,
}

impl MethodDef {
    pub fn id(&self) -> MethodId {
        MethodRef::new(self.owner.clone(), self.name.clone(), self.proto.clone())
    }

    /// Equality ignoring source line numbers.
    pub fn structurally_eq(&self, other: &MethodDef) -> bool {
        self.owner == other.owner
            && self.name == other.name
            && self.proto == other.proto
            && self.flags == other.flags
            && self.body.len() == other.body.len()
            && self.body.iter().zip(&other.body).all(|(a, b)| a.op == b.op)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub descriptor: String,
    /// Empty when the class has no `.super` directive.
    pub super_descriptor: String,
    pub flags: Vec<String>,
    /// Non-blank lines outside method bodies other than `.class`/`.super`
    /// (fields, annotations, `.source`, comments), in source order.
    pub metadata: Vec<String>,
    pub methods: Vec<MethodDef>,
    pub source_file: String,
}

impl ClassDef {
    /// Equality ignoring source line numbers: interpreted instructions must
    /// match exactly and opaque lines byte-for-byte.
    pub fn structurally_eq(&self, other: &ClassDef) -> bool {
        self.descriptor == other.descriptor
            && self.super_descriptor == other.super_descriptor
            && self.flags == other.flags
            && self.metadata == other.metadata
            && self.source_file == other.source_file
            && self.methods.len() == other.methods.len()
            && self
                .methods
                .iter()
                .zip(&other.methods)
                .all(|(a, b)| a.structurally_eq(b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("class {descriptor} is declared by both {first_source} and {second_source}")]
pub struct DuplicateClass {
    pub descriptor: String,
    pub first_source: String,
    pub second_source: String,
}

/// One app: its identifier and every parsed class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppModel {
    pub app_id: String,
    pub classes: Vec<ClassDef>,
}

impl AppModel {
    /// Builds a model, rejecting two classes with the same descriptor.
    /// Class order is kept as given.
    pub fn new(app_id: impl Into<String>, classes: Vec<ClassDef>) -> Result<Self, DuplicateClass> {
        let mut seen = alloc::collections::BTreeMap::new();
        for class in &classes {
            if let Some(first) = seen.insert(class.descriptor.as_str(), class.source_file.as_str())
            {
                return Err(DuplicateClass {
                    descriptor: class.descriptor.clone(),
                    first_source: first.into(),
                    second_source: class.source_file.clone(),
                });
            }
        }
        Ok(AppModel {
            app_id: app_id.into(),
            classes,
        })
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodDef> {
        self.classes.iter().flat_map(|c| c.methods.iter())
    }
}

/// True for object type descriptors (`Lpkg/Name;`).
pub fn is_object_descriptor(s: &str) -> bool {
    s.len() > 2
        && s.starts_with('L')
        && s.ends_with(';')
        && !s[1..s.len() - 1].contains(|c: char| c == ';' || c.is_whitespace())
}
