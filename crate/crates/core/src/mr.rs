//! Meaning representations and their `da(slot[value], ...)` surface syntax.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{Ontology, OntologyError, SlotKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrValue {
    Categorical(String),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub slot: String,
    pub value: AttrValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeaningRepresentation {
    pub dialogue_act: String,
    pub attributes: Vec<Attribute>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MrError {
    #[error("empty meaning representation")]
    Empty,
    #[error("malformed meaning representation at byte {pos}: {msg}")]
    MalformedSyntax { pos: usize, msg: &'static str },
    #[error("unknown dialogue act `{0}`")]
    UnknownDialogueAct(String),
    #[error("unknown slot `{0}`")]
    UnknownSlot(String),
    #[error("slot `{0}` appears more than once")]
    DuplicateSlot(String),
    #[error("dialogue act `{0}` requires at least one attribute")]
    MissingAttributes(String),
}

impl MeaningRepresentation {
    pub fn get(&self, slot: &str) -> Option<&AttrValue> {
        self.attributes.iter().find(|a| a.slot == slot).map(|a| &a.value)
    }

    /// Checks the MR against an ontology: known act and slots, matching
    /// slot kinds, unique slots, attributes present unless content-free.
    pub fn validate(&self, ontology: &Ontology) -> Result<(), MrError> {
        let da = ontology
            .dialogue_act(&self.dialogue_act)
            .map_err(|_| MrError::UnknownDialogueAct(self.dialogue_act.clone()))?;
        if self.attributes.is_empty() && !da.content_free {
            return Err(MrError::MissingAttributes(self.dialogue_act.clone()));
        }
        for (i, attr) in self.attributes.iter().enumerate() {
            let spec = ontology.slot(&attr.slot).map_err(|_| MrError::UnknownSlot(attr.slot.clone()))?;
            let kind_ok = matches!(
                (spec.kind, &attr.value),
                (SlotKind::Categorical, AttrValue::Categorical(_)) | (SlotKind::Boolean, AttrValue::Bool(_))
            );
            if !kind_ok {
                return Err(MrError::MalformedSyntax { pos: 0, msg: "slot value does not match the slot kind" });
            }
            if self.attributes[..i].iter().any(|a| a.slot == attr.slot) {
                return Err(MrError::DuplicateSlot(attr.slot.clone()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for MeaningRepresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.dialogue_act)?;
        for (i, attr) in self.attributes.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}[", attr.slot)?;
            match &attr.value {
                AttrValue::Categorical(v) => {
                    for c in v.chars() {
                        if c == ']' || c == '\\' {
                            f.write_str("\\")?;
                        }
                        write!(f, "{c}")?;
                    }
                }
                AttrValue::Bool(true) => f.write_str("yes")?,
                AttrValue::Bool(false) => f.write_str("no")?,
            }
            f.write_str("]")?;
        }
        f.write_str(")")
    }
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn expect(&mut self, b: u8, msg: &'static str) -> Result<(), MrError> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(MrError::MalformedSyntax { pos: self.pos, msg })
        }
    }

    fn ident(&mut self, msg: &'static str) -> Result<&'a str, MrError> {
        let start = self.pos;
        while self.peek().is_some_and(is_ident_byte) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(MrError::MalformedSyntax { pos: start, msg });
        }
        Ok(&self.src[start..self.pos])
    }

    /// Reads up to the closing `]`, honouring `\]` and `\\` escapes.
    fn value(&mut self) -> Result<String, MrError> {
        let mut out = String::new();
        let mut chars = self.src[self.pos..].char_indices();
        while let Some((off, c)) = chars.next() {
            match c {
                ']' => {
                    self.pos += off + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, esc @ (']' | '\\'))) => out.push(esc),
                    _ => {
                        return Err(MrError::MalformedSyntax { pos: self.pos + off, msg: "invalid escape in value" })
                    }
                },
                c => out.push(c),
            }
        }
        Err(MrError::MalformedSyntax { pos: self.src.len(), msg: "unterminated value" })
    }
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "yes" | "true" => Some(true),
        "no" | "false" => Some(false),
        _ => None,
    }
}

/// Parses `da(slot[value], slot[value])` and resolves slot kinds against
/// the ontology. Whitespace inside values is kept as written.
pub fn parse_mr(raw: &str, ontology: &Ontology) -> Result<MeaningRepresentation, MrError> {
    if raw.trim().is_empty() {
        return Err(MrError::Empty);
    }
    let mut cur = Cursor { src: raw, pos: 0 };
    cur.skip_ws();
    let da = cur.ident("expected dialogue act name")?;
    if !ontology.has_dialogue_act(da) {
        return Err(MrError::UnknownDialogueAct(da.to_string()));
    }
    cur.skip_ws();
    cur.expect(b'(', "expected `(` after dialogue act")?;
    cur.skip_ws();

    let mut attributes: Vec<Attribute> = Vec::new();
    if cur.peek() != Some(b')') {
        loop {
            cur.skip_ws();
            let slot = cur.ident("expected slot name")?;
            cur.skip_ws();
            cur.expect(b'[', "expected `[` after slot name")?;
            let value_pos = cur.pos;
            let raw_value = cur.value()?;
            let spec = ontology.slot(slot).map_err(|e| match e {
                OntologyError::UnknownSlot(s) => MrError::UnknownSlot(s),
                _ => MrError::UnknownSlot(slot.to_string()),
            })?;
            let value = match spec.kind {
                SlotKind::Categorical => AttrValue::Categorical(raw_value),
                SlotKind::Boolean => AttrValue::Bool(
                    parse_bool(raw_value.trim())
                        .ok_or(MrError::MalformedSyntax { pos: value_pos, msg: "boolean slot expects yes/no/true/false" })?,
                ),
            };
            if attributes.iter().any(|a| a.slot == slot) {
                return Err(MrError::DuplicateSlot(slot.to_string()));
            }
            attributes.push(Attribute { slot: slot.to_string(), value });
            cur.skip_ws();
            match cur.peek() {
                Some(b',') => cur.pos += 1,
                Some(b')') => break,
                _ => return Err(MrError::MalformedSyntax { pos: cur.pos, msg: "expected `,` or `)`" }),
            }
        }
    }
    cur.expect(b')', "expected `)`")?;
    cur.skip_ws();
    if cur.pos != raw.len() {
        return Err(MrError::MalformedSyntax { pos: cur.pos, msg: "trailing input after `)`" });
    }

    let mr = MeaningRepresentation { dialogue_act: da.to_string(), attributes };
    if mr.attributes.is_empty() && !ontology.dialogue_act(da).map(|s| s.content_free).unwrap_or(false) {
        return Err(MrError::MissingAttributes(da.to_string()));
    }
    Ok(mr)
}
