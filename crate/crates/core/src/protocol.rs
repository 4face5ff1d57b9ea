//! The machine-readable sectioning protocol: how the specimen was grossed.
//!
//! A protocol names every tissue fragment produced during grossing:
//! sagittal fragments of the apex and base regions, and the left/right
//! (optionally ventral/dorsal) pieces of each transverse central slice.
//! See the crate README for the JSON schema.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{Map, Value};

/// Errors from protocol parsing and validation. Each carries enough context
/// to point at the offending element.
#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    /// The document is not well-formed JSON.
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    /// The document shape does not match the schema (missing/extra fields,
    /// wrong types).
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    /// The document is well-shaped but violates a protocol invariant.
    #[error("validation error at {path}: {message}")]
    Validation { path: String, message: String },
}

fn schema_err(path: &str, message: impl Into<String>) -> ProtocolError {
    ProtocolError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn validation_err(path: &str, message: impl Into<String>) -> ProtocolError {
    ProtocolError::Validation {
        path: path.to_string(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Fragment identifiers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn code(self) -> char {
        match self {
            Side::Left => 'L',
            Side::Right => 'R',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Frontal {
    Ventral,
    Dorsal,
}

impl Frontal {
    pub fn code(self) -> char {
        match self {
            Frontal::Ventral => 'V',
            Frontal::Dorsal => 'D',
        }
    }
}

/// A side compartment of a slice or region: L, R, or the frontal-split
/// variants LV/LD/RV/RD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Compartment {
    pub side: Side,
    pub frontal: Option<Frontal>,
}

impl Compartment {
    pub const ORDER: [Compartment; 6] = [
        Compartment {
            side: Side::Left,
            frontal: None,
        },
        Compartment {
            side: Side::Left,
            frontal: Some(Frontal::Ventral),
        },
        Compartment {
            side: Side::Left,
            frontal: Some(Frontal::Dorsal),
        },
        Compartment {
            side: Side::Right,
            frontal: None,
        },
        Compartment {
            side: Side::Right,
            frontal: Some(Frontal::Ventral),
        },
        Compartment {
            side: Side::Right,
            frontal: Some(Frontal::Dorsal),
        },
    ];

    /// Compartments legal for a region with the given frontal-split flag, in
    /// traversal order (L, R or LV, LD, RV, RD).
    pub fn family(split_frontal: bool) -> Vec<Compartment> {
        Self::ORDER
            .iter()
            .copied()
            .filter(|c| c.frontal.is_some() == split_frontal)
            .collect()
    }

    pub fn key(&self) -> String {
        let mut s = String::new();
        s.push(self.side.code());
        if let Some(f) = self.frontal {
            s.push(f.code());
        }
        s
    }

    pub fn parse_key(key: &str) -> Option<Compartment> {
        let mut chars = key.chars();
        let side = match chars.next()? {
            'L' => Side::Left,
            'R' => Side::Right,
            _ => return None,
        };
        let frontal = match chars.next() {
            None => None,
            Some('V') => Some(Frontal::Ventral),
            Some('D') => Some(Frontal::Dorsal),
            Some(_) => return None,
        };
        if chars.next().is_some() {
            return None;
        }
        Some(Compartment { side, frontal })
    }

    fn order_index(&self) -> usize {
        Self::ORDER.iter().position(|c| c == self).unwrap()
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Identifier of one tissue fragment (block/cassette).
///
/// Canonical text form: `<block><L|R>[<V|D>][<seq>]`, e.g. `3L1`, `4RV2`,
/// `7LD`. Central fragments carry no sequence number; apex/base (sagittal)
/// fragments require one, starting at 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FragmentId {
    pub block: String,
    pub side: Side,
    pub frontal: Option<Frontal>,
    pub seq: Option<u32>,
}

impl FragmentId {
    /// Parse the canonical grammar `^[A-Za-z0-9]+[LR][VD]?[0-9]*$`.
    /// The error value is a human-readable reason (no path context).
    pub fn parse(text: &str) -> Result<FragmentId, String> {
        if text.is_empty() {
            return Err("empty fragment id".into());
        }
        if !text.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(format!("id '{text}' contains non-alphanumeric characters"));
        }
        let digits_at = text
            .rfind(|c: char| !c.is_ascii_digit())
            .map(|i| i + 1)
            .unwrap_or(0);
        let (head, digits) = text.split_at(digits_at);
        let seq = if digits.is_empty() {
            None
        } else {
            if digits.starts_with('0') {
                return Err(format!(
                    "id '{text}' has a non-canonical sequence number '{digits}' (leading zero or zero)"
                ));
            }
            Some(digits.parse::<u32>().map_err(|_| {
                format!("id '{text}' has an unparseable sequence number '{digits}'")
            })?)
        };
        let mut rest = head.chars().rev();
        let mut last = rest
            .next()
            .ok_or_else(|| format!("id '{text}' lacks the required L/R side letter"))?;
        let frontal = match last {
            'V' => {
                last = rest
                    .next()
                    .ok_or_else(|| format!("id '{text}' lacks the required L/R side letter"))?;
                Some(Frontal::Ventral)
            }
            'D' => {
                last = rest
                    .next()
                    .ok_or_else(|| format!("id '{text}' lacks the required L/R side letter"))?;
                Some(Frontal::Dorsal)
            }
            _ => None,
        };
        let side = match last {
            'L' => Side::Left,
            'R' => Side::Right,
            _ => {
                return Err(format!(
                    "id '{text}' lacks the required L/R side letter before '{last}'"
                ))
            }
        };
        let block: String = rest.rev().collect();
        if block.is_empty() {
            return Err(format!("id '{text}' has an empty block identifier"));
        }
        Ok(FragmentId {
            block,
            side,
            frontal,
            seq,
        })
    }

    /// Canonical text form; `parse(canonical(id)) == id`.
    pub fn canonical(&self) -> String {
        let mut s = self.block.clone();
        s.push(self.side.code());
        if let Some(f) = self.frontal {
            s.push(f.code());
        }
        if let Some(seq) = self.seq {
            s.push_str(&seq.to_string());
        }
        s
    }

    pub fn compartment(&self) -> Compartment {
        Compartment {
            side: self.side,
            frontal: self.frontal,
        }
    }
}

impl fmt::Display for FragmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

// ---------------------------------------------------------------------------
// Protocol structure
// ---------------------------------------------------------------------------

/// Which part of the specimen a fragment comes from. Central slices carry
/// their 1-based index (1 = adjacent to the apex).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Apex,
    Base,
    Central(u32),
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::Apex => "apex",
            Region::Base => "base",
            Region::Central(_) => "central",
        }
    }
}

/// Apex or base region: sagittally cut into per-compartment fragments.
#[derive(Debug, Clone, PartialEq)]
pub struct ApexBaseSpec {
    /// Thickness of the region along the apex–base axis (mm).
    pub offset_mm: f64,
    /// Whether the L/R halves are additionally split into ventral/dorsal.
    pub split_frontal: bool,
    /// Fragments per compartment, in canonical compartment order. The
    /// fragment count per compartment is the list length.
    pub sections: Vec<(Compartment, Vec<FragmentId>)>,
}

impl ApexBaseSpec {
    pub fn fragment_count(&self) -> usize {
        self.sections.iter().map(|(_, ids)| ids.len()).sum()
    }
}

/// One transverse central slice, divided into L/R or LV/LD/RV/RD pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralSliceSpec {
    /// 1-based position, 1 = adjacent to the apex.
    pub index: u32,
    pub split_frontal: bool,
    /// Ids in compartment order (L,R or LV,LD,RV,RD).
    pub ids: Vec<FragmentId>,
}

/// The full grossing record for one case.
#[derive(Debug, Clone, PartialEq)]
pub struct SectioningProtocol {
    pub case_id: String,
    pub apex: ApexBaseSpec,
    pub base: ApexBaseSpec,
    /// Central slices ordered by index (1..=n).
    pub central: Vec<CentralSliceSpec>,
}

impl SectioningProtocol {
    pub fn central_count(&self) -> usize {
        self.central.len()
    }

    pub fn total_fragment_count(&self) -> usize {
        self.apex.fragment_count()
            + self.base.fragment_count()
            + self.central.iter().map(|s| s.ids.len()).sum::<usize>()
    }
}

/// Deterministic traversal of every fragment with its region tag:
/// apex compartments (canonical order, each by sequence), central slices by
/// index (compartment order within a slice), then base.
pub fn fragment_ids(p: &SectioningProtocol) -> Vec<(FragmentId, Region)> {
    let mut out = Vec::with_capacity(p.total_fragment_count());
    for (_, ids) in &p.apex.sections {
        out.extend(ids.iter().cloned().map(|id| (id, Region::Apex)));
    }
    for slice in &p.central {
        out.extend(
            slice
                .ids
                .iter()
                .cloned()
                .map(|id| (id, Region::Central(slice.index))),
        );
    }
    for (_, ids) in &p.base.sections {
        out.extend(ids.iter().cloned().map(|id| (id, Region::Base)));
    }
    out
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ProtocolError> {
    v.as_object()
        .ok_or_else(|| schema_err(path, "expected a JSON object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, ProtocolError> {
    v.as_array()
        .ok_or_else(|| schema_err(path, "expected a JSON array"))
}

fn as_string<'a>(v: &'a Value, path: &str) -> Result<&'a str, ProtocolError> {
    v.as_str()
        .ok_or_else(|| schema_err(path, "expected a string"))
}

fn as_bool(v: &Value, path: &str) -> Result<bool, ProtocolError> {
    v.as_bool()
        .ok_or_else(|| schema_err(path, "expected a boolean"))
}

fn as_number(v: &Value, path: &str) -> Result<f64, ProtocolError> {
    v.as_f64()
        .ok_or_else(|| schema_err(path, "expected a number"))
}

fn as_count(v: &Value, path: &str) -> Result<u64, ProtocolError> {
    v.as_u64()
        .ok_or_else(|| schema_err(path, "expected a non-negative integer"))
}

fn get<'a>(map: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, ProtocolError> {
    map.get(key)
        .ok_or_else(|| schema_err(path, format!("missing required key '{key}'")))
}

fn reject_unknown_keys(
    map: &Map<String, Value>,
    allowed: &[&str],
    path: &str,
) -> Result<(), ProtocolError> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(schema_err(path, format!("unknown key '{key}'")));
        }
    }
    Ok(())
}

fn parse_fragment_id(v: &Value, path: &str) -> Result<FragmentId, ProtocolError> {
    let text = as_string(v, path)?;
    FragmentId::parse(text).map_err(|m| validation_err(path, m))
}

fn parse_apex_base(v: &Value, path: &str) -> Result<ApexBaseSpec, ProtocolError> {
    let obj = as_object(v, path)?;
    reject_unknown_keys(obj, &["offset_mm", "split_frontal", "sections"], path)?;
    let offset_mm = as_number(get(obj, "offset_mm", path)?, &format!("{path}.offset_mm"))?;
    if !(offset_mm > 0.0 && offset_mm.is_finite()) {
        return Err(validation_err(
            &format!("{path}.offset_mm"),
            format!("offset must be a positive length in mm, got {offset_mm}"),
        ));
    }
    let split_frontal = as_bool(
        get(obj, "split_frontal", path)?,
        &format!("{path}.split_frontal"),
    )?;
    let sections_path = format!("{path}.sections");
    let sections_obj = as_object(get(obj, "sections", path)?, &sections_path)?;
    if sections_obj.is_empty() {
        return Err(validation_err(&sections_path, "no compartments given"));
    }

    let family = Compartment::family(split_frontal);
    let mut by_compartment: BTreeMap<usize, (Compartment, Vec<FragmentId>)> = BTreeMap::new();
    for (key, section_value) in sections_obj {
        let section_path = format!("{sections_path}.{key}");
        let compartment = Compartment::parse_key(key)
            .ok_or_else(|| schema_err(&section_path, format!("invalid compartment key '{key}'")))?;
        if !family.contains(&compartment) {
            return Err(validation_err(
                &section_path,
                format!("compartment '{key}' conflicts with split_frontal={split_frontal}"),
            ));
        }
        let section_obj = as_object(section_value, &section_path)?;
        reject_unknown_keys(section_obj, &["count", "ids"], &section_path)?;
        let count = as_count(
            get(section_obj, "count", &section_path)?,
            &format!("{section_path}.count"),
        )?;
        if count == 0 {
            return Err(validation_err(
                &format!("{section_path}.count"),
                "fragment count must be positive",
            ));
        }
        let ids_path = format!("{section_path}.ids");
        let ids_value = as_array(get(section_obj, "ids", &section_path)?, &ids_path)?;
        let mut ids = Vec::with_capacity(ids_value.len());
        for (i, id_value) in ids_value.iter().enumerate() {
            ids.push(parse_fragment_id(id_value, &format!("{ids_path}[{i}]"))?);
        }
        if ids.len() as u64 != count {
            return Err(validation_err(
                &ids_path,
                format!("count is {count} but {} ids are listed", ids.len()),
            ));
        }
        for (i, id) in ids.iter().enumerate() {
            let id_path = format!("{ids_path}[{i}]");
            if id.compartment() != compartment {
                return Err(validation_err(
                    &id_path,
                    format!(
                        "id '{id}' belongs to compartment '{}', expected '{compartment}'",
                        id.compartment()
                    ),
                ));
            }
            match id.seq {
                Some(seq) if seq as usize == i + 1 => {}
                Some(seq) => {
                    return Err(validation_err(
                        &id_path,
                        format!("id '{id}' has sequence {seq}, expected {}", i + 1),
                    ));
                }
                None => {
                    return Err(validation_err(
                        &id_path,
                        format!("sagittal fragment '{id}' requires a sequence number"),
                    ));
                }
            }
        }
        by_compartment.insert(compartment.order_index(), (compartment, ids));
    }
    Ok(ApexBaseSpec {
        offset_mm,
        split_frontal,
        sections: by_compartment.into_values().collect(),
    })
}

fn parse_central_slice(v: &Value, path: &str) -> Result<CentralSliceSpec, ProtocolError> {
    let obj = as_object(v, path)?;
    reject_unknown_keys(obj, &["index", "split_frontal", "ids"], path)?;
    let index = as_count(get(obj, "index", path)?, &format!("{path}.index"))?;
    if index == 0 || index > u32::MAX as u64 {
        return Err(validation_err(
            &format!("{path}.index"),
            "slice index must be a positive integer",
        ));
    }
    let split_frontal = as_bool(
        get(obj, "split_frontal", path)?,
        &format!("{path}.split_frontal"),
    )?;
    let ids_path = format!("{path}.ids");
    let ids_value = as_array(get(obj, "ids", path)?, &ids_path)?;
    let expected = Compartment::family(split_frontal);
    if ids_value.len() != expected.len() {
        return Err(validation_err(
            &ids_path,
            format!(
                "slice with split_frontal={split_frontal} needs exactly {} ids ({}), got {}",
                expected.len(),
                expected
                    .iter()
                    .map(Compartment::key)
                    .collect::<Vec<_>>()
                    .join(","),
                ids_value.len()
            ),
        ));
    }
    let mut ids = Vec::with_capacity(ids_value.len());
    for (i, id_value) in ids_value.iter().enumerate() {
        let id_path = format!("{ids_path}[{i}]");
        let id = parse_fragment_id(id_value, &id_path)?;
        if id.compartment() != expected[i] {
            return Err(validation_err(
                &id_path,
                format!(
                    "id '{id}' is in compartment '{}', position {} expects '{}'",
                    id.compartment(),
                    i,
                    expected[i]
                ),
            ));
        }
        if let Some(seq) = id.seq {
            return Err(validation_err(
                &id_path,
                format!("central fragment '{id}' must not carry a sequence number (found {seq})"),
            ));
        }
        ids.push(id);
    }
    Ok(CentralSliceSpec {
        index: index as u32,
        split_frontal,
        ids,
    })
}

/// Parse and fully validate a protocol document.
pub fn parse_protocol(text: &str) -> Result<SectioningProtocol, ProtocolError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ProtocolError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let root = as_object(&value, "$")?;
    reject_unknown_keys(
        root,
        &["case_id", "apex", "base", "central_count", "central"],
        "$",
    )?;
    let case_id = as_string(get(root, "case_id", "$")?, "case_id")?.to_string();
    if case_id.is_empty() {
        return Err(validation_err("case_id", "case id must be non-empty"));
    }
    let apex = parse_apex_base(get(root, "apex", "$")?, "apex")?;
    let base = parse_apex_base(get(root, "base", "$")?, "base")?;
    let central_count = as_count(get(root, "central_count", "$")?, "central_count")?;
    if central_count == 0 {
        return Err(validation_err(
            "central_count",
            "at least one central slice is required",
        ));
    }
    let central_value = as_array(get(root, "central", "$")?, "central")?;
    let mut central = Vec::with_capacity(central_value.len());
    for (i, v) in central_value.iter().enumerate() {
        central.push(parse_central_slice(v, &format!("central[{i}]"))?);
    }
    if central.len() as u64 != central_count {
        return Err(validation_err(
            "central",
            format!(
                "central_count is {central_count} but {} slices are listed",
                central.len()
            ),
        ));
    }
    for (i, slice) in central.iter().enumerate() {
        if slice.index as usize != i + 1 {
            return Err(validation_err(
                &format!("central[{i}].index"),
                format!(
                    "slice indices must be exactly 1..{central_count} in order; position {i} has index {}",
                    slice.index
                ),
            ));
        }
    }

    let protocol = SectioningProtocol {
        case_id,
        apex,
        base,
        central,
    };

    // Global id uniqueness, reported at the path of the second occurrence.
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    for (id, path) in enumerate_id_paths(&protocol) {
        let canonical = id.canonical();
        if let Some(first) = seen.get(&canonical) {
            return Err(validation_err(
                &path,
                format!("duplicate fragment id '{canonical}' (first used at {first})"),
            ));
        }
        seen.insert(canonical, path);
    }
    Ok(protocol)
}

/// Fragment ids with their JSON paths, in document order.
fn enumerate_id_paths(p: &SectioningProtocol) -> Vec<(FragmentId, String)> {
    let mut out = Vec::new();
    for (region_key, spec) in [("apex", &p.apex), ("base", &p.base)] {
        for (compartment, ids) in &spec.sections {
            for (i, id) in ids.iter().enumerate() {
                out.push((
                    id.clone(),
                    format!("{region_key}.sections.{compartment}.ids[{i}]"),
                ));
            }
        }
    }
    for (s, slice) in p.central.iter().enumerate() {
        for (i, id) in slice.ids.iter().enumerate() {
            out.push((id.clone(), format!("central[{s}].ids[{i}]")));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Canonical serialization: sorted keys, fixed structure, trailing newline.
/// `parse_protocol(serialize_protocol(p))` is structurally identical to `p`,
/// and repeated serialization is byte-identical.
pub fn serialize_protocol(p: &SectioningProtocol) -> String {
    let apex_base = |spec: &ApexBaseSpec| {
        let mut sections = Map::new();
        for (compartment, ids) in &spec.sections {
            let mut section = Map::new();
            section.insert("count".into(), Value::from(ids.len() as u64));
            section.insert(
                "ids".into(),
                Value::from(
                    ids.iter()
                        .map(|id| Value::from(id.canonical()))
                        .collect::<Vec<_>>(),
                ),
            );
            sections.insert(compartment.key(), Value::Object(section));
        }
        let mut obj = Map::new();
        obj.insert("offset_mm".into(), Value::from(spec.offset_mm));
        obj.insert("split_frontal".into(), Value::from(spec.split_frontal));
        obj.insert("sections".into(), Value::Object(sections));
        Value::Object(obj)
    };
    let central: Vec<Value> = p
        .central
        .iter()
        .map(|slice| {
            let mut obj = Map::new();
            obj.insert("index".into(), Value::from(slice.index));
            obj.insert("split_frontal".into(), Value::from(slice.split_frontal));
            obj.insert(
                "ids".into(),
                Value::from(
                    slice
                        .ids
                        .iter()
                        .map(|id| Value::from(id.canonical()))
                        .collect::<Vec<_>>(),
                ),
            );
            Value::Object(obj)
        })
        .collect();
    let mut root = Map::new();
    root.insert("case_id".into(), Value::from(p.case_id.clone()));
    root.insert("apex".into(), apex_base(&p.apex));
    root.insert("base".into(), apex_base(&p.base));
    root.insert("central_count".into(), Value::from(p.central.len() as u64));
    root.insert("central".into(), Value::from(central));
    let mut text = serde_json::to_string_pretty(&Value::Object(root))
        .expect("protocol serialization cannot fail");
    text.push('\n');
    text
}
