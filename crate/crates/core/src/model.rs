//! Network, measurement and case-file model.
//!
//! A [`Case`] is the single input to every analysis: the bus/line graph of the
//! network plus the placement of real-power measurements on it. Cases are
//! always validated on construction, so downstream code can rely on the
//! invariants listed on [`validate_case`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::ParseError;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Bus identifier. Buses are numbered contiguously from 1.
    BusId
);
id_type!(
    /// Line identifier.
    LineId
);
id_type!(
    /// Measurement identifier; also the canonical order for every tie-break.
    MeasurementId
);

/// Exact rational used for susceptances and Jacobian entries.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bus {
    pub id: BusId,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub id: LineId,
    pub from: BusId,
    pub to: BusId,
    /// Per-unit susceptance, when the case carries line data.
    pub susceptance: Option<Rational>,
}

impl Line {
    pub fn other_end(&self, bus: BusId) -> BusId {
        if bus == self.from {
            self.to
        } else {
            self.from
        }
    }

    pub fn touches(&self, bus: BusId) -> bool {
        self.from == bus || self.to == bus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeasurementKind {
    Flow(LineId),
    Injection(BusId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Measurement {
    pub id: MeasurementId,
    pub kind: MeasurementKind,
}

impl Measurement {
    pub fn is_flow(&self) -> bool {
        matches!(self.kind, MeasurementKind::Flow(_))
    }

    pub fn is_injection(&self) -> bool {
        matches!(self.kind, MeasurementKind::Injection(_))
    }

    /// Short human label: `F<line>` or `I<bus>`.
    pub fn label(&self) -> String {
        match self.kind {
            MeasurementKind::Flow(l) => format!("F{}", l.0),
            MeasurementKind::Injection(b) => format!("I{}", b.0),
        }
    }
}

/// Input file formats understood by [`parse_case`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    Json,
    Matpower,
}

// ---------------------------------------------------------------------------
// Raw (unvalidated) file representation
// ---------------------------------------------------------------------------

/// Case as it appears on disk, before validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseData {
    pub buses: Vec<BusData>,
    pub lines: Vec<LineData>,
    pub measurements: Vec<MeasurementData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_bus: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusData {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineData {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub susceptance: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindTag {
    Flow,
    Injection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementData {
    pub id: u32,
    pub kind: KindTag,
    pub target: u32,
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Which invariant an issue violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Invariant {
    NoBuses,
    DuplicateBusId,
    NonContiguousBusIds,
    ZeroId,
    DuplicateLineId,
    SelfLoop,
    ParallelLines,
    BadSusceptance,
    DuplicateMeasurementId,
    DanglingReference,
    DuplicateFlowMeasurement,
    DuplicateInjectionMeasurement,
    MissingReferenceBus,
    Disconnected,
}

impl Invariant {
    pub fn description(self) -> &'static str {
        match self {
            Invariant::NoBuses => "case has no buses",
            Invariant::DuplicateBusId => "duplicate bus id",
            Invariant::NonContiguousBusIds => "bus ids not contiguous from 1",
            Invariant::ZeroId => "ids must be positive",
            Invariant::DuplicateLineId => "duplicate line id",
            Invariant::SelfLoop => "line is a self-loop",
            Invariant::ParallelLines => "parallel lines between the same buses",
            Invariant::BadSusceptance => "susceptance is not a nonzero rational",
            Invariant::DuplicateMeasurementId => "duplicate measurement id",
            Invariant::DanglingReference => "dangling reference",
            Invariant::DuplicateFlowMeasurement => "duplicate flow measurement",
            Invariant::DuplicateInjectionMeasurement => "duplicate injection measurement",
            Invariant::MissingReferenceBus => "reference bus does not exist",
            Invariant::Disconnected => "graph not connected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationIssue {
    pub invariant: Invariant,
    /// Offending ids (bus, line or measurement ids depending on the invariant).
    pub ids: Vec<u32>,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant.description(), self.message)
    }
}

/// Every violated invariant of a case; empty iff the case is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn contains(&self, invariant: Invariant) -> bool {
        self.issues.iter().any(|i| i.invariant == invariant)
    }

    fn push(&mut self, invariant: Invariant, ids: Vec<u32>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            invariant,
            ids,
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Parses `"p/q"` or a decimal literal such as `"16.9"` into a rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    let Some((num, den)) = text.split_once('/') else {
        return parse_decimal(text);
    };
    let (num, den) = (num.trim(), den.trim());
    let num = BigInt::from_str(num).ok()?;
    let den = BigInt::from_str(den).ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num, den))
}

pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Checks every case invariant and reports all violations.
///
/// Invariants: bus ids unique and contiguous from 1; line ids unique, no
/// self-loops and no parallel lines; susceptances (when present) nonzero
/// rationals; measurement ids unique and referencing existing lines/buses; at
/// most one flow per line and one injection per bus; the reference bus exists;
/// the network graph is connected.
pub fn validate_case(data: &CaseData) -> ValidationReport {
    let mut report = ValidationReport::default();

    if data.buses.is_empty() {
        report.push(Invariant::NoBuses, vec![], "no buses");
    }

    let mut bus_ids = BTreeSet::new();
    for bus in &data.buses {
        if bus.id == 0 {
            report.push(Invariant::ZeroId, vec![0], "bus id 0");
        }
        if !bus_ids.insert(bus.id) {
            report.push(
                Invariant::DuplicateBusId,
                vec![bus.id],
                format!("bus {}", bus.id),
            );
        }
    }
    let n = bus_ids.len() as u32;
    if !bus_ids.is_empty() && (bus_ids.first() != Some(&1) || bus_ids.last() != Some(&n)) {
        report.push(
            Invariant::NonContiguousBusIds,
            bus_ids.iter().copied().collect(),
            format!("expected ids 1..={n}"),
        );
    }

    let mut line_ids = BTreeSet::new();
    let mut pairs: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for line in &data.lines {
        if line.id == 0 {
            report.push(Invariant::ZeroId, vec![0], "line id 0");
        }
        if !line_ids.insert(line.id) {
            report.push(
                Invariant::DuplicateLineId,
                vec![line.id],
                format!("line {}", line.id),
            );
        }
        for end in [line.from, line.to] {
            if !bus_ids.contains(&end) {
                report.push(
                    Invariant::DanglingReference,
                    vec![line.id, end],
                    format!("line {} references bus {end}", line.id),
                );
            }
        }
        if line.from == line.to {
            report.push(
                Invariant::SelfLoop,
                vec![line.id],
                format!("line {}", line.id),
            );
            continue;
        }
        let key = (line.from.min(line.to), line.from.max(line.to));
        if let Some(first) = pairs.insert(key, line.id) {
            report.push(
                Invariant::ParallelLines,
                vec![first, line.id],
                format!(
                    "lines {first} and {} join buses {} and {}",
                    line.id, key.0, key.1
                ),
            );
        }
        if let Some(text) = &line.susceptance {
            match parse_rational(text) {
                Some(b) if !b.is_zero() => {}
                _ => report.push(
                    Invariant::BadSusceptance,
                    vec![line.id],
                    format!("line {}: {text:?}", line.id),
                ),
            }
        }
    }

    let mut meas_ids = BTreeSet::new();
    let mut flows: BTreeMap<u32, u32> = BTreeMap::new();
    let mut injections: BTreeMap<u32, u32> = BTreeMap::new();
    for m in &data.measurements {
        if m.id == 0 {
            report.push(Invariant::ZeroId, vec![0], "measurement id 0");
        }
        if !meas_ids.insert(m.id) {
            report.push(
                Invariant::DuplicateMeasurementId,
                vec![m.id],
                format!("measurement {}", m.id),
            );
        }
        match m.kind {
            KindTag::Flow => {
                if !line_ids.contains(&m.target) {
                    report.push(
                        Invariant::DanglingReference,
                        vec![m.id, m.target],
                        format!("measurement {} references line {}", m.id, m.target),
                    );
                }
                if let Some(first) = flows.insert(m.target, m.id) {
                    report.push(
                        Invariant::DuplicateFlowMeasurement,
                        vec![first, m.id],
                        format!("measurements {first} and {} on line {}", m.id, m.target),
                    );
                }
            }
            KindTag::Injection => {
                if !bus_ids.contains(&m.target) {
                    report.push(
                        Invariant::DanglingReference,
                        vec![m.id, m.target],
                        format!("measurement {} references bus {}", m.id, m.target),
                    );
                }
                if let Some(first) = injections.insert(m.target, m.id) {
                    report.push(
                        Invariant::DuplicateInjectionMeasurement,
                        vec![first, m.id],
                        format!("measurements {first} and {} on bus {}", m.id, m.target),
                    );
                }
            }
        }
    }

    let reference = data.reference_bus.unwrap_or(1);
    if !bus_ids.is_empty() && !bus_ids.contains(&reference) {
        report.push(
            Invariant::MissingReferenceBus,
            vec![reference],
            format!("bus {reference}"),
        );
    }

    if bus_ids.len() > 1 {
        let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for line in &data.lines {
            if bus_ids.contains(&line.from) && bus_ids.contains(&line.to) {
                adj.entry(line.from).or_default().push(line.to);
                adj.entry(line.to).or_default().push(line.from);
            }
        }
        let start = *bus_ids.first().unwrap();
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(b) = queue.pop_front() {
            for &next in adj.get(&b).into_iter().flatten() {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        if seen.len() != bus_ids.len() {
            let unreached: Vec<u32> = bus_ids.difference(&seen).copied().collect();
            report.push(
                Invariant::Disconnected,
                unreached.clone(),
                format!("buses {unreached:?} unreachable from bus {start}"),
            );
        }
    }

    report
}

// ---------------------------------------------------------------------------
// Validated case
// ---------------------------------------------------------------------------

/// A validated network + measurement placement. Immutable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    measurements: Vec<Measurement>,
    reference_bus: BusId,
    line_pos: BTreeMap<LineId, usize>,
    meas_pos: BTreeMap<MeasurementId, usize>,
    incident: Vec<Vec<LineId>>,
    flow_on: BTreeMap<LineId, MeasurementId>,
    injection_at: BTreeMap<BusId, MeasurementId>,
}

impl Case {
    /// Validates raw data and builds the case.
    pub fn from_data(data: &CaseData) -> Result<Case, ParseError> {
        let report = validate_case(data);
        if !report.is_empty() {
            if let Some(issue) = report
                .issues
                .iter()
                .find(|i| i.invariant == Invariant::DanglingReference)
            {
                return Err(ParseError::Schema(issue.message.clone()));
            }
            return Err(ParseError::Validation(report));
        }

        let mut buses: Vec<Bus> = data
            .buses
            .iter()
            .map(|b| Bus {
                id: BusId(b.id),
                name: b.name.clone(),
            })
            .collect();
        buses.sort_by_key(|b| b.id);

        let mut lines: Vec<Line> = data
            .lines
            .iter()
            .map(|l| Line {
                id: LineId(l.id),
                from: BusId(l.from),
                to: BusId(l.to),
                susceptance: l.susceptance.as_deref().and_then(parse_rational),
            })
            .collect();
        lines.sort_by_key(|l| l.id);

        let mut measurements: Vec<Measurement> = data
            .measurements
            .iter()
            .map(|m| Measurement {
                id: MeasurementId(m.id),
                kind: match m.kind {
                    KindTag::Flow => MeasurementKind::Flow(LineId(m.target)),
                    KindTag::Injection => MeasurementKind::Injection(BusId(m.target)),
                },
            })
            .collect();
        measurements.sort_by_key(|m| m.id);

        Ok(Case::assemble(
            buses,
            lines,
            measurements,
            BusId(data.reference_bus.unwrap_or(1)),
        ))
    }

    fn assemble(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        measurements: Vec<Measurement>,
        reference_bus: BusId,
    ) -> Case {
        let line_pos = lines.iter().enumerate().map(|(i, l)| (l.id, i)).collect();
        let meas_pos = measurements
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id, i))
            .collect();
        let mut incident = vec![Vec::new(); buses.len() + 1];
        for line in &lines {
            incident[line.from.0 as usize].push(line.id);
            incident[line.to.0 as usize].push(line.id);
        }
        let mut flow_on = BTreeMap::new();
        let mut injection_at = BTreeMap::new();
        for m in &measurements {
            match m.kind {
                MeasurementKind::Flow(l) => {
                    flow_on.insert(l, m.id);
                }
                MeasurementKind::Injection(b) => {
                    injection_at.insert(b, m.id);
                }
            }
        }
        Case {
            buses,
            lines,
            measurements,
            reference_bus,
            line_pos,
            meas_pos,
            incident,
            flow_on,
            injection_at,
        }
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn measurements(&self) -> &[Measurement] {
        &self.measurements
    }

    pub fn reference_bus(&self) -> BusId {
        self.reference_bus
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn bus_ids(&self) -> impl Iterator<Item = BusId> + '_ {
        self.buses.iter().map(|b| b.id)
    }

    pub fn measurement_ids(&self) -> BTreeSet<MeasurementId> {
        self.measurements.iter().map(|m| m.id).collect()
    }

    pub fn line(&self, id: LineId) -> Option<&Line> {
        self.line_pos.get(&id).map(|&i| &self.lines[i])
    }

    pub fn measurement(&self, id: MeasurementId) -> Option<&Measurement> {
        self.meas_pos.get(&id).map(|&i| &self.measurements[i])
    }

    /// Lines incident to `bus`, ascending by id.
    pub fn lines_at(&self, bus: BusId) -> &[LineId] {
        self.incident
            .get(bus.0 as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn flow_on(&self, line: LineId) -> Option<MeasurementId> {
        self.flow_on.get(&line).copied()
    }

    pub fn injection_at(&self, bus: BusId) -> Option<MeasurementId> {
        self.injection_at.get(&bus).copied()
    }

    /// Looks a measurement up by its `F<line>` / `I<bus>` label or by a bare id.
    pub fn resolve_measurement(&self, token: &str) -> Option<MeasurementId> {
        let token = token.trim();
        let parse = |s: &str| s.parse::<u32>().ok();
        if let Some(rest) = token.strip_prefix(['F', 'f']) {
            return self.flow_on(LineId(parse(rest)?));
        }
        if let Some(rest) = token.strip_prefix(['I', 'i']) {
            return self.injection_at(BusId(parse(rest)?));
        }
        let id = MeasurementId(parse(token.strip_prefix('#').unwrap_or(token))?);
        self.measurement(id).map(|m| m.id)
    }

    pub fn label(&self, id: MeasurementId) -> String {
        self.measurement(id)
            .map(Measurement::label)
            .unwrap_or_else(|| format!("#{}", id.0))
    }

    /// Same network with the given measurements deleted.
    pub fn without_measurements(&self, removed: &BTreeSet<MeasurementId>) -> Case {
        let measurements = self
            .measurements
            .iter()
            .filter(|m| !removed.contains(&m.id))
            .copied()
            .collect();
        Case::assemble(
            self.buses.clone(),
            self.lines.clone(),
            measurements,
            self.reference_bus,
        )
    }

    /// Canonical on-disk representation.
    pub fn to_data(&self) -> CaseData {
        CaseData {
            buses: self
                .buses
                .iter()
                .map(|b| BusData {
                    id: b.id.0,
                    name: b.name.clone(),
                })
                .collect(),
            lines: self
                .lines
                .iter()
                .map(|l| LineData {
                    id: l.id.0,
                    from: l.from.0,
                    to: l.to.0,
                    susceptance: l.susceptance.as_ref().map(format_rational),
                })
                .collect(),
            measurements: self
                .measurements
                .iter()
                .map(|m| match m.kind {
                    MeasurementKind::Flow(l) => MeasurementData {
                        id: m.id.0,
                        kind: KindTag::Flow,
                        target: l.0,
                    },
                    MeasurementKind::Injection(b) => MeasurementData {
                        id: m.id.0,
                        kind: KindTag::Injection,
                        target: b.0,
                    },
                })
                .collect(),
            reference_bus: Some(self.reference_bus.0),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_data()).expect("case data serializes")
    }

    /// Compact canonical JSON; stable input for digests.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.to_data()).expect("case data serializes")
    }
}

impl TryFrom<&CaseData> for Case {
    type Error = ParseError;

    fn try_from(data: &CaseData) -> Result<Self, Self::Error> {
        Case::from_data(data)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parses and validates a case.
pub fn parse_case(input: &[u8], format: CaseFormat) -> Result<Case, ParseError> {
    let data = match format {
        CaseFormat::Json => parse_json(input)?,
        CaseFormat::Matpower => parse_matpower(input)?,
    };
    Case::from_data(&data)
}

fn parse_json(input: &[u8]) -> Result<CaseData, ParseError> {
    serde_json::from_slice(input).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => ParseError::Schema(e.to_string()),
            _ => ParseError::Syntax(e.to_string()),
        }
    })
}

/// Reads the `bus` and `branch` tables of a MATPOWER case file.
///
/// Only bus ids and branch `(fbus, tbus, x)` are used; susceptance is `1/x`.
/// The resulting case has no measurements.
fn parse_matpower(input: &[u8]) -> Result<CaseData, ParseError> {
    let text = std::str::from_utf8(input).map_err(|e| ParseError::Syntax(e.to_string()))?;
    let bus_rows = matpower_table(text, "bus")?
        .ok_or_else(|| ParseError::Schema("missing mpc.bus table".into()))?;
    let branch_rows = matpower_table(text, "branch")?
        .ok_or_else(|| ParseError::Schema("missing mpc.branch table".into()))?;

    let mut buses = Vec::with_capacity(bus_rows.len());
    for row in &bus_rows {
        let id = row
            .first()
            .and_then(|t| parse_matpower_int(t))
            .ok_or_else(|| ParseError::Schema(format!("bad bus row {row:?}")))?;
        buses.push(BusData { id, name: None });
    }

    let mut lines = Vec::with_capacity(branch_rows.len());
    for (i, row) in branch_rows.iter().enumerate() {
        if row.len() < 4 {
            return Err(ParseError::Schema(format!(
                "branch row {} has {} columns, need at least 4",
                i + 1,
                row.len()
            )));
        }
        let from = parse_matpower_int(&row[0])
            .ok_or_else(|| ParseError::Schema(format!("bad fbus {:?}", row[0])))?;
        let to = parse_matpower_int(&row[1])
            .ok_or_else(|| ParseError::Schema(format!("bad tbus {:?}", row[1])))?;
        let x = parse_decimal(&row[3])
            .ok_or_else(|| ParseError::Schema(format!("bad reactance {:?}", row[3])))?;
        if x.is_zero() {
            return Err(ParseError::Schema(format!(
                "branch {} has zero reactance",
                i + 1
            )));
        }
        lines.push(LineData {
            id: i as u32 + 1,
            from,
            to,
            susceptance: Some(format_rational(&x.recip())),
        });
    }

    Ok(CaseData {
        buses,
        lines,
        measurements: Vec::new(),
        reference_bus: None,
    })
}

fn matpower_table(text: &str, name: &str) -> Result<Option<Vec<Vec<String>>>, ParseError> {
    let header = format!("mpc.{name}");
    let mut lines = text.lines();
    while let Some(line) = lines.next() {
        let code = strip_comment(line);
        let Some(rest) = code.trim_start().strip_prefix(&header) else {
            continue;
        };
        let rest = rest.trim_start();
        let Some(rest) = rest.strip_prefix('=') else {
            continue;
        };
        let rest = rest.trim_start();
        let Some(mut body) = rest.strip_prefix('[').map(str::to_string) else {
            return Err(ParseError::Syntax(format!("expected '[' after {header} =")));
        };
        let mut closed = false;
        loop {
            if let Some(end) = body.find(']') {
                body.truncate(end);
                closed = true;
                break;
            }
            match lines.next() {
                Some(next) => {
                    body.push('\n');
                    body.push_str(strip_comment(next));
                }
                None => break,
            }
        }
        if !closed {
            return Err(ParseError::Syntax(format!("unterminated {header} table")));
        }
        let rows = body
            .split(['\n', ';'])
            .map(|r| {
                r.split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
                    .collect::<Vec<_>>()
            })
            .filter(|r| !r.is_empty())
            .collect();
        return Ok(Some(rows));
    }
    Ok(None)
}

fn strip_comment(line: &str) -> &str {
    line.split('%').next().unwrap_or("")
}

fn parse_matpower_int(token: &str) -> Option<u32> {
    let value = parse_decimal(token)?;
    if value.is_integer() && value > Rational::zero() {
        value.to_integer().try_into().ok()
    } else {
        None
    }
}

/// Exact value of a decimal literal such as `0.05917`, `-1`, `2.5e-3`.
pub fn parse_decimal(token: &str) -> Option<Rational> {
    let token = token.trim();
    let (mantissa, exponent) = match token.find(['e', 'E']) {
        Some(pos) => (&token[..pos], token[pos + 1..].parse::<i32>().ok()?),
        None => (token, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&digits).ok()?);
    let scale = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Some(if negative { -value } else { value })
}

// ---------------------------------------------------------------------------
// Bundled cases
// ---------------------------------------------------------------------------

/// JSON source of the bundled 14-bus, 17-measurement study case.
pub const IEEE14_PAPER_JSON: &str = include_str!("../data/ieee14_paper.json");

/// File name under which the bundled case is known to the CLI.
pub const IEEE14_PAPER_NAME: &str = "ieee14_paper.json";

/// The bundled 14-bus case.
pub fn ieee14_paper() -> Case {
    parse_case(IEEE14_PAPER_JSON.as_bytes(), CaseFormat::Json).expect("bundled case is valid")
}
