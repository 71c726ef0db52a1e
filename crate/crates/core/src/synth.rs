//! Programmatic and random case construction, mainly for tests and
//! benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{BusData, Case, CaseData, KindTag, LineData, MeasurementData};

/// Small fluent builder. Line and measurement ids are assigned in call order
/// starting from 1.
#[derive(Debug, Clone)]
pub struct CaseBuilder {
    data: CaseData,
}

impl CaseBuilder {
    pub fn new(buses: u32) -> Self {
        CaseBuilder {
            data: CaseData {
                buses: (1..=buses).map(|id| BusData { id, name: None }).collect(),
                lines: Vec::new(),
                measurements: Vec::new(),
                reference_bus: None,
            },
        }
    }

    pub fn line(self, from: u32, to: u32) -> Self {
        self.line_with(from, to, None)
    }

    pub fn line_with(mut self, from: u32, to: u32, susceptance: Option<&str>) -> Self {
        let id = self.data.lines.len() as u32 + 1;
        self.data.lines.push(LineData {
            id,
            from,
            to,
            susceptance: susceptance.map(str::to_string),
        });
        self
    }

    pub fn flow(self, line: u32) -> Self {
        self.measurement(KindTag::Flow, line)
    }

    pub fn injection(self, bus: u32) -> Self {
        self.measurement(KindTag::Injection, bus)
    }

    fn measurement(mut self, kind: KindTag, target: u32) -> Self {
        let id = self.data.measurements.len() as u32 + 1;
        self.data
            .measurements
            .push(MeasurementData { id, kind, target });
        self
    }

    pub fn reference(mut self, bus: u32) -> Self {
        self.data.reference_bus = Some(bus);
        self
    }

    pub fn data(&self) -> &CaseData {
        &self.data
    }

    /// Builds the case, panicking if it is invalid.
    pub fn build(self) -> Case {
        Case::from_data(&self.data).expect("builder produced a valid case")
    }
}

/// Shape of randomly generated cases.
#[derive(Debug, Clone, Copy)]
pub struct RandomCaseParams {
    pub min_buses: u32,
    pub max_buses: u32,
    pub max_lines: usize,
    /// Probability that a line carries a flow measurement.
    pub flow_probability: f64,
    /// Probability that a bus carries an injection measurement.
    pub injection_probability: f64,
}

impl Default for RandomCaseParams {
    fn default() -> Self {
        RandomCaseParams {
            min_buses: 2,
            max_buses: 8,
            max_lines: 14,
            flow_probability: 0.35,
            injection_probability: 0.6,
        }
    }
}

/// Random connected case: a random spanning tree plus extra chords, with
/// flows and injections sprinkled independently. Measurement ids are a random
/// permutation so flows and injections interleave.
pub fn random_case<R: Rng + ?Sized>(rng: &mut R, params: &RandomCaseParams) -> Case {
    let n = rng.gen_range(params.min_buses.max(1)..=params.max_buses.max(params.min_buses));
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for bus in 2..=n {
        let parent = rng.gen_range(1..bus);
        edges.push((parent, bus));
    }
    let max_lines = params.max_lines.max(edges.len());
    let mut chords: Vec<(u32, u32)> = (1..=n)
        .flat_map(|a| (a + 1..=n).map(move |b| (a, b)))
        .filter(|&(a, b)| !edges.contains(&(a, b)))
        .collect();
    chords.shuffle(rng);
    let extra = rng.gen_range(0..=max_lines - edges.len()).min(chords.len());
    edges.extend(chords.into_iter().take(extra));
    edges.shuffle(rng);

    let mut specs: Vec<(KindTag, u32)> = Vec::new();
    for line in 1..=edges.len() as u32 {
        if rng.gen_bool(params.flow_probability) {
            specs.push((KindTag::Flow, line));
        }
    }
    for bus in 1..=n {
        if rng.gen_bool(params.injection_probability) {
            specs.push((KindTag::Injection, bus));
        }
    }
    specs.shuffle(rng);

    let data = CaseData {
        buses: (1..=n).map(|id| BusData { id, name: None }).collect(),
        lines: edges
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                let (from, to) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
                LineData {
                    id: i as u32 + 1,
                    from,
                    to,
                    susceptance: None,
                }
            })
            .collect(),
        measurements: specs
            .into_iter()
            .enumerate()
            .map(|(i, (kind, target))| MeasurementData {
                id: i as u32 + 1,
                kind,
                target,
            })
            .collect(),
        reference_bus: Some(1),
    };
    Case::from_data(&data).expect("generator produces valid cases")
}
