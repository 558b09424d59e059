//! Line-oriented text formats: memory tables, address superpositions,
//! state dumps and traces.
//!
//! Address and data words are written as fixed-width binary strings, most
//! significant bit first (`001` is address 1 at n=3), or as decimals with
//! a `d:` prefix. `#` starts a comment. Reals carry 17 significant digits
//! so that serialize → parse is bit-exact for doubles. Parsers reject bad
//! lines with their line number instead of guessing.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pipeline::TraceRecord;
use crate::state::{
    AddressSuperposition, BasisState, Chirality, MemoryTable, NodeIndex, SparseState, TreeShape,
};

const STATE_HEADER: &str = "qwqram-state";
const TRACE_HEADER: &str = "qwqram-trace";
const FORMAT_VERSION: &str = "v1";

fn format_real(x: f64) -> String {
    format!("{:.16e}", x)
}

/// One address or data word: fixed-width binary (MSB first) or `d:`
/// decimal. Width errors and range errors are the caller's shape class,
/// not parse failures.
fn parse_word(field: &str, width: u32, what: &'static str, line: usize) -> Result<u64> {
    if let Some(decimal) = field.strip_prefix("d:") {
        let value: u64 = decimal
            .parse()
            .map_err(|_| Error::parse(line, format!("bad decimal {what} {decimal:?}")))?;
        if value >= (1u64 << width) {
            let range_error = if what == "data" {
                Error::DataOutOfRange {
                    data: value,
                    m: width,
                }
            } else {
                Error::AddressOutOfRange {
                    address: value,
                    n: width,
                }
            };
            return Err(Error::at_line(line, range_error));
        }
        return Ok(value);
    }
    if field.is_empty() || !field.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::parse(line, format!("bad binary {what} {field:?}")));
    }
    if field.len() != width as usize {
        return Err(Error::at_line(
            line,
            Error::WordWidth {
                found: field.to_string(),
                found_width: field.len(),
                expected_width: width,
                what,
            },
        ));
    }
    Ok(u64::from_str_radix(field, 2).expect("checked binary digits"))
}

fn format_word(value: u64, width: u32) -> String {
    format!("{:0>width$b}", value, width = width as usize)
}

fn parse_real(field: &str, what: &str, line: usize) -> Result<f64> {
    let value: f64 = field
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {what} {field:?}")))?;
    if !value.is_finite() {
        return Err(Error::at_line(line, Error::NonFiniteAmplitude));
    }
    Ok(value)
}

/// Strips a trailing comment and surrounding whitespace; `None` when
/// nothing but comment/whitespace remains.
fn significant(line: &str) -> Option<&str> {
    let body = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let body = body.trim();
    if body.is_empty() {
        None
    } else {
        Some(body)
    }
}

/// Parses `ADDRESS<TAB>DATA` lines into a total memory table; unlisted
/// addresses stay 0 and duplicates are rejected.
pub fn parse_memory(text: &str, shape: TreeShape) -> Result<MemoryTable> {
    let mut memory = MemoryTable::new(shape);
    let mut seen: std::collections::BTreeSet<u64> = std::collections::BTreeSet::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let Some(body) = significant(raw) else {
            continue;
        };
        let fields: Vec<&str> = body.split('\t').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                line,
                format!("expected ADDRESS<TAB>DATA, got {} field(s)", fields.len()),
            ));
        }
        let address = parse_word(fields[0], shape.n(), "address", line)?;
        let data = parse_word(fields[1], shape.m(), "data", line)?;
        if !seen.insert(address) {
            return Err(Error::DuplicateAddress { line, address });
        }
        memory.set(address, data).map_err(|e| Error::at_line(line, e))?;
    }
    Ok(memory)
}

/// Serializes the nonzero cells of a memory table in address order.
pub fn serialize_memory(memory: &MemoryTable) -> String {
    let shape = memory.shape();
    let mut out = String::new();
    for (address, data) in memory.nonzero_cells() {
        out.push_str(&format_word(address, shape.n()));
        out.push('\t');
        out.push_str(&format_word(data, shape.m()));
        out.push('\n');
    }
    out
}

/// Parses `ADDRESS<TAB>RE[<TAB>IM]` lines and canonicalizes the result
/// (duplicates merged, zero terms dropped, normalized unless disabled).
pub fn parse_addresses(
    text: &str,
    shape: TreeShape,
    normalize: bool,
) -> Result<AddressSuperposition> {
    let mut terms: Vec<(u64, Complex64)> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let Some(body) = significant(raw) else {
            continue;
        };
        let fields: Vec<&str> = body.split('\t').map(str::trim).collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::parse(
                line,
                format!(
                    "expected ADDRESS<TAB>RE[<TAB>IM], got {} field(s)",
                    fields.len()
                ),
            ));
        }
        let address = parse_word(fields[0], shape.n(), "address", line)?;
        let re = parse_real(fields[1], "real part", line)?;
        let im = if fields.len() == 3 {
            parse_real(fields[2], "imaginary part", line)?
        } else {
            0.0
        };
        terms.push((address, Complex64::new(re, im)));
    }
    let superposition = AddressSuperposition::new(terms)?;
    superposition.canonicalized(shape, normalize)
}

/// Serializes a superposition as `ADDRESS<TAB>RE<TAB>IM` lines.
pub fn serialize_addresses(addrs: &AddressSuperposition, shape: TreeShape) -> String {
    let mut out = String::new();
    for (address, amp) in addrs.terms() {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            format_word(*address, shape.n()),
            format_real(amp.re),
            format_real(amp.im)
        ));
    }
    out
}

/// Canonical text dump: one header line, then one `w l c ADDRESS DATA RE
/// IM` line per entry in canonical order.
pub fn serialize_state(state: &SparseState) -> String {
    let shape = state.shape();
    let mut out = format!(
        "{STATE_HEADER} {FORMAT_VERSION} n={} m={}\n",
        shape.n(),
        shape.m()
    );
    for (basis, amp) in state.iter() {
        out.push_str(&format!(
            "{} {} {} {} {} {} {}\n",
            basis.node.pos(),
            basis.node.level(),
            basis.chirality.bit(),
            format_word(basis.address, shape.n()),
            format_word(basis.data, shape.m()),
            format_real(amp.re),
            format_real(amp.im)
        ));
    }
    out
}

fn parse_state_header(header: &str, line: usize) -> Result<TreeShape> {
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != STATE_HEADER {
        return Err(Error::parse(line, format!("bad state header {header:?}")));
    }
    if fields[1] != FORMAT_VERSION {
        return Err(Error::parse(
            line,
            format!("unsupported version {:?}, expected {FORMAT_VERSION:?}", fields[1]),
        ));
    }
    let n = fields[2]
        .strip_prefix("n=")
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| Error::parse(line, format!("bad n field {:?}", fields[2])))?;
    let m = fields[3]
        .strip_prefix("m=")
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| Error::parse(line, format!("bad m field {:?}", fields[3])))?;
    TreeShape::new(n, m).map_err(|e| Error::at_line(line, e))
}

/// Parses a state dump; exact inverse of [`serialize_state`].
pub fn parse_state(text: &str) -> Result<SparseState> {
    parse_state_block(text, 0)
}

/// `line_offset` is the number of lines preceding this block in the
/// enclosing document, so errors point at the right physical line.
fn parse_state_block(text: &str, line_offset: usize) -> Result<SparseState> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(line_offset + 1, "empty state dump".to_string()))?;
    let shape = parse_state_header(header, line_offset + 1)?;
    let mut entries: Vec<(BasisState, Complex64)> = Vec::new();
    let mut seen: std::collections::BTreeSet<BasisState> = std::collections::BTreeSet::new();
    for (index, raw) in lines {
        let line = line_offset + index + 1;
        let Some(body) = significant(raw) else {
            continue;
        };
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(Error::parse(
                line,
                format!("expected 7 fields (w l c ADDRESS DATA RE IM), got {}", fields.len()),
            ));
        }
        let pos: u64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad node position {:?}", fields[0])))?;
        let level: u32 = fields[1]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad level {:?}", fields[1])))?;
        let node = NodeIndex::new(level, pos).map_err(|e| Error::at_line(line, e))?;
        let chirality = match fields[2] {
            "0" => Chirality::Left,
            "1" => Chirality::Right,
            other => {
                return Err(Error::parse(line, format!("bad chirality {other:?}")));
            }
        };
        let address = parse_word(fields[3], shape.n(), "address", line)?;
        let data = parse_word(fields[4], shape.m(), "data", line)?;
        let re = parse_real(fields[5], "real part", line)?;
        let im = parse_real(fields[6], "imaginary part", line)?;
        let basis = BasisState::new(node, chirality, address, data);
        basis.validate(shape).map_err(|e| Error::at_line(line, e))?;
        if !seen.insert(basis) {
            return Err(Error::parse(line, "duplicate basis state".to_string()));
        }
        entries.push((basis, Complex64::new(re, im)));
    }
    SparseState::from_entries(shape, entries)
}

/// Serializes a trace as one labeled state-dump block per step.
pub fn serialize_trace(trace: &TraceRecord) -> String {
    let mut out = format!("{TRACE_HEADER} {FORMAT_VERSION} steps={}\n", trace.len());
    for (label, state) in trace.steps() {
        out.push('\n');
        out.push_str(&format!("step {label}\n"));
        out.push_str(&serialize_state(state));
    }
    out
}

/// Parses a trace document; exact inverse of [`serialize_trace`].
pub fn parse_trace(text: &str) -> Result<TraceRecord> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.is_empty() {
        return Err(Error::parse(1, "empty trace".to_string()));
    }
    let header: Vec<&str> = lines[0].split_whitespace().collect();
    if header.len() != 3 || header[0] != TRACE_HEADER || header[1] != FORMAT_VERSION {
        return Err(Error::parse(1, format!("bad trace header {:?}", lines[0])));
    }
    let declared: usize = header[2]
        .strip_prefix("steps=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse(1, format!("bad steps field {:?}", header[2])))?;
    let mut steps: Vec<(String, SparseState)> = Vec::new();
    let mut cursor = 1;
    while cursor < lines.len() {
        if lines[cursor].trim().is_empty() {
            cursor += 1;
            continue;
        }
        let label = lines[cursor]
            .strip_prefix("step ")
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .ok_or_else(|| {
                Error::parse(cursor + 1, format!("expected step label, got {:?}", lines[cursor]))
            })?;
        cursor += 1;
        let block_start = cursor;
        while cursor < lines.len() && !lines[cursor].trim().is_empty() {
            cursor += 1;
        }
        let block = lines[block_start..cursor].join("\n");
        let state = parse_state_block(&block, block_start)?;
        steps.push((label.to_string(), state));
    }
    if steps.len() != declared {
        return Err(Error::parse(
            1,
            format!("trace declares {declared} steps but contains {}", steps.len()),
        ));
    }
    Ok(TraceRecord::from_steps(steps))
}

#[derive(Serialize)]
struct JsonEntry {
    w: u64,
    l: u32,
    c: u64,
    address: String,
    data: String,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct JsonState {
    format: &'static str,
    n: u32,
    m: u32,
    entries: Vec<JsonEntry>,
}

#[derive(Serialize)]
struct JsonTraceStep {
    label: String,
    entries: Vec<JsonEntry>,
}

#[derive(Serialize)]
struct JsonTrace {
    format: &'static str,
    n: u32,
    m: u32,
    steps: Vec<JsonTraceStep>,
}

fn json_entries(state: &SparseState) -> Vec<JsonEntry> {
    let shape = state.shape();
    state
        .iter()
        .map(|(basis, amp)| JsonEntry {
            w: basis.node.pos(),
            l: basis.node.level(),
            c: basis.chirality.bit(),
            address: format_word(basis.address, shape.n()),
            data: format_word(basis.data, shape.m()),
            re: amp.re,
            im: amp.im,
        })
        .collect()
}

/// JSON mirror of the state dump; same content, for tooling.
pub fn state_to_json(state: &SparseState) -> String {
    let doc = JsonState {
        format: "qwqram-state/v1",
        n: state.shape().n(),
        m: state.shape().m(),
        entries: json_entries(state),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    text.push('\n');
    text
}

/// JSON mirror of the trace document.
pub fn trace_to_json(trace: &TraceRecord) -> String {
    let shape = trace
        .final_state()
        .map(SparseState::shape)
        .expect("traces are never empty");
    let doc = JsonTrace {
        format: "qwqram-trace/v1",
        n: shape.n(),
        m: shape.m(),
        steps: trace
            .steps()
            .map(|(label, state)| JsonTraceStep {
                label: label.to_string(),
                entries: json_entries(state),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::qram_traced;
    use crate::state::make_initial_state;

    fn shape(n: u32, m: u32) -> TreeShape {
        TreeShape::new(n, m).unwrap()
    }

    #[test]
    fn parses_the_worked_memory_file() {
        let mem = parse_memory("001\t10\n011\t01\n110\t11", shape(3, 2)).unwrap();
        assert_eq!(mem.get(1), 2);
        assert_eq!(mem.get(3), 1);
        assert_eq!(mem.get(6), 3);
        assert_eq!(mem.get(0), 0);
        assert_eq!(mem.get(7), 0);
    }

    #[test]
    fn empty_memory_file_is_all_zero() {
        let mem = parse_memory("", shape(3, 2)).unwrap();
        assert!(mem.is_all_zero());
        let commented = parse_memory("# nothing here\n\n", shape(3, 2)).unwrap();
        assert!(commented.is_all_zero());
    }

    #[test]
    fn duplicate_memory_address_is_rejected_with_line() {
        let err = parse_memory("001\t10\n001\t01", shape(3, 2)).unwrap_err();
        assert_eq!(err, Error::DuplicateAddress { line: 2, address: 1 });
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn decimal_syntax_and_comments_are_accepted() {
        let mem = parse_memory("d:6\t11 # cell six\n# full-line comment\n001\td:2", shape(3, 2))
            .unwrap();
        assert_eq!(mem.get(6), 3);
        assert_eq!(mem.get(1), 2);
    }

    #[test]
    fn wrong_word_width_is_a_shape_error() {
        let err = parse_memory("0010\t10", shape(3, 2)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = parse_memory("d:9\t10", shape(3, 2)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = parse_memory("001\t7", shape(3, 2)).unwrap_err();
        assert_eq!(err.exit_code(), 1); // non-binary data word is malformed
    }

    #[test]
    fn parses_addresses_with_normalization() {
        let addrs = parse_addresses("001\t1\n011\t1\n110\t1", shape(3, 2), true).unwrap();
        let w = 1.0 / 3.0f64.sqrt();
        for (_, amp) in addrs.terms() {
            assert!((amp - Complex64::new(w, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn parses_imaginary_amplitudes_and_decimal_addresses() {
        let addrs = parse_addresses("d:5\t0\t1", shape(3, 1), true).unwrap();
        assert_eq!(addrs.terms(), &[(5, Complex64::new(0.0, 1.0))]);
    }

    #[test]
    fn zero_norm_input_is_rejected() {
        let err = parse_addresses("001\t0\n011\t0", shape(3, 1), true).unwrap_err();
        assert_eq!(err, Error::ZeroNorm);
        let err = parse_addresses("", shape(3, 1), true).unwrap_err();
        assert_eq!(err, Error::EmptySuperposition);
    }

    #[test]
    fn single_entry_state_dumps_to_two_lines() {
        let s = shape(2, 1);
        let addrs = AddressSuperposition::uniform(&[2]).unwrap();
        let state = make_initial_state(s, &addrs).unwrap();
        let text = serialize_state(&state);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "qwqram-state v1 n=2 m=1");
        assert_eq!(lines[1], "0 0 0 10 0 1.0000000000000000e0 0.0000000000000000e0");
    }

    #[test]
    fn routed_example_serializes_leaves_in_canonical_order() {
        let s = shape(3, 1);
        let addrs = AddressSuperposition::uniform(&[0b001, 0b011, 0b110]).unwrap();
        let routed =
            crate::pipeline::route(&make_initial_state(s, &addrs).unwrap()).unwrap();
        let text = serialize_state(&routed);
        let positions: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|line| line.split(' ').next().unwrap())
            .collect();
        assert_eq!(positions, vec!["1", "3", "6"]);
    }

    #[test]
    fn state_round_trip_is_exact() {
        let s = shape(3, 2);
        let addrs = AddressSuperposition::new(vec![
            (1, Complex64::new(0.25, -0.5)),
            (6, Complex64::new(-0.125, 0.333333333333333)),
        ])
        .unwrap();
        let state = make_initial_state(s, &addrs).unwrap();
        let parsed = parse_state(&serialize_state(&state)).unwrap();
        assert_eq!(parsed, state);
    }

    #[test]
    fn parse_state_rejects_bad_input() {
        assert!(matches!(
            parse_state("qwqram-state v2 n=1 m=1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_state("qwqram-state v1 n=1 m=1\n0 0 0 1 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        // Node outside the tree: level 2 in a depth-1 tree.
        let err = parse_state("qwqram-state v1 n=1 m=1\n0 2 0 1 0 1e0 0e0\n").unwrap_err();
        assert!(matches!(err, Error::AtLine { line: 2, .. }));
        // Duplicate entry.
        let text = "qwqram-state v1 n=1 m=1\n0 0 0 1 0 1e0 0e0\n0 0 0 1 0 1e0 0e0\n";
        assert!(matches!(
            parse_state(text),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn trace_document_has_one_block_per_step() {
        let s = shape(3, 2);
        let addrs = AddressSuperposition::uniform(&[0b001, 0b011, 0b110]).unwrap();
        let mut mem = MemoryTable::new(s);
        mem.set(1, 0b10).unwrap();
        let (_, trace) = qram_traced(s, &addrs, &mem).unwrap();
        let text = serialize_trace(&trace);
        let labels: Vec<&str> = text
            .lines()
            .filter_map(|line| line.strip_prefix("step "))
            .collect();
        assert_eq!(
            labels,
            vec!["psi0_0", "psi0_1", "psi0_2", "psi0_3", "query", "psix_2", "psix_1", "psix_0"]
        );

        // Every block is independently parseable as a state dump.
        for chunk in text.split("\nstep ").skip(1) {
            let block: String = chunk.lines().skip(1).collect::<Vec<_>>().join("\n");
            parse_state(&block).unwrap();
        }

        let parsed = parse_trace(&text).unwrap();
        assert_eq!(parsed, trace);
    }

    #[test]
    fn trace_parse_rejects_step_count_mismatch() {
        let s = shape(1, 1);
        let addrs = AddressSuperposition::uniform(&[0]).unwrap();
        let (_, trace) = qram_traced(s, &addrs, &MemoryTable::new(s)).unwrap();
        let text = serialize_trace(&trace).replace("steps=4", "steps=5");
        assert!(matches!(parse_trace(&text), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn json_mirrors_carry_the_same_content() {
        let s = shape(2, 1);
        let addrs = AddressSuperposition::uniform(&[1, 2]).unwrap();
        let state = make_initial_state(s, &addrs).unwrap();
        let json = state_to_json(&state);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["n"], 2);
        assert_eq!(value["entries"].as_array().unwrap().len(), 2);
        assert_eq!(value["entries"][0]["address"], "01");

        let (_, trace) = qram_traced(s, &addrs, &MemoryTable::new(s)).unwrap();
        let json = trace_to_json(&trace);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["steps"].as_array().unwrap().len(), 6);
        assert_eq!(value["steps"][0]["label"], "psi0_0");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        proptest! {
            #[test]
            fn random_states_round_trip_bit_exactly(
                n in 1u32..=6,
                m in 1u32..=4,
                seed in any::<u64>(),
            ) {
                let s = shape(n, m);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let state = crate::state::random_state(s, 10, &mut rng);
                let parsed = parse_state(&serialize_state(&state)).unwrap();
                prop_assert_eq!(parsed, state);
            }

            #[test]
            fn memories_round_trip(n in 1u32..=6, m in 1u32..=4, seed in any::<u64>()) {
                let s = shape(n, m);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let memory = MemoryTable::random(s, &mut rng);
                let parsed = parse_memory(&serialize_memory(&memory), s).unwrap();
                prop_assert_eq!(parsed, memory);
            }

            #[test]
            fn superpositions_round_trip(n in 1u32..=6, seed in any::<u64>()) {
                let s = shape(n, 1);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let state = crate::state::random_state(s, 8, &mut rng);
                // Reuse the random state's address/amplitude pairs, deduped.
                let terms: Vec<(u64, Complex64)> = state
                    .canonical_entries()
                    .iter()
                    .map(|(b, amp)| (b.address, *amp))
                    .collect();
                let addrs = AddressSuperposition::new(terms).unwrap();
                let canonical = addrs.canonicalized(s, true).unwrap();
                let text = serialize_addresses(&canonical, s);
                let parsed = parse_addresses(&text, s, false).unwrap();
                prop_assert_eq!(parsed, canonical);
            }
        }
    }
}
