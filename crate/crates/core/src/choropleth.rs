//! Quantile binning and SVG/CSV rendering of state maps.
//!
//! Higher values always land in higher (darker) bins.

use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::Serialize;

use crate::analytics::ProportionVector;
use crate::index::Counts;
use crate::states::{StateId, StateVector, STATE_COUNT};

pub const DEFAULT_BINS: usize = 7;

const STATE_PATHS: &str = include_str!("../assets/us-states-paths.tsv");

/// 50-state TopoJSON (Albers USA, 975x610) for client-side rendering.
pub const US_STATES_TOPOJSON: &str = include_str!("../assets/us-states-albers-10m.topo.json");
const SVG_WIDTH: u32 = 975;
const SVG_HEIGHT: u32 = 610;
const LIGHT: [u8; 3] = [0xef, 0xf3, 0xff];
const DARK: [u8; 3] = [0x08, 0x30, 0x6b];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChoroplethError {
    #[error("no state has data")]
    NoData,
    #[error("bin count must be at least 2")]
    InvalidBinCount,
}

/// The values being shaded, with counts when they are proportions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapVector {
    pub values: StateVector<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numerators: Option<Counts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominators: Option<Counts>,
}

impl From<ProportionVector> for MapVector {
    fn from(p: ProportionVector) -> MapVector {
        MapVector {
            values: p.values,
            numerators: Some(p.numerators),
            denominators: Some(p.denominators),
        }
    }
}

impl From<Counts> for MapVector {
    fn from(c: Counts) -> MapVector {
        MapVector {
            values: c.map(|&n| Some(n as f64)),
            numerators: None,
            denominators: None,
        }
    }
}

impl From<StateVector<Option<f64>>> for MapVector {
    fn from(values: StateVector<Option<f64>>) -> MapVector {
        MapVector {
            values,
            numerators: None,
            denominators: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Legend {
    pub min: f64,
    pub max: f64,
    /// Bins actually used; fewer than requested when values repeat.
    pub bins: usize,
    pub requested_bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChoroplethSpec {
    pub vector: MapVector,
    pub bins: StateVector<Option<usize>>,
    /// Lowest value of bins `1..legend.bins`.
    pub bin_edges: Vec<f64>,
    pub legend: Legend,
}

/// Assigns each non-null state to one of at most `bins` quantile bins.
///
/// A value's raw bin is `floor(bins * below / n)`, where `below` counts
/// non-null values strictly smaller than it, so equal values share a bin.
/// Empty bins are then closed up so bin indices are contiguous from 0.
pub fn bin_quantile(
    vector: impl Into<MapVector>,
    bins: usize,
) -> Result<ChoroplethSpec, ChoroplethError> {
    if bins < 2 {
        return Err(ChoroplethError::InvalidBinCount);
    }
    let vector = vector.into();
    let mut sorted: Vec<f64> = vector.values.iter().flatten().copied().collect();
    if sorted.is_empty() {
        return Err(ChoroplethError::NoData);
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let raw_bin = |v: f64| {
        let below = sorted.partition_point(|x| *x < v);
        bins * below / n
    };

    let mut used = vec![false; bins];
    for &v in &sorted {
        used[raw_bin(v)] = true;
    }
    let mut compact = vec![0; bins];
    let mut next = 0;
    for (raw, &u) in used.iter().enumerate() {
        compact[raw] = next;
        if u {
            next += 1;
        }
    }
    let effective = next;

    let assigned = vector.values.map(|v| v.map(|v| compact[raw_bin(v)]));
    let mut bin_edges = vec![f64::INFINITY; effective];
    for (v, b) in vector.values.iter().zip(assigned.iter()) {
        if let (Some(v), Some(b)) = (v, b) {
            bin_edges[*b] = bin_edges[*b].min(*v);
        }
    }
    bin_edges.remove(0);

    Ok(ChoroplethSpec {
        legend: Legend {
            min: sorted[0],
            max: sorted[n - 1],
            bins: effective,
            requested_bins: bins,
        },
        vector,
        bins: assigned,
        bin_edges,
    })
}

/// `usps,value,bin` rows in state order; nulls are empty fields.
pub fn to_csv(spec: &ChoroplethSpec) -> String {
    let mut out = String::from("usps,value,bin\n");
    for state in StateId::all() {
        let value = spec.vector.values[state]
            .map(|v| v.to_string())
            .unwrap_or_default();
        let bin = spec.bins[state].map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{value},{bin}", state.usps());
    }
    out
}

fn state_paths() -> &'static [&'static str; STATE_COUNT] {
    static PATHS: OnceLock<[&'static str; STATE_COUNT]> = OnceLock::new();
    PATHS.get_or_init(|| {
        let mut paths = [""; STATE_COUNT];
        for line in STATE_PATHS.lines().filter(|l| !l.is_empty()) {
            let (name, d) = line.split_once('\t').expect("name<TAB>path");
            let state = StateId::from_name(name).expect("known state name");
            paths[state.index()] = d;
        }
        assert!(paths.iter().all(|p| !p.is_empty()), "missing state outline");
        paths
    })
}

/// Fill colour of bin `bin` out of `bins`, light to dark.
pub fn bin_color(bin: usize, bins: usize) -> String {
    let t = if bins <= 1 {
        0.5
    } else {
        bin as f64 / (bins - 1) as f64
    };
    let c: Vec<u8> = LIGHT
        .iter()
        .zip(DARK)
        .map(|(&l, d)| (l as f64 + (d as f64 - l as f64) * t).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// SVG 1.1 document with one `<path>` per state (class `bin-<i>` or
/// `no-data`) and a legend.
pub fn to_svg(spec: &ChoroplethSpec, title: &str) -> String {
    let bins = spec.legend.bins;
    let legend_height = 40;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_WIDTH}" height="{h}" viewBox="0 0 {SVG_WIDTH} {h}">"#,
        h = SVG_HEIGHT + legend_height
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    s.push_str("<defs>\n<pattern id=\"no-data\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\">");
    s.push_str("<rect width=\"6\" height=\"6\" fill=\"#ffffff\"/><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#999999\" stroke-width=\"2\"/></pattern>\n");
    s.push_str("<style>\npath { stroke: #ffffff; stroke-width: 0.75; }\n.no-data { fill: url(#no-data); }\n");
    for b in 0..bins {
        let _ = writeln!(s, ".bin-{b} {{ fill: {}; }}", bin_color(b, bins));
    }
    s.push_str("</style>\n</defs>\n<g id=\"states\">\n");

    let paths = state_paths();
    for state in StateId::all() {
        let value = spec.vector.values[state];
        let (class, bin_attr) = match spec.bins[state] {
            Some(b) => (format!("bin-{b}"), format!(" data-bin=\"{b}\"")),
            None => ("no-data".to_string(), String::new()),
        };
        let label = match value {
            Some(v) => format!("{}: {v}", state.name()),
            None => format!("{}: no data", state.name()),
        };
        let _ = writeln!(
            s,
            r#"<path class="{class}" data-usps="{}"{bin_attr} d="{}"><title>{}</title></path>"#,
            state.usps(),
            paths[state.index()],
            escape(&label)
        );
    }
    s.push_str("</g>\n");

    let y = SVG_HEIGHT + 8;
    let _ = writeln!(
        s,
        "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let swatch = 48;
    for b in 0..bins {
        let x = 20 + b as u32 * swatch;
        let lower = if b == 0 {
            spec.legend.min
        } else {
            spec.bin_edges[b - 1]
        };
        let _ = writeln!(
            s,
            r#"<rect class="bin-{b}" x="{x}" y="{y}" width="{swatch}" height="12"/><text x="{x}" y="{}">{}</text>"#,
            y + 26,
            fmt_short(lower)
        );
    }
    let x = 20 + bins as u32 * swatch + 16;
    let _ = writeln!(
        s,
        r#"<rect class="no-data" x="{x}" y="{y}" width="{swatch}" height="12"/><text x="{x}" y="{}">no data</text>"#,
        y + 26
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">max {}</text>"#,
        x + swatch + 16,
        y + 10,
        fmt_short(spec.legend.max)
    );
    s.push_str("</g>\n</svg>\n");
    s
}

fn fmt_short(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:.3e}")
    }
}

/// `(usps, bin)` for every state path in an SVG produced by [`to_svg`].
pub fn svg_bins(svg: &str) -> Vec<(String, Option<usize>)> {
    let mut out = Vec::new();
    for line in svg.lines().filter(|l| l.starts_with("<path ")) {
        let attr = |name: &str| {
            let key = format!("{name}=\"");
            let start = line.find(&key)? + key.len();
            let end = line[start..].find('"')? + start;
            Some(line[start..end].to_string())
        };
        let class = attr("class").unwrap_or_default();
        let bin = class.strip_prefix("bin-").and_then(|b| b.parse().ok());
        out.push((attr("data-usps").unwrap_or_default(), bin));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vector(values: &[Option<f64>]) -> StateVector<Option<f64>> {
        let mut v = StateVector([None; STATE_COUNT]);
        v.0[..values.len()].copy_from_slice(values);
        v
    }

    #[test]
    fn all_equal_is_one_bin() {
        let spec = bin_quantile(vector(&[Some(2.0); 50]), 7).unwrap();
        assert!(spec.bins.iter().all(|b| *b == Some(0)));
        assert_eq!(spec.legend.bins, 1);
        assert_eq!(spec.legend.requested_bins, 7);
        assert!(spec.bin_edges.is_empty());
    }

    #[test]
    fn increasing_fifty_in_five() {
        let values: Vec<_> = (0..50).map(|i| Some(i as f64)).collect();
        let spec = bin_quantile(vector(&values), 5).unwrap();
        for (i, b) in spec.bins.iter().enumerate() {
            assert_eq!(*b, Some(i / 10));
        }
        assert_eq!(spec.bin_edges, [10.0, 20.0, 30.0, 40.0]);
        assert_eq!((spec.legend.min, spec.legend.max), (0.0, 49.0));
    }

    #[test]
    fn nulls_stay_null() {
        let spec = bin_quantile(vector(&[Some(1.0), None, Some(3.0)]), 7).unwrap();
        assert_eq!(spec.bins.0[1], None);
        assert!(spec.bins.0[3..].iter().all(Option::is_none));
        assert_eq!(bin_quantile(vector(&[]), 7), Err(ChoroplethError::NoData));
        assert_eq!(
            bin_quantile(vector(&[Some(1.0)]), 1),
            Err(ChoroplethError::InvalidBinCount)
        );
    }

    #[test]
    fn csv_lists_every_state() {
        let spec = bin_quantile(vector(&[Some(0.5), None]), 7).unwrap();
        let csv = to_csv(&spec);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 51);
        assert_eq!(lines[1], "AK,0.5,0");
        assert_eq!(lines[2], "AL,,");
    }

    #[test]
    fn svg_matches_bins() {
        let values: Vec<_> = (0..40).map(|i| Some((i % 13) as f64)).collect();
        let spec = bin_quantile(vector(&values), 7).unwrap();
        let svg = to_svg(&spec, "test <map>");
        assert!(svg.contains("<title>test &lt;map&gt;</title>"));
        let parsed = svg_bins(&svg);
        assert_eq!(parsed.len(), 50);
        for (state, (usps, bin)) in StateId::all().zip(parsed) {
            assert_eq!(usps, state.usps());
            assert_eq!(bin, spec.bins[state]);
        }
    }

    #[test]
    fn colours_darken() {
        let lum = |c: String| {
            let v = u32::from_str_radix(&c[1..], 16).unwrap();
            (v >> 16) + ((v >> 8) & 0xff) + (v & 0xff)
        };
        for b in 1..7 {
            assert!(lum(bin_color(b, 7)) < lum(bin_color(b - 1, 7)));
        }
    }

    proptest! {
        #[test]
        fn monotone_and_contiguous(
            raw in proptest::collection::vec(proptest::option::of(0u8..20), 50),
            bins in 2usize..12,
        ) {
            let values: Vec<_> = raw.iter().map(|v| v.map(f64::from)).collect();
            prop_assume!(values.iter().any(Option::is_some));
            let spec = bin_quantile(vector(&values), bins).unwrap();
            let pairs: Vec<(f64, usize)> = values
                .iter()
                .zip(spec.bins.iter())
                .filter_map(|(v, b)| Some(((*v)?, (*b)?)))
                .collect();
            for &(vi, bi) in &pairs {
                for &(vj, bj) in &pairs {
                    if vi <= vj {
                        prop_assert!(bi <= bj);
                    }
                }
                prop_assert!(bi < spec.legend.bins);
            }
            prop_assert!(spec.legend.bins <= bins);
            let used: std::collections::BTreeSet<_> = pairs.iter().map(|p| p.1).collect();
            prop_assert_eq!(used.len(), spec.legend.bins);
            prop_assert!(spec.bin_edges.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
