//! Partial-slice SPARQL SELECT queries and their tabular (CSV) results.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::areas::AreaTable;
use crate::ingest::normalize_cell;
use crate::model::{CubeBuilder, DataCube, DimensionSpec, Provider, Selection};
use crate::sources::SourceError;
use crate::time::parse_time_key;

/// IRIs used by the generated observation pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SparqlVocabulary {
    /// Dataset IRI is `{dataset_base}{dataset_id}#ds`.
    pub dataset_base: String,
    /// Extra dimension properties are `{dimension_base}{name}`.
    pub dimension_base: String,
}

impl Default for SparqlVocabulary {
    fn default() -> Self {
        SparqlVocabulary {
            dataset_base: "http://estatwrap.ontologycentral.com/id/".into(),
            dimension_base: "http://estatwrap.ontologycentral.com/dic/".into(),
        }
    }
}

fn literal(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Percent-encodes characters that may not appear inside `<...>`.
fn iri(text: &str) -> String {
    let mut out = String::from("<");
    for c in text.chars() {
        if c.is_control() || matches!(c, ' ' | '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                let _ = write!(out, "%{b:02X}");
            }
        } else {
            out.push(c);
        }
    }
    out.push('>');
    out
}

pub fn build_sparql_select(dataset_id: &str, sel: &Selection) -> Result<String, SourceError> {
    build_sparql_select_with(dataset_id, sel, &SparqlVocabulary::default())
}

/// Emits a SELECT binding `?geo ?time ?value` for one slice of a data-cube
/// observation graph: areas restricted with `VALUES`, time restricted
/// lexically on canonical renderings, every chosen dimension fixed.
pub fn build_sparql_select_with(
    dataset_id: &str,
    sel: &Selection,
    vocab: &SparqlVocabulary,
) -> Result<String, SourceError> {
    if sel.areas.is_empty() || sel.time_from > sel.time_to {
        return Err(SourceError::EmptySelection);
    }
    let mut seen = BTreeSet::new();
    let areas: Vec<&String> = sel.areas.iter().filter(|a| seen.insert(a.as_str())).collect();

    let mut q = String::new();
    q.push_str("PREFIX qb: <http://purl.org/linked-data/cube#>\n");
    q.push_str("PREFIX sdmx-dimension: <http://purl.org/linked-data/sdmx/2009/dimension#>\n");
    q.push_str("PREFIX sdmx-measure: <http://purl.org/linked-data/sdmx/2009/measure#>\n");
    q.push_str("SELECT ?geo ?time ?value\n");
    q.push_str("WHERE {\n");
    q.push_str("  ?obs a qb:Observation ;\n");
    let _ = writeln!(q, "    qb:dataSet {} ;", iri(&format!("{}{}#ds", vocab.dataset_base, dataset_id)));
    for (name, member) in &sel.dimension_choice {
        let _ = writeln!(q, "    {} {} ;", iri(&format!("{}{}", vocab.dimension_base, name)), literal(member));
    }
    q.push_str("    sdmx-dimension:refArea ?geo ;\n");
    q.push_str("    sdmx-dimension:timePeriod ?time ;\n");
    q.push_str("    sdmx-measure:obsValue ?value .\n");
    q.push_str("  VALUES ?geo {");
    for area in areas {
        q.push(' ');
        q.push_str(&literal(area));
    }
    q.push_str(" }\n");
    let _ = writeln!(
        q,
        "  FILTER (STR(?time) >= {} && STR(?time) <= {})",
        literal(&sel.time_from.to_string()),
        literal(&sel.time_to.to_string())
    );
    q.push_str("}\n");
    q.push_str("ORDER BY ?geo ?time\n");
    Ok(q)
}

/// Last path or fragment segment of an IRI; plain codes pass through.
fn local_name(term: &str) -> &str {
    let term = term.trim();
    if term.contains("://") {
        term.rsplit(['#', '/']).next().unwrap_or(term)
    } else {
        term
    }
}

/// Maps a SPARQL CSV result (`geo,time,value` columns, by name) onto a cube.
///
/// Rows outside the selection are dropped, so the cube never holds an area or
/// time that was not asked for.
pub fn parse_sparql_csv(
    bytes: &[u8],
    cube_id: &str,
    provider: Provider,
    sel: &Selection,
    areas: &AreaTable,
) -> Result<DataCube<f64>, SourceError> {
    let bad = |msg: String| SourceError::Results { dataset_id: cube_id.to_string(), reason: msg };
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(bytes);
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().trim_start_matches('?').eq_ignore_ascii_case(name))
            .ok_or_else(|| bad(format!("missing `{name}` column")))
    };
    let (geo_col, time_col, value_col) = (column("geo")?, column("time")?, column("value")?);

    let wanted: Vec<_> = sel.areas.iter().map(|a| areas.resolve_code(a)).collect();
    let mut builder = CubeBuilder::new(cube_id, provider);
    let mut member_idx = Vec::new();
    for (name, member) in &sel.dimension_choice {
        builder = builder.dimension(DimensionSpec::with_members(name.clone(), [member.as_str()]));
        member_idx.push(0);
    }
    for area in &wanted {
        builder.ensure_area(area.clone());
    }
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let area = areas.resolve_code(local_name(field(geo_col)));
        let time = parse_time_key(local_name(field(time_col))).map_err(|e| bad(e.to_string()))?;
        let Some(area_idx) = wanted.iter().position(|a| a.code == area.code) else {
            dropped += 1;
            continue;
        };
        if !sel.covers(&time) {
            dropped += 1;
            continue;
        }
        let obs = normalize_cell(field(value_col)).map_err(|e| bad(e.to_string()))?;
        builder.put(member_idx.clone(), area_idx, time, obs);
    }
    if dropped > 0 {
        log::warn!("{cube_id}: dropped {dropped} result rows outside the requested slice");
    }
    Ok(builder.build()?)
}
