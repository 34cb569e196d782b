//! Long-format response files: one `individual,item,time,response` row
//! per observed cell. Absent rows, and rows whose response is `NA` or
//! empty, are unobserved cells.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::ResponseTensor;
use crate::error::{Error, Result};

const HEADER: [&str; 4] = ["individual", "item", "time", "response"];

/// A tensor with the individual and item labels found in the file, in
/// index order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledResponses {
    pub tensor: ResponseTensor,
    pub individuals: Vec<String>,
    pub items: Vec<String>,
}

struct Row {
    line: u64,
    individual: String,
    item: String,
    time: usize,
    response: String,
}

fn read_rows<R: Read>(reader: R) -> Result<Vec<Row>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != HEADER {
        return Err(Error::Data(format!("expected header {}, found {}", HEADER.join(","), header.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(Error::Data(format!("line {line}: expected 4 fields, found {}", rec.len())));
        }
        let time = rec[2]
            .parse::<usize>()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| Error::Data(format!("line {line}: time {:?} is not a positive integer", &rec[2])))?;
        rows.push(Row {
            line,
            individual: rec[0].to_owned(),
            item: rec[1].to_owned(),
            time,
            response: rec[3].to_owned(),
        });
    }
    Ok(rows)
}

fn index_of(labels: &mut Vec<String>, lookup: &mut HashMap<String, usize>, key: &str) -> usize {
    if let Some(&k) = lookup.get(key) {
        return k;
    }
    labels.push(key.to_owned());
    lookup.insert(key.to_owned(), labels.len() - 1);
    labels.len() - 1
}

pub fn parse_responses<R: Read>(reader: R) -> Result<LabeledResponses> {
    let rows = read_rows(reader)?;
    let (mut individuals, mut items) = (Vec::new(), Vec::new());
    let (mut ind_ix, mut item_ix) = (HashMap::new(), HashMap::new());
    let indexed: Vec<(usize, usize)> = rows
        .iter()
        .map(|r| {
            (
                index_of(&mut individuals, &mut ind_ix, &r.individual),
                index_of(&mut items, &mut item_ix, &r.item),
            )
        })
        .collect();
    let times = rows.iter().map(|r| r.time).max().unwrap_or(0);
    if times < 2 {
        return Err(Error::Data(format!("need at least 2 time points, found {times}")));
    }
    let mut seen_time = vec![false; times];
    rows.iter().for_each(|r| seen_time[r.time - 1] = true);
    if let Some(t) = seen_time.iter().position(|s| !s) {
        return Err(Error::Data(format!("times must be contiguous 1..{times}; time {} is missing", t + 1)));
    }

    let (n, p) = (individuals.len(), items.len());
    let mut values = vec![0u8; n * p * times];
    let mut observed = vec![false; n * p * times];
    let mut present = vec![false; n * p * times];
    for (r, &(i, j)) in rows.iter().zip(&indexed) {
        let c = (i * times + r.time - 1) * p + j;
        if present[c] {
            return Err(Error::Data(format!(
                "line {}: duplicate cell ({}, {}, {})",
                r.line, r.individual, r.item, r.time
            )));
        }
        present[c] = true;
        match r.response.as_str() {
            "0" => observed[c] = true,
            "1" => {
                observed[c] = true;
                values[c] = 1;
            }
            "" | "NA" => {}
            other => {
                return Err(Error::Data(format!("line {}: response {other:?} is not 0 or 1", r.line)));
            }
        }
    }
    Ok(LabeledResponses {
        tensor: ResponseTensor::new(n, p, times, values, observed)?,
        individuals,
        items,
    })
}

pub fn load_responses_labeled(path: &Path) -> Result<LabeledResponses> {
    parse_responses(File::open(path)?)
}

pub fn load_responses(path: &Path) -> Result<ResponseTensor> {
    Ok(load_responses_labeled(path)?.tensor)
}

/// Writes every cell in storage order with one-based labels; unobserved
/// cells are written as `NA` so that labels reload in the same order.
pub fn write_responses<W: Write>(writer: W, data: &ResponseTensor) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(HEADER)?;
    for i in 0..data.n() {
        for t in 0..data.times() {
            for j in 0..data.p() {
                let resp = if data.is_observed(i, j, t) {
                    data.value(i, j, t).to_string()
                } else {
                    "NA".to_string()
                };
                w.write_record([(i + 1).to_string(), (j + 1).to_string(), (t + 1).to_string(), resp])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_responses(path: &Path, data: &ResponseTensor) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write_responses(&mut f, data)?;
    f.flush()?;
    Ok(())
}

/// Mapping of raw response categories to bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DichotomizeRule {
    /// Category 1 becomes 1; categories 2 to 4 become 0.
    Cesd,
    Custom(BTreeMap<u32, u8>),
}

impl DichotomizeRule {
    pub fn apply(&self, category: u32) -> Option<u8> {
        match self {
            DichotomizeRule::Cesd => match category {
                1 => Some(1),
                2..=4 => Some(0),
                _ => None,
            },
            DichotomizeRule::Custom(map) => map.get(&category).copied(),
        }
    }
}

/// Rewrites a long-format file of small positive integer categories as
/// binary responses. `NA`/empty responses pass through unchanged.
pub fn dichotomize<R: Read, W: Write>(reader: R, writer: W, rule: &DichotomizeRule) -> Result<usize> {
    let rows = read_rows(reader)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(HEADER)?;
    for r in &rows {
        let out = match r.response.as_str() {
            "" | "NA" => "NA".to_string(),
            raw => {
                let cat: u32 = raw
                    .parse()
                    .map_err(|_| Error::Data(format!("line {}: category {raw:?} is not a positive integer", r.line)))?;
                rule.apply(cat)
                    .ok_or_else(|| Error::Data(format!("line {}: category {cat} is not covered by the rule", r.line)))?
                    .to_string()
            }
        };
        w.write_record([r.individual.as_str(), r.item.as_str(), &r.time.to_string(), &out])?;
    }
    w.flush()?;
    Ok(rows.len())
}
