//! FASTA parsing, metadata join and train/test splitting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::alphabet;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// One FASTA record. `residues` may carry a single trailing `*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: String,
    pub residues: String,
}

impl SequenceRecord {
    /// Validates the residue string against the alphabet.
    pub fn new(id: impl Into<String>, residues: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let residues = residues.into();
        if id.is_empty() {
            return Err(Error::MalformedFasta {
                line: 0,
                reason: "empty record id".into(),
            });
        }
        if let Some((position, byte)) = alphabet::first_invalid(residues.as_bytes()) {
            return Err(Error::InvalidResidue {
                id,
                position,
                residue: byte as char,
            });
        }
        Ok(Self { id, residues })
    }

    /// Residues with any trailing stop removed.
    pub fn stripped(&self) -> &str {
        alphabet::strip_stop(&self.residues)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelHierarchy {
    pub continent: String,
    pub country: String,
    pub state: Option<String>,
}

impl LabelHierarchy {
    pub fn at(&self, level: ClassLevel) -> Option<&str> {
        match level {
            ClassLevel::Continent => Some(&self.continent),
            ClassLevel::Country => Some(&self.country),
            ClassLevel::State => self.state.as_deref(),
        }
    }
}

/// A validated, stop-free sequence with its location label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub record: SequenceRecord,
    pub label: LabelHierarchy,
}

impl LabeledSequence {
    pub fn id(&self) -> &str {
        &self.record.id
    }

    pub fn residues(&self) -> &str {
        self.record.stripped()
    }

    pub fn class_name(&self, level: ClassLevel) -> Result<&str> {
        self.label.at(level).ok_or_else(|| Error::MissingLabel {
            id: self.record.id.clone(),
            level: level.to_string(),
        })
    }
}

/// Which level of the location hierarchy is the class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClassLevel {
    #[default]
    Continent,
    Country,
    State,
}

impl fmt::Display for ClassLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLevel::Continent => "continent",
            ClassLevel::Country => "country",
            ClassLevel::State => "state",
        })
    }
}

impl FromStr for ClassLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continent" => Ok(ClassLevel::Continent),
            "country" => Ok(ClassLevel::Country),
            "state" => Ok(ClassLevel::State),
            other => Err(Error::InvalidConfig(format!("unknown class level {other:?}"))),
        }
    }
}

/// Parses FASTA text. Sequence lines are concatenated with all whitespace
/// removed; the record id is the header up to the first whitespace.
pub fn parse_fasta<R: BufRead>(mut reader: R) -> Result<Vec<SequenceRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut current: Option<(String, Vec<u8>, usize)> = None;
    let mut line = Vec::new();
    let mut line_no = 0;

    let mut finish = |entry: Option<(String, Vec<u8>, usize)>,
                      records: &mut Vec<SequenceRecord>|
     -> Result<()> {
        let Some((id, body, header_line)) = entry else {
            return Ok(());
        };
        if body.is_empty() {
            return Err(Error::MalformedFasta {
                line: header_line,
                reason: format!("record {id:?} has an empty sequence"),
            });
        }
        if let Some((position, byte)) = alphabet::first_invalid(&body) {
            return Err(Error::InvalidResidue {
                id,
                position,
                residue: byte as char,
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        // Every byte is ASCII after validation.
        let residues = String::from_utf8(body).expect("validated ASCII");
        records.push(SequenceRecord { id, residues });
        Ok(())
    };

    loop {
        line.clear();
        let n = reader
            .read_until(b'\n', &mut line)
            .map_err(|e| Error::io("reading FASTA", e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if line.first() == Some(&b'>') {
            finish(current.take(), &mut records)?;
            let header = String::from_utf8_lossy(&line[1..]);
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(Error::MalformedFasta {
                    line: line_no,
                    reason: "header without an id".into(),
                });
            }
            current = Some((id, Vec::new(), line_no));
        } else {
            let mut bytes = line.iter().copied().filter(|b| !b.is_ascii_whitespace());
            match current.as_mut() {
                Some((_, body, _)) => body.extend(bytes),
                None => {
                    if bytes.next().is_some() {
                        return Err(Error::MalformedFasta {
                            line: line_no,
                            reason: "sequence data before the first header".into(),
                        });
                    }
                }
            }
        }
    }
    finish(current.take(), &mut records)?;
    Ok(records)
}

/// Writes records as FASTA, wrapping sequence lines at `width` (0 = no wrap).
pub fn write_fasta<W: Write>(mut out: W, records: &[SequenceRecord], width: usize) -> Result<()> {
    let io = |e| Error::io("writing FASTA", e);
    for r in records {
        writeln!(out, ">{}", r.id).map_err(io)?;
        let bytes = r.residues.as_bytes();
        let width = if width == 0 { bytes.len().max(1) } else { width };
        for chunk in bytes.chunks(width) {
            out.write_all(chunk).map_err(io)?;
            out.write_all(b"\n").map_err(io)?;
        }
    }
    Ok(())
}

/// Location metadata keyed by record id.
#[derive(Debug, Clone, Default)]
pub struct Metadata {
    rows: HashMap<String, LabelHierarchy>,
}

impl Metadata {
    /// Reads the tab-separated table `id, continent, country, state` (with
    /// a header row). The state column may be empty.
    pub fn from_tsv<R: Read>(reader: R) -> Result<Self> {
        let mut tsv = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let mut rows = HashMap::new();
        for (i, row) in tsv.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::MalformedMetadata {
                line,
                reason: e.to_string(),
            })?;
            if row.len() < 3 || row.len() > 4 {
                return Err(Error::MalformedMetadata {
                    line,
                    reason: format!("expected 3 or 4 columns, found {}", row.len()),
                });
            }
            let field = |i: usize| row.get(i).map(str::trim).unwrap_or("");
            let (id, continent, country) = (field(0), field(1), field(2));
            if id.is_empty() || continent.is_empty() || country.is_empty() {
                return Err(Error::MalformedMetadata {
                    line,
                    reason: "id, continent and country must be non-empty".into(),
                });
            }
            let state = Some(field(3)).filter(|s| !s.is_empty()).map(String::from);
            let label = LabelHierarchy {
                continent: continent.into(),
                country: country.into(),
                state,
            };
            if rows.insert(id.to_string(), label).is_some() {
                return Err(Error::DuplicateMetadataKey(id.into()));
            }
        }
        Ok(Self { rows })
    }

    pub fn insert(&mut self, id: impl Into<String>, label: LabelHierarchy) -> Result<()> {
        let id = id.into();
        if self.rows.contains_key(&id) {
            return Err(Error::DuplicateMetadataKey(id));
        }
        self.rows.insert(id, label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct JoinOutcome {
    pub sequences: Vec<LabeledSequence>,
    pub dropped: usize,
}

/// Inner join on record id. Records without metadata are dropped and
/// counted; trailing stop characters are stripped here.
pub fn join_metadata(records: Vec<SequenceRecord>, metadata: &Metadata) -> Result<JoinOutcome> {
    let total = records.len();
    let sequences: Vec<_> = records
        .into_iter()
        .filter_map(|mut record| {
            let label = metadata.rows.get(&record.id)?.clone();
            if record.residues.ends_with('*') {
                record.residues.pop();
            }
            Some(LabeledSequence { record, label })
        })
        .collect();
    if sequences.is_empty() {
        return Err(Error::EmptyJoin);
    }
    let dropped = total - sequences.len();
    Ok(JoinOutcome { sequences, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.10,
            seed: 0,
            stratified: true,
        }
    }
}

/// Training-set size for `n` items.
pub fn train_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).min(n)
}

/// Train indices per class when stratifying: largest-remainder apportionment
/// of `train_size(n)` over the classes (ties go to the earlier class).
pub fn stratified_quota(class_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let n: usize = class_sizes.iter().sum();
    let target = train_size(n, fraction);
    let exact: Vec<f64> = class_sizes.iter().map(|&c| fraction * c as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = quota.iter().sum();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = target.saturating_sub(assigned);
    for &c in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if quota[c] < class_sizes[c] {
            quota[c] += 1;
            remaining -= 1;
        }
    }
    quota
}

/// Splits `data` into disjoint train and test sets. Both keep input order.
pub fn split_train_test(
    data: &[LabeledSequence],
    spec: &SplitSpec,
    level: ClassLevel,
) -> Result<(Vec<LabeledSequence>, Vec<LabeledSequence>)> {
    let mask = split_mask(data, spec, level)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (item, in_train) in data.iter().zip(mask) {
        if in_train {
            train.push(item.clone());
        } else {
            test.push(item.clone());
        }
    }
    Ok((train, test))
}

/// `true` for rows assigned to the training set.
pub fn split_mask(data: &[LabeledSequence], spec: &SplitSpec, level: ClassLevel) -> Result<Vec<bool>> {
    if data.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let mut rng = rng::stream(spec.seed, Stream::Split);
    let mut mask = vec![false; data.len()];
    if spec.stratified {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, item) in data.iter().enumerate() {
            groups.entry(item.class_name(level)?).or_default().push(i);
        }
        if let Some((class, _)) = groups.iter().find(|(_, members)| members.len() < 2) {
            return Err(Error::ClassTooSmall {
                class: class.to_string(),
            });
        }
        let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
        let quota = stratified_quota(&sizes, spec.train_fraction);
        for (members, take) in groups.into_values().zip(quota) {
            let mut members = members;
            members.shuffle(&mut rng);
            for &i in &members[..take] {
                mask[i] = true;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        for &i in &order[..train_size(data.len(), spec.train_fraction)] {
            mask[i] = true;
        }
    }
    Ok(mask)
}
