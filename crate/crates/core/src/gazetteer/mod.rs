//! GeoNames ingestion and name lookup.
//!
//! The loader reads the standard 19-column GeoNames dump (`allCountries.txt`,
//! `JP.txt`, `cities15000.txt`, ...). Only the columns listed below are used:
//!
//! ```text
//! 0 geonameid   1 name   2 asciiname   3 alternatenames (comma separated)
//! 4 latitude    5 longitude   6 feature class   7 feature code
//! 8 country code   14 population
//! ```

mod verifier;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;

use crate::text::casefold;
use crate::{Error, Result};

pub use verifier::{AllowListVerifier, LocationVerifier, Verdict};
#[cfg(feature = "opencage")]
pub use verifier::OpenCageVerifier;
pub use verifier::parse_opencage_response;

const MIN_COLUMNS: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct LocationRecord {
    pub geoname_id: u64,
    pub name: String,
    pub ascii_name: String,
    pub alternate_names: Vec<String>,
    pub latitude: f64,
    pub longitude: f64,
    pub feature_class: char,
    pub country_code: String,
    pub population: u64,
}

impl LocationRecord {
    /// Every surface form this record answers to: the name, then the
    /// alternates.
    pub fn surface_forms(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.name.as_str())
            .chain(self.alternate_names.iter().map(String::as_str))
            .filter(|s| !s.is_empty())
    }

    // An ascii spelling that differs from every other form becomes an
    // alternate, so transliterated names stay reachable from ASCII text.
    fn fold_ascii_name(&mut self) {
        let ascii = self.ascii_name.trim();
        if ascii.is_empty() {
            return;
        }
        let key = casefold(ascii);
        if self.surface_forms().any(|f| casefold(f) == key) {
            return;
        }
        self.alternate_names.push(ascii.to_owned());
    }
}

/// Filters applied while loading a dump. `None` means "accept everything".
#[derive(Debug, Clone, Default)]
pub struct LoadFilter {
    pub countries: Option<HashSet<String>>,
    pub feature_classes: Option<HashSet<char>>,
}

impl LoadFilter {
    fn accepts(&self, r: &LocationRecord) -> bool {
        let country_ok = self
            .countries
            .as_ref()
            .is_none_or(|c| c.contains(&r.country_code.to_ascii_uppercase()));
        let class_ok = self
            .feature_classes
            .as_ref()
            .is_none_or(|f| f.contains(&r.feature_class));
        country_ok && class_ok
    }
}

/// Counters reported by the loader.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub lines: usize,
    pub malformed: usize,
    pub filtered_out: usize,
    pub duplicate_ids: usize,
}

/// An immutable, indexed collection of GeoNames records.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    records: Vec<LocationRecord>,
    // case-folded surface form -> indices into `records`, ascending
    name_index: BTreeMap<String, Vec<usize>>,
    name_list: Vec<String>,
}

impl Gazetteer {
    /// Builds a gazetteer from records. Later records with an already seen
    /// `geoname_id` are dropped.
    pub fn from_records(records: impl IntoIterator<Item = LocationRecord>) -> Self {
        let mut seen = HashSet::new();
        let records: Vec<_> = records
            .into_iter()
            .filter(|r| seen.insert(r.geoname_id))
            .map(|mut r| {
                r.fold_ascii_name();
                r
            })
            .collect();

        let mut name_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        // folded -> smallest original spelling
        let mut spellings: BTreeMap<String, &str> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            for form in r.surface_forms() {
                let key = casefold(form);
                let ids = name_index.entry(key.clone()).or_default();
                if ids.last() != Some(&i) {
                    ids.push(i);
                }
                spellings
                    .entry(key)
                    .and_modify(|s| {
                        if form < *s {
                            *s = form;
                        }
                    })
                    .or_insert(form);
            }
        }
        let name_list = spellings.into_values().map(str::to_owned).collect();

        Gazetteer {
            records,
            name_index,
            name_list,
        }
    }

    pub fn records(&self) -> &[LocationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Unique names (including alternates), sorted by their case-folded form.
    pub fn name_list(&self) -> &[String] {
        &self.name_list
    }

    /// Unique primary names (`name` and `asciiname` only), sorted by their
    /// case-folded form. Alternate names in a dump are mostly other scripts
    /// and languages, which cleaned ASCII tweets never contain.
    pub fn primary_names(&self) -> Vec<String> {
        let mut by_key: BTreeMap<String, &str> = BTreeMap::new();
        for r in &self.records {
            for form in [r.name.as_str(), r.ascii_name.as_str()] {
                if form.is_empty() {
                    continue;
                }
                by_key
                    .entry(casefold(form))
                    .and_modify(|s| {
                        if form < *s {
                            *s = form;
                        }
                    })
                    .or_insert(form);
            }
        }
        by_key.into_values().map(str::to_owned).collect()
    }

    pub fn lookup(&self, name: &str) -> Vec<&LocationRecord> {
        self.name_index
            .get(&casefold(name))
            .map(|ids| ids.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.name_index.contains_key(&casefold(name))
    }

    /// Picks the most populous record answering to `name`; equal populations
    /// go to the smallest geoname id.
    pub fn resolve(&self, name: &str) -> Option<&LocationRecord> {
        self.lookup(name).into_iter().min_by(|a, b| {
            b.population
                .cmp(&a.population)
                .then(a.geoname_id.cmp(&b.geoname_id))
        })
    }

    /// True when `candidate` is a known name and the verifier (if any) does
    /// not reject it. An unavailable verifier counts as confirmation.
    pub fn validate_location(
        &self,
        candidate: &str,
        verifier: Option<&dyn LocationVerifier>,
    ) -> bool {
        if !self.contains(candidate) {
            return false;
        }
        match verifier.map(|v| v.confirm(candidate)) {
            None | Some(Verdict::Confirmed) => true,
            Some(Verdict::Unconfirmed) => false,
            Some(Verdict::Unavailable) => {
                warn!("verifier unavailable for {candidate:?}; accepting on gazetteer evidence");
                true
            }
        }
    }
}

/// Parses one dump line. Returns `Err` with a message for malformed rows.
pub fn parse_geonames_line(line: &str) -> std::result::Result<LocationRecord, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < MIN_COLUMNS {
        return Err(format!("expected at least {MIN_COLUMNS} columns, found {}", cols.len()));
    }
    let geoname_id = cols[0]
        .trim()
        .parse::<u64>()
        .map_err(|e| format!("geonameid {:?}: {e}", cols[0]))?;
    let name = cols[1].trim();
    if name.is_empty() {
        return Err("empty name".into());
    }
    let latitude = parse_coord(cols[4], 90.0, "latitude")?;
    let longitude = parse_coord(cols[5], 180.0, "longitude")?;
    let feature_class = cols[6].trim().chars().next().unwrap_or(' ');
    let population = match cols[14].trim() {
        "" => 0,
        p => p.parse::<u64>().map_err(|e| format!("population {p:?}: {e}"))?,
    };
    let alternate_names = cols[3]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect();

    Ok(LocationRecord {
        geoname_id,
        name: name.to_owned(),
        ascii_name: cols[2].trim().to_owned(),
        alternate_names,
        latitude,
        longitude,
        feature_class,
        country_code: cols[8].trim().to_owned(),
        population,
    })
}

fn parse_coord(raw: &str, bound: f64, what: &str) -> std::result::Result<f64, String> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|e| format!("{what} {raw:?}: {e}"))?;
    if !v.is_finite() || v.abs() > bound {
        return Err(format!("{what} {v} out of range"));
    }
    Ok(v)
}

/// Loads a GeoNames dump, keeping the records that pass `filter`.
///
/// Malformed rows are skipped and counted in the returned [`LoadStats`].
pub fn load_geonames(path: &Path, filter: &LoadFilter) -> Result<(Gazetteer, LoadStats)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut stats = LoadStats::default();
    let mut records = Vec::new();
    let mut ids = HashSet::new();

    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        stats.lines += 1;
        let record = match parse_geonames_line(line) {
            Ok(r) => r,
            Err(msg) => {
                warn!("{}:{}: skipping row: {msg}", path.display(), lineno + 1);
                stats.malformed += 1;
                continue;
            }
        };
        if !filter.accepts(&record) {
            stats.filtered_out += 1;
            continue;
        }
        if !ids.insert(record.geoname_id) {
            stats.duplicate_ids += 1;
            continue;
        }
        records.push(record);
    }

    if records.is_empty() {
        return Err(Error::EmptyGazetteer {
            path: path.to_owned(),
        });
    }
    Ok((Gazetteer::from_records(records), stats))
}
