//! Publication records, analysis units, and corpus loading/filtering.
//!
//! Two input formats are accepted:
//!
//! * JSONL, one publication per line:
//!   `{"id": "W1", "year": 2014, "citations": 12, "authors": [{"countries": ["US"]}], "tags": ["ERC"]}`
//! * CSV with columns `id,year,citations,countries,tags`, where `countries` is a
//!   `;`-separated list of per-author `+`-joined codes (`US;US+CH;DE` is three
//!   authors) and `tags` is `;`-separated.
//!
//! Country codes are upper-cased on load. Codes outside ISO 3166-1 alpha-2 are
//! kept and listed by [`LoadSummary`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ISO_ALPHA2: &str =
    "AD AE AF AG AI AL AM AO AQ AR AS AT AU AW AX AZ BA BB BD BE BF BG BH BI BJ \
BL BM BN BO BQ BR BS BT BV BW BY BZ CA CC CD CF CG CH CI CK CL CM CN CO CR CU CV CW CX CY CZ DE DJ \
DK DM DO DZ EC EE EG EH ER ES ET FI FJ FK FM FO FR GA GB GD GE GF GG GH GI GL GM GN GP GQ GR GS GT \
GU GW GY HK HM HN HR HT HU ID IE IL IM IN IO IQ IR IS IT JE JM JO JP KE KG KH KI KM KN KP KR KW KY \
KZ LA LB LC LI LK LR LS LT LU LV LY MA MC MD ME MF MG MH MK ML MM MN MO MP MQ MR MS MT MU MV MW MX \
MY MZ NA NC NE NF NG NI NL NO NP NR NU NZ OM PA PE PF PG PH PK PL PM PN PR PS PT PW PY QA RE RO RS \
RU RW SA SB SC SD SE SG SH SI SJ SK SL SM SN SO SR SS ST SV SX SY SZ TC TD TF TG TH TJ TK TL TM TN \
TO TR TT TV TW TZ UA UG UM US UY UZ VA VC VE VG VI VN VU WF WS YE YT ZA ZM ZW";

/// Upper-case two-letter country code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode(String);

impl CountryCode {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Whether the code is an assigned ISO 3166-1 alpha-2 code.
    pub fn is_iso(&self) -> bool {
        ISO_ALPHA2.split_ascii_whitespace().any(|c| c == self.0)
    }
}

impl FromStr for CountryCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() == 2 && s.bytes().all(|b| b.is_ascii_alphabetic()) {
            Ok(CountryCode(s.to_ascii_uppercase()))
        } else {
            Err(Error::CountryCode(s.to_owned()))
        }
    }
}

impl TryFrom<String> for CountryCode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CountryCode> for String {
    fn from(c: CountryCode) -> String {
        c.0
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Country affiliations of a single author.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorAffiliation {
    pub countries: BTreeSet<CountryCode>,
}

impl AuthorAffiliation {
    pub fn new<I: IntoIterator<Item = CountryCode>>(countries: I) -> Self {
        AuthorAffiliation {
            countries: countries.into_iter().collect(),
        }
    }

    /// Convenience constructor from string codes; panics on malformed codes.
    pub fn of(codes: &[&str]) -> Self {
        Self::new(codes.iter().map(|c| c.parse().expect("valid country code")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Publication {
    pub id: String,
    pub year: i32,
    pub citations: u64,
    pub authors: Vec<AuthorAffiliation>,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

impl Publication {
    /// Union of all authors' countries.
    pub fn countries(&self) -> BTreeSet<&CountryCode> {
        self.authors
            .iter()
            .flat_map(|a| a.countries.iter())
            .collect()
    }

    /// At least one author has a country inside `unit` ("whole" selection).
    pub fn participates_in(&self, unit: &UnitDefinition) -> bool {
        self.authors
            .iter()
            .any(|a| a.countries.iter().any(|c| unit.contains(c)))
    }

    /// Every country of every author lies inside `unit` ("domestic" selection).
    pub fn is_domestic_to(&self, unit: &UnitDefinition) -> bool {
        self.authors
            .iter()
            .all(|a| a.countries.iter().all(|c| unit.contains(c)))
    }

    fn validate(&self, row: usize) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::row(row, "id", "empty id"));
        }
        if self.authors.is_empty() {
            return Err(Error::row(row, "authors", "publication has no authors"));
        }
        if let Some(i) = self.authors.iter().position(|a| a.countries.is_empty()) {
            return Err(Error::row(
                row,
                "authors",
                format!("author {} has no country", i + 1),
            ));
        }
        Ok(())
    }
}

/// A named set of countries analysed as one research system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitDefinition {
    pub name: String,
    pub countries: BTreeSet<CountryCode>,
    #[serde(default)]
    pub population_millions: Option<f64>,
}

impl UnitDefinition {
    pub fn new<I: IntoIterator<Item = CountryCode>>(name: &str, countries: I) -> Self {
        UnitDefinition {
            name: name.to_owned(),
            countries: countries.into_iter().collect(),
            population_millions: None,
        }
    }

    /// Single-country unit named after its code.
    pub fn country(code: &str) -> Self {
        let code: CountryCode = code.parse().expect("valid country code");
        Self::new(code.as_str(), [code.clone()])
    }

    pub fn with_population(mut self, millions: f64) -> Self {
        self.population_millions = Some(millions);
        self
    }

    pub fn contains(&self, country: &CountryCode) -> bool {
        self.countries.contains(country)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |message: &str| Error::InvalidUnit {
            name: self.name.clone(),
            message: message.to_owned(),
        };
        if self.name.trim().is_empty() {
            return Err(invalid("empty name"));
        }
        if self.countries.is_empty() {
            return Err(invalid("no countries"));
        }
        if let Some(p) = self.population_millions {
            if !(p.is_finite() && p > 0.0) {
                return Err(invalid("population_millions must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct UnitsFile {
    units: Vec<UnitDefinition>,
}

pub fn parse_units(json: &str) -> Result<Vec<UnitDefinition>> {
    let file: UnitsFile = serde_json::from_str(json)?;
    let mut seen = HashSet::new();
    for unit in &file.units {
        unit.validate()?;
        if !seen.insert(unit.name.as_str()) {
            return Err(Error::InvalidUnit {
                name: unit.name.clone(),
                message: "defined more than once".into(),
            });
        }
    }
    Ok(file.units)
}

pub fn load_units(path: impl AsRef<Path>) -> Result<Vec<UnitDefinition>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_units(&text)
}

pub fn write_units<W: Write>(units: &[UnitDefinition], out: W) -> Result<()> {
    serde_json::to_writer_pretty(
        out,
        &UnitsFile {
            units: units.to_vec(),
        },
    )?;
    Ok(())
}

pub fn find_unit<'a>(units: &'a [UnitDefinition], name: &str) -> Result<&'a UnitDefinition> {
    units
        .iter()
        .find(|u| u.name == name)
        .ok_or_else(|| Error::UndefinedUnit(name.to_owned()))
}

/// Checks that sibling units share no country, as required when they are
/// analysed as an exclusive partition of the world.
pub fn check_partition(units: &[UnitDefinition]) -> Result<()> {
    let mut owner: BTreeMap<&CountryCode, &str> = BTreeMap::new();
    for unit in units {
        for c in &unit.countries {
            if let Some(first) = owner.insert(c, &unit.name) {
                return Err(Error::OverlappingUnits {
                    first: first.to_owned(),
                    second: unit.name.clone(),
                    country: c.to_string(),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guesses the format from a file extension (`.csv` or anything else as JSONL).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

/// A validated, immutable collection of publications with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    publications: Vec<Publication>,
    pub provenance: BTreeMap<String, String>,
}

impl Corpus {
    pub fn new(publications: Vec<Publication>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(publications.len());
        for (i, p) in publications.iter().enumerate() {
            p.validate(i + 1)?;
            if !ids.insert(p.id.as_str()) {
                return Err(Error::DuplicateId(p.id.clone()));
            }
        }
        Ok(Corpus {
            publications,
            provenance: BTreeMap::new(),
        })
    }

    pub fn with_provenance(mut self, key: &str, value: impl Into<String>) -> Self {
        self.provenance.insert(key.to_owned(), value.into());
        self
    }

    pub fn publications(&self) -> &[Publication] {
        &self.publications
    }

    pub fn len(&self) -> usize {
        self.publications.len()
    }

    pub fn is_empty(&self) -> bool {
        self.publications.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Publication> {
        self.publications.iter()
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Publication;
    type IntoIter = std::slice::Iter<'a, Publication>;

    fn into_iter(self) -> Self::IntoIter {
        self.publications.iter()
    }
}

#[derive(Deserialize)]
struct RawAuthor {
    countries: Vec<String>,
}

#[derive(Deserialize)]
struct RawPublication {
    id: String,
    year: i64,
    citations: i64,
    authors: Vec<RawAuthor>,
    #[serde(default)]
    tags: Vec<String>,
}

fn parse_countries<'a, I: IntoIterator<Item = &'a str>>(
    row: usize,
    author: usize,
    codes: I,
) -> Result<AuthorAffiliation> {
    let mut countries = BTreeSet::new();
    for code in codes {
        let code = code
            .parse::<CountryCode>()
            .map_err(|e| Error::row(row, "countries", format!("author {author}: {e}")))?;
        countries.insert(code);
    }
    if countries.is_empty() {
        return Err(Error::row(
            row,
            "countries",
            format!("author {author} has no country"),
        ));
    }
    Ok(AuthorAffiliation { countries })
}

fn checked_year(row: usize, year: i64) -> Result<i32> {
    i32::try_from(year).map_err(|_| Error::row(row, "year", format!("{year} out of range")))
}

fn checked_citations(row: usize, citations: i64) -> Result<u64> {
    u64::try_from(citations)
        .map_err(|_| Error::row(row, "citations", format!("{citations} is negative")))
}

impl RawPublication {
    fn into_publication(self, row: usize) -> Result<Publication> {
        let authors = self
            .authors
            .iter()
            .enumerate()
            .map(|(i, a)| parse_countries(row, i + 1, a.countries.iter().map(String::as_str)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Publication {
            id: self.id,
            year: checked_year(row, self.year)?,
            citations: checked_citations(row, self.citations)?,
            authors,
            tags: self.tags.into_iter().collect(),
        })
    }
}

fn finish(publications: Vec<Publication>) -> Result<Corpus> {
    if publications.is_empty() {
        return Err(Error::Empty);
    }
    Corpus::new(publications)
}

/// Reads JSONL records; blank lines are skipped and rows are numbered by line.
pub fn read_jsonl<R: Read>(reader: R) -> Result<Corpus> {
    let mut publications = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| Error::row(row, "-", e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPublication = serde_json::from_str(&line)
            .map_err(|e| Error::row(row, json_field(&e), e.to_string()))?;
        let publication = raw.into_publication(row)?;
        publication.validate(row)?;
        publications.push(publication);
    }
    finish(publications)
}

fn json_field(e: &serde_json::Error) -> &'static str {
    let msg = e.to_string();
    ["id", "year", "citations", "authors", "countries", "tags"]
        .into_iter()
        .find(|f| msg.contains(&format!("`{f}`")))
        .unwrap_or("-")
}

#[derive(Deserialize)]
struct CsvRow {
    id: String,
    year: String,
    citations: String,
    countries: String,
    #[serde(default)]
    tags: String,
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(';').map(str::trim).filter(|t| !t.is_empty())
}

/// Reads the simplified CSV layout. Row numbers count the header as row 1.
pub fn read_csv<R: Read>(reader: R) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut publications = Vec::new();
    for (i, rec) in rdr.deserialize::<CsvRow>().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::row(row, "-", e.to_string()))?;
        let year = rec
            .year
            .parse::<i64>()
            .map_err(|e| Error::row(row, "year", e.to_string()))?;
        let citations = rec
            .citations
            .parse::<i64>()
            .map_err(|e| Error::row(row, "citations", e.to_string()))?;
        let authors = split_list(&rec.countries)
            .enumerate()
            .map(|(a, author)| parse_countries(row, a + 1, author.split('+')))
            .collect::<Result<Vec<_>>>()?;
        let publication = Publication {
            id: rec.id,
            year: checked_year(row, year)?,
            citations: checked_citations(row, citations)?,
            authors,
            tags: split_list(&rec.tags).map(str::to_owned).collect(),
        };
        publication.validate(row)?;
        publications.push(publication);
    }
    finish(publications)
}

pub fn load_corpus(path: impl AsRef<Path>, format: Format) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let corpus = match format {
        Format::Jsonl => read_jsonl(file)?,
        Format::Csv => read_csv(file)?,
    };
    Ok(corpus
        .with_provenance("source", path.display().to_string())
        .with_provenance(
            "format",
            match format {
                Format::Jsonl => "jsonl",
                Format::Csv => "csv",
            },
        ))
}

pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for p in corpus {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

pub fn write_csv<W: Write>(corpus: &Corpus, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "year", "citations", "countries", "tags"])?;
    for p in corpus {
        let countries = p
            .authors
            .iter()
            .map(|a| {
                a.countries
                    .iter()
                    .map(CountryCode::as_str)
                    .collect::<Vec<_>>()
                    .join("+")
            })
            .collect::<Vec<_>>()
            .join(";");
        let tags = p.tags.iter().cloned().collect::<Vec<_>>().join(";");
        w.write_record([
            p.id.as_str(),
            &p.year.to_string(),
            &p.citations.to_string(),
            &countries,
            &tags,
        ])?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Descriptive statistics reported after loading a corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadSummary {
    pub publications: usize,
    pub years: Option<(i32, i32)>,
    pub total_citations: u64,
    pub countries: BTreeMap<String, usize>,
    pub unknown_countries: BTreeSet<String>,
    pub tags: BTreeMap<String, usize>,
}

impl LoadSummary {
    pub fn of(corpus: &Corpus) -> Self {
        let mut countries = BTreeMap::new();
        let mut unknown = BTreeSet::new();
        let mut tags = BTreeMap::new();
        let mut years: Option<(i32, i32)> = None;
        let mut total_citations = 0u64;
        for p in corpus {
            total_citations = total_citations.saturating_add(p.citations);
            years = Some(match years {
                None => (p.year, p.year),
                Some((lo, hi)) => (lo.min(p.year), hi.max(p.year)),
            });
            for c in p.countries() {
                *countries.entry(c.to_string()).or_insert(0) += 1;
                if !c.is_iso() {
                    unknown.insert(c.to_string());
                }
            }
            for t in &p.tags {
                *tags.entry(t.clone()).or_insert(0) += 1;
            }
        }
        LoadSummary {
            publications: corpus.len(),
            years,
            total_citations,
            countries,
            unknown_countries: unknown,
            tags,
        }
    }
}

/// Conjunction of selection constraints on publications.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterSpec {
    /// Inclusive year range.
    pub years: Option<(i32, i32)>,
    pub required_tag: Option<String>,
    /// All author countries inside the named unit (domestic selection).
    pub exclusive_to: Option<String>,
    /// At least one author country inside the named unit (whole selection).
    pub participating_in: Option<String>,
}

impl FilterSpec {
    pub fn is_empty(&self) -> bool {
        *self == FilterSpec::default()
    }

    /// Resolves unit names and returns a predicate over publications.
    pub fn compile<'a>(
        &'a self,
        units: &'a [UnitDefinition],
    ) -> Result<impl Fn(&Publication) -> bool + 'a> {
        let exclusive = self
            .exclusive_to
            .as_deref()
            .map(|n| find_unit(units, n))
            .transpose()?;
        let participating = self
            .participating_in
            .as_deref()
            .map(|n| find_unit(units, n))
            .transpose()?;
        Ok(move |p: &Publication| {
            self.years
                .is_none_or(|(lo, hi)| (lo..=hi).contains(&p.year))
                && self
                    .required_tag
                    .as_ref()
                    .is_none_or(|t| p.tags.contains(t))
                && exclusive.is_none_or(|u| p.is_domestic_to(u))
                && participating.is_none_or(|u| p.participates_in(u))
        })
    }
}

/// Sub-corpus of the publications matching `spec`, in their original order.
pub fn filter_corpus(
    corpus: &Corpus,
    spec: &FilterSpec,
    units: &[UnitDefinition],
) -> Result<Corpus> {
    let keep = spec.compile(units)?;
    Ok(Corpus {
        publications: corpus.iter().filter(|p| keep(p)).cloned().collect(),
        provenance: corpus.provenance.clone(),
    })
}
