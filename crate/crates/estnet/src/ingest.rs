//! Economy files: loading with validation and id remapping, and saving.
//!
//! Firms and establishments receive dense ids in row order. Region, industry
//! and product labels receive dense ids in natural label order ("P2" before
//! "P10"), so the same files always give the same economy.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::path::{Path, PathBuf};

use estnet_core::{
    Economy, Establishment, EstablishmentId, Firm, FirmId, IndustryId, ProductId, ProductionNetwork, RegionId,
};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const FIRMS_FILE: &str = "firms.csv";
pub const ESTABLISHMENTS_FILE: &str = "establishments.csv";
pub const FIRM_LINKS_FILE: &str = "firm_links.csv";
pub const EST_LINKS_FILE: &str = "est_links.csv";

const FIRMS_HEADER: [&str; 3] = ["firm_id", "region", "industry"];
const ESTABLISHMENTS_HEADER: [&str; 5] = ["est_id", "firm_id", "region", "industry", "products"];
const FIRM_LINKS_HEADER: [&str; 2] = ["supplier_firm_id", "client_firm_id"];
const EST_LINKS_HEADER: [&str; 2] = ["supplier_est_id", "client_est_id"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestManifest {
    pub firms: PathBuf,
    pub establishments: PathBuf,
    pub firm_links: PathBuf,
    /// Establishment links; when present the builder can be skipped.
    #[serde(default)]
    pub est_links: Option<PathBuf>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_separator")]
    pub product_separator: char,
}

fn default_delimiter() -> char {
    ','
}

fn default_separator() -> char {
    ';'
}

impl IngestManifest {
    /// The standard file names inside `dir`. `est_links.csv` is picked up
    /// only if it exists.
    pub fn in_dir(dir: &Path) -> Self {
        let est_links = dir.join(EST_LINKS_FILE);
        Self {
            firms: dir.join(FIRMS_FILE),
            establishments: dir.join(ESTABLISHMENTS_FILE),
            firm_links: dir.join(FIRM_LINKS_FILE),
            est_links: est_links.is_file().then_some(est_links),
            delimiter: default_delimiter(),
            product_separator: default_separator(),
        }
    }

    /// Reads a JSON manifest. Relative paths resolve against its directory.
    pub fn from_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Self =
            serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut m.firms, &mut m.establishments, &mut m.firm_links] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = m.est_links.as_mut().filter(|p| p.is_relative()) {
            *p = base.join(&*p);
        }
        Ok(m)
    }

    fn delimiter_byte(&self) -> Result<u8> {
        u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| Error::Config(format!("delimiter {:?} is not ASCII", self.delimiter)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub duplicate_firm_links: usize,
    pub self_firm_links: usize,
    pub duplicate_est_links: usize,
    /// External ids of firms that had no establishment rows.
    pub synthesized_headquarters: Vec<String>,
}

impl LoadReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.duplicate_firm_links > 0 {
            out.push(format!("dropped {} duplicate firm link rows", self.duplicate_firm_links));
        }
        if self.self_firm_links > 0 {
            out.push(format!("dropped {} firm self-links", self.self_firm_links));
        }
        if self.duplicate_est_links > 0 {
            out.push(format!("dropped {} duplicate establishment link rows", self.duplicate_est_links));
        }
        if !self.synthesized_headquarters.is_empty() {
            out.push(format!(
                "synthesized a headquarters establishment for {} firm(s) without establishments",
                self.synthesized_headquarters.len()
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LoadedEconomy {
    pub economy: Economy,
    /// Establishment edges `(supplier, client)` in dense ids, if a file was given.
    pub est_links: Option<Vec<(usize, usize)>>,
    pub firm_ids: Vec<String>,
    pub establishment_ids: Vec<String>,
    pub report: LoadReport,
}

impl LoadedEconomy {
    pub fn establishment_network(&self) -> Result<Option<ProductionNetwork>> {
        self.est_links
            .as_ref()
            .map(|edges| Ok(ProductionNetwork::from_establishments(&self.economy, edges.clone())?))
            .transpose()
    }
}

/// Orders strings with embedded numbers by value: `a2 < a10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> impl Iterator<Item = (bool, &str)> {
        let mut rest = s;
        std::iter::from_fn(move || {
            let first = rest.chars().next()?;
            let digit = first.is_ascii_digit();
            let end = rest.find(|c: char| c.is_ascii_digit() != digit).unwrap_or(rest.len());
            let (head, tail) = rest.split_at(end);
            rest = tail;
            Some((digit, head))
        })
    }
    let mut ca = chunks(a);
    let mut cb = chunks(b);
    loop {
        let ord = match (ca.next(), cb.next()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some((true, x)), Some((true, y))) => {
                let (x, y) = (x.trim_start_matches('0'), y.trim_start_matches('0'));
                x.len().cmp(&y.len()).then_with(|| x.cmp(y))
            }
            (Some((_, x)), Some((_, y))) => x.cmp(y),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
}

struct Table {
    path: PathBuf,
    reader: csv::Reader<File>,
}

impl Table {
    fn open(path: &Path, delimiter: u8, header: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader =
            csv::ReaderBuilder::new().delimiter(delimiter).flexible(true).trim(csv::Trim::All).from_reader(file);
        let found = reader.headers().map_err(|e| Error::csv(path, e))?;
        if found.iter().ne(header.iter().copied()) {
            return Err(Error::data(
                path,
                1,
                format!(
                    "expected header `{}`, found `{}`",
                    header.join(","),
                    found.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        Ok(Self { path: path.to_path_buf(), reader })
    }

    /// Rows with their 1-based line numbers, arity checked.
    fn rows(&mut self, arity: usize) -> Result<Vec<(u64, csv::StringRecord)>> {
        let mut out = Vec::new();
        for rec in self.reader.records() {
            let rec = rec.map_err(|e| Error::csv(&self.path, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != arity {
                return Err(Error::data(&self.path, line, format!("expected {arity} fields, found {}", rec.len())));
            }
            if rec.iter().any(str::is_empty) {
                return Err(Error::data(&self.path, line, "empty field"));
            }
            out.push((line, rec));
        }
        Ok(out)
    }
}

/// Interns labels and later numbers them in natural order.
#[derive(Default)]
struct Labels(BTreeSet<String>);

impl Labels {
    fn add(&mut self, s: &str) {
        if !self.0.contains(s) {
            self.0.insert(s.to_owned());
        }
    }

    fn finish(self) -> (Vec<String>, HashMap<String, u32>) {
        let mut v: Vec<String> = self.0.into_iter().collect();
        v.sort_by(|a, b| natural_cmp(a, b));
        let map = v.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
        (v, map)
    }
}

struct RawEst {
    external: String,
    firm: usize,
    region: String,
    industry: String,
    products: Vec<String>,
}

pub fn load_economy(manifest: &IngestManifest) -> Result<LoadedEconomy> {
    let delim = manifest.delimiter_byte()?;
    let mut report = LoadReport::default();

    let mut firm_index: HashMap<String, usize> = HashMap::new();
    let mut firm_rows: Vec<(String, String, String)> = Vec::new();
    let mut t = Table::open(&manifest.firms, delim, &FIRMS_HEADER)?;
    for (line, rec) in t.rows(3)? {
        let id = rec[0].to_owned();
        if firm_index.insert(id.clone(), firm_rows.len()).is_some() {
            return Err(Error::data(&t.path, line, format!("duplicate firm id `{id}`")));
        }
        firm_rows.push((id, rec[1].to_owned(), rec[2].to_owned()));
    }

    let mut est_index: HashMap<String, usize> = HashMap::new();
    let mut ests: Vec<RawEst> = Vec::new();
    let mut t = Table::open(&manifest.establishments, delim, &ESTABLISHMENTS_HEADER)?;
    for (line, rec) in t.rows(5)? {
        let id = rec[0].to_owned();
        let Some(&firm) = firm_index.get(&rec[1]) else {
            return Err(Error::data(
                &t.path,
                line,
                format!("establishment `{id}` references unknown firm `{}`", &rec[1]),
            ));
        };
        let products: BTreeSet<String> = rec[4]
            .split(manifest.product_separator)
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::to_owned)
            .collect();
        if products.is_empty() {
            return Err(Error::data(&t.path, line, format!("establishment `{id}` lists no products")));
        }
        if est_index.insert(id.clone(), ests.len()).is_some() {
            return Err(Error::data(&t.path, line, format!("duplicate establishment id `{id}`")));
        }
        ests.push(RawEst {
            external: id,
            firm,
            region: rec[2].to_owned(),
            industry: rec[3].to_owned(),
            products: products.into_iter().collect(),
        });
    }

    // Firms without establishments get a headquarters carrying the smallest
    // product seen in their industry, or an industry pseudo-product.
    let mut has_est = vec![false; firm_rows.len()];
    let mut industry_products: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in &ests {
        has_est[e.firm] = true;
        industry_products.entry(&e.industry).or_default().extend(e.products.iter().map(String::as_str));
    }
    let mut synthesized = Vec::new();
    for (f, (id, region, industry)) in firm_rows.iter().enumerate() {
        if has_est[f] {
            continue;
        }
        let product = industry_products
            .get(industry.as_str())
            .and_then(|ps| ps.iter().min_by(|a, b| natural_cmp(a, b)))
            .map_or_else(|| format!("industry:{industry}"), |p| (*p).to_owned());
        let mut external = format!("hq:{id}");
        while est_index.contains_key(&external) {
            external.insert(0, '_');
        }
        report.synthesized_headquarters.push(id.clone());
        synthesized.push(RawEst {
            external,
            firm: f,
            region: region.clone(),
            industry: industry.clone(),
            products: vec![product],
        });
    }
    for e in synthesized {
        est_index.insert(e.external.clone(), ests.len());
        ests.push(e);
    }

    let (mut regions, mut industries, mut products) = (Labels::default(), Labels::default(), Labels::default());
    for (_, r, i) in &firm_rows {
        regions.add(r);
        industries.add(i);
    }
    for e in &ests {
        regions.add(&e.region);
        industries.add(&e.industry);
        e.products.iter().for_each(|p| products.add(p));
    }
    let (region_labels, region_map) = regions.finish();
    let (industry_labels, industry_map) = industries.finish();
    let (product_labels, product_map) = products.finish();

    let establishments: Vec<Establishment> = ests
        .iter()
        .enumerate()
        .map(|(i, e)| Establishment {
            id: EstablishmentId::from_index(i),
            firm: FirmId::from_index(e.firm),
            region: RegionId(region_map[&e.region]),
            industry: IndustryId(industry_map[&e.industry]),
            products: e.products.iter().map(|p| ProductId(product_map[p])).collect(),
        })
        .collect();
    let mut members = vec![Vec::new(); firm_rows.len()];
    for e in &establishments {
        members[e.firm.index()].push(e.id);
    }
    let firms: Vec<Firm> = firm_rows
        .iter()
        .zip(members)
        .enumerate()
        .map(|(i, ((_, r, ind), establishments))| Firm {
            id: FirmId::from_index(i),
            region: RegionId(region_map[r]),
            industry: IndustryId(industry_map[ind]),
            establishments,
        })
        .collect();

    let mut links = BTreeSet::new();
    let mut t = Table::open(&manifest.firm_links, delim, &FIRM_LINKS_HEADER)?;
    for (line, rec) in t.rows(2)? {
        let resolve = |s: &str| {
            firm_index
                .get(s)
                .copied()
                .ok_or_else(|| Error::data(&manifest.firm_links, line, format!("unknown firm `{s}`")))
        };
        let (s, c) = (resolve(&rec[0])?, resolve(&rec[1])?);
        if s == c {
            report.self_firm_links += 1;
        } else if !links.insert((FirmId::from_index(s), FirmId::from_index(c))) {
            report.duplicate_firm_links += 1;
        }
    }

    let est_links = match &manifest.est_links {
        None => None,
        Some(path) => {
            let mut t = Table::open(path, delim, &EST_LINKS_HEADER)?;
            let mut edges = BTreeSet::new();
            for (line, rec) in t.rows(2)? {
                let resolve = |s: &str| {
                    est_index
                        .get(s)
                        .copied()
                        .ok_or_else(|| Error::data(path, line, format!("unknown establishment `{s}`")))
                };
                let (s, c) = (resolve(&rec[0])?, resolve(&rec[1])?);
                if s == c {
                    return Err(Error::data(path, line, format!("self-link on establishment `{}`", &rec[0])));
                }
                if !edges.insert((s, c)) {
                    report.duplicate_est_links += 1;
                }
            }
            Some(edges.into_iter().collect())
        }
    };

    let economy = Economy::new(
        firms,
        establishments,
        links.into_iter().collect(),
        region_labels,
        industry_labels,
        product_labels,
    )?;
    Ok(LoadedEconomy {
        economy,
        est_links,
        firm_ids: firm_rows.into_iter().map(|(id, _, _)| id).collect(),
        establishment_ids: ests.into_iter().map(|e| e.external).collect(),
        report,
    })
}

/// The economy that `load_economy(save_economy(economy))` returns: unused
/// labels dropped, labels renumbered in natural order, and each firm's
/// establishments listed in id order.
pub fn canonicalize(economy: &Economy) -> Economy {
    fn order(labels: &[String]) -> Vec<u32> {
        let mut idx: Vec<usize> = (0..labels.len()).collect();
        idx.sort_by(|&a, &b| natural_cmp(&labels[a], &labels[b]));
        let mut rank = vec![0; labels.len()];
        for (r, &i) in idx.iter().enumerate() {
            rank[i] = r as u32;
        }
        rank
    }
    fn sorted(labels: &[String]) -> Vec<String> {
        let mut v = labels.to_vec();
        v.sort_by(|a, b| natural_cmp(a, b));
        v
    }
    let mut out = economy.compact_labels();
    let (rr, ir, pr) = (order(&out.region_labels), order(&out.industry_labels), order(&out.product_labels));
    for f in &mut out.firms {
        f.region = RegionId(rr[f.region.index()]);
        f.industry = IndustryId(ir[f.industry.index()]);
        f.establishments.sort_unstable();
    }
    for e in &mut out.establishments {
        e.region = RegionId(rr[e.region.index()]);
        e.industry = IndustryId(ir[e.industry.index()]);
        for p in &mut e.products {
            *p = ProductId(pr[p.index()]);
        }
        e.products.sort_unstable();
    }
    out.region_labels = sorted(&out.region_labels);
    out.industry_labels = sorted(&out.industry_labels);
    out.product_labels = sorted(&out.product_labels);
    out
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

pub(crate) fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes firms, establishments and firm links with dense numeric ids.
pub fn save_economy(dir: &Path, economy: &Economy) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rows(
        &dir.join(FIRMS_FILE),
        &FIRMS_HEADER,
        economy.firms.iter().map(|f| {
            [
                f.id.to_string(),
                economy.region_labels[f.region.index()].clone(),
                economy.industry_labels[f.industry.index()].clone(),
            ]
        }),
    )?;
    write_rows(
        &dir.join(ESTABLISHMENTS_FILE),
        &ESTABLISHMENTS_HEADER,
        economy.establishments.iter().map(|e| {
            let products: Vec<&str> = e.products.iter().map(|p| economy.product_labels[p.index()].as_str()).collect();
            [
                e.id.to_string(),
                e.firm.to_string(),
                economy.region_labels[e.region.index()].clone(),
                economy.industry_labels[e.industry.index()].clone(),
                products.join(";"),
            ]
        }),
    )?;
    write_rows(
        &dir.join(FIRM_LINKS_FILE),
        &FIRM_LINKS_HEADER,
        economy.firm_links.iter().map(|(s, c)| [s.to_string(), c.to_string()]),
    )
}

pub fn save_est_links(path: &Path, net: &ProductionNetwork) -> Result<()> {
    write_rows(path, &EST_LINKS_HEADER, net.edges().map(|(s, c)| [s.to_string(), c.to_string()]))
}
