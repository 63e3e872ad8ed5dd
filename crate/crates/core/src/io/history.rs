use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::market::grid::{is_month_end, month_end_after};
use crate::market::TimeGrid;

/// Dense monthly price panel, `[step × asset]`, strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketHistory {
    pub grid: TimeGrid,
    pub dates: Vec<NaiveDate>,
    pub asset_ids: Vec<String>,
    pub prices: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceFormat {
    /// `date,asset_id,price`, one observation per row.
    #[default]
    Long,
    /// `date,<asset>,<asset>,...`, one date per row.
    Wide,
}

impl MarketHistory {
    /// Builds a panel from rows already on a contiguous month-end grid.
    pub fn new(dates: Vec<NaiveDate>, asset_ids: Vec<String>, prices: Vec<f64>) -> Result<Self> {
        let n = asset_ids.len();
        if n == 0 || dates.len() < 2 {
            return Err(Error::InsufficientData {
                what: "price history rows".into(),
                needed: 2,
                got: dates.len(),
            });
        }
        if prices.len() != dates.len() * n {
            return Err(Error::DimensionMismatch {
                what: "price panel",
                expected: dates.len() * n,
                found: prices.len(),
            });
        }
        for (k, w) in dates.windows(2).enumerate() {
            if month_end_after(w[0], 1) != w[1] {
                return Err(Error::parse(
                    "prices",
                    format!("dates {} and {} (rows {k}, {}) are not consecutive month ends", w[0], w[1], k + 1),
                ));
            }
        }
        if let Some(i) = prices.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::parse(
                "prices",
                format!("non-positive price {} at {} for {}", prices[i], dates[i / n], asset_ids[i % n]),
            ));
        }
        let grid = TimeGrid::monthly(dates.len() - 1, dates[0])?;
        Ok(MarketHistory {
            grid,
            dates,
            asset_ids,
            prices,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn asset_index(&self, id: &str) -> Option<usize> {
        self.asset_ids.iter().position(|a| a == id)
    }

    pub fn price(&self, row: usize, asset: usize) -> f64 {
        self.prices[row * self.n_assets() + asset]
    }

    pub fn series(&self, asset: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.price(r, asset)).collect()
    }

    /// Rows restricted and reordered to `ids`.
    pub fn rows_for(&self, ids: &[String]) -> Result<Vec<Vec<f64>>> {
        let idx = ids
            .iter()
            .map(|id| {
                self.asset_index(id).ok_or_else(|| {
                    Error::config("seed_history", format!("asset `{id}` missing from history"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((0..self.n_rows())
            .map(|r| idx.iter().map(|&a| self.price(r, a)).collect())
            .collect())
    }

    /// Monthly relative returns of one asset.
    pub fn returns(&self, asset: usize) -> Vec<f64> {
        self.series(asset).windows(2).map(|w| w[1] / w[0] - 1.0).collect()
    }

    /// SHA-256 over dates, ids and price bits.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for d in &self.dates {
            h.update(d.to_string().as_bytes());
        }
        for id in &self.asset_ids {
            h.update(id.as_bytes());
            h.update([0u8]);
        }
        for p in &self.prices {
            h.update(p.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

struct Observation {
    line: u64,
    date: NaiveDate,
    asset: String,
    price: f64,
}

fn parse_date(source: &str, line: u64, raw: &str) -> Result<NaiveDate> {
    let date = NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d")
        .map_err(|e| Error::parse(format!("{source}:{line}"), format!("bad date `{raw}`: {e}")))?;
    if !is_month_end(date) {
        return Err(Error::parse(
            format!("{source}:{line}"),
            format!("{date} is not a month end"),
        ));
    }
    Ok(date)
}

fn parse_price(source: &str, line: u64, raw: &str) -> Result<f64> {
    let price: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::parse(format!("{source}:{line}"), format!("bad price `{raw}`")))?;
    if !(price > 0.0 && price.is_finite()) {
        return Err(Error::parse(
            format!("{source}:{line}"),
            format!("price must be strictly positive, got {price}"),
        ));
    }
    Ok(price)
}

fn csv_err(source: &str, e: csv::Error) -> Error {
    let loc = e.position().map(|p| format!("{source}:{}", p.line())).unwrap_or_else(|| source.to_string());
    Error::parse(loc, e.to_string())
}

fn read_long(source: &str, reader: impl Read) -> Result<Vec<Observation>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(source, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "asset_id", "price"] {
        return Err(Error::parse(
            format!("{source}:1"),
            "expected header `date,asset_id,price`",
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(source, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push(Observation {
            line,
            date: parse_date(source, line, &rec[0])?,
            asset: rec[1].to_string(),
            price: parse_price(source, line, &rec[2])?,
        });
    }
    Ok(out)
}

fn read_wide(source: &str, reader: impl Read) -> Result<Vec<Observation>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(source, e))?.clone();
    if headers.len() < 2 || &headers[0] != "date" {
        return Err(Error::parse(
            format!("{source}:1"),
            "expected header `date,<asset>,...`",
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(source, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let date = parse_date(source, line, &rec[0])?;
        for (col, raw) in rec.iter().enumerate().skip(1) {
            if raw.is_empty() {
                continue;
            }
            out.push(Observation {
                line,
                date,
                asset: headers[col].to_string(),
                price: parse_price(source, line, raw)?,
            });
        }
    }
    Ok(out)
}

/// Assembles observations into a dense panel on the intersection of the
/// assets' date ranges. Gaps inside any asset's own range are rejected.
fn assemble(source: &str, obs: Vec<Observation>) -> Result<MarketHistory> {
    let mut order: Vec<String> = Vec::new();
    let mut by_asset: HashMap<String, BTreeMap<NaiveDate, (u64, f64)>> = HashMap::new();
    for o in obs {
        let series = by_asset.entry(o.asset.clone()).or_insert_with(|| {
            order.push(o.asset.clone());
            BTreeMap::new()
        });
        if let Some((prev, _)) = series.insert(o.date, (o.line, o.price)) {
            return Err(Error::parse(
                format!("{source}:{}", o.line),
                format!("duplicate {} observation for `{}` (first on line {prev})", o.date, o.asset),
            ));
        }
    }
    if order.is_empty() {
        return Err(Error::parse(source, "no observations"));
    }
    let mut start = NaiveDate::MIN;
    let mut end = NaiveDate::MAX;
    for id in &order {
        let series = &by_asset[id];
        let dates: Vec<&NaiveDate> = series.keys().collect();
        for w in dates.windows(2) {
            if month_end_after(*w[0], 1) != *w[1] {
                let line = series[w[1]].0;
                return Err(Error::parse(
                    format!("{source}:{line}"),
                    format!("gap in `{id}`: no observation between {} and {}", w[0], w[1]),
                ));
            }
        }
        start = start.max(**dates.first().expect("non-empty"));
        end = end.min(**dates.last().expect("non-empty"));
    }
    if start > end {
        return Err(Error::parse(source, "assets share no common dates"));
    }
    let mut dates = Vec::new();
    let mut d = start;
    while d <= end {
        dates.push(d);
        d = month_end_after(d, 1);
    }
    let mut prices = Vec::with_capacity(dates.len() * order.len());
    for d in &dates {
        for id in &order {
            prices.push(by_asset[id][d].1);
        }
    }
    MarketHistory::new(dates, order, prices)
}

pub fn parse_prices(source: &str, reader: impl Read, format: PriceFormat) -> Result<MarketHistory> {
    let obs = match format {
        PriceFormat::Long => read_long(source, reader)?,
        PriceFormat::Wide => read_wide(source, reader)?,
    };
    assemble(source, obs)
}

pub fn load_prices(path: &Path, format: PriceFormat) -> Result<MarketHistory> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_prices(&path.display().to_string(), file, format)
}

/// Writes a panel as long CSV with 17 significant digits.
pub fn write_prices(history: &MarketHistory, path: &Path) -> Result<()> {
    let mut out = String::from("date,asset_id,price\n");
    for (r, d) in history.dates.iter().enumerate() {
        for (a, id) in history.asset_ids.iter().enumerate() {
            out.push_str(&format!("{d},{id},{}\n", super::fmt_f64(history.price(r, a))));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
