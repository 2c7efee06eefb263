//! Synthetic six-day crowdsensing campaigns.
//!
//! Legitimate tasks are spread uniformly over a bounding box and across the
//! day with a small night-time share. Fake tasks come from a handful of
//! circular attack zones, concentrate in the morning busy hours, run longer
//! and request more battery. Every draw flows from one seeded ChaCha stream,
//! so a campaign is a pure function of its [`GenerationConfig`].

use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used for haversine distances and the grid projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Attack zone radius used when zones are drawn at random.
pub const DEFAULT_ZONE_RADIUS_M: f64 = 200.0;

/// Number of attack zones in the default configuration.
pub const DEFAULT_ZONE_COUNT: usize = 6;

/// Overall fake share of the default campaign (1779 fakes out of 14306 tasks).
pub const DEFAULT_FAKE_FRACTION: f64 = 0.124;

pub const DEFAULT_TOTAL_TASKS: usize = 14_306;

/// Duration values a task can request, in minutes.
pub const DURATIONS_MIN: [u32; 6] = [10, 20, 30, 40, 50, 60];

/// Coverage radii a task can request, in meters.
pub const COVERAGES_M: [u32; 4] = [50, 100, 150, 200];

/// CSV header of the dataset file format.
pub const CSV_HEADER: [&str; 12] = [
    "id",
    "day",
    "hour",
    "minute",
    "duration_min",
    "battery_pct",
    "latitude",
    "longitude",
    "grid_number",
    "on_peak",
    "coverage_m",
    "legitimacy",
];

// Coordinates are kept on a 1e-6 degree lattice so that a dataset written
// with six decimals reads back bit-identical.
const COORD_SCALE: f64 = 1e6;

fn quantize_coord(x: f64) -> f64 {
    (x * COORD_SCALE).round() / COORD_SCALE
}

/// One submitted sensing task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: u64,
    pub day: u32,
    pub hour: u32,
    pub minute: u32,
    pub duration_min: u32,
    pub battery_pct: u32,
    pub latitude: f64,
    pub longitude: f64,
    pub grid_number: u32,
    pub on_peak: bool,
    pub coverage_m: u32,
    /// `true` for legitimate tasks, `false` for fake ones.
    pub legitimate: bool,
}

impl TaskRecord {
    fn chrono_key(&self) -> (u32, u32, u32) {
        (self.day, self.hour, self.minute)
    }
}

/// Geographic rectangle in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Default for BoundingBox {
    /// Roughly a 10 km square centred near (48.4758, -81.3305).
    fn default() -> Self {
        BoundingBox {
            lat_min: 48.4308,
            lat_max: 48.5208,
            lon_min: -81.3983,
            lon_max: -81.2627,
        }
    }
}

impl BoundingBox {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.lon_min..=self.lon_max).contains(&lon)
    }

    fn mid_lat(&self) -> f64 {
        0.5 * (self.lat_min + self.lat_max)
    }

    /// North-south extent in meters under the equirectangular projection.
    pub fn height_m(&self) -> f64 {
        (self.lat_max - self.lat_min).to_radians() * EARTH_RADIUS_M
    }

    /// East-west extent in meters, measured at the middle latitude.
    pub fn width_m(&self) -> f64 {
        (self.lon_max - self.lon_min).to_radians() * EARTH_RADIUS_M * self.mid_lat().to_radians().cos()
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.lat_min, self.lat_max, self.lon_min, self.lon_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.lat_min >= self.lat_max || self.lon_min >= self.lon_max {
            return Err(Error::config(format!("degenerate bounding box {self:?}")));
        }
        if self.lat_min < -90.0 || self.lat_max > 90.0 {
            return Err(Error::config("bounding box latitude outside [-90, 90]"));
        }
        Ok(())
    }
}

/// Circular region from which an adversary submits fake tasks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackZone {
    pub center_lat: f64,
    pub center_lon: f64,
    pub radius_m: f64,
}

impl AttackZone {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        haversine_m(self.center_lat, self.center_lon, lat, lon) <= self.radius_m
    }
}

/// Great-circle distance in meters on a spherical Earth.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Draws `count` zone centres uniformly inside `bbox`, keeping each disc
/// fully inside the box.
pub fn random_attack_zones<R: Rng + ?Sized>(
    bbox: &BoundingBox,
    count: usize,
    radius_m: f64,
    rng: &mut R,
) -> Vec<AttackZone> {
    let margin_lat = (radius_m / EARTH_RADIUS_M).to_degrees();
    let margin_lon = margin_lat / bbox.mid_lat().to_radians().cos();
    let lat_lo = bbox.lat_min + margin_lat;
    let lat_hi = (bbox.lat_max - margin_lat).max(lat_lo);
    let lon_lo = bbox.lon_min + margin_lon;
    let lon_hi = (bbox.lon_max - margin_lon).max(lon_lo);
    (0..count)
        .map(|_| AttackZone {
            center_lat: quantize_coord(lat_lo + (lat_hi - lat_lo) * rng.gen::<f64>()),
            center_lon: quantize_coord(lon_lo + (lon_hi - lon_lo) * rng.gen::<f64>()),
            radius_m,
        })
        .collect()
}

/// Attack zones drawn from a stream derived from the campaign seed, so zone
/// placement does not shift the task draws.
pub fn seeded_zones(bbox: &BoundingBox, count: usize, radius_m: f64, seed: u64) -> Vec<AttackZone> {
    let mut zone_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a0e_5a0e_5a0e_5a0e);
    random_attack_zones(bbox, count, radius_m, &mut zone_rng)
}

/// Parameters of a generated campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub total_tasks: usize,
    pub fake_fraction: f64,
    pub num_days: u32,
    pub bounding_box: BoundingBox,
    pub grid_cell_m: f64,
    pub attack_zones: Vec<AttackZone>,
    pub rng_seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig::with_seed(0)
    }
}

impl GenerationConfig {
    /// Default campaign whose attack zones are drawn from `seed`.
    pub fn with_seed(seed: u64) -> Self {
        let bounding_box = BoundingBox::default();
        let attack_zones = seeded_zones(&bounding_box, DEFAULT_ZONE_COUNT, DEFAULT_ZONE_RADIUS_M, seed);
        GenerationConfig {
            total_tasks: DEFAULT_TOTAL_TASKS,
            fake_fraction: DEFAULT_FAKE_FRACTION,
            num_days: 6,
            bounding_box,
            grid_cell_m: 1000.0,
            attack_zones,
            rng_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_tasks == 0 {
            return Err(Error::config("total_tasks must be positive"));
        }
        if !(0.0..1.0).contains(&self.fake_fraction) {
            return Err(Error::config(format!(
                "fake_fraction {} outside [0, 1)",
                self.fake_fraction
            )));
        }
        if self.num_days == 0 {
            return Err(Error::config("num_days must be positive"));
        }
        if !(self.grid_cell_m.is_finite() && self.grid_cell_m > 0.0) {
            return Err(Error::config("grid_cell_m must be positive"));
        }
        self.bounding_box.validate()?;
        if self.fake_count() > 0 && self.attack_zones.is_empty() {
            return Err(Error::config("fake tasks requested but no attack zones configured"));
        }
        for zone in &self.attack_zones {
            if !(zone.radius_m.is_finite() && zone.radius_m > 0.0) {
                return Err(Error::config("attack zone radius must be positive"));
            }
            if !self.bounding_box.contains(zone.center_lat, zone.center_lon) {
                return Err(Error::config(format!("attack zone centre outside bounding box: {zone:?}")));
            }
        }
        Ok(())
    }

    /// Number of fake tasks, `round(total_tasks * fake_fraction)`.
    pub fn fake_count(&self) -> usize {
        (self.total_tasks as f64 * self.fake_fraction).round() as usize
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.bounding_box, self.grid_cell_m)
    }
}

/// Square cells of `cell_m` meters laid over a bounding box, numbered
/// row-major from the south-west corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub bbox: BoundingBox,
    pub cell_m: f64,
    pub rows: u32,
    pub cols: u32,
}

impl GridSpec {
    pub fn new(bbox: BoundingBox, cell_m: f64) -> Self {
        let rows = (bbox.height_m() / cell_m).ceil().max(1.0) as u32;
        let cols = (bbox.width_m() / cell_m).ceil().max(1.0) as u32;
        GridSpec {
            bbox,
            cell_m,
            rows,
            cols,
        }
    }

    pub fn cell_count(&self) -> u32 {
        self.rows * self.cols
    }

    /// Row-major cell index containing the point.
    pub fn cell_of(&self, lat: f64, lon: f64) -> Result<u32> {
        if !self.bbox.contains(lat, lon) {
            return Err(Error::domain(format!("({lat}, {lon}) lies outside the bounding box")));
        }
        let y = (lat - self.bbox.lat_min).to_radians() * EARTH_RADIUS_M;
        let x = (lon - self.bbox.lon_min).to_radians()
            * EARTH_RADIUS_M
            * self.bbox.mid_lat().to_radians().cos();
        let row = ((y / self.cell_m).floor() as u32).min(self.rows - 1);
        let col = ((x / self.cell_m).floor() as u32).min(self.cols - 1);
        Ok(row * self.cols + col)
    }
}

/// Grid cell of a coordinate under `config`'s grid.
pub fn assign_grid(latitude: f64, longitude: f64, config: &GenerationConfig) -> Result<u32> {
    config.grid().cell_of(latitude, longitude)
}

/// Busy-hour flag: hours 7 through 11 inclusive.
pub fn compute_on_peak(hour: u32) -> bool {
    (7..=11).contains(&hour)
}

fn pick<T: Copy, R: Rng + ?Sized>(rng: &mut R, values: &[T]) -> T {
    values[rng.gen_range(0..values.len())]
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R, bbox: &BoundingBox) -> (f64, f64) {
    let lat = bbox.lat_min + (bbox.lat_max - bbox.lat_min) * rng.gen::<f64>();
    let lon = bbox.lon_min + (bbox.lon_max - bbox.lon_min) * rng.gen::<f64>();
    (
        quantize_coord(lat).clamp(bbox.lat_min, bbox.lat_max),
        quantize_coord(lon).clamp(bbox.lon_min, bbox.lon_max),
    )
}

fn point_in_zone<R: Rng + ?Sized>(rng: &mut R, zone: &AttackZone, bbox: &BoundingBox) -> (f64, f64) {
    // Area-uniform draw on the local tangent plane, then reject the rare
    // point that quantization pushes over the rim.
    loop {
        let r = zone.radius_m * rng.gen::<f64>().sqrt();
        let theta = 2.0 * PI * rng.gen::<f64>();
        let dlat = (r * theta.cos() / EARTH_RADIUS_M).to_degrees();
        let dlon = (r * theta.sin() / (EARTH_RADIUS_M * zone.center_lat.to_radians().cos())).to_degrees();
        let lat = quantize_coord(zone.center_lat + dlat);
        let lon = quantize_coord(zone.center_lon + dlon);
        if zone.contains(lat, lon) && bbox.contains(lat, lon) {
            return (lat, lon);
        }
    }
}

fn finish_record(
    config: &GenerationConfig,
    day: u32,
    hour: u32,
    duration_min: u32,
    battery_pct: u32,
    (latitude, longitude): (f64, f64),
    minute: u32,
    coverage_m: u32,
    legitimate: bool,
) -> TaskRecord {
    let grid_number = config
        .grid()
        .cell_of(latitude, longitude)
        .expect("sampled point lies inside the bounding box");
    TaskRecord {
        id: 0,
        day,
        hour,
        minute,
        duration_min,
        battery_pct,
        latitude,
        longitude,
        grid_number,
        on_peak: compute_on_peak(hour),
        coverage_m,
        legitimate,
    }
}

/// Draws one legitimate task. The returned id is 0; campaigns renumber.
pub fn sample_legitimate_task<R: Rng + ?Sized>(rng: &mut R, config: &GenerationConfig) -> TaskRecord {
    let day = rng.gen_range(1..=config.num_days);
    let hour = if rng.gen_bool(0.08) {
        rng.gen_range(0..=5)
    } else {
        rng.gen_range(6..=23)
    };
    let duration = pick(rng, &DURATIONS_MIN);
    let battery = rng.gen_range(1..=10);
    let location = uniform_point(rng, &config.bounding_box);
    let minute = rng.gen_range(0..60);
    let coverage = pick(rng, &COVERAGES_M);
    finish_record(config, day, hour, duration, battery, location, minute, coverage, true)
}

/// Draws one fake task from a uniformly chosen attack zone.
///
/// Panics if `config` has no attack zones.
pub fn sample_fake_task<R: Rng + ?Sized>(rng: &mut R, config: &GenerationConfig) -> TaskRecord {
    assert!(!config.attack_zones.is_empty(), "fake tasks need at least one attack zone");
    let day = rng.gen_range(1..=config.num_days);
    let hour = if rng.gen_bool(0.80) {
        rng.gen_range(7..=11)
    } else {
        rng.gen_range(12..=17)
    };
    let duration = if rng.gen_bool(0.70) {
        pick(rng, &DURATIONS_MIN[3..])
    } else {
        pick(rng, &DURATIONS_MIN[..3])
    };
    let battery = if rng.gen_bool(0.80) {
        rng.gen_range(7..=10)
    } else {
        rng.gen_range(1..=6)
    };
    let zone = pick(rng, &config.attack_zones);
    let location = point_in_zone(rng, &zone, &config.bounding_box);
    let minute = rng.gen_range(0..60);
    let coverage = pick(rng, &COVERAGES_M);
    finish_record(config, day, hour, duration, battery, location, minute, coverage, false)
}

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Generated,
    Loaded,
}

/// Chronologically ordered task records with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<TaskRecord>,
    origin: Origin,
}

impl Dataset {
    /// Wraps records after checking id uniqueness and chronological order.
    pub fn new(records: Vec<TaskRecord>, origin: Origin) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id) {
                return Err(Error::domain(format!("duplicate task id {}", r.id)));
            }
        }
        if records.windows(2).any(|w| w[0].chrono_key() > w[1].chrono_key()) {
            return Err(Error::domain("records are not in chronological order"));
        }
        Ok(Dataset { records, origin })
    }

    pub fn records(&self) -> &[TaskRecord] {
        &self.records
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn fake_count(&self) -> usize {
        self.records.iter().filter(|r| !r.legitimate).count()
    }

    pub fn legitimate_count(&self) -> usize {
        self.len() - self.fake_count()
    }

    /// Task counts per day, indexed from day 1.
    pub fn day_histogram(&self) -> Vec<(u32, usize)> {
        let max_day = self.records.iter().map(|r| r.day).max().unwrap_or(0);
        (1..=max_day)
            .map(|d| (d, self.records.iter().filter(|r| r.day == d).count()))
            .collect()
    }

    /// Writes the dataset in the CSV format (LF line endings, six decimals).
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.id.to_string(),
                r.day.to_string(),
                r.hour.to_string(),
                r.minute.to_string(),
                r.duration_min.to_string(),
                r.battery_pct.to_string(),
                format!("{:.6}", r.latitude),
                format!("{:.6}", r.longitude),
                r.grid_number.to_string(),
                u8::from(r.on_peak).to_string(),
                r.coverage_m.to_string(),
                u8::from(r.legitimate).to_string(),
            ])?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    /// Reads a dataset CSV; `source` names the input in error messages.
    pub fn read_csv<R: Read>(input: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse(source, "header", e.to_string()))?
            .clone();
        if headers.iter().ne(CSV_HEADER.iter().copied()) {
            let got: Vec<_> = headers.iter().collect();
            return Err(Error::parse(
                source,
                "header",
                format!("expected {:?}, found {:?}", CSV_HEADER, got),
            ));
        }
        let mut records = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(source, format!("row {}", row + 1), e.to_string()))?;
            records.push(parse_row(&rec, row + 1, source)?);
        }
        if records.is_empty() {
            return Err(Error::parse(source, "records", "dataset has no rows"));
        }
        Dataset::new(records, Origin::Loaded).map_err(|e| Error::parse(source, "records", e.to_string()))
    }
}

fn parse_row(rec: &csv::StringRecord, row: usize, source: &str) -> Result<TaskRecord> {
    fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, row: usize, source: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let name = CSV_HEADER[idx];
        let text = rec
            .get(idx)
            .ok_or_else(|| Error::parse(source, name, format!("row {row}: missing value")))?;
        text.trim()
            .parse()
            .map_err(|e| Error::parse(source, name, format!("row {row}: {e}")))
    }
    let flag = |idx: usize| -> Result<bool> {
        match field::<u8>(rec, idx, row, source)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::parse(source, CSV_HEADER[idx], format!("row {row}: {v} is not 0/1"))),
        }
    };
    let out_of_range = |idx: usize, v: u32| Error::parse(source, CSV_HEADER[idx], format!("row {row}: {v} out of range"));

    let r = TaskRecord {
        id: field(rec, 0, row, source)?,
        day: field(rec, 1, row, source)?,
        hour: field(rec, 2, row, source)?,
        minute: field(rec, 3, row, source)?,
        duration_min: field(rec, 4, row, source)?,
        battery_pct: field(rec, 5, row, source)?,
        latitude: field(rec, 6, row, source)?,
        longitude: field(rec, 7, row, source)?,
        grid_number: field(rec, 8, row, source)?,
        on_peak: flag(9)?,
        coverage_m: field(rec, 10, row, source)?,
        legitimate: flag(11)?,
    };
    if r.day == 0 {
        return Err(out_of_range(1, r.day));
    }
    if r.hour > 23 {
        return Err(out_of_range(2, r.hour));
    }
    if r.minute > 59 {
        return Err(out_of_range(3, r.minute));
    }
    if !DURATIONS_MIN.contains(&r.duration_min) {
        return Err(out_of_range(4, r.duration_min));
    }
    if !(1..=10).contains(&r.battery_pct) {
        return Err(out_of_range(5, r.battery_pct));
    }
    if r.on_peak != compute_on_peak(r.hour) {
        return Err(Error::parse(source, "on_peak", format!("row {row}: inconsistent with hour {}", r.hour)));
    }
    Ok(r)
}

/// Generates a full campaign: exactly `total_tasks` records of which
/// `round(total_tasks * fake_fraction)` are fake, sorted by (day, hour,
/// minute) and numbered from 0 in that order.
pub fn generate_campaign(config: &GenerationConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let fakes = config.fake_count();
    let mut is_fake = vec![false; config.total_tasks];
    is_fake[..fakes].iter_mut().for_each(|f| *f = true);
    is_fake.shuffle(&mut rng);

    let mut records: Vec<TaskRecord> = is_fake
        .iter()
        .map(|&fake| {
            if fake {
                sample_fake_task(&mut rng, config)
            } else {
                sample_legitimate_task(&mut rng, config)
            }
        })
        .collect();
    records.sort_by_key(TaskRecord::chrono_key);
    for (i, r) in records.iter_mut().enumerate() {
        r.id = i as u64;
    }
    Dataset::new(records, Origin::Generated)
}

/// Splits chronologically: the first `floor(n * train_fraction)` records
/// train, the rest test.
pub fn split_temporal(dataset: &Dataset, train_fraction: f64) -> Result<(Dataset, Dataset)> {
    if dataset.is_empty() {
        return Err(Error::domain("cannot split an empty dataset"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::domain(format!("train_fraction {train_fraction} outside (0, 1)")));
    }
    let cut = (dataset.len() as f64 * train_fraction).floor() as usize;
    let (train, test) = dataset.records.split_at(cut);
    Ok((
        Dataset {
            records: train.to_vec(),
            origin: dataset.origin,
        },
        Dataset {
            records: test.to_vec(),
            origin: dataset.origin,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(total: usize) -> GenerationConfig {
        GenerationConfig {
            total_tasks: total,
            ..GenerationConfig::with_seed(42)
        }
    }

    #[test]
    fn on_peak_sweep() {
        let peak: Vec<u32> = (0..24).filter(|&h| compute_on_peak(h)).collect();
        assert_eq!(peak, vec![7, 8, 9, 10, 11]);
        assert!(compute_on_peak(8));
        assert!(!compute_on_peak(0));
        assert!(compute_on_peak(11));
    }

    #[test]
    fn empty_campaign_rejected() {
        let err = generate_campaign(&small_config(0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn fakes_without_zones_rejected() {
        let mut cfg = small_config(100);
        cfg.attack_zones.clear();
        assert!(matches!(generate_campaign(&cfg), Err(Error::Config(_))));
        cfg.fake_fraction = 0.0;
        assert_eq!(generate_campaign(&cfg).unwrap().fake_count(), 0);
    }

    #[test]
    fn degenerate_box_rejected() {
        let mut cfg = small_config(10);
        cfg.bounding_box.lat_max = cfg.bounding_box.lat_min;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn campaign_counts_and_order() {
        let cfg = small_config(2_000);
        let ds = generate_campaign(&cfg).unwrap();
        assert_eq!(ds.len(), 2_000);
        assert_eq!(ds.fake_count(), cfg.fake_count());
        assert_eq!(cfg.fake_count(), 248);
        assert!(ds
            .records()
            .windows(2)
            .all(|w| w[0].chrono_key() <= w[1].chrono_key()));
        assert!(ds.records().iter().enumerate().all(|(i, r)| r.id == i as u64));
    }

    #[test]
    fn campaign_is_deterministic() {
        let cfg = small_config(500);
        assert_eq!(generate_campaign(&cfg).unwrap(), generate_campaign(&cfg).unwrap());
        let other = GenerationConfig {
            rng_seed: 43,
            ..cfg.clone()
        };
        assert_ne!(generate_campaign(&cfg).unwrap(), generate_campaign(&other).unwrap());
    }

    #[test]
    fn records_respect_geometry() {
        let cfg = small_config(3_000);
        let ds = generate_campaign(&cfg).unwrap();
        for r in ds.records() {
            assert!(cfg.bounding_box.contains(r.latitude, r.longitude));
            assert_eq!(r.grid_number, assign_grid(r.latitude, r.longitude, &cfg).unwrap());
            assert_eq!(r.on_peak, compute_on_peak(r.hour));
            if !r.legitimate {
                assert!(cfg.attack_zones.iter().any(|z| z.contains(r.latitude, r.longitude)));
            }
        }
    }

    #[test]
    fn grid_corners() {
        let cfg = small_config(1);
        let b = cfg.bounding_box;
        let g = cfg.grid();
        assert_eq!(assign_grid(b.lat_min, b.lon_min, &cfg).unwrap(), 0);
        assert_eq!(assign_grid(b.lat_max, b.lon_max, &cfg).unwrap(), g.cell_count() - 1);
        assert!(matches!(assign_grid(b.lat_max + 0.01, b.lon_min, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn grid_midpoint_matches_cell_walk() {
        let cfg = small_config(1);
        let b = cfg.bounding_box;
        let (lat, lon) = (0.5 * (b.lat_min + b.lat_max), 0.5 * (b.lon_min + b.lon_max));
        // Walk cell boundaries in meters from the south-west corner.
        let y = (lat - b.lat_min).to_radians() * EARTH_RADIUS_M;
        let x = (lon - b.lon_min).to_radians() * EARTH_RADIUS_M * (0.5 * (b.lat_min + b.lat_max)).to_radians().cos();
        let mut row = 0;
        while (row + 1) as f64 * 1000.0 <= y {
            row += 1;
        }
        let mut col = 0;
        while (col + 1) as f64 * 1000.0 <= x {
            col += 1;
        }
        let cols = cfg.grid().cols;
        assert_eq!(assign_grid(lat, lon, &cfg).unwrap(), row * cols + col);
    }

    #[test]
    fn split_examples() {
        let ds = generate_campaign(&small_config(10)).unwrap();
        let (train, test) = split_temporal(&ds, 0.5).unwrap();
        assert_eq!(train.records(), &ds.records()[..5]);
        assert_eq!(test.records(), &ds.records()[5..]);
        assert!(split_temporal(&ds, 1.0).is_err());
    }

    #[test]
    fn csv_header_and_read_back() {
        let ds = generate_campaign(&small_config(200)).unwrap();
        let text = ds.to_csv_string();
        assert!(text.starts_with(
            "id,day,hour,minute,duration_min,battery_pct,latitude,longitude,grid_number,on_peak,coverage_m,legitimacy\n"
        ));
        assert!(!text.contains('\r'));
        let back = Dataset::read_csv(text.as_bytes(), "mem").unwrap();
        assert_eq!(back.records(), ds.records());
        assert_eq!(back.origin(), Origin::Loaded);
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn csv_errors_name_the_field() {
        let bad = "id,day,hour,minute,duration_min,battery_pct,latitude,longitude,grid_number,on_peak,coverage_m,legitimacy\n\
                   0,1,25,0,10,5,48.5,-81.3,3,0,50,1\n";
        match Dataset::read_csv(bad.as_bytes(), "bad.csv") {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "hour"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Dataset::read_csv("".as_bytes(), "empty.csv"), Err(Error::Parse { .. })));
    }
}
