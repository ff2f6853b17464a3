use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{LabeledSeries, SampleSeries, NUM_CHANNELS};

/// Seed of the motif table. The table defines the task, so it does not
/// change with the dataset seed.
const MOTIF_SEED: u64 = 0x6d07_1f5e;
const MAX_MOTIF_CORRELATION: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub participants: usize,
    pub sessions_per_participant: usize,
    /// Steps performed in each session, in order.
    pub step_order: Vec<u8>,
    /// Seconds spent on each step of `step_order`.
    pub step_duration_s: Vec<f64>,
    pub rate_hz: f64,
    pub noise_sigma: f64,
    /// Scale of each participant's perturbation of the motif table.
    pub jitter: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            participants: 14,
            sessions_per_participant: 19,
            step_order: (1..=10).collect(),
            step_duration_s: vec![2.0; 10],
            rate_hz: 50.0,
            noise_sigma: 0.1,
            jitter: 0.1,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.participants == 0 || self.sessions_per_participant == 0 {
            return Err(Error::InvalidArgument(
                "need at least one participant and session".into(),
            ));
        }
        if self.step_order.len() != self.step_duration_s.len() {
            return Err(Error::InvalidArgument(
                "one duration per step is required".into(),
            ));
        }
        if self.step_order.iter().any(|&s| !(1..=10).contains(&s)) {
            return Err(Error::InvalidArgument("steps must lie in 1..=10".into()));
        }
        if self.step_duration_s.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::InvalidArgument(
                "step durations must be positive".into(),
            ));
        }
        if !(self.rate_hz > 0.0) || !(self.noise_sigma >= 0.0) || !(self.jitter >= 0.0) {
            return Err(Error::InvalidArgument(
                "rate must be positive, noise and jitter non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Sinusoid `offset + amplitude * sin(2π f t + phase)` for one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub offset: f64,
    pub amplitude: f64,
    pub freq_hz: f64,
    pub phase: f64,
}

impl Component {
    pub fn at(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (2.0 * PI * self.freq_hz * t + self.phase).sin()
    }
}

/// Per step (index `step - 1`), one component per channel.
pub type MotifTable = Vec<[Component; NUM_CHANNELS]>;

/// Step `k` uses frequencies in `[0.5 + 0.6 (k - 1), 0.5 + 0.6 (k - 1) + 0.5)` Hz.
fn band(step: usize) -> (f64, f64) {
    let lo = 0.5 + 0.6 * step as f64;
    (lo, lo + 0.5)
}

fn draw_table(rng: &mut ChaCha8Rng) -> MotifTable {
    (0..10)
        .map(|k| {
            let (lo, hi) = band(k);
            [(); NUM_CHANNELS].map(|_| Component {
                offset: rng.gen_range(-1.5..1.5),
                amplitude: rng.gen_range(0.3..1.2),
                freq_hz: rng.gen_range(lo..hi),
                phase: rng.gen_range(0.0..2.0 * PI),
            })
        })
        .collect()
}

/// A motif rendered over `seconds` at `rate_hz`, channels concatenated.
pub fn render_motif(motif: &[Component; NUM_CHANNELS], seconds: f64, rate_hz: f64) -> Vec<f64> {
    let n = (seconds * rate_hz).round() as usize;
    motif
        .iter()
        .flat_map(|c| (0..n).map(move |i| c.at(i as f64 / rate_hz)))
        .collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn max_pairwise_correlation(table: &MotifTable) -> f64 {
    let rendered: Vec<Vec<f64>> = table.iter().map(|m| render_motif(m, 2.0, 50.0)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..rendered.len() {
        for j in i + 1..rendered.len() {
            worst = worst.max(pearson(&rendered[i], &rendered[j]).abs());
        }
    }
    worst
}

/// The fixed motif table: the first draw whose pairwise motif correlations
/// all stay below 0.4.
pub fn motif_table() -> MotifTable {
    let mut rng = ChaCha8Rng::seed_from_u64(MOTIF_SEED);
    loop {
        let table = draw_table(&mut rng);
        if max_pairwise_correlation(&table) < MAX_MOTIF_CORRELATION {
            return table;
        }
    }
}

/// One participant's perturbed copy of the motif table.
fn participant_table(base: &MotifTable, jitter: f64, rng: &mut ChaCha8Rng) -> MotifTable {
    if jitter == 0.0 {
        return base.clone();
    }
    let normal = Normal::new(0.0, jitter).expect("jitter is non-negative");
    base.iter()
        .map(|m| {
            m.map(|c| Component {
                offset: c.offset + normal.sample(rng),
                amplitude: c.amplitude * (1.0 + normal.sample(rng)).max(0.1),
                freq_hz: c.freq_hz,
                phase: c.phase + normal.sample(rng),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    /// 1-based.
    pub participant: usize,
    /// 1-based.
    pub session: usize,
    pub data: LabeledSeries,
}

impl Session {
    pub fn file_name(&self) -> String {
        format!("p{:02}_s{:02}.csv", self.participant, self.session)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rate_hz: f64,
    pub sessions: Vec<Session>,
}

impl Dataset {
    pub fn participants(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self.sessions.iter().map(|s| s.participant).collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for s in &self.sessions {
            let path = dir.join(s.file_name());
            s.data.write_csv(std::fs::File::create(&path)?)?;
            out.push(path);
        }
        Ok(out)
    }

    /// Reads every `pXX_sYY.csv` in `dir`, ordered by participant then session.
    pub fn read_dir(dir: &Path, rate_hz: f64) -> Result<Self> {
        let mut sessions = Vec::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let Some((p, s)) = parse_name(name) else {
                continue;
            };
            let data = LabeledSeries::read_csv(std::fs::File::open(&path)?, rate_hz)?;
            sessions.push(Session {
                participant: p,
                session: s,
                data,
            });
        }
        if sessions.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no session files in {}",
                dir.display()
            )));
        }
        sessions.sort_by_key(|s| (s.participant, s.session));
        Ok(Self { rate_hz, sessions })
    }
}

fn parse_name(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix('p')?.strip_suffix(".csv")?;
    let (p, s) = rest.split_once("_s")?;
    Some((p.parse().ok()?, s.parse().ok()?))
}

/// Render every session. Participant tables come from the dataset seed;
/// sessions of one participant differ only in their noise.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let base = motif_table();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tables: Vec<MotifTable> = (0..spec.participants)
        .map(|_| participant_table(&base, spec.jitter, &mut rng))
        .collect();
    let mut sessions = Vec::new();
    for (pi, table) in tables.iter().enumerate() {
        for si in 0..spec.sessions_per_participant {
            let mut noise_rng =
                ChaCha8Rng::seed_from_u64(spec.seed ^ ((pi as u64 + 1) << 32) ^ (si as u64 + 1));
            let noise =
                Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for (&step, &dur) in spec.step_order.iter().zip(&spec.step_duration_s) {
                let motif = &table[usize::from(step) - 1];
                let n = (dur * spec.rate_hz).round() as usize;
                for i in 0..n {
                    let t = i as f64 / spec.rate_hz;
                    let mut row = [0.0; NUM_CHANNELS];
                    for (c, v) in row.iter_mut().enumerate() {
                        *v = motif[c].at(t);
                        if spec.noise_sigma > 0.0 {
                            *v += noise.sample(&mut noise_rng);
                        }
                    }
                    rows.push(row);
                    labels.push(step);
                }
            }
            // one day apart per session, so timestamps never collide across files
            let t0 = ((pi * spec.sessions_per_participant + si) as i64) * 86_400 * 1_000_000_000;
            let series = SampleSeries::from_rows(t0, spec.rate_hz, &rows)?;
            sessions.push(Session {
                participant: pi + 1,
                session: si + 1,
                data: LabeledSeries::new(series, labels)?,
            });
        }
    }
    Ok(Dataset {
        rate_hz: spec.rate_hz,
        sessions,
    })
}
