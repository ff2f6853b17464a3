use std::io::{Read, Write};

use super::series::{LabeledSeries, Sample, SampleSeries, NUM_CHANNELS};
use crate::error::{Error, Result};

pub const SENSOR_CSV_HEADER: [&str; 10] =
    ["t_ns", "ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz"];

/// Reads `t_ns,ax,ay,az,gx,gy,gz,mx,my,mz[,label]`. Streams whose mean sample
/// interval is more than 5% off `1/rate_hz` are rejected rather than resampled.
pub fn read_sensor_csv<R: Read>(
    reader: R,
    rate_hz: f64,
) -> Result<(SampleSeries, Option<Vec<u8>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_label = match names.len() {
        10 => false,
        11 if names[10] == "label" => true,
        _ => return Err(Error::Parse(format!("unexpected sensor header {names:?}"))),
    };
    if names[..10] != SENSOR_CSV_HEADER {
        return Err(Error::Parse(format!("unexpected sensor header {names:?}")));
    }

    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != names.len() {
            return Err(Error::Parse(format!("row {}: partial row", line + 2)));
        }
        let t_ns: i64 = rec[0]
            .parse()
            .map_err(|e| Error::Parse(format!("row {}: t_ns: {e}", line + 2)))?;
        let mut ch = [0.0f64; NUM_CHANNELS];
        for (c, v) in ch.iter_mut().enumerate() {
            *v = rec[c + 1].parse().map_err(|e| {
                Error::Parse(format!(
                    "row {}: {}: {e}",
                    line + 2,
                    SENSOR_CSV_HEADER[c + 1]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("row {}: non-finite value", line + 2)));
            }
        }
        samples.push(Sample::from_channels(t_ns, ch));
        if has_label {
            let l: u8 = rec[10]
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: label: {e}", line + 2)))?;
            if l > 10 {
                return Err(Error::Parse(format!(
                    "row {}: label {l} outside 0..=10",
                    line + 2
                )));
            }
            labels.push(l);
        }
    }

    if samples.len() >= 2 {
        let span = (samples[samples.len() - 1].t_ns - samples[0].t_ns) as f64;
        let mean_dt = span / (samples.len() - 1) as f64;
        let nominal = 1e9 / rate_hz;
        if (mean_dt - nominal).abs() > 0.05 * nominal {
            return Err(Error::InvalidSeries(format!(
                "mean sample interval {mean_dt:.0} ns does not match {rate_hz} Hz"
            )));
        }
    }
    let series = SampleSeries::new(samples, rate_hz)?;
    Ok((series, has_label.then_some(labels)))
}

pub fn write_sensor_csv<W: Write>(
    writer: W,
    series: &SampleSeries,
    labels: Option<&[u8]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = SENSOR_CSV_HEADER.to_vec();
    if labels.is_some() {
        header.push("label");
    }
    w.write_record(&header)?;
    for (i, s) in series.samples().iter().enumerate() {
        let mut row: Vec<String> = Vec::with_capacity(11);
        row.push(s.t_ns.to_string());
        row.extend(s.channels().iter().map(|v| v.to_string()));
        if let Some(l) = labels {
            row.push(l[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

impl LabeledSeries {
    pub fn read_csv<R: Read>(reader: R, rate_hz: f64) -> Result<Self> {
        let (series, labels) = read_sensor_csv(reader, rate_hz)?;
        let labels =
            labels.ok_or_else(|| Error::Parse("training file has no label column".into()))?;
        LabeledSeries::new(series, labels)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_sensor_csv(writer, &self.series, Some(&self.labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let rows: Vec<[f64; 9]> = (0..5)
            .map(|i| {
                [
                    0.1 * i as f64,
                    -1.0 / 3.0,
                    9.81,
                    1e-9,
                    0.0,
                    2.5,
                    40.0,
                    -12.25,
                    7.0,
                ]
            })
            .collect();
        let series = SampleSeries::from_rows(1_000, 50.0, &rows).unwrap();
        let ls = LabeledSeries::new(series, vec![1, 1, 2, 0, 10]).unwrap();
        let mut buf = Vec::new();
        ls.write_csv(&mut buf).unwrap();
        let back = LabeledSeries::read_csv(buf.as_slice(), 50.0).unwrap();
        assert_eq!(back, ls);
    }

    #[test]
    fn unlabeled_file() {
        let text =
            "t_ns,ax,ay,az,gx,gy,gz,mx,my,mz\n0,1,2,3,4,5,6,7,8,9\n20000000,1,2,3,4,5,6,7,8,9\n";
        let (s, l) = read_sensor_csv(text.as_bytes(), 50.0).unwrap();
        assert_eq!(s.len(), 2);
        assert!(l.is_none());
    }

    #[test]
    fn rejects_wrong_rate_and_partial_rows() {
        let text =
            "t_ns,ax,ay,az,gx,gy,gz,mx,my,mz\n0,1,2,3,4,5,6,7,8,9\n10000000,1,2,3,4,5,6,7,8,9\n";
        assert!(matches!(
            read_sensor_csv(text.as_bytes(), 50.0),
            Err(Error::InvalidSeries(_))
        ));
        let text = "t_ns,ax,ay,az,gx,gy,gz,mx,my,mz\n0,1,2,3,4,5,6,7,8\n";
        assert!(read_sensor_csv(text.as_bytes(), 50.0).is_err());
        let text = "t,ax\n0,1\n";
        assert!(matches!(
            read_sensor_csv(text.as_bytes(), 50.0),
            Err(Error::Parse(_))
        ));
    }
}
