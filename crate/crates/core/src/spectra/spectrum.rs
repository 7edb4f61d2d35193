use std::f64::consts::LN_2;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether the values still carry the Ω-dependent locking baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineState {
    #[default]
    Raw,
    Calibrated,
}

impl BaselineState {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Raw => "raw",
            Self::Calibrated => "calibrated",
        }
    }
}

/// Normalized PL against drive power (ZF) or probe frequency (DEER), MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    pub sem: Option<Vec<f64>>,
    #[serde(default)]
    pub baseline: BaselineState,
}

impl Spectrum {
    pub fn new(axis: Vec<f64>, values: Vec<f64>, sem: Option<Vec<f64>>) -> Result<Self> {
        let s = Self {
            axis,
            values,
            sem,
            baseline: BaselineState::Raw,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.axis.len();
        if self.values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.values.len(),
            });
        }
        if let Some(sem) = &self.sem {
            if sem.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: sem.len(),
                });
            }
        }
        if self.axis.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("spectrum axis must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Evenly spaced axis from `start` to `stop` inclusive.
    pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::invalid(format!("bad grid {start}..{stop} step {step}")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| start + k as f64 * step).collect())
    }

    /// Axis positions of interior local minima, ascending.
    pub fn local_minima(&self) -> Vec<f64> {
        let v = &self.values;
        (1..v.len().saturating_sub(1))
            .filter(|&k| v[k] < v[k - 1] && v[k] <= v[k + 1])
            .map(|k| self.axis[k])
            .collect()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let has_sem = self.sem.is_some();
        if has_sem {
            w.write_record(["axis_MHz", "pl", "sem"])
        } else {
            w.write_record(["axis_MHz", "pl"])
        }
        .map_err(csv_err)?;
        for k in 0..self.len() {
            let mut rec = vec![self.axis[k].to_string(), self.values[k].to_string()];
            if let Some(sem) = &self.sem {
                rec.push(sem[k].to_string());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?)
            .map_err(|e| Error::invalid(e.to_string()))?;
        let cols = if has_sem {
            "axis_MHz = drive power or probe frequency (MHz), pl = normalized PL, sem = standard error"
        } else {
            "axis_MHz = drive power or probe frequency (MHz), pl = normalized PL"
        };
        Ok(format!("# {cols}; baseline={}\n{body}", self.baseline.as_str()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self> {
        let fmt = |message: String| Error::SpectrumFormat {
            path: origin.into(),
            message,
        };
        let mut baseline = BaselineState::Raw;
        for line in text.lines().filter(|l| l.trim_start().starts_with('#')) {
            if line.contains("baseline=calibrated") {
                baseline = BaselineState::Calibrated;
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| fmt(e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let ax = col("axis_MHz").ok_or_else(|| fmt("missing axis_MHz column".into()))?;
        let pl = col("pl").ok_or_else(|| fmt("missing pl column".into()))?;
        let se = col("sem");
        let (mut axis, mut values, mut sem) = (Vec::new(), Vec::new(), Vec::new());
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| fmt(e.to_string()))?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| fmt(format!("row {} is short", k + 1)))?
                    .parse::<f64>()
                    .map_err(|e| fmt(format!("row {}: {e}", k + 1)))
            };
            axis.push(get(ax)?);
            values.push(get(pl)?);
            if let Some(i) = se {
                sem.push(get(i)?);
            }
        }
        if axis.is_empty() {
            return Err(fmt("no data rows".into()));
        }
        let mut s = Spectrum::new(axis, values, se.map(|_| sem)).map_err(|e| fmt(e.to_string()))?;
        s.baseline = baseline;
        Ok(s)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

/// A Gaussian dip below the unit baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakModel {
    pub center: f64,
    pub fwhm: f64,
    pub depth: f64,
}

impl PeakModel {
    pub fn new(center: f64, fwhm: f64, depth: f64) -> Result<Self> {
        if !(fwhm > 0.0) || !(depth > 0.0 && depth < 1.0) || !center.is_finite() {
            return Err(Error::invalid(format!(
                "peak needs fwhm > 0 and 0 < depth < 1, got fwhm {fwhm}, depth {depth}"
            )));
        }
        Ok(Self { center, fwhm, depth })
    }

    pub fn profile(&self, x: f64) -> f64 {
        self.depth * gaussian(x, self.center, self.fwhm)
    }
}

/// Unit-height Gaussian with the given FWHM.
pub fn gaussian(x: f64, center: f64, fwhm: f64) -> f64 {
    let d = (x - center) / fwhm;
    (-4.0 * LN_2 * d * d).exp()
}

/// 1 − Σ peaks, evaluated on `axis`.
pub fn peaks_spectrum(axis: &[f64], peaks: &[PeakModel]) -> Result<Spectrum> {
    let values = axis
        .iter()
        .map(|&x| 1.0 - peaks.iter().map(|p| p.profile(x)).sum::<f64>())
        .collect();
    Spectrum::new(axis.to_vec(), values, None)
}

/// Replace each value p with Binomial(n, p)/n and attach the standard error
/// √(p̂(1 − p̂)/n), floored at 1/n so a saturated point keeps finite weight.
pub fn add_shot_noise<R: Rng + ?Sized>(spec: &Spectrum, repetitions: u64, rng: &mut R) -> Result<Spectrum> {
    if repetitions == 0 {
        return Err(Error::invalid("shot noise needs at least one repetition"));
    }
    let n = repetitions as f64;
    let mut values = Vec::with_capacity(spec.len());
    let mut sem = Vec::with_capacity(spec.len());
    for &p in &spec.values {
        let p = p.clamp(0.0, 1.0);
        let k = Binomial::new(repetitions, p)
            .map_err(|e| Error::invalid(e.to_string()))?
            .sample(rng) as f64;
        let ph = k / n;
        values.push(ph);
        sem.push((ph * (1.0 - ph) / n).sqrt().max(1.0 / n));
    }
    Ok(Spectrum {
        axis: spec.axis.clone(),
        values,
        sem: Some(sem),
        baseline: spec.baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn csv_round_trip_with_and_without_sem() {
        let mut s = Spectrum::new(vec![1.0, 2.5, 4.0], vec![1.0, 0.97, 0.999], None).unwrap();
        let text = s.to_csv_string().unwrap();
        assert!(text.starts_with('#'));
        assert!(!text.contains("sem"));
        assert_eq!(Spectrum::from_csv_str(&text, "mem").unwrap(), s);
        s.sem = Some(vec![0.001, 0.002, 0.003]);
        s.baseline = BaselineState::Calibrated;
        let back = Spectrum::from_csv_str(&s.to_csv_string().unwrap(), "mem").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_bad_axis() {
        assert!(Spectrum::new(vec![1.0, 1.0], vec![1.0, 1.0], None).is_err());
        assert!(Spectrum::new(vec![1.0, 2.0], vec![1.0], None).is_err());
        assert!(Spectrum::from_csv_str("axis_MHz,pl\n2,1\n1,1\n", "x").is_err());
    }

    #[test]
    fn grid_is_inclusive() {
        let g = Spectrum::grid(2.0, 400.0, 1.0).unwrap();
        assert_eq!(g.len(), 399);
        assert_eq!(*g.last().unwrap(), 400.0);
    }

    #[test]
    fn gaussian_half_maximum_at_half_fwhm() {
        assert!((gaussian(14.0, 10.0, 8.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shot_noise_is_seeded_and_unbiased() {
        let s = Spectrum::new((0..2000).map(|k| k as f64).collect(), vec![0.9; 2000], None).unwrap();
        let a = add_shot_noise(&s, 100_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = add_shot_noise(&s, 100_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let mean = a.values.iter().sum::<f64>() / 2000.0;
        let sem = (0.09f64 / 100_000.0).sqrt();
        assert!((mean - 0.9).abs() < 5.0 * sem / (2000f64).sqrt());
        let spread = (a.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 1999.0).sqrt();
        assert!((spread / sem - 1.0).abs() < 0.1);
    }
}
