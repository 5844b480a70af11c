// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise drive envelopes.
//!
//! An envelope is an ordered list of segments followed by a zero-drive buffer.
//! Every segment spans an integer number of sample periods and its drive is
//! held constant over each sample interval, as an arbitrary waveform generator
//! would play it. The drive in interval `k` of a segment is
//! `amplitude · e^{i·phase} · shape[k]`, with `shape ≡ 1` for constant segments.

use std::ops::Range;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentShape {
    Constant,
    /// One complex sample per sample interval.
    Sampled(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSegment {
    /// Duration in seconds.
    pub duration: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub shape: SegmentShape,
}

impl PulseSegment {
    pub fn constant(duration: f64, amplitude: f64, phase: f64) -> Self {
        PulseSegment {
            duration,
            amplitude,
            phase,
            shape: SegmentShape::Constant,
        }
    }

    /// A user-sampled segment; the duration is implied by the sample count.
    pub fn sampled(samples: Vec<Complex64>, sample_period: f64, amplitude: f64, phase: f64) -> Self {
        PulseSegment {
            duration: samples.len() as f64 * sample_period,
            amplitude,
            phase,
            shape: SegmentShape::Sampled(samples),
        }
    }

    pub fn complex_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    /// Set amplitude and phase from a complex amplitude.
    pub fn set_complex_amplitude(&mut self, z: Complex64) {
        let (r, theta) = z.to_polar();
        self.amplitude = r;
        self.phase = theta;
    }

    pub fn n_samples(&self, sample_period: f64) -> Result<usize> {
        whole_samples(self.duration, sample_period)
    }
}

fn whole_samples(duration: f64, sample_period: f64) -> Result<usize> {
    if !duration.is_finite() || duration < 0.0 {
        return Err(Error::invalid(format!("duration must be finite and >= 0, got {duration}")));
    }
    let n = (duration / sample_period).round();
    if (n * sample_period - duration).abs() > 1e-9 * sample_period.max(duration) {
        return Err(Error::invalid(format!(
            "duration {duration:e} s is not a whole number of {sample_period:e} s samples"
        )));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope {
    pub segments: Vec<PulseSegment>,
    /// Sample period in seconds.
    pub sample_period: f64,
    /// Trailing zero-drive window in seconds.
    pub buffer: f64,
    /// Indices of the two tunable depletion segments, if the envelope has them.
    pub depletion: Option<[usize; 2]>,
}

impl PulseEnvelope {
    pub fn new(segments: Vec<PulseSegment>, sample_period: f64, buffer: f64) -> Result<Self> {
        let env = PulseEnvelope {
            segments,
            sample_period,
            buffer,
            depletion: None,
        };
        env.validate()?;
        Ok(env)
    }

    /// Mark two segments as the tunable depletion steps.
    pub fn with_depletion(mut self, indices: [usize; 2]) -> Result<Self> {
        for &i in &indices {
            if i >= self.segments.len() {
                return Err(Error::invalid(format!(
                    "depletion segment {i} out of range ({} segments)",
                    self.segments.len()
                )));
            }
        }
        if indices[0] == indices[1] {
            return Err(Error::invalid("depletion segments must be distinct"));
        }
        self.depletion = Some(indices);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period.is_finite() && self.sample_period > 0.0) {
            return Err(Error::invalid(format!(
                "sample period must be > 0, got {}",
                self.sample_period
            )));
        }
        if self.segments.is_empty() {
            return Err(Error::invalid("envelope has no segments"));
        }
        whole_samples(self.buffer, self.sample_period)?;
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.amplitude.is_finite() && seg.phase.is_finite()) {
                return Err(Error::invalid(format!("segment {i}: non-finite amplitude or phase")));
            }
            if seg.amplitude < 0.0 {
                return Err(Error::invalid(format!("segment {i}: amplitude must be >= 0")));
            }
            let n = seg.n_samples(self.sample_period)?;
            if n == 0 {
                return Err(Error::invalid(format!("segment {i}: duration must be > 0")));
            }
            if let SegmentShape::Sampled(s) = &seg.shape {
                if s.len() != n {
                    return Err(Error::invalid(format!(
                        "segment {i}: {} samples for {n} sample intervals",
                        s.len()
                    )));
                }
                if s.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(Error::invalid(format!("segment {i}: non-finite sample")));
                }
            }
        }
        Ok(())
    }

    /// Number of sample intervals in the full window (segments plus buffer).
    pub fn n_intervals(&self) -> usize {
        self.segment_ranges().last().map_or(0, |r| r.end) + self.buffer_samples()
    }

    fn buffer_samples(&self) -> usize {
        (self.buffer / self.sample_period).round() as usize
    }

    /// Total window `T` in seconds.
    pub fn total_duration(&self) -> f64 {
        self.n_intervals() as f64 * self.sample_period
    }

    /// Sample instants `0, dt, …, T` (one more than the interval count).
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_intervals())
            .map(|k| k as f64 * self.sample_period)
            .collect()
    }

    /// Interval index ranges occupied by each segment.
    pub fn segment_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.segments
            .iter()
            .map(|seg| {
                let n = (seg.duration / self.sample_period).round() as usize;
                let r = start..start + n;
                start += n;
                r
            })
            .collect()
    }

    /// Held drive value for every sample interval, buffer included.
    pub fn held_drive(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.n_intervals());
        for (seg, range) in self.segments.iter().zip(self.segment_ranges()) {
            let z = seg.complex_amplitude();
            match &seg.shape {
                SegmentShape::Constant => out.extend(std::iter::repeat_n(z, range.len())),
                SegmentShape::Sampled(s) => out.extend(s.iter().map(|&v| z * v)),
            }
        }
        out.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), self.buffer_samples()));
        out
    }

    /// Global amplitude scaling `ε → s·ε` of every segment.
    pub fn scaled(&self, s: f64) -> Self {
        let mut env = self.clone();
        for seg in &mut env.segments {
            seg.amplitude *= s.abs();
            if s < 0.0 {
                seg.phase += std::f64::consts::PI;
            }
        }
        env
    }

    /// Largest segment amplitude outside the depletion steps.
    pub fn reference_amplitude(&self) -> f64 {
        self.segments
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.depletion.is_some_and(|d| d.contains(i)))
            .map(|(_, s)| s.amplitude)
            .fold(0.0, f64::max)
    }

    /// Copy with the depletion segments set to the given complex amplitudes.
    pub fn with_depletion_amplitudes(&self, z: [Complex64; 2]) -> Result<Self> {
        let idx = self
            .depletion
            .ok_or_else(|| Error::invalid("envelope has no depletion segments"))?;
        let mut env = self.clone();
        for (i, zi) in idx.into_iter().zip(z) {
            env.segments[i].set_complex_amplitude(zi);
        }
        Ok(env)
    }

    /// Interval index at which the last depletion segment ends.
    pub fn depletion_end(&self) -> Option<usize> {
        let idx = self.depletion?;
        let ranges = self.segment_ranges();
        Some(idx.iter().map(|&i| ranges[i].end).max().unwrap_or(0))
    }

    /// Constant ramp of amplitude 1 followed by two constant depletion steps
    /// (initially off) and the buffer.
    pub fn square_ramp(ramp: f64, depletion: [f64; 2], buffer: f64, sample_period: f64) -> Result<Self> {
        Self::new(
            vec![
                PulseSegment::constant(ramp, 1.0, 0.0),
                PulseSegment::constant(depletion[0], 0.0, 0.0),
                PulseSegment::constant(depletion[1], 0.0, 0.0),
            ],
            sample_period,
            buffer,
        )?
        .with_depletion([1, 2])
    }

    /// Ramp split into a strong kick and a weaker hold, then two depletion steps.
    pub fn two_step(
        kick: f64,
        hold: f64,
        hold_amplitude: f64,
        depletion: [f64; 2],
        buffer: f64,
        sample_period: f64,
    ) -> Result<Self> {
        Self::new(
            vec![
                PulseSegment::constant(kick, 1.0, 0.0),
                PulseSegment::constant(hold, hold_amplitude, 0.0),
                PulseSegment::constant(depletion[0], 0.0, 0.0),
                PulseSegment::constant(depletion[1], 0.0, 0.0),
            ],
            sample_period,
            buffer,
        )?
        .with_depletion([2, 3])
    }

    /// Constant ramp followed by free decay: no depletion drive, `wait` of
    /// zero drive plus the buffer.
    pub fn passive(ramp: f64, wait: f64, buffer: f64, sample_period: f64) -> Result<Self> {
        Self::new(vec![PulseSegment::constant(ramp, 1.0, 0.0)], sample_period, wait + buffer)
    }

    /// Five canal-house facades: three 200 ns houses ramp the resonator up,
    /// the last two (240 ns and 160 ns) are the tunable depletion steps.
    pub fn skyline(buffer: f64, sample_period: f64) -> Result<Self> {
        let houses = [
            (200e-9, Facade::Step, 0.55),
            (200e-9, Facade::Bell, 0.8),
            (200e-9, Facade::Neck, 1.0),
            (240e-9, Facade::Spout, 0.0),
            (160e-9, Facade::Step, 0.0),
        ];
        let mut segments = Vec::with_capacity(houses.len());
        for (duration, facade, amplitude) in houses {
            let n = whole_samples(duration, sample_period)?;
            segments.push(PulseSegment::sampled(
                facade.outline(n),
                sample_period,
                amplitude,
                0.0,
            ));
        }
        Self::new(segments, sample_period, buffer)?.with_depletion([3, 4])
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: EnvelopeFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("envelope file: {e}")))?;
        file.into_envelope()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        let file = EnvelopeFile::from_envelope(self);
        toml::to_string(&file).expect("envelope serializes")
    }
}

/// Facade outlines used by [`PulseEnvelope::skyline`].
#[derive(Debug, Clone, Copy)]
pub enum Facade {
    Step,
    Bell,
    Neck,
    Spout,
}

impl Facade {
    /// Outline heights in (0, 1] sampled at the centres of `n` intervals.
    pub fn outline(self, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|k| {
                let x = (k as f64 + 0.5) / n as f64;
                let h = match self {
                    Facade::Step => {
                        let steps = [0.55, 0.75, 1.0, 0.75, 0.55];
                        steps[((x * 5.0) as usize).min(4)]
                    }
                    Facade::Bell => 0.6 + 0.4 * (std::f64::consts::PI * x).sin().powi(2),
                    Facade::Neck => {
                        if (0.3..0.7).contains(&x) {
                            1.0
                        } else {
                            0.65
                        }
                    }
                    Facade::Spout => 0.5 + 0.5 * (1.0 - (2.0 * x - 1.0).abs()),
                };
                Complex64::new(h, 0.0)
            })
            .collect()
    }
}

/// On-disk envelope schema. Times are in nanoseconds.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvelopeFile {
    sample_period_ns: f64,
    #[serde(default)]
    buffer_ns: f64,
    #[serde(rename = "segment")]
    segments: Vec<SegmentEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    duration_ns: Option<f64>,
    amplitude: f64,
    #[serde(default)]
    phase_rad: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<[f64; 2]>>,
    /// `"depletion"` marks one of the two tunable depletion segments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    role: Option<String>,
}

impl EnvelopeFile {
    fn into_envelope(self) -> Result<PulseEnvelope> {
        let dt = self.sample_period_ns * 1e-9;
        let mut depletion = Vec::new();
        let mut segments = Vec::with_capacity(self.segments.len());
        for (i, entry) in self.segments.into_iter().enumerate() {
            match entry.role.as_deref() {
                None | Some("drive") => {}
                Some("depletion") => depletion.push(i),
                Some(other) => {
                    return Err(Error::Config(format!("segment {i}: unknown role {other:?}")))
                }
            }
            let seg = match (entry.duration_ns, entry.samples) {
                (Some(d), None) => PulseSegment::constant(d * 1e-9, entry.amplitude, entry.phase_rad),
                (d, Some(samples)) => {
                    let seg = PulseSegment::sampled(
                        samples.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
                        dt,
                        entry.amplitude,
                        entry.phase_rad,
                    );
                    if let Some(d) = d {
                        if (d * 1e-9 - seg.duration).abs() > 1e-3 * dt {
                            return Err(Error::Config(format!(
                                "segment {i}: duration_ns {d} disagrees with {} samples",
                                samples.len()
                            )));
                        }
                    }
                    seg
                }
                (None, None) => {
                    return Err(Error::Config(format!(
                        "segment {i}: needs either duration_ns or samples"
                    )))
                }
            };
            segments.push(seg);
        }
        let env = PulseEnvelope::new(segments, dt, self.buffer_ns * 1e-9)?;
        match depletion.as_slice() {
            [] => Ok(env),
            [a, b] => env.with_depletion([*a, *b]),
            _ => Err(Error::Config(format!(
                "expected exactly two depletion segments, found {}",
                depletion.len()
            ))),
        }
    }

    fn from_envelope(env: &PulseEnvelope) -> Self {
        let segments = env
            .segments
            .iter()
            .enumerate()
            .map(|(i, seg)| SegmentEntry {
                duration_ns: Some(seg.duration * 1e9),
                amplitude: seg.amplitude,
                phase_rad: seg.phase,
                samples: match &seg.shape {
                    SegmentShape::Constant => None,
                    SegmentShape::Sampled(s) => Some(s.iter().map(|z| [z.re, z.im]).collect()),
                },
                role: env
                    .depletion
                    .filter(|d| d.contains(&i))
                    .map(|_| "depletion".to_string()),
            })
            .collect();
        EnvelopeFile {
            sample_period_ns: env.sample_period * 1e9,
            buffer_ns: env.buffer * 1e9,
            segments,
        }
    }
}
