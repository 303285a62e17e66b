//! Waveform → 256-D log-Mel statistics descriptor.
//!
//! Pipeline: mono downmix, resampling to 16 kHz, 25 ms Hann frames with 10 ms hop,
//! 64 triangular Mel filters over 0–8 kHz, natural log of Mel power, first-order deltas,
//! then per-bin mean and population standard deviation over time.

use std::f64::consts::PI;
use std::path::Path;

use log::warn;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub const TARGET_RATE: u32 = 16_000;
pub const N_MELS: usize = 64;
pub const WIN_LENGTH: usize = 400;
pub const HOP_LENGTH: usize = 160;
pub const N_FFT: usize = 512;
pub const LOG_EPS: f64 = 1e-10;
pub const AUDIO_DIM: usize = 4 * N_MELS;

/// Zero crossings of the sinc kernel on each side of the interpolation point.
const SINC_ZEROS: f64 = 16.0;

/// Frames × 64 log Mel energies, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMelMatrix {
    frames: usize,
    values: Vec<f64>,
}

impl LogMelMatrix {
    pub fn new(frames: usize, values: Vec<f64>) -> Result<Self> {
        if frames == 0 || values.len() != frames * N_MELS {
            return Err(Error::Domain(format!(
                "log-Mel matrix needs >=1 frame of {N_MELS} bins, got {} values for {frames} frames",
                values.len()
            )));
        }
        Ok(Self { frames, values })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * N_MELS..(t + 1) * N_MELS]
    }

    pub fn get(&self, t: usize, bin: usize) -> f64 {
        self.values[t * N_MELS + bin]
    }

    /// Frames per second of the 10 ms hop.
    pub fn frame_rate(&self) -> f64 {
        TARGET_RATE as f64 / HOP_LENGTH as f64
    }
}

/// 256-D audio descriptor with provenance flag.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFeature {
    pub vector: Vec<f64>,
    pub present: bool,
}

impl AudioFeature {
    pub fn absent() -> Self {
        Self {
            vector: vec![0.0; AUDIO_DIM],
            present: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AudioConfig {
    /// Drop frames whose Mel energy is more than this many dB below the loudest frame.
    pub vad_gate_db: Option<f64>,
}

/// Average interleaved channels into one.
pub fn downmix(interleaved: &[f32], channels: usize) -> Vec<f64> {
    if channels <= 1 {
        return interleaved.iter().map(|&s| s as f64).collect();
    }
    interleaved
        .chunks_exact(channels)
        .map(|c| c.iter().map(|&s| s as f64).sum::<f64>() / channels as f64)
        .collect()
}

/// Read a PCM WAV (integer or float) as mono samples in [-1, 1] plus its sample rate.
pub fn read_wav(path: &Path) -> Result<(Vec<f64>, u32)> {
    let mut reader = hound::WavReader::open(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    let samples: Vec<f32> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?,
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        }
    };
    Ok((downmix(&samples, spec.channels as usize), spec.sample_rate))
}

/// Windowed-sinc resampling to 16 kHz. A 16 kHz input is returned unchanged.
pub fn resample(wave: &[f64], source_rate: u32) -> Result<Vec<f64>> {
    if wave.is_empty() {
        return Err(Error::Domain("cannot resample an empty waveform".into()));
    }
    if source_rate == 0 {
        return Err(Error::Domain("source rate must be positive".into()));
    }
    if source_rate == TARGET_RATE {
        return Ok(wave.to_vec());
    }
    let ratio = TARGET_RATE as f64 / source_rate as f64;
    let out_len = ((wave.len() as f64) * ratio).round().max(1.0) as usize;
    // cutoff in cycles per input sample, slightly under Nyquist of the slower rate
    let cutoff = 0.5 * ratio.min(1.0) * 0.97;
    let half_width = SINC_ZEROS / (2.0 * cutoff);
    let n_in = wave.len() as isize;
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len {
        let center = n as f64 / ratio;
        let lo = (center - half_width).ceil() as isize;
        let hi = (center + half_width).floor() as isize;
        let mut acc = 0.0;
        for i in lo.max(0)..=hi.min(n_in - 1) {
            let u = i as f64 - center;
            let x = 2.0 * cutoff * u;
            let sinc = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
            let window = 0.5 + 0.5 * (PI * u / half_width).cos();
            acc += wave[i as usize] * 2.0 * cutoff * sinc * window;
        }
        out.push(acc);
    }
    Ok(out)
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular Mel filterbank, `N_MELS × (N_FFT/2 + 1)` row-major.
pub fn mel_filterbank() -> Vec<f64> {
    let n_freqs = N_FFT / 2 + 1;
    let f_max = TARGET_RATE as f64 / 2.0;
    let (m_lo, m_hi) = (hz_to_mel(0.0), hz_to_mel(f_max));
    let points: Vec<f64> = (0..N_MELS + 2)
        .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (N_MELS + 1) as f64))
        .collect();
    let mut fb = vec![0.0; N_MELS * n_freqs];
    for m in 0..N_MELS {
        let (left, center, right) = (points[m], points[m + 1], points[m + 2]);
        for k in 0..n_freqs {
            let f = k as f64 * f_max / (n_freqs - 1) as f64;
            let up = (f - left) / (center - left);
            let down = (right - f) / (right - center);
            fb[m * n_freqs + k] = up.min(down).max(0.0);
        }
    }
    fb
}

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Number of 25 ms / 10 ms frames in a 16 kHz signal of `len` samples.
pub fn frame_count(len: usize) -> usize {
    if len < WIN_LENGTH {
        0
    } else {
        1 + (len - WIN_LENGTH) / HOP_LENGTH
    }
}

fn mel_power(wave16k: &[f64]) -> Result<(usize, Vec<f64>)> {
    let frames = frame_count(wave16k.len());
    if frames == 0 {
        return Err(Error::Domain(format!(
            "need at least {WIN_LENGTH} samples for one frame, got {}",
            wave16k.len()
        )));
    }
    let n_freqs = N_FFT / 2 + 1;
    let fb = mel_filterbank();
    let window = hann(WIN_LENGTH);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(N_FFT);
    let mut buf = vec![Complex::new(0.0, 0.0); N_FFT];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut power = vec![0.0; n_freqs];
    let mut mel = Vec::with_capacity(frames * N_MELS);
    for t in 0..frames {
        let start = t * HOP_LENGTH;
        for (i, c) in buf.iter_mut().enumerate() {
            *c = if i < WIN_LENGTH {
                Complex::new(wave16k[start + i] * window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p = c.norm_sqr();
        }
        for m in 0..N_MELS {
            let row = &fb[m * n_freqs..(m + 1) * n_freqs];
            mel.push(row.iter().zip(&power).map(|(w, p)| w * p).sum());
        }
    }
    Ok((frames, mel))
}

/// Log-Mel spectrogram of a 16 kHz waveform.
pub fn logmel(wave16k: &[f64]) -> Result<LogMelMatrix> {
    logmel_with(wave16k, &AudioConfig::default())
}

/// Log-Mel spectrogram with the optional energy gate applied.
pub fn logmel_with(wave16k: &[f64], cfg: &AudioConfig) -> Result<LogMelMatrix> {
    let (frames, mel) = mel_power(wave16k)?;
    let mut keep: Vec<bool> = vec![true; frames];
    if let Some(db) = cfg.vad_gate_db {
        let energy: Vec<f64> = mel.chunks_exact(N_MELS).map(|f| f.iter().sum()).collect();
        let max = energy.iter().cloned().fold(0.0, f64::max);
        let floor = max * 10f64.powf(-db.abs() / 10.0);
        for (k, e) in keep.iter_mut().zip(&energy) {
            *k = max > 0.0 && *e >= floor;
        }
        if !keep.iter().any(|&k| k) {
            keep.iter_mut().for_each(|k| *k = true);
        }
    }
    let mut values = Vec::with_capacity(mel.len());
    let mut kept = 0;
    for (frame, k) in mel.chunks_exact(N_MELS).zip(&keep) {
        if *k {
            values.extend(frame.iter().map(|p| (p + LOG_EPS).ln()));
            kept += 1;
        }
    }
    LogMelMatrix::new(kept, values)
}

/// Central-difference delta with replicated edge frames. A single frame gives zeros.
pub fn delta(m: &LogMelMatrix) -> LogMelMatrix {
    let frames = m.frames();
    let mut out = vec![0.0; frames * N_MELS];
    if frames >= 2 {
        for t in 0..frames {
            let prev = m.frame(t.saturating_sub(1));
            let next = m.frame((t + 1).min(frames - 1));
            for b in 0..N_MELS {
                out[t * N_MELS + b] = (next[b] - prev[b]) / 2.0;
            }
        }
    }
    LogMelMatrix {
        frames,
        values: out,
    }
}

/// Per-bin mean and population std over time.
fn column_stats(m: &LogMelMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.frames() as f64;
    let mut mean = vec![0.0; N_MELS];
    for t in 0..m.frames() {
        for (acc, v) in mean.iter_mut().zip(m.frame(t)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);
    let mut var = vec![0.0; N_MELS];
    for t in 0..m.frames() {
        for ((acc, v), mu) in var.iter_mut().zip(m.frame(t)).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    (mean, var.into_iter().map(|v| (v / n).sqrt()).collect())
}

/// `[mean(logMel) ‖ std(logMel) ‖ mean(Δ) ‖ std(Δ)]`, 256 values.
pub fn pool_audio(m: &LogMelMatrix) -> AudioFeature {
    let d = delta(m);
    let (mu, sd) = column_stats(m);
    let (dmu, dsd) = column_stats(&d);
    let mut vector = Vec::with_capacity(AUDIO_DIM);
    vector.extend(mu);
    vector.extend(sd);
    vector.extend(dmu);
    vector.extend(dsd);
    AudioFeature {
        vector,
        present: true,
    }
}

/// Full descriptor from raw samples at any rate.
pub fn audio_features(wave: &[f64], source_rate: u32, cfg: &AudioConfig) -> Result<AudioFeature> {
    let w16 = resample(wave, source_rate)?;
    Ok(pool_audio(&logmel_with(&w16, cfg)?))
}

/// Descriptor for a WAV file; any failure yields the absent (zero) descriptor.
pub fn safe_audio_features(path: Option<&Path>, cfg: &AudioConfig) -> AudioFeature {
    let Some(path) = path else {
        return AudioFeature::absent();
    };
    match read_wav(path).and_then(|(w, sr)| audio_features(&w, sr, cfg)) {
        Ok(f) => f,
        Err(e) => {
            warn!("audio {}: {e}; using zero descriptor", path.display());
            AudioFeature::absent()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tone(freq: f64, rate: u32, secs: f64, amp: f64) -> Vec<f64> {
        let n = (rate as f64 * secs) as usize;
        (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin())
            .collect()
    }

    fn peak_hz(wave: &[f64], rate: u32) -> f64 {
        let n = wave.len().next_power_of_two() * 2;
        let mut buf: Vec<Complex<f64>> = wave.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(n, Complex::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let (k, _) = buf[..n / 2]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .unwrap();
        k as f64 * rate as f64 / n as f64
    }

    #[test]
    fn resample_identity_at_16k() {
        let w: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = resample(&w, 16_000).unwrap();
        assert_eq!(
            w.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            r.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn resample_length_ratio() {
        let w = vec![0.1; 48_000];
        let r = resample(&w, 48_000).unwrap();
        assert!((r.len() as i64 - 16_000).abs() <= 1);
        assert!(resample(&[], 8000).is_err());
    }

    #[test]
    fn resample_preserves_tone_frequency() {
        let w = tone(1000.0, 44_100, 1.0, 0.5);
        let r = resample(&w, 44_100).unwrap();
        let f = peak_hz(&r, 16_000);
        assert!((f - 1000.0).abs() <= 5.0, "peak at {f}");
    }

    #[test]
    fn frame_count_one_second() {
        let m = logmel(&vec![0.01; 16_000]).unwrap();
        assert_eq!(m.frames(), 98);
        assert_eq!(m.values().len(), 98 * 64);
        assert!(logmel(&vec![0.0; 399]).is_err());
    }

    #[test]
    fn silence_hits_epsilon_floor() {
        let m = logmel(&vec![0.0; 4000]).unwrap();
        assert!(m.values().iter().all(|&v| v == LOG_EPS.ln()));
    }

    #[test]
    fn white_noise_varies_in_every_bin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let w: Vec<f64> = (0..8000).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let m = logmel(&w).unwrap();
            let f = pool_audio(&m);
            for b in 0..N_MELS {
                assert!(f.vector[N_MELS + b] > 0.0, "bin {b} has zero variance");
            }
        }
    }

    #[test]
    fn delta_constant_is_zero_and_ramp_is_one() {
        let c = LogMelMatrix::new(4, vec![2.5; 4 * N_MELS]).unwrap();
        assert!(delta(&c).values().iter().all(|&v| v == 0.0));
        let ramp: Vec<f64> = (0..6).flat_map(|t| vec![t as f64; N_MELS]).collect();
        let d = delta(&LogMelMatrix::new(6, ramp).unwrap());
        for t in 1..5 {
            assert!(d.frame(t).iter().all(|&v| v == 1.0));
        }
        assert!(d.frame(0).iter().all(|&v| v == 0.5));
        let single = LogMelMatrix::new(1, vec![1.0; N_MELS]).unwrap();
        assert!(delta(&single).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn delta_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vals: Vec<f64> = (0..5 * N_MELS).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let m = LogMelMatrix::new(5, vals.clone()).unwrap();
        let d = delta(&m);
        let at = |t: i64, b: usize| vals[(t.clamp(0, 4) as usize) * N_MELS + b];
        for t in 0..5i64 {
            for b in 0..N_MELS {
                let expect = (at(t + 1, b) - at(t - 1, b)) / 2.0;
                assert_eq!(d.get(t as usize, b), expect);
            }
        }
    }

    #[test]
    fn pool_constant_matrix() {
        let m = LogMelMatrix::new(7, vec![-1.25; 7 * N_MELS]).unwrap();
        let f = pool_audio(&m);
        assert_eq!(f.vector.len(), 256);
        assert!(f.vector[..64].iter().all(|&v| v == -1.25));
        assert!(f.vector[64..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pool_three_frames_against_oracle() {
        let mut vals = Vec::new();
        for t in 0..3 {
            for b in 0..N_MELS {
                vals.push((t * 7 + b) as f64 * 0.5 - (b % 3) as f64 * t as f64);
            }
        }
        let m = LogMelMatrix::new(3, vals.clone()).unwrap();
        let f = pool_audio(&m);
        for b in 0..N_MELS {
            let xs = [vals[b], vals[N_MELS + b], vals[2 * N_MELS + b]];
            let mu = (xs[0] + xs[1] + xs[2]) / 3.0;
            let sd = (((xs[0] - mu).powi(2) + (xs[1] - mu).powi(2) + (xs[2] - mu).powi(2)) / 3.0).sqrt();
            let ds = [(xs[1] - xs[0]) / 2.0, (xs[2] - xs[0]) / 2.0, (xs[2] - xs[1]) / 2.0];
            let dmu = (ds[0] + ds[1] + ds[2]) / 3.0;
            let dsd = (((ds[0] - dmu).powi(2) + (ds[1] - dmu).powi(2) + (ds[2] - dmu).powi(2)) / 3.0).sqrt();
            assert!((f.vector[b] - mu).abs() < 1e-12);
            assert!((f.vector[64 + b] - sd).abs() < 1e-12);
            assert!((f.vector[128 + b] - dmu).abs() < 1e-12);
            assert!((f.vector[192 + b] - dsd).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_scaling_shifts_means_only() {
        let mut w = tone(440.0, 16_000, 2.0, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (i, v) in tone(1870.0, 16_000, 2.0, 0.2).into_iter().enumerate() {
            w[i] += v + rng.gen_range(-0.05..0.05);
        }
        let g = 3.0;
        let scaled: Vec<f64> = w.iter().map(|v| v * g).collect();
        let a = pool_audio(&logmel(&w).unwrap());
        let b = pool_audio(&logmel(&scaled).unwrap());
        for i in 0..64 {
            assert!((b.vector[i] - a.vector[i] - 2.0 * g.ln()).abs() < 1e-3);
        }
        for i in 64..256 {
            assert!((b.vector[i] - a.vector[i]).abs() < 1e-3, "stat {i}");
        }
    }

    #[test]
    fn leading_silence_shift_is_small_with_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60 * 16_000;
        let w: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / 16_000.0;
                0.3 * (2.0 * PI * 220.0 * t).sin() * (1.0 + 0.5 * (2.0 * PI * 0.7 * t).sin())
                    + rng.gen_range(-0.05..0.05)
            })
            .collect();
        let mut shifted = vec![0.0; 50 * HOP_LENGTH];
        shifted.extend_from_slice(&w);
        let cfg = AudioConfig { vad_gate_db: Some(60.0) };
        let a = pool_audio(&logmel_with(&w, &cfg).unwrap());
        let b = pool_audio(&logmel_with(&shifted, &cfg).unwrap());
        let worst = a
            .vector
            .iter()
            .zip(&b.vector)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.05, "max stat change {worst}");
    }

    #[test]
    fn deterministic_bytes() {
        let w = tone(300.0, 22_050, 0.5, 0.4);
        let a = audio_features(&w, 22_050, &AudioConfig::default()).unwrap();
        let b = audio_features(&w, 22_050, &AudioConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
