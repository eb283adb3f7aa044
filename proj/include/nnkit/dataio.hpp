#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "nnkit/rng.hpp"
#include "nnkit/tensor.hpp"

namespace nnkit {

// Inputs are flattened 784-vectors (MNIST) or 128 x 128 x 1 patches (audio).
struct LabeledDataset {
  std::vector<Tensor> inputs;
  std::vector<int> labels;
  int class_count = 10;

  std::size_t size() const { return inputs.size(); }
};

struct SplitDataset {
  LabeledDataset train;
  LabeledDataset eval_set;
  LabeledDataset test;
};

// STFT / mel settings. Defaults are the working set: 2048-point FFT over
// 1024-sample Hann windows (periodic variant), hop 256, 128 mel bands
// spanning 0 Hz to Nyquist, 128 x 128 patches.
struct SpectrogramParams {
  std::size_t fft_size = 2048;
  std::size_t hop = 256;
  std::size_t window = 1024;
  std::size_t mel_bins = 128;
  std::size_t patch = 128;
  double sample_rate = 44100.0;

  void validate() const;
};

// IDX-format MNIST reader. Headers are big-endian; magic 0x00000803 for
// images, 0x00000801 for labels. Pixels are scaled to [0, 1] and flattened.
LabeledDataset load_mnist_idx(const std::string& image_path, const std::string& label_path);

// Seeded shuffle, then partition by fractions (default 5/6, 1/12, 1/12).
// Subsets are disjoint and exhaustive.
SplitDataset three_way_split(const LabeledDataset& dataset, std::uint64_t seed,
                             double train_frac = 5.0 / 6.0, double eval_frac = 1.0 / 12.0,
                             double test_frac = 1.0 / 12.0);

// RIFF/WAVE PCM-16 reader; mono, or stereo downmixed by channel mean.
// Samples are scaled by 1/32768 into [-1, 1).
struct WavData {
  Tensor samples;  // rank 1
  double sample_rate;
};
WavData read_wav(const std::string& path);
void write_wav_pcm16(const std::string& path, const Tensor& samples, double sample_rate);

// In-place radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& x);

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filterbank, mel_bins x (fft_size/2 + 1). Triangle corners are
// mel-equidistant from 0 Hz to Nyquist; weights are evaluated at the FFT bin
// frequencies with peak 1 (no area normalization).
Tensor mel_filterbank(std::size_t mel_bins, std::size_t fft_size, double sample_rate);

// Center frequency (Hz) of each mel band, band index 0-based.
std::vector<double> mel_band_centers(const SpectrogramParams& params);

// frames x mel_bins log-mel spectrogram: Hann-windowed frames zero-padded to
// fft_size, power spectrum, mel filterbank, ln(energy + 1e-10).
// Frame count is (n - window)/hop + 1; a signal shorter than one window is an
// error.
Tensor log_mel_spectrogram(const Tensor& samples, const SpectrogramParams& params);

// Non-overlapping blocks of `patch` consecutive frames, each transposed to
// patch x patch x 1 (mel x time x channel). The trailing remainder is dropped.
std::vector<Tensor> patch_split(const Tensor& spectrogram, std::size_t patch = 128);

// Deterministic synthetic audio dataset: each class is a fixed timbre recipe
// (harmonic stack + filtered noise), rendered per clip with seeded jitter and
// run through the log-mel/patch pipeline.
LabeledDataset synth_audio_dataset(int classes, int per_class, std::uint64_t seed,
                                   const SpectrogramParams& params, double clip_seconds = 10.0);

// Raw synthesized clip for one class (used by the dataset builder and tests).
Tensor synth_clip(int class_id, int clip_id, std::uint64_t seed, double sample_rate,
                  double seconds);

// Dataset manifest: CSV with header "path,label"; every WAV is run through
// the spectrogram/patch pipeline and each patch carries the clip label.
LabeledDataset load_manifest(const std::string& csv_path, const SpectrogramParams& params);

// Per-feature standardization statistics. A zero-variance feature gets
// std == 0 and standardizes to 0.
struct FeatureStats {
  Tensor mean;
  Tensor stddev;
};
FeatureStats compute_feature_stats(const LabeledDataset& dataset);
void apply_standardize(LabeledDataset& dataset, const FeatureStats& stats);
// Stats from the training split, applied to all three.
void standardize(SplitDataset& split);
// Self-statistics variant for a single dataset.
void standardize(LabeledDataset& dataset);

}  // namespace nnkit
