#include "nnkit/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nnkit/error.hpp"

namespace nnkit {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLogFloor = 1e-10;
}  // namespace

void SpectrogramParams::validate() const {
  if (window > fft_size) throw ParamError("spectrogram: window must be <= fft_size");
  if (hop == 0 || hop > window) throw ParamError("spectrogram: hop must be in [1, window]");
  if (mel_bins == 0 || mel_bins > fft_size / 2) {
    throw ParamError("spectrogram: mel_bins must be in [1, fft_size/2]");
  }
  if ((fft_size & (fft_size - 1)) != 0) throw ParamError("spectrogram: fft_size must be a power of two");
  if (!(sample_rate > 0.0)) throw ParamError("spectrogram: sample_rate must be > 0");
}

// ------------------------------------------------------------------ MNIST

namespace {

std::uint32_t read_be32(std::ifstream& is, const std::string& path) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw TruncatedFileError("unexpected end of file: " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

}  // namespace

LabeledDataset load_mnist_idx(const std::string& image_path, const std::string& label_path) {
  std::ifstream img(image_path, std::ios::binary);
  if (!img) throw IoError("cannot open: " + image_path);
  std::ifstream lab(label_path, std::ios::binary);
  if (!lab) throw IoError("cannot open: " + label_path);

  const std::uint32_t img_magic = read_be32(img, image_path);
  if (img_magic != 0x00000803u) {
    throw BadMagicError("bad IDX image magic in " + image_path + ": got " +
                        std::to_string(img_magic));
  }
  const std::uint32_t img_count = read_be32(img, image_path);
  const std::uint32_t rows = read_be32(img, image_path);
  const std::uint32_t cols = read_be32(img, image_path);

  const std::uint32_t lab_magic = read_be32(lab, label_path);
  if (lab_magic != 0x00000801u) {
    throw BadMagicError("bad IDX label magic in " + label_path + ": got " +
                        std::to_string(lab_magic));
  }
  const std::uint32_t lab_count = read_be32(lab, label_path);
  if (img_count != lab_count) {
    throw CountMismatchError("IDX count mismatch: " + std::to_string(img_count) + " images vs " +
                             std::to_string(lab_count) + " labels");
  }

  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> buf(pixels);
  LabeledDataset ds;
  ds.class_count = 10;
  ds.inputs.reserve(img_count);
  ds.labels.reserve(lab_count);
  for (std::uint32_t i = 0; i < img_count; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!img) throw TruncatedFileError("image data truncated: " + image_path);
    Tensor t({pixels});
    for (std::size_t p = 0; p < pixels; ++p) t[p] = buf[p] / 255.0;
    ds.inputs.push_back(std::move(t));
    char l;
    lab.read(&l, 1);
    if (!lab) throw TruncatedFileError("label data truncated: " + label_path);
    ds.labels.push_back(static_cast<unsigned char>(l));
  }
  return ds;
}

SplitDataset three_way_split(const LabeledDataset& dataset, std::uint64_t seed, double train_frac,
                             double eval_frac, double test_frac) {
  if (std::abs(train_frac + eval_frac + test_frac - 1.0) > 1e-9) {
    throw ParamError("three_way_split: fractions must sum to 1");
  }
  const std::size_t n = dataset.size();
  if (n < 3) throw ParamError("three_way_split: dataset must have >= 3 items");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
    std::swap(order[i], order[j]);
  }

  const std::size_t n_train = static_cast<std::size_t>(train_frac * static_cast<double>(n));
  const std::size_t n_eval = static_cast<std::size_t>(eval_frac * static_cast<double>(n));

  SplitDataset out;
  out.train.class_count = out.eval_set.class_count = out.test.class_count = dataset.class_count;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledDataset& dst = i < n_train ? out.train : (i < n_train + n_eval ? out.eval_set : out.test);
    dst.inputs.push_back(dataset.inputs[order[i]]);
    dst.labels.push_back(dataset.labels[order[i]]);
  }
  return out;
}

// -------------------------------------------------------------------- WAV

namespace {

struct ChunkHeader {
  char id[4];
  std::uint32_t size;
};

bool read_chunk_header(std::ifstream& is, ChunkHeader& h) {
  is.read(h.id, 4);
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) return false;
  h.size = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
  return true;
}

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);

  char riff[4], wave[4];
  unsigned char szbuf[4];
  is.read(riff, 4);
  is.read(reinterpret_cast<char*>(szbuf), 4);
  is.read(wave, 4);
  if (!is || std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(wave, "WAVE", 4) != 0) {
    throw BadMagicError("not a RIFF/WAVE file: " + path);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::vector<unsigned char> data;

  ChunkHeader h;
  while (read_chunk_header(is, h)) {
    if (std::memcmp(h.id, "fmt ", 4) == 0) {
      if (h.size < 16) throw IoError("malformed fmt chunk: " + path);
      std::vector<unsigned char> fmt(h.size);
      is.read(reinterpret_cast<char*>(fmt.data()), h.size);
      if (!is) throw TruncatedFileError("fmt chunk truncated: " + path);
      format = le16(&fmt[0]);
      channels = le16(&fmt[2]);
      rate = le32(&fmt[4]);
      bits = le16(&fmt[14]);
      have_fmt = true;
    } else if (std::memcmp(h.id, "data", 4) == 0) {
      data.resize(h.size);
      is.read(reinterpret_cast<char*>(data.data()), h.size);
      if (!is) throw TruncatedFileError("data chunk truncated: " + path);
    } else {
      is.seekg(h.size + (h.size & 1u), std::ios::cur);  // chunks are word-aligned
    }
  }
  if (!have_fmt || data.empty()) throw IoError("missing fmt or data chunk: " + path);
  if (format != 1) throw IoError("unsupported WAV format tag " + std::to_string(format) + " (PCM only): " + path);
  if (bits != 16) throw IoError("unsupported bit depth " + std::to_string(bits) + " (16-bit only): " + path);
  if (channels != 1 && channels != 2) {
    throw IoError("unsupported channel count " + std::to_string(channels) + ": " + path);
  }

  const std::size_t frames = data.size() / (2u * channels);
  Tensor samples({frames});
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* p = &data[(i * channels + c) * 2];
      const std::int16_t v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
      acc += v / 32768.0;
    }
    samples[i] = acc / channels;
  }
  return {std::move(samples), static_cast<double>(rate)};
}

void write_wav_pcm16(const std::string& path, const Tensor& samples, double sample_rate) {
  if (samples.rank() != 1) throw ShapeError("write_wav: samples must be rank 1");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);

  auto put16 = [&os](std::uint16_t v) {
    char b[2] = {char(v & 0xff), char(v >> 8)};
    os.write(b, 2);
  };
  auto put32 = [&os](std::uint32_t v) {
    char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char(v >> 24)};
    os.write(b, 4);
  };

  const std::uint32_t n = static_cast<std::uint32_t>(samples.size());
  const std::uint32_t data_bytes = n * 2;
  os.write("RIFF", 4);
  put32(36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put32(16);
  put16(1);  // PCM
  put16(1);  // mono
  put32(static_cast<std::uint32_t>(sample_rate));
  put32(static_cast<std::uint32_t>(sample_rate) * 2);
  put16(2);
  put16(16);
  os.write("data", 4);
  put32(data_bytes);
  for (std::size_t i = 0; i < n; ++i) {
    double v = std::clamp(samples[i], -1.0, 1.0) * 32767.0;
    const std::int16_t s = static_cast<std::int16_t>(std::lrint(v));
    put16(static_cast<std::uint16_t>(s));
  }
  if (!os) throw IoError("write failed: " + path);
}

// ------------------------------------------------------------------- STFT

void fft(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0) throw ParamError("fft: size must be a power of two");
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = x[i + j];
        const std::complex<double> v = x[i + j + len / 2] * w;
        x[i + j] = u + v;
        x[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Tensor mel_filterbank(std::size_t mel_bins, std::size_t fft_size, double sample_rate) {
  const std::size_t bins = fft_size / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  std::vector<double> corners(mel_bins + 2);
  const double mel_max = hz_to_mel(nyquist);
  for (std::size_t i = 0; i < corners.size(); ++i) {
    corners[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(mel_bins + 1));
  }
  Tensor fb({mel_bins, bins});
  for (std::size_t m = 0; m < mel_bins; ++m) {
    const double lo = corners[m], center = corners[m + 1], hi = corners[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      double w = 0.0;
      if (f > lo && f < hi) {
        w = f <= center ? (f - lo) / (center - lo) : (hi - f) / (hi - center);
      }
      fb(m, k) = w;
    }
  }
  return fb;
}

std::vector<double> mel_band_centers(const SpectrogramParams& params) {
  const double mel_max = hz_to_mel(params.sample_rate / 2.0);
  std::vector<double> centers(params.mel_bins);
  for (std::size_t m = 0; m < params.mel_bins; ++m) {
    centers[m] =
        mel_to_hz(mel_max * static_cast<double>(m + 1) / static_cast<double>(params.mel_bins + 1));
  }
  return centers;
}

Tensor log_mel_spectrogram(const Tensor& samples, const SpectrogramParams& params) {
  params.validate();
  if (samples.rank() != 1) throw ShapeError("log_mel: samples must be rank 1");
  const std::size_t n = samples.size();
  if (n < params.window) {
    throw ShapeError("log_mel: signal of " + std::to_string(n) + " samples is shorter than one window");
  }
  const std::size_t frames = (n - params.window) / params.hop + 1;
  const std::size_t bins = params.fft_size / 2 + 1;

  // Periodic Hann window.
  std::vector<double> hann(params.window);
  for (std::size_t i = 0; i < params.window; ++i) {
    hann[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                    static_cast<double>(params.window)));
  }
  const Tensor fb = mel_filterbank(params.mel_bins, params.fft_size, params.sample_rate);

  Tensor out({frames, params.mel_bins});
  std::vector<std::complex<double>> frame(params.fft_size);
  std::vector<double> power(bins);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t off = f * params.hop;
    for (std::size_t i = 0; i < params.window; ++i) {
      frame[i] = std::complex<double>(samples[off + i] * hann[i], 0.0);
    }
    std::fill(frame.begin() + static_cast<std::ptrdiff_t>(params.window), frame.end(),
              std::complex<double>(0.0, 0.0));
    fft(frame);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(frame[k]);
    for (std::size_t m = 0; m < params.mel_bins; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += fb(m, k) * power[k];
      out(f, m) = std::log(e + kLogFloor);
    }
  }
  return out;
}

std::vector<Tensor> patch_split(const Tensor& spectrogram, std::size_t patch) {
  if (spectrogram.rank() != 2) throw ShapeError("patch_split: expected frames x mel tensor");
  const std::size_t frames = spectrogram.extent(0), mels = spectrogram.extent(1);
  if (mels != patch) {
    throw ShapeError("patch_split: mel extent " + std::to_string(mels) + " vs patch " +
                     std::to_string(patch));
  }
  if (frames < patch) {
    throw ShapeError("patch_split: " + std::to_string(frames) + " frames < patch " +
                     std::to_string(patch));
  }
  const std::size_t count = frames / patch;
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::size_t p = 0; p < count; ++p) {
    Tensor t({patch, patch, 1});
    for (std::size_t time = 0; time < patch; ++time)
      for (std::size_t m = 0; m < patch; ++m) t(m, time, 0) = spectrogram(p * patch + time, m);
    out.push_back(std::move(t));
  }
  return out;
}

// ----------------------------------------------------------- Synth audio

namespace {

// Simple resonant band-pass (constant-skirt biquad) for the noise component.
struct Biquad {
  double b0, b1, b2, a1, a2;
  double z1 = 0.0, z2 = 0.0;

  static Biquad bandpass(double center_hz, double q, double sample_rate) {
    const double w0 = 2.0 * kPi * center_hz / sample_rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad f{};
    f.b0 = alpha / a0;
    f.b1 = 0.0;
    f.b2 = -alpha / a0;
    f.a1 = -2.0 * std::cos(w0) / a0;
    f.a2 = (1.0 - alpha) / a0;
    return f;
  }

  double process(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

}  // namespace

Tensor synth_clip(int class_id, int clip_id, std::uint64_t seed, double sample_rate,
                  double seconds) {
  const std::size_t n = static_cast<std::size_t>(std::llround(sample_rate * seconds));
  Rng rng = Rng(seed).derive(0x5A17u + static_cast<std::uint64_t>(class_id) * 1000003ULL +
                             static_cast<std::uint64_t>(clip_id));

  // Class timbre recipe: log-spaced fundamental, class-specific harmonic
  // rolloff and a class-pinned noise band. Clips jitter the fundamental and
  // phases only, so classes stay separable by mel energy centroid.
  const double f0_base = 110.0 * std::pow(20.0, class_id / 9.0);  // 110 Hz .. 2200 Hz
  const double f0 = f0_base * (1.0 + 0.02 * (rng.uniform() - 0.5));
  const double rolloff = 1.0 + 0.15 * (class_id % 4);
  const int partials = 4 + (class_id % 3);
  const double noise_center = 500.0 + 350.0 * class_id;
  const double noise_gain = 0.1;

  std::vector<double> phase(static_cast<std::size_t>(partials));
  for (auto& p : phase) p = 2.0 * kPi * rng.uniform();

  Biquad noise_filter = Biquad::bandpass(std::min(noise_center, sample_rate * 0.45), 4.0, sample_rate);

  Tensor out({n});
  const double lfo_rate = 2.0 + 0.5 * (class_id % 5);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double s = 0.0;
    for (int k = 1; k <= partials; ++k) {
      const double amp = std::pow(static_cast<double>(k), -rolloff);
      s += amp * std::sin(2.0 * kPi * f0 * k * t + phase[static_cast<std::size_t>(k - 1)]);
    }
    const double env = 0.8 + 0.2 * std::sin(2.0 * kPi * lfo_rate * t);
    const double noise = noise_filter.process(2.0 * rng.uniform() - 1.0);
    out[i] = 0.25 * env * s + noise_gain * noise;
  }
  return out;
}

LabeledDataset synth_audio_dataset(int classes, int per_class, std::uint64_t seed,
                                   const SpectrogramParams& params, double clip_seconds) {
  if (per_class < 1) throw ParamError("synth_audio_dataset: per_class must be >= 1");
  LabeledDataset ds;
  ds.class_count = classes;
  for (int c = 0; c < classes; ++c) {
    for (int clip = 0; clip < per_class; ++clip) {
      const Tensor samples = synth_clip(c, clip, seed, params.sample_rate, clip_seconds);
      const Tensor spec = log_mel_spectrogram(samples, params);
      for (Tensor& p : patch_split(spec, params.patch)) {
        ds.inputs.push_back(std::move(p));
        ds.labels.push_back(c);
      }
    }
  }
  return ds;
}

// --------------------------------------------------------------- Manifest

LabeledDataset load_manifest(const std::string& csv_path, const SpectrogramParams& params) {
  std::ifstream is(csv_path);
  if (!is) throw IoError("cannot open: " + csv_path);
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty manifest: " + csv_path);
  if (line != "path,label") {
    throw IoError("manifest must start with header 'path,label': " + csv_path);
  }
  LabeledDataset ds;
  int max_label = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw IoError("malformed manifest row: " + line);
    const std::string path = line.substr(0, comma);
    const int label = std::stoi(line.substr(comma + 1));
    max_label = std::max(max_label, label);
    WavData wav = read_wav(path);
    SpectrogramParams p = params;
    p.sample_rate = wav.sample_rate;
    const Tensor spec = log_mel_spectrogram(wav.samples, p);
    for (Tensor& t : patch_split(spec, p.patch)) {
      ds.inputs.push_back(std::move(t));
      ds.labels.push_back(label);
    }
  }
  ds.class_count = max_label + 1;
  return ds;
}

// ---------------------------------------------------------- Standardize

FeatureStats compute_feature_stats(const LabeledDataset& dataset) {
  if (dataset.size() == 0) throw ParamError("standardize: empty dataset");
  const std::size_t d = dataset.inputs[0].size();
  FeatureStats st{Tensor({d}), Tensor({d})};
  const double inv = 1.0 / static_cast<double>(dataset.size());
  for (const Tensor& x : dataset.inputs) {
    for (std::size_t i = 0; i < d; ++i) st.mean[i] += x[i];
  }
  for (std::size_t i = 0; i < d; ++i) st.mean[i] *= inv;
  for (const Tensor& x : dataset.inputs) {
    for (std::size_t i = 0; i < d; ++i) {
      const double dv = x[i] - st.mean[i];
      st.stddev[i] += dv * dv;
    }
  }
  for (std::size_t i = 0; i < d; ++i) st.stddev[i] = std::sqrt(st.stddev[i] * inv);
  return st;
}

void apply_standardize(LabeledDataset& dataset, const FeatureStats& stats) {
  for (Tensor& x : dataset.inputs) {
    if (x.size() != stats.mean.size()) {
      throw ShapeError("standardize: feature count mismatch");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = stats.stddev[i] > 0.0 ? (x[i] - stats.mean[i]) / stats.stddev[i] : 0.0;
    }
  }
}

void standardize(SplitDataset& split) {
  const FeatureStats st = compute_feature_stats(split.train);
  apply_standardize(split.train, st);
  apply_standardize(split.eval_set, st);
  apply_standardize(split.test, st);
}

void standardize(LabeledDataset& dataset) {
  const FeatureStats st = compute_feature_stats(dataset);
  apply_standardize(dataset, st);
}

}  // namespace nnkit
