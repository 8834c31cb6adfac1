// core/include/arraydiar/audio.hpp

// Copyright 2026  ArrayDiar Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <filesystem>
#include <vector>

#include "arraydiar/matrix.hpp"

namespace arraydiar {

/// Synchronized multi-channel sample matrix. Samples are normalized to
/// [-1, 1]; all channels have equal length.
struct MultiChannelAudio {
  int sample_rate = 0;
  std::vector<std::vector<float>> channels;

  int channel_count() const { return static_cast<int>(channels.size()); }
  std::size_t frames() const { return channels.empty() ? 0 : channels[0].size(); }
  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(frames()) / sample_rate : 0.0;
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

/// Reads a RIFF WAV file (PCM 16-bit or IEEE float32, any channel count).
/// Distinct failures: kMissingFile, kMalformedFile, kUnsupportedFormat.
MultiChannelAudio read_wav(const std::filesystem::path& path);

/// Writes a WAV file readable by read_wav. float32 (the default) round-trips
/// samples bit-exactly; pcm16 quantizes.
void write_wav(const MultiChannelAudio& audio, const std::filesystem::path& path,
               WavEncoding encoding = WavEncoding::kFloat32);

enum class WindowKind { kHann, kHamming, kRect };

struct StftConfig {
  int window_len = 400;  // 25 ms at 16 kHz
  int hop = 160;         // 10 ms
  int fft_size = 512;    // power of two
  WindowKind window = WindowKind::kHann;

  void validate() const;
  double hop_seconds(int sample_rate) const {
    return static_cast<double>(hop) / sample_rate;
  }
};

/// Periodic analysis window of length cfg.window_len.
std::vector<double> make_window(const StftConfig& cfg);

/// Complex STFT per channel. Frame t covers samples [t*hop, t*hop+window_len);
/// frames = 1 + floor((len - window_len)/hop).
struct ChannelSpectrogram {
  int sample_rate = 0;
  int hop = 0;
  int window_len = 0;
  int fft_size = 0;
  std::size_t frame_count = 0;
  std::size_t bin_count = 0;  // fft_size/2 + 1
  // values[channel][t*bin_count + f]
  std::vector<std::vector<std::complex<double>>> values;

  int channel_count() const { return static_cast<int>(values.size()); }
  std::complex<double> at(int channel, std::size_t t, std::size_t f) const {
    return values[channel][t * bin_count + f];
  }
  double bin_hz(std::size_t f) const {
    return static_cast<double>(f) * sample_rate / fft_size;
  }
  double frame_center_seconds(std::size_t t) const {
    return (static_cast<double>(t) * hop + 0.5 * window_len) / sample_rate;
  }
  double hop_seconds() const { return static_cast<double>(hop) / sample_rate; }
};

ChannelSpectrogram stft(const MultiChannelAudio& audio, const StftConfig& cfg);

/// Weighted overlap-add inverse; reconstructs length samples. With a Hann
/// window at 50%+ overlap the interior matches the input to ~1e-6 RMS.
MultiChannelAudio istft(const ChannelSpectrogram& spec, const StftConfig& cfg,
                        std::size_t length);

inline constexpr double kLpsEpsilon = 1e-10;

/// Logarithmic power spectrum of one channel: log(|X|^2 + kLpsEpsilon).
Matrix lps(const ChannelSpectrogram& spec, int channel);

}  // namespace arraydiar
