// core/src/audio.cpp

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

#include "arraydiar/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "arraydiar/error.hpp"
#include "arraydiar/fft.hpp"
#include "arraydiar/io.hpp"

namespace arraydiar {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatIeeeFloat = 3;

struct WavFormat {
  std::uint16_t format_tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

MultiChannelAudio read_wav(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::kMissingFile, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open: " + path.string());

  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    raise(ErrorCode::kMalformedFile, "not a RIFF/WAVE file: " + path.string());
  }

  WavFormat fmt;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t chunk_size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      raise(ErrorCode::kMalformedFile, "truncated chunk in " + path.string());
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) {
        raise(ErrorCode::kMalformedFile, "short fmt chunk in " + path.string());
      }
      fmt.format_tag = read_u16(bytes.data() + body);
      fmt.channels = read_u16(bytes.data() + body + 2);
      fmt.sample_rate = read_u32(bytes.data() + body + 4);
      fmt.bits_per_sample = read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }

  if (!have_fmt || data == nullptr) {
    raise(ErrorCode::kMalformedFile, "missing fmt or data chunk: " + path.string());
  }
  if (fmt.channels == 0 || fmt.sample_rate == 0) {
    raise(ErrorCode::kMalformedFile, "bad fmt fields in " + path.string());
  }

  const bool pcm16 = fmt.format_tag == kFormatPcm && fmt.bits_per_sample == 16;
  const bool f32 = fmt.format_tag == kFormatIeeeFloat && fmt.bits_per_sample == 32;
  if (!pcm16 && !f32) {
    raise(ErrorCode::kUnsupportedFormat,
          "unsupported WAV encoding (tag " + std::to_string(fmt.format_tag) +
              ", " + std::to_string(fmt.bits_per_sample) + " bit) in " + path.string());
  }

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t stride = bytes_per_sample * fmt.channels;
  const std::size_t n_frames = data_size / stride;

  MultiChannelAudio audio;
  audio.sample_rate = static_cast<int>(fmt.sample_rate);
  audio.channels.assign(fmt.channels, std::vector<float>(n_frames));
  for (std::size_t t = 0; t < n_frames; ++t) {
    const unsigned char* frame = data + t * stride;
    for (std::uint16_t c = 0; c < fmt.channels; ++c) {
      if (pcm16) {
        const std::int16_t raw = static_cast<std::int16_t>(
            read_u16(frame + c * bytes_per_sample));
        audio.channels[c][t] = static_cast<float>(raw) / 32768.0f;
      } else {
        float v;
        std::memcpy(&v, frame + c * bytes_per_sample, 4);
        audio.channels[c][t] = v;
      }
    }
  }
  return audio;
}

void write_wav(const MultiChannelAudio& audio, const std::filesystem::path& path,
               WavEncoding encoding) {
  require(!audio.channels.empty(), ErrorCode::kInvalidArgument,
          "write_wav: no channels");
  require(audio.sample_rate > 0, ErrorCode::kInvalidArgument,
          "write_wav: sample_rate must be positive");
  const std::size_t n = audio.frames();
  for (const auto& ch : audio.channels) {
    require(ch.size() == n, ErrorCode::kInvalidArgument,
            "write_wav: channels differ in length");
  }

  const std::uint16_t channels = static_cast<std::uint16_t>(audio.channel_count());
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const std::uint16_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(n * channels * bytes_per_sample);

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, pcm16 ? kFormatPcm : kFormatIeeeFloat);
  put_u16(out, channels);
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * channels *
                   bytes_per_sample);
  put_u16(out, static_cast<std::uint16_t>(channels * bytes_per_sample));
  put_u16(out, static_cast<std::uint16_t>(bytes_per_sample * 8));
  out += "data";
  put_u32(out, data_size);

  for (std::size_t t = 0; t < n; ++t) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      const float v = audio.channels[c][t];
      if (pcm16) {
        long q = std::lrintf(v * 32768.0f);
        q = std::clamp<long>(q, -32768, 32767);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        char raw[4];
        std::memcpy(raw, &v, 4);
        out.append(raw, 4);
      }
    }
  }

  AtomicFileWriter writer(path, /*binary=*/true);
  writer.stream().write(out.data(), static_cast<std::streamsize>(out.size()));
  writer.commit();
}

void StftConfig::validate() const {
  require(window_len >= 1 && hop >= 1, ErrorCode::kInvalidArgument,
          "stft: window_len and hop must be positive");
  require(hop <= window_len, ErrorCode::kInvalidArgument,
          "stft: hop must not exceed window_len");
  require(window_len <= fft_size, ErrorCode::kInvalidArgument,
          "stft: window_len must not exceed fft_size");
  require(is_power_of_two(static_cast<std::size_t>(fft_size)),
          ErrorCode::kInvalidArgument, "stft: fft_size must be a power of two");
}

std::vector<double> make_window(const StftConfig& cfg) {
  std::vector<double> w(static_cast<std::size_t>(cfg.window_len), 1.0);
  const double n = static_cast<double>(cfg.window_len);
  switch (cfg.window) {
    case WindowKind::kHann:
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
      }
      break;
    case WindowKind::kHamming:
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / n);
      }
      break;
    case WindowKind::kRect:
      break;
  }
  return w;
}

ChannelSpectrogram stft(const MultiChannelAudio& audio, const StftConfig& cfg) {
  cfg.validate();
  require(audio.channel_count() >= 1, ErrorCode::kInvalidArgument,
          "stft: audio has no channels");
  const std::size_t len = audio.frames();
  require(len >= static_cast<std::size_t>(cfg.window_len),
          ErrorCode::kInvalidArgument,
          "stft: audio shorter than one analysis window");

  const std::size_t n_frames =
      1 + (len - static_cast<std::size_t>(cfg.window_len)) /
              static_cast<std::size_t>(cfg.hop);
  const std::size_t n_bins = static_cast<std::size_t>(cfg.fft_size) / 2 + 1;
  const auto window = make_window(cfg);

  ChannelSpectrogram spec;
  spec.sample_rate = audio.sample_rate;
  spec.hop = cfg.hop;
  spec.window_len = cfg.window_len;
  spec.fft_size = cfg.fft_size;
  spec.frame_count = n_frames;
  spec.bin_count = n_bins;
  spec.values.resize(audio.channels.size());

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(cfg.fft_size));
  for (std::size_t c = 0; c < audio.channels.size(); ++c) {
    const auto& samples = audio.channels[c];
    auto& out = spec.values[c];
    out.resize(n_frames * n_bins);
    for (std::size_t t = 0; t < n_frames; ++t) {
      const std::size_t offset = t * static_cast<std::size_t>(cfg.hop);
      std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
      for (int i = 0; i < cfg.window_len; ++i) {
        buf[static_cast<std::size_t>(i)] =
            window[static_cast<std::size_t>(i)] *
            static_cast<double>(samples[offset + static_cast<std::size_t>(i)]);
      }
      fft_inplace(buf);
      for (std::size_t f = 0; f < n_bins; ++f) out[t * n_bins + f] = buf[f];
    }
  }
  return spec;
}

MultiChannelAudio istft(const ChannelSpectrogram& spec, const StftConfig& cfg,
                        std::size_t length) {
  cfg.validate();
  const auto window = make_window(cfg);
  const std::size_t n_bins = spec.bin_count;

  MultiChannelAudio audio;
  audio.sample_rate = spec.sample_rate;
  audio.channels.assign(spec.values.size(), std::vector<float>(length, 0.0f));

  std::vector<double> acc(length, 0.0);
  std::vector<double> norm(length, 0.0);
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(cfg.fft_size));

  for (std::size_t c = 0; c < spec.values.size(); ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(norm.begin(), norm.end(), 0.0);
    for (std::size_t t = 0; t < spec.frame_count; ++t) {
      // Rebuild the full spectrum from the half-spectrum.
      for (std::size_t f = 0; f < n_bins; ++f) buf[f] = spec.values[c][t * n_bins + f];
      for (std::size_t f = n_bins; f < buf.size(); ++f) {
        buf[f] = std::conj(buf[buf.size() - f]);
      }
      ifft_inplace(buf);
      const std::size_t offset = t * static_cast<std::size_t>(cfg.hop);
      for (int i = 0; i < cfg.window_len; ++i) {
        const std::size_t n = offset + static_cast<std::size_t>(i);
        if (n >= length) break;
        const double w = window[static_cast<std::size_t>(i)];
        acc[n] += w * buf[static_cast<std::size_t>(i)].real();
        norm[n] += w * w;
      }
    }
    for (std::size_t n = 0; n < length; ++n) {
      audio.channels[c][n] =
          norm[n] > 1e-12 ? static_cast<float>(acc[n] / norm[n]) : 0.0f;
    }
  }
  return audio;
}

Matrix lps(const ChannelSpectrogram& spec, int channel) {
  require(channel >= 0 && channel < spec.channel_count(),
          ErrorCode::kInvalidArgument,
          "lps: channel " + std::to_string(channel) + " out of range");
  Matrix out(spec.frame_count, spec.bin_count);
  const auto& v = spec.values[static_cast<std::size_t>(channel)];
  for (std::size_t t = 0; t < spec.frame_count; ++t) {
    for (std::size_t f = 0; f < spec.bin_count; ++f) {
      out(t, f) = std::log(std::norm(v[t * spec.bin_count + f]) + kLpsEpsilon);
    }
  }
  return out;
}

}  // namespace arraydiar
