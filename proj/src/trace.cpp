// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/trace.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "tdg/error.hpp"

namespace tdg {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kInvariant: return "invariant";
    case ErrorCode::kMissingKeyframe: return "missing_keyframe";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kSingleClass: return "single_class";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kState: return "state";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

const StepRecord* DenoisingTrace::find_step(std::uint32_t t) const {
  for (const auto& s : steps) {
    if (s.t == t) return &s;
  }
  return nullptr;
}

namespace {

// Upper bound on any single dimension; guards allocation on corrupt headers.
constexpr std::uint64_t kMaxDim = 1u << 16;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const char* p, std::size_t n) {
    out_.write(p, static_cast<std::streamsize>(n));
    count_ += n;
  }
  void u16(std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    bytes(b, 2);
  }
  void u32(std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    bytes(b, 4);
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  std::size_t count() const { return count_; }

 private:
  std::ostream& out_;
  std::size_t count_ = 0;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* p, std::size_t n, const char* what) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      fail(ErrorCode::kTruncated,
           std::string("trace truncated while reading ") + what);
    }
  }
  std::uint16_t u16(const char* what) {
    unsigned char b[2];
    bytes(reinterpret_cast<char*>(b), 2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }
  void f32s(std::vector<float>& dst, std::size_t n, const char* what) {
    dst.resize(n);
    std::vector<unsigned char> raw(4 * n);
    bytes(reinterpret_cast<char*>(raw.data()), raw.size(), what);
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned char* b = raw.data() + 4 * i;
      std::uint32_t v = static_cast<std::uint32_t>(b[0]) |
                        (static_cast<std::uint32_t>(b[1]) << 8) |
                        (static_cast<std::uint32_t>(b[2]) << 16) |
                        (static_cast<std::uint32_t>(b[3]) << 24);
      dst[i] = std::bit_cast<float>(v);
    }
  }

 private:
  std::istream& in_;
};

void add(ValidationReport& r, std::string invariant, std::string detail) {
  r.push_back({std::move(invariant), std::move(detail)});
}

}  // namespace

ValidationReport validate_trace(const DenoisingTrace& trace, const TraceLabel* label) {
  ValidationReport report;
  const std::size_t n = trace.num_nodes();
  if (trace.prompt_len < 1) add(report, "dims.prompt_len", "prompt_len must be >= 1");
  if (trace.resp_len < 1) add(report, "dims.resp_len", "resp_len must be >= 1");
  if (trace.hidden_dim < 1) add(report, "dims.hidden_dim", "hidden_dim must be >= 1");
  if (trace.steps.empty()) add(report, "steps.nonempty", "trace has no steps");

  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const StepRecord& s = trace.steps[k];
    const std::string where = "step " + std::to_string(k) + " (t=" + std::to_string(s.t) + ")";
    if (k > 0 && s.t >= trace.steps[k - 1].t) {
      add(report, "steps.descending_t", where + ": time not strictly decreasing");
    }
    if (s.attention.size() != n * n) {
      add(report, "attention.shape", where + ": expected " + std::to_string(n * n) +
                                         " attention entries, got " +
                                         std::to_string(s.attention.size()));
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        bool range_ok = true;
        for (std::size_t j = 0; j < n; ++j) {
          const float a = s.attention[i * n + j];
          if (!(a >= 0.0f && a <= 1.0f)) range_ok = false;
          sum += a;
        }
        if (!range_ok) {
          add(report, "attention.range", where + ": row " + std::to_string(i) +
                                             " has entries outside [0,1]");
        }
        if (!(std::fabs(sum - 1.0) <= kRowSumTolerance)) {
          std::ostringstream os;
          os << where << ": row " << i << " sums to " << sum;
          add(report, "attention.row_sum", os.str());
        }
      }
    }
    if (s.hidden.size() != n * trace.hidden_dim) {
      add(report, "hidden.shape", where + ": expected " +
                                      std::to_string(n * trace.hidden_dim) +
                                      " hidden entries");
    } else {
      for (float h : s.hidden) {
        if (!std::isfinite(h)) {
          add(report, "hidden.finite", where + ": non-finite hidden state");
          break;
        }
      }
    }
    if (trace.has_entropy) {
      if (s.entropy.size() != n) {
        add(report, "entropy.shape", where + ": expected " + std::to_string(n) + " entropies");
      } else {
        for (float e : s.entropy) {
          if (!(e >= 0.0f)) {
            add(report, "entropy.nonnegative", where + ": negative entropy");
            break;
          }
        }
      }
    } else if (!s.entropy.empty()) {
      add(report, "entropy.flag", where + ": entropies stored but flag unset");
    }
    if (trace.has_token_ids) {
      if (s.token_ids.size() != n) {
        add(report, "token_ids.shape", where + ": expected " + std::to_string(n) + " token ids");
      }
    } else if (!s.token_ids.empty()) {
      add(report, "token_ids.flag", where + ": token ids stored but flag unset");
    }
  }

  if (label != nullptr) {
    if (label->response_label != 0 && label->response_label != 1) {
      add(report, "label.binary", "response label must be 0 or 1");
    }
    if (label->token_labels) {
      if (label->token_labels->size() != trace.resp_len) {
        add(report, "label.token_length",
            "token_labels has length " + std::to_string(label->token_labels->size()) +
                ", expected R=" + std::to_string(trace.resp_len));
      }
      for (int v : *label->token_labels) {
        if (v != 0 && v != 1) {
          add(report, "label.token_binary", "token labels must be 0 or 1");
          break;
        }
      }
    }
  }
  return report;
}

void require_valid(const DenoisingTrace& trace) {
  auto report = validate_trace(trace);
  if (!report.empty()) {
    fail(ErrorCode::kInvariant,
         "trace violates " + report.front().invariant + ": " + report.front().detail);
  }
}

std::size_t write_trace(const DenoisingTrace& trace, std::ostream& out) {
  require_valid(trace);
  Writer w(out);
  w.bytes(kTraceMagic, 4);
  w.u16(kTraceVersion);
  std::uint16_t flags = 0;
  if (trace.has_entropy) flags |= kFlagEntropy;
  if (trace.has_token_ids) flags |= kFlagTokenIds;
  w.u16(flags);
  w.u32(trace.prompt_len);
  w.u32(trace.resp_len);
  w.u32(static_cast<std::uint32_t>(trace.steps.size()));
  w.u32(trace.hidden_dim);
  for (const auto& s : trace.steps) {
    w.u32(s.t);
    for (float a : s.attention) w.f32(a);
    for (float h : s.hidden) w.f32(h);
    if (trace.has_entropy) {
      for (float e : s.entropy) w.f32(e);
    }
    if (trace.has_token_ids) {
      for (std::uint32_t id : s.token_ids) w.u32(id);
    }
  }
  if (!out) fail(ErrorCode::kIo, "failed writing trace");
  return w.count();
}

std::vector<std::uint8_t> encode_trace(const DenoisingTrace& trace) {
  std::ostringstream os(std::ios::binary);
  write_trace(trace, os);
  const std::string s = os.str();
  return {s.begin(), s.end()};
}

DenoisingTrace read_trace(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kTraceMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, "not a trace blob: wrong magic");
  }
  const std::uint16_t version = r.u16("version");
  if (version != kTraceVersion) {
    fail(ErrorCode::kUnsupportedVersion,
         "unsupported trace version " + std::to_string(version));
  }
  const std::uint16_t flags = r.u16("flags");
  if (flags & ~(kFlagEntropy | kFlagTokenIds)) {
    fail(ErrorCode::kUnsupportedVersion,
         "unsupported trace flags " + std::to_string(flags));
  }
  DenoisingTrace trace;
  trace.has_entropy = flags & kFlagEntropy;
  trace.has_token_ids = flags & kFlagTokenIds;
  trace.prompt_len = r.u32("prompt_len");
  trace.resp_len = r.u32("resp_len");
  const std::uint32_t steps = r.u32("step count");
  trace.hidden_dim = r.u32("hidden_dim");
  const std::uint64_t n = std::uint64_t{trace.prompt_len} + trace.resp_len;
  if (n > kMaxDim || trace.hidden_dim > kMaxDim || steps > kMaxDim) {
    fail(ErrorCode::kInvariant, "trace header declares implausible sizes");
  }
  trace.steps.resize(steps);
  for (auto& s : trace.steps) {
    s.t = r.u32("step time");
    r.f32s(s.attention, n * n, "attention");
    r.f32s(s.hidden, n * trace.hidden_dim, "hidden states");
    if (trace.has_entropy) r.f32s(s.entropy, n, "entropies");
    if (trace.has_token_ids) {
      s.token_ids.resize(n);
      for (auto& id : s.token_ids) id = r.u32("token ids");
    }
  }
  return trace;
}

DenoisingTrace decode_trace(const std::vector<std::uint8_t>& bytes) {
  std::istringstream is(std::string(bytes.begin(), bytes.end()), std::ios::binary);
  DenoisingTrace trace = read_trace(is);
  if (is.peek() != std::char_traits<char>::eof()) {
    fail(ErrorCode::kInvariant, "trailing bytes after declared trace payload");
  }
  return trace;
}

void save_trace(const DenoisingTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open for writing: " + path);
  write_trace(trace, out);
}

DenoisingTrace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open trace: " + path);
  DenoisingTrace trace = read_trace(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(ErrorCode::kInvariant, "trailing bytes after declared trace payload: " + path);
  }
  return trace;
}

}  // namespace tdg
