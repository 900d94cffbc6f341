#include "stair/dataio.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace stair {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

double parse_cell(const std::string& field, std::size_t row, const std::string& col) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw std::runtime_error("load_csv: non-numeric cell '" + field + "' at row " +
                             std::to_string(row) + ", column '" + col + "'");
  }
  if (!std::isfinite(v)) {
    throw std::runtime_error("load_csv: non-finite value '" + field + "' at row " +
                             std::to_string(row) + ", column '" + col + "'");
  }
  return v;
}

}  // namespace

RawSeries load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto header = split_fields(line);
  if (header.empty() || header[0] != "date") {
    throw std::runtime_error("load_csv: first column must be 'date' in " + path);
  }
  if (header.size() < 2) {
    throw std::runtime_error("load_csv: no data columns in " + path);
  }

  RawSeries series;
  series.source = path;
  series.cols = header.size() - 1;
  series.names.assign(header.begin() + 1, header.end());

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("load_csv: ragged row " + std::to_string(row) + " in " + path +
                               ": expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < series.cols; ++c) {
      series.values.push_back(parse_cell(fields[c + 1], row, series.names[c]));
    }
  }
  series.rows = row;
  if (series.rows == 0) throw std::runtime_error("load_csv: no data rows in " + path);
  return series;
}

void write_csv(const RawSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open file for writing: " + path);
  out << "date";
  for (const auto& n : series.names) out << ',' << n;
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < series.rows; ++r) {
    out << r;
    for (std::size_t c = 0; c < series.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", series.at(r, c));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed: " + path);
}

SplitProtocol protocol_from_string(const std::string& s) {
  if (s == "ett-hourly") return SplitProtocol::EttHourly;
  if (s == "ett-minutely") return SplitProtocol::EttMinutely;
  if (s == "ratio-7-1-2") return SplitProtocol::Ratio712;
  throw std::invalid_argument("unknown split protocol: '" + s +
                              "' (expected ett-hourly|ett-minutely|ratio-7-1-2)");
}

std::string to_string(SplitProtocol p) {
  switch (p) {
    case SplitProtocol::EttHourly: return "ett-hourly";
    case SplitProtocol::EttMinutely: return "ett-minutely";
    case SplitProtocol::Ratio712: return "ratio-7-1-2";
  }
  return "ratio-7-1-2";
}

namespace {

Segment slice(const RawSeries& series, std::size_t begin, std::size_t end) {
  Segment seg;
  seg.rows = end - begin;
  seg.cols = series.cols;
  seg.values.assign(series.values.begin() + begin * series.cols,
                    series.values.begin() + end * series.cols);
  return seg;
}

}  // namespace

Splits split(const RawSeries& series, const SplitSpec& spec) {
  const std::size_t L = spec.lookback;
  std::size_t train_end = 0, val_end = 0, test_end = 0;
  switch (spec.protocol) {
    case SplitProtocol::EttHourly:
      train_end = 12 * 30 * 24;
      val_end = 16 * 30 * 24;
      test_end = 20 * 30 * 24;
      break;
    case SplitProtocol::EttMinutely:
      train_end = 12 * 30 * 96;
      val_end = 16 * 30 * 96;
      test_end = 20 * 30 * 96;
      break;
    case SplitProtocol::Ratio712: {
      const std::size_t n_train = series.rows * 7 / 10;
      const std::size_t n_test = series.rows * 2 / 10;
      train_end = n_train;
      test_end = series.rows;
      val_end = series.rows - n_test;
      break;
    }
  }
  if (series.rows < test_end) {
    throw std::runtime_error("split: series has " + std::to_string(series.rows) +
                             " rows, protocol " + to_string(spec.protocol) + " needs " +
                             std::to_string(test_end));
  }
  if (train_end < L) {
    throw std::runtime_error("split: train segment shorter than lookback");
  }
  Splits out;
  out.train = slice(series, 0, train_end);
  out.val = slice(series, train_end - L, val_end);
  out.test = slice(series, val_end - L, test_end);
  return out;
}

Scaler Scaler::fit(const Segment& train) {
  if (train.rows == 0) throw std::invalid_argument("fit_scaler: empty train segment");
  Scaler s;
  s.mean.resize(train.cols);
  s.std_dev.resize(train.cols);
  for (std::size_t c = 0; c < train.cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < train.rows; ++r) acc += train.at(r, c);
    const double mean = acc / static_cast<double>(train.rows);
    double sq = 0.0;
    for (std::size_t r = 0; r < train.rows; ++r) {
      const double d = train.at(r, c) - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / static_cast<double>(train.rows));
    s.mean[c] = mean;
    if (sd < kScalerStdFloor) {
      s.std_dev[c] = kScalerStdFloor;
      s.constant_columns.push_back(c);
      std::cerr << "warning: fit_scaler: column " << c
                << " is constant; std floored at " << kScalerStdFloor << "\n";
    } else {
      s.std_dev[c] = sd;
    }
  }
  return s;
}

void Scaler::apply(Segment& seg) const {
  if (seg.cols != mean.size()) throw std::invalid_argument("scaler: column count mismatch");
  for (std::size_t r = 0; r < seg.rows; ++r) {
    for (std::size_t c = 0; c < seg.cols; ++c) {
      double& v = seg.values[r * seg.cols + c];
      v = (v - mean[c]) / std_dev[c];
    }
  }
}

void Scaler::invert(Segment& seg) const {
  if (seg.cols != mean.size()) throw std::invalid_argument("scaler: column count mismatch");
  for (std::size_t r = 0; r < seg.rows; ++r) {
    for (std::size_t c = 0; c < seg.cols; ++c) {
      double& v = seg.values[r * seg.cols + c];
      v = v * std_dev[c] + mean[c];
    }
  }
}

void SyntheticSpec::validate() const {
  if (channels == 0) throw std::invalid_argument("synthetic: channels must be >= 1");
  if (order == 0) throw std::invalid_argument("synthetic: order must be >= 1");
  if (length <= order) throw std::invalid_argument("synthetic: length must exceed order");
  if (coupling < 0.0) throw std::invalid_argument("synthetic: coupling must be >= 0");
  if (noise < 0.0) throw std::invalid_argument("synthetic: noise must be >= 0");
  if (rule != "shared" && rule != "individual") {
    throw std::invalid_argument("synthetic: rule must be 'shared' or 'individual'");
  }
  if (!coeffs.empty() && coeffs.size() != 1 && coeffs.size() != channels) {
    throw std::invalid_argument("synthetic: coeffs must have 1 or C rows");
  }
  for (const auto& row : coeffs) {
    if (row.size() != order) {
      throw std::invalid_argument("synthetic: each coeffs row must have `order` entries");
    }
  }
}

namespace {

// Shared base pattern, rescaled so its absolute sum is `gain`.
std::vector<double> shared_pattern(std::size_t p, double gain) {
  static const double base[] = {0.5, 0.2, -0.15, 0.05, 0.03, -0.02};
  std::vector<double> a(p, 0.0);
  double abs_sum = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    a[k] = base[k % 6];
    abs_sum += std::fabs(a[k]);
  }
  for (auto& v : a) v *= gain / abs_sum;
  return a;
}

}  // namespace

std::vector<std::vector<double>> synthetic_coefficients(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t C = spec.channels;
  const std::size_t p = spec.order;
  // Keep the joint recursion stable: own gain shrinks as coupling grows.
  const double own_gain = std::max(0.25, 0.9 - 0.8 * spec.coupling);

  std::vector<std::vector<double>> a(C);
  if (!spec.coeffs.empty()) {
    for (std::size_t c = 0; c < C; ++c) {
      a[c] = spec.coeffs.size() == 1 ? spec.coeffs[0] : spec.coeffs[c];
    }
    return a;
  }
  if (spec.rule == "shared") {
    auto base = shared_pattern(p, own_gain);
    for (std::size_t c = 0; c < C; ++c) a[c] = base;
  } else {
    // Each channel keys on a different dominant lag, so no single shared
    // mapping fits all channels.
    for (std::size_t c = 0; c < C; ++c) {
      a[c].assign(p, 0.0);
      a[c][c % p] = (c % 2 == 0) ? own_gain : -own_gain;
    }
  }
  return a;
}

RawSeries gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t C = spec.channels;
  const std::size_t T = spec.length;
  const std::size_t p = spec.order;
  const auto a = synthetic_coefficients(spec);

  // Cross-channel structure: one temporal pattern g shared by all pairs,
  // per-pair weights w (row-normalized), scaled by kappa.
  // Recency-weighted cross pattern. The triangular topology feeds drivers
  // forward only, so the cross gain does not enter the stability bound.
  std::vector<double> g(p, 0.0);
  {
    double abs_sum = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      g[k] = 1.0 / static_cast<double>((k + 1) * (k + 1));
      abs_sum += g[k];
    }
    for (auto& v : g) v *= 2.5 / abs_sum;
  }
  // Directed coupling (channel c only reads channels j < c), so the cross
  // information in a driven channel's future is carried by the drivers'
  // windows and not already implied by its own history.
  std::mt19937_64 rng(mix_seed(spec.seed, 0x5eedc0de));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<std::vector<double>> w(C, std::vector<double>(C, 0.0));
  if (spec.coupling > 0.0 && C > 1) {
    for (std::size_t c = 1; c < C; ++c) {
      double abs_sum = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        double v = unit(rng);
        if (std::fabs(v) < 0.2) v = v < 0 ? -0.2 : 0.2;
        w[c][j] = v;
        abs_sum += std::fabs(v);
      }
      for (std::size_t j = 0; j < c; ++j) w[c][j] /= abs_sum;
    }
  }

  RawSeries series;
  series.rows = T;
  series.cols = C;
  series.values.assign(T * C, 0.0);
  series.source = "synthetic";
  series.names.resize(C);
  for (std::size_t c = 0; c < C; ++c) series.names[c] = "v" + std::to_string(c);

  std::mt19937_64 noise_rng(mix_seed(spec.seed, 0x6e015e));
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (std::size_t t = 0; t < p; ++t) {
    for (std::size_t c = 0; c < C; ++c) series.values[t * C + c] = gauss(noise_rng);
  }
  for (std::size_t t = p; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      double v = 0.0;
      for (std::size_t k = 0; k < p; ++k) v += a[c][k] * series.at(t - 1 - k, c);
      if (spec.coupling > 0.0) {
        double cross = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
          if (j == c || w[c][j] == 0.0) continue;
          double lagmix = 0.0;
          for (std::size_t k = 0; k < p; ++k) lagmix += g[k] * series.at(t - 1 - k, j);
          cross += w[c][j] * lagmix;
        }
        v += spec.coupling * cross;
      }
      if (spec.noise > 0.0) v += spec.noise * gauss(noise_rng);
      series.values[t * C + c] = v;
    }
  }
  return series;
}

}  // namespace stair
