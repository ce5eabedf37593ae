#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ratesync {

/// Logarithmic viewing-quality model Q = alpha1 * ln(alpha2 * s/S + alpha3).
struct QoEModel {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha3 = 1.0;

  void validate() const {
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0) || !(alpha3 >= 1.0)) {
      throw std::invalid_argument("QoEModel: need alpha1 > 0, alpha2 > 0, alpha3 >= 1");
    }
  }
};

struct MosPoint {
  double rate_kbps = 0.0;
  double mos = 0.0;
};

/// Mean-opinion-score samples for one video plus the rate used as the
/// normalization denominator when fitting.
struct MosDataset {
  std::string video_name;
  std::vector<MosPoint> points;
  double reference_rate = 0.0;  // kbits/s

  void validate() const {
    if (points.size() < 2) {
      throw std::invalid_argument("MosDataset: need at least 2 points");
    }
    if (!(reference_rate > 0.0)) {
      throw std::invalid_argument("MosDataset: reference_rate must be positive");
    }
    std::set<double> rates;
    for (const MosPoint& p : points) {
      if (!(p.rate_kbps > 0.0)) {
        throw std::invalid_argument("MosDataset: rates must be strictly positive");
      }
      if (p.mos < 1.0 || p.mos > 5.0) {
        throw std::invalid_argument("MosDataset: MOS outside [1, 5]");
      }
      if (!rates.insert(p.rate_kbps).second) {
        throw std::invalid_argument("MosDataset: duplicate rate");
      }
    }
  }
};

// How a raw MOS table is turned into a fitting dataset:
//   kMaxRate        -- keep every row, normalize by the largest rate;
//   kFittingWindow  -- drop rows above the second-largest distinct rate and
//                      normalize by that rate (the top row is treated as a
//                      saturated outlier).
enum class Normalization { kMaxRate, kFittingWindow };

inline std::string_view to_string(Normalization n) {
  return n == Normalization::kMaxRate ? "a" : "b";
}

inline double evaluate(const QoEModel& model, double allocated, double requested) {
  if (!(requested > 0.0)) {
    throw std::invalid_argument("evaluate: requested size must be positive");
  }
  if (allocated < 0.0) {
    throw std::invalid_argument("evaluate: negative allocated size");
  }
  return model.alpha1 * std::log(model.alpha2 * allocated / requested + model.alpha3);
}

inline double mse(const QoEModel& model, const MosDataset& dataset) {
  dataset.validate();
  double sum = 0.0;
  for (const MosPoint& p : dataset.points) {
    const double err = evaluate(model, p.rate_kbps, dataset.reference_rate) - p.mos;
    sum += err * err;
  }
  return sum / static_cast<double>(dataset.points.size());
}

inline MosDataset normalize(const MosDataset& dataset, Normalization normalization) {
  dataset.validate();
  MosDataset out = dataset;
  std::vector<double> rates;
  rates.reserve(dataset.points.size());
  for (const MosPoint& p : dataset.points) rates.push_back(p.rate_kbps);
  std::sort(rates.begin(), rates.end());
  if (normalization == Normalization::kMaxRate) {
    out.reference_rate = rates.back();
    return out;
  }
  const double window_top = rates[rates.size() - 2];
  out.points.clear();
  for (const MosPoint& p : dataset.points) {
    if (p.rate_kbps <= window_top) out.points.push_back(p);
  }
  out.reference_rate = window_top;
  out.validate();
  return out;
}

// Rows restricted to [min_rate, max_rate] and normalized by max_rate.
inline MosDataset restrict_window(const MosDataset& dataset, double min_rate, double max_rate) {
  dataset.validate();
  if (!(min_rate > 0.0) || !(max_rate > min_rate)) {
    throw std::invalid_argument("restrict_window: need 0 < min_rate < max_rate");
  }
  MosDataset out = dataset;
  out.points.clear();
  for (const MosPoint& p : dataset.points) {
    if (p.rate_kbps >= min_rate && p.rate_kbps <= max_rate) out.points.push_back(p);
  }
  out.reference_rate = max_rate;
  out.validate();
  return out;
}

struct FitResult {
  QoEModel model;
  double mse = 0.0;
};

namespace detail {

// For fixed alpha2 the optimal alpha1 is a one-coefficient linear least
// squares; returns {mse, alpha1}.
inline std::pair<double, double> profile_fit(const MosDataset& dataset, double alpha2,
                                             double alpha3) {
  double cross = 0.0;
  double norm = 0.0;
  for (const MosPoint& p : dataset.points) {
    const double t = std::log(alpha2 * p.rate_kbps / dataset.reference_rate + alpha3);
    cross += t * p.mos;
    norm += t * t;
  }
  if (!(norm > 0.0)) {
    return {std::numeric_limits<double>::infinity(), 0.0};
  }
  const double alpha1 = cross / norm;
  if (!(alpha1 > 0.0)) {
    return {std::numeric_limits<double>::infinity(), 0.0};
  }
  double sum = 0.0;
  for (const MosPoint& p : dataset.points) {
    const double t = std::log(alpha2 * p.rate_kbps / dataset.reference_rate + alpha3);
    const double err = alpha1 * t - p.mos;
    sum += err * err;
  }
  return {sum / static_cast<double>(dataset.points.size()), alpha1};
}

}  // namespace detail

// Least-squares fit of (alpha1, alpha2) with alpha3 held fixed. The search is
// one-dimensional over alpha2: a 600-point log-spaced scan of [1e-1, 1e6]
// followed by golden-section refinement between the neighbours of the best
// grid point. Deterministic.
inline FitResult fit(const MosDataset& dataset, double alpha3 = 1.0) {
  dataset.validate();
  if (!(alpha3 >= 1.0)) {
    throw std::invalid_argument("fit: alpha3 must be >= 1");
  }
  const double first_mos = dataset.points.front().mos;
  const bool all_equal = std::all_of(dataset.points.begin(), dataset.points.end(),
                                     [&](const MosPoint& p) { return p.mos == first_mos; });
  if (all_equal) {
    throw std::invalid_argument("fit: uninformative dataset (all MOS values equal)");
  }

  constexpr int kGridPoints = 600;
  const double log_lo = std::log(1e-1);
  const double log_hi = std::log(1e6);
  double best_mse = std::numeric_limits<double>::infinity();
  int best_index = 0;
  for (int i = 0; i < kGridPoints; ++i) {
    const double a2 = std::exp(log_lo + (log_hi - log_lo) * i / (kGridPoints - 1));
    const double m = detail::profile_fit(dataset, a2, alpha3).first;
    if (m < best_mse) {
      best_mse = m;
      best_index = i;
    }
  }

  // Golden-section on log(alpha2) between the best point's neighbours.
  const auto grid_log = [&](int i) {
    return log_lo + (log_hi - log_lo) * std::clamp(i, 0, kGridPoints - 1) / (kGridPoints - 1);
  };
  double lo = grid_log(best_index - 1);
  double hi = grid_log(best_index + 1);
  constexpr double kGolden = 0.6180339887498949;
  double c = hi - kGolden * (hi - lo);
  double d = lo + kGolden * (hi - lo);
  double fc = detail::profile_fit(dataset, std::exp(c), alpha3).first;
  double fd = detail::profile_fit(dataset, std::exp(d), alpha3).first;
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kGolden * (hi - lo);
      fc = detail::profile_fit(dataset, std::exp(c), alpha3).first;
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kGolden * (hi - lo);
      fd = detail::profile_fit(dataset, std::exp(d), alpha3).first;
    }
  }
  const double alpha2 = std::exp(0.5 * (lo + hi));
  const auto [final_mse, alpha1] = detail::profile_fit(dataset, alpha2, alpha3);

  FitResult result;
  result.model = QoEModel{alpha1, alpha2, alpha3};
  result.model.validate();
  result.mse = final_mse;
  return result;
}

// CSV ingestion. Format: header line "rate_kbps,mos", one data row per point,
// '#' starts a comment line. The reference rate defaults to the largest rate
// seen (normalization "a"); use normalize()/restrict_window() to refit
// differently.
inline MosDataset load_mos_csv(std::istream& in, std::string_view name) {
  MosDataset dataset;
  dataset.video_name = std::string(name);
  std::string line;
  int line_number = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!header_seen) {
      std::string compact;
      for (char ch : line) {
        if (!std::isspace(static_cast<unsigned char>(ch))) compact.push_back(ch);
      }
      if (compact != "rate_kbps,mos") {
        throw std::runtime_error(dataset.video_name + ":" + std::to_string(line_number) +
                                 ": expected header 'rate_kbps,mos'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error(dataset.video_name + ":" + std::to_string(line_number) +
                               ": malformed row (expected 'rate,mos')");
    }
    const auto parse_field = [&](std::string text) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(text, &used);
      } catch (const std::exception&) {
        throw std::runtime_error(dataset.video_name + ":" + std::to_string(line_number) +
                                 ": non-numeric field '" + text + "'");
      }
      while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
      if (used != text.size()) {
        throw std::runtime_error(dataset.video_name + ":" + std::to_string(line_number) +
                                 ": trailing junk in field '" + text + "'");
      }
      return value;
    };
    MosPoint point;
    point.rate_kbps = parse_field(line.substr(0, comma));
    point.mos = parse_field(line.substr(comma + 1));
    if (point.mos < 1.0 || point.mos > 5.0) {
      throw std::runtime_error(dataset.video_name + ":" + std::to_string(line_number) +
                               ": MOS outside [1, 5]");
    }
    dataset.points.push_back(point);
  }
  if (dataset.points.empty()) {
    throw std::runtime_error(dataset.video_name + ": no data rows");
  }
  for (const MosPoint& p : dataset.points) {
    dataset.reference_rate = std::max(dataset.reference_rate, p.rate_kbps);
  }
  dataset.validate();
  return dataset;
}

inline MosDataset load_mos_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open MOS dataset: " + path);
  }
  std::string name = path;
  const auto slash = name.find_last_of("/\\");
  if (slash != std::string::npos) name = name.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return load_mos_csv(in, name);
}

}  // namespace ratesync
