#include "msmaad/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace msmaad::io {

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "binary32 floats required");

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void require_file(const fs::path& path) {
  if (!fs::exists(path)) throw InvalidInput("file not found: " + path.string());
}

std::string format_number(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const fs::path& path) {
  require_file(path);
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + ": missing header row");
  table.header = split_csv_line(line);
  const std::size_t cols = table.header.size();
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != cols) {
      throw InvalidInput(path.string() + ": row " + std::to_string(row) + " has " +
                         std::to_string(cells.size()) + " fields, expected " +
                         std::to_string(cols));
    }
    std::vector<double> values(cols);
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& cell = cells[c];
      const char* first = cell.data();
      const char* last = first + cell.size();
      if (first != last && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, values[c]);
      if (ec != std::errc() || ptr != last || cell.empty()) {
        throw InvalidInput(path.string() + ": unparsable value '" + cell + "' at row " +
                           std::to_string(row) + ", column " + std::to_string(c));
      }
      if (!std::isfinite(values[c])) {
        throw InvalidInput(path.string() + ": non-finite value at row " + std::to_string(row) +
                           ", column " + std::to_string(c));
      }
    }
    table.rows.push_back(std::move(values));
    ++row;
  }
  return table;
}

float read_le_float(const unsigned char* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void write_le_float(float v, unsigned char* p) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  p[0] = static_cast<unsigned char>(bits);
  p[1] = static_cast<unsigned char>(bits >> 8);
  p[2] = static_cast<unsigned char>(bits >> 16);
  p[3] = static_cast<unsigned char>(bits >> 24);
}

void write_sidecar(const MultichannelSeries& series, const fs::path& path) {
  Json meta;
  meta["rows"] = series.samples();
  meta["cols"] = series.channels();
  meta["fs_hz"] = series.fs_hz();
  meta["labels"] = series.labels();
  write_json(meta, sidecar_path(path));
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  return out;
}

}  // namespace

SeriesFormat format_from_path(const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".csv") return SeriesFormat::kCsv;
  if (ext == ".f32" || ext == ".bin" || ext == ".raw") return SeriesFormat::kRawF32;
  throw InvalidInput("cannot infer series format from extension of " + path.string());
}

fs::path sidecar_path(const fs::path& path) {
  return fs::path(path.string() + ".meta.json");
}

Json read_json(const fs::path& path) {
  require_file(path);
  std::ifstream in(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

void write_json(const Json& doc, const fs::path& path) {
  write_text(doc.dump() + "\n", path);
}

void write_text(const std::string& text, const fs::path& path) {
  auto out = open_out(path);
  out << text;
  if (!out) throw InvalidInput("failed writing " + path.string());
}

MultichannelSeries load_series(const fs::path& path, SeriesFormat format,
                               std::optional<double> fs_hz) {
  require_file(path);
  const fs::path meta_path = sidecar_path(path);
  std::optional<Json> meta;
  if (fs::exists(meta_path)) meta = read_json(meta_path);

  try {
    if (format == SeriesFormat::kCsv) {
      if (!fs_hz) {
        if (!meta || !meta->contains("fs_hz")) {
          throw InvalidInput(path.string() + ": sampling rate unknown (no sidecar, none given)");
        }
        fs_hz = meta->at("fs_hz").get<double>();
      }
      CsvTable table = read_csv(path);
      if (table.rows.empty()) throw InvalidInput(path.string() + ": no data rows");
      Matrix data(static_cast<Index>(table.rows.size()), static_cast<Index>(table.header.size()));
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < table.header.size(); ++c) {
          data(static_cast<Index>(r), static_cast<Index>(c)) = table.rows[r][c];
        }
      }
      return MultichannelSeries(std::move(data), *fs_hz, std::move(table.header));
    }

    if (!meta) throw InvalidInput(path.string() + ": missing sidecar " + meta_path.string());
    const auto rows = meta->at("rows").get<Index>();
    const auto cols = meta->at("cols").get<Index>();
    const double meta_fs = meta->at("fs_hz").get<double>();
    if (fs_hz && *fs_hz != meta_fs) {
      throw InvalidInput(path.string() + ": sampling rate disagrees with sidecar");
    }
    std::vector<std::string> labels;
    if (meta->contains("labels")) labels = meta->at("labels").get<std::vector<std::string>>();
    if (rows < 1 || cols < 1) throw InvalidInput(path.string() + ": sidecar dimensions invalid");
    const auto expected = static_cast<std::uintmax_t>(rows * cols * 4);
    const auto actual = fs::file_size(path);
    if (expected != actual) {
      throw InvalidInput(path.string() + ": byte count mismatch (sidecar implies " +
                         std::to_string(expected) + " bytes, file has " +
                         std::to_string(actual) + ")");
    }
    std::ifstream in(path, std::ios::binary);
    std::vector<unsigned char> bytes(expected);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expected));
    if (!in) throw InvalidInput("failed reading " + path.string());
    Matrix data(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        data(r, c) = read_le_float(bytes.data() + 4 * (r * cols + c));
      }
    }
    return MultichannelSeries(std::move(data), meta_fs, std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(meta_path.string() + ": malformed sidecar (" + e.what() + ")");
  } catch (const InvalidInput& e) {
    const std::string what = e.what();
    if (what.find(path.string()) != std::string::npos) throw;
    throw InvalidInput(path.string() + ": " + what);
  }
}

MultichannelSeries load_series(const fs::path& path, std::optional<double> fs_hz) {
  return load_series(path, format_from_path(path), fs_hz);
}

void save_series(const MultichannelSeries& series, const fs::path& path, SeriesFormat format) {
  if (format == SeriesFormat::kCsv) {
    std::string text;
    const auto& labels = series.labels();
    for (std::size_t c = 0; c < labels.size(); ++c) {
      if (c) text += ',';
      text += labels[c];
    }
    text += '\n';
    for (Index t = 0; t < series.samples(); ++t) {
      for (Index c = 0; c < series.channels(); ++c) {
        if (c) text += ',';
        text += format_number(series.data()(t, c), 9);
      }
      text += '\n';
    }
    write_text(text, path);
  } else {
    std::vector<unsigned char> bytes(static_cast<std::size_t>(series.data().size()) * 4);
    for (Index t = 0; t < series.samples(); ++t) {
      for (Index c = 0; c < series.channels(); ++c) {
        write_le_float(static_cast<float>(series.data()(t, c)),
                       bytes.data() + 4 * (t * series.channels() + c));
      }
    }
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("failed writing " + path.string());
  }
  write_sidecar(series, path);
}

void save_series(const MultichannelSeries& series, const fs::path& path) {
  save_series(series, path, format_from_path(path));
}

StateSequence load_states(const fs::path& path, std::optional<double> fs_hz) {
  const MultichannelSeries raw = load_series(path, fs_hz);
  if (raw.channels() != 1) throw InvalidInput(path.string() + ": state file must have one column");
  std::vector<int> states(static_cast<std::size_t>(raw.samples()));
  for (Index t = 0; t < raw.samples(); ++t) {
    const double v = raw.data()(t, 0);
    if (v != 1.0 && v != 2.0) {
      throw InvalidInput(path.string() + ": state at row " + std::to_string(t) + " is not 1 or 2");
    }
    states[static_cast<std::size_t>(t)] = static_cast<int>(v);
  }
  return StateSequence(std::move(states), raw.fs_hz());
}

void save_states(const StateSequence& states, const fs::path& path) {
  Matrix m(states.size(), 1);
  for (Index t = 0; t < states.size(); ++t) m(t, 0) = states[t];
  save_series(MultichannelSeries(std::move(m), states.fs_hz(), {"state"}), path);
}

Json report_to_json(const EvalReport& report) {
  if (!std::isfinite(report.accuracy)) throw InvalidInput("report accuracy is not finite");
  for (double t : report.switch_times_s) {
    if (!std::isfinite(t)) throw InvalidInput("report switch time is not finite");
  }
  Json doc;
  doc["accuracy"] = report.accuracy;
  doc["switch_times_s"] = report.switch_times_s;
  if (report.switch_times_s.empty()) {
    doc["mean_switch_time_s"] = nullptr;
  } else {
    doc["mean_switch_time_s"] = report.mean_switch_time_s();
  }
  doc["missed_switches"] = report.missed_switches;
  doc["n_true_switches"] = report.n_true_switches;
  doc["labels_swapped"] = report.labels_swapped;
  doc["config"] = report.config;
  return doc;
}

void save_report(const EvalReport& report, const fs::path& path) {
  write_json(report_to_json(report), path);
}

Json params_to_json(const MsmParams& params, Index lag_count, LagDirection direction) {
  Json doc;
  doc["beta1"] = std::vector<double>(params.beta1.begin(), params.beta1.end());
  doc["beta2"] = std::vector<double>(params.beta2.begin(), params.beta2.end());
  doc["sigma2"] = {params.sigma2_1, params.sigma2_2};
  doc["p_stay"] = params.transition.p_stay();
  doc["initial"] = params.transition.initial();
  doc["lag_count"] = lag_count;
  doc["direction"] = std::string(to_string(direction));
  return doc;
}

Json decoder_to_json(const DecoderFile& decoder) {
  Json doc;
  doc["beta"] = std::vector<double>(decoder.beta.begin(), decoder.beta.end());
  doc["mse"] = decoder.mse;
  doc["lag_count"] = decoder.lag_count;
  doc["direction"] = std::string(to_string(decoder.direction));
  return doc;
}

DecoderFile load_decoder(const fs::path& path) {
  const Json doc = read_json(path);
  try {
    DecoderFile out;
    const auto beta = doc.at("beta").get<std::vector<double>>();
    out.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
    out.mse = doc.at("mse").get<double>();
    out.lag_count = doc.at("lag_count").get<Index>();
    out.direction = parse_lag_direction(doc.value("direction", std::string("future")));
    if (out.beta.size() == 0 || !out.beta.allFinite()) {
      throw InvalidInput(path.string() + ": decoder coefficients empty or non-finite");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(path.string() + ": malformed decoder file (" + e.what() + ")");
  }
}

void save_posteriors(const TimedPosteriors& post, const fs::path& path) {
  const PosteriorSequence& p = post.posteriors;
  if (static_cast<Index>(post.times_s.size()) != p.size()) {
    throw InvalidInput("posterior timestamps do not match posterior rows");
  }
  std::string text = p.smoothed ? "t,p1_filtered,p2_filtered,p1_smoothed,p2_smoothed\n"
                                 : "t,p1_filtered,p2_filtered\n";
  for (Index t = 0; t < p.size(); ++t) {
    text += format_number(post.times_s[static_cast<std::size_t>(t)], 9);
    text += ',' + format_number(p.filtered(t, 0), 17);
    text += ',' + format_number(p.filtered(t, 1), 17);
    if (p.smoothed) {
      text += ',' + format_number((*p.smoothed)(t, 0), 17);
      text += ',' + format_number((*p.smoothed)(t, 1), 17);
    }
    text += '\n';
  }
  write_text(text, path);
}

TimedPosteriors load_posteriors(const fs::path& path) {
  const CsvTable table = read_csv(path);
  const auto& h = table.header;
  const Index n = static_cast<Index>(table.rows.size());
  if (n == 0) throw InvalidInput(path.string() + ": no data rows");
  TimedPosteriors out;
  out.posteriors.filtered.resize(n, 2);
  for (const auto& row : table.rows) out.times_s.push_back(row[0]);

  const std::vector<std::string> filtered_only{"t", "p1_filtered", "p2_filtered"};
  const std::vector<std::string> full{"t", "p1_filtered", "p2_filtered", "p1_smoothed",
                                      "p2_smoothed"};
  const std::vector<std::string> decoded{"t", "state"};
  if (h == decoded) {
    for (Index t = 0; t < n; ++t) {
      const double s = table.rows[static_cast<std::size_t>(t)][1];
      if (s != 1.0 && s != 2.0) {
        throw InvalidInput(path.string() + ": state at row " + std::to_string(t) +
                           " is not 1 or 2");
      }
      out.posteriors.filtered(t, 0) = s == 1.0 ? 1.0 : 0.0;
      out.posteriors.filtered(t, 1) = s == 2.0 ? 1.0 : 0.0;
    }
    return out;
  }
  if (h != filtered_only && h != full) {
    throw InvalidInput(path.string() + ": unrecognised posterior CSV header");
  }
  for (Index t = 0; t < n; ++t) {
    const auto& row = table.rows[static_cast<std::size_t>(t)];
    out.posteriors.filtered(t, 0) = row[1];
    out.posteriors.filtered(t, 1) = row[2];
  }
  if (h == full) {
    ProbMatrix s(n, 2);
    for (Index t = 0; t < n; ++t) {
      const auto& row = table.rows[static_cast<std::size_t>(t)];
      s(t, 0) = row[3];
      s(t, 1) = row[4];
    }
    out.posteriors.smoothed = std::move(s);
  }
  return out;
}

void save_decoded(const std::vector<double>& times_s, const StateSequence& states,
                  const fs::path& path) {
  if (static_cast<Index>(times_s.size()) != states.size()) {
    throw InvalidInput("decoded timestamps do not match state count");
  }
  std::string text = "t,state\n";
  for (Index t = 0; t < states.size(); ++t) {
    text += format_number(times_s[static_cast<std::size_t>(t)], 9);
    text += ',' + std::to_string(states[t]) + '\n';
  }
  write_text(text, path);
}

}  // namespace msmaad::io
