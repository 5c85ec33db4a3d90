// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#include "ddest/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>

namespace ddest {

namespace {

// Little-endian scalar serialization. The build targets little-endian
// hosts; the static_assert backs the file-format promise.
static_assert(std::endian::native == std::endian::little,
              "CTF1 writer assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, std::uint64_t offset, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in)
    throw IoError("ctf1: truncated while reading " + std::string(what) +
                  " at byte offset " + std::to_string(offset));
  return value;
}

std::string csv_escape_free(const std::string& s) {
  // Field values here are numeric or simple identifiers; commas and
  // quotes never appear. Guard anyway so a malformed config key cannot
  // silently corrupt the table.
  if (s.find_first_of(",\"\n") != std::string::npos)
    throw ValidationError("csv: field contains a delimiter: " + s);
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void write_header(std::ofstream& out,
                  std::span<const std::string> header_lines) {
  for (const std::string& line : header_lines) out << "# " << line << "\n";
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out)
    throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double_field(const std::string& s, int line_no,
                          const std::filesystem::path& path) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("csv: '" + path.string() + "' line " +
                  std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

int parse_int_field(const std::string& s, int line_no,
                    const std::filesystem::path& path) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("csv: '" + path.string() + "' line " +
                  std::to_string(line_no) + ": bad integer '" + s + "'");
  return v;
}

// Iterates data rows of a CSV: skips '#' comments and blank lines,
// checks the first non-comment line against the expected header.
template <typename RowFn>
void for_each_csv_row(const std::filesystem::path& path,
                      const std::string& expected_header, int expected_fields,
                      RowFn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != expected_header)
        throw IoError("csv: '" + path.string() + "' line " +
                      std::to_string(line_no) + ": expected header '" +
                      expected_header + "', got '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != expected_fields)
      throw IoError("csv: '" + path.string() + "' line " +
                    std::to_string(line_no) + ": expected " +
                    std::to_string(expected_fields) + " fields, got " +
                    std::to_string(fields.size()));
    fn(fields, line_no);
  }
  if (!header_seen)
    throw IoError("csv: '" + path.string() + "' has no header row");
}

}  // namespace

void write_ctf1(const std::filesystem::path& path, const RadarGrid& grid,
                std::span<const ChannelFrame> frames) {
  grid.validate();
  for (const ChannelFrame& f : frames) {
    f.validate();
    if (!(f.grid == grid))
      throw ValidationError("ctf1: all frames must share the file grid");
  }
  std::ofstream out = open_out(path);
  out.write("CTF1", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.subcarriers));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.symbols));
  put<double>(out, grid.subcarrier_spacing);
  put<double>(out, grid.symbol_interval);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(frames.size()));

  std::vector<float> buffer;
  buffer.resize(static_cast<std::size_t>(grid.size()) * 2);
  for (const ChannelFrame& f : frames) {
    std::size_t idx = 0;
    for (int l = 0; l < grid.symbols; ++l)
      for (int k = 0; k < grid.subcarriers; ++k) {
        buffer[idx++] = static_cast<float>(f.data(k, l).real());
        buffer[idx++] = static_cast<float>(f.data(k, l).imag());
      }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  }
  finish(out, path);
}

FrameSet read_ctf1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CTF1", 4) != 0)
    throw IoError("ctf1: bad magic at byte offset 0 in '" + path.string() +
                  "' (not a CTF1 file)");

  FrameSet set;
  const auto k = get<std::uint32_t>(in, 4, "subcarrier count");
  const auto l = get<std::uint32_t>(in, 8, "symbol count");
  const double delta_f = get<double>(in, 12, "subcarrier spacing");
  const double delta_t = get<double>(in, 20, "symbol interval");
  const auto count = get<std::uint32_t>(in, 28, "frame count");
  if (k > (1u << 20) || l > (1u << 20))
    throw IoError("ctf1: implausible grid " + std::to_string(k) + " x " +
                  std::to_string(l) + " at byte offset 4");
  set.grid.subcarriers = static_cast<int>(k);
  set.grid.symbols = static_cast<int>(l);
  set.grid.subcarrier_spacing = delta_f;
  set.grid.symbol_interval = delta_t;
  try {
    set.grid.validate();
  } catch (const ValidationError& e) {
    throw IoError("ctf1: invalid header at byte offset 4: " +
                  std::string(e.what()));
  }

  const std::uint64_t frame_bytes =
      static_cast<std::uint64_t>(set.grid.size()) * 2 * sizeof(float);
  std::vector<float> buffer(static_cast<std::size_t>(set.grid.size()) * 2);
  set.frames.reserve(count);
  for (std::uint32_t f = 0; f < count; ++f) {
    const std::uint64_t offset = 32 + static_cast<std::uint64_t>(f) * frame_bytes;
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    if (!in)
      throw IoError("ctf1: truncated frame " + std::to_string(f) +
                    " at byte offset " + std::to_string(offset) +
                    " in '" + path.string() + "'");
    ChannelFrame frame;
    frame.grid = set.grid;
    frame.data.resize(set.grid.subcarriers, set.grid.symbols);
    std::size_t idx = 0;
    for (int ll = 0; ll < set.grid.symbols; ++ll)
      for (int kk = 0; kk < set.grid.subcarriers; ++kk) {
        frame.data(kk, ll) = Complex(buffer[idx], buffer[idx + 1]);
        idx += 2;
      }
    set.frames.push_back(std::move(frame));
  }
  char extra;
  if (in.read(&extra, 1))
    throw IoError("ctf1: trailing bytes after frame " + std::to_string(count) +
                  " at byte offset " +
                  std::to_string(32 + static_cast<std::uint64_t>(count) *
                                          frame_bytes) +
                  " in '" + path.string() + "'");
  return set;
}

void write_estimates_csv(const std::filesystem::path& path,
                         std::span<const std::string> header_lines,
                         std::span<const EstimateRecord> records) {
  std::ofstream out = open_out(path);
  write_header(out, header_lines);
  out << "frame,delay_s,doppler_hz,weight_re,weight_im,runtime_s\n";
  for (const EstimateRecord& r : records)
    out << r.frame << ',' << format_double(r.delay_s) << ','
        << format_double(r.doppler_hz) << ',' << format_double(r.weight_re)
        << ',' << format_double(r.weight_im) << ','
        << format_double(r.runtime_s) << "\n";
  finish(out, path);
}

void write_truth_csv(const std::filesystem::path& path,
                     std::span<const std::string> header_lines,
                     std::span<const TruthRecord> records) {
  std::ofstream out = open_out(path);
  write_header(out, header_lines);
  out << "frame,sphere,tau_s,alpha_hz\n";
  for (const TruthRecord& r : records)
    out << r.frame << ',' << r.sphere << ',' << format_double(r.delay_s)
        << ',' << format_double(r.doppler_hz) << "\n";
  finish(out, path);
}

void write_sweep_csv(const std::filesystem::path& path,
                     std::span<const std::string> header_lines,
                     const SweepReport& report) {
  std::ofstream out = open_out(path);
  write_header(out, header_lines);
  out << "angle_deg,algorithm,los_gain_db,frames,matches,false_detections,"
         "detection_probability,delay_rmse_s,doppler_rmse_hz,mean_runtime_s\n";
  for (const SweepRow& r : report.rows)
    out << format_double(r.angle_deg) << ','
        << csv_escape_free(algorithm_name(r.algorithm)) << ','
        << format_double(r.los_gain_db) << ',' << r.frames << ',' << r.matches
        << ',' << r.false_detections << ','
        << format_double(r.detection_probability) << ','
        << format_double(r.delay_rmse_s) << ','
        << format_double(r.doppler_rmse_hz) << ','
        << format_double(r.mean_runtime_s) << "\n";
  finish(out, path);
}

void write_sweep_detail_csv(const std::filesystem::path& path,
                            std::span<const std::string> header_lines,
                            const SweepReport& report) {
  std::ofstream out = open_out(path);
  write_header(out, header_lines);
  out << "angle_deg,algorithm,frame,sphere,matched,delay_error_s,"
         "doppler_error_hz,false_detections,estimator_failed\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const SweepRow& r : report.rows)
    for (const FrameResult& fr : r.frame_results)
      for (int s = 0; s < 2; ++s) {
        const SphereOutcome& o = fr.spheres[s];
        out << format_double(r.angle_deg) << ','
            << csv_escape_free(algorithm_name(r.algorithm)) << ','
            << fr.frame_index << ',' << (s + 1) << ',' << (o.matched ? 1 : 0)
            << ',' << format_double(o.matched ? o.delay_error_s : nan) << ','
            << format_double(o.matched ? o.doppler_error_hz : nan) << ','
            << fr.false_detections << ',' << (fr.estimator_failed ? 1 : 0)
            << "\n";
      }
  finish(out, path);
}

std::vector<EstimateRecord> read_estimates_csv(
    const std::filesystem::path& path) {
  std::vector<EstimateRecord> records;
  for_each_csv_row(path, "frame,delay_s,doppler_hz,weight_re,weight_im,runtime_s",
                   6, [&](const std::vector<std::string>& f, int line_no) {
                     EstimateRecord r;
                     r.frame = parse_int_field(f[0], line_no, path);
                     r.delay_s = parse_double_field(f[1], line_no, path);
                     r.doppler_hz = parse_double_field(f[2], line_no, path);
                     r.weight_re = parse_double_field(f[3], line_no, path);
                     r.weight_im = parse_double_field(f[4], line_no, path);
                     r.runtime_s = parse_double_field(f[5], line_no, path);
                     records.push_back(r);
                   });
  return records;
}

std::vector<TruthRecord> read_truth_csv(const std::filesystem::path& path) {
  std::vector<TruthRecord> records;
  for_each_csv_row(path, "frame,sphere,tau_s,alpha_hz", 4,
                   [&](const std::vector<std::string>& f, int line_no) {
                     TruthRecord r;
                     r.frame = parse_int_field(f[0], line_no, path);
                     r.sphere = parse_int_field(f[1], line_no, path);
                     if (r.sphere != 1 && r.sphere != 2)
                       throw IoError("csv: '" + path.string() + "' line " +
                                     std::to_string(line_no) +
                                     ": sphere must be 1 or 2");
                     r.delay_s = parse_double_field(f[2], line_no, path);
                     r.doppler_hz = parse_double_field(f[3], line_no, path);
                     records.push_back(r);
                   });
  return records;
}

}  // namespace ddest
