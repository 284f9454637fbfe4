#include "mibci/io.hpp"

#include "mibci/error.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mibci {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\n')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

double parse_double(const std::string& field, std::size_t line) {
  const std::string f = trim(field);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
  if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
    throw ParseError("line " + std::to_string(line) + ": cannot parse number '" + f + "'", line);
  }
  if (!std::isfinite(value)) {
    throw ParseError("line " + std::to_string(line) + ": non-finite sample '" + f + "'", line);
  }
  return value;
}

long long parse_int(const std::string& field, std::size_t line) {
  const std::string f = trim(field);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
  if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
    throw ParseError("line " + std::to_string(line) + ": cannot parse integer '" + f + "'", line);
  }
  return value;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

// Little-endian byte packing independent of host order.
class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& out) : out_(out) {}
  void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  template <typename U>
  void uint(U v) {
    std::array<unsigned char, sizeof(U)> b{};
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    raw(b.data(), b.size());
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void i8(std::int8_t v) { raw(&v, 1); }

 private:
  std::ostream& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}
  std::size_t offset() const noexcept { return offset_; }
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw ParseError("epk: truncated file at byte offset " + std::to_string(offset_), 0, offset_);
    }
    offset_ += n;
  }
  template <typename U>
  U uint() {
    std::array<unsigned char, sizeof(U)> b{};
    raw(b.data(), b.size());
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  std::int8_t i8() {
    std::int8_t v = 0;
    raw(&v, 1);
    return v;
  }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace

std::string format_f32(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), static_cast<float>(value));
  return std::string(buf.data(), ptr);
}

std::string format_f64(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

// ---- csv-v1 ---------------------------------------------------------------

ContinuousRecording read_recording(std::istream& in, const std::optional<Montage>& declared) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv-v1: empty file", 1);
  auto tokens = split(trim(line), ' ');
  if (tokens.size() < 2 || tokens[0] != "#mi-rec" || tokens[1] != "v1") {
    throw ParseError("csv-v1: line 1 must start with '#mi-rec v1'", 1);
  }
  std::optional<double> rate;
  bool unit_seen = false;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    if (tokens[i].empty()) continue;
    auto eq = tokens[i].find('=');
    if (eq == std::string::npos) throw ParseError("csv-v1: malformed header token '" + tokens[i] + "'", 1);
    const std::string key = tokens[i].substr(0, eq);
    const std::string value = tokens[i].substr(eq + 1);
    if (key == "rate") {
      rate = parse_double(value, 1);
      if (*rate <= 0.0) throw ParseError("csv-v1: rate must be positive", 1);
    } else if (key == "unit") {
      if (value != "uV") throw ParseError("csv-v1: unsupported unit '" + value + "'", 1);
      unit_seen = true;
    }
  }
  if (!rate) throw ParseError("csv-v1: header lacks rate=<Hz>", 1);
  if (!unit_seen) throw ParseError("csv-v1: header lacks unit=uV", 1);

  if (!std::getline(in, line)) throw ParseError("csv-v1: missing channel-name line", 2);
  std::vector<std::string> names;
  for (auto& n : split(trim(line), ',')) names.push_back(trim(n));
  for (const auto& n : names) {
    if (n.empty()) throw ParseError("csv-v1: empty channel name", 2);
  }
  if (declared && declared->size() != names.size()) {
    throw ParseError("csv-v1: header names " + std::to_string(names.size()) +
                         " channels but the declared montage has " + std::to_string(declared->size()),
                     2);
  }

  std::vector<double> values;
  std::size_t line_no = 2;
  std::size_t samples = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != names.size()) {
      throw ParseError("csv-v1: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                           " values, header declares " + std::to_string(names.size()) + " channels",
                       line_no);
    }
    for (const auto& f : fields) {
      // Samples are stored at float32 width.
      const float v = static_cast<float>(parse_double(f, line_no));
      if (!std::isfinite(v)) {
        throw ParseError("csv-v1: line " + std::to_string(line_no) + ": sample exceeds float32 range", line_no);
      }
      values.push_back(v);
    }
    ++samples;
  }

  ContinuousRecording rec;
  rec.sample_rate = *rate;
  rec.data.resize(static_cast<Eigen::Index>(names.size()), static_cast<Eigen::Index>(samples));
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      rec.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(s)) = values[s * names.size() + c];
    }
  }
  if (declared) {
    if (declared->channels() != names) {
      throw ParseError("csv-v1: channel names differ from the declared montage", 2);
    }
    rec.montage = *declared;
  } else {
    try {
      rec.montage = Montage::from_names(names);
    } catch (const ConfigError& e) {
      throw ParseError(std::string("csv-v1: ") + e.what(), 2);
    }
  }
  return rec;
}

ContinuousRecording load_recording(const std::filesystem::path& path, RecordingFormat,
                                   const std::optional<Montage>& declared) {
  auto in = open_in(path);
  return read_recording(in, declared);
}

void write_recording(std::ostream& out, const ContinuousRecording& rec, const HeaderTags& tags) {
  rec.validate();
  out << "#mi-rec v1 rate=" << format_f64(rec.sample_rate) << " unit=uV";
  for (const auto& [k, v] : tags) out << ' ' << k << '=' << v;
  out << '\n';
  const auto& names = rec.montage.channels();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  std::string row;
  for (Eigen::Index s = 0; s < rec.data.cols(); ++s) {
    row.clear();
    for (Eigen::Index c = 0; c < rec.data.rows(); ++c) {
      if (c) row.push_back(',');
      row += format_f32(rec.data(c, s));
    }
    row.push_back('\n');
    out << row;
  }
}

void save_recording(const std::filesystem::path& path, const ContinuousRecording& rec,
                    const HeaderTags& tags) {
  auto out = open_out(path);
  write_recording(out, rec, tags);
}

// ---- tsv-v1 ---------------------------------------------------------------

std::vector<EventMarker> read_markers(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<EventMarker> markers;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "sample\tlabel\ttrial") {
        throw ParseError("tsv-v1: expected header 'sample<TAB>label<TAB>trial'", line_no);
      }
      header = true;
      continue;
    }
    auto fields = split(line, '\t');
    if (fields.size() != 3) throw ParseError("tsv-v1: line " + std::to_string(line_no) + " needs 3 fields", line_no);
    EventMarker m;
    m.sample_index = parse_int(fields[0], line_no);
    try {
      m.label = parse_label_code(trim(fields[1]));
    } catch (const DataError& e) {
      throw ParseError("tsv-v1: line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    m.trial_index = parse_int(fields[2], line_no);
    markers.push_back(m);
  }
  if (!header) throw ParseError("tsv-v1: missing header", line_no);
  validate_markers(markers);
  return markers;
}

std::vector<EventMarker> load_markers(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_markers(in);
}

void write_markers(std::ostream& out, const std::vector<EventMarker>& markers, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "sample\tlabel\ttrial\n";
  for (const auto& m : markers) {
    out << m.sample_index << '\t' << label_code(m.label) << '\t' << m.trial_index << '\n';
  }
}

void save_markers(const std::filesystem::path& path, const std::vector<EventMarker>& markers,
                  const std::string& comment) {
  auto out = open_out(path);
  write_markers(out, markers, comment);
}

// ---- epk-v1 ---------------------------------------------------------------

EpochSet read_epochs(std::istream& in) {
  ByteReader r(in);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "EPK1", 4) != 0) throw ParseError("epk: bad magic", 0, 0);
  const auto trials = r.uint<std::uint32_t>();
  const auto channels = r.uint<std::uint32_t>();
  const auto samples = r.uint<std::uint32_t>();
  EpochSet set;
  set.sample_rate = r.f64();
  set.window.start_s = r.f64();
  set.window.end_s = r.f64();
  if (!(set.sample_rate > 0.0)) throw ParseError("epk: sample rate must be positive", 0, 16);
  set.labels.reserve(trials);
  for (std::uint32_t t = 0; t < trials; ++t) {
    const std::size_t at = r.offset();
    const int code = r.i8();
    if (code != -1 && code != 1) {
      throw ParseError("epk: invalid label byte at offset " + std::to_string(at), 0, at);
    }
    set.labels.push_back(decode_label(code));
  }
  set.epochs.reserve(trials);
  for (std::uint32_t t = 0; t < trials; ++t) {
    Eigen::MatrixXd e(channels, samples);
    for (std::uint32_t c = 0; c < channels; ++c) {
      for (std::uint32_t s = 0; s < samples; ++s) {
        const std::size_t at = r.offset();
        const float v = r.f32();
        if (!std::isfinite(v)) {
          throw ParseError("epk: non-finite sample at byte offset " + std::to_string(at), 0, at);
        }
        e(c, s) = v;
      }
    }
    set.epochs.push_back(std::move(e));
  }
  if (channels == 30) set.channel_names = Montage::standard30().channels();
  return set;
}

EpochSet load_epochs(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  return read_epochs(in);
}

void write_epochs(std::ostream& out, const EpochSet& set) {
  set.validate();
  ByteWriter w(out);
  w.raw("EPK1", 4);
  w.uint(static_cast<std::uint32_t>(set.trials()));
  w.uint(static_cast<std::uint32_t>(set.channels()));
  w.uint(static_cast<std::uint32_t>(set.samples()));
  w.f64(set.sample_rate);
  w.f64(set.window.start_s);
  w.f64(set.window.end_s);
  for (auto l : set.labels) w.i8(static_cast<std::int8_t>(encode(l)));
  for (const auto& e : set.epochs) {
    for (Eigen::Index c = 0; c < e.rows(); ++c) {
      for (Eigen::Index s = 0; s < e.cols(); ++s) w.f32(static_cast<float>(e(c, s)));
    }
  }
}

void save_epochs(const std::filesystem::path& path, const EpochSet& set) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  write_epochs(out, set);
}

Montage load_montage(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  std::vector<Point2> coords;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.rfind("channel", 0) == 0) continue;
    auto f = split(line, ',');
    if (f.size() != 3) throw ParseError("montage: line " + std::to_string(line_no) + " needs channel,x,y", line_no);
    names.push_back(trim(f[0]));
    coords.push_back({parse_double(f[1], line_no), parse_double(f[2], line_no)});
  }
  return Montage(std::move(names), std::move(coords));
}

}  // namespace mibci
