#include "repcause/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

namespace repcause {

const char* to_string(LoadErrorKind kind) {
  switch (kind) {
    case LoadErrorKind::io: return "IoError";
    case LoadErrorKind::bad_magic: return "BadMagic";
    case LoadErrorKind::bad_version: return "BadVersion";
    case LoadErrorKind::truncated: return "TruncatedPayload";
    case LoadErrorKind::non_finite: return "NonFiniteValue";
    case LoadErrorKind::bad_treatment: return "BadTreatment";
    case LoadErrorKind::bad_label: return "BadLabel";
    case LoadErrorKind::bad_shape: return "BadShape";
    case LoadErrorKind::bad_csv: return "BadCsv";
  }
  return "LoadError";
}

namespace {

bool is_binary(const Vector& v) {
  return std::all_of(v.data(), v.data() + v.size(), [](double x) { return x == 0.0 || x == 1.0; });
}

void check_vector(const std::optional<Vector>& v, Eigen::Index n, const char* name, bool binary) {
  if (!v) return;
  if (v->size() != n) {
    throw ValidationError(std::string(name) + " has " + std::to_string(v->size()) + " entries, expected " +
                          std::to_string(n));
  }
  if (!v->allFinite()) throw ValidationError(std::string(name) + " contains non-finite values");
  if (binary && !is_binary(*v)) throw ValidationError(std::string(name) + " entries must be 0 or 1");
}

}  // namespace

RepresentationSet::RepresentationSet(Matrix z, std::optional<Vector> t, std::optional<Vector> y,
                                     std::optional<Vector> label)
    : z_(std::move(z)), t_(std::move(t)), y_(std::move(y)), label_(std::move(label)) {
  if (z_.rows() < 2) throw ValidationError("need at least 2 rows, got " + std::to_string(z_.rows()));
  if (z_.cols() < 1) throw ValidationError("need at least 1 feature column");
  if (!z_.allFinite()) throw ValidationError("z contains non-finite values");
  check_vector(t_, n(), "t", true);
  check_vector(y_, n(), "y", false);
  check_vector(label_, n(), "label", true);
}

RepresentationSet RepresentationSet::with_outcomes(Matrix z, Vector t, Vector y, std::optional<Vector> label) {
  return RepresentationSet(std::move(z), std::move(t), std::move(y), std::move(label));
}

const Vector& RepresentationSet::t() const {
  if (!t_) throw ValidationError("representation set has no treatment column");
  return *t_;
}

const Vector& RepresentationSet::y() const {
  if (!y_) throw ValidationError("representation set has no outcome column");
  return *y_;
}

const Vector& RepresentationSet::label() const {
  if (!label_) throw MissingLabel("representation set has no label column");
  return *label_;
}

void RepresentationSet::require_estimable() const {
  const Vector& tt = t();
  y();
  const double treated = tt.sum();
  if (treated < 1.0) throw EmptyArm("treated arm is empty");
  if (treated > static_cast<double>(n()) - 1.0) throw EmptyArm("control arm is empty");
}

RepresentationSet RepresentationSet::with_z(Matrix z) const {
  if (z.rows() != n()) throw DimensionError("replacement z has a different row count");
  return RepresentationSet(std::move(z), t_, y_, label_);
}

RepresentationSet RepresentationSet::with_y(Vector y) const { return RepresentationSet(z_, t_, std::move(y), label_); }

RepresentationSet RepresentationSet::subset(const std::vector<Eigen::Index>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Matrix z(m, d());
  auto pick = [&](const std::optional<Vector>& v) -> std::optional<Vector> {
    if (!v) return std::nullopt;
    Vector out(m);
    for (Eigen::Index i = 0; i < m; ++i) out[i] = (*v)[rows[i]];
    return out;
  };
  for (Eigen::Index i = 0; i < m; ++i) z.row(i) = z_.row(rows[i]);
  return RepresentationSet(std::move(z), pick(t_), pick(y_), pick(label_));
}

bool operator==(const RepresentationSet& a, const RepresentationSet& b) {
  auto same = [](const std::optional<Vector>& x, const std::optional<Vector>& y) {
    if (x.has_value() != y.has_value()) return false;
    return !x || *x == *y;
  };
  return a.z().rows() == b.z().rows() && a.z().cols() == b.z().cols() && a.z() == b.z() &&
         same(a.maybe_t(), b.maybe_t()) && same(a.maybe_y(), b.maybe_y()) && same(a.maybe_label(), b.maybe_label());
}

// ---------------------------------------------------------------------------
// PTRZ

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(raw), std::end(raw));
  out.insert(out.end(), std::begin(raw), std::end(raw));
}

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (remaining() < sizeof(T)) {
      throw LoadError(LoadErrorKind::truncated, std::string("payload ends inside ") + what);
    }
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(raw), std::end(raw));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  void need(std::size_t count, const char* what) const {
    if (remaining() < count) {
      throw LoadError(LoadErrorKind::truncated, std::string("payload ends inside ") + what);
    }
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_ptrz(const RepresentationSet& set) {
  const auto n = static_cast<std::uint32_t>(set.n());
  const auto d = static_cast<std::uint32_t>(set.d());
  std::uint8_t flags = 0;
  if (set.has_treatment()) flags |= kFlagTreatment;
  if (set.has_outcome()) flags |= kFlagOutcome;
  if (set.has_label()) flags |= kFlagLabel;

  std::vector<std::uint8_t> out;
  out.reserve(14 + std::size_t{n} * d * 4 + std::size_t{n} * 10);
  out.insert(out.end(), std::begin(kPtrzMagic), std::end(kPtrzMagic));
  out.push_back(kPtrzVersion);
  put_le(out, n);
  put_le(out, d);
  out.push_back(flags);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) put_le(out, static_cast<float>(set.z()(i, j)));
  }
  if (set.has_treatment()) {
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(set.t()[i]));
  }
  if (set.has_outcome()) {
    for (std::uint32_t i = 0; i < n; ++i) put_le(out, set.y()[i]);
  }
  if (set.has_label()) {
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(set.label()[i]));
  }
  return out;
}

RepresentationSet decode_ptrz(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kPtrzMagic, 4) != 0) {
    throw LoadError(LoadErrorKind::bad_magic, "file does not start with PTRZ");
  }
  ByteReader in(bytes);
  in.get<std::uint32_t>("magic");
  const auto version = in.get<std::uint8_t>("version");
  if (version != kPtrzVersion) {
    throw LoadError(LoadErrorKind::bad_version, "unsupported version " + std::to_string(version));
  }
  const auto n = in.get<std::uint32_t>("n");
  const auto d = in.get<std::uint32_t>("d");
  const auto flags = in.get<std::uint8_t>("flags");
  if (n < 2 || d < 1) {
    throw LoadError(LoadErrorKind::bad_shape, "n=" + std::to_string(n) + " d=" + std::to_string(d));
  }

  in.need(std::size_t{n} * d * sizeof(float), "z payload");
  Matrix z(n, d);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      const float v = in.get<float>("z payload");
      if (!std::isfinite(v)) {
        throw LoadError(LoadErrorKind::non_finite,
                        "z(" + std::to_string(i) + "," + std::to_string(j) + ") is not finite");
      }
      z(i, j) = v;
    }
  }

  auto read_binary = [&](LoadErrorKind kind, const char* what) {
    in.need(n, what);
    Vector v(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto b = in.get<std::uint8_t>(what);
      if (b > 1) throw LoadError(kind, std::string(what) + "[" + std::to_string(i) + "] = " + std::to_string(b));
      v[i] = b;
    }
    return v;
  };

  std::optional<Vector> t, y, label;
  if (flags & kFlagTreatment) t = read_binary(LoadErrorKind::bad_treatment, "t");
  if (flags & kFlagOutcome) {
    in.need(std::size_t{n} * sizeof(double), "y payload");
    Vector yy(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      yy[i] = in.get<double>("y payload");
      if (!std::isfinite(yy[i])) {
        throw LoadError(LoadErrorKind::non_finite, "y[" + std::to_string(i) + "] is not finite");
      }
    }
    y = std::move(yy);
  }
  if (flags & kFlagLabel) label = read_binary(LoadErrorKind::bad_label, "label");
  if (in.remaining() != 0) {
    throw LoadError(LoadErrorKind::bad_shape, std::to_string(in.remaining()) + " trailing bytes");
  }
  return RepresentationSet(std::move(z), std::move(t), std::move(y), std::move(label));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

double parse_number(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw LoadError(LoadErrorKind::bad_csv,
                    "line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
  }
  if (!std::isfinite(value)) {
    throw LoadError(LoadErrorKind::non_finite, "line " + std::to_string(line_no) + ": non-finite value");
  }
  return value;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

RepresentationSet parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  // Leading '#' lines carry run metadata and are skipped.
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
    if (!line.empty() && line[0] == '#') continue;
    have_header = true;
    break;
  }
  if (!have_header) throw LoadError(LoadErrorKind::bad_csv, "empty file");
  const auto header = split_commas(line);

  std::size_t d = 0;
  while (d < header.size() && header[d] == "z" + std::to_string(d)) ++d;
  const std::size_t rest = header.size() - d;
  const bool header_ok = d >= 1 && (rest == 2 || rest == 3) && header[d] == "t" && header[d + 1] == "y" &&
                         (rest == 2 || header[d + 2] == "label");
  if (!header_ok) throw LoadError(LoadErrorKind::bad_csv, "header must be z0,...,z{d-1},t,y[,label]");
  const bool has_label = rest == 3;

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw LoadError(LoadErrorKind::bad_csv, "line " + std::to_string(line_no) + ": expected " +
                                                  std::to_string(header.size()) + " fields");
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_number(f, line_no));
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < 2) throw LoadError(LoadErrorKind::bad_shape, "need at least 2 data rows");

  Matrix z(n, static_cast<Eigen::Index>(d));
  Vector t(n), y(n), label(has_label ? n : 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < d; ++j) z(i, static_cast<Eigen::Index>(j)) = r[j];
    t[i] = r[d];
    y[i] = r[d + 1];
    if (t[i] != 0.0 && t[i] != 1.0) {
      throw LoadError(LoadErrorKind::bad_treatment, "row " + std::to_string(i) + ": t must be 0 or 1");
    }
    if (has_label) {
      label[i] = r[d + 2];
      if (label[i] != 0.0 && label[i] != 1.0) {
        throw LoadError(LoadErrorKind::bad_label, "row " + std::to_string(i) + ": label must be 0 or 1");
      }
    }
  }
  std::optional<Vector> lab;
  if (has_label) lab = std::move(label);
  return RepresentationSet(std::move(z), std::move(t), std::move(y), std::move(lab));
}

std::string format_csv(const RepresentationSet& set) {
  if (!set.has_treatment() || !set.has_outcome()) {
    throw ValidationError("CSV format requires both t and y columns");
  }
  std::string out;
  for (Eigen::Index j = 0; j < set.d(); ++j) out += "z" + std::to_string(j) + ",";
  out += set.has_label() ? "t,y,label\n" : "t,y\n";
  for (Eigen::Index i = 0; i < set.n(); ++i) {
    for (Eigen::Index j = 0; j < set.d(); ++j) {
      append_double(out, set.z()(i, j));
      out += ',';
    }
    out += set.t()[i] == 1.0 ? "1," : "0,";
    append_double(out, set.y()[i]);
    if (set.has_label()) out += set.label()[i] == 1.0 ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

RepresentationSet load_representations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kPtrzMagic, 4) == 0) return decode_ptrz(bytes);
    const bool csv = path.extension() == ".csv" ||
                     (bytes.size() >= 2 && ((bytes[0] == 'z' && bytes[1] == '0') || bytes[0] == '#'));
    if (!csv) throw LoadError(LoadErrorKind::bad_magic, "not a PTRZ file and not a CSV with a z0 header");
    return parse_csv(std::string(bytes.begin(), bytes.end()));
  } catch (const ValidationError& e) {
    throw LoadError(LoadErrorKind::bad_shape, e.what());
  }
}

void save_representations(const RepresentationSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (path.extension() == ".csv") {
    out << format_csv(set);
  } else {
    const auto bytes = encode_ptrz(set);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Folds

std::vector<Eigen::Index> FoldAssignment::in_fold(int fold) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) rows.push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

std::vector<Eigen::Index> FoldAssignment::out_of_fold(int fold) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) rows.push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

std::vector<std::size_t> FoldAssignment::sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
  for (int a : assignment) ++out[static_cast<std::size_t>(a)];
  return out;
}

FoldAssignment make_folds(Eigen::Index n, int k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw InvalidFoldCount("fold count " + std::to_string(k) + " must satisfy 2 <= k <= n=" + std::to_string(n));
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldAssignment folds;
  folds.k = k;
  folds.assignment.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    folds.assignment[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  }
  return folds;
}

}  // namespace repcause
