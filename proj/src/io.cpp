#include "qre/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "qre/value.hpp"

namespace qre {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_real(const std::string& s, std::size_t line) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw InputError("not a number: '" + s + "'", line);
  if (!std::isfinite(v)) throw InputError("non-finite value '" + s + "'", line);
  return v;
}

}  // namespace

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto cells = split_commas(s);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw InputError("expected " + std::to_string(t.header.size()) + " columns, got " + std::to_string(cells.size()),
                       no);
    t.rows.push_back(std::move(cells));
    t.lines.push_back(no);
  }
  if (in.bad()) throw IoError("read error");
  if (!have_header) throw InputError("missing header row", no);
  return t;
}

Table read_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_table(in);
}

Signal read_signal(std::istream& in) {
  Table t = read_table(in);
  if (t.header != std::vector<std::string>{"t", "v"}) throw InputError("header must be 't,v'", 1);
  if (t.rows.empty()) throw InputError("no samples", t.lines.empty() ? 1 : t.lines.back());
  Signal x;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    x.t.push_back(parse_real(t.rows[i][0], t.lines[i]));
    x.v.push_back(parse_real(t.rows[i][1], t.lines[i]));
    if (i >= 2 && std::fabs((x.t[i] - x.t[i - 1]) - (x.t[1] - x.t[0])) > 1e-9)
      throw InputError("non-uniform sample spacing", t.lines[i]);
    if (i >= 1 && !(x.t[i] > x.t[i - 1])) throw InputError("sample times must increase", t.lines[i]);
  }
  x.validate();
  return x;
}

Signal ingest_signal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_signal(in);
}

void write_signal(std::ostream& out, const Signal& x, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "t,v\n";
  for (std::size_t i = 0; i < x.size(); ++i) out << format_real(x.t[i]) << ',' << format_real(x.v[i]) << '\n';
}

std::vector<Item> read_items(const Table& t, const Schema& schema, std::vector<double>* times) {
  if (t.header.size() != schema.size() + 1)
    throw InputError("expected columns t," + schema.to_string() + "", 1);
  for (std::size_t f = 0; f < schema.size(); ++f)
    if (t.header[f + 1] != schema.field(f).name)
      throw InputError("column " + std::to_string(f + 2) + " must be '" + schema.field(f).name + "'", 1);
  std::vector<Item> items;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::size_t line = t.lines[r];
    if (times) times->push_back(parse_real(t.rows[r][0], line));
    Item item;
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const auto& cell = t.rows[r][f + 1];
      const Field& fd = schema.field(f);
      switch (fd.kind) {
        case FieldKind::enumeration:
          try {
            item.push_back(static_cast<double>(schema.label_index(f, cell)));
          } catch (const SchemaError& e) {
            throw InputError(e.what(), line);
          }
          break;
        case FieldKind::boolean:
          if (cell == "1" || cell == "true") item.push_back(1);
          else if (cell == "0" || cell == "false") item.push_back(0);
          else throw InputError("expected a boolean, got '" + cell + "'", line);
          break;
        default: item.push_back(parse_real(cell, line)); break;
      }
    }
    try {
      schema.validate(item);
    } catch (const SchemaError& e) {
      throw InputError(e.what(), line);
    }
    items.push_back(std::move(item));
  }
  return items;
}

void SyntheticSpec::validate() const {
  if (length == 0) throw std::invalid_argument("synthetic length must be >= 1");
  if (!(dt > 0)) throw std::invalid_argument("synthetic dt must be > 0");
  if (!(width > 0)) throw std::invalid_argument("bump width must be > 0");
  if (!(noise >= 0)) throw std::invalid_argument("noise amplitude must be >= 0");
  if (amplitudes.size() != 1 && amplitudes.size() != count())
    throw std::invalid_argument("need one amplitude or one per bump");
  for (auto g : gaps) {
    if (g == 0) throw std::invalid_argument("gaps must be > 0");
    if (static_cast<double>(g) < 3 * width)
      throw std::invalid_argument("bumps closer than 3 widths make the ground truth ambiguous");
  }
  std::size_t last = first;
  for (auto g : gaps) last += g;
  if (last >= length) throw std::invalid_argument("signal too short for the requested bumps");
}

Synthetic generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Synthetic out;
  std::size_t c = spec.first;
  out.centers.push_back(static_cast<std::int64_t>(c));
  for (auto g : spec.gaps) out.centers.push_back(static_cast<std::int64_t>(c += g));
  std::vector<double> v(spec.length, 0.0);
  for (std::size_t k = 0; k < out.centers.size(); ++k) {
    double a = spec.amplitudes.size() == 1 ? spec.amplitudes[0] : spec.amplitudes[k];
    for (std::size_t i = 0; i < v.size(); ++i) {
      double z = (static_cast<double>(i) - static_cast<double>(out.centers[k])) / spec.width;
      if (std::fabs(z) < 12) v[i] += a * std::exp(-0.5 * z * z);
    }
  }
  if (spec.noise > 0) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(-spec.noise, spec.noise);
    for (double& x : v) x += u(rng);
  }
  out.signal = make_signal(std::move(v), spec.dt);
  return out;
}

}  // namespace qre
