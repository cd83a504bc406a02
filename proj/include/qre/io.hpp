#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "qre/predicate.hpp"
#include "qre/wavelet.hpp"

namespace qre {

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input content; the message carries the line number.
class InputError : public std::invalid_argument {
 public:
  InputError(const std::string& what, std::size_t line)
      : std::invalid_argument("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Comma-separated table with a header row. Blank lines and lines starting
/// with '#' are skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // source line of each row
};

Table read_table(std::istream& in);
Table read_table_file(const std::string& path);

/// "t,v" table -> validated uniformly sampled signal.
Signal read_signal(std::istream& in);
Signal ingest_signal(const std::string& path);
void write_signal(std::ostream& out, const Signal& x, const std::vector<std::string>& comments = {});

/// Items for a schema from a table whose first column is time and whose
/// remaining columns are the schema fields in order. Enumeration fields take
/// labels, booleans take 0/1/true/false.
std::vector<Item> read_items(const Table& t, const Schema& schema, std::vector<double>* times = nullptr);

/// Sum of Gaussian bumps plus uniform noise in [-noise, noise].
struct SyntheticSpec {
  std::size_t length = 1500;
  double dt = 1e-3;
  std::size_t first = 200;               // sample index of the first bump
  std::vector<std::size_t> gaps;         // samples between consecutive bumps
  std::vector<double> amplitudes{100.0}; // one per bump, or one for all
  double width = 6.0;                    // bump sigma in samples
  double noise = 0.0;
  std::uint64_t seed = 1;

  std::size_t count() const { return gaps.size() + 1; }
  void validate() const;
};

struct Synthetic {
  Signal signal;
  std::vector<std::int64_t> centers;  // ground-truth peak samples
};

Synthetic generate_synthetic(const SyntheticSpec& spec);

}  // namespace qre
