#include "convagg/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace convagg::io {

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Table read_table(std::istream& is, const std::string& what) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      t.comments.push_back(trim(std::string_view(s).substr(1)));
      continue;
    }
    auto cells = split(s);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw std::runtime_error(what + ": line " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " fields, expected " +
                               std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw std::runtime_error(what + ": missing header row");
  return t;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(what + ": cannot parse number '" + s + "'");
  }
}

std::size_t parse_index(const std::string& s, const std::string& what) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw std::runtime_error(what + ": cannot parse index '" + s + "'");
  return v;
}

void expect_header(const Table& t, const std::vector<std::string>& cols, const std::string& what) {
  if (t.header != cols) {
    std::string want;
    for (const auto& c : cols) want += (want.empty() ? "" : ",") + c;
    throw std::runtime_error(what + ": expected header '" + want + "'");
  }
}

std::optional<std::string> comment_value(const Table& t, const std::string& key) {
  for (const auto& c : t.comments) {
    const auto eq = c.find('=');
    if (eq == std::string::npos) continue;
    if (trim(std::string_view(c).substr(0, eq)) == key) return trim(std::string_view(c).substr(eq + 1));
  }
  return std::nullopt;
}

template <typename T, typename Reader>
T load_with(const std::string& path, Reader reader) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return reader(in);
}

template <typename Writer>
void save_with(const std::string& path, Writer writer) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  writer(out);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_problem(std::ostream& os, const DiscreteProblem& p) {
  os << "# bound_b = " << format_double(p.bound_b()) << "\n";
  os << "x,y,prob\n";
  for (const Atom& a : p.atoms())
    os << a.x << ',' << format_double(a.y) << ',' << format_double(a.prob) << '\n';
}

DiscreteProblem read_problem(std::istream& is) {
  const std::string what = "problem csv";
  const Table t = read_table(is, what);
  expect_header(t, {"x", "y", "prob"}, what);
  const auto b = comment_value(t, "bound_b");
  if (!b) throw std::runtime_error(what + ": missing '# bound_b = <b>' line");
  std::vector<Atom> atoms;
  atoms.reserve(t.rows.size());
  for (const auto& r : t.rows)
    atoms.push_back({parse_index(r[0], what), parse_double(r[1], what), parse_double(r[2], what)});
  return DiscreteProblem(std::move(atoms), parse_double(*b, what));
}

void write_dictionary(std::ostream& os, const Dictionary& dict) {
  os << 'x';
  for (std::size_t j = 0; j < dict.size(); ++j) os << ",f" << j;
  os << '\n';
  for (std::size_t x = 0; x < dict.design_size(); ++x) {
    os << x;
    for (std::size_t j = 0; j < dict.size(); ++j) os << ',' << format_double(dict.value(j, x));
    os << '\n';
  }
}

Dictionary read_dictionary(std::istream& is) {
  const std::string what = "dictionary csv";
  const Table t = read_table(is, what);
  if (t.header.size() < 2 || t.header[0] != "x")
    throw std::runtime_error(what + ": header must be x,f0,...");
  const std::size_t m = t.header.size() - 1;
  std::vector<FunctionVector> functions(m, FunctionVector(t.rows.size(), 0.0));
  std::vector<bool> seen(t.rows.size(), false);
  for (const auto& r : t.rows) {
    const std::size_t x = parse_index(r[0], what);
    if (x >= t.rows.size() || seen[x])
      throw std::runtime_error(what + ": design indices must be 0..K-1, each exactly once");
    seen[x] = true;
    for (std::size_t j = 0; j < m; ++j) functions[j][x] = parse_double(r[j + 1], what);
  }
  return Dictionary(functions);
}

void write_samples(std::ostream& os, const SampleSet& s) {
  os << "# seed = " << s.seed() << "\n";
  os << "x,y\n";
  for (const Sample& p : s.pairs()) os << p.x << ',' << format_double(p.y) << '\n';
}

SampleSet read_samples(std::istream& is) {
  const std::string what = "samples csv";
  const Table t = read_table(is, what);
  expect_header(t, {"x", "y"}, what);
  std::uint64_t seed = 0;
  if (const auto s = comment_value(t, "seed")) seed = parse_index(*s, what);
  std::vector<Sample> pairs;
  pairs.reserve(t.rows.size());
  for (const auto& r : t.rows) pairs.push_back({parse_index(r[0], what), parse_double(r[1], what)});
  if (pairs.empty()) throw std::runtime_error(what + ": no samples");
  return SampleSet(std::move(pairs), seed);
}

void write_weights(std::ostream& os, const std::vector<double>& w) {
  os << "j,weight\n";
  for (std::size_t j = 0; j < w.size(); ++j) os << j << ',' << format_double(w[j]) << '\n';
}

std::vector<double> read_weights(std::istream& is) {
  const std::string what = "weights csv";
  const Table t = read_table(is, what);
  expect_header(t, {"j", "weight"}, what);
  std::vector<double> w(t.rows.size(), 0.0);
  std::vector<bool> seen(t.rows.size(), false);
  for (const auto& r : t.rows) {
    const std::size_t j = parse_index(r[0], what);
    if (j >= w.size() || seen[j]) throw std::runtime_error(what + ": indices must be 0..M-1");
    seen[j] = true;
    w[j] = parse_double(r[1], what);
  }
  return w;
}

DiscreteProblem load_problem(const std::string& path) {
  return load_with<DiscreteProblem>(path, [](std::istream& in) { return read_problem(in); });
}
Dictionary load_dictionary(const std::string& path) {
  return load_with<Dictionary>(path, [](std::istream& in) { return read_dictionary(in); });
}
SampleSet load_samples(const std::string& path) {
  return load_with<SampleSet>(path, [](std::istream& in) { return read_samples(in); });
}
std::vector<double> load_weights(const std::string& path) {
  return load_with<std::vector<double>>(path, [](std::istream& in) { return read_weights(in); });
}

void save(const std::string& path, const DiscreteProblem& p) {
  save_with(path, [&](std::ostream& os) { write_problem(os, p); });
}
void save(const std::string& path, const Dictionary& d) {
  save_with(path, [&](std::ostream& os) { write_dictionary(os, d); });
}
void save(const std::string& path, const SampleSet& s) {
  save_with(path, [&](std::ostream& os) { write_samples(os, s); });
}
void save(const std::string& path, const std::vector<double>& w) {
  save_with(path, [&](std::ostream& os) { write_weights(os, w); });
}

}  // namespace convagg::io
