#include "convagg/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "convagg/csv_io.hpp"

namespace convagg::config {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) return out;
    s.remove_prefix(pos + 1);
  }
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw std::runtime_error("config line " + std::to_string(line) + ": " + msg);
}

template <typename T>
T parse_number(std::string_view text, std::size_t line) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != end)
    fail(line, "cannot parse number '" + std::string(text) + "'");
  return value;
}

double parse_real(std::string_view text, std::size_t line) {
  // from_chars for double is not available in every libstdc++ we target.
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(line, "cannot parse number '" + s + "'");
  }
  if (used != s.size()) fail(line, "cannot parse number '" + s + "'");
  return v;
}

}  // namespace

experiments::ExperimentConfig parse_config(std::istream& in) {
  experiments::ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) fail(line, "expected 'key = value'");
    const auto key = trim(text.substr(0, eq));
    const auto value = trim(text.substr(eq + 1));
    if (!seen.emplace(key).second) fail(line, "duplicate key '" + std::string(key) + "'");

    if (key == "grid") {
      cfg.grid.clear();
      for (auto item : split(value, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) fail(line, "grid entries are n:M");
        cfg.grid.push_back({parse_number<std::size_t>(trim(item.substr(0, colon)), line),
                            parse_number<std::size_t>(trim(item.substr(colon + 1)), line)});
      }
    } else if (key == "problem_kind") {
      try {
        cfg.problem_kind = experiments::parse_problem_kind(value);
      } catch (const std::invalid_argument& e) {
        fail(line, e.what());
      }
    } else if (key == "atoms_K") {
      cfg.atoms_K = parse_number<std::size_t>(value, line);
    } else if (key == "replications") {
      cfg.replications = parse_number<std::size_t>(value, line);
    } else if (key == "master_seed") {
      cfg.master_seed = parse_number<std::uint64_t>(value, line);
    } else if (key == "solver.max_iterations") {
      cfg.solver.max_iterations = parse_number<std::size_t>(value, line);
    } else if (key == "solver.tolerance") {
      cfg.solver.tolerance = parse_real(value, line);
    } else if (key == "solver.tie_break") {
      if (value != "lowest-index") fail(line, "solver.tie_break supports only lowest-index");
      cfg.solver.tie_break = TieBreak::lowest_index;
    } else if (key == "x_levels") {
      cfg.x_levels.clear();
      for (auto item : split(value, ',')) cfg.x_levels.push_back(parse_real(item, line));
    } else if (key == "bound_b") {
      cfg.bound_b = parse_real(value, line);
    } else if (key == "noise") {
      cfg.noise = parse_real(value, line);
    } else {
      fail(line, "unknown key '" + std::string(key) + "'");
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(e.what());
  }
  return cfg;
}

experiments::ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const experiments::ExperimentConfig& cfg) {
  out << "grid = ";
  for (std::size_t i = 0; i < cfg.grid.size(); ++i)
    out << (i ? ", " : "") << cfg.grid[i].n << ':' << cfg.grid[i].M;
  out << "\nproblem_kind = " << experiments::to_string(cfg.problem_kind)
      << "\natoms_K = " << cfg.atoms_K << "\nreplications = " << cfg.replications
      << "\nmaster_seed = " << cfg.master_seed
      << "\nsolver.max_iterations = " << cfg.solver.max_iterations
      << "\nsolver.tolerance = " << io::format_double(cfg.solver.tolerance)
      << "\nsolver.tie_break = lowest-index\nx_levels = ";
  for (std::size_t i = 0; i < cfg.x_levels.size(); ++i)
    out << (i ? ", " : "") << io::format_double(cfg.x_levels[i]);
  out << "\nbound_b = " << io::format_double(cfg.bound_b)
      << "\nnoise = " << io::format_double(cfg.noise) << '\n';
}

}  // namespace convagg::config
