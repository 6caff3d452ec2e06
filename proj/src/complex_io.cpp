#include "periodic_heat/errors.hpp"
#include "periodic_heat/periodic_complex.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace periodic_heat {

namespace {

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

long long parse_int(std::string_view s, std::size_t line, std::string_view what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError(line, "invalid integer for " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

double parse_double(std::string_view s, std::size_t line, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError(line, "invalid number for " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

// Parses "key=value" fields after the positional tokens.
std::map<std::string, std::string_view, std::less<>> parse_fields(std::span<const std::string_view> tokens,
                                                                   std::size_t line) {
  std::map<std::string, std::string_view, std::less<>> out;
  for (auto tok : tokens) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) throw FormatError(line, "expected key=value, got '" + std::string(tok) + "'");
    if (!out.emplace(std::string(tok.substr(0, eq)), tok.substr(eq + 1)).second)
      throw FormatError(line, "duplicate field '" + std::string(tok.substr(0, eq)) + "'");
  }
  return out;
}

std::string_view require_field(const std::map<std::string, std::string_view, std::less<>>& fields,
                               std::string_view key, std::size_t line) {
  auto it = fields.find(key);
  if (it == fields.end()) throw FormatError(line, "missing field '" + std::string(key) + "'");
  return it->second;
}

}  // namespace

void save(const PeriodicComplex& c, std::ostream& out) {
  out << "periodic-complex v1 rank=" << c.rank() << '\n';
  for (std::size_t i = 0; i < c.num_vertices(); ++i) out << "v " << i << " mu=" << format_double(c.mu()[i]) << '\n';
  for (const Edge& e : c.edges()) {
    out << "e " << e.tail << ' ' << e.head << " w=" << format_double(e.w) << " ell=" << format_double(e.ell) << " s=";
    for (Eigen::Index j = 0; j < e.shift.size(); ++j) out << (j ? "," : "") << e.shift[j];
    out << '\n';
  }
}

void save(const PeriodicComplex& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(0, "cannot open '" + path + "' for writing");
  save(c, out);
}

std::string to_string(const PeriodicComplex& c) {
  std::ostringstream out;
  save(c, out);
  return out.str();
}

PeriodicComplex load(std::istream& in) {
  std::string raw;
  std::size_t lineno = 0;
  int rank = 0;
  bool have_header = false;
  std::map<long long, double> mu_by_id;
  std::vector<std::pair<std::size_t, Edge>> edges;

  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;

    if (!have_header) {
      if (tok.size() != 3 || tok[0] != "periodic-complex" || tok[1] != "v1" || tok[2].substr(0, 5) != "rank=")
        throw FormatError(lineno, "expected header 'periodic-complex v1 rank=<k>'");
      rank = static_cast<int>(parse_int(tok[2].substr(5), lineno, "rank"));
      if (rank < 1) throw FormatError(lineno, "rank must be positive");
      have_header = true;
      continue;
    }

    if (tok[0] == "v") {
      if (tok.size() < 2) throw FormatError(lineno, "vertex line missing id");
      const long long id = parse_int(tok[1], lineno, "vertex id");
      if (id < 0) throw FormatError(lineno, "vertex id must be non-negative");
      const auto fields = parse_fields(std::span(tok).subspan(2), lineno);
      const double mu = parse_double(require_field(fields, "mu", lineno), lineno, "mu");
      if (!(mu > 0.0)) throw FormatError(lineno, "field 'mu' must be positive");
      if (!mu_by_id.emplace(id, mu).second) throw FormatError(lineno, "duplicate vertex id " + std::to_string(id));
    } else if (tok[0] == "e") {
      if (tok.size() < 3) throw FormatError(lineno, "edge line needs tail and head");
      Edge e;
      e.tail = static_cast<int>(parse_int(tok[1], lineno, "tail"));
      e.head = static_cast<int>(parse_int(tok[2], lineno, "head"));
      const auto fields = parse_fields(std::span(tok).subspan(3), lineno);
      e.w = parse_double(require_field(fields, "w", lineno), lineno, "w");
      e.ell = parse_double(require_field(fields, "ell", lineno), lineno, "ell");
      if (!(e.w > 0.0)) throw FormatError(lineno, "field 'w' must be positive");
      if (!(e.ell > 0.0)) throw FormatError(lineno, "field 'ell' must be positive");
      const std::string_view s = require_field(fields, "s", lineno);
      std::vector<int> comps;
      std::size_t start = 0;
      while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto part = s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        comps.push_back(static_cast<int>(parse_int(part, lineno, "shift component")));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (static_cast<int>(comps.size()) != rank)
        throw FormatError(lineno, "field 's' has " + std::to_string(comps.size()) + " components, expected " +
                                      std::to_string(rank));
      e.shift = Eigen::Map<const LatticeVector>(comps.data(), rank);
      edges.emplace_back(lineno, std::move(e));
    } else {
      throw FormatError(lineno, "unknown record type '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_header) throw FormatError(lineno, "missing header");
  if (mu_by_id.empty()) throw FormatError(lineno, "no vertices");

  std::vector<double> mu;
  long long expect = 0;
  for (auto [id, m] : mu_by_id) {
    if (id != expect) throw FormatError(0, "vertex ids must be 0..n-1; missing id " + std::to_string(expect));
    mu.push_back(m);
    ++expect;
  }
  std::vector<Edge> out_edges;
  for (auto& [ln, e] : edges) {
    if (e.tail < 0 || e.head < 0 || e.tail >= expect || e.head >= expect)
      throw FormatError(ln, "edge references a missing vertex");
    if (e.tail == e.head && e.shift.isZero()) throw FormatError(ln, "self-loop with zero shift");
    out_edges.push_back(std::move(e));
  }
  return PeriodicComplex(rank, std::move(mu), std::move(out_edges));
}

PeriodicComplex load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(0, "cannot open '" + path + "'");
  return load(in);
}

}  // namespace periodic_heat
